//! Regular lattices of sampled scalar values.

use crate::error::{Error, Result};

/// A scalar field sampled on a regular n-dimensional lattice, row-major with
/// the last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    origin: Vec<f64>,
    spacing: Vec<f64>,
    dims: Vec<usize>,
    values: Vec<f64>,
}

impl Lattice {
    pub fn new(origin: Vec<f64>, spacing: Vec<f64>, dims: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let n = origin.len();
        if spacing.len() != n || dims.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: spacing.len().min(dims.len()) });
        }
        if n == 0 {
            return Err(Error::InvalidParameter("lattice needs at least one axis".into()));
        }
        if spacing.iter().any(|h| !(*h > 0.0)) {
            return Err(Error::InvalidParameter("lattice spacing must be positive".into()));
        }
        let total: usize = dims.iter().product();
        if values.len() != total {
            return Err(Error::InvalidParameter(format!(
                "expected {total} values, got {}",
                values.len()
            )));
        }
        Ok(Self { origin, spacing, dims, values })
    }

    /// Samples the fallible `f` on the lattice spanned by `origin`, `spacing` and `dims`.
    pub fn sample<F>(origin: Vec<f64>, spacing: Vec<f64>, dims: Vec<usize>, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Result<f64>,
    {
        let total: usize = dims.iter().product();
        let mut values = Vec::with_capacity(total);
        let mut idx = vec![0usize; dims.len()];
        let mut x = vec![0.0; dims.len()];
        for flat in 0..total {
            unflatten(flat, &dims, &mut idx);
            for d in 0..dims.len() {
                x[d] = origin[d] + idx[d] as f64 * spacing[d];
            }
            values.push(f(&x)?);
        }
        Self::new(origin, spacing, dims, values)
    }

    /// Samples `f` on the box `[lo, hi]^n` with `points` nodes per axis.
    pub fn sample_box<F>(lo: &[f64], hi: &[f64], points: usize, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Result<f64>,
    {
        if points < 2 {
            return Err(Error::GridTooSmall);
        }
        let spacing = lo.iter().zip(hi).map(|(a, b)| (b - a) / (points - 1) as f64).collect();
        Self::sample(lo.to_vec(), spacing, vec![points; lo.len()], f)
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn strides(&self) -> Vec<usize> {
        let n = self.dims.len();
        let mut strides = vec![1usize; n];
        for d in (0..n.saturating_sub(1)).rev() {
            strides[d] = strides[d + 1] * self.dims[d + 1];
        }
        strides
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().zip(self.strides()).map(|(i, s)| i * s).sum()
    }

    pub fn at(&self, idx: &[usize]) -> f64 {
        self.values[self.flat(idx)]
    }

    pub fn coord(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .enumerate()
            .map(|(d, &i)| self.origin[d] + i as f64 * self.spacing[d])
            .collect()
    }

    pub fn is_interior(&self, idx: &[usize]) -> bool {
        idx.iter().zip(&self.dims).all(|(&i, &n)| i >= 1 && i + 1 < n)
    }

    /// Lattice index of `x`, which must coincide with a node.
    pub fn locate(&self, x: &[f64]) -> Result<Vec<usize>> {
        if x.len() != self.ndim() {
            return Err(Error::DimensionMismatch { expected: self.ndim(), got: x.len() });
        }
        let mut idx = Vec::with_capacity(x.len());
        for d in 0..x.len() {
            let t = (x[d] - self.origin[d]) / self.spacing[d];
            let i = t.round();
            if (t - i).abs() > 1e-6 || i < 0.0 || i as usize >= self.dims[d] {
                return Err(Error::OutsideDomain(format!("{x:?} is not a lattice node")));
            }
            idx.push(i as usize);
        }
        Ok(idx)
    }

    /// Second-order central-difference gradient at an interior node.
    pub fn gradient_at(&self, idx: &[usize]) -> Result<Vec<f64>> {
        if !self.is_interior(idx) {
            return Err(Error::BoundaryPoint);
        }
        let strides = self.strides();
        let c = self.flat(idx);
        Ok((0..self.ndim())
            .map(|d| (self.values[c + strides[d]] - self.values[c - strides[d]]) / (2.0 * self.spacing[d]))
            .collect())
    }

    /// Second-order central-difference Hessian at an interior node.
    pub fn hessian_at(&self, idx: &[usize]) -> Result<Vec<Vec<f64>>> {
        if !self.is_interior(idx) {
            return Err(Error::BoundaryPoint);
        }
        let n = self.ndim();
        let s = self.strides();
        let c = self.flat(idx);
        let v = &self.values;
        let mut h = vec![vec![0.0; n]; n];
        for a in 0..n {
            h[a][a] = (v[c + s[a]] - 2.0 * v[c] + v[c - s[a]]) / (self.spacing[a] * self.spacing[a]);
            for b in (a + 1)..n {
                let val = (v[c + s[a] + s[b]] - v[c + s[a] - s[b]] - v[c - s[a] + s[b]] + v[c - s[a] - s[b]])
                    / (4.0 * self.spacing[a] * self.spacing[b]);
                h[a][b] = val;
                h[b][a] = val;
            }
        }
        Ok(h)
    }

    /// Indices of every interior node, in flat order.
    pub fn interior_indices(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut idx = vec![0usize; self.ndim()];
        for flat in 0..self.len() {
            unflatten(flat, &self.dims, &mut idx);
            if self.is_interior(&idx) {
                out.push(idx.clone());
            }
        }
        out
    }
}

pub(crate) fn unflatten(mut flat: usize, dims: &[usize], idx: &mut [usize]) {
    for d in (0..dims.len()).rev() {
        idx[d] = flat % dims[d];
        flat /= dims[d];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_derivatives_are_exact() {
        let lat = Lattice::sample_box(&[0.0, 0.0], &[1.0, 1.0], 9, |x| Ok(x[0] * x[0] + 3.0 * x[0] * x[1])).unwrap();
        let idx = lat.locate(&[0.5, 0.25]).unwrap();
        let g = lat.gradient_at(&idx).unwrap();
        assert!((g[0] - (1.0 + 0.75)).abs() < 1e-12);
        assert!((g[1] - 1.5).abs() < 1e-12);
        let h = lat.hessian_at(&idx).unwrap();
        assert!((h[0][0] - 2.0).abs() < 1e-10);
        assert!((h[0][1] - 3.0).abs() < 1e-10);
        assert!(h[1][1].abs() < 1e-10);
    }

    #[test]
    fn boundary_nodes_are_rejected() {
        let lat = Lattice::sample_box(&[0.0], &[1.0], 5, |x| Ok(x[0])).unwrap();
        assert_eq!(lat.gradient_at(&[0]), Err(Error::BoundaryPoint));
        assert_eq!(lat.gradient_at(&[4]), Err(Error::BoundaryPoint));
        assert!(lat.gradient_at(&[2]).is_ok());
    }

    #[test]
    fn off_node_points_are_rejected() {
        let lat = Lattice::sample_box(&[0.0], &[1.0], 5, |x| Ok(x[0])).unwrap();
        assert!(lat.locate(&[0.3]).is_err());
        assert_eq!(lat.locate(&[0.75]).unwrap(), vec![3]);
    }
}

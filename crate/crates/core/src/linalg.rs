//! Least-squares expansion of matrices in a fixed linearly independent basis.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::jets::mat_distance;

/// Relative singular-value threshold below which a basis counts as dependent.
const RANK_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct BasisProjector {
    basis: Vec<DMatrix<f64>>,
    rows: usize,
    cols: usize,
    pinv: DMatrix<f64>,
    min_singular: f64,
}

impl BasisProjector {
    pub fn new(basis: Vec<DMatrix<f64>>) -> Result<Self> {
        let first = basis
            .first()
            .ok_or_else(|| Error::InvalidModel("empty basis".into()))?;
        let (rows, cols) = first.shape();
        if basis.iter().any(|b| b.shape() != (rows, cols)) {
            return Err(Error::InvalidModel("basis matrices differ in shape".into()));
        }
        let m = basis.len();
        if m > rows * cols {
            return Err(Error::InvalidModel("more basis elements than entries".into()));
        }
        // Column i is the row-major flattening of basis[i].
        let design = DMatrix::from_fn(rows * cols, m, |r, i| basis[i][(r / cols, r % cols)]);
        let svd = design.clone().svd(true, true);
        let sv = &svd.singular_values;
        let max = sv.max();
        let min = sv.min();
        if !(max > 0.0) || min <= RANK_TOL * max {
            return Err(Error::NotInjective(min));
        }
        let pinv = svd
            .pseudo_inverse(RANK_TOL * max)
            .map_err(|e| Error::InvalidModel(e.to_string()))?;
        Ok(BasisProjector {
            basis,
            rows,
            cols,
            pinv,
            min_singular: min,
        })
    }

    pub fn basis(&self) -> &[DMatrix<f64>] {
        &self.basis
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn min_singular_value(&self) -> f64 {
        self.min_singular
    }

    pub fn combine(&self, coeffs: &[f64]) -> DMatrix<f64> {
        let mut acc = DMatrix::zeros(self.rows, self.cols);
        for (c, b) in coeffs.iter().zip(&self.basis) {
            acc += b * *c;
        }
        acc
    }

    /// Least-squares coefficients of `m` and the max-abs reconstruction error.
    pub fn expand(&self, m: &DMatrix<f64>) -> (DVector<f64>, f64) {
        if m.shape() != (self.rows, self.cols) {
            return (DVector::zeros(self.len()), f64::INFINITY);
        }
        let flat = DVector::from_fn(self.rows * self.cols, |r, _| m[(r / self.cols, r % self.cols)]);
        let coeffs = &self.pinv * flat;
        let residual = mat_distance(&self.combine(coeffs.as_slice()), m);
        (coeffs, residual)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expands_exactly_in_span() {
        let basis = vec![
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]),
            DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]),
        ];
        let p = BasisProjector::new(basis).unwrap();
        let m = DMatrix::from_row_slice(2, 2, &[2.0, -3.0, 3.0, 2.0]);
        let (c, r) = p.expand(&m);
        assert!((c[0] - 2.0).abs() < 1e-14 && (c[1] - 3.0).abs() < 1e-14);
        assert!(r < 1e-14);

        let sym = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let (_, r) = p.expand(&sym);
        assert!((r - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_dependent_basis() {
        let e = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        assert!(matches!(
            BasisProjector::new(vec![e.clone(), e * 2.0]),
            Err(Error::NotInjective(_))
        ));
    }
}

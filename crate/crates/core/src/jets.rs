//! First-order jets over sample points.
//!
//! A [`Jet`] carries the value of a function at a sample point together with
//! its gradient in the chart coordinates of the region it lives on. Products
//! of jets obey the Leibniz rule by construction, so the derivation `d`
//! (read off the gradient) is exact and the only discrepancy left in any
//! identity is floating-point rounding.
//!
//! Matrix-valued quantities use [`MatJet`]: a value matrix plus one matrix of
//! partial derivatives per chart coordinate.

use std::collections::BTreeMap;
use std::ops::{Add, Div, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};

use crate::cover::{PointId, Region};
use crate::error::{Error, Result};

/// Smallest admissible `|det|` for a matrix to count as invertible.
pub const DEFAULT_DET_FLOOR: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: Vec<f64>,
}

impl Jet {
    pub fn new(value: f64, grad: Vec<f64>) -> Self {
        Jet { value, grad }
    }

    pub fn constant(value: f64, dim: usize) -> Self {
        Jet {
            value,
            grad: vec![0.0; dim],
        }
    }

    /// The coordinate function `x_axis` evaluated at `value`.
    pub fn variable(value: f64, dim: usize, axis: usize) -> Self {
        let mut grad = vec![0.0; dim];
        grad[axis] = 1.0;
        Jet { value, grad }
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.grad.iter().all(|g| g.is_finite())
    }

    pub fn scale(&self, k: f64) -> Jet {
        Jet {
            value: k * self.value,
            grad: self.grad.iter().map(|g| k * g).collect(),
        }
    }

    /// Applies a scalar function with known derivative (chain rule).
    fn compose(&self, value: f64, derivative: f64) -> Jet {
        Jet {
            value,
            grad: self.grad.iter().map(|g| derivative * g).collect(),
        }
    }

    pub fn sin(&self) -> Jet {
        self.compose(self.value.sin(), self.value.cos())
    }

    pub fn cos(&self) -> Jet {
        self.compose(self.value.cos(), -self.value.sin())
    }

    pub fn exp(&self) -> Jet {
        let e = self.value.exp();
        self.compose(e, e)
    }

    pub fn recip(&self) -> Jet {
        let inv = 1.0 / self.value;
        self.compose(inv, -inv * inv)
    }

    pub fn powi(&self, n: i32) -> Jet {
        if n == 0 {
            return Jet::constant(1.0, self.dim());
        }
        self.compose(self.value.powi(n), f64::from(n) * self.value.powi(n - 1))
    }

    /// Largest absolute difference over value and gradient components.
    pub fn distance(&self, other: &Jet) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        self.grad
            .iter()
            .zip(&other.grad)
            .map(|(a, b)| (a - b).abs())
            .fold((self.value - other.value).abs(), max_nan)
    }

    fn zip_grad(&self, other: &Jet, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        assert_eq!(self.dim(), other.dim(), "jet dimension mismatch");
        self.grad
            .iter()
            .zip(&other.grad)
            .map(|(a, b)| f(*a, *b))
            .collect()
    }
}

pub(crate) fn max_nan(acc: f64, x: f64) -> f64 {
    if acc.is_nan() || x.is_nan() {
        f64::NAN
    } else {
        acc.max(x)
    }
}

/// Leibniz product: `(ab)' = a b' + b a'`.
pub fn jet_mul(a: &Jet, b: &Jet) -> Result<Jet> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(a * b)
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        Jet {
            value: self.value + rhs.value,
            grad: self.zip_grad(rhs, |a, b| a + b),
        }
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        Jet {
            value: self.value - rhs.value,
            grad: self.zip_grad(rhs, |a, b| a - b),
        }
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        let (u, v) = (self.value, rhs.value);
        Jet {
            value: u * v,
            grad: self.zip_grad(rhs, |du, dv| u * dv + v * du),
        }
    }
}

impl Div for &Jet {
    type Output = Jet;
    fn div(self, rhs: &Jet) -> Jet {
        let (u, v) = (self.value, rhs.value);
        Jet {
            value: u / v,
            grad: self.zip_grad(rhs, |du, dv| (du * v - u * dv) / (v * v)),
        }
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                (&self).$m(&rhs)
            }
        }
    )*};
}
forward_owned!(Add add, Sub sub, Mul mul, Div div);

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        -&self
    }
}

/// A matrix of jets, stored as value matrix plus per-coordinate partials.
#[derive(Clone, Debug, PartialEq)]
pub struct MatJet {
    pub value: DMatrix<f64>,
    pub grad: Vec<DMatrix<f64>>,
}

impl MatJet {
    pub fn constant(value: DMatrix<f64>, dim: usize) -> Self {
        let zero = DMatrix::zeros(value.nrows(), value.ncols());
        MatJet {
            value,
            grad: vec![zero; dim],
        }
    }

    pub fn identity(n: usize, dim: usize) -> Self {
        MatJet::constant(DMatrix::identity(n, n), dim)
    }

    pub fn zeros(rows: usize, cols: usize, dim: usize) -> Self {
        MatJet::constant(DMatrix::zeros(rows, cols), dim)
    }

    /// Builds a matrix from row-major jet entries.
    pub fn from_jets(rows: usize, cols: usize, entries: &[Jet]) -> Result<Self> {
        if entries.len() != rows * cols || rows == 0 || cols == 0 {
            return Err(Error::ShapeMismatch {
                op: "from_jets",
                left_rows: rows,
                left_cols: cols,
                right_rows: entries.len(),
                right_cols: 1,
            });
        }
        let dim = entries[0].dim();
        if let Some(bad) = entries.iter().find(|e| e.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        let value = DMatrix::from_fn(rows, cols, |i, j| entries[i * cols + j].value);
        let grad = (0..dim)
            .map(|k| DMatrix::from_fn(rows, cols, |i, j| entries[i * cols + j].grad[k]))
            .collect();
        Ok(MatJet { value, grad })
    }

    /// An `n x 1` column of jets.
    pub fn column(entries: &[Jet]) -> Result<Self> {
        MatJet::from_jets(entries.len(), 1, entries)
    }

    pub fn rows(&self) -> usize {
        self.value.nrows()
    }

    pub fn cols(&self) -> usize {
        self.value.ncols()
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.value.shape()
    }

    pub fn entry(&self, i: usize, j: usize) -> Jet {
        Jet {
            value: self.value[(i, j)],
            grad: self.grad.iter().map(|g| g[(i, j)]).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.value.iter().all(|x| x.is_finite())
            && self.grad.iter().all(|g| g.iter().all(|x| x.is_finite()))
    }

    fn check_dims(&self, other: &MatJet) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    fn shape_error(&self, op: &'static str, other: &MatJet) -> Error {
        Error::ShapeMismatch {
            op,
            left_rows: self.rows(),
            left_cols: self.cols(),
            right_rows: other.rows(),
            right_cols: other.cols(),
        }
    }

    /// Jet-aware product: `(AB)' = A'B + AB'`.
    pub fn mul(&self, other: &MatJet) -> Result<MatJet> {
        if self.cols() != other.rows() {
            return Err(self.shape_error("mat_mul", other));
        }
        self.check_dims(other)?;
        let value = &self.value * &other.value;
        let grad = self
            .grad
            .iter()
            .zip(&other.grad)
            .map(|(da, db)| da * &other.value + &self.value * db)
            .collect();
        Ok(MatJet { value, grad })
    }

    pub fn add(&self, other: &MatJet) -> Result<MatJet> {
        self.zip_entrywise(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &MatJet) -> Result<MatJet> {
        self.zip_entrywise(other, "sub", |a, b| a - b)
    }

    fn zip_entrywise(
        &self,
        other: &MatJet,
        op: &'static str,
        f: impl Fn(&DMatrix<f64>, &DMatrix<f64>) -> DMatrix<f64>,
    ) -> Result<MatJet> {
        if self.shape() != other.shape() {
            return Err(self.shape_error(op, other));
        }
        self.check_dims(other)?;
        Ok(MatJet {
            value: f(&self.value, &other.value),
            grad: self
                .grad
                .iter()
                .zip(&other.grad)
                .map(|(a, b)| f(a, b))
                .collect(),
        })
    }

    /// Multiplication by a scalar jet: `(aM)' = a M' + a' M`.
    pub fn scale_jet(&self, a: &Jet) -> Result<MatJet> {
        if a.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: a.dim(),
            });
        }
        Ok(MatJet {
            value: &self.value * a.value,
            grad: self
                .grad
                .iter()
                .zip(&a.grad)
                .map(|(dm, da)| &self.value * *da + dm * a.value)
                .collect(),
        })
    }

    pub fn scale(&self, k: f64) -> MatJet {
        MatJet {
            value: &self.value * k,
            grad: self.grad.iter().map(|g| g * k).collect(),
        }
    }

    pub fn transpose(&self) -> MatJet {
        MatJet {
            value: self.value.transpose(),
            grad: self.grad.iter().map(|g| g.transpose()).collect(),
        }
    }

    /// Inverse with closed-form derivative `-A^{-1} (dA) A^{-1}`.
    ///
    /// Fails with the offending determinant when `|det| < det_floor`.
    pub fn inverse(&self, det_floor: f64) -> std::result::Result<MatJet, f64> {
        if self.rows() != self.cols() {
            return Err(f64::NAN);
        }
        let det = self.value.determinant();
        if !det.is_finite() || det.abs() < det_floor {
            return Err(det);
        }
        let inv = self.value.clone().try_inverse().ok_or(det)?;
        let grad = self.grad.iter().map(|da| -(&inv * da * &inv)).collect();
        Ok(MatJet { value: inv, grad })
    }

    pub fn distance(&self, other: &MatJet) -> f64 {
        if self.shape() != other.shape() || self.dim() != other.dim() {
            return f64::INFINITY;
        }
        let mut d = mat_distance(&self.value, &other.value);
        for (a, b) in self.grad.iter().zip(&other.grad) {
            d = max_nan(d, mat_distance(a, b));
        }
        d
    }
}

pub(crate) fn mat_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, max_nan)
}

/// Coefficients of a matrix-valued 1-form at one point: one matrix per chart
/// differential (`theta = sum_k M_k dx_k`).
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixCoeffs(pub Vec<DMatrix<f64>>);

impl MatrixCoeffs {
    pub fn zeros(rows: usize, cols: usize, dim: usize) -> Self {
        MatrixCoeffs(vec![DMatrix::zeros(rows, cols); dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Point data that can be compared and re-expressed in another chart.
pub trait PointValue: Clone {
    /// Largest absolute componentwise difference.
    fn distance(&self, other: &Self) -> f64;

    /// Re-expresses chart-covariant parts given `jac = d x_from / d x_to`.
    fn pull_back(&self, jac: &DMatrix<f64>) -> Self;
}

fn pull_components(comps: &[DMatrix<f64>], jac: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
    (0..jac.ncols())
        .map(|l| {
            let mut acc = DMatrix::zeros(comps[0].nrows(), comps[0].ncols());
            for (k, c) in comps.iter().enumerate() {
                acc += c * jac[(k, l)];
            }
            acc
        })
        .collect()
}

impl PointValue for Jet {
    fn distance(&self, other: &Self) -> f64 {
        Jet::distance(self, other)
    }

    fn pull_back(&self, jac: &DMatrix<f64>) -> Self {
        let g = DVector::from_column_slice(&self.grad);
        let pulled = jac.transpose() * g;
        Jet::new(self.value, pulled.iter().copied().collect())
    }
}

impl PointValue for MatJet {
    fn distance(&self, other: &Self) -> f64 {
        MatJet::distance(self, other)
    }

    fn pull_back(&self, jac: &DMatrix<f64>) -> Self {
        MatJet {
            value: self.value.clone(),
            grad: pull_components(&self.grad, jac),
        }
    }
}

impl PointValue for DVector<f64> {
    fn distance(&self, other: &Self) -> f64 {
        if self.len() != other.len() {
            return f64::INFINITY;
        }
        self.iter()
            .zip(other.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, max_nan)
    }

    fn pull_back(&self, jac: &DMatrix<f64>) -> Self {
        jac.transpose() * self
    }
}

impl PointValue for MatrixCoeffs {
    fn distance(&self, other: &Self) -> f64 {
        if self.0.len() != other.0.len() {
            return f64::INFINITY;
        }
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| mat_distance(a, b))
            .fold(0.0, max_nan)
    }

    fn pull_back(&self, jac: &DMatrix<f64>) -> Self {
        MatrixCoeffs(pull_components(&self.0, jac))
    }
}

/// Values attached to the sample points of a region.
#[derive(Clone, Debug, PartialEq)]
pub struct Field<T> {
    data: BTreeMap<PointId, T>,
}

pub type ScalarField = Field<Jet>;
pub type MatrixField = Field<MatJet>;
/// Scalar 1-form: coefficient vector in the chart differentials.
pub type OneForm = Field<DVector<f64>>;
pub type MatrixOneForm = Field<MatrixCoeffs>;

impl<T> Default for Field<T> {
    fn default() -> Self {
        Field {
            data: BTreeMap::new(),
        }
    }
}

impl<T> FromIterator<(PointId, T)> for Field<T> {
    fn from_iter<I: IntoIterator<Item = (PointId, T)>>(iter: I) -> Self {
        Field {
            data: iter.into_iter().collect(),
        }
    }
}

impl<T> Field<T> {
    pub fn new(data: BTreeMap<PointId, T>) -> Self {
        Field { data }
    }

    pub fn empty() -> Self {
        Field::default()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, point: PointId) -> Option<&T> {
        self.data.get(&point)
    }

    pub fn points(&self) -> impl Iterator<Item = PointId> + '_ {
        self.data.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (PointId, &T)> {
        self.data.iter().map(|(p, v)| (*p, v))
    }

    pub fn domain(&self) -> Region {
        Region::new(self.points())
    }

    pub fn into_inner(self) -> BTreeMap<PointId, T> {
        self.data
    }

    pub fn same_domain<U>(&self, other: &Field<U>) -> bool {
        self.data.len() == other.data.len() && self.data.keys().eq(other.data.keys())
    }

    pub fn map<U>(&self, mut f: impl FnMut(PointId, &T) -> U) -> Field<U> {
        self.iter().map(|(p, v)| (p, f(p, v))).collect()
    }

    pub fn try_map<U>(&self, mut f: impl FnMut(PointId, &T) -> Result<U>) -> Result<Field<U>> {
        self.iter().map(|(p, v)| Ok((p, f(p, v)?))).collect()
    }

    /// Pointwise combination of two fields with identical domains.
    pub fn zip_with<U, V>(
        &self,
        other: &Field<U>,
        op: &'static str,
        mut f: impl FnMut(PointId, &T, &U) -> Result<V>,
    ) -> Result<Field<V>> {
        if !self.same_domain(other) {
            return Err(Error::DomainMismatch { op });
        }
        self.data
            .iter()
            .zip(other.data.values())
            .map(|((p, a), b)| Ok((*p, f(*p, a, b)?)))
            .collect()
    }

    /// Sub-field on the points of `region`; every point must be present.
    pub fn restrict(&self, region: &Region) -> Result<Field<T>>
    where
        T: Clone,
    {
        region
            .iter()
            .map(|p| {
                self.data
                    .get(&p)
                    .map(|v| (p, v.clone()))
                    .ok_or(Error::NotContained { point: p })
            })
            .collect()
    }
}

impl<T: PointValue> Field<T> {
    /// Maximum pointwise distance; fields must share a domain.
    pub fn distance(&self, other: &Field<T>) -> Result<crate::Residual> {
        if !self.same_domain(other) {
            return Err(Error::DomainMismatch { op: "distance" });
        }
        Ok(self
            .iter()
            .zip(other.data.values())
            .map(|((p, a), b)| crate::Residual::at(p, a.distance(b)))
            .collect())
    }
}

impl ScalarField {
    pub fn dim(&self) -> Option<usize> {
        self.data.values().next().map(Jet::dim)
    }
}

impl MatrixField {
    /// Samples a matrix-valued function of the chart coordinates.
    ///
    /// `f` receives the coordinate jets `x_i` (value = coordinate, gradient =
    /// unit vector `e_i`) and returns row-major entries.
    pub fn from_fn<'a>(
        points: impl IntoIterator<Item = (PointId, &'a DVector<f64>)>,
        rows: usize,
        cols: usize,
        mut f: impl FnMut(&[Jet]) -> Vec<Jet>,
    ) -> Result<MatrixField> {
        points
            .into_iter()
            .map(|(p, x)| {
                let dim = x.len();
                let vars: Vec<Jet> = (0..dim).map(|i| Jet::variable(x[i], dim, i)).collect();
                let m = MatJet::from_jets(rows, cols, &f(&vars))?;
                if !m.is_finite() {
                    return Err(Error::NonFinite { point: p });
                }
                Ok((p, m))
            })
            .collect()
    }

    pub fn shape(&self) -> Option<(usize, usize)> {
        self.data.values().next().map(MatJet::shape)
    }

    pub fn identity_on(region: &Region, n: usize, dim: usize) -> MatrixField {
        region.iter().map(|p| (p, MatJet::identity(n, dim))).collect()
    }
}

/// `d` of a scalar field: the pointwise gradient as 1-form coefficients.
pub fn d_field(f: &ScalarField) -> OneForm {
    f.map(|_, j| DVector::from_column_slice(&j.grad))
}

pub fn scalar_mul(a: &ScalarField, b: &ScalarField) -> Result<ScalarField> {
    a.zip_with(b, "scalar_mul", |_, x, y| jet_mul(x, y))
}

pub fn mat_mul(a: &MatrixField, b: &MatrixField) -> Result<MatrixField> {
    a.zip_with(b, "mat_mul", |_, x, y| x.mul(y))
}

pub fn mat_inv(a: &MatrixField, det_floor: f64) -> Result<MatrixField> {
    a.try_map(|p, m| {
        m.inverse(det_floor)
            .map_err(|det| Error::Singular { point: p, det })
    })
}

/// Entrywise `d` of a matrix field.
pub fn mat_d(a: &MatrixField) -> MatrixOneForm {
    a.map(|_, m| MatrixCoeffs(m.grad.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn j(v: f64, g: f64) -> Jet {
        Jet::new(v, vec![g])
    }

    fn single(m: MatJet) -> MatrixField {
        [(PointId(0), m)].into_iter().collect()
    }

    #[test]
    fn jet_mul_examples() {
        assert_eq!(jet_mul(&j(1.0, 0.0), &j(5.0, 2.0)).unwrap(), j(5.0, 2.0));
        assert_eq!(jet_mul(&j(3.0, 1.0), &j(3.0, 1.0)).unwrap(), j(9.0, 6.0));
        // 2*(-1) + 4*0.5 = 0
        assert_eq!(jet_mul(&j(2.0, 0.5), &j(4.0, -1.0)).unwrap(), j(8.0, 0.0));
    }

    #[test]
    fn jet_mul_rejects_dimension_mismatch() {
        let a = Jet::new(1.0, vec![0.0, 1.0]);
        assert!(matches!(
            jet_mul(&a, &j(1.0, 1.0)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn d_field_examples() {
        let f: ScalarField = [(PointId(0), j(7.0, 0.0))].into_iter().collect();
        assert_eq!(d_field(&f).get(PointId(0)).unwrap()[0], 0.0);
        let t: ScalarField = [(PointId(0), j(2.0, 1.0))].into_iter().collect();
        assert_eq!(d_field(&t).get(PointId(0)).unwrap()[0], 1.0);
        let c = Jet::variable(0.0, 1, 0).cos();
        assert_eq!((c.value, c.grad[0].abs()), (1.0, 0.0));
    }

    #[test]
    fn mat_inv_examples() {
        let id = single(MatJet::identity(2, 1));
        assert_eq!(mat_inv(&id, DEFAULT_DET_FLOOR).unwrap(), id);

        let a = single(MatJet::from_jets(1, 1, &[j(2.0, 1.0)]).unwrap());
        let inv = mat_inv(&a, DEFAULT_DET_FLOOR).unwrap();
        assert_eq!(inv.get(PointId(0)).unwrap().entry(0, 0), j(0.5, -0.25));

        // diag(2 + sin t, 1) at t = 0: d/dt (2 + sin t)^-1 = -cos t / (2 + sin t)^2
        let t = Jet::variable(0.0, 1, 0);
        let a = MatJet::from_jets(
            2,
            2,
            &[
                &Jet::constant(2.0, 1) + &t.sin(),
                Jet::constant(0.0, 1),
                Jet::constant(0.0, 1),
                Jet::constant(1.0, 1),
            ],
        )
        .unwrap();
        let inv = a.inverse(DEFAULT_DET_FLOOR).unwrap();
        assert_eq!(inv.entry(0, 0), j(0.5, -0.25));
        assert_eq!(inv.entry(1, 1), j(1.0, 0.0));
    }

    #[test]
    fn mat_inv_reports_singular_point() {
        let a: MatrixField = [
            (PointId(0), MatJet::identity(2, 1)),
            (PointId(5), MatJet::zeros(2, 2, 1)),
        ]
        .into_iter()
        .collect();
        assert!(matches!(
            mat_inv(&a, DEFAULT_DET_FLOOR),
            Err(Error::Singular {
                point: PointId(5),
                ..
            })
        ));
    }

    #[test]
    fn mat_mul_matches_scalar_expansion() {
        // One sample point, entries hand-picked.
        let a = MatJet::from_jets(2, 2, &[j(1.0, 2.0), j(3.0, -1.0), j(0.5, 0.0), j(2.0, 4.0)])
            .unwrap();
        let b = MatJet::from_jets(2, 2, &[j(-1.0, 1.0), j(2.0, 0.5), j(1.5, 3.0), j(0.0, 1.0)])
            .unwrap();
        let c = a.mul(&b).unwrap();
        for i in 0..2 {
            for k in 0..2 {
                let expect = &(&a.entry(i, 0) * &b.entry(0, k)) + &(&a.entry(i, 1) * &b.entry(1, k));
                assert!(c.entry(i, k).distance(&expect) < 1e-15);
            }
        }
        // 1x1 reduces to jet_mul
        let x = MatJet::from_jets(1, 1, &[j(3.0, 1.0)]).unwrap();
        assert_eq!(x.mul(&x).unwrap().entry(0, 0), j(9.0, 6.0));
    }

    #[test]
    fn mat_mul_rejects_bad_shapes_and_domains() {
        let a = single(MatJet::identity(2, 1));
        let b = single(MatJet::identity(3, 1));
        assert!(matches!(mat_mul(&a, &b), Err(Error::ShapeMismatch { .. })));
        let c: MatrixField = [(PointId(1), MatJet::identity(2, 1))].into_iter().collect();
        assert!(matches!(mat_mul(&a, &c), Err(Error::DomainMismatch { .. })));
    }

    #[test]
    fn mat_d_examples() {
        let t = Jet::variable(0.0, 1, 0);
        let rot = MatJet::from_jets(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()]).unwrap();
        let d = mat_d(&single(rot));
        let m = &d.get(PointId(0)).unwrap().0[0];
        assert_eq!(m, &DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]));

        let t = Jet::variable(1.7, 1, 0);
        let diag = MatJet::from_jets(
            2,
            2,
            &[t.clone(), Jet::constant(0.0, 1), Jet::constant(0.0, 1), Jet::constant(1.0, 1)],
        )
        .unwrap();
        let d = mat_d(&single(diag));
        assert_eq!(
            d.get(PointId(0)).unwrap().0[0],
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0])
        );
    }

    #[test]
    fn pull_back_scales_one_dimensional_coefficients() {
        let jac = DMatrix::from_element(1, 1, 2.0);
        let c = DVector::from_element(1, 3.0);
        assert_eq!(c.pull_back(&jac)[0], 6.0);
        assert_eq!(j(1.0, 0.25).pull_back(&jac), j(1.0, 0.5));
    }
}

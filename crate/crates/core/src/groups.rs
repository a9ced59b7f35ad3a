//! Matrix group models of Lie type.
//!
//! A [`GroupModel`] fixes an ambient matrix size, a basis of its Lie algebra
//! and the pair (representation, logarithmic differential) as
//! (`Ad`, `g^{-1} dg`). Both are computed pointwise on jet-valued element
//! fields and expanded back into the basis by least squares, with the
//! expansion residual checked on every call.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::cover::{PointId, Region};
use crate::error::{Error, Result};
use crate::jets::{mat_distance, mat_inv, mat_mul, Field, MatJet, MatrixField, PointValue, DEFAULT_DET_FLOOR};
use crate::linalg::BasisProjector;
use crate::residual::Residual;

/// Maximum admissible residual when expanding a matrix in the Lie basis.
pub const EXPANSION_TOL: f64 = 1e-10;
const STRUCTURE_TOL: f64 = 1e-12;
const ORTHOGONALITY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GroupKind {
    GL(usize),
    SO2,
    GL1Positive,
    DiagonalTorus(usize),
}

impl fmt::Display for GroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupKind::GL(n) => write!(f, "gl({n})"),
            GroupKind::SO2 => write!(f, "so(2)"),
            GroupKind::GL1Positive => write!(f, "gl1+"),
            GroupKind::DiagonalTorus(n) => write!(f, "torus({n})"),
        }
    }
}

impl FromStr for GroupKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let sized = |prefix: &str| -> Option<std::result::Result<usize, String>> {
            let inner = s.strip_prefix(prefix)?.strip_suffix(')')?;
            Some(match inner.parse::<usize>() {
                Ok(n) if n > 0 => Ok(n),
                _ => Err(format!("invalid size in `{s}`")),
            })
        };
        match s.as_str() {
            "so(2)" => Ok(GroupKind::SO2),
            "gl1+" => Ok(GroupKind::GL1Positive),
            _ => {
                if let Some(n) = sized("gl(") {
                    n.map(GroupKind::GL)
                } else if let Some(n) = sized("torus(") {
                    n.map(GroupKind::DiagonalTorus)
                } else {
                    Err(format!("unknown group `{s}` (expected gl(n), so(2), gl1+, torus(n))"))
                }
            }
        }
    }
}

/// Coefficients of an `L`-valued 1-form at a point: `dim x m`, row `k`
/// holding the Lie-basis coefficients of the `dx_k` component.
#[derive(Clone, Debug, PartialEq)]
pub struct LieCoeffs(pub DMatrix<f64>);

impl LieCoeffs {
    pub fn zeros(dim: usize, m: usize) -> Self {
        LieCoeffs(DMatrix::zeros(dim, m))
    }
}

impl PointValue for LieCoeffs {
    fn distance(&self, other: &Self) -> f64 {
        mat_distance(&self.0, &other.0)
    }

    fn pull_back(&self, jac: &DMatrix<f64>) -> Self {
        LieCoeffs(jac.transpose() * &self.0)
    }
}

pub type LieValuedOneForm = Field<LieCoeffs>;

pub fn add_forms(a: &LieValuedOneForm, b: &LieValuedOneForm) -> Result<LieValuedOneForm> {
    a.zip_with(b, "add_forms", |_, x, y| {
        if x.0.shape() != y.0.shape() {
            return Err(shape_error("add_forms", &x.0, &y.0));
        }
        Ok(LieCoeffs(&x.0 + &y.0))
    })
}

fn shape_error(op: &'static str, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Error {
    Error::ShapeMismatch {
        op,
        left_rows: a.nrows(),
        left_cols: a.ncols(),
        right_rows: b.nrows(),
        right_cols: b.ncols(),
    }
}

#[derive(Clone, Debug)]
pub struct GroupModel {
    kind: GroupKind,
    ambient: usize,
    projector: BasisProjector,
    structure_constants: Vec<f64>,
    det_floor: f64,
}

impl PartialEq for GroupModel {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

fn unit_matrix(n: usize, i: usize, j: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    m[(i, j)] = 1.0;
    m
}

impl GroupModel {
    pub fn new(kind: GroupKind) -> Result<Self> {
        let (ambient, basis) = match kind {
            GroupKind::GL(n) if n > 0 => (
                n,
                (0..n * n).map(|r| unit_matrix(n, r / n, r % n)).collect::<Vec<_>>(),
            ),
            GroupKind::SO2 => (2, vec![DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])]),
            GroupKind::GL1Positive => (1, vec![DMatrix::from_element(1, 1, 1.0)]),
            GroupKind::DiagonalTorus(n) if n > 0 => {
                (n, (0..n).map(|i| unit_matrix(n, i, i)).collect())
            }
            _ => return Err(Error::InvalidModel(format!("{kind} has size zero"))),
        };
        let projector = BasisProjector::new(basis)?;
        let m = projector.len();
        let mut structure_constants = vec![0.0; m * m * m];
        for i in 0..m {
            for j in 0..m {
                let (ei, ej) = (&projector.basis()[i], &projector.basis()[j]);
                let bracket = ei * ej - ej * ei;
                let (c, residual) = projector.expand(&bracket);
                if !(residual <= STRUCTURE_TOL) {
                    return Err(Error::InvalidModel(format!(
                        "basis of {kind} is not closed under the bracket (residual {residual:e})"
                    )));
                }
                for k in 0..m {
                    structure_constants[(i * m + j) * m + k] = c[k];
                }
            }
        }
        Ok(GroupModel {
            kind,
            ambient,
            projector,
            structure_constants,
            det_floor: DEFAULT_DET_FLOOR,
        })
    }

    pub fn gl(n: usize) -> Result<Self> {
        GroupModel::new(GroupKind::GL(n))
    }

    pub fn so2() -> Self {
        GroupModel::new(GroupKind::SO2).expect("so(2) model")
    }

    pub fn gl1_positive() -> Self {
        GroupModel::new(GroupKind::GL1Positive).expect("gl1+ model")
    }

    pub fn torus(n: usize) -> Result<Self> {
        GroupModel::new(GroupKind::DiagonalTorus(n))
    }

    pub fn with_det_floor(mut self, floor: f64) -> Self {
        self.det_floor = floor;
        self
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    /// Dimension `m` of the Lie algebra.
    pub fn lie_dim(&self) -> usize {
        self.projector.len()
    }

    pub fn basis(&self) -> &[DMatrix<f64>] {
        self.projector.basis()
    }

    pub fn det_floor(&self) -> f64 {
        self.det_floor
    }

    /// Coefficient of `E_k` in `[E_i, E_j]`.
    pub fn structure_constant(&self, i: usize, j: usize, k: usize) -> f64 {
        let m = self.lie_dim();
        self.structure_constants[(i * m + j) * m + k]
    }

    pub fn lie_element(&self, coeffs: &[f64]) -> DMatrix<f64> {
        self.projector.combine(coeffs)
    }

    /// Basis coefficients of `a` together with the expansion residual.
    pub fn expand(&self, a: &DMatrix<f64>) -> (Vec<f64>, f64) {
        let (c, r) = self.projector.expand(a);
        (c.iter().copied().collect(), r)
    }

    fn expand_checked(&self, point: PointId, a: &DMatrix<f64>) -> Result<Vec<f64>> {
        let (c, residual) = self.expand(a);
        if !(residual <= EXPANSION_TOL) {
            return Err(Error::ExpansionResidual { point, residual });
        }
        Ok(c)
    }

    pub fn unit(&self, region: &Region, dim: usize) -> MatrixField {
        MatrixField::identity_on(region, self.ambient, dim)
    }

    pub fn zero_form(&self, region: &Region, dim: usize) -> LieValuedOneForm {
        region
            .iter()
            .map(|p| (p, LieCoeffs::zeros(dim, self.lie_dim())))
            .collect()
    }

    /// Checks that every value of `g` lies in the group.
    pub fn validate_element(&self, g: &MatrixField) -> Result<()> {
        let k = self.ambient;
        for (p, m) in g.iter() {
            let invalid = |reason: String| Error::InvalidElement { point: p, reason };
            if m.shape() != (k, k) {
                return Err(invalid(format!("expected {k}x{k}, found {}x{}", m.rows(), m.cols())));
            }
            if !m.is_finite() {
                return Err(Error::NonFinite { point: p });
            }
            let det = m.value.determinant();
            if !(det.abs() >= self.det_floor) {
                return Err(Error::Singular { point: p, det });
            }
            match self.kind {
                GroupKind::GL(_) => {}
                GroupKind::GL1Positive => {
                    if m.value[(0, 0)] <= 0.0 {
                        return Err(invalid("gl1+ element must be positive".into()));
                    }
                }
                GroupKind::SO2 => {
                    let gram = m.value.transpose() * &m.value;
                    let dev = mat_distance(&gram, &DMatrix::identity(2, 2));
                    if !(dev <= ORTHOGONALITY_TOL) || det < 0.0 {
                        return Err(invalid(format!("not a rotation (orthogonality defect {dev:e})")));
                    }
                }
                GroupKind::DiagonalTorus(_) => {
                    let off = (0..k)
                        .flat_map(|i| (0..k).map(move |j| (i, j)))
                        .filter(|(i, j)| i != j)
                        .map(|(i, j)| m.value[(i, j)].abs())
                        .fold(0.0, f64::max);
                    if off > STRUCTURE_TOL {
                        return Err(invalid("torus element must be diagonal".into()));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn inverse(&self, g: &MatrixField) -> Result<MatrixField> {
        mat_inv(g, self.det_floor)
    }

    /// Pointwise group law.
    pub fn group_mul(&self, g: &MatrixField, h: &MatrixField) -> Result<MatrixField> {
        self.validate_element(g)?;
        self.validate_element(h)?;
        mat_mul(g, h)
    }

    /// `g a g^{-1}`, with both `a` and the result checked to lie in the
    /// Lie algebra.
    pub fn ad_action(&self, g: &MatrixField, a: &MatrixField) -> Result<MatrixField> {
        self.validate_element(g)?;
        let span_check = |f: &MatrixField| -> Result<()> {
            for (p, m) in f.iter() {
                for comp in std::iter::once(&m.value).chain(&m.grad) {
                    let (_, residual) = self.expand(comp);
                    if !(residual <= EXPANSION_TOL) {
                        return Err(Error::LeavesSpan { point: p, residual });
                    }
                }
            }
            Ok(())
        };
        span_check(a)?;
        let ginv = self.inverse(g)?;
        let out = mat_mul(&mat_mul(g, a)?, &ginv)?;
        span_check(&out)?;
        Ok(out)
    }

    /// Matrix of `Ad(g)` in the Lie basis at every point (`m x m`, column
    /// `i` = coefficients of `g E_i g^{-1}`).
    pub fn rho_matrix(&self, g: &MatrixField) -> Result<Field<DMatrix<f64>>> {
        self.validate_element(g)?;
        let m = self.lie_dim();
        g.try_map(|p, gm| {
            let ginv = gm
                .value
                .clone()
                .try_inverse()
                .ok_or(Error::Singular { point: p, det: 0.0 })?;
            let mut rho = DMatrix::zeros(m, m);
            for (i, e) in self.basis().iter().enumerate() {
                let c = self.expand_checked(p, &(&gm.value * e * &ginv))?;
                for (k, ck) in c.into_iter().enumerate() {
                    rho[(k, i)] = ck;
                }
            }
            Ok(rho)
        })
    }

    /// Logarithmic differential `g^{-1} dg`, expanded in the Lie basis.
    pub fn mc(&self, g: &MatrixField) -> Result<LieValuedOneForm> {
        self.validate_element(g)?;
        let ginv = self.inverse(g)?;
        g.zip_with(&ginv, "mc", |p, gm, inv| mc_point(self, p, gm, inv))
    }

    /// `rho(g).omega`: transforms the Lie coefficients, leaving the
    /// differential part untouched.
    pub fn rho_dot_form(&self, g: &MatrixField, omega: &LieValuedOneForm) -> Result<LieValuedOneForm> {
        let rho = self.rho_matrix(g)?;
        rho.zip_with(omega, "rho_dot_form", |_, r, w| {
            if w.0.ncols() != r.nrows() {
                return Err(shape_error("rho_dot_form", &w.0, r));
            }
            Ok(LieCoeffs(&w.0 * r.transpose()))
        })
    }

    /// Max deviation of `mc(st) = rho(t^{-1}).mc(s) + mc(t)`.
    pub fn check_logarithmic_rule(&self, s: &MatrixField, t: &MatrixField) -> Result<Residual> {
        let lhs = self.mc(&self.group_mul(s, t)?)?;
        let tinv = self.inverse(t)?;
        let rhs = add_forms(&self.rho_dot_form(&tinv, &self.mc(s)?)?, &self.mc(t)?)?;
        lhs.distance(&rhs)
    }
}

fn mc_point(model: &GroupModel, p: PointId, g: &MatJet, ginv: &MatJet) -> Result<LieCoeffs> {
    let dim = g.dim();
    let mut out = DMatrix::zeros(dim, model.lie_dim());
    for (k, dg) in g.grad.iter().enumerate() {
        let c = model.expand_checked(p, &(&ginv.value * dg))?;
        for (i, ci) in c.into_iter().enumerate() {
            out[(k, i)] = ci;
        }
    }
    Ok(LieCoeffs(out))
}

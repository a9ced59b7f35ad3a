//! Representations into `GL(n)`, the associated vector sheaf and its
//! sections, and tensorial morphisms.
//!
//! A section of the associated sheaf is stored as compatible components
//! `a_a` (column jets, `n x 1`) with `a_a = G_ab a_b` on overlaps. A
//! tensorial morphism is stored by its values `f_a = f(s_a)` on the natural
//! sections.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::cover::{glue, transport_form, Region, RegionId, SampledCover};
use crate::error::{Error, Result};
use crate::groups::{GroupKind, GroupModel, LieValuedOneForm};
use crate::jets::{mat_mul, MatJet, MatrixCoeffs, MatrixField, MatrixOneForm, PointValue, ScalarField};
use crate::principal::{complete_cocycle, cocycle_report, Cocycle, CocycleReport, PrincipalSectionLocal, PrincipalSheafData};
use crate::residual::Residual;

/// Tolerance for the homomorphism and unit laws of a representation.
pub const REPRESENTATION_TOL: f64 = 1e-10;
/// Tolerance for the two Lie-type conditions.
pub const LIE_TYPE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RepresentationKind {
    /// The defining inclusion of a matrix group into `GL(n)`.
    Trivial(usize),
    So2InGl2,
    /// `a -> diag(a^p_1, .., a^p_n)` on a one-dimensional group.
    Gl1DiagPowers(Vec<i32>),
}

impl RepresentationKind {
    pub fn rank(&self) -> usize {
        match self {
            RepresentationKind::Trivial(n) => *n,
            RepresentationKind::So2InGl2 => 2,
            RepresentationKind::Gl1DiagPowers(p) => p.len(),
        }
    }
}

impl fmt::Display for RepresentationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RepresentationKind::Trivial(n) => write!(f, "trivial({n})"),
            RepresentationKind::So2InGl2 => write!(f, "so2_in_gl2"),
            RepresentationKind::Gl1DiagPowers(p) => {
                let parts: Vec<String> = p.iter().map(|x| x.to_string()).collect();
                write!(f, "gl1_diag_powers({})", parts.join(","))
            }
        }
    }
}

impl FromStr for RepresentationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || Error::InvalidRepresentation(format!("unknown representation `{s}`"));
        if compact == "so2_in_gl2" {
            return Ok(RepresentationKind::So2InGl2);
        }
        let (head, rest) = compact.split_once('(').ok_or_else(bad)?;
        let args = rest.strip_suffix(')').ok_or_else(bad)?;
        match head {
            "trivial" => {
                let n: usize = args.parse().map_err(|_| bad())?;
                if n == 0 {
                    return Err(bad());
                }
                Ok(RepresentationKind::Trivial(n))
            }
            "gl1_diag_powers" => {
                let powers = args
                    .split(',')
                    .map(|p| p.parse::<i32>().map_err(|_| bad()))
                    .collect::<Result<Vec<_>>>()?;
                Ok(RepresentationKind::Gl1DiagPowers(powers))
            }
            _ => Err(bad()),
        }
    }
}

/// A representation `phi: G -> GL(n)` together with the linear map
/// `phibar: L -> M_n` stored as an `m x n^2` matrix (row `i` is `phibar(E_i)`
/// flattened row-major).
#[derive(Clone, Debug)]
pub struct RepresentationModel {
    source: GroupModel,
    kind: RepresentationKind,
    phibar: DMatrix<f64>,
    lie_type: bool,
}

fn flatten(m: &DMatrix<f64>) -> impl Iterator<Item = f64> + '_ {
    (0..m.nrows()).flat_map(move |i| (0..m.ncols()).map(move |j| m[(i, j)]))
}

impl RepresentationModel {
    pub fn new(source: GroupModel, kind: RepresentationKind) -> Result<Self> {
        let n = kind.rank();
        let phibar = match &kind {
            RepresentationKind::Trivial(_) => {
                if source.ambient() != n {
                    return Err(Error::InvalidRepresentation(format!(
                        "trivial({n}) needs a group of {n}x{n} matrices, got {}",
                        source.kind()
                    )));
                }
                let rows: Vec<f64> = source.basis().iter().flat_map(|e| flatten(e).collect::<Vec<_>>()).collect();
                DMatrix::from_row_slice(source.lie_dim(), n * n, &rows)
            }
            RepresentationKind::So2InGl2 => {
                if source.kind() != GroupKind::SO2 {
                    return Err(Error::InvalidRepresentation("so2_in_gl2 needs source so(2)".into()));
                }
                DMatrix::from_row_slice(1, 4, &[0.0, -1.0, 1.0, 0.0])
            }
            RepresentationKind::Gl1DiagPowers(p) => {
                if p.is_empty() {
                    return Err(Error::InvalidRepresentation("gl1_diag_powers needs at least one power".into()));
                }
                if source.ambient() != 1 {
                    return Err(Error::InvalidRepresentation(format!(
                        "gl1_diag_powers needs a one-dimensional group, got {}",
                        source.kind()
                    )));
                }
                let mut row = DMatrix::zeros(1, n * n);
                for (i, &pi) in p.iter().enumerate() {
                    row[(0, i * n + i)] = pi as f64;
                }
                row
            }
        };
        Ok(RepresentationModel {
            source,
            kind,
            phibar,
            lie_type: true,
        })
    }

    /// Replaces the linear part; the Lie-type flag is kept and left for
    /// [`check_lie_type`] to confirm.
    pub fn with_phibar(mut self, phibar: DMatrix<f64>) -> Result<Self> {
        let n = self.rank();
        if phibar.shape() != (self.source.lie_dim(), n * n) {
            return Err(Error::InvalidRepresentation(format!(
                "phibar must be {}x{}, got {}x{}",
                self.source.lie_dim(),
                n * n,
                phibar.nrows(),
                phibar.ncols()
            )));
        }
        self.phibar = phibar;
        Ok(self)
    }

    pub fn with_lie_type(mut self, flag: bool) -> Self {
        self.lie_type = flag;
        self
    }

    pub fn source(&self) -> &GroupModel {
        &self.source
    }

    pub fn kind(&self) -> &RepresentationKind {
        &self.kind
    }

    pub fn name(&self) -> String {
        self.kind.to_string()
    }

    pub fn rank(&self) -> usize {
        self.kind.rank()
    }

    pub fn phibar(&self) -> &DMatrix<f64> {
        &self.phibar
    }

    pub fn lie_type(&self) -> bool {
        self.lie_type
    }

    /// `phibar(E_i)` as `n x n` matrices.
    pub fn phibar_basis(&self) -> Vec<DMatrix<f64>> {
        let n = self.rank();
        (0..self.phibar.nrows())
            .map(|i| DMatrix::from_fn(n, n, |r, c| self.phibar[(i, r * n + c)]))
            .collect()
    }

    pub fn phibar_apply(&self, coeffs: &[f64]) -> DMatrix<f64> {
        let n = self.rank();
        let mut acc = DMatrix::zeros(n, n);
        for (c, b) in coeffs.iter().zip(self.phibar_basis()) {
            acc += b * *c;
        }
        acc
    }

    /// Applies `phibar` to the Lie coefficients of every differential.
    pub fn phibar_form(&self, omega: &LieValuedOneForm) -> Result<MatrixOneForm> {
        let m = self.source.lie_dim();
        let basis = self.phibar_basis();
        let n = self.rank();
        omega.try_map(|_, w| {
            if w.0.ncols() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    found: w.0.ncols(),
                });
            }
            Ok(MatrixCoeffs(
                (0..w.0.nrows())
                    .map(|k| {
                        let mut acc = DMatrix::zeros(n, n);
                        for (i, b) in basis.iter().enumerate() {
                            acc += b * w.0[(k, i)];
                        }
                        acc
                    })
                    .collect(),
            ))
        })
    }

    /// `phi(g)` pointwise, with exact derivatives.
    pub fn phi(&self, g: &MatrixField) -> Result<MatrixField> {
        self.source.validate_element(g)?;
        match &self.kind {
            RepresentationKind::Trivial(_) | RepresentationKind::So2InGl2 => Ok(g.clone()),
            RepresentationKind::Gl1DiagPowers(p) => {
                let n = p.len();
                g.try_map(|_, m| {
                    let a = m.entry(0, 0);
                    let mut out = MatJet::zeros(n, n, m.dim());
                    for (i, &pi) in p.iter().enumerate() {
                        let e = a.powi(pi);
                        out.value[(i, i)] = e.value;
                        for (k, gk) in out.grad.iter_mut().enumerate() {
                            gk[(i, i)] = e.grad[k];
                        }
                    }
                    Ok(out)
                })
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RepresentationReport {
    pub homomorphism: Residual,
    pub unit: Residual,
}

impl RepresentationReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.homomorphism.passes(tol) && self.unit.passes(tol)
    }
}

/// `phi(gh) = phi(g) phi(h)` and `phi(1) = 1` on the given pairs.
pub fn check_representation(
    r: &RepresentationModel,
    pairs: &[(MatrixField, MatrixField)],
) -> Result<RepresentationReport> {
    let mut report = RepresentationReport::default();
    let n = r.rank();
    for (g, h) in pairs {
        let lhs = r.phi(&r.source.group_mul(g, h)?)?;
        let rhs = mat_mul(&r.phi(g)?, &r.phi(h)?)?;
        report.homomorphism = report.homomorphism.merge(lhs.distance(&rhs)?);
        let dim = g.iter().next().map_or(1, |(_, m)| m.dim());
        let unit = r.source.unit(&g.domain(), dim);
        let id = MatrixField::identity_on(&g.domain(), n, dim);
        report.unit = report.unit.merge(r.phi(&unit)?.distance(&id)?);
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LieTypeReport {
    /// `mc(phi(g)) = phibar(mc(g))`.
    pub mc: Residual,
    /// `phibar(rho(g) E_i) = phi(g) phibar(E_i) phi(g)^{-1}`.
    pub rho: Residual,
}

impl LieTypeReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.mc.passes(tol) && self.rho.passes(tol)
    }
}

/// Reads `GL(n)` Lie coefficients (basis `E_ij`, row-major) as matrices.
pub fn gl_form_to_matrix(omega: &LieValuedOneForm, n: usize) -> Result<MatrixOneForm> {
    omega.try_map(|_, w| {
        if w.0.ncols() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: w.0.ncols(),
            });
        }
        Ok(MatrixCoeffs(
            (0..w.0.nrows())
                .map(|k| DMatrix::from_fn(n, n, |i, j| w.0[(k, i * n + j)]))
                .collect(),
        ))
    })
}

/// Inverse of [`gl_form_to_matrix`].
pub fn matrix_form_to_gl(theta: &MatrixOneForm) -> Result<LieValuedOneForm> {
    theta.try_map(|_, c| {
        let dim = c.dim();
        let (rows, cols) = c.0.first().map_or((0, 0), |m| m.shape());
        if rows != cols {
            return Err(Error::ShapeMismatch {
                op: "matrix_form_to_gl",
                left_rows: rows,
                left_cols: cols,
                right_rows: cols,
                right_cols: cols,
            });
        }
        let n = rows;
        Ok(crate::groups::LieCoeffs(DMatrix::from_fn(dim, n * n, |k, r| c.0[k][(r / n, r % n)])))
    })
}

pub fn check_lie_type(r: &RepresentationModel, elements: &[MatrixField]) -> Result<LieTypeReport> {
    let n = r.rank();
    let gl = GroupModel::gl(n)?;
    let basis = r.phibar_basis();
    let mut report = LieTypeReport::default();
    for g in elements {
        let pg = r.phi(g)?;
        let lhs = gl_form_to_matrix(&gl.mc(&pg)?, n)?;
        let rhs = r.phibar_form(&r.source.mc(g)?)?;
        report.mc = report.mc.merge(lhs.distance(&rhs)?);

        let rho = r.source.rho_matrix(g)?;
        for (p, rm) in rho.iter() {
            let pm = &pg.get(p).expect("same domain").value;
            let pinv = pm.clone().try_inverse().ok_or(Error::Singular {
                point: p,
                det: pm.determinant(),
            })?;
            for (i, b) in basis.iter().enumerate() {
                let col: Vec<f64> = rm.column(i).iter().copied().collect();
                let lhs = r.phibar_apply(&col);
                let rhs = pm * b * &pinv;
                report.rho.observe(p, crate::jets::mat_distance(&lhs, &rhs));
            }
        }
    }
    Ok(report)
}

/// A vector sheaf given by its `GL(n)`-valued cocycle.
#[derive(Clone, Debug)]
pub struct VectorSheafData {
    cover: SampledCover,
    rank: usize,
    cocycle: Cocycle,
}

impl VectorSheafData {
    /// Completes missing unit/inverse entries and checks invertibility.
    pub fn new(cover: SampledCover, rank: usize, cocycle: Cocycle) -> Result<Self> {
        let gl = GroupModel::gl(rank)?;
        let cocycle = complete_cocycle(&cover, cocycle, rank, gl.det_floor())?;
        for g in cocycle.values() {
            gl.validate_element(g)?;
        }
        Ok(VectorSheafData { cover, rank, cocycle })
    }

    pub fn with_entry(mut self, a: RegionId, b: RegionId, g: MatrixField) -> Self {
        self.cocycle.insert((a, b), g);
        self
    }

    pub fn cover(&self) -> &SampledCover {
        &self.cover
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn cocycle(&self) -> &Cocycle {
        &self.cocycle
    }

    pub fn transition(&self, a: RegionId, b: RegionId) -> Result<&MatrixField> {
        self.cocycle.get(&(a, b)).ok_or(Error::MissingCocycle(a, b))
    }

    pub fn check_cocycle(&self) -> Result<CocycleReport> {
        cocycle_report(&self.cover, &self.cocycle, self.rank)
    }
}

/// The cocycle `phi(g_ab)` of the associated sheaf.
pub fn push_cocycle(p: &PrincipalSheafData, r: &RepresentationModel) -> Result<VectorSheafData> {
    if r.source().kind() != p.group().kind() {
        return Err(Error::InvalidRepresentation(format!(
            "representation of {} applied to a {} sheaf",
            r.source().kind(),
            p.group().kind()
        )));
    }
    let cocycle = p
        .cocycle()
        .iter()
        .map(|(&k, g)| Ok((k, r.phi(g)?)))
        .collect::<Result<Cocycle>>()?;
    VectorSheafData::new(p.cover().clone(), r.rank(), cocycle)
}

/// Scalar function given by its expression in every chart.
pub type ChartScalar = BTreeMap<RegionId, ScalarField>;

/// Evaluates `f` on the coordinates of every chart.
pub fn chart_scalar(cover: &SampledCover, f: impl Fn(&[crate::jets::Jet]) -> crate::jets::Jet) -> Result<ChartScalar> {
    cover
        .region_ids()
        .map(|a| {
            let field = cover
                .chart_points(a)?
                .into_iter()
                .map(|(p, x)| {
                    let seeds: Vec<_> = (0..x.len()).map(|k| crate::jets::Jet::variable(x[k], x.len(), k)).collect();
                    (p, f(&seeds))
                })
                .collect();
            Ok((a, field))
        })
        .collect()
}

/// Disagreement of chartwise data `f_a = M_ab f_b` over all overlaps where
/// both are defined; `M` is the identity when `cocycle` is `None`.
fn chart_compatibility<T: PointValue>(
    cover: &SampledCover,
    parts: &BTreeMap<RegionId, crate::jets::Field<T>>,
    apply: impl Fn(RegionId, RegionId, &crate::jets::Field<T>) -> Result<crate::jets::Field<T>>,
) -> Result<Residual> {
    let mut r = Residual::ZERO;
    for (&a, fa) in parts {
        for (&b, fb) in parts {
            if a == b {
                continue;
            }
            let v = fa.domain().intersect(&fb.domain());
            if v.is_empty() {
                continue;
            }
            let moved = apply(a, b, &transport_form(cover, &fb.restrict(&v)?, b, a)?)?;
            r = r.merge(fa.restrict(&v)?.distance(&moved)?);
        }
    }
    Ok(r)
}

/// Worst disagreement of a chartwise scalar across overlaps.
pub fn scalar_compatibility(cover: &SampledCover, a: &ChartScalar) -> Result<Residual> {
    chart_compatibility(cover, a, |_, _, f| Ok(f.clone()))
}

/// Section of the associated sheaf by its components in the natural frames.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AssociatedSection {
    pub components: BTreeMap<RegionId, MatrixField>,
}

impl AssociatedSection {
    pub fn zero(e: &VectorSheafData) -> Result<Self> {
        let dim = e.cover().dim();
        let components = e
            .cover()
            .region_ids()
            .map(|a| {
                let region = e.cover().region(a)?;
                Ok((a, region.iter().map(|p| (p, MatJet::zeros(e.rank(), 1, dim))).collect()))
            })
            .collect::<Result<_>>()?;
        Ok(AssociatedSection { components })
    }

    /// Extends a component on all of `U_chart` to every chart meeting it,
    /// using `a_b = G_ba a_a`. Points of other charts outside `U_chart` are
    /// left out.
    pub fn from_chart(e: &VectorSheafData, chart: RegionId, a: MatrixField) -> Result<Self> {
        let mut components = BTreeMap::new();
        for b in e.cover().region_ids() {
            if b == chart {
                continue;
            }
            let ov = e.cover().overlap(chart, b)?;
            if ov.is_empty() {
                continue;
            }
            let moved = transport_form(e.cover(), &a.restrict(&ov)?, chart, b)?;
            components.insert(b, mat_mul(&e.transition(b, chart)?.restrict(&ov)?, &moved)?);
        }
        components.insert(chart, a);
        Ok(AssociatedSection { components })
    }

    pub fn component(&self, chart: RegionId) -> Result<&MatrixField> {
        self.components.get(&chart).ok_or(Error::MissingForm(chart))
    }

    /// Worst violation of `a_a = G_ab a_b`.
    pub fn compatibility(&self, e: &VectorSheafData) -> Result<Residual> {
        chart_compatibility(e.cover(), &self.components, |a, b, fb| {
            mat_mul(&e.transition(a, b)?.restrict(&fb.domain())?, fb)
        })
    }

    pub fn distance(&self, other: &AssociatedSection) -> Result<Residual> {
        chart_map_distance(&self.components, &other.components)
    }
}

pub(crate) fn chart_map_distance<T: PointValue>(
    a: &BTreeMap<RegionId, crate::jets::Field<T>>,
    b: &BTreeMap<RegionId, crate::jets::Field<T>>,
) -> Result<Residual> {
    let mut r = Residual::ZERO;
    for (k, fa) in a {
        let fb = b.get(k).ok_or(Error::MissingForm(*k))?;
        r = r.merge(fa.distance(fb)?);
    }
    if let Some(k) = b.keys().find(|k| !a.contains_key(k)) {
        return Err(Error::MissingForm(*k));
    }
    Ok(r)
}

fn require(check: &'static str, residual: Residual, tolerance: f64) -> Result<()> {
    if residual.passes(tolerance) {
        Ok(())
    } else {
        Err(Error::Precondition {
            check,
            residual: residual.max,
            tolerance,
        })
    }
}

/// Canonical chart component `phi(g) h` of the class `[s_a g, h]`.
pub fn quotient_reduce(r: &RepresentationModel, s: &PrincipalSectionLocal, h: &MatrixField) -> Result<MatrixField> {
    mat_mul(&r.phi(&s.factor)?, h)
}

pub fn section_add(
    e: &VectorSheafData,
    sigma: &AssociatedSection,
    tau: &AssociatedSection,
    tol: f64,
) -> Result<AssociatedSection> {
    require("section compatibility", sigma.compatibility(e)?, tol)?;
    require("section compatibility", tau.compatibility(e)?, tol)?;
    let mut components = BTreeMap::new();
    for (&a, s) in &sigma.components {
        let t = tau.component(a)?;
        components.insert(a, s.zip_with(t, "section_add", |_, x, y| x.add(y))?);
    }
    if let Some(&a) = tau.components.keys().find(|a| !sigma.components.contains_key(a)) {
        return Err(Error::MissingForm(a));
    }
    Ok(AssociatedSection { components })
}

pub fn section_smul(
    e: &VectorSheafData,
    a: &ChartScalar,
    sigma: &AssociatedSection,
    tol: f64,
) -> Result<AssociatedSection> {
    require("section compatibility", sigma.compatibility(e)?, tol)?;
    require("scalar compatibility", scalar_compatibility(e.cover(), a)?, tol)?;
    let mut components = BTreeMap::new();
    for (&chart, s) in &sigma.components {
        let scalar = a.get(&chart).ok_or(Error::MissingForm(chart))?.restrict(&s.domain())?;
        components.insert(chart, scalar.zip_with(s, "section_smul", |_, k, m| m.scale_jet(k))?);
    }
    Ok(AssociatedSection { components })
}

/// Tensorial morphism by its values on the natural sections.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TensorialMorphismData {
    pub values: BTreeMap<RegionId, MatrixField>,
}

impl TensorialMorphismData {
    pub fn value(&self, chart: RegionId) -> Result<&MatrixField> {
        self.values.get(&chart).ok_or(Error::MissingForm(chart))
    }

    /// Worst violation of `f_b = phi(g_ab^{-1}) f_a`.
    pub fn equivariance(&self, p: &PrincipalSheafData, r: &RepresentationModel) -> Result<Residual> {
        let mut res = Residual::ZERO;
        for (a, b) in p.cover().overlapping_pairs() {
            let (Some(fa), Some(fb)) = (self.values.get(&a), self.values.get(&b)) else {
                continue;
            };
            let v = fa.domain().intersect(&fb.domain());
            if v.is_empty() {
                continue;
            }
            let ginv = p.group().inverse(&p.transition(a, b)?.restrict(&v)?)?;
            let predicted = mat_mul(&r.phi(&ginv)?, &fa.restrict(&v)?)?;
            let predicted = transport_form(p.cover(), &predicted, a, b)?;
            res = res.merge(fb.restrict(&v)?.distance(&predicted)?);
        }
        Ok(res)
    }
}

pub fn tensorial_to_section(
    p: &PrincipalSheafData,
    r: &RepresentationModel,
    f: &TensorialMorphismData,
    tol: f64,
) -> Result<AssociatedSection> {
    require("tensorial equivariance", f.equivariance(p, r)?, tol)?;
    Ok(AssociatedSection {
        components: f.values.clone(),
    })
}

pub fn section_to_tensorial(e: &VectorSheafData, sigma: &AssociatedSection, tol: f64) -> Result<TensorialMorphismData> {
    require("section compatibility", sigma.compatibility(e)?, tol)?;
    Ok(TensorialMorphismData {
        values: sigma.components.clone(),
    })
}

/// `f(s_a g) = phi(g^{-1}) f_a`, in chart `a` coordinates.
pub fn evaluate_tensorial(
    p: &PrincipalSheafData,
    r: &RepresentationModel,
    f: &TensorialMorphismData,
    s: &PrincipalSectionLocal,
) -> Result<MatrixField> {
    let fa = f.value(s.chart)?.restrict(&s.factor.domain())?;
    let ginv = p.group().inverse(&s.factor)?;
    mat_mul(&r.phi(&ginv)?, &fa)
}

/// Evaluates the tensorial morphism of `sigma` at `s` using every chart that
/// meets the domain of `s`, and glues the pieces in the coordinates of
/// `s.chart`. Pieces that disagree beyond `tol` are an error.
pub fn evaluate_section_glued(
    p: &PrincipalSheafData,
    r: &RepresentationModel,
    sigma: &AssociatedSection,
    s: &PrincipalSectionLocal,
    tol: f64,
) -> Result<MatrixField> {
    let home = s.chart;
    let mut pieces = BTreeMap::new();
    for (&b, ab) in &sigma.components {
        let v: Region = s.factor.domain().intersect(&ab.domain());
        if v.is_empty() {
            continue;
        }
        let local = PrincipalSectionLocal {
            chart: home,
            factor: s.factor.restrict(&v)?,
        };
        let sb = p.section_transition(&local, b)?;
        let ginv = p.group().inverse(&sb.factor)?;
        let piece = mat_mul(&r.phi(&ginv)?, &ab.restrict(&v)?)?;
        pieces.insert(b, transport_form(p.cover(), &piece, b, home)?);
    }
    let out = glue(&pieces, tol)?;
    if out.domain() != s.factor.domain() {
        return Err(Error::DomainMismatch {
            op: "evaluate_section_glued",
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::cover::PointId;
    use crate::jets::Jet;
    use crate::principal::constant_transition;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const R0: RegionId = RegionId(0);
    const R1: RegionId = RegionId(1);
    const R2: RegionId = RegionId(2);

    fn whole() -> SampledCover {
        SampledCover::circle_arcs(24, 1).unwrap()
    }

    fn mobius() -> PrincipalSheafData {
        let cover = SampledCover::circle_arcs(24, 3).unwrap();
        let one = DMatrix::from_element(1, 1, 1.0);
        let cocycle = [
            ((R0, R1), constant_transition(&cover, R0, R1, one.clone()).unwrap()),
            ((R1, R2), constant_transition(&cover, R1, R2, one.clone()).unwrap()),
            ((R2, R0), constant_transition(&cover, R2, R0, -one).unwrap()),
        ]
        .into_iter()
        .collect();
        PrincipalSheafData::new(cover, GroupModel::gl(1).unwrap(), cocycle).unwrap()
    }

    fn so2_bundle() -> PrincipalSheafData {
        let cover = SampledCover::circle_arcs(24, 2).unwrap();
        let ov = cover.overlap(R0, R1).unwrap();
        let g = MatrixField::from_fn(cover.chart_points_on(R0, &ov).unwrap(), 2, 2, |x| {
            vec![x[0].cos(), -&x[0].sin(), x[0].sin(), x[0].cos()]
        })
        .unwrap();
        PrincipalSheafData::new(cover, GroupModel::so2(), [((R0, R1), g)].into_iter().collect()).unwrap()
    }

    fn diag_powers() -> RepresentationModel {
        RepresentationModel::new(GroupModel::gl1_positive(), RepresentationKind::Gl1DiagPowers(vec![1, 2])).unwrap()
    }

    #[test]
    fn representation_names_round_trip() {
        for s in ["trivial(3)", "so2_in_gl2", "gl1_diag_powers(1,2)", "gl1_diag_powers(-1)"] {
            let k: RepresentationKind = s.parse().unwrap();
            assert_eq!(k.to_string(), s);
        }
        assert_eq!(
            " gl1_diag_powers( 1, 2 )".parse::<RepresentationKind>().unwrap(),
            RepresentationKind::Gl1DiagPowers(vec![1, 2])
        );
        for bad in ["trivial(0)", "trivial", "so3", "gl1_diag_powers(a)"] {
            assert!(bad.parse::<RepresentationKind>().is_err(), "{bad}");
        }
        assert!(RepresentationModel::new(GroupModel::gl(2).unwrap(), RepresentationKind::So2InGl2).is_err());
        assert!(RepresentationModel::new(GroupModel::so2(), RepresentationKind::Trivial(3)).is_err());
    }

    #[test]
    fn check_representation_examples() {
        let c = whole();
        let pts = c.chart_points(R0).unwrap();
        let gl2 = GroupModel::gl(2).unwrap();
        let triv = RepresentationModel::new(gl2.clone(), RepresentationKind::Trivial(2)).unwrap();
        let rep = check_representation(&triv, &catalog::element_pairs(&gl2, &pts).unwrap()).unwrap();
        assert_eq!(rep.homomorphism.max, 0.0);
        assert_eq!(rep.unit.max, 0.0);

        let so2 = GroupModel::so2();
        let incl = RepresentationModel::new(so2.clone(), RepresentationKind::So2InGl2).unwrap();
        let rep = check_representation(&incl, &catalog::element_pairs(&so2, &pts).unwrap()).unwrap();
        assert!(rep.passes(1e-14));

        let dp = diag_powers();
        let pairs = catalog::element_pairs(dp.source(), &pts).unwrap();
        let rep = check_representation(&dp, &pairs).unwrap();
        assert!(rep.passes(REPRESENTATION_TOL));
        // direct oracle for the second diagonal entry: (ab)^2 = a^2 b^2
        for (g, h) in &pairs {
            let phi = dp.phi(&dp.source().group_mul(g, h).unwrap()).unwrap();
            for (p, m) in phi.iter() {
                let a = g.get(p).unwrap().value[(0, 0)];
                let b = h.get(p).unwrap().value[(0, 0)];
                assert!((m.value[(1, 1)] - a * a * b * b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn check_lie_type_examples() {
        let c = whole();
        let pts = c.chart_points(R0).unwrap();
        for (model, kind, tol) in [
            (GroupModel::gl(1).unwrap(), RepresentationKind::Trivial(1), 1e-12),
            (GroupModel::gl(2).unwrap(), RepresentationKind::Trivial(2), 1e-12),
            (GroupModel::gl(3).unwrap(), RepresentationKind::Trivial(3), 1e-12),
            (GroupModel::so2(), RepresentationKind::So2InGl2, 1e-12),
            (GroupModel::gl1_positive(), RepresentationKind::Gl1DiagPowers(vec![1, 2]), 1e-10),
        ] {
            let r = RepresentationModel::new(model.clone(), kind).unwrap();
            let rep = check_lie_type(&r, &catalog::elements(&model, &pts).unwrap()).unwrap();
            assert!(rep.passes(tol), "{}: {rep:?}", r.name());
        }
    }

    #[test]
    fn wrong_phibar_fails_lie_type() {
        let c = whole();
        let pts = c.chart_points(R0).unwrap();
        let r = diag_powers()
            .with_phibar(DMatrix::from_row_slice(1, 4, &[1.0, 0.0, 0.0, 1.0]))
            .unwrap();
        let rep = check_lie_type(&r, &catalog::elements(r.source(), &pts).unwrap()).unwrap();
        assert!(!rep.mc.passes(LIE_TYPE_TOL));
        assert!(rep.rho.passes(LIE_TYPE_TOL));
    }

    #[test]
    fn diag_powers_mc_matches_oracle() {
        // mc(diag(a, a^2)) = diag(a'/a, 2 a'/a)
        let c = whole();
        let pts = c.chart_points(R0).unwrap();
        let dp = diag_powers();
        let g = &catalog::elements(dp.source(), &pts).unwrap()[1];
        let mc = gl_form_to_matrix(&GroupModel::gl(2).unwrap().mc(&dp.phi(g).unwrap()).unwrap(), 2).unwrap();
        for (p, w) in mc.iter() {
            let a = g.get(p).unwrap().entry(0, 0);
            let ratio = a.grad[0] / a.value;
            assert!((w.0[0][(0, 0)] - ratio).abs() < 1e-14);
            assert!((w.0[0][(1, 1)] - 2.0 * ratio).abs() < 1e-14);
        }
    }

    #[test]
    fn push_cocycle_examples() {
        let m = mobius();
        let e = push_cocycle(&m, &RepresentationModel::new(m.group().clone(), RepresentationKind::Gl1DiagPowers(vec![1, 2])).unwrap()).unwrap();
        assert!(e.check_cocycle().unwrap().passes(1e-10));
        for (p, g) in e.transition(R2, R0).unwrap().iter() {
            assert_eq!(g.value, DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]), "{p}");
        }

        let s = so2_bundle();
        let triv = push_cocycle(&s, &RepresentationModel::new(GroupModel::so2(), RepresentationKind::So2InGl2).unwrap()).unwrap();
        assert_eq!(triv.cocycle(), s.cocycle());
        assert!(triv.check_cocycle().unwrap().passes(1e-10));

        let gl2 = GroupModel::gl(2).unwrap();
        let id = PrincipalSheafData::trivial(SampledCover::circle_arcs(24, 3).unwrap(), gl2.clone()).unwrap();
        let e = push_cocycle(&id, &RepresentationModel::new(gl2, RepresentationKind::Trivial(2)).unwrap()).unwrap();
        assert_eq!(e.cocycle(), id.cocycle());

        let wrong = RepresentationModel::new(GroupModel::so2(), RepresentationKind::So2InGl2).unwrap();
        assert!(push_cocycle(&m, &wrong).is_err());
    }

    #[test]
    fn quotient_reduce_examples() {
        let p = so2_bundle();
        let r = RepresentationModel::new(GroupModel::so2(), RepresentationKind::So2InGl2).unwrap();
        let pts = p.cover().chart_points(R0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = catalog::random_vector(2, &pts, &mut rng).unwrap();
        let s0 = p.natural_section(R0).unwrap();
        assert_eq!(quotient_reduce(&r, &s0, &h).unwrap(), h);

        for g0 in catalog::elements(p.group(), &pts).unwrap() {
            let s = PrincipalSectionLocal {
                chart: R0,
                factor: catalog::elements(p.group(), &pts).unwrap()[2].clone(),
            };
            let lhs = quotient_reduce(&r, &s, &h).unwrap();
            let moved = s.act(p.group(), &g0).unwrap();
            let h2 = mat_mul(&r.phi(&p.group().inverse(&g0).unwrap()).unwrap(), &h).unwrap();
            let rhs = quotient_reduce(&r, &moved, &h2).unwrap();
            assert!(lhs.distance(&rhs).unwrap().passes(1e-12));
        }
    }

    /// `sin(t/2)` with the angle unwrapped past `2 pi` on the last arc, so it
    /// changes sign across the seam where the transition is `-1`.
    fn half_angle(e: &VectorSheafData) -> BTreeMap<RegionId, MatrixField> {
        let c = e.cover();
        c.region_ids()
            .map(|a| {
                let wrap = a == R2;
                let field = c
                    .chart_points(a)
                    .unwrap()
                    .into_iter()
                    .map(|(p, x)| {
                        let shift = if wrap && p.0 < 12 { 2.0 * std::f64::consts::PI } else { 0.0 };
                        let t = &Jet::variable(x[0], 1, 0) + &Jet::constant(shift, 1);
                        (p, MatJet::column(&[t.scale(0.5).sin()]).unwrap())
                    })
                    .collect();
                (a, field)
            })
            .collect()
    }

    fn mobius_line() -> (PrincipalSheafData, RepresentationModel, VectorSheafData) {
        let m = mobius();
        let r = RepresentationModel::new(m.group().clone(), RepresentationKind::Trivial(1)).unwrap();
        let e = push_cocycle(&m, &r).unwrap();
        (m, r, e)
    }

    #[test]
    fn module_operations_examples() {
        let (_, _, e) = mobius_line();
        let sigma = AssociatedSection { components: half_angle(&e) };
        assert!(sigma.compatibility(&e).unwrap().passes(1e-12), "{:?}", sigma.compatibility(&e));

        let zero = AssociatedSection::zero(&e).unwrap();
        assert_eq!(section_add(&e, &sigma, &zero, 1e-9).unwrap(), sigma);
        let one = chart_scalar(e.cover(), |x| Jet::constant(1.0, x[0].dim())).unwrap();
        assert_eq!(section_smul(&e, &one, &sigma, 1e-9).unwrap(), sigma);

        let a = chart_scalar(e.cover(), |x| &x[0].cos() + &Jet::constant(2.0, 1)).unwrap();
        let combo = section_add(&e, &section_smul(&e, &a, &sigma, 1e-9).unwrap(), &sigma, 1e-9).unwrap();
        assert!(combo.compatibility(&e).unwrap().passes(1e-12));

        let mut broken = sigma.clone();
        let mut c0 = broken.components[&R0].clone().into_inner();
        c0.get_mut(&PointId(1)).unwrap().value[(0, 0)] += 1.0;
        broken.components.insert(R0, c0.into_iter().collect());
        assert!(matches!(section_add(&e, &broken, &sigma, 1e-9), Err(Error::Precondition { .. })));

        let mut lopsided = one.clone();
        lopsided.insert(R0, chart_scalar(e.cover(), |x| Jet::constant(2.0, x[0].dim())).unwrap()[&R0].clone());
        assert!(matches!(section_smul(&e, &lopsided, &sigma, 1e-9), Err(Error::Precondition { .. })));
    }

    #[test]
    fn tensorial_round_trip() {
        let p = so2_bundle();
        let r = RepresentationModel::new(GroupModel::so2(), RepresentationKind::So2InGl2).unwrap();
        let e = push_cocycle(&p, &r).unwrap();

        let zero = AssociatedSection::zero(&e).unwrap();
        let f0 = TensorialMorphismData { values: zero.components.clone() };
        assert_eq!(tensorial_to_section(&p, &r, &f0, 1e-9).unwrap(), zero);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts0 = e.cover().chart_points(R0).unwrap();
        let a0 = catalog::random_vector(2, &pts0, &mut rng).unwrap();
        let sigma = AssociatedSection::from_chart(&e, R0, a0).unwrap();
        let f = section_to_tensorial(&e, &sigma, 1e-9).unwrap();
        assert!(f.equivariance(&p, &r).unwrap().passes(1e-12));
        let back = tensorial_to_section(&p, &r, &f, 1e-9).unwrap();
        assert_eq!(back, sigma);
        assert_eq!(section_to_tensorial(&e, &back, 1e-9).unwrap(), f);

        // f(s_0 g) = phi(g^{-1}) a_0 and tensoriality
        let els = catalog::elements(p.group(), &pts0).unwrap();
        let s = PrincipalSectionLocal { chart: R0, factor: els[1].clone() };
        let val = evaluate_tensorial(&p, &r, &f, &s).unwrap();
        let expect = mat_mul(&p.group().inverse(&els[1]).unwrap(), sigma.component(R0).unwrap()).unwrap();
        assert!(val.distance(&expect).unwrap().passes(1e-15));
        let h = &els[2];
        let lhs = evaluate_tensorial(&p, &r, &f, &s.act(p.group(), h).unwrap()).unwrap();
        let rhs = mat_mul(&r.phi(&p.group().inverse(h).unwrap()).unwrap(), &val).unwrap();
        assert!(lhs.distance(&rhs).unwrap().passes(1e-10));

        // both chart formulas agree on the overlap
        let glued = evaluate_section_glued(&p, &r, &sigma, &s, 1e-10).unwrap();
        assert!(glued.distance(&val).unwrap().passes(1e-10));
    }

    #[test]
    fn mobius_odd_tensorial() {
        let (m, r, e) = mobius_line();
        let f = TensorialMorphismData { values: half_angle(&e) };
        assert!(f.equivariance(&m, &r).unwrap().passes(1e-12));
        let sigma = tensorial_to_section(&m, &r, &f, 1e-9).unwrap();
        assert!(sigma.compatibility(&e).unwrap().passes(1e-12));

        let even = TensorialMorphismData {
            values: f.values.iter().map(|(k, v)| (*k, v.map(|_, m| m.scale(m.value[(0, 0)].signum())))).collect(),
        };
        assert!(matches!(tensorial_to_section(&m, &r, &even, 1e-9), Err(Error::Precondition { .. })));
    }
}

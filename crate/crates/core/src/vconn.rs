//! Linear connections on vector sheaves: local matrix forms, covariant
//! derivative of sections, induction from principal connections and the
//! frame sheaf.
//!
//! `theta_a` acts on components by `(theta a)_i = sum_j theta_ij a_j`, so the
//! covariant derivative in chart `a` is `da + theta_a a`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::associated::{
    chart_map_distance, check_lie_type, gl_form_to_matrix, matrix_form_to_gl, AssociatedSection, ChartScalar,
    RepresentationKind, RepresentationModel, VectorSheafData, LIE_TYPE_TOL,
};
use crate::catalog;
use crate::cover::{transport_form, RegionId};
use crate::error::{Error, Result};
use crate::groups::{add_forms, GroupModel, LieCoeffs};
use crate::jets::{mat_distance, Field, MatrixOneForm, PointValue};
use crate::linalg::BasisProjector;
use crate::principal::{PrincipalConnection, PrincipalSheafData};
use crate::residual::Residual;

/// Tolerance for structurally exact identities.
pub const EXACT_TOL: f64 = 1e-12;

/// Coefficients of an `n`-vector-valued 1-form at a point: `n x dim`, row
/// `i` holding the differential of component `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorCoeffs(pub DMatrix<f64>);

impl PointValue for VectorCoeffs {
    fn distance(&self, other: &Self) -> f64 {
        mat_distance(&self.0, &other.0)
    }

    fn pull_back(&self, jac: &DMatrix<f64>) -> Self {
        VectorCoeffs(&self.0 * jac)
    }
}

pub type VectorOneForm = Field<VectorCoeffs>;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VectorConnection {
    pub forms: BTreeMap<RegionId, MatrixOneForm>,
}

impl VectorConnection {
    pub fn form(&self, chart: RegionId) -> Result<&MatrixOneForm> {
        self.forms.get(&chart).ok_or(Error::MissingForm(chart))
    }

    pub fn zero(e: &VectorSheafData) -> Result<Self> {
        let n = e.rank();
        let dim = e.cover().dim();
        let forms = e
            .cover()
            .region_ids()
            .map(|a| {
                let r = e.cover().region(a)?;
                Ok((a, r.iter().map(|p| (p, crate::jets::MatrixCoeffs::zeros(n, n, dim))).collect()))
            })
            .collect::<Result<_>>()?;
        Ok(VectorConnection { forms })
    }

    pub fn distance(&self, other: &VectorConnection) -> Result<Residual> {
        chart_map_distance(&self.forms, &other.forms)
    }

    /// The same forms read as `GL(n)` Lie coefficients.
    pub fn as_principal(&self) -> Result<PrincipalConnection> {
        let forms = self
            .forms
            .iter()
            .map(|(&a, t)| Ok((a, matrix_form_to_gl(t)?)))
            .collect::<Result<_>>()?;
        Ok(PrincipalConnection { forms })
    }
}

/// Worst violation of `theta_b = G_ab^{-1} theta_a G_ab + G_ab^{-1} dG_ab`
/// over all ordered overlaps.
pub fn check_vector_connection(e: &VectorSheafData, nabla: &VectorConnection) -> Result<Residual> {
    let n = e.rank();
    let gl = GroupModel::gl(n)?;
    for a in e.cover().region_ids() {
        nabla.form(a)?;
    }
    let mut r = Residual::ZERO;
    for (a, b) in e.cover().overlapping_pairs() {
        let ov = e.cover().overlap(a, b)?;
        let g = e.transition(a, b)?.restrict(&ov)?;
        let ginv = gl.inverse(&g)?;
        let theta_a = matrix_form_to_gl(&nabla.form(a)?.restrict(&ov)?)?;
        let predicted = add_forms(&gl.rho_dot_form(&ginv, &theta_a)?, &gl.mc(&g)?)?;
        let predicted = gl_form_to_matrix(&transport_form(e.cover(), &predicted, a, b)?, n)?;
        r = r.merge(nabla.form(b)?.restrict(&ov)?.distance(&predicted)?);
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

/// `theta_a = phibar(omega_a)` chartwise.
pub fn induce_connection(
    p: &PrincipalSheafData,
    r: &RepresentationModel,
    d: &PrincipalConnection,
    tol: f64,
) -> Result<VectorConnection> {
    if !r.lie_type() {
        return Err(Error::InvalidRepresentation(format!("{} is not of Lie type", r.name())));
    }
    if r.source().kind() != p.group().kind() {
        return Err(Error::InvalidRepresentation(format!(
            "representation of {} applied to a {} sheaf",
            r.source().kind(),
            p.group().kind()
        )));
    }
    let mut samples: Vec<_> = p.cocycle().values().cloned().collect();
    if let Some(first) = p.cover().region_ids().next() {
        samples.extend(catalog::elements(p.group(), &p.cover().chart_points(first)?)?);
    }
    let lie = check_lie_type(r, &samples)?;
    require("lie type (logarithmic differential)", lie.mc, LIE_TYPE_TOL)?;
    require("lie type (adjoint)", lie.rho, LIE_TYPE_TOL)?;
    require("principal connection", p.check_connection(d)?, tol)?;
    let forms = d
        .forms
        .iter()
        .map(|(&a, w)| Ok((a, r.phibar_form(w)?)))
        .collect::<Result<_>>()?;
    Ok(VectorConnection { forms })
}

/// `da + theta a` in every chart where the section has a component.
pub fn nabla_apply(
    e: &VectorSheafData,
    nabla: &VectorConnection,
    sigma: &AssociatedSection,
    tol: f64,
) -> Result<BTreeMap<RegionId, VectorOneForm>> {
    require("section compatibility", sigma.compatibility(e)?, tol)?;
    sigma
        .components
        .iter()
        .map(|(&a, comp)| {
            let theta = nabla.form(a)?.restrict(&comp.domain())?;
            let out = comp.zip_with(&theta, "nabla_apply", |_, s, t| {
                let n = s.rows();
                if s.cols() != 1 || t.0.first().map(|m| m.shape()) != Some((n, n)) {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: t.0.first().map_or(0, |m| m.nrows()),
                    });
                }
                let dim = s.dim();
                Ok(VectorCoeffs(DMatrix::from_fn(n, dim, |i, k| {
                    let mut acc = s.grad[k][(i, 0)];
                    for j in 0..n {
                        acc += t.0[k][(i, j)] * s.value[(j, 0)];
                    }
                    acc
                })))
            })?;
            Ok((a, out))
        })
        .collect()
}

/// Worst violation of `nabla^a a_a = G_ab nabla^b a_b` on overlaps.
pub fn nabla_chart_agreement(
    e: &VectorSheafData,
    nabla: &VectorConnection,
    sigma: &AssociatedSection,
    tol: f64,
) -> Result<Residual> {
    let parts = nabla_apply(e, nabla, sigma, tol)?;
    let mut r = Residual::ZERO;
    for (&a, fa) in &parts {
        for (&b, fb) in &parts {
            if a == b {
                continue;
            }
            let v = fa.domain().intersect(&fb.domain());
            if v.is_empty() {
                continue;
            }
            let g = e.transition(a, b)?.restrict(&v)?;
            let moved = transport_form(e.cover(), &fb.restrict(&v)?, b, a)?;
            let moved = g.zip_with(&moved, "nabla_chart_agreement", |_, gm, c| Ok(VectorCoeffs(&gm.value * &c.0)))?;
            r = r.merge(fa.restrict(&v)?.distance(&moved)?);
        }
    }
    Ok(r)
}

/// Worst violation of `nabla(a s) = a nabla(s) + s da`.
pub fn check_leibniz_koszul(
    e: &VectorSheafData,
    nabla: &VectorConnection,
    a: &ChartScalar,
    sigma: &AssociatedSection,
    tol: f64,
) -> Result<Residual> {
    let scaled = crate::associated::section_smul(e, a, sigma, tol)?;
    let lhs = nabla_apply(e, nabla, &scaled, tol)?;
    let base = nabla_apply(e, nabla, sigma, tol)?;
    let mut r = Residual::ZERO;
    for (chart, l) in &lhs {
        let comp = sigma.component(*chart)?;
        let scalar = a.get(chart).ok_or(Error::MissingForm(*chart))?;
        let b = &base[chart];
        for (p, lv) in l.iter() {
            let (Some(s), Some(k), Some(bv)) = (comp.get(p), scalar.get(p), b.get(p)) else {
                return Err(Error::DomainMismatch { op: "check_leibniz_koszul" });
            };
            let grad_a = DMatrix::from_row_slice(1, k.grad.len(), &k.grad);
            let rhs = &bv.0 * k.value + &s.value * grad_a;
            r.observe(p, mat_distance(&lv.0, &rhs));
        }
    }
    Ok(r)
}

/// `omega_a = phibar^{-1}(theta_a)` by least squares onto the image of
/// `phibar`, rejecting forms that leave the image by more than `tol`.
pub fn pull_back_connection(r: &RepresentationModel, nabla: &VectorConnection, tol: f64) -> Result<PrincipalConnection> {
    let proj = BasisProjector::new(r.phibar_basis())?;
    let m = proj.len();
    let mut forms = BTreeMap::new();
    for (&a, theta) in &nabla.forms {
        let w = theta.try_map(|p, c| {
            let mut out = DMatrix::zeros(c.dim(), m);
            for (k, mk) in c.0.iter().enumerate() {
                let (coeffs, residual) = proj.expand(mk);
                if !(residual <= tol) {
                    return Err(Error::NotInImage {
                        chart: a,
                        point: p,
                        residual,
                    });
                }
                out.row_mut(k).copy_from(&coeffs.transpose());
            }
            Ok(LieCoeffs(out))
        })?;
        forms.insert(a, w);
    }
    Ok(PrincipalConnection { forms })
}

/// Principal sheaf of frames: `GL(n)` with the cocycle of `e`, paired with
/// the defining representation.
pub fn frame_sheaf(e: &VectorSheafData) -> Result<(PrincipalSheafData, RepresentationModel)> {
    let gl = GroupModel::gl(e.rank())?;
    let p = PrincipalSheafData::new(e.cover().clone(), gl.clone(), e.cocycle().clone())?;
    let r = RepresentationModel::new(gl, RepresentationKind::Trivial(e.rank()))?;
    Ok((p, r))
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FrameRoundtrip {
    /// Transformation law of the input on the vector sheaf.
    pub vector: Residual,
    /// Transformation law of the same forms on the frame sheaf.
    pub principal: Residual,
    /// Distance between the input and the induced connection.
    pub roundtrip: Residual,
}

impl FrameRoundtrip {
    pub fn max(&self) -> Residual {
        [self.vector, self.principal, self.roundtrip].into_iter().collect()
    }
}

/// Reads `nabla` as a connection on the frame sheaf and induces it back.
pub fn check_frame_roundtrip(e: &VectorSheafData, nabla: &VectorConnection, tol: f64) -> Result<FrameRoundtrip> {
    let vector = check_vector_connection(e, nabla)?;
    require("vector connection", vector, tol)?;
    let (p, r) = frame_sheaf(e)?;
    let d = nabla.as_principal()?;
    let principal = p.check_connection(&d)?;
    let back = induce_connection(&p, &r, &d, tol)?;
    Ok(FrameRoundtrip {
        vector,
        principal,
        roundtrip: back.distance(nabla)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::associated::{chart_scalar, push_cocycle};
    use crate::catalog;
    use crate::cover::{PointId, SampledCover};
    use crate::groups::LieValuedOneForm;
    use crate::jets::{mat_mul, Jet, MatJet, MatrixCoeffs, MatrixField};
    use crate::principal::{Cocycle, DEFAULT_GLUE_TOL};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const R0: RegionId = RegionId(0);
    const R1: RegionId = RegionId(1);

    fn so2_setup() -> (PrincipalSheafData, RepresentationModel, VectorSheafData) {
        let cover = SampledCover::circle_arcs(24, 2).unwrap();
        let ov = cover.overlap(R0, R1).unwrap();
        let g = MatrixField::from_fn(cover.chart_points_on(R0, &ov).unwrap(), 2, 2, |x| {
            vec![x[0].cos(), -&x[0].sin(), x[0].sin(), x[0].cos()]
        })
        .unwrap();
        let p = PrincipalSheafData::new(cover, GroupModel::so2(), [((R0, R1), g)].into_iter().collect()).unwrap();
        let r = RepresentationModel::new(GroupModel::so2(), RepresentationKind::So2InGl2).unwrap();
        let e = push_cocycle(&p, &r).unwrap();
        (p, r, e)
    }

    fn shear_bundle() -> VectorSheafData {
        let cover = SampledCover::circle_arcs(24, 2).unwrap();
        let ov = cover.overlap(R0, R1).unwrap();
        let g = MatrixField::from_fn(cover.chart_points_on(R0, &ov).unwrap(), 2, 2, |x| {
            vec![Jet::constant(1.0, 1), x[0].clone(), Jet::constant(0.0, 1), Jet::constant(1.0, 1)]
        })
        .unwrap();
        VectorSheafData::new(cover, 2, [((R0, R1), g)].into_iter().collect()).unwrap()
    }

    fn seed(p: &PrincipalSheafData, chart: RegionId, f: impl Fn(f64) -> Vec<f64>) -> LieValuedOneForm {
        let m = p.group().lie_dim();
        p.cover()
            .chart_points(chart)
            .unwrap()
            .into_iter()
            .map(|(q, x)| (q, LieCoeffs(DMatrix::from_row_slice(1, m, &f(x[0])))))
            .collect()
    }

    /// Direct `G^{-1} theta G + G^{-1} G'` on a one-dimensional chart.
    fn oracle_transform(g: &MatJet, theta: &DMatrix<f64>) -> DMatrix<f64> {
        let ginv = g.value.clone().try_inverse().unwrap();
        &ginv * theta * &g.value + &ginv * &g.grad[0]
    }

    #[test]
    fn check_vector_connection_examples() {
        let cover = SampledCover::circle_arcs(24, 3).unwrap();
        let gl2 = GroupModel::gl(2).unwrap();
        let id = PrincipalSheafData::trivial(cover, gl2.clone()).unwrap();
        let e = push_cocycle(&id, &RepresentationModel::new(gl2, RepresentationKind::Trivial(2)).unwrap()).unwrap();
        let c = DMatrix::from_row_slice(2, 2, &[0.1, 0.2, -0.3, 0.4]);
        let nabla = VectorConnection {
            forms: e
                .cover()
                .region_ids()
                .map(|a| {
                    let r = e.cover().region(a).unwrap();
                    (a, r.iter().map(|q| (q, MatrixCoeffs(vec![c.clone()]))).collect())
                })
                .collect(),
        };
        assert_eq!(check_vector_connection(&e, &nabla).unwrap().max, 0.0);

        // zero forms: residual is |G^{-1} dG| = 1 for the shear
        let shear = shear_bundle();
        let zero = VectorConnection::zero(&shear).unwrap();
        let r = check_vector_connection(&shear, &zero).unwrap();
        assert!((r.max - 1.0).abs() < 1e-15, "{r}");

        let mut partial = zero.clone();
        partial.forms.remove(&R1);
        assert!(matches!(check_vector_connection(&shear, &partial), Err(Error::MissingForm(_))));
    }

    #[test]
    fn induce_connection_examples() {
        let (p, r, e) = so2_setup();
        let d = p.complete_connection(R0, &seed(&p, R0, |t| vec![0.5 * t.cos()]), DEFAULT_GLUE_TOL).unwrap();
        let nabla = induce_connection(&p, &r, &d, DEFAULT_GLUE_TOL).unwrap();
        assert!(check_vector_connection(&e, &nabla).unwrap().passes(1e-9));
        // theta = c J
        for (a, theta) in &nabla.forms {
            for (q, c) in theta.iter() {
                let w = d.form(*a).unwrap().get(q).unwrap().0[(0, 0)];
                let expect = DMatrix::from_row_slice(2, 2, &[0.0, -w, w, 0.0]);
                assert_eq!(c.0[0], expect);
            }
        }
        // independent oracle on the overlap
        let ov = e.cover().overlap(R0, R1).unwrap();
        for q in ov.iter() {
            let g = e.transition(R0, R1).unwrap().get(q).unwrap();
            let t0 = &nabla.form(R0).unwrap().get(q).unwrap().0[0];
            let t1 = &nabla.form(R1).unwrap().get(q).unwrap().0[0];
            assert!(mat_distance(t1, &oracle_transform(g, t0)) < 1e-12);
        }

        // trivial representation: the same numbers reread as matrices
        let gl2 = GroupModel::gl(2).unwrap();
        let cover = SampledCover::circle_arcs(24, 2).unwrap();
        let whole = SampledCover::circle_arcs(24, 1).unwrap();
        let els = catalog::elements(&gl2, &whole.chart_points(R0).unwrap()).unwrap();
        let pots: BTreeMap<_, _> = [(R0, &els[1]), (R1, &els[3])]
            .into_iter()
            .map(|(k, h)| (k, h.restrict(cover.region(k).unwrap()).unwrap()))
            .collect();
        let cocycle = crate::principal::coboundary(&cover, &pots, 1e-9).unwrap();
        let pg = PrincipalSheafData::new(cover, gl2.clone(), cocycle).unwrap();
        let triv = RepresentationModel::new(gl2, RepresentationKind::Trivial(2)).unwrap();
        let d = pg
            .complete_connection(R0, &seed(&pg, R0, |t| vec![t.sin(), 0.1, -0.2, t.cos()]), DEFAULT_GLUE_TOL)
            .unwrap();
        let nabla = induce_connection(&pg, &triv, &d, DEFAULT_GLUE_TOL).unwrap();
        assert_eq!(nabla.as_principal().unwrap(), d);
        let eg = push_cocycle(&pg, &triv).unwrap();
        assert!(check_vector_connection(&eg, &nabla).unwrap().passes(1e-9));

        // zero connection on a flat bundle
        let flat = PrincipalSheafData::trivial(SampledCover::circle_arcs(24, 3).unwrap(), GroupModel::so2()).unwrap();
        let d = flat.complete_connection(R0, &seed(&flat, R0, |_| vec![0.0]), DEFAULT_GLUE_TOL).unwrap();
        let nabla = induce_connection(&flat, &r, &d, DEFAULT_GLUE_TOL).unwrap();
        for theta in nabla.forms.values() {
            assert!(theta.iter().all(|(_, c)| c.0[0].iter().all(|v| *v == 0.0)));
        }
    }

    #[test]
    fn induce_connection_checks_preconditions() {
        let (p, r, _) = so2_setup();
        let zero = PrincipalConnection {
            forms: p.cover().region_ids().map(|a| (a, seed(&p, a, |_| vec![0.0]))).collect(),
        };
        let err = induce_connection(&p, &r, &zero, DEFAULT_GLUE_TOL).unwrap_err();
        assert!(matches!(err, Error::Precondition { check: "principal connection", .. }), "{err:?}");

        let d = p.complete_connection(R0, &seed(&p, R0, |_| vec![0.0]), DEFAULT_GLUE_TOL).unwrap();
        assert!(induce_connection(&p, &r.clone().with_lie_type(false), &d, 1e-9).is_err());
        let doubled = r.with_phibar(DMatrix::from_row_slice(1, 4, &[0.0, -2.0, 2.0, 0.0])).unwrap();
        let err = induce_connection(&p, &doubled, &d, 1e-9).unwrap_err();
        assert!(matches!(err, Error::Precondition { .. }), "{err:?}");
    }

    fn frame_section(e: &VectorSheafData, chart: RegionId, j: usize) -> AssociatedSection {
        let n = e.rank();
        let comp = e
            .cover()
            .region(chart)
            .unwrap()
            .iter()
            .map(|q| {
                let mut v = DMatrix::zeros(n, 1);
                v[(j, 0)] = 1.0;
                (q, MatJet::constant(v, e.cover().dim()))
            })
            .collect();
        AssociatedSection {
            components: [(chart, comp)].into_iter().collect(),
        }
    }

    #[test]
    fn nabla_apply_examples() {
        let (p, r, e) = so2_setup();
        let d = p.complete_connection(R0, &seed(&p, R0, |t| vec![0.3 + t.sin()]), DEFAULT_GLUE_TOL).unwrap();
        let nabla = induce_connection(&p, &r, &d, DEFAULT_GLUE_TOL).unwrap();

        // frame section e_j picks out column j of theta
        for j in 0..2 {
            let out = nabla_apply(&e, &nabla, &frame_section(&e, R1, j), 1e-9).unwrap();
            for (q, c) in out[&R1].iter() {
                let theta = &nabla.form(R1).unwrap().get(q).unwrap().0[0];
                for i in 0..2 {
                    assert_eq!(c.0[(i, 0)], theta[(i, j)]);
                }
            }
        }

        // zero connection: plain differential of the components
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a0 = catalog::random_vector(2, &e.cover().chart_points(R0).unwrap(), &mut rng).unwrap();
        let sigma = AssociatedSection::from_chart(&e, R0, a0.clone()).unwrap();
        let zero = VectorConnection::zero(&e).unwrap();
        let out = nabla_apply(&e, &zero, &sigma, 1e-9).unwrap();
        for (q, c) in out[&R0].iter() {
            let s = a0.get(q).unwrap();
            assert_eq!(c.0[(0, 0)], s.grad[0][(0, 0)]);
            assert_eq!(c.0[(1, 0)], s.grad[0][(1, 0)]);
        }

        let zs = AssociatedSection::zero(&e).unwrap();
        for part in nabla_apply(&e, &nabla, &zs, 1e-9).unwrap().values() {
            assert!(part.iter().all(|(_, c)| c.0.iter().all(|v| *v == 0.0)));
        }

        assert!(nabla_chart_agreement(&e, &nabla, &sigma, 1e-9).unwrap().passes(1e-9));
    }

    #[test]
    fn leibniz_koszul_examples() {
        let (p, r, e) = so2_setup();
        let d = p.complete_connection(R0, &seed(&p, R0, |t| vec![t.cos()]), DEFAULT_GLUE_TOL).unwrap();
        let nabla = induce_connection(&p, &r, &d, DEFAULT_GLUE_TOL).unwrap();
        let sigma = frame_section(&e, R0, 1);
        let one = chart_scalar(e.cover(), |x| Jet::constant(1.0, x[0].dim())).unwrap();
        assert_eq!(check_leibniz_koszul(&e, &nabla, &one, &sigma, 1e-9).unwrap().max, 0.0);
        let zs = AssociatedSection::zero(&e).unwrap();
        let coord = chart_scalar(e.cover(), |x| x[0].clone()).unwrap();
        assert_eq!(check_leibniz_koszul(&e, &nabla, &coord, &zs, 1e-9).unwrap().max, 0.0);
        // the coordinate is single valued on a one-chart section
        assert!(check_leibniz_koszul(&e, &nabla, &coord, &sigma, 1e-9).unwrap().passes(1e-12));
    }

    #[test]
    fn pull_back_examples() {
        let (p, r, _) = so2_setup();
        let d = p.complete_connection(R0, &seed(&p, R0, |t| vec![t.sin()]), DEFAULT_GLUE_TOL).unwrap();
        let nabla = induce_connection(&p, &r, &d, DEFAULT_GLUE_TOL).unwrap();
        let back = pull_back_connection(&r, &nabla, 1e-9).unwrap();
        for (a, w) in &back.forms {
            assert!(w.distance(d.form(*a).unwrap()).unwrap().passes(1e-12));
        }
        assert!(p.check_connection(&back).unwrap().passes(1e-9));
        let again = induce_connection(&p, &r, &back, 1e-9).unwrap();
        assert!(again.distance(&nabla).unwrap().passes(1e-12));

        // symmetric component leaves the image
        let mut bad = nabla.clone();
        let mut f = bad.forms[&R1].clone().into_inner();
        f.get_mut(&PointId(15)).unwrap().0[0][(0, 1)] += 0.5;
        bad.forms.insert(R1, f.into_iter().collect());
        match pull_back_connection(&r, &bad, 1e-9).unwrap_err() {
            Error::NotInImage { chart, point, residual } => {
                assert_eq!((chart, point), (R1, PointId(15)));
                assert!((residual - 0.25).abs() < 1e-14);
            }
            other => panic!("{other:?}"),
        }

        // trivial representation: verbatim
        let shear = shear_bundle();
        let (fp, fr) = frame_sheaf(&shear).unwrap();
        let d = fp
            .complete_connection(R0, &seed(&fp, R0, |t| vec![0.2, t, 0.0, -0.1]), DEFAULT_GLUE_TOL)
            .unwrap();
        let nabla = induce_connection(&fp, &fr, &d, 1e-9).unwrap();
        assert_eq!(pull_back_connection(&fr, &nabla, 1e-9).unwrap(), d);

        let degenerate = r.with_phibar(DMatrix::zeros(1, 4)).unwrap();
        assert!(matches!(pull_back_connection(&degenerate, &nabla, 1e-9), Err(Error::NotInjective(_))));
    }

    #[test]
    fn frame_sheaf_examples() {
        let shear = shear_bundle();
        let (p, r) = frame_sheaf(&shear).unwrap();
        assert_eq!(p.cocycle(), shear.cocycle());
        assert_eq!(push_cocycle(&p, &r).unwrap().cocycle(), shear.cocycle());

        let cover = SampledCover::circle_arcs(24, 3).unwrap();
        let one = DMatrix::from_element(1, 1, 1.0);
        let mob: Cocycle = [
            ((R0, R1), crate::principal::constant_transition(&cover, R0, R1, one.clone()).unwrap()),
            ((R1, RegionId(2)), crate::principal::constant_transition(&cover, R1, RegionId(2), one.clone()).unwrap()),
            ((RegionId(2), R0), crate::principal::constant_transition(&cover, RegionId(2), R0, -one).unwrap()),
        ]
        .into_iter()
        .collect();
        let line = VectorSheafData::new(cover, 1, mob).unwrap();
        let (p, _) = frame_sheaf(&line).unwrap();
        assert_eq!(p.group().kind(), crate::groups::GroupKind::GL(1));
        assert_eq!(p.cocycle(), line.cocycle());
    }

    #[test]
    fn frame_roundtrip_examples() {
        let shear = shear_bundle();
        let (fp, _) = frame_sheaf(&shear).unwrap();
        let d = fp
            .complete_connection(R0, &seed(&fp, R0, |t| vec![t.sin(), 0.3, t.cos(), 0.0]), DEFAULT_GLUE_TOL)
            .unwrap();
        let nabla = VectorConnection {
            forms: d.forms.iter().map(|(a, w)| (*a, gl_form_to_matrix(w, 2).unwrap())).collect(),
        };
        let rt = check_frame_roundtrip(&shear, &nabla, 1e-9).unwrap();
        assert!(rt.roundtrip.passes(EXACT_TOL));
        assert!(rt.vector.passes(1e-9) && rt.principal.passes(1e-9));

        let cover = SampledCover::circle_arcs(24, 2).unwrap();
        let gl2 = GroupModel::gl(2).unwrap();
        let flat = push_cocycle(
            &PrincipalSheafData::trivial(cover, gl2.clone()).unwrap(),
            &RepresentationModel::new(gl2, RepresentationKind::Trivial(2)).unwrap(),
        )
        .unwrap();
        let rt = check_frame_roundtrip(&flat, &VectorConnection::zero(&flat).unwrap(), 1e-9).unwrap();
        assert_eq!(rt.max().max, 0.0);

        let mut bad = nabla.clone();
        let mut f = bad.forms[&R1].clone().into_inner();
        f.get_mut(&PointId(13)).unwrap().0[0][(1, 0)] += 1e-3;
        bad.forms.insert(R1, f.into_iter().collect());
        let err = check_frame_roundtrip(&shear, &bad, 1e-9).unwrap_err();
        assert!(matches!(err, Error::Precondition { check: "vector connection", .. }));
    }

    #[test]
    fn mat_mul_covariance_sanity() {
        // G a_b differentiates like a product
        let shear = shear_bundle();
        let g = shear.transition(R0, R1).unwrap();
        let a = MatrixField::from_fn(shear.cover().chart_points_on(R0, &g.domain()).unwrap(), 2, 1, |x| {
            vec![x[0].sin(), x[0].cos()]
        })
        .unwrap();
        let prod = mat_mul(g, &a).unwrap();
        for (q, m) in prod.iter() {
            let t = shear.cover().coord(R0, q).unwrap()[0];
            // d/dt (sin t + t cos t) = cos t + cos t - t sin t
            assert!((m.grad[0][(0, 0)] - (2.0 * t.cos() - t * t.sin())).abs() < 1e-14);
        }
    }
}

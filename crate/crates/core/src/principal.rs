//! Principal sheaves given by a group-valued 1-cocycle, and their connections.
//!
//! Conventions: the entry `g_ab` lives on `U_a ∩ U_b` in the coordinates of
//! chart `a`, and relates natural sections by `s_b = s_a · g_ab`. A local
//! section over `V ⊆ U_a` is stored as the factor `g` in `s = s_a · g`. A
//! connection is stored by its local forms `omega_a = D(s_a)`, each in the
//! coordinates of its own chart.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::cover::{transport_form, PointId, Region, RegionId, SampledCover};
use crate::error::{Error, Result};
use crate::groups::{add_forms, GroupModel, LieCoeffs, LieValuedOneForm};
use crate::jets::{mat_inv, mat_mul, MatJet, MatrixField, PointValue};
use crate::residual::Residual;

pub type Cocycle = BTreeMap<(RegionId, RegionId), MatrixField>;

/// Tolerance for the three cocycle identities.
pub const COCYCLE_TOL: f64 = 1e-12;
/// Default agreement tolerance for data compared across overlaps.
pub const DEFAULT_GLUE_TOL: f64 = 1e-9;

/// Residuals of `g_aa = 1`, `g_ab g_ba = 1` and `g_ab g_bc = g_ac`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CocycleReport {
    pub unit: Residual,
    pub inverse: Residual,
    pub triple: Residual,
}

impl CocycleReport {
    pub fn max(&self) -> Residual {
        [self.unit, self.inverse, self.triple].into_iter().collect()
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max().passes(tol)
    }
}

fn entry(cocycle: &Cocycle, a: RegionId, b: RegionId) -> Result<&MatrixField> {
    cocycle.get(&(a, b)).ok_or(Error::MissingCocycle(a, b))
}

/// Fills in `g_aa = 1` and `g_ba = g_ab^{-1}` where absent, and checks that
/// every entry is defined on its overlap.
pub fn complete_cocycle(
    cover: &SampledCover,
    mut cocycle: Cocycle,
    size: usize,
    det_floor: f64,
) -> Result<Cocycle> {
    for a in cover.region_ids().collect::<Vec<_>>() {
        cocycle
            .entry((a, a))
            .or_insert_with(|| MatrixField::identity_on(cover.region(a).unwrap(), size, cover.dim()));
    }
    for (a, b) in cover.overlapping_pairs() {
        if cocycle.contains_key(&(a, b)) {
            continue;
        }
        let rev = entry(&cocycle, b, a)?;
        let inv = transport_form(cover, &mat_inv(rev, det_floor)?, b, a)?;
        cocycle.insert((a, b), inv);
    }
    for (&(a, b), g) in &cocycle {
        let ov = cover.overlap(a, b)?;
        if g.domain() != ov {
            return Err(Error::DomainMismatch { op: "cocycle entry" });
        }
        if let Some((p, m)) = g.iter().find(|(_, m)| m.shape() != (size, size)) {
            return Err(Error::InvalidElement {
                point: p,
                reason: format!("expected {size}x{size} transition, found {}x{}", m.rows(), m.cols()),
            });
        }
    }
    Ok(cocycle)
}

/// Evaluates the three cocycle identities on every overlap.
pub fn cocycle_report(cover: &SampledCover, cocycle: &Cocycle, size: usize) -> Result<CocycleReport> {
    let dim = cover.dim();
    let ids: Vec<RegionId> = cover.region_ids().collect();
    let mut report = CocycleReport::default();

    for &a in &ids {
        let g = entry(cocycle, a, a)?.restrict(cover.region(a)?)?;
        let unit = MatrixField::identity_on(&g.domain(), size, dim);
        report.unit = report.unit.merge(g.distance(&unit)?);
    }
    for (a, b) in cover.overlapping_pairs() {
        let ov = cover.overlap(a, b)?;
        let gab = entry(cocycle, a, b)?.restrict(&ov)?;
        let gba = transport_form(cover, &entry(cocycle, b, a)?.restrict(&ov)?, b, a)?;
        let prod = mat_mul(&gab, &gba)?;
        report.inverse = report
            .inverse
            .merge(prod.distance(&MatrixField::identity_on(&ov, size, dim))?);
    }
    for &a in &ids {
        for &b in &ids {
            for &c in &ids {
                if a == b || b == c || a == c {
                    continue;
                }
                let tri = cover.triple_overlap(a, b, c)?;
                if tri.is_empty() {
                    continue;
                }
                let gab = entry(cocycle, a, b)?.restrict(&tri)?;
                let gbc = transport_form(cover, &entry(cocycle, b, c)?.restrict(&tri)?, b, a)?;
                let gac = entry(cocycle, a, c)?.restrict(&tri)?;
                report.triple = report.triple.merge(mat_mul(&gab, &gbc)?.distance(&gac)?);
            }
        }
    }
    Ok(report)
}

#[derive(Clone, Debug)]
pub struct PrincipalSheafData {
    cover: SampledCover,
    group: GroupModel,
    cocycle: Cocycle,
}

/// Local section `s = s_chart · factor` over a subset of `U_chart`.
#[derive(Clone, Debug, PartialEq)]
pub struct PrincipalSectionLocal {
    pub chart: RegionId,
    pub factor: MatrixField,
}

/// Connection stored by its local forms `omega_a = D(s_a)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PrincipalConnection {
    pub forms: BTreeMap<RegionId, LieValuedOneForm>,
}

impl PrincipalConnection {
    pub fn form(&self, chart: RegionId) -> Result<&LieValuedOneForm> {
        self.forms.get(&chart).ok_or(Error::MissingForm(chart))
    }
}

impl PrincipalSheafData {
    /// Completes missing unit/inverse entries and checks that every entry
    /// is a group element. The cocycle identities themselves are left to
    /// [`check_cocycle`](Self::check_cocycle).
    pub fn new(cover: SampledCover, group: GroupModel, cocycle: Cocycle) -> Result<Self> {
        let cocycle = complete_cocycle(&cover, cocycle, group.ambient(), group.det_floor())?;
        for g in cocycle.values() {
            group.validate_element(g)?;
        }
        Ok(PrincipalSheafData { cover, group, cocycle })
    }

    /// The trivial principal sheaf: every transition is the unit section.
    pub fn trivial(cover: SampledCover, group: GroupModel) -> Result<Self> {
        let cocycle = cover
            .overlapping_pairs()
            .into_iter()
            .map(|(a, b)| Ok(((a, b), group.unit(&cover.overlap(a, b)?, cover.dim()))))
            .collect::<Result<Cocycle>>()?;
        PrincipalSheafData::new(cover, group, cocycle)
    }

    /// Replaces one entry verbatim.
    pub fn with_entry(mut self, a: RegionId, b: RegionId, g: MatrixField) -> Self {
        self.cocycle.insert((a, b), g);
        self
    }

    pub fn cover(&self) -> &SampledCover {
        &self.cover
    }

    pub fn group(&self) -> &GroupModel {
        &self.group
    }

    pub fn cocycle(&self) -> &Cocycle {
        &self.cocycle
    }

    pub fn transition(&self, a: RegionId, b: RegionId) -> Result<&MatrixField> {
        entry(&self.cocycle, a, b)
    }

    pub fn check_cocycle(&self) -> Result<CocycleReport> {
        cocycle_report(&self.cover, &self.cocycle, self.group.ambient())
    }

    pub fn natural_section(&self, chart: RegionId) -> Result<PrincipalSectionLocal> {
        Ok(PrincipalSectionLocal {
            chart,
            factor: self.group.unit(self.cover.region(chart)?, self.cover.dim()),
        })
    }

    /// Re-expresses `s` relative to the natural section of chart `beta`:
    /// `g_beta = g_{alpha beta}^{-1} g_alpha` on the overlap.
    pub fn section_transition(&self, s: &PrincipalSectionLocal, beta: RegionId) -> Result<PrincipalSectionLocal> {
        let alpha = s.chart;
        if alpha == beta {
            return Ok(s.clone());
        }
        let v = s.factor.domain().intersect(self.cover.region(beta)?);
        if v.is_empty() {
            return Err(Error::EmptyOverlap(alpha, beta));
        }
        let gab = self.transition(alpha, beta)?.restrict(&v)?;
        let factor = mat_mul(&self.group.inverse(&gab)?, &s.factor.restrict(&v)?)?;
        Ok(PrincipalSectionLocal {
            chart: beta,
            factor: transport_form(&self.cover, &factor, alpha, beta)?,
        })
    }

    /// `rho(g_ab^{-1}).omega + mc(g_ab)` on `omega`'s domain, in chart `b`
    /// coordinates.
    pub fn gauge_transform(&self, a: RegionId, b: RegionId, omega: &LieValuedOneForm) -> Result<LieValuedOneForm> {
        let g = self.transition(a, b)?.restrict(&omega.domain())?;
        let ginv = self.group.inverse(&g)?;
        let out = add_forms(&self.group.rho_dot_form(&ginv, omega)?, &self.group.mc(&g)?)?;
        transport_form(&self.cover, &out, a, b)
    }

    /// Worst violation of the local gauge transformation law over all
    /// ordered overlaps.
    pub fn check_connection(&self, d: &PrincipalConnection) -> Result<Residual> {
        for a in self.cover.region_ids() {
            d.form(a)?;
        }
        let mut r = Residual::ZERO;
        for (a, b) in self.cover.overlapping_pairs() {
            let ov = self.cover.overlap(a, b)?;
            let predicted = self.gauge_transform(a, b, &d.form(a)?.restrict(&ov)?)?;
            r = r.merge(d.form(b)?.restrict(&ov)?.distance(&predicted)?);
        }
        Ok(r)
    }

    /// Extends a local form on `U_seed` to a connection by propagating the
    /// gauge law breadth-first (lowest region id first). Points of a chart
    /// not constrained by an already completed neighbour get the zero form.
    pub fn complete_connection(
        &self,
        seed_chart: RegionId,
        seed: &LieValuedOneForm,
        tol: f64,
    ) -> Result<PrincipalConnection> {
        let home = self.cover.region(seed_chart)?;
        if seed.domain() != *home {
            return Err(Error::DomainMismatch { op: "complete_connection" });
        }
        let mut forms = BTreeMap::new();
        forms.insert(seed_chart, seed.clone());
        let mut visited = BTreeSet::from([seed_chart]);
        let mut queue = VecDeque::from([seed_chart]);
        while let Some(cur) = queue.pop_front() {
            for nb in self.cover.neighbors(cur)? {
                if !visited.insert(nb) {
                    continue;
                }
                let form = self.propagate_into(&forms, nb, tol)?;
                forms.insert(nb, form);
                queue.push_back(nb);
            }
        }
        if let Some(missing) = self.cover.region_ids().find(|r| !forms.contains_key(r)) {
            return Err(Error::Disconnected(missing));
        }
        let conn = PrincipalConnection { forms };
        let r = self.check_connection(&conn)?;
        if !r.passes(tol) {
            return Err(Error::CycleInconsistency {
                chart: seed_chart,
                point: r.point.unwrap_or(PointId(0)),
                residual: r.max,
            });
        }
        Ok(conn)
    }

    fn propagate_into(
        &self,
        done: &BTreeMap<RegionId, LieValuedOneForm>,
        target: RegionId,
        tol: f64,
    ) -> Result<LieValuedOneForm> {
        let region = self.cover.region(target)?;
        let mut values: BTreeMap<PointId, LieCoeffs> = BTreeMap::new();
        for (&src, form) in done {
            let ov = self.cover.overlap(src, target)?;
            if ov.is_empty() {
                continue;
            }
            let moved = self.gauge_transform(src, target, &form.restrict(&ov)?)?;
            for (p, v) in moved.iter() {
                match values.get(&p) {
                    Some(existing) => {
                        let residual = existing.distance(v);
                        if !(residual <= tol) {
                            return Err(Error::CycleInconsistency {
                                chart: target,
                                point: p,
                                residual,
                            });
                        }
                    }
                    None => {
                        values.insert(p, v.clone());
                    }
                }
            }
        }
        let zero = LieCoeffs::zeros(self.cover.dim(), self.group.lie_dim());
        Ok(region
            .iter()
            .map(|p| (p, values.remove(&p).unwrap_or_else(|| zero.clone())))
            .collect())
    }

    /// `D(s_a · g) = rho(g^{-1}).omega_a + mc(g)`, in chart `a` coordinates.
    pub fn evaluate_connection(&self, d: &PrincipalConnection, s: &PrincipalSectionLocal) -> Result<LieValuedOneForm> {
        let omega = d.form(s.chart)?.restrict(&s.factor.domain())?;
        let ginv = self.group.inverse(&s.factor)?;
        add_forms(&self.group.rho_dot_form(&ginv, &omega)?, &self.group.mc(&s.factor)?)
    }
}

impl PrincipalSectionLocal {
    /// The right action `s · h`.
    pub fn act(&self, group: &GroupModel, h: &MatrixField) -> Result<PrincipalSectionLocal> {
        Ok(PrincipalSectionLocal {
            chart: self.chart,
            factor: group.group_mul(&self.factor, h)?,
        })
    }

    pub fn domain(&self) -> Region {
        self.factor.domain()
    }
}

/// Builds the coboundary cocycle `g_ab = h_a h_b^{-1}` from per-chart
/// potentials; the potentials must be given in a shared coordinate.
pub fn coboundary(
    cover: &SampledCover,
    potentials: &BTreeMap<RegionId, MatrixField>,
    det_floor: f64,
) -> Result<Cocycle> {
    let mut out = Cocycle::new();
    for (a, b) in cover.overlapping_pairs() {
        let ov = cover.overlap(a, b)?;
        let ha = potentials.get(&a).ok_or(Error::MissingCocycle(a, b))?.restrict(&ov)?;
        let hb = potentials.get(&b).ok_or(Error::MissingCocycle(a, b))?.restrict(&ov)?;
        out.insert((a, b), mat_mul(&ha, &mat_inv(&hb, det_floor)?)?);
    }
    Ok(out)
}

/// Convenience for tests and scenarios: a constant transition on an overlap.
pub fn constant_transition(cover: &SampledCover, a: RegionId, b: RegionId, value: nalgebra::DMatrix<f64>) -> Result<MatrixField> {
    let dim = cover.dim();
    Ok(cover
        .overlap(a, b)?
        .iter()
        .map(|p| (p, MatJet::constant(value.clone(), dim)))
        .collect())
}

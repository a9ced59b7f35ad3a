//! Verification suites over a scenario and the resulting report.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::scenario::{Model, Scenario};
use super::FrontendError;
use crate::associated::{
    chart_scalar, check_lie_type, check_representation, evaluate_section_glued, evaluate_tensorial, push_cocycle,
    section_to_tensorial, tensorial_to_section, AssociatedSection, REPRESENTATION_TOL, LIE_TYPE_TOL,
};
use crate::catalog;
use crate::cover::{PointId, RegionId, SampledCover};
use crate::error::Error;
use crate::jets::{mat_mul, Jet};
use crate::principal::{PrincipalConnection, PrincipalSectionLocal, COCYCLE_TOL};
use crate::residual::Residual;
use crate::vconn::{
    check_frame_roundtrip, check_leibniz_koszul, check_vector_connection, induce_connection, nabla_chart_agreement,
    pull_back_connection, VectorConnection, EXACT_TOL,
};

const CROSSED_HOM_TOL: f64 = 1e-9;
const PUSH_TOL: f64 = 1e-10;
const TENSORIAL_TOL: f64 = 1e-10;
const RANDOM_SEED: u64 = 0x5eed_5eed;
const RANDOM_TRIALS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Suite {
    Cocycle,
    Liehom,
    Connection,
    Roundtrip,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Cocycle, Suite::Liehom, Suite::Connection, Suite::Roundtrip];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Cocycle => "cocycle",
            Suite::Liehom => "liehom",
            Suite::Connection => "connection",
            Suite::Roundtrip => "roundtrip",
        }
    }
}

/// Selected suites; `all`, `none` or a comma-separated list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckSet(pub BTreeSet<Suite>);

impl CheckSet {
    pub fn all() -> Self {
        CheckSet(Suite::ALL.into_iter().collect())
    }

    pub fn none() -> Self {
        CheckSet(BTreeSet::new())
    }

    pub fn contains(&self, s: Suite) -> bool {
        self.0.contains(&s)
    }
}

impl FromStr for CheckSet {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = BTreeSet::new();
        for part in s.split(',').map(str::trim) {
            match part {
                "all" => out.extend(Suite::ALL),
                "none" | "" => {}
                other => {
                    let suite = Suite::ALL
                        .into_iter()
                        .find(|x| x.name() == other)
                        .ok_or_else(|| format!("unknown suite `{other}` (expected all, none, cocycle, liehom, connection, roundtrip)"))?;
                    out.insert(suite);
                }
            }
        }
        Ok(CheckSet(out))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skip => "skip",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub name: &'static str,
    pub status: Status,
    pub residual: Option<f64>,
    pub point: Option<PointId>,
    pub tolerance: f64,
    pub note: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub scenario: String,
    pub entries: Vec<Entry>,
}

fn fmt_residual(r: Option<f64>) -> String {
    r.map_or_else(|| "-".to_string(), |v| format!("{v:.6e}"))
}

fn fmt_point(p: Option<PointId>) -> String {
    p.map_or_else(|| "-".to_string(), |p| p.0.to_string())
}

impl Report {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.status != Status::Fail)
    }

    pub fn failures(&self) -> usize {
        self.entries.iter().filter(|e| e.status == Status::Fail).count()
    }

    pub fn get(&self, name: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// Aligned table for terminals.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenario: {}", self.scenario);
        let _ = writeln!(
            out,
            "{:<18} {:<6} {:>14} {:>14} {:>6}  note",
            "check", "status", "residual", "tolerance", "point"
        );
        for e in &self.entries {
            let line = format!(
                "{:<18} {:<6} {:>14} {:>14} {:>6}  {}",
                e.name,
                e.status,
                fmt_residual(e.residual),
                format!("{:.6e}", e.tolerance),
                fmt_point(e.point),
                e.note.as_deref().unwrap_or("")
            );
            let _ = writeln!(out, "{}", line.trim_end());
        }
        let _ = writeln!(
            out,
            "{} checks, {} failed",
            self.entries.len(),
            self.failures()
        );
        out
    }

    /// Flat `key = value` lines.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenario = {}", self.scenario);
        for e in &self.entries {
            let _ = writeln!(out, "{}.status = {}", e.name, e.status);
            let _ = writeln!(out, "{}.residual = {}", e.name, fmt_residual(e.residual));
            let _ = writeln!(out, "{}.tolerance = {:.6e}", e.name, e.tolerance);
            let _ = writeln!(out, "{}.worst_point = {}", e.name, fmt_point(e.point));
        }
        out
    }
}

struct Runner {
    report: Report,
    strict: bool,
    halted: bool,
    blocked: Option<String>,
}

impl Runner {
    fn push(&mut self, name: &'static str, tolerance: f64, outcome: Result<Residual, Error>) {
        let entry = if self.halted {
            Entry {
                name,
                status: Status::Skip,
                residual: None,
                point: None,
                tolerance,
                note: Some("not run after an earlier failure".into()),
            }
        } else if let Some(reason) = &self.blocked {
            Entry {
                name,
                status: Status::Skip,
                residual: None,
                point: None,
                tolerance,
                note: Some(reason.clone()),
            }
        } else {
            match outcome {
                Ok(r) => Entry {
                    name,
                    status: if r.passes(tolerance) { Status::Pass } else { Status::Fail },
                    residual: Some(r.max),
                    point: r.point,
                    tolerance,
                    note: None,
                },
                Err(e) => Entry {
                    name,
                    status: Status::Fail,
                    residual: None,
                    point: error_point(&e),
                    tolerance,
                    note: Some(e.to_string()),
                },
            }
        };
        if entry.status == Status::Fail && self.strict {
            self.halted = true;
        }
        self.report.entries.push(entry);
    }

    /// Runs `f` only when its result will be recorded.
    fn check(&mut self, name: &'static str, tolerance: f64, f: impl FnOnce() -> Result<Residual, Error>) {
        let outcome = if self.halted || self.blocked.is_some() {
            Ok(Residual::ZERO)
        } else {
            f()
        };
        self.push(name, tolerance, outcome);
    }
}

fn error_point(e: &Error) -> Option<PointId> {
    match e {
        Error::Singular { point, .. }
        | Error::NonFinite { point }
        | Error::NotContained { point }
        | Error::OverlapMismatch { point, .. }
        | Error::ExpansionResidual { point, .. }
        | Error::LeavesSpan { point, .. }
        | Error::InvalidElement { point, .. }
        | Error::CycleInconsistency { point, .. }
        | Error::NotInImage { point, .. } => Some(*point),
        _ => None,
    }
}

/// Everything the later suites share, computed once.
struct Context<'a> {
    scenario: &'a Scenario,
    model: Model,
    whole: SampledCover,
}

impl Context<'_> {
    fn connection(&self) -> Result<PrincipalConnection, Error> {
        self.scenario.connection(&self.model)
    }

    fn induced(&self) -> Result<VectorConnection, Error> {
        let m = &self.model;
        induce_connection(&m.principal, &m.representation, &self.connection()?, self.scenario.tolerances.glue)
    }

    fn elements(&self) -> Result<Vec<crate::jets::MatrixField>, Error> {
        catalog::elements(self.model.principal.group(), &self.whole.chart_points(RegionId(0))?)
    }

    /// Random section defined on the first chart and carried to its
    /// neighbours.
    fn random_section(&self, rng: &mut ChaCha8Rng) -> Result<AssociatedSection, Error> {
        let e = &self.model.vector;
        let chart = RegionId(0);
        let pts = e.cover().chart_points(chart)?;
        let a = catalog::random_vector(e.rank(), &pts, rng)?;
        AssociatedSection::from_chart(e, chart, a)
    }
}

fn max_of(items: impl IntoIterator<Item = Result<Residual, Error>>) -> Result<Residual, Error> {
    let mut r = Residual::ZERO;
    for item in items {
        r = r.merge(item?);
    }
    Ok(r)
}

/// Runs the selected suites. With `strict`, checks after the first failure
/// are reported as skipped.
pub fn run_checks(scenario: &Scenario, which: &CheckSet, strict: bool) -> Result<Report, FrontendError> {
    let mut run = Runner {
        report: Report {
            scenario: scenario.name.clone(),
            entries: Vec::new(),
        },
        strict,
        halted: false,
        blocked: None,
    };
    if which.0.is_empty() {
        return Ok(run.report);
    }
    let model = scenario.build()?;
    let whole = SampledCover::circle(scenario.points, &[(0, scenario.points)]).map_err(|e| FrontendError::Invalid {
        line: None,
        path: "space".into(),
        message: e.to_string(),
    })?;
    let ctx = Context { scenario, model, whole };
    let glue = scenario.tolerances.glue;

    let cocycle = ctx.model.principal.check_cocycle();
    let cocycle_ok = matches!(&cocycle, Ok(r) if r.passes(COCYCLE_TOL));
    if which.contains(Suite::Cocycle) {
        let c = cocycle.clone();
        run.push("cocycle.unit", COCYCLE_TOL, c.clone().map(|r| r.unit));
        run.push("cocycle.inverse", COCYCLE_TOL, c.clone().map(|r| r.inverse));
        run.push("cocycle.triple", COCYCLE_TOL, c.map(|r| r.triple));
    }
    if !cocycle_ok {
        run.blocked = Some("cocycle check failed".into());
    }
    if which.contains(Suite::Cocycle) {
        run.check("lemma1.push", PUSH_TOL, || {
            let e = push_cocycle(&ctx.model.principal, &ctx.model.representation)?;
            Ok(e.check_cocycle()?.max())
        });
    }

    if which.contains(Suite::Liehom) {
        let r = &ctx.model.representation;
        let rep = ctx
            .elements()
            .and_then(|els| {
                let pairs: Vec<_> = els.iter().flat_map(|a| els.iter().map(move |b| (a.clone(), b.clone()))).collect();
                check_representation(r, &pairs)
            });
        run.check("liehom.rep.hom", REPRESENTATION_TOL, || rep.clone().map(|x| x.homomorphism));
        run.check("liehom.rep.unit", REPRESENTATION_TOL, || rep.clone().map(|x| x.unit));
        let lie = ctx.elements().and_then(|mut els| {
            els.extend(ctx.model.principal.cocycle().values().cloned());
            check_lie_type(r, &els)
        });
        run.check("liehom.def1.mc", LIE_TYPE_TOL, || lie.clone().map(|x| x.mc));
        run.check("liehom.def1.rho", LIE_TYPE_TOL, || lie.clone().map(|x| x.rho));
    }

    if which.contains(Suite::Connection) {
        run.check("crossedhom.law", CROSSED_HOM_TOL, || {
            let els = ctx.elements()?;
            let g = ctx.model.principal.group();
            max_of(els.iter().flat_map(|s| els.iter().map(move |t| g.check_logarithmic_rule(s, t))))
        });
        run.check("connection.eq7", glue, || {
            let d = ctx.connection()?;
            ctx.model.principal.check_connection(&d)
        });
        run.check("induced.eq10", glue, || check_vector_connection(&ctx.model.vector, &ctx.induced()?));
        run.check("nabla.agreement", glue, || {
            let nabla = ctx.induced()?;
            let mut rng = ChaCha8Rng::seed_from_u64(RANDOM_SEED);
            max_of((0..RANDOM_TRIALS).map(|_| {
                let sigma = ctx.random_section(&mut rng)?;
                nabla_chart_agreement(&ctx.model.vector, &nabla, &sigma, glue)
            }))
        });
        run.check("koszul.eq8", EXACT_TOL, || {
            let nabla = ctx.induced()?;
            let mut rng = ChaCha8Rng::seed_from_u64(RANDOM_SEED + 1);
            let e = &ctx.model.vector;
            max_of((0..RANDOM_TRIALS).map(|_| {
                let sigma = ctx.random_section(&mut rng)?;
                let poly = catalog::TrigPoly::random(&mut rng);
                let a = chart_scalar(e.cover(), |x| &poly.eval(&x[0]).scale(2.0) + &Jet::constant(0.5, x[0].dim()))?;
                check_leibniz_koszul(e, &nabla, &a, &sigma, glue)
            }))
        });
    }

    if which.contains(Suite::Roundtrip) {
        let p = &ctx.model.principal;
        let r = &ctx.model.representation;
        let e = &ctx.model.vector;
        run.check("thm3.roundtrip", EXACT_TOL, || {
            let mut rng = ChaCha8Rng::seed_from_u64(RANDOM_SEED + 2);
            max_of((0..RANDOM_TRIALS).map(|_| {
                let sigma = ctx.random_section(&mut rng)?;
                let f = section_to_tensorial(e, &sigma, glue)?;
                let back = tensorial_to_section(p, r, &f, glue)?;
                let f2 = section_to_tensorial(e, &back, glue)?;
                Ok(back.distance(&sigma)?.merge(crate::associated::chart_map_distance(&f2.values, &f.values)?))
            }))
        });
        run.check("thm3.tensorial", TENSORIAL_TOL, || {
            let mut rng = ChaCha8Rng::seed_from_u64(RANDOM_SEED + 3);
            let g = p.group();
            max_of((0..RANDOM_TRIALS).map(|_| {
                let sigma = ctx.random_section(&mut rng)?;
                let f = section_to_tensorial(e, &sigma, glue)?;
                let chart = RegionId(0);
                let pts = p.cover().chart_points(chart)?;
                let s = PrincipalSectionLocal {
                    chart,
                    factor: catalog::random_element(g, &pts, &mut rng)?,
                };
                let h = catalog::random_element(g, &pts, &mut rng)?;
                let at_s = evaluate_tensorial(p, r, &f, &s)?;
                let lhs = evaluate_tensorial(p, r, &f, &s.act(g, &h)?)?;
                let rhs = mat_mul(&r.phi(&g.inverse(&h)?)?, &at_s)?;
                let glued = evaluate_section_glued(p, r, &sigma, &s, TENSORIAL_TOL)?;
                Ok(lhs.distance(&rhs)?.merge(glued.distance(&at_s)?))
            }))
        });
        run.check("cor1.roundtrip", EXACT_TOL, || {
            let d = ctx.connection()?;
            let nabla = induce_connection(p, r, &d, glue)?;
            let back = pull_back_connection(r, &nabla, glue)?;
            let again = induce_connection(p, r, &back, glue)?;
            Ok(crate::associated::chart_map_distance(&back.forms, &d.forms)?.merge(again.distance(&nabla)?))
        });
        run.check("cor2.roundtrip", EXACT_TOL, || {
            let nabla = ctx.induced()?;
            Ok(check_frame_roundtrip(e, &nabla, glue)?.roundtrip)
        });
    }
    Ok(run.report)
}

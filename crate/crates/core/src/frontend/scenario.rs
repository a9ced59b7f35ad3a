//! Line-oriented scenario files.
//!
//! ```text
//! name = mobius
//! [space]
//! points = 24
//! region 0 = 0..9
//! region 1 = 8..17
//! region 2 = 16..1        # wraps around
//! [group]
//! kind = gl(1)
//! [cocycle 2 0]
//! row = -1
//! [representation]
//! name = gl1_diag_powers(1,2)
//! [connection 0]
//! coeffs = 0.3*sin(t)
//! [tolerances]
//! glue = 1e-9
//! ```
//!
//! Matrices are given by one `row = e; e; ..` line per row. Missing
//! diagonal and reverse cocycle entries are filled in from the given ones.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;

use super::expr::{parse_expr, Expr};
use super::FrontendError;
use crate::associated::{push_cocycle, RepresentationKind, RepresentationModel, VectorSheafData};
use crate::cover::{RegionId, SampledCover};
use crate::groups::{GroupKind, GroupModel, LieCoeffs, LieValuedOneForm, EXPANSION_TOL};
use crate::jets::{Jet, MatJet, MatrixField, DEFAULT_DET_FLOOR};
use crate::principal::{Cocycle, PrincipalConnection, PrincipalSheafData, DEFAULT_GLUE_TOL};

#[derive(Clone, Debug, PartialEq)]
pub struct Tolerances {
    pub glue: f64,
    pub det_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            glue: DEFAULT_GLUE_TOL,
            det_floor: DEFAULT_DET_FLOOR,
        }
    }
}

/// Seed form on one chart, by Lie coefficients or by its matrix.
#[derive(Clone, Debug, PartialEq)]
pub enum SeedForm {
    Coeffs(Vec<Expr>),
    Matrix(Vec<Vec<Expr>>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeedConnection {
    pub chart: RegionId,
    pub form: SeedForm,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub points: usize,
    /// Inclusive index ranges `first..last`, wrapping when `last < first`.
    pub regions: BTreeMap<RegionId, (usize, usize)>,
    pub group: GroupKind,
    pub cocycle: BTreeMap<(RegionId, RegionId), Vec<Vec<Expr>>>,
    pub representation: RepresentationKind,
    pub connection: Option<SeedConnection>,
    pub tolerances: Tolerances,
}

/// Geometric data built from a scenario.
#[derive(Clone, Debug)]
pub struct Model {
    pub principal: PrincipalSheafData,
    pub representation: RepresentationModel,
    pub vector: VectorSheafData,
    pub seed_chart: RegionId,
    pub seed: LieValuedOneForm,
}

fn invalid(line: usize, path: impl Into<String>, message: impl Into<String>) -> FrontendError {
    FrontendError::Invalid {
        line: Some(line),
        path: path.into(),
        message: message.into(),
    }
}

fn invalid_at(path: impl Into<String>, message: impl Into<String>) -> FrontendError {
    FrontendError::Invalid {
        line: None,
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Section {
    Top,
    Space,
    Group,
    Cocycle(RegionId, RegionId),
    Representation,
    Connection(RegionId),
    Tolerances,
}

fn parse_region_id(s: &str, line: usize, path: &str) -> Result<RegionId, FrontendError> {
    s.trim()
        .parse::<usize>()
        .map(RegionId)
        .map_err(|_| invalid(line, path, format!("`{}` is not a region index", s.trim())))
}

fn parse_header(body: &str, line: usize) -> Result<Section, FrontendError> {
    let words: Vec<&str> = body.split_whitespace().collect();
    let path = format!("[{body}]");
    match words.as_slice() {
        ["space"] => Ok(Section::Space),
        ["group"] => Ok(Section::Group),
        ["representation"] => Ok(Section::Representation),
        ["tolerances"] => Ok(Section::Tolerances),
        ["cocycle", a, b] => Ok(Section::Cocycle(
            parse_region_id(a, line, &path)?,
            parse_region_id(b, line, &path)?,
        )),
        ["connection", a] => Ok(Section::Connection(parse_region_id(a, line, &path)?)),
        _ => Err(invalid(line, path, "unknown section")),
    }
}

fn parse_row(value: &str, line: usize, path: &str) -> Result<Vec<Expr>, FrontendError> {
    value
        .split(';')
        .enumerate()
        .map(|(j, part)| {
            parse_expr(part).map_err(|e| invalid(line, format!("{path}[{j}]"), e.to_string()))
        })
        .collect()
}

fn parse_number(value: &str, line: usize, path: &str) -> Result<f64, FrontendError> {
    match value.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err(invalid(line, path, format!("expected a positive number, found `{value}`"))),
    }
}

fn parse_range(value: &str, line: usize, path: &str) -> Result<(usize, usize), FrontendError> {
    let (a, b) = value
        .split_once("..")
        .ok_or_else(|| invalid(line, path, format!("expected `first..last`, found `{value}`")))?;
    let idx = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| invalid(line, path, format!("`{}` is not a point index", s.trim())))
    };
    Ok((idx(a)?, idx(b)?))
}

impl Scenario {
    pub fn parse(src: &str, default_name: &str) -> Result<Scenario, FrontendError> {
        let mut name = default_name.to_string();
        let mut points = None;
        let mut regions = BTreeMap::new();
        let mut group = None;
        let mut cocycle: BTreeMap<(RegionId, RegionId), Vec<Vec<Expr>>> = BTreeMap::new();
        let mut representation = None;
        let mut connection: Option<SeedConnection> = None;
        let mut tolerances = Tolerances::default();
        let mut section = Section::Top;
        let mut seen_sections = Vec::new();

        for (idx, raw) in src.lines().enumerate() {
            let line = idx + 1;
            let text = raw.split('#').next().unwrap_or("").trim();
            if text.is_empty() {
                continue;
            }
            if let Some(body) = text.strip_prefix('[') {
                let body = body
                    .strip_suffix(']')
                    .ok_or_else(|| invalid(line, text, "unterminated section header"))?;
                section = parse_header(body.trim(), line)?;
                if seen_sections.contains(&section) {
                    return Err(invalid(line, text, "section appears twice"));
                }
                seen_sections.push(section);
                match section {
                    Section::Cocycle(a, b) => {
                        cocycle.insert((a, b), Vec::new());
                    }
                    Section::Connection(a) => {
                        if connection.is_some() {
                            return Err(invalid(line, text, "only one seed connection may be given"));
                        }
                        connection = Some(SeedConnection {
                            chart: a,
                            form: SeedForm::Matrix(Vec::new()),
                        });
                    }
                    _ => {}
                }
                continue;
            }
            let (key, value) = text
                .split_once('=')
                .ok_or_else(|| invalid(line, text, "expected `key = value`"))?;
            let key = key.trim();
            let value = value.trim();
            match section {
                Section::Top => match key {
                    "name" => name = value.to_string(),
                    _ => return Err(invalid(line, key, "unknown key outside a section")),
                },
                Section::Space => {
                    if key == "points" {
                        let n = value
                            .parse::<usize>()
                            .ok()
                            .filter(|n| *n > 0)
                            .ok_or_else(|| invalid(line, "space.points", format!("expected a positive integer, found `{value}`")))?;
                        points = Some(n);
                    } else if let Some(id) = key.strip_prefix("region") {
                        let path = format!("space.{key}");
                        let id = parse_region_id(id, line, &path)?;
                        if regions.insert(id, parse_range(value, line, &path)?).is_some() {
                            return Err(invalid(line, path, "region defined twice"));
                        }
                    } else {
                        return Err(invalid(line, format!("space.{key}"), "unknown key"));
                    }
                }
                Section::Group => match key {
                    "kind" => {
                        group = Some(
                            value
                                .parse::<GroupKind>()
                                .map_err(|e| invalid(line, "group.kind", e.to_string()))?,
                        )
                    }
                    _ => return Err(invalid(line, format!("group.{key}"), "unknown key")),
                },
                Section::Cocycle(a, b) => {
                    let path = format!("cocycle {a} {b}");
                    if key != "row" {
                        return Err(invalid(line, format!("{path}.{key}"), "unknown key"));
                    }
                    let rows = cocycle.get_mut(&(a, b)).expect("inserted with header");
                    let row_path = format!("{path}.row[{}]", rows.len());
                    rows.push(parse_row(value, line, &row_path)?);
                }
                Section::Representation => match key {
                    "name" => {
                        representation = Some(
                            value
                                .parse::<RepresentationKind>()
                                .map_err(|e| invalid(line, "representation.name", e.to_string()))?,
                        )
                    }
                    _ => return Err(invalid(line, format!("representation.{key}"), "unknown key")),
                },
                Section::Connection(a) => {
                    let path = format!("connection {a}");
                    let seed = connection.as_mut().expect("inserted with header");
                    match (key, &mut seed.form) {
                        ("coeffs", SeedForm::Matrix(rows)) if rows.is_empty() => {
                            seed.form = SeedForm::Coeffs(parse_row(value, line, &format!("{path}.coeffs"))?);
                        }
                        ("row", SeedForm::Matrix(rows)) => {
                            let row_path = format!("{path}.row[{}]", rows.len());
                            rows.push(parse_row(value, line, &row_path)?);
                        }
                        ("coeffs" | "row", _) => {
                            return Err(invalid(line, format!("{path}.{key}"), "give either `coeffs` or `row` lines, not both"))
                        }
                        _ => return Err(invalid(line, format!("{path}.{key}"), "unknown key")),
                    }
                }
                Section::Tolerances => {
                    let path = format!("tolerances.{key}");
                    match key {
                        "glue" => tolerances.glue = parse_number(value, line, &path)?,
                        "det_floor" => tolerances.det_floor = parse_number(value, line, &path)?,
                        _ => return Err(invalid(line, path, "unknown key")),
                    }
                }
            }
        }

        let points = points.ok_or_else(|| invalid_at("space.points", "missing"))?;
        if regions.is_empty() {
            return Err(invalid_at("space.region", "no regions given"));
        }
        for (i, (id, &(a, b))) in regions.iter().enumerate() {
            if id.0 != i {
                return Err(invalid_at(format!("space.region {id}"), "region indices must be 0, 1, 2, .. without gaps"));
            }
            if a >= points || b >= points {
                return Err(invalid_at(format!("space.region {id}"), format!("point index out of range 0..{}", points - 1)));
            }
        }
        let group = group.ok_or_else(|| invalid_at("group.kind", "missing"))?;
        let representation = representation.ok_or_else(|| invalid_at("representation.name", "missing"))?;
        for &(a, b) in cocycle.keys() {
            for r in [a, b] {
                if !regions.contains_key(&r) {
                    return Err(invalid_at(format!("cocycle {a} {b}"), format!("unknown region {r}")));
                }
            }
        }
        if let Some(seed) = &connection {
            if !regions.contains_key(&seed.chart) {
                return Err(invalid_at(format!("connection {}", seed.chart), "unknown region"));
            }
            if matches!(&seed.form, SeedForm::Matrix(rows) if rows.is_empty()) {
                return Err(invalid_at(format!("connection {}", seed.chart), "no `coeffs` or `row` lines"));
            }
        }
        Ok(Scenario {
            name,
            points,
            regions,
            group,
            cocycle,
            representation,
            connection,
            tolerances,
        })
    }

    pub fn load(path: &Path) -> Result<Scenario, FrontendError> {
        let src = std::fs::read_to_string(path).map_err(|e| FrontendError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
        Scenario::parse(&src, stem)
    }

    pub fn cover(&self) -> Result<SampledCover, FrontendError> {
        let n = self.points;
        let arcs: Vec<(usize, usize)> = self
            .regions
            .values()
            .map(|&(a, b)| (a, (b + n - a) % n + 1))
            .collect();
        SampledCover::circle(n, &arcs).map_err(|e| invalid_at("space", e.to_string()))
    }

    /// Evaluates every expression and assembles the sheaves and seed form.
    pub fn build(&self) -> Result<Model, FrontendError> {
        let cover = self.cover()?;
        let group = GroupModel::new(self.group)
            .map_err(|e| invalid_at("group.kind", e.to_string()))?
            .with_det_floor(self.tolerances.det_floor);
        let size = group.ambient();

        let mut cocycle = Cocycle::new();
        for (&(a, b), rows) in &self.cocycle {
            let path = format!("cocycle {a} {b}");
            let ov = cover.overlap(a, b).map_err(|e| invalid_at(&path, e.to_string()))?;
            if ov.is_empty() {
                return Err(invalid_at(&path, "regions do not overlap"));
            }
            check_shape(rows, size, size, &path)?;
            let pts = cover.chart_points_on(a, &ov).map_err(|e| invalid_at(&path, e.to_string()))?;
            let field = pts
                .into_iter()
                .map(|(p, x)| Ok((p, eval_matrix(rows, &Jet::variable(x[0], 1, 0), &path)?)))
                .collect::<Result<MatrixField, FrontendError>>()?;
            cocycle.insert((a, b), field);
        }
        let principal = PrincipalSheafData::new(cover, group.clone(), cocycle)
            .map_err(|e| invalid_at("cocycle", e.to_string()))?;
        let representation = RepresentationModel::new(group.clone(), self.representation.clone())
            .map_err(|e| invalid_at("representation.name", e.to_string()))?;
        let vector =
            push_cocycle(&principal, &representation).map_err(|e| invalid_at("representation.name", e.to_string()))?;

        let (seed_chart, seed) = match &self.connection {
            None => {
                let chart = RegionId(0);
                let region = principal.cover().region(chart).map_err(|e| invalid_at("space", e.to_string()))?;
                (chart, group.zero_form(region, 1))
            }
            Some(s) => (s.chart, self.seed_form(&principal, s)?),
        };
        Ok(Model {
            principal,
            representation,
            vector,
            seed_chart,
            seed,
        })
    }

    fn seed_form(&self, p: &PrincipalSheafData, s: &SeedConnection) -> Result<LieValuedOneForm, FrontendError> {
        let group = p.group();
        let m = group.lie_dim();
        let n = group.ambient();
        let base = format!("connection {}", s.chart);
        let pts = p
            .cover()
            .chart_points(s.chart)
            .map_err(|e| invalid_at(&base, e.to_string()))?;
        pts.into_iter()
            .map(|(pt, x)| {
                let t = Jet::variable(x[0], 1, 0);
                let coeffs = match &s.form {
                    SeedForm::Coeffs(es) => {
                        if es.len() != m {
                            return Err(invalid_at(
                                format!("{base}.coeffs"),
                                format!("expected {m} coefficients for {}, found {}", group.kind(), es.len()),
                            ));
                        }
                        es.iter()
                            .enumerate()
                            .map(|(j, e)| {
                                e.eval_jet(&t)
                                    .map(|v| v.value)
                                    .map_err(|err| invalid_at(format!("{base}.coeffs[{j}]"), format!("{err} at point {pt}")))
                            })
                            .collect::<Result<Vec<f64>, _>>()?
                    }
                    SeedForm::Matrix(rows) => {
                        check_shape(rows, n, n, &base)?;
                        let mat = eval_matrix(rows, &t, &base)?.value;
                        let (c, residual) = group.expand(&mat);
                        if !(residual <= EXPANSION_TOL) {
                            return Err(invalid_at(
                                &base,
                                format!("matrix at point {pt} is not in the Lie algebra of {} (residual {residual:e})", group.kind()),
                            ));
                        }
                        c
                    }
                };
                Ok((pt, LieCoeffs(DMatrix::from_row_slice(1, m, &coeffs))))
            })
            .collect()
    }

    /// Seed connection completed over the whole cover.
    pub fn connection(&self, model: &Model) -> crate::Result<PrincipalConnection> {
        model
            .principal
            .complete_connection(model.seed_chart, &model.seed, self.tolerances.glue)
    }
}

fn check_shape(rows: &[Vec<Expr>], r: usize, c: usize, path: &str) -> Result<(), FrontendError> {
    if rows.len() != r {
        return Err(invalid_at(path, format!("expected {r} rows, found {}", rows.len())));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != c {
            return Err(invalid_at(format!("{path}.row[{i}]"), format!("expected {c} entries, found {}", row.len())));
        }
    }
    Ok(())
}

fn eval_matrix(rows: &[Vec<Expr>], t: &Jet, path: &str) -> Result<MatJet, FrontendError> {
    let entries = rows
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().enumerate().map(move |(j, e)| (i, j, e)))
        .map(|(i, j, e)| {
            e.eval_jet(t)
                .map_err(|err| invalid_at(format!("{path}.row[{i}][{j}]"), format!("{err} at t = {}", t.value)))
        })
        .collect::<Result<Vec<Jet>, _>>()?;
    MatJet::from_jets(rows.len(), rows.first().map_or(0, |r| r.len()), &entries)
        .map_err(|e| invalid_at(path, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MOBIUS: &str = "
        name = strip
        [space]
        points = 24
        region 0 = 0..9
        region 1 = 8..17
        region 2 = 16..1   # wraps
        [group]
        kind = gl(1)
        [cocycle 0 1]
        row = 1
        [cocycle 1 2]
        row = 1
        [cocycle 2 0]
        row = -1
        [representation]
        name = gl1_diag_powers(1,2)
        [connection 0]
        coeffs = 0.3*sin(t)
    ";

    #[test]
    fn parses_and_builds() {
        let s = Scenario::parse(MOBIUS, "x").unwrap();
        assert_eq!(s.name, "strip");
        assert_eq!(s.regions[&RegionId(2)], (16, 1));
        let m = s.build().unwrap();
        assert_eq!(m.principal.cover().region(RegionId(2)).unwrap().len(), 10);
        assert!(m.principal.check_cocycle().unwrap().passes(1e-12));
        // reverse entries filled in
        assert!(m.principal.transition(RegionId(0), RegionId(2)).is_ok());
        assert!(s.connection(&m).is_ok());
    }

    #[test]
    fn matrix_seed_is_expanded() {
        let src = "
            [space]
            points = 12
            region 0 = 0..7
            region 1 = 6..1
            [group]
            kind = so(2)
            [cocycle 0 1]
            row = cos(t); -sin(t)
            row = sin(t); cos(t)
            [representation]
            name = so2_in_gl2
            [connection 0]
            row = 0; -2*t
            row = 2*t; 0
        ";
        let s = Scenario::parse(src, "rot").unwrap();
        assert_eq!(s.name, "rot");
        let m = s.build().unwrap();
        for (p, w) in m.seed.iter() {
            let t = m.principal.cover().coord(RegionId(0), p).unwrap()[0];
            assert!((w.0[(0, 0)] - 2.0 * t).abs() < 1e-15);
        }

        let bad = src.replace("row = 2*t; 0", "row = 2*t; 1");
        let err = Scenario::parse(&bad, "rot").unwrap().build().unwrap_err();
        assert!(err.to_string().contains("connection 0"), "{err}");
    }

    #[test]
    fn validation_errors_name_the_field() {
        let cases = [
            (MOBIUS.replace("kind = gl(1)", "kind = so(3)"), "group.kind"),
            (MOBIUS.replace("row = -1", "row = -1; 2"), "cocycle 2 0.row[0]"),
            (MOBIUS.replace("row = -1", "row = cos("), "cocycle 2 0.row[0][0]"),
            (MOBIUS.replace("points = 24", ""), "space.points"),
            (MOBIUS.replace("region 2 = 16..1", "region 3 = 16..1"), "space.region 3"),
            (MOBIUS.replace("region 2 = 16..1", "region 2 = 16..30"), "space.region 2"),
            (MOBIUS.replace("gl1_diag_powers(1,2)", "so5"), "representation.name"),
            (MOBIUS.replace("coeffs = 0.3*sin(t)", "coeffs = 1; 2"), "connection 0.coeffs"),
            (MOBIUS.replace("[cocycle 1 2]", "[cocycle 1 7]"), "cocycle 1 7"),
            (MOBIUS.replace("[tolerances]", "") + "\n[tolerances]\nglue = -1", "tolerances.glue"),
            (MOBIUS.replace("name = strip", "colour = red"), "colour"),
        ];
        for (src, path) in cases {
            let err = Scenario::parse(&src, "x").and_then(|s| s.build().map(|_| ())).unwrap_err();
            match &err {
                FrontendError::Invalid { path: p, .. } => assert_eq!(p, path, "{err}"),
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn non_overlapping_cocycle_is_rejected() {
        let src = MOBIUS.replace("[cocycle 1 2]", "[cocycle 0 2]\nrow = 1\n[cocycle 1 2]").replace(
            "region 0 = 0..9",
            "region 0 = 2..9",
        );
        let err = Scenario::parse(&src, "x").unwrap().build().unwrap_err();
        assert!(err.to_string().contains("cocycle 0 2"), "{err}");
    }

    #[test]
    fn eval_error_reports_location() {
        let src = MOBIUS.replace("coeffs = 0.3*sin(t)", "coeffs = 1/t");
        let err = Scenario::parse(&src, "x").unwrap().build().unwrap_err();
        assert!(err.to_string().contains("division by zero"), "{err}");
    }
}

//! Reference group elements and seeded random fields on sampled charts.
//!
//! Everything here is a function of the first chart coordinate, evaluated
//! through jets so that gradients are exact.

use nalgebra::DVector;
use rand::Rng;

use crate::cover::{PointId, Region};
use crate::error::Result;
use crate::groups::{GroupKind, GroupModel};
use crate::jets::{Jet, MatJet, MatrixField, ScalarField};

pub type ChartPoints<'a> = [(PointId, &'a DVector<f64>)];

fn k(v: f64, dim: usize) -> Jet {
    Jet::constant(v, dim)
}

fn rotation(a: &Jet) -> Vec<Jet> {
    vec![a.cos(), -&a.sin(), a.sin(), a.cos()]
}

fn diagonal(entries: Vec<Jet>, dim: usize) -> Vec<Jet> {
    let n = entries.len();
    let mut out = vec![k(0.0, dim); n * n];
    for (i, e) in entries.into_iter().enumerate() {
        out[i * n + i] = e;
    }
    out
}

/// Diagonally dominant `n x n` matrix; `diag(i, t)` and `off(i, j, t)` are
/// expected to stay in `[1, 3]` and `[-1, 1]` respectively.
fn dominant(
    n: usize,
    t: &Jet,
    diag: impl Fn(usize, &Jet) -> Jet,
    off: impl Fn(usize, usize, &Jet) -> Jet,
) -> Vec<Jet> {
    let scale = 0.3 / n as f64;
    (0..n * n)
        .map(|r| {
            let (i, j) = (r / n, r % n);
            if i == j {
                diag(i, t)
            } else {
                off(i, j, t).scale(scale)
            }
        })
        .collect()
}

/// Fixed, deterministic elements of `model` sampled on `points`, starting
/// with the unit section.
pub fn elements(model: &GroupModel, points: &ChartPoints<'_>) -> Result<Vec<MatrixField>> {
    let n = model.ambient();
    let sample = |f: &dyn Fn(&Jet) -> Vec<Jet>| {
        MatrixField::from_fn(points.iter().map(|(p, x)| (*p, *x)), n, n, |x| f(&x[0]))
    };
    let region = Region::new(points.iter().map(|(p, _)| *p));
    let dim = points.first().map_or(1, |(_, x)| x.len());
    let mut out = vec![model.unit(&region, dim)];
    match model.kind() {
        GroupKind::GL(_) => {
            let a = |t: &Jet| {
                let d = t.dim();
                dominant(n, t, |i, t| &k(2.0, d) + &(t + &k(i as f64, d)).sin(), |i, j, t| {
                    (&t.scale((i + 1) as f64) + &k(j as f64, d)).cos()
                })
            };
            out.push(sample(&a)?);
            out.push(sample(&|t: &Jet| a(t).into_iter().map(|e| -e).collect())?);
            out.push(sample(&|t: &Jet| {
                let d = t.dim();
                dominant(n, t, |_, t| t.sin().scale(0.3).exp(), |i, j, t| {
                    (&t.scale(2.0) + &k((i * n + j) as f64, d)).sin()
                })
            })?);
            out.push(sample(&|t: &Jet| {
                let d = t.dim();
                dominant(n, t, |i, _| k(1.5 + 0.25 * i as f64, d), |i, j, _| k(((i + 2 * j) % 3) as f64 - 1.0, d))
            })?);
        }
        GroupKind::SO2 => {
            out.push(sample(&|t: &Jet| rotation(t))?);
            out.push(sample(&|t: &Jet| rotation(&(&t.scale(2.0) + &k(0.3, t.dim()))))?);
            out.push(sample(&|t: &Jet| rotation(&t.sin()))?);
            out.push(sample(&|t: &Jet| rotation(&k(0.7, t.dim())))?);
        }
        GroupKind::GL1Positive => {
            out.push(sample(&|t: &Jet| vec![&k(2.0, t.dim()) + &t.sin()])?);
            out.push(sample(&|t: &Jet| vec![t.cos().scale(0.3).exp()])?);
            out.push(sample(&|t: &Jet| vec![&k(1.0, t.dim()) + &t.powi(2).scale(0.1)])?);
            out.push(sample(&|t: &Jet| vec![k(0.5, t.dim())])?);
        }
        GroupKind::DiagonalTorus(_) => {
            out.push(sample(&|t: &Jet| {
                let d = t.dim();
                diagonal(
                    (0..n).map(|i| (t + &k(i as f64, d)).sin().scale(0.2 * (i + 1) as f64).exp()).collect(),
                    d,
                )
            })?);
            out.push(sample(&|t: &Jet| {
                let d = t.dim();
                diagonal((0..n).map(|i| k(1.0 + 0.5 * i as f64, d)).collect(), d)
            })?);
        }
    }
    Ok(out)
}

/// All ordered pairs of [`elements`].
pub fn element_pairs(model: &GroupModel, points: &ChartPoints<'_>) -> Result<Vec<(MatrixField, MatrixField)>> {
    let els = elements(model, points)?;
    Ok(els
        .iter()
        .flat_map(|a| els.iter().map(move |b| (a.clone(), b.clone())))
        .collect())
}

/// Random trigonometric polynomial of degree 2 with `sum |coeff| = 1`, so
/// its values stay in `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct TrigPoly {
    cos: [f64; 3],
    sin: [f64; 3],
}

impl TrigPoly {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut cos = [0.0f64; 3];
        let mut sin = [0.0f64; 3];
        for c in cos.iter_mut().chain(sin[1..].iter_mut()) {
            *c = rng.random_range(-1.0..1.0);
        }
        let norm: f64 = cos.iter().chain(&sin).map(|c: &f64| c.abs()).sum::<f64>().max(1e-3);
        cos.iter_mut().for_each(|c| *c /= norm);
        sin.iter_mut().for_each(|c| *c /= norm);
        TrigPoly { cos, sin }
    }

    pub fn eval(&self, t: &Jet) -> Jet {
        let mut acc = Jet::constant(self.cos[0], t.dim());
        for h in 1..3 {
            let arg = t.scale(h as f64);
            acc = &acc + &(&arg.cos().scale(self.cos[h]) + &arg.sin().scale(self.sin[h]));
        }
        acc
    }
}

pub fn random_scalar<R: Rng + ?Sized>(points: &ChartPoints<'_>, rng: &mut R) -> ScalarField {
    let poly = TrigPoly::random(rng);
    let shift = rng.random_range(-2.0..2.0);
    points
        .iter()
        .map(|(p, x)| {
            let t = Jet::variable(x[0], x.len(), 0);
            (*p, &poly.eval(&t).scale(2.0) + &Jet::constant(shift, x.len()))
        })
        .collect()
}

/// Random `n x 1` jet columns.
pub fn random_vector<R: Rng + ?Sized>(n: usize, points: &ChartPoints<'_>, rng: &mut R) -> Result<MatrixField> {
    let polys: Vec<TrigPoly> = (0..n).map(|_| TrigPoly::random(rng)).collect();
    MatrixField::from_fn(points.iter().map(|(p, x)| (*p, *x)), n, 1, |x| {
        polys.iter().map(|poly| poly.eval(&x[0]).scale(1.5)).collect()
    })
}

/// Random element of `model`, well inside the group.
pub fn random_element<R: Rng + ?Sized>(
    model: &GroupModel,
    points: &ChartPoints<'_>,
    rng: &mut R,
) -> Result<MatrixField> {
    let n = model.ambient();
    let polys: Vec<TrigPoly> = (0..n * n).map(|_| TrigPoly::random(rng)).collect();
    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let kind = model.kind();
    MatrixField::from_fn(points.iter().map(|(p, x)| (*p, *x)), n, n, |x| {
        let t = &x[0];
        let d = t.dim();
        match kind {
            GroupKind::GL(_) => {
                let m = dominant(
                    n,
                    t,
                    |i, t| &k(2.0, d) + &polys[i * n + i].eval(t).scale(0.8),
                    |i, j, t| polys[i * n + j].eval(t).scale(5.0 / 3.0),
                );
                m.into_iter().map(|e| e.scale(sign)).collect()
            }
            GroupKind::SO2 => rotation(&polys[0].eval(t).scale(3.0)),
            GroupKind::GL1Positive => vec![polys[0].eval(t).exp()],
            GroupKind::DiagonalTorus(_) => diagonal((0..n).map(|i| polys[i].eval(t).exp()).collect(), d),
        }
    })
}

/// Constant matrix field, used for cocycles with locally constant entries.
pub fn constant(value: nalgebra::DMatrix<f64>, points: &ChartPoints<'_>) -> MatrixField {
    let dim = points.first().map_or(1, |(_, x)| x.len());
    points
        .iter()
        .map(|(p, _)| (*p, MatJet::constant(value.clone(), dim)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cover::{RegionId, SampledCover};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn catalog_elements_are_valid() {
        let c = SampledCover::circle_arcs(24, 1).unwrap();
        let pts = c.chart_points(RegionId(0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for kind in [
            GroupKind::GL(1),
            GroupKind::GL(2),
            GroupKind::GL(3),
            GroupKind::SO2,
            GroupKind::GL1Positive,
            GroupKind::DiagonalTorus(2),
        ] {
            let model = GroupModel::new(kind).unwrap();
            for g in elements(&model, &pts).unwrap() {
                model.validate_element(&g).unwrap();
                model.mc(&g).unwrap();
            }
            for _ in 0..10 {
                let g = random_element(&model, &pts, &mut rng).unwrap();
                model.validate_element(&g).unwrap();
                model.mc(&g).unwrap();
            }
        }
    }

    #[test]
    fn trig_poly_is_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let p = TrigPoly::random(&mut rng);
            for i in 0..40 {
                let v = p.eval(&Jet::variable(i as f64 * 0.17, 1, 0)).value;
                assert!(v.abs() <= 1.0 + 1e-12);
            }
        }
    }
}

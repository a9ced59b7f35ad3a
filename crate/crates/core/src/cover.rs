//! Finite model of a base space with an open cover.
//!
//! The space is a finite set of sample points. Each region of the cover is a
//! subset of the points carrying its own chart coordinates, and every
//! overlap records the Jacobian `d x_alpha / d x_beta` at its points.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::jets::{mat_distance, Field, PointValue};
use crate::residual::Residual;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PointId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RegionId(pub usize);

impl fmt::Display for PointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for RegionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A set of sample points.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Region {
    points: BTreeSet<PointId>,
}

impl Region {
    pub fn new(points: impl IntoIterator<Item = PointId>) -> Self {
        Region {
            points: points.into_iter().collect(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = PointId> + '_ {
        self.points.iter().copied()
    }

    pub fn contains(&self, p: PointId) -> bool {
        self.points.contains(&p)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn intersect(&self, other: &Region) -> Region {
        Region {
            points: self.points.intersection(&other.points).copied().collect(),
        }
    }

    pub fn is_subset(&self, other: &Region) -> bool {
        self.points.is_subset(&other.points)
    }
}

pub const JACOBIAN_COCYCLE_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct SampledCover {
    dim: usize,
    points: Vec<PointId>,
    regions: BTreeMap<RegionId, Region>,
    coords: BTreeMap<(RegionId, PointId), DVector<f64>>,
    jacobians: BTreeMap<(RegionId, RegionId, PointId), DMatrix<f64>>,
}

#[derive(Debug, Default)]
pub struct CoverBuilder {
    dim: usize,
    points: usize,
    regions: BTreeMap<RegionId, BTreeMap<PointId, DVector<f64>>>,
    jacobians: BTreeMap<(RegionId, RegionId, PointId), DMatrix<f64>>,
    identity_jacobians: bool,
}

impl CoverBuilder {
    pub fn new(dim: usize, points: usize) -> Self {
        CoverBuilder {
            dim,
            points,
            ..Default::default()
        }
    }

    /// Adds a region with chart coordinates for each of its points.
    pub fn region(
        mut self,
        id: RegionId,
        coords: impl IntoIterator<Item = (PointId, DVector<f64>)>,
    ) -> Self {
        self.regions.insert(id, coords.into_iter().collect());
        self
    }

    /// Records `d x_alpha / d x_beta` at `point`. The reverse direction is
    /// filled in with the inverse unless given explicitly.
    pub fn jacobian(mut self, alpha: RegionId, beta: RegionId, point: PointId, jac: DMatrix<f64>) -> Self {
        self.jacobians.insert((alpha, beta, point), jac);
        self
    }

    /// Use the identity for every overlap Jacobian not given explicitly.
    pub fn identity_jacobians(mut self) -> Self {
        self.identity_jacobians = true;
        self
    }

    pub fn build(self) -> Result<SampledCover> {
        let dim = self.dim;
        if dim == 0 {
            return Err(Error::InvalidCover("dimension must be at least 1".into()));
        }
        let points: Vec<PointId> = (0..self.points).map(PointId).collect();
        let mut regions = BTreeMap::new();
        let mut coords = BTreeMap::new();
        let mut covered = BTreeSet::new();
        for (id, pts) in self.regions {
            for (p, x) in pts.iter() {
                if p.0 >= self.points {
                    return Err(Error::InvalidCover(format!("region {id} uses unknown point {p}")));
                }
                if x.len() != dim || x.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidCover(format!(
                        "bad chart coordinate for point {p} in region {id}"
                    )));
                }
                covered.insert(*p);
                coords.insert((id, *p), x.clone());
            }
            regions.insert(id, Region::new(pts.keys().copied()));
        }
        if let Some(p) = points.iter().find(|p| !covered.contains(p)) {
            return Err(Error::InvalidCover(format!("point {p} lies in no region")));
        }

        let mut jacobians = self.jacobians;
        for (&a, ra) in &regions {
            for (&b, rb) in &regions {
                if a == b {
                    continue;
                }
                for p in ra.intersect(rb).iter() {
                    if jacobians.contains_key(&(a, b, p)) {
                        continue;
                    }
                    let jac = match jacobians.get(&(b, a, p)) {
                        Some(rev) => rev.clone().try_inverse().ok_or_else(|| {
                            Error::InvalidCover(format!("singular Jacobian ({b}, {a}) at point {p}"))
                        })?,
                        None if self.identity_jacobians => DMatrix::identity(dim, dim),
                        None => {
                            return Err(Error::MissingJacobian {
                                from: a,
                                to: b,
                                point: p,
                            })
                        }
                    };
                    jacobians.insert((a, b, p), jac);
                }
            }
        }
        for ((a, b, p), jac) in &jacobians {
            if jac.shape() != (dim, dim) {
                return Err(Error::InvalidCover(format!("Jacobian ({a}, {b}) at {p} has wrong shape")));
            }
            if jac.determinant().abs() < crate::jets::DEFAULT_DET_FLOOR {
                return Err(Error::InvalidCover(format!("singular Jacobian ({a}, {b}) at point {p}")));
            }
        }

        let cover = SampledCover {
            dim,
            points,
            regions,
            coords,
            jacobians,
        };
        let r = cover.jacobian_cocycle_residual();
        if !r.passes(JACOBIAN_COCYCLE_TOL) {
            return Err(Error::InvalidCover(format!("Jacobian cocycle violated: {r}")));
        }
        Ok(cover)
    }
}

impl SampledCover {
    pub fn builder(dim: usize, points: usize) -> CoverBuilder {
        CoverBuilder::new(dim, points)
    }

    /// Unit circle sampled at `t_k = 2 pi k / n`, covered by arcs given as
    /// `(first index, number of points)` with wraparound. All charts share
    /// the angle coordinate, so every Jacobian is the identity.
    pub fn circle(n: usize, arcs: &[(usize, usize)]) -> Result<SampledCover> {
        if n == 0 {
            return Err(Error::InvalidCover("circle needs at least one point".into()));
        }
        let mut b = CoverBuilder::new(1, n).identity_jacobians();
        for (i, &(start, len)) in arcs.iter().enumerate() {
            if len == 0 || len > n {
                return Err(Error::InvalidCover(format!("arc {i} has invalid length {len}")));
            }
            let pts = (start..start + len).map(|k| {
                let k = k % n;
                (PointId(k), DVector::from_element(1, circle_angle(k, n)))
            });
            b = b.region(RegionId(i), pts);
        }
        b.build()
    }

    /// `k` arcs of equal stride, adjacent arcs sharing two points.
    pub fn circle_arcs(n: usize, k: usize) -> Result<SampledCover> {
        if k == 0 || n < 3 * k {
            return Err(Error::InvalidCover(format!("cannot cover {n} points by {k} arcs")));
        }
        if k == 1 {
            return SampledCover::circle(n, &[(0, n)]);
        }
        let stride = n / k;
        let arcs: Vec<(usize, usize)> = (0..k)
            .map(|i| {
                let start = i * stride;
                let end = if i + 1 == k { n } else { (i + 1) * stride };
                (start, end - start + 2)
            })
            .collect();
        SampledCover::circle(n, &arcs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[PointId] {
        &self.points
    }

    pub fn region_ids(&self) -> impl Iterator<Item = RegionId> + '_ {
        self.regions.keys().copied()
    }

    pub fn region(&self, id: RegionId) -> Result<&Region> {
        self.regions.get(&id).ok_or(Error::UnknownRegion(id))
    }

    pub fn coord(&self, region: RegionId, point: PointId) -> Option<&DVector<f64>> {
        self.coords.get(&(region, point))
    }

    /// Chart coordinates of every point of `region`.
    pub fn chart_points(&self, region: RegionId) -> Result<Vec<(PointId, &DVector<f64>)>> {
        Ok(self
            .region(region)?
            .iter()
            .map(|p| (p, &self.coords[&(region, p)]))
            .collect())
    }

    /// Chart coordinates of the points of `subset` in chart `region`.
    pub fn chart_points_on(
        &self,
        region: RegionId,
        subset: &Region,
    ) -> Result<Vec<(PointId, &DVector<f64>)>> {
        subset
            .iter()
            .map(|p| {
                self.coords
                    .get(&(region, p))
                    .map(|x| (p, x))
                    .ok_or(Error::NotContained { point: p })
            })
            .collect()
    }

    /// `d x_alpha / d x_beta` at `point`.
    pub fn jacobian(&self, alpha: RegionId, beta: RegionId, point: PointId) -> Option<DMatrix<f64>> {
        if alpha == beta {
            return self
                .regions
                .get(&alpha)
                .filter(|r| r.contains(point))
                .map(|_| DMatrix::identity(self.dim, self.dim));
        }
        self.jacobians.get(&(alpha, beta, point)).cloned()
    }

    /// `U_alpha ∩ U_beta`.
    pub fn overlap(&self, alpha: RegionId, beta: RegionId) -> Result<Region> {
        Ok(self.region(alpha)?.intersect(self.region(beta)?))
    }

    pub fn triple_overlap(&self, a: RegionId, b: RegionId, c: RegionId) -> Result<Region> {
        Ok(self.overlap(a, b)?.intersect(self.region(c)?))
    }

    /// Ordered pairs of distinct regions with non-empty overlap.
    pub fn overlapping_pairs(&self) -> Vec<(RegionId, RegionId)> {
        let mut out = Vec::new();
        for (&a, ra) in &self.regions {
            for (&b, rb) in &self.regions {
                if a != b && !ra.intersect(rb).is_empty() {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// Regions meeting `alpha`, in ascending order.
    pub fn neighbors(&self, alpha: RegionId) -> Result<Vec<RegionId>> {
        let ra = self.region(alpha)?;
        Ok(self
            .regions
            .iter()
            .filter(|(&b, rb)| b != alpha && !ra.intersect(rb).is_empty())
            .map(|(&b, _)| b)
            .collect())
    }

    /// Worst deviation of `J_ab J_bc = J_ac` over triple overlaps.
    pub fn jacobian_cocycle_residual(&self) -> Residual {
        let mut r = Residual::ZERO;
        let ids: Vec<RegionId> = self.region_ids().collect();
        for &a in &ids {
            for &b in &ids {
                for &c in &ids {
                    let Ok(tri) = self.triple_overlap(a, b, c) else {
                        continue;
                    };
                    for p in tri.iter() {
                        let (Some(ab), Some(bc), Some(ac)) = (
                            self.jacobian(a, b, p),
                            self.jacobian(b, c, p),
                            self.jacobian(a, c, p),
                        ) else {
                            r.observe(p, f64::INFINITY);
                            continue;
                        };
                        r.observe(p, mat_distance(&(ab * bc), &ac));
                    }
                }
            }
        }
        r
    }
}

/// Angle of sample `k` out of `n`.
pub fn circle_angle(k: usize, n: usize) -> f64 {
    2.0 * PI * k as f64 / n as f64
}

/// Restriction `f|_r`.
pub fn restrict<T: Clone>(f: &Field<T>, r: &Region) -> Result<Field<T>> {
    f.restrict(r)
}

/// Glues pieces that agree on overlaps into a single field on the union.
///
/// Pieces must be expressed in common coordinates. Each point takes the value
/// of the lowest-id piece containing it.
pub fn glue<T: PointValue>(pieces: &BTreeMap<RegionId, Field<T>>, tol: f64) -> Result<Field<T>> {
    let mut out: BTreeMap<PointId, (RegionId, T)> = BTreeMap::new();
    for (&id, piece) in pieces {
        for (p, v) in piece.iter() {
            match out.get(&p) {
                Some((first, existing)) => {
                    let residual = existing.distance(v);
                    if residual.is_nan() || residual > tol {
                        return Err(Error::OverlapMismatch {
                            alpha: *first,
                            beta: id,
                            point: p,
                            residual,
                        });
                    }
                }
                None => {
                    out.insert(p, (id, v.clone()));
                }
            }
        }
    }
    Ok(out.into_iter().map(|(p, (_, v))| (p, v)).collect())
}

/// Re-expresses chart-`from` data in the coordinates of chart `to`.
pub fn transport_form<T: PointValue>(
    cover: &SampledCover,
    f: &Field<T>,
    from: RegionId,
    to: RegionId,
) -> Result<Field<T>> {
    if from == to {
        return Ok(f.clone());
    }
    f.try_map(|p, v| {
        let jac = cover
            .jacobian(from, to, p)
            .ok_or(Error::MissingJacobian { from, to, point: p })?;
        Ok(v.pull_back(&jac))
    })
}

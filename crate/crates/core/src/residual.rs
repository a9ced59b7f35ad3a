use std::fmt;

use crate::cover::PointId;

/// Worst-case deviation of an identity over a set of sample points.
///
/// Maxima are reduced in a fixed order: a strictly larger value replaces the
/// current one, ties keep the earlier point. NaN counts as larger than
/// everything so that a poisoned computation can never pass.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Residual {
    pub max: f64,
    pub point: Option<PointId>,
}

impl Residual {
    pub const ZERO: Residual = Residual {
        max: 0.0,
        point: None,
    };

    pub fn at(point: PointId, value: f64) -> Self {
        Residual {
            max: value,
            point: Some(point),
        }
    }

    pub fn merge(self, other: Residual) -> Residual {
        if exceeds(other.max, self.max) {
            other
        } else {
            self
        }
    }

    pub fn observe(&mut self, point: PointId, value: f64) {
        *self = self.merge(Residual::at(point, value));
    }

    pub fn passes(&self, tolerance: f64) -> bool {
        !self.max.is_nan() && self.max <= tolerance
    }
}

fn exceeds(candidate: f64, current: f64) -> bool {
    if current.is_nan() {
        return false;
    }
    candidate.is_nan() || candidate > current
}

impl FromIterator<Residual> for Residual {
    fn from_iter<I: IntoIterator<Item = Residual>>(iter: I) -> Self {
        iter.into_iter().fold(Residual::ZERO, Residual::merge)
    }
}

impl fmt::Display for Residual {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.point {
            Some(p) => write!(f, "{:.3e} at point {}", self.max, p),
            None => write!(f, "{:.3e}", self.max),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_keep_first_point() {
        let r: Residual = [Residual::at(PointId(1), 2.0), Residual::at(PointId(4), 2.0)]
            .into_iter()
            .collect();
        assert_eq!(r.point, Some(PointId(1)));
    }

    #[test]
    fn nan_never_passes() {
        let r = Residual::ZERO.merge(Residual::at(PointId(0), f64::NAN));
        assert!(r.max.is_nan());
        assert!(!r.passes(1.0));
        let r = r.merge(Residual::at(PointId(3), 10.0));
        assert_eq!(r.point, Some(PointId(0)));
    }
}

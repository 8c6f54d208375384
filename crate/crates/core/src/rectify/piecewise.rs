use serde::{Deserialize, Serialize};

use super::RectifyError;
use crate::geom::Point;

/// Increasing piecewise-linear map of the line, the identity outside its
/// first and last breakpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonotonePl {
    pub breakpoints: Vec<(f64, f64)>,
}

impl MonotonePl {
    /// Interpolates `source ↦ target` and ramps back to the identity at
    /// distance `max(1, 2 |shift|)` beyond the outermost sources, which
    /// keeps both ramp slopes in `[1/2, 3/2]`.
    pub fn from_pairs(pairs: &[(Point, Point)]) -> Result<Self, RectifyError> {
        let mut pts: Vec<(f64, f64)> = pairs.iter().map(|(s, t)| (s[0], t[0])).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pts.is_empty() {
            return Ok(MonotonePl {
                breakpoints: Vec::new(),
            });
        }
        let (first, last) = (pts[0], pts[pts.len() - 1]);
        let k_lo = (2.0 * (first.1 - first.0).abs()).max(1.0);
        let k_hi = (2.0 * (last.1 - last.0).abs()).max(1.0);
        let mut breakpoints = Vec::with_capacity(pts.len() + 2);
        breakpoints.push((first.0 - k_lo, first.0 - k_lo));
        breakpoints.extend(pts);
        breakpoints.push((last.0 + k_hi, last.0 + k_hi));
        let pl = MonotonePl { breakpoints };
        pl.validate()?;
        Ok(pl)
    }

    pub fn validate(&self) -> Result<(), RectifyError> {
        let ok = self
            .breakpoints
            .iter()
            .all(|(x, y)| x.is_finite() && y.is_finite())
            && self
                .breakpoints
                .windows(2)
                .all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1);
        let ends = match (self.breakpoints.first(), self.breakpoints.last()) {
            (Some(a), Some(b)) => a.0 == a.1 && b.0 == b.1,
            _ => true,
        };
        if ok && ends {
            Ok(())
        } else {
            Err(RectifyError::NonMonotone1D)
        }
    }

    /// Closed interval outside which the map is the identity.
    pub fn support(&self) -> Option<(f64, f64)> {
        Some((self.breakpoints.first()?.0, self.breakpoints.last()?.0))
    }

    fn interpolate(pts: &[(f64, f64)], x: f64, fwd: bool) -> f64 {
        let key = |p: &(f64, f64)| if fwd { p.0 } else { p.1 };
        let val = |p: &(f64, f64)| if fwd { p.1 } else { p.0 };
        let (Some(first), Some(last)) = (pts.first(), pts.last()) else {
            return x;
        };
        if x <= key(first) || x >= key(last) {
            return x;
        }
        let k = pts.partition_point(|p| key(p) <= x) - 1;
        let (a, b) = (&pts[k], &pts[k + 1]);
        if x == key(a) {
            return val(a);
        }
        val(a) + (x - key(a)) * (val(b) - val(a)) / (key(b) - key(a))
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        Self::interpolate(&self.breakpoints, x, true)
    }

    pub fn evaluate_inverse(&self, y: f64) -> f64 {
        Self::interpolate(&self.breakpoints, y, false)
    }

    pub fn slopes(&self) -> Vec<f64> {
        self.breakpoints
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .collect()
    }

    /// Largest and smallest slope, `(1, 1)` for the identity.
    pub fn slope_range(&self) -> (f64, f64) {
        self.slopes()
            .into_iter()
            .fold((1.0f64, 1.0f64), |(hi, lo), s| (hi.max(s), lo.min(s)))
    }
}

//! Bounded-displacement bijections from a window of a point set onto
//! integer lattice points.

mod bottleneck;
mod hopcroft_karp;

pub use bottleneck::{
    bottleneck_match, bottleneck_match_with, order_preserving_match, verify_bd, BdReport,
    HistogramBin, MatchPolicy,
};
pub use hopcroft_karp::{max_matching, Matching, WeightedAdjacency};

use serde::{Deserialize, Serialize};

use crate::geom::{Point, Window};

/// Integrality tolerance for lattice targets.
pub const INTEGRAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MatchError {
    #[error("no bounded-displacement bijection exists on this window")]
    Infeasible,
    #[error("core window is empty")]
    EmptyCore,
    #[error("margin must be finite and non-negative")]
    BadMargin,
    #[error("order-preserving matching needs dimension 1, got {0}")]
    NotOneDimensional(usize),
    #[error("invalid displacement map: {0}")]
    InvalidMap(String),
}

/// A bijection between finitely many sources and integer targets, with the
/// window on which it is certified total.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DisplacementMap {
    pub bound: f64,
    pub core: Window,
    pub pairs: Vec<(Point, Point)>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMap {
    bound: f64,
    core: Window,
    pairs: Vec<(Point, Point)>,
}

impl<'de> Deserialize<'de> for DisplacementMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawMap::deserialize(d)?;
        DisplacementMap::new(raw.pairs, raw.core)
            .and_then(|m| {
                let tol = 1e-9 * (1.0 + m.bound);
                if (m.bound - raw.bound).abs() <= tol {
                    Ok(DisplacementMap { bound: raw.bound, ..m })
                } else {
                    Err(MatchError::InvalidMap(format!(
                        "bound {} differs from the maximum displacement {}",
                        raw.bound, m.bound
                    )))
                }
            })
            .map_err(serde::de::Error::custom)
    }
}

fn lex_cmp(a: &Point, b: &Point) -> std::cmp::Ordering {
    a.coords()
        .iter()
        .zip(b.coords())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

impl DisplacementMap {
    /// Validates the pairs and computes the exact bound.
    pub fn new(pairs: Vec<(Point, Point)>, core: Window) -> Result<Self, MatchError> {
        let bad = |m: String| Err(MatchError::InvalidMap(m));
        if !core.is_valid() {
            return bad("core window is degenerate".into());
        }
        let dim = core.dim();
        for (i, (s, t)) in pairs.iter().enumerate() {
            if s.dim() != dim || t.dim() != dim {
                return bad(format!("pair {i} has the wrong dimension"));
            }
            if !s.is_finite() || !t.is_finite() {
                return bad(format!("pair {i} is not finite"));
            }
            if !t.is_integral(INTEGRAL_TOL) {
                return bad(format!("target of pair {i} is not a lattice point"));
            }
        }
        for (which, pick) in [("source", 0usize), ("target", 1)] {
            let mut pts: Vec<&Point> = pairs
                .iter()
                .map(|p| if pick == 0 { &p.0 } else { &p.1 })
                .collect();
            pts.sort_by(|a, b| lex_cmp(a, b));
            if pts.windows(2).any(|w| lex_cmp(w[0], w[1]).is_eq()) {
                return bad(format!("repeated {which}"));
            }
        }
        let bound = max_displacement(&pairs);
        Ok(DisplacementMap { bound, core, pairs })
    }

    pub fn dim(&self) -> usize {
        self.core.dim()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn sources(&self) -> impl Iterator<Item = &Point> {
        self.pairs.iter().map(|p| &p.0)
    }

    pub fn targets(&self) -> impl Iterator<Item = &Point> {
        self.pairs.iter().map(|p| &p.1)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("displacement maps always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, MatchError> {
        serde_json::from_str(text).map_err(|e| MatchError::InvalidMap(e.to_string()))
    }
}

pub(crate) fn max_displacement(pairs: &[(Point, Point)]) -> f64 {
    pairs
        .iter()
        .map(|(s, t)| s.distance(t))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn core() -> Window {
        Window::cube(2, 0.0, 4.0).unwrap()
    }

    #[test]
    fn rejects_bad_pairs() {
        let p = |x: f64, y: f64| Point::new(vec![x, y]);
        assert!(DisplacementMap::new(vec![(p(0.1, 0.0), p(0.5, 0.0))], core()).is_err());
        assert!(DisplacementMap::new(
            vec![(p(0.1, 0.0), p(0.0, 0.0)), (p(0.2, 0.0), p(0.0, 0.0))],
            core()
        )
        .is_err());
        assert!(DisplacementMap::new(
            vec![(p(0.1, 0.0), p(0.0, 0.0)), (p(0.1, 0.0), p(1.0, 0.0))],
            core()
        )
        .is_err());
        let m = DisplacementMap::new(vec![(p(0.3, 0.4), p(0.0, 0.0))], core()).unwrap();
        assert_eq!(m.bound, 0.5);
    }

    #[test]
    fn json_round_trip_and_bound_check() {
        let p = |x: f64, y: f64| Point::new(vec![x, y]);
        let m = DisplacementMap::new(
            vec![(p(0.1, 0.2), p(0.0, 0.0)), (p(1.0 / 3.0, 1.1), p(0.0, 1.0))],
            core(),
        )
        .unwrap();
        let text = m.to_json();
        assert!(text.starts_with(r#"{"bound":"#));
        assert_eq!(DisplacementMap::from_json(&text).unwrap(), m);
        let forged = text.replacen(&format!("{}", m.bound), "0.01", 1);
        assert!(DisplacementMap::from_json(&forged).is_err());
    }
}

//! Upper bounds for the bi-Lipschitz constant of a plan.
//!
//! A point is only ever moved by maps whose support contains its current
//! position, and every map preserves its support ball. Maps whose closed
//! supports touch are grouped; a point's whole itinerary stays in one group,
//! so the plan's constant is at most the largest product of per-map
//! constants over a group.

use super::local_map::LocalMap;
use super::plan::HomeoPlan;
use crate::geom::{GridIndex, Point};

const TWIST_SAMPLES: usize = 10_000;

/// Largest singular value of the half twist's derivative, from a dense
/// sampling of the radius. The derivative is a shear of size `r θ'(r)` in
/// polar frame, independent of the twist's scale.
pub fn twist_lipschitz() -> f64 {
    let (inner, outer) = (1.0 / 6.0, 1.0 / 3.0);
    let slope = std::f64::consts::PI / inner;
    (0..TWIST_SAMPLES)
        .map(|i| {
            let r = inner + (outer - inner) * i as f64 / (TWIST_SAMPLES - 1) as f64;
            let s = r * slope;
            0.5 * (s + (s * s + 4.0).sqrt())
        })
        .fold(1.0, f64::max)
}

/// `ln max(L, 1/l)` for one map, `L` and `l` its upper and lower
/// Lipschitz constants.
fn log_constant(m: &LocalMap, twist: f64) -> f64 {
    match m {
        LocalMap::BallPush { .. } => {
            let a = m.push_ratio().unwrap_or(0.0);
            (1.0 + a).max(1.0 / (1.0 - a)).ln()
        }
        LocalMap::HalfTwist { .. } => twist.ln(),
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Natural log of [`analytic_constant_bound`], finite even when the bound
/// itself overflows.
pub fn analytic_log_bound(plan: &HomeoPlan) -> f64 {
    if let Some(pl) = plan.piecewise() {
        let (hi, lo) = pl.slope_range();
        return hi.max(1.0 / lo).ln();
    }
    let maps: Vec<&LocalMap> = plan.all_maps().collect();
    if maps.is_empty() {
        return 0.0;
    }
    let twist = twist_lipschitz();
    let centers: Vec<Point> = maps.iter().map(|m| m.center().clone()).collect();
    let rmax = maps.iter().map(|m| m.support_radius()).fold(0.0, f64::max);
    let idx = GridIndex::covering(&centers, plan.dim(), (2.0 * rmax).max(1e-6))
        .expect("map centers are finite");
    let mut parent: Vec<usize> = (0..maps.len()).collect();
    for (k, m) in maps.iter().enumerate() {
        let rk = m.support_radius();
        idx.for_each_within(centers[k].coords(), rk + rmax, |j| {
            if j > k && centers[k].distance(&centers[j]) <= rk + maps[j].support_radius() {
                let (a, b) = (find(&mut parent, k), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        });
    }
    let mut sums = vec![0.0; maps.len()];
    for (k, m) in maps.iter().enumerate() {
        let root = find(&mut parent, k);
        sums[root] += log_constant(m, twist);
    }
    sums.into_iter().fold(0.0, f64::max)
}

/// Conservative bi-Lipschitz constant of the plan: both `|F(u) - F(v)|` and
/// `|F⁻¹(u) - F⁻¹(v)|` are at most this times `|u - v|`.
pub fn analytic_constant_bound(plan: &HomeoPlan) -> f64 {
    analytic_log_bound(plan).exp()
}

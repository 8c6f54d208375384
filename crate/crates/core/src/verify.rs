//! Checks of a plan that use only its public evaluation: exactness on the
//! matched sources, sampled difference quotients, identity far away and
//! agreement of the inverse.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::generators::uniform_in_ball;
use crate::geom::{Point, Window};
use crate::matching::{DisplacementMap, HistogramBin};
use crate::rectify::{analytic_log_bound, HomeoPlan};

pub const DEFAULT_SCALES: [f64; 3] = [1e-1, 1e-2, 1e-3];

const HISTOGRAM_BINS: usize = 10;

/// Relative slack when comparing sampled quotients with the analytic bound.
const BOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VerifyError {
    #[error("plan has dimension {plan}, map has dimension {map}")]
    DimensionMismatch { plan: usize, map: usize },
    #[error("invalid sampling options: {0}")]
    InvalidOptions(String),
}

/// How a plan agrees with a displacement map on its sources.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RectificationCheck {
    pub pairs: usize,
    pub max_target_residual: f64,
    /// Rounded images equal their targets and no two coincide.
    pub bijection_ok: bool,
    pub collisions: usize,
    /// Every lattice point of the core is the image of some source.
    pub core_covered: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleStats {
    pub scale: f64,
    pub upper: f64,
    pub lower: f64,
    pub histogram: Vec<HistogramBin>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BilipschitzEstimate {
    pub upper: f64,
    pub lower: f64,
    pub samples: usize,
    pub per_scale: Vec<ScaleStats>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub ok: bool,
    pub max_deviation: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyOptions {
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub scales: Vec<f64>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            samples: 10_000,
            seed: 0,
            tol: 1e-9,
            scales: DEFAULT_SCALES.to_vec(),
        }
    }
}

impl VerifyOptions {
    pub fn validate(&self) -> Result<(), VerifyError> {
        let bad = |m: &str| Err(VerifyError::InvalidOptions(m.into()));
        if self.samples == 0 {
            return bad("samples must be at least 1");
        }
        if !(self.tol >= 0.0 && self.tol.is_finite()) {
            return bad("tol must be a finite non-negative number");
        }
        if self.scales.is_empty() || self.scales.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
            return bad("scales must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub pairs: usize,
    pub max_target_residual: f64,
    pub bijection_ok: bool,
    pub collisions: usize,
    pub core_covered: bool,
    pub lipschitz_upper_est: f64,
    pub lipschitz_lower_est: f64,
    pub per_scale: Vec<ScaleStats>,
    /// `ln` of the analytic bound, kept because the bound itself may overflow.
    pub analytic_log_bound: f64,
    pub analytic_bound: f64,
    pub identity_outside_ok: bool,
    pub identity_outside_deviation: f64,
    pub roundtrip_max: f64,
    pub samples_used: usize,
    pub seed: u64,
    pub tol: f64,
    pub pass: bool,
}

impl VerificationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Residuals `|F(v) - Φ(v)|` over all pairs of `m`, and whether rounding
/// the images recovers the targets as a collision-free set.
pub fn check_rectification(
    plan: &HomeoPlan,
    m: &DisplacementMap,
    tol: f64,
) -> Result<RectificationCheck, VerifyError> {
    if !m.is_empty() && plan.dim() != m.dim() {
        return Err(VerifyError::DimensionMismatch {
            plan: plan.dim(),
            map: m.dim(),
        });
    }
    let sources: Vec<Point> = m.sources().cloned().collect();
    let images = plan.evaluate_many(&sources);
    let mut residual = 0.0f64;
    let mut matches = true;
    let mut seen: HashSet<Vec<i64>> = HashSet::with_capacity(images.len());
    let mut collisions = 0;
    for (img, (_, t)) in images.iter().zip(&m.pairs) {
        let r = img.distance(t);
        residual = if r.is_nan() { f64::INFINITY } else { residual.max(r) };
        let rounded = img.rounded();
        if img.distance(&rounded) > tol || rounded != *t {
            matches = false;
        }
        if !seen.insert(lattice_key(&rounded)) {
            collisions += 1;
        }
    }
    let core_covered = m
        .core
        .lattice_points()
        .iter()
        .all(|z| seen.contains(&lattice_key(z)));
    Ok(RectificationCheck {
        pairs: m.len(),
        max_target_residual: residual,
        bijection_ok: residual <= tol && matches && collisions == 0,
        collisions,
        core_covered,
    })
}

fn lattice_key(p: &Point) -> Vec<i64> {
    p.coords().iter().map(|c| *c as i64).collect()
}

fn uniform_in_window(rng: &mut impl Rng, w: &Window) -> Point {
    Point::new(
        (0..w.dim())
            .map(|a| rng.gen_range(w.lower[a]..w.upper[a]))
            .collect(),
    )
}

fn unit_vector(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    loop {
        let v = uniform_in_ball(rng, dim, 1.0);
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Base points for the quotient estimate. Half are uniform in `region`; the
/// rest sit near the recorded waypoints, where the plan actually moves
/// things. One-dimensional plans also get one base point inside every
/// linear piece so that the exact slopes are seen.
fn base_points(plan: &HomeoPlan, region: &Window, n: usize, rng: &mut ChaCha8Rng) -> Vec<Point> {
    let waypoints: Vec<&Point> = plan.ledger().iter().flat_map(|r| &r.waypoints).collect();
    let near = if waypoints.is_empty() { 0 } else { n / 2 };
    let spread = plan.epsilon_final();
    let mut out: Vec<Point> = (0..n - near).map(|_| uniform_in_window(rng, region)).collect();
    for _ in 0..near {
        let w = waypoints[rng.gen_range(0..waypoints.len())];
        let off = uniform_in_ball(rng, plan.dim(), spread);
        out.push(Point::new(w.coords().iter().zip(&off).map(|(a, b)| a + b).collect()));
    }
    if let Some(pl) = plan.piecewise() {
        for w in pl.breakpoints.windows(2) {
            out.push(Point::new(vec![w[0].0 + 0.25 * (w[1].0 - w[0].0)]));
        }
    }
    out
}

fn histogram(qs: &[f64], lo: f64, hi: f64) -> Vec<HistogramBin> {
    let width = (hi - lo) / HISTOGRAM_BINS as f64;
    let mut bins: Vec<HistogramBin> = (0..HISTOGRAM_BINS)
        .map(|k| HistogramBin {
            lo: lo + k as f64 * width,
            hi: if k + 1 == HISTOGRAM_BINS { hi } else { lo + (k + 1) as f64 * width },
            count: 0,
        })
        .collect();
    for &q in qs {
        let k = if width > 0.0 { ((q - lo) / width) as usize } else { 0 };
        bins[k.min(HISTOGRAM_BINS - 1)].count += 1;
    }
    bins
}

/// Sampled difference quotients `|F(u + h e) - F(u)| / h` for random base
/// points `u`, unit directions `e` and each scale `h`.
pub fn estimate_bilipschitz(
    plan: &HomeoPlan,
    region: &Window,
    n: usize,
    scales: &[f64],
    seed: u64,
) -> Result<BilipschitzEstimate, VerifyError> {
    if n == 0 || scales.is_empty() || scales.iter().any(|h| !(*h > 0.0)) {
        return Err(VerifyError::InvalidOptions(
            "need at least one sample and positive scales".into(),
        ));
    }
    if region.dim() != plan.dim() || !region.is_valid() {
        return Err(VerifyError::DimensionMismatch {
            plan: plan.dim(),
            map: region.dim(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bases = base_points(plan, region, n, &mut rng);
    let dirs: Vec<Vec<f64>> = (0..bases.len() * scales.len())
        .map(|_| unit_vector(&mut rng, plan.dim()))
        .collect();
    let mut per_scale = Vec::with_capacity(scales.len());
    let (mut upper, mut lower) = (f64::NEG_INFINITY, f64::INFINITY);
    for (si, &h) in scales.iter().enumerate() {
        let qs: Vec<f64> = bases
            .par_iter()
            .enumerate()
            .map(|(i, u)| {
                let e = &dirs[si * bases.len() + i];
                let v = Point::new(u.coords().iter().zip(e).map(|(a, b)| a + h * b).collect());
                let gap = u.distance(&v);
                plan.evaluate(u).distance(&plan.evaluate(&v)) / gap
            })
            .collect();
        let hi = qs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = qs.iter().copied().fold(f64::INFINITY, f64::min);
        upper = upper.max(hi);
        lower = lower.min(lo);
        per_scale.push(ScaleStats {
            scale: h,
            upper: hi,
            lower: lo,
            histogram: histogram(&qs, lo, hi),
        });
    }
    Ok(BilipschitzEstimate {
        upper,
        lower,
        samples: bases.len() * scales.len(),
        per_scale,
    })
}

/// Largest `|F(u) - u|` over `points`, evaluated through every map.
pub fn identity_deviation(plan: &HomeoPlan, points: &[Point]) -> f64 {
    points
        .par_iter()
        .map(|u| plan.evaluate_naive(u).distance(u))
        .collect::<Vec<_>>()
        .into_iter()
        .fold(0.0, f64::max)
}

/// Samples `n` points in a shell around the bounding region and checks that
/// the plan fixes each of them exactly.
pub fn check_identity_outside(plan: &HomeoPlan, n: usize, seed: u64) -> IdentityCheck {
    let region = plan.bounding_region();
    let pad = (0.25 * region.diameter()).max(1.0);
    let shell = region.inflate(pad);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Vec::with_capacity(n);
    while pts.len() < n {
        let p = uniform_in_window(&mut rng, &shell);
        if !region.contains_closed(p.coords()) {
            pts.push(p);
        }
    }
    let max_deviation = identity_deviation(plan, &pts);
    IdentityCheck {
        ok: max_deviation == 0.0,
        max_deviation,
        samples: n,
    }
}

/// Largest `|F⁻¹(F(u)) - u|` over `n` uniform points of `region`; infinite
/// if an inversion fails.
pub fn roundtrip_error(plan: &HomeoPlan, region: &Window, n: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<Point> = (0..n).map(|_| uniform_in_window(&mut rng, region)).collect();
    pts.par_iter()
        .map(|u| match plan.evaluate_inverse(&plan.evaluate(u)) {
            Ok(back) => back.distance(u),
            Err(_) => f64::INFINITY,
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(0.0, |a, b| if b.is_nan() { f64::INFINITY } else { a.max(b) })
}

/// Runs every check. Sampling happens in the plan's bounding region, and
/// each check draws from its own seed derived from `opts.seed`.
pub fn verify_plan(
    plan: &HomeoPlan,
    m: &DisplacementMap,
    opts: &VerifyOptions,
) -> Result<VerificationReport, VerifyError> {
    opts.validate()?;
    let rect = check_rectification(plan, m, opts.tol)?;
    let region = plan.bounding_region();
    let est = estimate_bilipschitz(plan, region, opts.samples, &opts.scales, opts.seed)?;
    let outside = check_identity_outside(plan, opts.samples, opts.seed.wrapping_add(1));
    let roundtrip_max = roundtrip_error(plan, region, opts.samples, opts.seed.wrapping_add(2));
    let log_bound = analytic_log_bound(plan);
    let analytic_bound = log_bound.exp().min(f64::MAX);
    let slack = 1.0 + BOUND_SLACK;
    let within_bound = est.upper.ln() <= log_bound + slack.ln() && -est.lower.ln() <= log_bound + slack.ln();
    let pass = rect.bijection_ok && outside.ok && roundtrip_max <= opts.tol && within_bound;
    Ok(VerificationReport {
        pairs: rect.pairs,
        max_target_residual: rect.max_target_residual,
        bijection_ok: rect.bijection_ok,
        collisions: rect.collisions,
        core_covered: rect.core_covered,
        lipschitz_upper_est: est.upper,
        lipschitz_lower_est: est.lower,
        per_scale: est.per_scale,
        analytic_log_bound: log_bound,
        analytic_bound,
        identity_outside_ok: outside.ok,
        identity_outside_deviation: outside.max_deviation,
        roundtrip_max,
        samples_used: est.samples + outside.samples + opts.samples,
        seed: opts.seed,
        tol: opts.tol,
        pass,
    })
}

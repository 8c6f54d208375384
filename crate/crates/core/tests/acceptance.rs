//! Acceptance checks, one line per criterion. Runs without the libtest
//! harness so the lines always appear; the process fails if any check fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use delone_rectify::generators::{generate, GeneratorKind, GeneratorSpec};
use delone_rectify::geom::repetitivity_profile;
use delone_rectify::matching::{
    bottleneck_match, bottleneck_match_with, order_preserving_match, DisplacementMap, MatchError,
    MatchPolicy,
};
use delone_rectify::rectify::{
    analytic_constant_bound, audit_schedule, ball_push, build_plan, half_twist, source_separation,
    GeneralPositionParams, HomeoPlan, LocalMap,
};
use delone_rectify::verify::{
    check_identity_outside, check_rectification, estimate_bilipschitz, roundtrip_error,
    DEFAULT_SCALES,
};
use delone_rectify::{Point, PointSet, Window};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RESIDUAL_TOL: f64 = 1e-9;
const ROUNDTRIP_TOL: f64 = 1e-9;
const SAMPLES: usize = 10_000;
const EPSILON_FLOOR: f64 = 1e-3;
const TWIST_TOL: f64 = 1e-12;
const PUSH_TOL: f64 = 1e-6;
const SLOPE_TOL: f64 = 1e-9;
const REPETITIVITY_RATIO: f64 = 40.0;

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: String) -> Outcome {
    Outcome { ok, detail }
}

fn q(c: &[f64]) -> Point {
    Point::new(c.to_vec())
}

/// Checks shared by the two higher-dimensional pipelines.
fn pipeline(dim: usize, side: f64, budget: Duration) -> (Outcome, Option<HomeoPlan>) {
    let start = Instant::now();
    let mut spec = GeneratorSpec::new(GeneratorKind::PerturbedLattice, Window::cube(dim, 0.0, side).unwrap());
    spec.delta = 0.35;
    spec.seed = 7;
    let (pts, _) = generate(&spec).unwrap();
    let m = match bottleneck_match(&pts, 2.0) {
        Ok(m) => m,
        Err(e) => return (outcome(false, format!("matching failed: {e}")), None),
    };
    let r_sep = source_separation(&m).unwrap();
    let mut params = GeneralPositionParams::for_separation(r_sep);
    params.seed = 7;
    params.epsilon_floor = EPSILON_FLOOR;
    let plan = match build_plan(&m, &params, r_sep) {
        Ok(p) => p,
        Err(e) => return (outcome(false, format!("build_plan failed: {e}")), None),
    };
    let rect = check_rectification(&plan, &m, RESIDUAL_TOL).unwrap();
    let region = plan.bounding_region().clone();
    let roundtrip = roundtrip_error(&plan, &region, SAMPLES, 11);
    let outside = check_identity_outside(&plan, SAMPLES, 12);
    let est = estimate_bilipschitz(&plan, &region, SAMPLES, &DEFAULT_SCALES, 13).unwrap();
    let bound = analytic_constant_bound(&plan);
    let elapsed = start.elapsed();
    let ok = m.bound <= 0.35
        && plan.epsilon_final() >= EPSILON_FLOOR
        && rect.max_target_residual <= RESIDUAL_TOL
        && rect.bijection_ok
        && rect.core_covered
        && roundtrip <= ROUNDTRIP_TOL
        && outside.ok
        && est.upper <= bound
        && 1.0 / est.lower <= bound
        && elapsed <= budget;
    let detail = format!(
        "pairs={} bound={:.4} eps={:.4} residual={:e} bijection={} covered={} roundtrip={:e} outside_dev={} upper={:.3} lower={:.3} analytic={:.3e} twists={} time={:.1}s",
        m.len(),
        m.bound,
        plan.epsilon_final(),
        rect.max_target_residual,
        rect.bijection_ok,
        rect.core_covered,
        roundtrip,
        outside.max_deviation,
        est.upper,
        est.lower,
        bound,
        plan.twist_count(),
        elapsed.as_secs_f64()
    );
    (outcome(ok, detail), Some(plan))
}

fn criterion_1() -> Outcome {
    pipeline(2, 32.0, Duration::from_secs(60)).0
}

fn criterion_2() -> Outcome {
    let (mut out, plan) = pipeline(3, 12.0, Duration::from_secs(120));
    if let Some(plan) = plan {
        out.ok &= plan.twist_count() == 0;
    }
    out
}

fn criterion_3() -> Outcome {
    let spec = GeneratorSpec::new(GeneratorKind::Fibonacci1d, Window::cube(1, 0.0, 200.0).unwrap());
    let (pts, _) = generate(&spec).unwrap();
    let m = order_preserving_match(&pts, 2.0).unwrap();
    let r_sep = source_separation(&m).unwrap();
    let plan = build_plan(&m, &GeneralPositionParams::for_separation(r_sep), r_sep).unwrap();
    let Some(pl) = plan.piecewise() else {
        return outcome(false, "plan is not piecewise linear".into());
    };
    let monotone = pl.validate().is_ok();
    let (hi, lo) = pl.slope_range();
    let est = estimate_bilipschitz(&plan, plan.bounding_region(), SAMPLES, &DEFAULT_SCALES, 3).unwrap();
    let rect = check_rectification(&plan, &m, 0.0).unwrap();
    let ok = monotone
        && (est.upper - hi).abs() <= SLOPE_TOL
        && (est.lower - lo).abs() <= SLOPE_TOL
        && rect.max_target_residual == 0.0
        && rect.bijection_ok;
    outcome(
        ok,
        format!(
            "pairs={} slopes=[{lo:.6}, {hi:.6}] sampled=[{:.6}, {:.6}] residual={}",
            m.len(),
            est.lower,
            est.upper,
            rect.max_target_residual
        ),
    )
}

fn criterion_4() -> Outcome {
    let eps = 0.3;
    let c = [0.7, -1.3];
    let twist = half_twist(q(&c), eps).unwrap();
    let at = |r: f64, t: f64| q(&[c[0] + r * t.cos(), c[1] + r * t.sin()]);
    let (mut rot_err, mut outer_err, mut chord_err) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..1000 {
        let t = 2.0 * PI * k as f64 / 1000.0;
        let p = at(eps / 6.0, t);
        let want = at(eps / 6.0, t + PI);
        rot_err = rot_err.max(twist.image(&p).distance(&want));
        let o = at(eps / 3.0, t);
        outer_err = outer_err.max(twist.image(&o).distance(&o));
        // the two ends of a chord through the center swap
        let (a, b) = (at(eps / 6.0, t), at(eps / 6.0, t + PI));
        chord_err = chord_err.max(twist.image(&a).distance(&b)).max(twist.image(&b).distance(&a));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut inv_err = 0.0f64;
    for _ in 0..1000 {
        let r = rng.gen_range(0.0..eps / 2.0);
        let p = at(r, rng.gen_range(0.0..2.0 * PI));
        let back = twist.preimage(&twist.image(&p)).unwrap();
        inv_err = inv_err.max(back.distance(&p));
    }
    let ok = rot_err <= TWIST_TOL && outer_err <= TWIST_TOL && chord_err <= TWIST_TOL && inv_err <= TWIST_TOL;
    outcome(
        ok,
        format!("rotation={rot_err:e} outer={outer_err:e} chord={chord_err:e} inverse={inv_err:e}"),
    )
}

fn push_detail(push: &LocalMap, c: &[f64], rho: f64, rng: &mut ChaCha8Rng) -> (bool, String) {
    let dim = c.len();
    let center_ok = push.image(&q(c)) == match push {
        LocalMap::BallPush { target, .. } => target.clone(),
        _ => unreachable!(),
    };
    let random_dir = |rng: &mut ChaCha8Rng| loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 && n <= 1.0 {
            return v.into_iter().map(|x| x / n).collect::<Vec<f64>>();
        }
    };
    let mut boundary = 0.0f64;
    for _ in 0..1000 {
        let e = random_dir(rng);
        let p = q(&c.iter().zip(&e).map(|(a, b)| a + rho * b).collect::<Vec<_>>());
        boundary = boundary.max(push.image(&p).distance(&p));
    }
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for _ in 0..100_000 {
        let u: Vec<f64> = c.iter().map(|x| x + rng.gen_range(-1.2 * rho..1.2 * rho)).collect();
        let e = random_dir(rng);
        let h = rho * 10f64.powf(rng.gen_range(-4.0..0.0));
        let v: Vec<f64> = u.iter().zip(&e).map(|(a, b)| a + h * b).collect();
        let (u, v) = (q(&u), q(&v));
        let ratio = push.image(&u).distance(&push.image(&v)) / u.distance(&v);
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    let mut min_det = f64::INFINITY;
    let h = 1e-6;
    for _ in 0..1000 {
        let e = random_dir(rng);
        let s = rng.gen_range(0.0..0.999);
        let u: Vec<f64> = c.iter().zip(&e).map(|(a, b)| a + s * rho * b).collect();
        let mut jac = vec![vec![0.0; dim]; dim];
        for j in 0..dim {
            let (mut a, mut b) = (u.clone(), u.clone());
            a[j] += h;
            b[j] -= h;
            let (fa, fb) = (push.image(&q(&a)), push.image(&q(&b)));
            for i in 0..dim {
                jac[i][j] = (fa[i] - fb[i]) / (2.0 * h);
            }
        }
        min_det = min_det.min(det(&jac));
    }
    let ok = center_ok
        && boundary <= TWIST_TOL
        && lo >= 0.5 - PUSH_TOL
        && hi <= 1.5 + PUSH_TOL
        && min_det > 0.0;
    (
        ok,
        format!("d={dim} center_exact={center_ok} boundary={boundary:e} quotients=[{lo:.6}, {hi:.6}] min_det={min_det:.4}"),
    )
}

fn det(m: &[Vec<f64>]) -> f64 {
    match m.len() {
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        _ => unimplemented!(),
    }
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut all = true;
    let mut details = Vec::new();
    // dyadic data keeps the ratio exactly one half
    for (c, dir) in [(vec![0.25, -0.5], vec![0.0, 1.0]), (vec![1.0, 2.0, -1.0], vec![0.0, 0.0, -1.0])] {
        let rho = 0.75;
        let target: Vec<f64> = c.iter().zip(&dir).map(|(a, b)| a + 0.5 * rho * b).collect();
        let push = ball_push(q(&c), rho, q(&target)).unwrap();
        let (ok, d) = push_detail(&push, &c, rho, &mut rng);
        all &= ok;
        details.push(d);
    }
    outcome(all, details.join("; "))
}

/// Smallest maximum edge over all injections of `sources` into `lattice`.
fn brute_bottleneck(sources: &[Point], lattice: &[Point]) -> f64 {
    fn go(i: usize, sources: &[Point], lattice: &[Point], used: &mut [bool], cur: f64, best: &mut f64) {
        if cur >= *best {
            return;
        }
        if i == sources.len() {
            *best = cur;
            return;
        }
        for j in 0..lattice.len() {
            if !used[j] {
                used[j] = true;
                let d = sources[i].distance(&lattice[j]);
                go(i + 1, sources, lattice, used, cur.max(d), best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    go(0, sources, lattice, &mut vec![false; lattice.len()], 0.0, &mut best);
    best
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut mismatches = Vec::new();
    for inst in 0..50 {
        // even instances: fewer sources than lattice points; odd: a bijection
        let (window, policy, n) = if inst % 2 == 0 {
            (Window::cube(2, 0.0, 3.0).unwrap(), MatchPolicy::SourcesOnly, rng.gen_range(1..=8))
        } else {
            let w = rng.gen_range(1..=4) as f64;
            let win = Window::new(q(&[0.0, 0.0]), q(&[2.0, w])).unwrap();
            (win, MatchPolicy::CoverBoth, 2 * w as usize)
        };
        let lattice = window.lattice_points();
        let mut pts = Vec::new();
        while pts.len() < n {
            let p = q(&[rng.gen_range(0.0..window.upper[0]), rng.gen_range(0.0..window.upper[1])]);
            if pts.iter().all(|x: &Point| x.distance(&p) > 1e-6) {
                pts.push(p);
            }
        }
        let set = PointSet::with_default_index(pts.clone(), window).unwrap();
        let got = bottleneck_match_with(&set, 0.0, policy).map(|m| m.bound);
        let want = brute_bottleneck(&pts, &lattice);
        if got.as_ref().ok() != Some(&want) {
            mismatches.push(format!("#{inst}: {got:?} vs {want}"));
        }
    }
    outcome(
        mismatches.is_empty(),
        format!("instances=50 mismatches={} {}", mismatches.len(), mismatches.join(" ")),
    )
}

/// Lattice window with every point moved by at most `noise`, resampled
/// until it stays in the window and keeps distance `min_gap` from the
/// points placed before it. Returns the map sending each moved point back
/// to its lattice point, restricted to pairs touching the core.
fn noisy_lattice_map(side: f64, noise: f64, min_gap: f64, rng: &mut ChaCha8Rng) -> DisplacementMap {
    let window = Window::cube(2, 0.0, side).unwrap();
    let core = window.shrink(1.0).unwrap();
    let mut pairs: Vec<(Point, Point)> = Vec::new();
    for z in window.lattice_points() {
        loop {
            let r = noise * rng.gen::<f64>().sqrt();
            let t = rng.gen_range(0.0..2.0 * PI);
            let p = q(&[z[0] + r * t.cos(), z[1] + r * t.sin()]);
            if window.contains(p.coords()) && pairs.iter().all(|(x, _)| x.distance(&p) >= min_gap) {
                pairs.push((p, z));
                break;
            }
        }
    }
    pairs.retain(|(p, z)| core.contains(p.coords()) || core.contains(z.coords()));
    DisplacementMap::new(pairs, core).unwrap()
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut violations, mut checks, mut twists, mut failures) = (0, 0, 0, Vec::new());
    let mut max_pairs = 0;
    for inst in 0..20 {
        let side = rng.gen_range(8..=15) as f64;
        let m = noisy_lattice_map(side, 0.75, 0.3, &mut rng);
        max_pairs = max_pairs.max(m.len());
        let r_sep = source_separation(&m).unwrap();
        let mut params = GeneralPositionParams::for_separation(r_sep);
        params.seed = inst;
        let plan = match build_plan(&m, &params, r_sep) {
            Ok(p) => p,
            Err(e) => {
                failures.push(format!("#{inst} plan: {e}"));
                continue;
            }
        };
        let report = audit_schedule(&plan);
        violations += report.violations.len();
        checks += report.checks;
        twists += plan.twist_count();
        if !report.ok(1e-9) {
            failures.push(format!("#{inst} audit: {} violations", report.violations.len()));
        }
    }
    let ok = failures.is_empty() && violations == 0 && max_pairs <= 200 && twists > 0;
    outcome(
        ok,
        format!(
            "instances=20 max_pairs={max_pairs} checks={checks} violations={violations} twists={twists} {}",
            failures.join(" ")
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut spec = GeneratorSpec::new(
        GeneratorKind::ChairVertices,
        Window::new(q(&[0.0, 0.0]), q(&[128.0, 64.0])).unwrap(),
    );
    spec.iterations = 6;
    let (pts, _) = generate(&spec).unwrap();
    let profile = match repetitivity_profile(&pts, &[2.0, 4.0], 1e-9) {
        Ok(p) => p,
        Err(e) => return outcome(false, format!("profile failed: {e}")),
    };
    let ok = profile
        .iter()
        .all(|e| e.r_est.is_some_and(|r| r / e.r <= REPETITIVITY_RATIO));
    let parts: Vec<String> = profile
        .iter()
        .map(|e| format!("r={} R_est={:?} patches={}", e.r, e.r_est, e.patches))
        .collect();
    outcome(ok, format!("points={} {}", pts.len(), parts.join(" ")))
}

fn half_density(side: f64) -> PointSet {
    let window = Window::cube(2, 0.0, side).unwrap();
    let pts = window
        .lattice_points()
        .into_iter()
        .filter(|z| (z[0] as i64) % 2 == 0)
        .collect();
    PointSet::with_default_index(pts, window).unwrap()
}

fn criterion_9() -> Outcome {
    let describe = |r: &Result<DisplacementMap, MatchError>| match r {
        Ok(m) => format!("bound {}", m.bound),
        Err(e) => format!("{e}"),
    };
    let small = bottleneck_match(&half_density(16.0), 2.0);
    let large = bottleneck_match(&half_density(32.0), 2.0);
    let ok = match (&small, &large) {
        (Err(MatchError::Infeasible), Err(MatchError::Infeasible)) => true,
        (Ok(a), Ok(b)) => b.bound >= 2.0 * a.bound && b.bound > 0.0,
        (Ok(_), Err(MatchError::Infeasible)) => true,
        _ => false,
    };
    outcome(ok, format!("[0,16)^2: {}; [0,32)^2: {}", describe(&small), describe(&large)))
}

fn main() {
    let criteria: [(u32, fn() -> Outcome); 9] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
    ];
    let mut failed = 0;
    for (n, f) in criteria {
        let out = f();
        let tag = if out.ok { "PASS" } else { "FAIL" };
        println!("criterion {n}: {tag} {}", out.detail);
        if !out.ok {
            failed += 1;
        }
    }
    println!("acceptance: {} of 9 passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

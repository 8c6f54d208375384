//! Distances between points and segments in any dimension, and transversal
//! crossings of segments in the plane.

use super::point::{dist, dot, sub};

/// Distance from `p` to the closed segment `[a, b]`.
pub fn point_segment_distance(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab = sub(b, a);
    let len2 = dot(&ab, &ab);
    if len2 == 0.0 {
        return dist(p, a);
    }
    let t = (dot(&sub(p, a), &ab) / len2).clamp(0.0, 1.0);
    let closest: Vec<f64> = a.iter().zip(&ab).map(|(x, d)| x + t * d).collect();
    dist(p, &closest)
}

/// Distance between closed segments `[p1, q1]` and `[p2, q2]`.
///
/// The closest pair is either interior to both segments (the unconstrained
/// critical point) or involves an endpoint, so the minimum over those five
/// candidates is exact.
pub fn segment_segment_distance(p1: &[f64], q1: &[f64], p2: &[f64], q2: &[f64]) -> f64 {
    let mut best = point_segment_distance(p1, p2, q2)
        .min(point_segment_distance(q1, p2, q2))
        .min(point_segment_distance(p2, p1, q1))
        .min(point_segment_distance(q2, p1, q1));
    let d1 = sub(q1, p1);
    let d2 = sub(q2, p2);
    let r = sub(p1, p2);
    let a = dot(&d1, &d1);
    let e = dot(&d2, &d2);
    let b = dot(&d1, &d2);
    let denom = a * e - b * b;
    if denom > 1e-14 * a * e {
        let c = dot(&d1, &r);
        let f = dot(&d2, &r);
        let s = (b * f - c * e) / denom;
        let t = (a * f - b * c) / denom;
        if (0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&t) {
            let c1: Vec<f64> = p1.iter().zip(&d1).map(|(x, d)| x + s * d).collect();
            let c2: Vec<f64> = p2.iter().zip(&d2).map(|(x, d)| x + t * d).collect();
            best = best.min(dist(&c1, &c2));
        }
    }
    best
}

/// How two planar segments meet.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PlanarContact {
    Disjoint,
    /// Single intersection point at parameters `t` along the first and `u`
    /// along the second segment, with acute crossing angle in `[0, π/2]`.
    Crossing { t: f64, u: f64, point: [f64; 2], angle: f64 },
    /// Collinear with a shared piece.
    Overlap,
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

pub fn planar_contact(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> PlanarContact {
    let r = [b[0] - a[0], b[1] - a[1]];
    let s = [d[0] - c[0], d[1] - c[1]];
    let ca = [c[0] - a[0], c[1] - a[1]];
    let denom = cross(r, s);
    let rr = r[0] * r[0] + r[1] * r[1];
    let ss = s[0] * s[0] + s[1] * s[1];
    if denom.abs() <= 1e-15 * (rr * ss).sqrt() {
        // parallel: overlap iff collinear and projections intersect
        let off = cross(ca, r).abs();
        if off > 1e-15 * rr.max(1e-300).sqrt() * (ca[0].hypot(ca[1]) + 1.0) || rr == 0.0 {
            return PlanarContact::Disjoint;
        }
        let t0 = (ca[0] * r[0] + ca[1] * r[1]) / rr;
        let t1 = t0 + (s[0] * r[0] + s[1] * r[1]) / rr;
        let (lo, hi) = (t0.min(t1), t0.max(t1));
        return if hi < 0.0 || lo > 1.0 {
            PlanarContact::Disjoint
        } else {
            PlanarContact::Overlap
        };
    }
    let t = cross(ca, s) / denom;
    let u = cross(ca, r) / denom;
    if !(0.0..=1.0).contains(&t) || !(0.0..=1.0).contains(&u) {
        return PlanarContact::Disjoint;
    }
    let angle = denom.abs().atan2((r[0] * s[0] + r[1] * s[1]).abs());
    PlanarContact::Crossing {
        t,
        u,
        point: [a[0] + t * r[0], a[1] + t * r[1]],
        angle,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_segment_distance(p1: &[f64], q1: &[f64], p2: &[f64], q2: &[f64]) -> f64 {
        // dense parameter sweep along both segments
        let n = 400;
        let at = |p: &[f64], q: &[f64], s: f64| -> Vec<f64> {
            p.iter().zip(q).map(|(a, b)| a + s * (b - a)).collect()
        };
        let mut best = f64::INFINITY;
        for i in 0..=n {
            let x = at(p1, q1, i as f64 / n as f64);
            best = best.min(point_segment_distance(&x, p2, q2));
        }
        for j in 0..=n {
            let y = at(p2, q2, j as f64 / n as f64);
            best = best.min(point_segment_distance(&y, p1, q1));
        }
        best
    }

    #[test]
    fn segment_distance_agrees_with_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let mut r = || -> Vec<f64> { (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect() };
            let (p1, q1, p2, q2) = (r(), r(), r(), r());
            let fast = segment_segment_distance(&p1, &q1, &p2, &q2);
            let slow = brute_segment_distance(&p1, &q1, &p2, &q2);
            assert!(fast <= slow + 1e-12, "{fast} > {slow}");
            assert!(slow - fast < 1e-2, "{fast} vs {slow}");
        }
    }

    #[test]
    fn parallel_segments() {
        let d = segment_segment_distance(&[0.0, 0.0], &[1.0, 0.0], &[0.5, 1.0], &[2.0, 1.0]);
        assert!((d - 1.0).abs() < 1e-15);
        let d = segment_segment_distance(&[0.0, 0.0], &[1.0, 0.0], &[2.0, 0.0], &[3.0, 0.0]);
        assert!((d - 1.0).abs() < 1e-15);
    }

    #[test]
    fn perpendicular_crossing() {
        match planar_contact(&[-1.0, 0.0], &[1.0, 0.0], &[0.0, -1.0], &[0.0, 1.0]) {
            PlanarContact::Crossing { t, u, point, angle } => {
                assert_eq!((t, u), (0.5, 0.5));
                assert_eq!(point, [0.0, 0.0]);
                assert!((angle - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn collinear_overlap_and_gap() {
        assert_eq!(
            planar_contact(&[0.0, 0.0], &[2.0, 0.0], &[1.0, 0.0], &[3.0, 0.0]),
            PlanarContact::Overlap
        );
        assert_eq!(
            planar_contact(&[0.0, 0.0], &[1.0, 0.0], &[2.0, 0.0], &[3.0, 0.0]),
            PlanarContact::Disjoint
        );
        assert_eq!(
            planar_contact(&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]),
            PlanarContact::Disjoint
        );
    }
}

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::RectifyError;
use crate::geom::{dist, dot, norm, Point};

/// Largest allowed `|target - center| / radius` of a ball push.
pub const MAX_PUSH_RATIO: f64 = 0.5;

/// Tolerance of the radial solve in [`LocalMap::apply_inverse`].
pub const ROOT_TOL: f64 = 1e-12;

/// A homeomorphism of space supported in a closed ball.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LocalMap {
    /// `u ↦ u + max(0, 1 - |u - center| / radius) (target - center)`.
    BallPush {
        center: Point,
        radius: f64,
        target: Point,
    },
    /// Rotation about `center` by an angle falling linearly from `π` at
    /// radius `epsilon / 6` to `0` at radius `epsilon / 3`.
    HalfTwist { center: Point, epsilon: f64 },
}

pub fn ball_push(center: Point, radius: f64, target: Point) -> Result<LocalMap, RectifyError> {
    let m = LocalMap::BallPush {
        center,
        radius,
        target,
    };
    m.validate()?;
    Ok(m)
}

pub fn half_twist(center: Point, epsilon: f64) -> Result<LocalMap, RectifyError> {
    let m = LocalMap::HalfTwist { center, epsilon };
    m.validate()?;
    Ok(m)
}

/// Equally spaced waypoints from `a` to `b` with gaps strictly below
/// `radius / 2`; the last waypoint is `b` itself.
pub fn tube_chain(a: &Point, b: &Point, radius: f64) -> Vec<Point> {
    let len = a.distance(b);
    if len == 0.0 {
        return vec![a.clone()];
    }
    let step = 0.5 * radius * (1.0 - 1e-9);
    let k = (len / step).ceil().max(1.0) as usize;
    let mut out: Vec<Point> = (0..k).map(|i| a.lerp(b, i as f64 / k as f64)).collect();
    out.push(b.clone());
    out
}

/// Ball pushes of radius `radius` moving each waypoint to the next.
pub fn tube_push(waypoints: &[Point], radius: f64) -> Result<Vec<LocalMap>, RectifyError> {
    waypoints
        .windows(2)
        .map(|w| {
            let step = w[0].distance(&w[1]);
            if step > MAX_PUSH_RATIO * radius {
                return Err(RectifyError::StepTooLong { step, radius });
            }
            ball_push(w[0].clone(), radius, w[1].clone())
        })
        .collect()
}

impl LocalMap {
    pub fn center(&self) -> &Point {
        match self {
            LocalMap::BallPush { center, .. } | LocalMap::HalfTwist { center, .. } => center,
        }
    }

    pub fn dim(&self) -> usize {
        self.center().dim()
    }

    /// Radius of the closed ball outside which the map is the identity.
    pub fn support_radius(&self) -> f64 {
        match self {
            LocalMap::BallPush { radius, .. } => *radius,
            LocalMap::HalfTwist { epsilon, .. } => epsilon / 3.0,
        }
    }

    pub fn is_twist(&self) -> bool {
        matches!(self, LocalMap::HalfTwist { .. })
    }

    pub fn push_ratio(&self) -> Option<f64> {
        match self {
            LocalMap::BallPush {
                center,
                radius,
                target,
            } => Some(center.distance(target) / radius),
            LocalMap::HalfTwist { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<(), RectifyError> {
        let bad = |m: &str| Err(RectifyError::InvalidParams(m.to_string()));
        match self {
            LocalMap::BallPush {
                center,
                radius,
                target,
            } => {
                if center.dim() == 0 || center.dim() != target.dim() {
                    return bad("ball push center and target differ in dimension");
                }
                if !center.is_finite() || !target.is_finite() {
                    return bad("ball push is not finite");
                }
                if !(*radius > 0.0 && radius.is_finite()) {
                    return bad("ball push radius must be positive");
                }
                let ratio = center.distance(target) / radius;
                if ratio > MAX_PUSH_RATIO {
                    return Err(RectifyError::PushRatioExceeded(ratio));
                }
            }
            LocalMap::HalfTwist { center, epsilon } => {
                if center.dim() != 2 {
                    return Err(RectifyError::TwistDimension(center.dim()));
                }
                if !center.is_finite() {
                    return bad("twist center is not finite");
                }
                if !(*epsilon > 0.0 && epsilon.is_finite()) {
                    return bad("twist epsilon must be positive");
                }
            }
        }
        Ok(())
    }

    /// Whether `u` lies in the open support ball, the only place the map can
    /// move points.
    pub fn moves(&self, u: &[f64]) -> bool {
        dist(u, self.center().coords()) < self.support_radius()
    }

    /// Applies the map in place.
    pub fn apply(&self, u: &mut [f64]) {
        match self {
            LocalMap::BallPush {
                center,
                radius,
                target,
            } => {
                let c = center.coords();
                if u == c {
                    u.copy_from_slice(target.coords());
                    return;
                }
                let r = dist(u, c);
                if r >= *radius {
                    return;
                }
                let f = 1.0 - r / radius;
                for ((x, p), c) in u.iter_mut().zip(target.coords()).zip(c) {
                    *x += f * (p - c);
                }
            }
            LocalMap::HalfTwist { center, epsilon } => {
                rotate(u, center.coords(), *epsilon, 1.0);
            }
        }
    }

    /// Applies the inverse map in place.
    pub fn apply_inverse(&self, y: &mut [f64]) -> Result<(), RectifyError> {
        match self {
            LocalMap::BallPush {
                center,
                radius,
                target,
            } => {
                let c = center.coords();
                if y == target.coords() {
                    y.copy_from_slice(c);
                    return Ok(());
                }
                let yc: Vec<f64> = y.iter().zip(c).map(|(a, b)| a - b).collect();
                if norm(&yc) >= *radius {
                    return Ok(());
                }
                let v: Vec<f64> = target.coords().iter().zip(c).map(|(a, b)| a - b).collect();
                let s = solve_push_scale(&yc, &v, *radius)?;
                for (x, vi) in y.iter_mut().zip(&v) {
                    *x -= s * vi;
                }
                Ok(())
            }
            LocalMap::HalfTwist { center, epsilon } => {
                rotate(y, center.coords(), *epsilon, -1.0);
                Ok(())
            }
        }
    }

    pub fn image(&self, u: &Point) -> Point {
        let mut v = u.coords().to_vec();
        self.apply(&mut v);
        Point::new(v)
    }

    pub fn preimage(&self, y: &Point) -> Result<Point, RectifyError> {
        let mut v = y.coords().to_vec();
        self.apply_inverse(&mut v)?;
        Ok(Point::new(v))
    }

    /// Axis-aligned box containing the support.
    pub fn support_box(&self) -> (Vec<f64>, Vec<f64>) {
        let r = self.support_radius();
        let c = self.center().coords();
        (
            c.iter().map(|x| x - r).collect(),
            c.iter().map(|x| x + r).collect(),
        )
    }
}

/// Twist angle at distance `r` from the center.
pub(crate) fn twist_angle(r: f64, epsilon: f64) -> f64 {
    let inner = epsilon / 6.0;
    let outer = epsilon / 3.0;
    if r <= inner {
        PI
    } else if r >= outer {
        0.0
    } else {
        PI * (outer - r) / inner
    }
}

fn rotate(u: &mut [f64], w: &[f64], epsilon: f64, sign: f64) {
    let d = [u[0] - w[0], u[1] - w[1]];
    let r = d[0].hypot(d[1]);
    if r >= epsilon / 3.0 {
        return;
    }
    if r <= epsilon / 6.0 {
        u[0] = w[0] - d[0];
        u[1] = w[1] - d[1];
        return;
    }
    let (s, c) = (sign * twist_angle(r, epsilon)).sin_cos();
    u[0] = w[0] + c * d[0] - s * d[1];
    u[1] = w[1] + s * d[0] + c * d[1];
}

/// Root in `[0, 1]` of `g(s) = s - 1 + |yc - s v| / radius`, increasing with
/// slope at least `1 - |v| / radius >= 1/2`.
fn solve_push_scale(yc: &[f64], v: &[f64], radius: f64) -> Result<f64, RectifyError> {
    let w_at = |s: f64| -> Vec<f64> { yc.iter().zip(v).map(|(a, b)| a - s * b).collect() };
    let g = |s: f64| s - 1.0 + norm(&w_at(s)) / radius;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut s = 1.0 - norm(yc) / radius;
    for _ in 0..100 {
        let gs = g(s);
        if gs.abs() <= 1e-16 {
            break;
        }
        if gs < 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        if hi - lo <= 1e-17 {
            break;
        }
        let w = w_at(s);
        let nw = norm(&w);
        let slope = if nw > 0.0 {
            1.0 - dot(&w, v) / (radius * nw)
        } else {
            1.0
        };
        let next = s - gs / slope;
        s = if next > lo && next < hi {
            next
        } else {
            0.5 * (lo + hi)
        };
    }
    let residual = g(s).abs();
    if residual > ROOT_TOL {
        return Err(RectifyError::InverseRootFindFailed(residual));
    }
    Ok(s)
}

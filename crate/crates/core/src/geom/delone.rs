//! Delone constants, patches and empirical repetitivity.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::point::{dist, Point, Window};
use super::point_set::PointSet;
use super::GeomError;

/// Separation and covering radius of a finite window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeloneConstants {
    /// Minimum pairwise distance; `None` for a single point.
    pub r_sep: Option<f64>,
    /// Largest distance from a grid node of the shrunk window to the set.
    pub r_cov: f64,
    /// Largest axis spacing of the grid used for `r_cov`.
    pub grid_pitch: f64,
}

/// Exact minimum pairwise distance, `None` with fewer than two points.
pub fn separation(s: &PointSet) -> Option<f64> {
    if s.len() < 2 {
        return None;
    }
    (0..s.len())
        .into_par_iter()
        .map(|i| {
            s.index()
                .nearest(s.points()[i].coords(), Some(i))
                .map_or(f64::INFINITY, |(_, d)| d)
        })
        .reduce(|| f64::INFINITY, f64::min)
        .into()
}

pub fn delone_constants(s: &PointSet, margin: f64) -> Result<DeloneConstants, GeomError> {
    if s.is_empty() {
        return Err(GeomError::EmptySet);
    }
    if !(margin >= 0.0) || 2.0 * margin >= s.window().min_extent() {
        return Err(GeomError::DegenerateWindow);
    }
    let region = s.window().shrink(margin).ok_or(GeomError::DegenerateWindow)?;
    let r_sep = separation(s);
    let dim = s.dim();
    let pitch_cap = match r_sep {
        Some(r) => r / 4.0,
        None => region.min_extent() / 64.0,
    };
    let counts: Vec<usize> = (0..dim)
        .map(|a| ((region.extent(a) / pitch_cap).ceil() as usize).max(1))
        .collect();
    let pitches: Vec<f64> = (0..dim)
        .map(|a| region.extent(a) / counts[a] as f64)
        .collect();
    let total: usize = counts.iter().map(|c| c + 1).product();
    let r_cov = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut rem = flat;
            let mut node = vec![0.0; dim];
            for a in (0..dim).rev() {
                let k = rem % (counts[a] + 1);
                rem /= counts[a] + 1;
                node[a] = if k == counts[a] {
                    region.upper[a]
                } else {
                    region.lower[a] + k as f64 * pitches[a]
                };
            }
            s.nearest(&node).map_or(f64::INFINITY, |(_, d)| d)
        })
        .reduce(|| 0.0, f64::max);
    Ok(DeloneConstants {
        r_sep,
        r_cov,
        grid_pitch: pitches.iter().cloned().fold(0.0, f64::max),
    })
}

/// Points of a set inside a closed ball, translated so the ball center sits
/// at the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Patch {
    pub center: Point,
    pub radius: f64,
    pub offsets: Vec<Point>,
}

pub fn patch_at(s: &PointSet, center: &Point, r: f64) -> Result<Patch, GeomError> {
    if !(r > 0.0) || !s.window().contains_ball(center.coords(), r) {
        return Err(GeomError::BallOutsideWindow);
    }
    let offsets = s
        .within(center.coords(), r)
        .into_iter()
        .map(|i| s.points()[i].sub(center))
        .collect();
    Ok(Patch {
        center: center.clone(),
        radius: r,
        offsets,
    })
}

fn is_copy_at(s: &PointSet, patch: &Patch, t: &[f64], tol: f64) -> bool {
    let shifted = |o: &Point| -> Vec<f64> { o.coords().iter().zip(t).map(|(a, b)| a + b).collect() };
    if !patch
        .offsets
        .iter()
        .all(|o| s.index().any_within(&shifted(o), tol))
    {
        return false;
    }
    let inner = patch.radius - tol;
    if inner < 0.0 {
        return true;
    }
    s.within(t, inner).into_iter().all(|i| {
        let y = s.points()[i].coords();
        patch
            .offsets
            .iter()
            .any(|o| dist(y, &shifted(o)) <= tol)
    })
}

/// Searches the ball `B(search_center, big_r)` for a translated copy of
/// `patch`, returning where the patch center lands.
///
/// Candidate translations send the patch point nearest its center onto
/// points of `s` in the ball, closest to `search_center` first. The copy's
/// whole `patch.radius` ball must fit inside the search ball. An empty patch
/// never matches.
pub fn find_translated_copy(
    s: &PointSet,
    patch: &Patch,
    search_center: &Point,
    big_r: f64,
    tol: f64,
) -> Result<Option<Point>, GeomError> {
    if !(tol >= 0.0) || !s.window().contains_ball(search_center.coords(), big_r) {
        return Err(GeomError::BallOutsideWindow);
    }
    let Some(q0) = patch
        .offsets
        .iter()
        .min_by(|a, b| a.norm().total_cmp(&b.norm()))
    else {
        return Ok(None);
    };
    let slack = big_r - patch.radius;
    if slack < 0.0 {
        return Ok(None);
    }
    let mut anchors = s.within(search_center.coords(), big_r);
    anchors.sort_by(|&a, &b| {
        let da = s.points()[a].distance(search_center);
        let db = s.points()[b].distance(search_center);
        da.total_cmp(&db).then(a.cmp(&b))
    });
    for i in anchors {
        let t = s.points()[i].sub(q0);
        if t.distance(search_center) > slack + 1e-12 {
            continue;
        }
        if is_copy_at(s, patch, t.coords(), tol) {
            return Ok(Some(t));
        }
    }
    Ok(None)
}

/// Sampling density for [`repetitivity_profile_with`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileOptions {
    /// Patch anchors per axis.
    pub anchors_per_axis: usize,
    /// Search-ball positions per axis.
    pub balls_per_axis: usize,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions {
            anchors_per_axis: 4,
            balls_per_axis: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub r: f64,
    /// Smallest tested `R` on the schedule `2r, 4r, ...`, `None` when the
    /// schedule outgrew the window first.
    pub r_est: Option<f64>,
    pub patches: usize,
}

fn strictly_inside(w: &Window, c: &[f64], r: f64) -> bool {
    (0..w.dim()).all(|a| w.lower[a] <= c[a] - r && c[a] + r < w.upper[a])
}

fn grid_nodes(w: &Window, inset: f64, per_axis: usize) -> Vec<Vec<f64>> {
    let dim = w.dim();
    let axes: Vec<Vec<f64>> = (0..dim)
        .map(|a| {
            let lo = w.lower[a] + inset;
            let span = (w.extent(a) - 2.0 * inset).max(0.0);
            let n = if span == 0.0 { 1 } else { per_axis.max(1) };
            (0..n).map(|k| lo + span * (k as f64 + 0.5) / n as f64).collect()
        })
        .collect();
    let mut out = vec![Vec::new()];
    for axis in axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&x| {
                    let mut p = prefix.clone();
                    p.push(x);
                    p
                })
            })
            .collect();
    }
    out
}

pub fn repetitivity_profile(
    s: &PointSet,
    radii: &[f64],
    tol: f64,
) -> Result<Vec<ProfileEntry>, GeomError> {
    repetitivity_profile_with(s, radii, tol, ProfileOptions::default())
}

pub fn repetitivity_profile_with(
    s: &PointSet,
    radii: &[f64],
    tol: f64,
    opts: ProfileOptions,
) -> Result<Vec<ProfileEntry>, GeomError> {
    if radii.iter().any(|r| !(*r > 0.0)) || radii.windows(2).any(|w| w[0] > w[1]) {
        return Err(GeomError::InvalidArgument("radii must be positive and ascending"));
    }
    let window = s.window();
    let mut out = Vec::with_capacity(radii.len());
    for &r in radii {
        if 2.0 * (2.0 * r) >= window.min_extent() {
            return Err(GeomError::WindowTooSmall);
        }
        let mut anchors: Vec<usize> = grid_nodes(window, r, opts.anchors_per_axis)
            .iter()
            .filter_map(|node| s.nearest(node).map(|(i, _)| i))
            .filter(|&i| strictly_inside(window, s.points()[i].coords(), r))
            .collect();
        anchors.sort_unstable();
        anchors.dedup();
        if anchors.is_empty() {
            return Err(GeomError::WindowTooSmall);
        }
        let patches: Vec<Patch> = anchors
            .iter()
            .map(|&i| patch_at(s, &s.points()[i], r))
            .collect::<Result<_, _>>()?;
        let mut big_r = 2.0 * r;
        let mut r_est = None;
        while 2.0 * big_r < window.min_extent() {
            let balls: Vec<Point> = grid_nodes(window, big_r, opts.balls_per_axis)
                .into_iter()
                .filter(|c| strictly_inside(window, c, big_r))
                .map(Point::new)
                .collect();
            let ok = !balls.is_empty()
                && patches.par_iter().all(|p| {
                    balls.iter().all(|c| {
                        matches!(find_translated_copy(s, p, c, big_r, tol), Ok(Some(_)))
                    })
                });
            if ok {
                r_est = Some(big_r);
                break;
            }
            big_r *= 2.0;
        }
        out.push(ProfileEntry {
            r,
            r_est,
            patches: patches.len(),
        });
    }
    Ok(out)
}

//! Moving sources slightly so the travel segments become quantitatively
//! non-degenerate.

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::local_map::{ball_push, LocalMap};
use super::RectifyError;
use crate::generators::uniform_in_ball;
use crate::geom::segment::{planar_contact, point_segment_distance, segment_segment_distance, PlanarContact};
use crate::geom::{dist, GridIndex, Point};
use crate::matching::DisplacementMap;

/// Pairs whose source and target are this close are left alone.
pub const DEGENERATE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneralPositionParams {
    /// Required separation of the segment arrangement.
    pub epsilon: f64,
    /// Largest tube radius in the plane.
    pub epsilon_prime: f64,
    /// Largest source perturbation.
    pub delta: f64,
    pub seed: u64,
    /// Resampling rounds per value of epsilon.
    pub max_retries: u32,
    pub epsilon_floor: f64,
}

impl GeneralPositionParams {
    /// Defaults scaled to the separation of the sources.
    pub fn for_separation(r_sep: f64) -> Self {
        let s = r_sep.min(1.0);
        let epsilon = 0.9 * s / 4.0;
        GeneralPositionParams {
            epsilon,
            epsilon_prime: 0.45 * epsilon,
            delta: 0.1 * s / 4.0,
            seed: 0,
            max_retries: 64,
            epsilon_floor: 1e-3,
        }
    }

    pub fn validate(&self, r_sep: f64) -> Result<(), RectifyError> {
        let bad = |m: String| Err(RectifyError::InvalidParams(m));
        let s = r_sep.min(1.0);
        if !(r_sep > 0.0) {
            return bad(format!("separation must be positive, got {r_sep}"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < s / 4.0) {
            return bad(format!("epsilon must lie in (0, {})", s / 4.0));
        }
        if !(self.epsilon_prime > 0.0 && self.epsilon_prime <= 0.45 * self.epsilon) {
            return bad("epsilon_prime must lie in (0, 0.45 epsilon]".into());
        }
        if !(self.delta >= 0.0 && self.delta < s / 4.0) {
            return bad(format!("delta must lie in [0, {})", s / 4.0));
        }
        if !(self.epsilon_floor > 0.0 && self.epsilon_floor <= self.epsilon) {
            return bad("epsilon_floor must lie in (0, epsilon]".into());
        }
        Ok(())
    }

    /// Radius of the perturbation pushes; their supports are pairwise
    /// disjoint because sources are `r_sep` apart.
    pub fn push_radius(r_sep: f64) -> f64 {
        0.45 * r_sep.min(1.0)
    }

    /// Perturbation size actually drawn, capped so every push keeps ratio
    /// at most one half.
    pub fn effective_delta(&self, r_sep: f64) -> f64 {
        self.delta.min(0.5 * Self::push_radius(r_sep))
    }
}

/// A point where a segment crosses another one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub point: Point,
    /// Pair index of the other segment.
    pub other: usize,
    pub angle: f64,
    /// Parameter along this segment.
    pub t: f64,
}

/// Travel segment of one non-degenerate pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub pair: usize,
    pub a: Point,
    pub b: Point,
    /// Ordered by `t`; always empty outside the plane.
    pub crossings: Vec<Crossing>,
}

#[derive(Clone, Debug)]
pub struct GeneralPosition {
    pub prefix: Vec<LocalMap>,
    /// Pair index moved by each prefix map.
    pub prefix_owner: Vec<usize>,
    /// Position of every source after the prefix.
    pub perturbed: Vec<Point>,
    pub segments: Vec<Segment>,
    pub epsilon: f64,
}

/// Smallest distance between two distinct sources.
pub fn source_separation(m: &DisplacementMap) -> Option<f64> {
    let pts: Vec<Point> = m.sources().cloned().collect();
    if pts.len() < 2 {
        return None;
    }
    let idx = GridIndex::covering(&pts, m.dim(), 1.0).ok()?;
    (0..pts.len())
        .filter_map(|i| idx.nearest(pts[i].coords(), Some(i)).map(|x| x.1))
        .reduce(f64::min)
}

struct Layout {
    dim: usize,
    /// (pair, a, b)
    segs: Vec<(usize, Vec<f64>, Vec<f64>)>,
    /// (point, owning pair, movable)
    rest: Vec<(Vec<f64>, usize, bool)>,
}

struct Check {
    min: f64,
    bad: BTreeSet<usize>,
    /// (segment i, segment j, point, angle, t along i, u along j)
    crossings: Vec<(usize, usize, [f64; 2], f64, f64, f64)>,
}

impl Layout {
    fn new(m: &DisplacementMap, perturbed: &[Point]) -> Self {
        let mut segs = Vec::new();
        let mut rest = Vec::new();
        for (i, ((_, t), v)) in m.pairs.iter().zip(perturbed).enumerate() {
            if is_degenerate(v, t) {
                rest.push((v.coords().to_vec(), i, false));
            } else {
                segs.push((i, v.coords().to_vec(), t.coords().to_vec()));
                rest.push((v.coords().to_vec(), i, true));
                rest.push((t.coords().to_vec(), i, false));
            }
        }
        Layout {
            dim: m.dim(),
            segs,
            rest,
        }
    }

    /// Finds every violated condition at level `eps`; `min` is the smallest
    /// examined quantity, capped at `eps`.
    fn check(&self, eps: f64) -> Check {
        let mut out = Check {
            min: eps,
            bad: BTreeSet::new(),
            crossings: Vec::new(),
        };
        if self.segs.is_empty() {
            return out;
        }
        let mids: Vec<Point> = self
            .segs
            .iter()
            .map(|(_, a, b)| Point::new(a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect()))
            .collect();
        let lens: Vec<f64> = self.segs.iter().map(|(_, a, b)| dist(a, b)).collect();
        let lmax = lens.iter().copied().fold(0.0, f64::max);
        let idx = GridIndex::covering(&mids, self.dim, (lmax + eps).max(1e-3))
            .expect("segment midpoints are finite");

        let note = |v: f64, who: &[usize], out: &mut Check| {
            let v = if v.is_nan() { 0.0 } else { v };
            out.min = out.min.min(v);
            if v < eps {
                out.bad.extend(who.iter().copied());
            }
        };

        for (i, (pi, a, b)) in self.segs.iter().enumerate() {
            idx.for_each_within(mids[i].coords(), 0.5 * (lens[i] + lmax) + eps, |j| {
                if j <= i {
                    return;
                }
                let (pj, c, d) = &self.segs[j];
                if self.dim == 2 {
                    match planar_contact(a, b, c, d) {
                        PlanarContact::Disjoint => {}
                        PlanarContact::Overlap => note(0.0, &[*pi, *pj], &mut out),
                        PlanarContact::Crossing { t, u, point, angle } => {
                            let ends = [a, b, c, d]
                                .iter()
                                .map(|e| dist(&point, e))
                                .fold(f64::INFINITY, f64::min);
                            note(angle.min(ends), &[*pi, *pj], &mut out);
                            out.crossings.push((i, j, point, angle, t, u));
                        }
                    }
                } else {
                    note(segment_segment_distance(a, b, c, d), &[*pi, *pj], &mut out);
                }
            });
        }

        for (p, owner, movable) in &self.rest {
            idx.for_each_within(p, 0.5 * lmax + eps, |j| {
                let (pj, a, b) = &self.segs[j];
                if pj == owner {
                    return;
                }
                let d = point_segment_distance(p, a, b);
                if *movable {
                    note(d, &[*owner, *pj], &mut out);
                } else {
                    note(d, &[*pj], &mut out);
                }
            });
        }

        if out.crossings.len() > 1 {
            let pts: Vec<Point> = out.crossings.iter().map(|c| Point::new(c.2.to_vec())).collect();
            let cidx = GridIndex::covering(&pts, 2, eps.max(1e-3)).expect("crossings are finite");
            let mut close = Vec::new();
            for (k, p) in pts.iter().enumerate() {
                cidx.for_each_within(p.coords(), eps, |l| {
                    if l > k {
                        close.push((k, l, p.distance(&pts[l])));
                    }
                });
            }
            for (k, l, d) in close {
                let (ck, cl) = (out.crossings[k], out.crossings[l]);
                let who = [
                    self.segs[ck.0].0,
                    self.segs[ck.1].0,
                    self.segs[cl.0].0,
                    self.segs[cl.1].0,
                ];
                note(d, &who, &mut out);
            }
        }
        out
    }
}

fn is_degenerate(v: &Point, t: &Point) -> bool {
    v.distance(t) <= DEGENERATE_TOL
}

/// Smallest general-position quantity of the arrangement of segments from
/// `perturbed[i]` to the targets of `m`, capped at `cap`.
pub fn general_position_measure(m: &DisplacementMap, perturbed: &[Point], cap: f64) -> f64 {
    Layout::new(m, perturbed).check(cap).min
}

fn check_monotone(m: &DisplacementMap) -> Result<(), RectifyError> {
    let mut pairs: Vec<(f64, f64)> = m.pairs.iter().map(|(s, t)| (s[0], t[0])).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pairs.windows(2).all(|w| w[0].1 < w[1].1) {
        Ok(())
    } else {
        Err(RectifyError::NonMonotone1D)
    }
}

/// Searches for source perturbations putting the segments in general
/// position at the largest level `epsilon / 2^k` not below the floor.
///
/// The first candidate is the unperturbed arrangement. Each later candidate
/// redraws the perturbation of every source involved in a violated
/// condition, so well separated regions keep their earlier draws.
pub fn perturb_general_position(
    m: &DisplacementMap,
    params: &GeneralPositionParams,
    r_sep: f64,
) -> Result<GeneralPosition, RectifyError> {
    params.validate(r_sep)?;
    if let Some(actual) = source_separation(m) {
        if r_sep > actual * (1.0 + 1e-12) {
            return Err(RectifyError::InvalidParams(format!(
                "separation {r_sep} exceeds the source separation {actual}"
            )));
        }
    }
    let dim = m.dim();
    let sources: Vec<Point> = m.sources().cloned().collect();
    if dim == 1 {
        check_monotone(m)?;
        let segments = m
            .pairs
            .iter()
            .enumerate()
            .filter(|(_, (s, t))| !is_degenerate(s, t))
            .map(|(i, (s, t))| Segment {
                pair: i,
                a: s.clone(),
                b: t.clone(),
                crossings: Vec::new(),
            })
            .collect();
        return Ok(GeneralPosition {
            prefix: Vec::new(),
            prefix_owner: Vec::new(),
            perturbed: sources,
            segments,
            epsilon: params.epsilon,
        });
    }

    let delta = params.effective_delta(r_sep);
    let movable: Vec<bool> = m.pairs.iter().map(|(s, t)| !is_degenerate(s, t)).collect();
    let mut offsets: Vec<Vec<f64>> = vec![vec![0.0; dim]; m.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let perturb = |offsets: &[Vec<f64>]| -> Vec<Point> {
        sources
            .iter()
            .zip(offsets)
            .map(|(s, u)| {
                if u.iter().all(|x| *x == 0.0) {
                    s.clone()
                } else {
                    s.add(&Point::new(u.clone()))
                }
            })
            .collect()
    };

    let mut eps = params.epsilon;
    let (perturbed, check) = 'search: loop {
        for round in 0..=params.max_retries {
            let perturbed = perturb(&offsets);
            let layout = Layout::new(m, &perturbed);
            let check = layout.check(eps);
            if check.bad.is_empty() {
                log::debug!("general position at epsilon {eps} after {round} rounds");
                break 'search (perturbed, (layout, check));
            }
            let redraw: Vec<usize> = check.bad.iter().copied().filter(|&i| movable[i]).collect();
            if delta == 0.0 || redraw.is_empty() {
                break;
            }
            for i in redraw {
                offsets[i] = uniform_in_ball(&mut rng, dim, delta);
            }
        }
        eps *= 0.5;
        if eps < params.epsilon_floor {
            return Err(RectifyError::GeneralPositionUnreachable(params.epsilon_floor));
        }
    };
    let (layout, check) = check;

    let push_radius = GeneralPositionParams::push_radius(r_sep);
    let mut prefix = Vec::new();
    let mut prefix_owner = Vec::new();
    for (i, (s, v)) in sources.iter().zip(&perturbed).enumerate() {
        if s != v {
            prefix.push(ball_push(s.clone(), push_radius, v.clone())?);
            prefix_owner.push(i);
        }
    }

    let mut segments: Vec<Segment> = layout
        .segs
        .iter()
        .map(|(pair, a, b)| Segment {
            pair: *pair,
            a: Point::new(a.clone()),
            b: Point::new(b.clone()),
            crossings: Vec::new(),
        })
        .collect();
    for &(i, j, point, angle, t, u) in &check.crossings {
        let point = Point::new(point.to_vec());
        let (pi, pj) = (segments[i].pair, segments[j].pair);
        segments[i].crossings.push(Crossing {
            point: point.clone(),
            other: pj,
            angle,
            t,
        });
        segments[j].crossings.push(Crossing {
            point,
            other: pi,
            angle,
            t: u,
        });
    }
    for s in &mut segments {
        s.crossings.sort_by(|x, y| x.t.total_cmp(&y.t));
    }
    Ok(GeneralPosition {
        prefix,
        prefix_owner,
        perturbed,
        segments,
        epsilon: eps,
    })
}

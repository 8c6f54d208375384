use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hopcroft_karp::{max_matching, WeightedAdjacency};
use super::{lex_cmp, max_displacement, DisplacementMap, MatchError, INTEGRAL_TOL};
use crate::geom::{dist, Point, PointSet, Window};

/// Which vertices a matching must cover.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchPolicy {
    /// Every core source and every core lattice point is matched, sources
    /// and lattice points drawn from the whole window.
    #[default]
    CoverBoth,
    /// Only core sources must be matched; core lattice points may be left
    /// without a preimage.
    SourcesOnly,
}

/// Integer points of a window with constant-time index lookup.
struct Lattice {
    points: Vec<Point>,
    lo: Vec<i64>,
    hi: Vec<i64>,
    strides: Vec<usize>,
}

impl Lattice {
    fn new(window: &Window) -> Self {
        let dim = window.dim();
        let lo: Vec<i64> = (0..dim).map(|a| window.lower[a].ceil() as i64).collect();
        let hi: Vec<i64> = (0..dim).map(|a| window.upper[a].ceil() as i64).collect();
        let mut strides = vec![1usize; dim];
        for a in (0..dim.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * (hi[a + 1] - lo[a + 1]).max(0) as usize;
        }
        Lattice {
            points: window.lattice_points(),
            lo,
            hi,
            strides,
        }
    }

    /// Lattice points within `r` of `p`, as `(index, distance)` sorted.
    fn near(&self, p: &[f64], r: f64) -> Vec<(usize, f64)> {
        let dim = p.len();
        let from: Vec<i64> = (0..dim)
            .map(|a| ((p[a] - r).ceil() as i64).max(self.lo[a]))
            .collect();
        let to: Vec<i64> = (0..dim)
            .map(|a| ((p[a] + r).floor() as i64).min(self.hi[a] - 1))
            .collect();
        let mut out = Vec::new();
        if (0..dim).any(|a| from[a] > to[a]) {
            return out;
        }
        let mut cur = from.clone();
        'outer: loop {
            let idx: usize = (0..dim)
                .map(|a| (cur[a] - self.lo[a]) as usize * self.strides[a])
                .sum();
            let d = dist(p, self.points[idx].coords());
            if d <= r {
                out.push((idx, d));
            }
            for a in (0..dim).rev() {
                cur[a] += 1;
                if cur[a] <= to[a] {
                    continue 'outer;
                }
                cur[a] = from[a];
            }
            break;
        }
        sort_edges(&mut out);
        out
    }
}

fn sort_edges(e: &mut [(usize, f64)]) {
    e.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
}

struct Instance<'a> {
    sources: &'a [Point],
    lattice: Lattice,
    core_src: Vec<usize>,
    core_lat: Vec<usize>,
    /// Position of a lattice point in `core_lat`.
    lat_pos: Vec<Option<usize>>,
    adj_s: WeightedAdjacency,
    adj_l: WeightedAdjacency,
}

impl<'a> Instance<'a> {
    fn build_edges(&mut self, s: &PointSet, r: f64) {
        let lattice = &self.lattice;
        self.adj_s = self
            .core_src
            .par_iter()
            .map(|&i| lattice.near(s.points()[i].coords(), r))
            .collect();
        self.adj_l = self
            .core_lat
            .par_iter()
            .map(|&j| {
                let l = lattice.points[j].coords();
                let mut e: Vec<(usize, f64)> = s
                    .within(l, r)
                    .into_iter()
                    .map(|i| (i, dist(s.points()[i].coords(), l)))
                    .collect();
                sort_edges(&mut e);
                e
            })
            .collect();
    }

    fn feasible(&self, c: f64, policy: MatchPolicy) -> bool {
        max_matching(&self.adj_s, self.lattice.points.len(), c).size == self.core_src.len()
            && (policy == MatchPolicy::SourcesOnly
                || max_matching(&self.adj_l, self.sources.len(), c).size == self.core_lat.len())
    }
}

/// Bottleneck matching with [`MatchPolicy::CoverBoth`].
pub fn bottleneck_match(s: &PointSet, margin: f64) -> Result<DisplacementMap, MatchError> {
    bottleneck_match_with(s, margin, MatchPolicy::CoverBoth)
}

/// Smallest `c` admitting a matching of the required vertices with every
/// edge of length `<= c`, together with one such matching.
///
/// The core is the window shrunk by `margin`; sources and lattice candidates
/// come from the whole window. Only pairs touching the core are reported.
pub fn bottleneck_match_with(
    s: &PointSet,
    margin: f64,
    policy: MatchPolicy,
) -> Result<DisplacementMap, MatchError> {
    if !(margin >= 0.0 && margin.is_finite()) {
        return Err(MatchError::BadMargin);
    }
    let window = s.window();
    let core = window.shrink(margin).ok_or(MatchError::EmptyCore)?;
    let lattice = Lattice::new(window);
    let core_src: Vec<usize> = (0..s.len())
        .filter(|&i| core.contains(s.points()[i].coords()))
        .collect();
    let mut lat_pos = vec![None; lattice.points.len()];
    let mut core_lat = Vec::new();
    for (j, l) in lattice.points.iter().enumerate() {
        if core.contains(l.coords()) {
            lat_pos[j] = Some(core_lat.len());
            core_lat.push(j);
        }
    }
    let need_lat = policy == MatchPolicy::CoverBoth;
    if core_src.is_empty() && (!need_lat || core_lat.is_empty()) {
        return Err(MatchError::EmptyCore);
    }
    if core_src.len() > lattice.points.len() || (need_lat && core_lat.len() > s.len()) {
        return Err(MatchError::Infeasible);
    }
    if !need_lat {
        core_lat.clear();
    }

    let mut inst = Instance {
        sources: s.points(),
        lattice,
        core_src,
        core_lat,
        lat_pos,
        adj_s: Vec::new(),
        adj_l: Vec::new(),
    };
    let diam = window.diameter();
    let mut r = diam.min(1.0);
    loop {
        inst.build_edges(s, r);
        if inst.feasible(r, policy) {
            break;
        }
        if r >= diam {
            return Err(MatchError::Infeasible);
        }
        r = (2.0 * r).min(diam);
    }
    let mut cands: Vec<f64> = inst
        .adj_s
        .iter()
        .chain(&inst.adj_l)
        .flat_map(|e| e.iter().map(|x| x.1))
        .collect();
    cands.sort_by(f64::total_cmp);
    cands.dedup();
    // `cands.last()` is feasible: it admits the same edges as `r`
    let (mut lo, mut hi) = (0usize, cands.len().saturating_sub(1));
    while lo < hi {
        let mid = (lo + hi) / 2;
        if inst.feasible(cands[mid], policy) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let c = cands.get(lo).copied().unwrap_or(0.0);
    let pairs = assemble(&inst, c)?;
    let bound = max_displacement(&pairs);
    log::debug!("bottleneck threshold {c}, {} pairs", pairs.len());
    Ok(DisplacementMap { bound, core, pairs })
}

/// Builds a matching at threshold `c` covering core sources, then repairs it
/// along alternating paths until every core lattice point is covered too.
fn assemble(inst: &Instance, c: f64) -> Result<Vec<(Point, Point)>, MatchError> {
    let ns = inst.sources.len();
    let nl = inst.lattice.points.len();
    let m1 = max_matching(&inst.adj_s, nl, c);
    let mut src_match: Vec<Option<usize>> = vec![None; ns];
    let mut lat_match: Vec<Option<usize>> = vec![None; nl];
    for (k, l) in m1.left.iter().enumerate() {
        let l = l.ok_or(MatchError::Infeasible)?;
        src_match[inst.core_src[k]] = Some(l);
        lat_match[l] = Some(inst.core_src[k]);
    }

    const NONE: usize = usize::MAX;
    let mut parent = vec![NONE; ns];
    let mut seen = vec![false; nl];
    let mut touched_s = Vec::new();
    let mut touched_l = Vec::new();
    let mut queue = VecDeque::new();
    for &t in &inst.core_lat {
        if lat_match[t].is_some() {
            continue;
        }
        queue.clear();
        queue.push_back(t);
        seen[t] = true;
        touched_l.push(t);
        let mut end = None;
        'bfs: while let Some(x) = queue.pop_front() {
            let pos = inst.lat_pos[x].expect("queued lattice points are in the core");
            for &(si, d) in &inst.adj_l[pos] {
                if d > c {
                    break;
                }
                if lat_match[x] == Some(si) || parent[si] != NONE {
                    continue;
                }
                parent[si] = x;
                touched_s.push(si);
                match src_match[si] {
                    None => {
                        end = Some(si);
                        break 'bfs;
                    }
                    Some(y) if inst.lat_pos[y].is_none() => {
                        lat_match[y] = None;
                        src_match[si] = None;
                        end = Some(si);
                        break 'bfs;
                    }
                    Some(y) if !seen[y] => {
                        seen[y] = true;
                        touched_l.push(y);
                        queue.push_back(y);
                    }
                    Some(_) => {}
                }
            }
        }
        let mut cur = end.ok_or(MatchError::Infeasible)?;
        loop {
            let x = parent[cur];
            let prev = lat_match[x];
            src_match[cur] = Some(x);
            lat_match[x] = Some(cur);
            match prev {
                Some(p) => cur = p,
                None => break,
            }
        }
        for s in touched_s.drain(..) {
            parent[s] = NONE;
        }
        for l in touched_l.drain(..) {
            seen[l] = false;
        }
    }

    let core_src: std::collections::HashSet<usize> = inst.core_src.iter().copied().collect();
    Ok((0..ns)
        .filter_map(|i| {
            let l = src_match[i]?;
            (core_src.contains(&i) || inst.lat_pos[l].is_some())
                .then(|| (inst.sources[i].clone(), inst.lattice.points[l].clone()))
        })
        .collect())
}

/// One-dimensional matching sending the `i`-th core source, in increasing
/// order, to `k + i`, with the integer offset `k` minimizing the largest
/// displacement.
pub fn order_preserving_match(s: &PointSet, margin: f64) -> Result<DisplacementMap, MatchError> {
    if s.dim() != 1 {
        return Err(MatchError::NotOneDimensional(s.dim()));
    }
    if !(margin >= 0.0 && margin.is_finite()) {
        return Err(MatchError::BadMargin);
    }
    let core = s.window().shrink(margin).ok_or(MatchError::EmptyCore)?;
    let mut xs: Vec<f64> = s
        .points()
        .iter()
        .map(|p| p[0])
        .filter(|&x| core.contains(&[x]))
        .collect();
    if xs.is_empty() {
        return Err(MatchError::EmptyCore);
    }
    xs.sort_by(f64::total_cmp);
    let (lo, hi) = xs
        .iter()
        .enumerate()
        .map(|(i, x)| x - i as f64)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), o| (a.min(o), b.max(o)));
    let k = ((lo + hi) / 2.0).round();
    let pairs: Vec<(Point, Point)> = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| (Point::new(vec![x]), Point::new(vec![k + i as f64])))
        .collect();
    let bound = max_displacement(&pairs);
    Ok(DisplacementMap { bound, core, pairs })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Independent recheck of a displacement map against a claimed bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BdReport {
    pub pairs: usize,
    pub max: f64,
    pub claimed: f64,
    pub targets_distinct: bool,
    pub targets_integral: bool,
    pub histogram: Vec<HistogramBin>,
    pub pass: bool,
}

pub fn verify_bd(m: &DisplacementMap, claimed: f64) -> BdReport {
    const BINS: usize = 10;
    let d: Vec<f64> = m.pairs.iter().map(|(s, t)| s.distance(t)).collect();
    let max = d.iter().copied().fold(0.0, f64::max);
    let width = max / BINS as f64;
    let mut histogram: Vec<HistogramBin> = (0..BINS)
        .map(|b| HistogramBin {
            lo: b as f64 * width,
            hi: if b + 1 == BINS { max } else { (b + 1) as f64 * width },
            count: 0,
        })
        .collect();
    for x in &d {
        let b = if width > 0.0 {
            ((x / width) as usize).min(BINS - 1)
        } else {
            0
        };
        histogram[b].count += 1;
    }
    let mut targets: Vec<&Point> = m.targets().collect();
    targets.sort_by(|a, b| lex_cmp(a, b));
    let targets_distinct = targets.windows(2).all(|w| lex_cmp(w[0], w[1]).is_ne());
    let targets_integral = m.targets().all(|t| t.is_integral(INTEGRAL_TOL));
    BdReport {
        pairs: m.len(),
        max,
        claimed,
        targets_distinct,
        targets_integral,
        histogram,
        pass: max <= claimed && targets_distinct && targets_integral,
    }
}

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::general_position::{perturb_general_position, GeneralPositionParams, DEGENERATE_TOL};
use super::local_map::{half_twist, tube_chain, tube_push, LocalMap};
use super::piecewise::MonotonePl;
use super::RectifyError;
use crate::geom::segment::point_segment_distance;
use crate::geom::{GridIndex, Point, Window};
use crate::matching::DisplacementMap;

/// Tube radius as a fraction of the general-position scale.
pub const TUBE_FRACTION: f64 = 0.45;

/// Journey of one source through the plan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TravelerRecord {
    pub pair: usize,
    pub source: Point,
    pub perturbed_source: Point,
    pub target: Point,
    /// Index into the perturbation prefix of the push moving this source.
    pub prefix_map: Option<usize>,
    /// Half-open range of `maps` that carries this traveler.
    pub map_range: (usize, usize),
    /// Position after each map of `map_range`.
    pub waypoints: Vec<Point>,
}

/// Serialized form of a [`HomeoPlan`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanData {
    pub dim: usize,
    pub params: GeneralPositionParams,
    pub r_sep: f64,
    pub epsilon_final: f64,
    pub bounding_region: Window,
    pub perturb_prefix: Vec<LocalMap>,
    pub maps: Vec<LocalMap>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub piecewise: Option<MonotonePl>,
    pub ledger: Vec<TravelerRecord>,
}

/// A bi-Lipschitz homeomorphism of space, the identity outside
/// `bounding_region`.
#[derive(Clone, Debug)]
pub struct HomeoPlan {
    data: PlanData,
    index: EvalIndex,
}

impl PartialEq for HomeoPlan {
    fn eq(&self, other: &Self) -> bool {
        self.data == other.data
    }
}

impl Serialize for HomeoPlan {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.data.serialize(s)
    }
}

impl<'de> Deserialize<'de> for HomeoPlan {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        HomeoPlan::from_data(PlanData::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// Consecutive maps grouped under one bounding box.
#[derive(Clone, Debug)]
struct Block {
    start: usize,
    end: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Block {
    fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(x, (l, h))| l <= x && x <= h)
    }
}

const BLOCK_EXTENT: f64 = 1.0;
const BLOCK_MAPS: usize = 256;
const GRID_CELLS: usize = 1 << 20;

/// Uniform grid over the bounding region listing, per cell, the blocks whose
/// box meets it, in application order.
#[derive(Clone, Debug, Default)]
struct EvalIndex {
    blocks: Vec<Block>,
    lower: Vec<f64>,
    cell: f64,
    dims: Vec<usize>,
    cells: Vec<Vec<u32>>,
}

impl EvalIndex {
    fn build(region: &Window, maps: &[&LocalMap]) -> Self {
        let mut blocks: Vec<Block> = Vec::new();
        for (k, m) in maps.iter().enumerate() {
            let (lo, hi) = m.support_box();
            if let Some(b) = blocks.last_mut() {
                let nlo: Vec<f64> = b.lo.iter().zip(&lo).map(|(a, c)| a.min(*c)).collect();
                let nhi: Vec<f64> = b.hi.iter().zip(&hi).map(|(a, c)| a.max(*c)).collect();
                let extent = nlo.iter().zip(&nhi).map(|(a, c)| c - a).fold(0.0, f64::max);
                if extent <= BLOCK_EXTENT && b.end - b.start < BLOCK_MAPS {
                    b.lo = nlo;
                    b.hi = nhi;
                    b.end = k + 1;
                    continue;
                }
            }
            blocks.push(Block {
                start: k,
                end: k + 1,
                lo,
                hi,
            });
        }
        let dim = region.dim();
        let mut cell = BLOCK_EXTENT;
        let dims = loop {
            let dims: Vec<usize> = (0..dim)
                .map(|a| (region.extent(a) / cell).ceil().max(1.0) as usize)
                .collect();
            if dims.iter().try_fold(1usize, |acc, &n| acc.checked_mul(n)).is_some_and(|t| t <= GRID_CELLS) {
                break dims;
            }
            cell *= 2.0;
        };
        let total: usize = dims.iter().product();
        let mut idx = EvalIndex {
            blocks: Vec::new(),
            lower: region.lower.coords().to_vec(),
            cell,
            dims,
            cells: vec![Vec::new(); total],
        };
        for (b, block) in blocks.iter().enumerate() {
            let lo: Vec<usize> = (0..dim).map(|a| idx.axis_cell(a, block.lo[a])).collect();
            let hi: Vec<usize> = (0..dim).map(|a| idx.axis_cell(a, block.hi[a])).collect();
            let mut cur = lo.clone();
            loop {
                let flat = idx.flat(&cur);
                idx.cells[flat].push(b as u32);
                let mut a = dim;
                loop {
                    if a == 0 {
                        break;
                    }
                    a -= 1;
                    if cur[a] < hi[a] {
                        cur[a] += 1;
                        break;
                    }
                    cur[a] = lo[a];
                }
                if cur == lo {
                    break;
                }
            }
        }
        idx.blocks = blocks;
        idx
    }

    fn axis_cell(&self, a: usize, x: f64) -> usize {
        let c = ((x - self.lower[a]) / self.cell).floor();
        if c <= 0.0 {
            0
        } else {
            (c as usize).min(self.dims[a] - 1)
        }
    }

    fn flat(&self, cell: &[usize]) -> usize {
        cell.iter().zip(&self.dims).fold(0, |acc, (c, n)| acc * n + c)
    }

    fn cell_of(&self, p: &[f64]) -> &[u32] {
        let cell: Vec<usize> = (0..p.len()).map(|a| self.axis_cell(a, p[a])).collect();
        &self.cells[self.flat(&cell)]
    }

    /// First block at or after `from` whose box contains `p`.
    fn next_block(&self, p: &[f64], from: usize) -> Option<usize> {
        let list = self.cell_of(p);
        let pos = list.partition_point(|&b| (b as usize) < from);
        list[pos..]
            .iter()
            .map(|&b| b as usize)
            .find(|&b| self.blocks[b].contains(p))
    }

    /// Last block before `until` whose box contains `p`.
    fn prev_block(&self, p: &[f64], until: usize) -> Option<usize> {
        let list = self.cell_of(p);
        let pos = list.partition_point(|&b| (b as usize) < until);
        list[..pos]
            .iter()
            .rev()
            .map(|&b| b as usize)
            .find(|&b| self.blocks[b].contains(p))
    }
}

impl HomeoPlan {
    /// Validates serialized plan data and builds the evaluation index.
    pub fn from_data(data: PlanData) -> Result<Self, RectifyError> {
        let bad = |m: String| Err(RectifyError::InvalidPlan(m));
        let dim = data.dim;
        if dim == 0 || data.bounding_region.dim() != dim || !data.bounding_region.is_valid() {
            return bad("bounding region does not match the dimension".into());
        }
        if !(data.epsilon_final > 0.0 && data.epsilon_final.is_finite()) {
            return bad("epsilon_final must be positive".into());
        }
        let region = &data.bounding_region;
        let slack = 1e-9 * (1.0 + region.diameter());
        let outer = region.inflate(slack);
        for (k, m) in data.perturb_prefix.iter().chain(&data.maps).enumerate() {
            m.validate()
                .map_err(|e| RectifyError::InvalidPlan(format!("map {k}: {e}")))?;
            if m.dim() != dim {
                return bad(format!("map {k} has the wrong dimension"));
            }
            let (lo, hi) = m.support_box();
            if !outer.contains_closed(&lo) || !outer.contains_closed(&hi) {
                return bad(format!("support of map {k} leaves the bounding region"));
            }
        }
        match (&data.piecewise, dim) {
            (Some(pl), 1) => {
                pl.validate()?;
                if let Some((lo, hi)) = pl.support() {
                    if !outer.contains_closed(&[lo]) || !outer.contains_closed(&[hi]) {
                        return bad("breakpoints leave the bounding region".into());
                    }
                }
                if !data.maps.is_empty() || !data.perturb_prefix.is_empty() {
                    return bad("one-dimensional plans carry no local maps".into());
                }
            }
            (None, 1) => return bad("one-dimensional plan without breakpoints".into()),
            (Some(_), _) => return bad("breakpoints need dimension 1".into()),
            (None, _) => {}
        }
        for (i, r) in data.ledger.iter().enumerate() {
            let (s, e) = r.map_range;
            if s > e || e > data.maps.len() || r.waypoints.len() != e - s {
                return bad(format!("ledger entry {i} has an inconsistent map range"));
            }
            if r.prefix_map.is_some_and(|p| p >= data.perturb_prefix.len()) {
                return bad(format!("ledger entry {i} names a missing prefix map"));
            }
            let pts = [&r.source, &r.perturbed_source, &r.target];
            if pts.into_iter().chain(&r.waypoints).any(|p| p.dim() != dim) {
                return bad(format!("ledger entry {i} has the wrong dimension"));
            }
        }
        let all: Vec<&LocalMap> = data.perturb_prefix.iter().chain(&data.maps).collect();
        let index = EvalIndex::build(&data.bounding_region, &all);
        Ok(HomeoPlan { data, index })
    }

    pub fn data(&self) -> &PlanData {
        &self.data
    }

    pub fn into_data(self) -> PlanData {
        self.data
    }

    pub fn dim(&self) -> usize {
        self.data.dim
    }

    pub fn maps(&self) -> &[LocalMap] {
        &self.data.maps
    }

    pub fn perturb_prefix(&self) -> &[LocalMap] {
        &self.data.perturb_prefix
    }

    /// Prefix followed by the main maps, in application order.
    pub fn all_maps(&self) -> impl DoubleEndedIterator<Item = &LocalMap> {
        self.data.perturb_prefix.iter().chain(&self.data.maps)
    }

    pub fn ledger(&self) -> &[TravelerRecord] {
        &self.data.ledger
    }

    pub fn bounding_region(&self) -> &Window {
        &self.data.bounding_region
    }

    pub fn epsilon_final(&self) -> f64 {
        self.data.epsilon_final
    }

    pub fn params(&self) -> &GeneralPositionParams {
        &self.data.params
    }

    pub fn piecewise(&self) -> Option<&MonotonePl> {
        self.data.piecewise.as_ref()
    }

    pub fn twist_count(&self) -> usize {
        self.data.maps.iter().filter(|m| m.is_twist()).count()
    }

    fn map_at(&self, k: usize) -> &LocalMap {
        let np = self.data.perturb_prefix.len();
        if k < np {
            &self.data.perturb_prefix[k]
        } else {
            &self.data.maps[k - np]
        }
    }

    /// Applies the plan to `u` in place.
    pub fn apply(&self, u: &mut [f64]) {
        if let Some(pl) = &self.data.piecewise {
            u[0] = pl.evaluate(u[0]);
            return;
        }
        if !self.data.bounding_region.contains_closed(u) {
            return;
        }
        let mut from = 0;
        while let Some(b) = self.index.next_block(u, from) {
            let block = &self.index.blocks[b];
            for k in block.start..block.end {
                self.map_at(k).apply(u);
            }
            from = b + 1;
        }
    }

    /// Applies the inverse plan to `y` in place.
    pub fn apply_inverse(&self, y: &mut [f64]) -> Result<(), RectifyError> {
        if let Some(pl) = &self.data.piecewise {
            y[0] = pl.evaluate_inverse(y[0]);
            return Ok(());
        }
        if !self.data.bounding_region.contains_closed(y) {
            return Ok(());
        }
        let mut until = self.index.blocks.len();
        while let Some(b) = self.index.prev_block(y, until) {
            let block = &self.index.blocks[b];
            for k in (block.start..block.end).rev() {
                self.map_at(k).apply_inverse(y)?;
            }
            until = b;
        }
        Ok(())
    }

    pub fn evaluate(&self, u: &Point) -> Point {
        let mut v = u.coords().to_vec();
        self.apply(&mut v);
        Point::new(v)
    }

    pub fn evaluate_inverse(&self, y: &Point) -> Result<Point, RectifyError> {
        let mut v = y.coords().to_vec();
        self.apply_inverse(&mut v)?;
        Ok(Point::new(v))
    }

    /// Reference evaluation through every map in order, without the index.
    pub fn evaluate_naive(&self, u: &Point) -> Point {
        if let Some(pl) = &self.data.piecewise {
            return Point::new(vec![pl.evaluate(u[0])]);
        }
        let mut v = u.coords().to_vec();
        self.all_maps().for_each(|m| m.apply(&mut v));
        Point::new(v)
    }

    pub fn evaluate_many(&self, pts: &[Point]) -> Vec<Point> {
        pts.par_iter().map(|p| self.evaluate(p)).collect()
    }

    pub fn evaluate_inverse_many(&self, pts: &[Point]) -> Result<Vec<Point>, RectifyError> {
        pts.par_iter().map(|p| self.evaluate_inverse(p)).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plans always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, RectifyError> {
        serde_json::from_str(text).map_err(|e| RectifyError::InvalidPlan(e.to_string()))
    }
}

/// Rest positions of all travelers with their owning pair, indexed for
/// clearance queries.
struct RestPoints {
    points: Vec<Point>,
    owner: Vec<usize>,
    index: GridIndex,
}

impl RestPoints {
    fn new(m: &DisplacementMap, perturbed: &[Point]) -> Self {
        let mut points = Vec::new();
        let mut owner = Vec::new();
        for (i, ((s, t), v)) in m.pairs.iter().zip(perturbed).enumerate() {
            points.push(v.clone());
            owner.push(i);
            if s.distance(t) > DEGENERATE_TOL {
                points.push(t.clone());
                owner.push(i);
            }
        }
        let index = GridIndex::covering(&points, m.dim(), 1.0).expect("rest points are finite");
        RestPoints {
            points,
            owner,
            index,
        }
    }

    /// Distance from segment `[a, b]` to the rest points of other travelers,
    /// capped at `cap`.
    fn clearance(&self, a: &Point, b: &Point, pair: usize, cap: f64) -> f64 {
        let mid = a.lerp(b, 0.5);
        let mut best = cap;
        self.index
            .for_each_within(mid.coords(), 0.5 * a.distance(b) + cap, |k| {
                if self.owner[k] != pair {
                    let d = point_segment_distance(self.points[k].coords(), a.coords(), b.coords());
                    best = best.min(d);
                }
            });
        best
    }
}

struct Builder<'a> {
    rest: &'a RestPoints,
    maps: Vec<LocalMap>,
    waypoints: Vec<Point>,
    base_radius: f64,
    cap: f64,
}

impl Builder<'_> {
    fn tube(&mut self, pair: usize, from: &Point, to: &Point) -> Result<(), RectifyError> {
        if from == to {
            return Ok(());
        }
        let clearance = self.rest.clearance(from, to, pair, self.cap);
        if !(clearance > 0.0) {
            return Err(RectifyError::TubeClearanceViolated(pair));
        }
        let radius = self.base_radius.min(0.5 * clearance);
        let chain = tube_chain(from, to, radius);
        self.maps.extend(tube_push(&chain, radius)?);
        self.waypoints.extend(chain.into_iter().skip(1));
        Ok(())
    }
}

/// Builds the rectifying homeomorphism of `m`.
///
/// `r_sep` must not exceed the smallest distance between sources.
pub fn build_plan(
    m: &DisplacementMap,
    params: &GeneralPositionParams,
    r_sep: f64,
) -> Result<HomeoPlan, RectifyError> {
    let dim = m.dim();
    let gp = perturb_general_position(m, params, r_sep)?;
    let eps = gp.epsilon;
    let mut ledger: Vec<TravelerRecord> = m
        .pairs
        .iter()
        .zip(&gp.perturbed)
        .enumerate()
        .map(|(i, ((s, t), v))| TravelerRecord {
            pair: i,
            source: s.clone(),
            perturbed_source: v.clone(),
            target: t.clone(),
            prefix_map: None,
            map_range: (0, 0),
            waypoints: Vec::new(),
        })
        .collect();
    for (k, &i) in gp.prefix_owner.iter().enumerate() {
        ledger[i].prefix_map = Some(k);
    }

    if dim == 1 {
        let pl = MonotonePl::from_pairs(&m.pairs)?;
        let region = match pl.support() {
            Some((lo, hi)) => Window::new(Point::new(vec![lo]), Point::new(vec![hi]))
                .unwrap_or_else(|| m.core.clone())
                .union(&m.core),
            None => m.core.clone(),
        };
        return HomeoPlan::from_data(PlanData {
            dim,
            params: params.clone(),
            r_sep,
            epsilon_final: eps,
            bounding_region: region,
            perturb_prefix: Vec::new(),
            maps: Vec::new(),
            piecewise: Some(pl),
            ledger,
        });
    }

    let rest = RestPoints::new(m, &gp.perturbed);
    let base_radius = if dim == 2 {
        params.epsilon_prime.min(TUBE_FRACTION * eps)
    } else {
        TUBE_FRACTION * eps
    };
    let mut b = Builder {
        rest: &rest,
        maps: Vec::new(),
        waypoints: Vec::new(),
        base_radius,
        cap: eps,
    };
    for seg in &gp.segments {
        let start = b.maps.len();
        let dir = seg.b.sub(&seg.a).scale(1.0 / seg.a.distance(&seg.b));
        let mut pos = seg.a.clone();
        for cr in &seg.crossings {
            let entry = cr.point.sub(&dir.scale(eps / 6.0));
            b.tube(seg.pair, &pos, &entry)?;
            let twist = half_twist(cr.point.clone(), eps)?;
            pos = twist.image(&entry);
            b.maps.push(twist);
            b.waypoints.push(pos.clone());
        }
        b.tube(seg.pair, &pos, &seg.b)?;
        let rec = &mut ledger[seg.pair];
        rec.map_range = (start, b.maps.len());
        rec.waypoints = std::mem::take(&mut b.waypoints);
    }
    let maps = b.maps;

    let mut region = m.core.inflate(m.bound + eps);
    for map in gp.prefix.iter().chain(&maps) {
        let (lo, hi) = map.support_box();
        region = region.union(&Window {
            lower: Point::new(lo),
            upper: Point::new(hi),
        });
    }
    log::info!(
        "plan: {} prefix maps, {} maps ({} twists), epsilon {eps}",
        gp.prefix.len(),
        maps.len(),
        maps.iter().filter(|m| m.is_twist()).count()
    );
    HomeoPlan::from_data(PlanData {
        dim,
        params: params.clone(),
        r_sep,
        epsilon_final: eps,
        bounding_region: region,
        perturb_prefix: gp.prefix,
        maps,
        piecewise: None,
        ledger,
    })
}

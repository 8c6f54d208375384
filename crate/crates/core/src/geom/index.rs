//! Uniform-grid spatial index over a bounded box.
//!
//! Points are bucketed into cubic cells of a fixed size laid over the index
//! bounds, stored in compressed (offset + flat list) form. Range queries visit
//! every cell overlapping the query's bounding box and filter by exact
//! distance, so results equal a linear scan.

use super::point::{dist2, Point, Window};

/// Upper limit on the number of cells, guards against absurd cell sizes.
pub const MAX_CELLS: usize = 1 << 24;

#[derive(Clone, Debug)]
pub struct GridIndex {
    lower: Vec<f64>,
    cell_size: f64,
    dims: Vec<usize>,
    strides: Vec<usize>,
    cell_start: Vec<u32>,
    entries: Vec<u32>,
    coords: Vec<f64>,
    dim: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IndexError {
    #[error("cell size must be positive and finite, got {0}")]
    BadCellSize(f64),
    #[error("grid would need more than {MAX_CELLS} cells")]
    TooManyCells,
    #[error("point {0} lies outside the index bounds")]
    OutOfBounds(usize),
}

impl GridIndex {
    /// Builds an index over `points`, all of which must lie in the closed
    /// `bounds` box.
    pub fn build(points: &[Point], bounds: &Window, cell_size: f64) -> Result<Self, IndexError> {
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(IndexError::BadCellSize(cell_size));
        }
        let dim = bounds.dim();
        let mut dims = Vec::with_capacity(dim);
        let mut total: usize = 1;
        for a in 0..dim {
            let n = (bounds.extent(a) / cell_size).ceil().max(1.0);
            if !(n < MAX_CELLS as f64) {
                return Err(IndexError::TooManyCells);
            }
            let n = n as usize;
            total = total
                .checked_mul(n)
                .filter(|&t| t <= MAX_CELLS)
                .ok_or(IndexError::TooManyCells)?;
            dims.push(n);
        }
        let mut strides = vec![1usize; dim];
        for a in (0..dim.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * dims[a + 1];
        }
        let mut idx = GridIndex {
            lower: bounds.lower.coords().to_vec(),
            cell_size,
            dims,
            strides,
            cell_start: Vec::new(),
            entries: Vec::new(),
            coords: Vec::with_capacity(points.len() * dim),
            dim,
        };
        let mut cell_of = Vec::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            if p.dim() != dim || !bounds.contains_closed(p.coords()) {
                return Err(IndexError::OutOfBounds(i));
            }
            idx.coords.extend_from_slice(p.coords());
            cell_of.push(idx.flat_cell(p.coords()));
        }
        let mut counts = vec![0u32; total + 1];
        for &c in &cell_of {
            counts[c + 1] += 1;
        }
        for c in 0..total {
            counts[c + 1] += counts[c];
        }
        let mut fill = counts.clone();
        let mut entries = vec![0u32; points.len()];
        for (i, &c) in cell_of.iter().enumerate() {
            entries[fill[c] as usize] = i as u32;
            fill[c] += 1;
        }
        idx.cell_start = counts;
        idx.entries = entries;
        Ok(idx)
    }

    /// Index over the bounding box of `points`, coarsening the requested cell
    /// size until the grid fits in [`MAX_CELLS`] cells.
    pub fn covering(points: &[Point], dim: usize, cell_size: f64) -> Result<Self, IndexError> {
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(IndexError::BadCellSize(cell_size));
        }
        let mut lo = vec![0.0; dim];
        let mut hi = vec![1.0; dim];
        if let Some(first) = points.first() {
            lo = first.coords().to_vec();
            hi = lo.clone();
        }
        for (i, p) in points.iter().enumerate() {
            if p.dim() != dim || !p.is_finite() {
                return Err(IndexError::OutOfBounds(i));
            }
            for a in 0..dim {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let bounds = Window::new(
            Point::new(lo.iter().map(|x| x - 1.0).collect()),
            Point::new(hi.iter().map(|x| x + 1.0).collect()),
        )
        .ok_or(IndexError::OutOfBounds(0))?;
        let mut cell = cell_size;
        loop {
            match GridIndex::build(points, &bounds, cell) {
                Err(IndexError::TooManyCells) => cell *= 2.0,
                other => return other,
            }
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    fn axis_cell(&self, axis: usize, x: f64) -> usize {
        let c = ((x - self.lower[axis]) / self.cell_size).floor();
        if c <= 0.0 {
            0
        } else {
            (c as usize).min(self.dims[axis] - 1)
        }
    }

    fn flat_cell(&self, p: &[f64]) -> usize {
        (0..self.dim)
            .map(|a| self.axis_cell(a, p[a]) * self.strides[a])
            .sum()
    }

    /// Calls `f(i)` for every indexed point within closed distance `radius`
    /// of `center`.
    pub fn for_each_within(&self, center: &[f64], radius: f64, mut f: impl FnMut(usize)) {
        if self.entries.is_empty() || !(radius >= 0.0) {
            return;
        }
        let r2 = radius * radius;
        let lo: Vec<usize> = (0..self.dim)
            .map(|a| self.axis_cell(a, center[a] - radius))
            .collect();
        let hi: Vec<usize> = (0..self.dim)
            .map(|a| self.axis_cell(a, center[a] + radius))
            .collect();
        let mut cur = lo.clone();
        loop {
            let flat: usize = (0..self.dim).map(|a| cur[a] * self.strides[a]).sum();
            let (s, e) = (self.cell_start[flat] as usize, self.cell_start[flat + 1] as usize);
            for &i in &self.entries[s..e] {
                let i = i as usize;
                if dist2(self.point(i), center) <= r2 {
                    f(i);
                }
            }
            let mut axis = self.dim;
            loop {
                if axis == 0 {
                    return;
                }
                axis -= 1;
                if cur[axis] < hi[axis] {
                    cur[axis] += 1;
                    break;
                }
                cur[axis] = lo[axis];
            }
        }
    }

    /// Indices of points within closed distance `radius`, ascending.
    pub fn within(&self, center: &[f64], radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_within(center, radius, |i| out.push(i));
        out.sort_unstable();
        out
    }

    pub fn any_within(&self, center: &[f64], radius: f64) -> bool {
        let mut found = false;
        self.for_each_within(center, radius, |_| found = true);
        found
    }

    /// Nearest indexed point other than `exclude`, with its distance.
    pub fn nearest(&self, center: &[f64], exclude: Option<usize>) -> Option<(usize, f64)> {
        if !center.iter().all(|c| c.is_finite()) {
            return None;
        }
        let available = self.entries.len() - usize::from(exclude.is_some_and(|e| e < self.len()));
        if available == 0 {
            return None;
        }
        let mut radius = self.cell_size;
        loop {
            let mut best: Option<(usize, f64)> = None;
            self.for_each_within(center, radius, |i| {
                if Some(i) == exclude {
                    return;
                }
                let d2 = dist2(self.point(i), center);
                if best.map_or(true, |(bi, bd)| d2 < bd || (d2 == bd && i < bi)) {
                    best = Some((i, d2));
                }
            });
            if let Some((i, d2)) = best {
                return Some((i, d2.sqrt()));
            }
            radius *= 2.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(n: usize, rng: &mut ChaCha8Rng) -> Vec<Point> {
        (0..n)
            .map(|_| Point::new(vec![rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)]))
            .collect()
    }

    #[test]
    fn range_queries_match_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts = random_points(400, &mut rng);
        let w = Window::cube(2, 0.0, 10.0).unwrap();
        let idx = GridIndex::build(&pts, &w, 0.7).unwrap();
        for _ in 0..100 {
            let c = [rng.gen_range(-2.0..12.0), rng.gen_range(-2.0..12.0)];
            let r = rng.gen_range(0.0..3.0);
            let scan: Vec<usize> = (0..pts.len())
                .filter(|&i| dist2(pts[i].coords(), &c) <= r * r)
                .collect();
            assert_eq!(idx.within(&c, r), scan);
        }
    }

    #[test]
    fn nearest_matches_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts = random_points(50, &mut rng);
        let w = Window::cube(2, 0.0, 10.0).unwrap();
        let idx = GridIndex::build(&pts, &w, 0.25).unwrap();
        for i in 0..pts.len() {
            let (j, d) = idx.nearest(pts[i].coords(), Some(i)).unwrap();
            let best = (0..pts.len())
                .filter(|&k| k != i)
                .map(|k| pts[k].distance(&pts[i]))
                .fold(f64::INFINITY, f64::min);
            assert_eq!(d, best);
            assert_ne!(i, j);
        }
    }

    #[test]
    fn rejects_bad_cell_sizes() {
        let w = Window::cube(2, 0.0, 1e12).unwrap();
        assert_eq!(
            GridIndex::build(&[], &w, 1e-3).unwrap_err(),
            IndexError::TooManyCells
        );
        assert!(matches!(
            GridIndex::build(&[], &w, -1.0),
            Err(IndexError::BadCellSize(_))
        ));
    }
}

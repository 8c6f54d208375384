use serde::{Deserialize, Serialize};

use super::index::{GridIndex, IndexError};
use super::point::{Point, Window};
use super::GeomError;

/// Two points closer than this are considered the same point.
pub const DUPLICATE_TOL: f64 = 1e-12;

/// A finite window of a Delone set together with a grid index over it.
#[derive(Clone, Debug)]
pub struct PointSet {
    dim: usize,
    points: Vec<Point>,
    window: Window,
    index: GridIndex,
}

/// On-disk form of a [`PointSet`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSetData {
    pub dim: usize,
    pub window: Window,
    pub points: Vec<Point>,
}

impl PartialEq for PointSet {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.window == other.window && self.points == other.points
    }
}

/// A cell size of about one unit, coarsened when the window is huge.
pub fn default_cell_size(window: &Window) -> f64 {
    let dim = window.dim() as f64;
    let volume: f64 = (0..window.dim()).map(|a| window.extent(a)).product();
    let budget = (1u64 << 20) as f64;
    1.0f64.max((volume / budget).powf(1.0 / dim) * 1.01)
}

impl PointSet {
    /// Validates and indexes `points`. Every point must lie in the half-open
    /// window and no two may be closer than [`DUPLICATE_TOL`].
    pub fn build(points: Vec<Point>, window: Window, cell_size: f64) -> Result<Self, GeomError> {
        if !window.is_valid() {
            return Err(GeomError::DegenerateWindow);
        }
        let dim = window.dim();
        for (i, p) in points.iter().enumerate() {
            if p.dim() != dim {
                return Err(GeomError::DimensionMismatch {
                    expected: dim,
                    found: p.dim(),
                });
            }
            if !p.is_finite() {
                return Err(GeomError::NonFinite(i));
            }
            if !window.contains(p.coords()) {
                return Err(GeomError::PointOutsideWindow(i));
            }
        }
        let index = GridIndex::build(&points, &window, cell_size).map_err(|e| match e {
            IndexError::OutOfBounds(i) => GeomError::PointOutsideWindow(i),
            other => GeomError::Index(other),
        })?;
        for (i, p) in points.iter().enumerate() {
            let mut dup = None;
            index.for_each_within(p.coords(), DUPLICATE_TOL, |j| {
                if j != i && p.distance(&points[j]) < DUPLICATE_TOL {
                    dup = Some(j);
                }
            });
            if let Some(j) = dup {
                return Err(GeomError::DuplicatePoint(i.min(j), i.max(j)));
            }
        }
        Ok(PointSet {
            dim,
            points,
            window,
            index,
        })
    }

    pub fn with_default_index(points: Vec<Point>, window: Window) -> Result<Self, GeomError> {
        let cell = default_cell_size(&window);
        Self::build(points, window, cell)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn index(&self) -> &GridIndex {
        &self.index
    }

    /// Indices of points in the closed ball, ascending.
    pub fn within(&self, center: &[f64], radius: f64) -> Vec<usize> {
        self.index.within(center, radius)
    }

    pub fn nearest(&self, center: &[f64]) -> Option<(usize, f64)> {
        self.index.nearest(center, None)
    }

    /// Points of the set inside `sub` (half-open).
    pub fn restricted_to(&self, sub: &Window) -> Vec<Point> {
        self.points
            .iter()
            .filter(|p| sub.contains(p.coords()))
            .cloned()
            .collect()
    }

    pub fn to_data(&self) -> PointSetData {
        PointSetData {
            dim: self.dim,
            window: self.window.clone(),
            points: self.points.clone(),
        }
    }

    pub fn from_data(data: PointSetData) -> Result<Self, GeomError> {
        if data.window.dim() != data.dim {
            return Err(GeomError::DimensionMismatch {
                expected: data.dim,
                found: data.window.dim(),
            });
        }
        Self::with_default_index(data.points, data.window)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_data()).expect("point set serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, GeomError> {
        let data: PointSetData =
            serde_json::from_str(text).map_err(|e| GeomError::Parse(e.to_string()))?;
        Self::from_data(data)
    }

    /// Headerless CSV, one point per row. Coordinates use the shortest
    /// decimal form that parses back to the identical `f64`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for p in &self.points {
            let row: Vec<String> = p.coords().iter().map(|c| format!("{c:?}")).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str, window: Window) -> Result<Self, GeomError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut points = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| GeomError::Parse(e.to_string()))?;
            if record.iter().all(|f| f.is_empty()) {
                continue;
            }
            let coords = record
                .iter()
                .map(|f| f.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| GeomError::Parse(e.to_string()))?;
            points.push(Point::new(coords));
        }
        Self::with_default_index(points, window)
    }
}

impl Serialize for PointSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_data().serialize(s)
    }
}

impl<'de> Deserialize<'de> for PointSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let data = PointSetData::deserialize(d)?;
        PointSet::from_data(data).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(n: f64) -> Window {
        Window::cube(2, 0.0, n).unwrap()
    }

    #[test]
    fn two_points() {
        let s = PointSet::build(vec![[0.0, 0.0].into(), [1.0, 0.0].into()], square(2.0), 1.0)
            .unwrap();
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn duplicate_rejected() {
        let err = PointSet::build(vec![[0.0, 0.0].into(), [0.0, 0.0].into()], square(2.0), 1.0)
            .unwrap_err();
        assert_eq!(err, GeomError::DuplicatePoint(0, 1));
    }

    #[test]
    fn outside_rejected() {
        let err = PointSet::build(vec![[3.0, 3.0].into()], square(2.0), 1.0).unwrap_err();
        assert_eq!(err, GeomError::PointOutsideWindow(0));
        // half-open upper face
        let err = PointSet::build(vec![[2.0, 0.0].into()], square(2.0), 1.0).unwrap_err();
        assert_eq!(err, GeomError::PointOutsideWindow(0));
    }

    #[test]
    fn dimension_mismatch() {
        let err = PointSet::build(vec![[0.0, 0.0, 0.0].into()], square(2.0), 1.0).unwrap_err();
        assert!(matches!(err, GeomError::DimensionMismatch { .. }));
    }

    #[test]
    fn json_and_csv_round_trip_bit_exact() {
        let pts = vec![
            Point::new(vec![0.1 + 0.2, 1.0 / 3.0]),
            Point::new(vec![1e-300, std::f64::consts::PI]),
        ];
        let s = PointSet::with_default_index(pts, square(4.0)).unwrap();
        let back = PointSet::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
        let back = PointSet::from_csv(&s.to_csv(), square(4.0)).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn json_rejects_unknown_keys() {
        let text = r#"{"dim":1,"window":{"lower":[0],"upper":[1]},"points":[],"extra":1}"#;
        assert!(matches!(PointSet::from_json(text), Err(GeomError::Parse(_))));
    }
}

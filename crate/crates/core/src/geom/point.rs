use std::fmt;
use std::ops::Index;

use serde::{Deserialize, Serialize};

/// A point of Euclidean space in a fixed but arbitrary dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn origin(dim: usize) -> Self {
        Point(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn distance(&self, other: &Point) -> f64 {
        dist(&self.0, &other.0)
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn sub(&self, other: &Point) -> Point {
        Point(sub(&self.0, &other.0))
    }

    pub fn add(&self, other: &Point) -> Point {
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn scale(&self, s: f64) -> Point {
        Point(self.0.iter().map(|a| a * s).collect())
    }

    /// `self + t * (other - self)`.
    pub fn lerp(&self, other: &Point, t: f64) -> Point {
        Point(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + t * (b - a))
                .collect(),
        )
    }

    /// Nearest integer point, coordinate-wise.
    pub fn rounded(&self) -> Point {
        Point(self.0.iter().map(|c| c.round()).collect())
    }

    /// Whether every coordinate is within `tol` of an integer.
    pub fn is_integral(&self, tol: f64) -> bool {
        self.0.iter().all(|c| (c - c.round()).abs() <= tol)
    }
}

impl Index<usize> for Point {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

impl<const N: usize> From<[f64; N]> for Point {
    fn from(v: [f64; N]) -> Self {
        Point(v.to_vec())
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Axis-aligned half-open box `[lower, upper)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lower: Point,
    pub upper: Point,
}

impl Window {
    /// Returns `None` unless both corners share a dimension, are finite and
    /// `lower < upper` componentwise.
    pub fn new(lower: Point, upper: Point) -> Option<Self> {
        let w = Window { lower, upper };
        w.is_valid().then_some(w)
    }

    /// The cube `[lo, hi)^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Option<Self> {
        Window::new(Point(vec![lo; dim]), Point(vec![hi; dim]))
    }

    pub fn is_valid(&self) -> bool {
        self.lower.dim() > 0
            && self.lower.dim() == self.upper.dim()
            && self.lower.is_finite()
            && self.upper.is_finite()
            && self
                .lower
                .coords()
                .iter()
                .zip(self.upper.coords())
                .all(|(l, u)| l < u && (u - l).is_finite())
    }

    pub fn dim(&self) -> usize {
        self.lower.dim()
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    pub fn min_extent(&self) -> f64 {
        (0..self.dim())
            .map(|a| self.extent(a))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn diameter(&self) -> f64 {
        dist(self.lower.coords(), self.upper.coords())
    }

    pub fn center(&self) -> Point {
        self.lower.lerp(&self.upper, 0.5)
    }

    /// Half-open membership.
    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter()
                .zip(self.lower.coords().iter().zip(self.upper.coords()))
                .all(|(x, (l, u))| l <= x && x < u)
    }

    /// Closed membership.
    pub fn contains_closed(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter()
                .zip(self.lower.coords().iter().zip(self.upper.coords()))
                .all(|(x, (l, u))| l <= x && x <= u)
    }

    /// Whether the closed ball lies in the closed window.
    pub fn contains_ball(&self, center: &[f64], radius: f64) -> bool {
        center.len() == self.dim()
            && center
                .iter()
                .zip(self.lower.coords().iter().zip(self.upper.coords()))
                .all(|(x, (l, u))| l <= &(x - radius) && x + radius <= *u)
    }

    /// Shrinks every face inward by `margin`; `None` if the result is empty.
    pub fn shrink(&self, margin: f64) -> Option<Window> {
        Window::new(
            Point(self.lower.coords().iter().map(|l| l + margin).collect()),
            Point(self.upper.coords().iter().map(|u| u - margin).collect()),
        )
    }

    pub fn inflate(&self, amount: f64) -> Window {
        Window {
            lower: Point(self.lower.coords().iter().map(|l| l - amount).collect()),
            upper: Point(self.upper.coords().iter().map(|u| u + amount).collect()),
        }
    }

    /// Smallest window containing both.
    pub fn union(&self, other: &Window) -> Window {
        Window {
            lower: Point(
                self.lower
                    .coords()
                    .iter()
                    .zip(other.lower.coords())
                    .map(|(a, b)| a.min(*b))
                    .collect(),
            ),
            upper: Point(
                self.upper
                    .coords()
                    .iter()
                    .zip(other.upper.coords())
                    .map(|(a, b)| a.max(*b))
                    .collect(),
            ),
        }
    }

    /// Integer points of the half-open window, in lexicographic order
    /// (last axis fastest).
    pub fn lattice_points(&self) -> Vec<Point> {
        let dim = self.dim();
        let ranges: Vec<(i64, i64)> = (0..dim)
            .map(|a| (self.lower[a].ceil() as i64, self.upper[a].ceil() as i64))
            .collect();
        if ranges.iter().any(|(lo, hi)| lo >= hi) {
            return Vec::new();
        }
        let mut out = Vec::new();
        let mut cur: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        loop {
            out.push(Point(cur.iter().map(|&c| c as f64).collect()));
            let mut axis = dim;
            loop {
                if axis == 0 {
                    return out;
                }
                axis -= 1;
                cur[axis] += 1;
                if cur[axis] < ranges[axis].1 {
                    break;
                }
                cur[axis] = ranges[axis].0;
            }
        }
    }
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist2(a, b).sqrt()
}

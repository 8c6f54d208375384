//! SVG figures of planar plans: sources, targets, travel segments, twist
//! disks, tube outlines and the image of a square grid.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::geom::{Point, Window};
use crate::matching::DisplacementMap;
use crate::rectify::{HomeoPlan, LocalMap};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RenderError {
    #[error("rendering needs dimension 2, got {0}")]
    UnsupportedDimension(usize),
    #[error("invalid style: {0}")]
    InvalidStyle(String),
    #[error("scene contains a non-finite coordinate")]
    NonFinite,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderStyle {
    /// Output width in pixels; the height follows the aspect ratio.
    pub width_px: f64,
    /// Spacing of the reference grid in world units.
    pub grid_step: f64,
    pub point_radius: f64,
    pub line_width: f64,
    pub source_color: String,
    pub target_color: String,
    pub segment_color: String,
    pub twist_color: String,
    pub tube_color: String,
    pub grid_color: String,
    /// Extra world-space margin around the drawing.
    pub padding: f64,
}

impl Default for RenderStyle {
    fn default() -> Self {
        RenderStyle {
            width_px: 800.0,
            grid_step: 1.0,
            point_radius: 0.08,
            line_width: 0.02,
            source_color: "#d62728".into(),
            target_color: "#1f77b4".into(),
            segment_color: "#555555".into(),
            twist_color: "#2ca02c".into(),
            tube_color: "#ff7f0e".into(),
            grid_color: "#bbbbbb".into(),
            padding: 0.5,
        }
    }
}

impl RenderStyle {
    pub fn validate(&self) -> Result<(), RenderError> {
        let positive = [
            ("width_px", self.width_px),
            ("grid_step", self.grid_step),
            ("point_radius", self.point_radius),
            ("line_width", self.line_width),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(RenderError::InvalidStyle(format!("{name} must be positive")));
            }
        }
        if !(self.padding >= 0.0 && self.padding.is_finite()) {
            return Err(RenderError::InvalidStyle("padding must be non-negative".into()));
        }
        let colors = [
            &self.source_color,
            &self.target_color,
            &self.segment_color,
            &self.twist_color,
            &self.tube_color,
            &self.grid_color,
        ];
        for c in colors {
            let ok = !c.is_empty() && c.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '#');
            if !ok {
                return Err(RenderError::InvalidStyle(format!("bad color {c:?}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Dot { at: [f64; 2] },
    Segment { a: [f64; 2], b: [f64; 2] },
    Circle { center: [f64; 2], radius: f64 },
    /// Closed when `closed` is set.
    Polyline { points: Vec<[f64; 2]>, closed: bool },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub name: String,
    pub color: String,
    /// Filled dots, stroked everything else.
    pub shapes: Vec<Shape>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub view: Window,
    pub line_width: f64,
    pub point_radius: f64,
    pub width_px: f64,
    pub layers: Vec<Layer>,
}

impl Scene {
    pub fn layer(&self, name: &str) -> Option<&Layer> {
        self.layers.iter().find(|l| l.name == name)
    }
}

fn xy(p: &Point) -> [f64; 2] {
    [p[0], p[1]]
}

/// Outline of the set of points within `r` of the segment `[a, b]`.
fn stadium(a: [f64; 2], b: [f64; 2], r: f64, arc_steps: usize) -> Vec<[f64; 2]> {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let base = dy.atan2(dx);
    let pi = std::f64::consts::PI;
    let mut out = Vec::with_capacity(2 * arc_steps + 2);
    for (c, start) in [(b, base - pi / 2.0), (a, base + pi / 2.0)] {
        for k in 0..=arc_steps {
            let t = start + pi * k as f64 / arc_steps as f64;
            out.push([c[0] + r * t.cos(), c[1] + r * t.sin()]);
        }
    }
    out
}

/// Images of the reference grid lines, sampled at spacing `step`. Runs of
/// samples fixed by the plan collapse to their ends, which is exact since
/// the line is straight there.
fn deformed_grid(plan: &HomeoPlan, area: &Window, spacing: f64, step: f64) -> Vec<Shape> {
    let mut lines: Vec<Vec<Point>> = Vec::new();
    for axis in 0..2 {
        let other = 1 - axis;
        let (lo, hi) = (area.lower[axis], area.upper[axis]);
        let n = ((hi - lo) / step).ceil().max(1.0) as usize;
        let mut c = (area.lower[other] / spacing).ceil() * spacing;
        while c <= area.upper[other] {
            let line = (0..=n)
                .map(|k| {
                    let mut v = [0.0; 2];
                    v[axis] = lo + (hi - lo) * k as f64 / n as f64;
                    v[other] = c;
                    Point::new(v.to_vec())
                })
                .collect();
            lines.push(line);
            c += spacing;
        }
    }
    lines
        .into_iter()
        .map(|line| {
            let img = plan.evaluate_many(&line);
            let fixed: Vec<bool> = line.iter().zip(&img).map(|(u, v)| u == v).collect();
            let keep = |k: usize| {
                k == 0 || k + 1 == line.len() || !(fixed[k - 1] && fixed[k] && fixed[k + 1])
            };
            let points = (0..line.len()).filter(|&k| keep(k)).map(|k| xy(&img[k])).collect();
            Shape::Polyline {
                points,
                closed: false,
            }
        })
        .collect()
}

/// Assembles the layers of a planar plan; drawing order is grid, tubes,
/// twist disks, segments, targets, sources.
pub fn build_scene(
    plan: &HomeoPlan,
    m: &DisplacementMap,
    style: &RenderStyle,
) -> Result<Scene, RenderError> {
    style.validate()?;
    for d in [plan.dim(), m.dim()] {
        if d != 2 {
            return Err(RenderError::UnsupportedDimension(d));
        }
    }
    let eps = plan.epsilon_final();
    let area = if plan.maps().is_empty() && plan.perturb_prefix().is_empty() {
        m.core.clone()
    } else {
        m.core.union(plan.bounding_region())
    };
    let grid = deformed_grid(plan, &area, style.grid_step, eps / 10.0);

    let mut tubes = Vec::new();
    for rec in plan.ledger() {
        let (s, e) = rec.map_range;
        let radius = plan.maps()[s..e]
            .iter()
            .filter(|m| !m.is_twist())
            .map(|m| m.support_radius())
            .fold(0.0, f64::max);
        if radius > 0.0 {
            tubes.push(Shape::Polyline {
                points: stadium(xy(&rec.perturbed_source), xy(&rec.target), radius, 16),
                closed: true,
            });
        }
    }

    let mut centers = BTreeSet::new();
    let mut twists = Vec::new();
    for map in plan.maps() {
        if let LocalMap::HalfTwist { center, epsilon } = map {
            if centers.insert((center[0].to_bits(), center[1].to_bits())) {
                for r in [epsilon / 3.0, epsilon / 6.0] {
                    twists.push(Shape::Circle {
                        center: xy(center),
                        radius: r,
                    });
                }
            }
        }
    }

    let segments = plan
        .ledger()
        .iter()
        .filter(|r| r.map_range.0 < r.map_range.1)
        .map(|r| Shape::Segment {
            a: xy(&r.perturbed_source),
            b: xy(&r.target),
        })
        .collect();
    let dots = |pts: Vec<&Point>| pts.into_iter().map(|p| Shape::Dot { at: xy(p) }).collect();
    let layer = |name: &str, color: &String, shapes: Vec<Shape>| Layer {
        name: name.into(),
        color: color.clone(),
        shapes,
    };
    let layers = vec![
        layer("grid", &style.grid_color, grid),
        layer("tubes", &style.tube_color, tubes),
        layer("twists", &style.twist_color, twists),
        layer("segments", &style.segment_color, segments),
        layer("targets", &style.target_color, dots(m.targets().collect())),
        layer("sources", &style.source_color, dots(m.sources().collect())),
    ];
    let view = enclosing(&layers, &area).inflate(style.padding);
    Ok(Scene {
        view,
        line_width: style.line_width,
        point_radius: style.point_radius,
        width_px: style.width_px,
        layers,
    })
}

fn enclosing(layers: &[Layer], start: &Window) -> Window {
    let mut lo = [start.lower[0], start.lower[1]];
    let mut hi = [start.upper[0], start.upper[1]];
    let mut grow = |p: [f64; 2], r: f64| {
        for a in 0..2 {
            lo[a] = lo[a].min(p[a] - r);
            hi[a] = hi[a].max(p[a] + r);
        }
    };
    for l in layers {
        for s in &l.shapes {
            match s {
                Shape::Dot { at } => grow(*at, 0.0),
                Shape::Segment { a, b } => {
                    grow(*a, 0.0);
                    grow(*b, 0.0);
                }
                Shape::Circle { center, radius } => grow(*center, *radius),
                Shape::Polyline { points, .. } => points.iter().for_each(|p| grow(*p, 0.0)),
            }
        }
    }
    Window {
        lower: Point::new(lo.to_vec()),
        upper: Point::new(hi.to_vec()),
    }
}

fn num(x: f64) -> String {
    let s = format!("{x:.5}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

/// Writes the scene as an SVG 1.1 document. World `y` points up, so the
/// drawing group flips the vertical axis.
pub fn scene_to_svg(scene: &Scene) -> Result<String, RenderError> {
    let finite = |p: &[f64; 2]| p[0].is_finite() && p[1].is_finite();
    for l in &scene.layers {
        for s in &l.shapes {
            let ok = match s {
                Shape::Dot { at } => finite(at),
                Shape::Segment { a, b } => finite(a) && finite(b),
                Shape::Circle { center, radius } => finite(center) && radius.is_finite(),
                Shape::Polyline { points, .. } => points.iter().all(finite),
            };
            if !ok {
                return Err(RenderError::NonFinite);
            }
        }
    }
    let v = &scene.view;
    let (w, h) = (v.extent(0), v.extent(1));
    let px_h = scene.width_px * h / w;
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}\" height=\"{}\" viewBox=\"{} {} {} {}\">",
        num(scene.width_px),
        num(px_h),
        num(v.lower[0]),
        num(-v.upper[1]),
        num(w),
        num(h)
    );
    out.push_str("<g transform=\"scale(1,-1)\">\n");
    for l in &scene.layers {
        let _ = writeln!(
            out,
            "<g id=\"{}\" stroke=\"{}\" fill=\"none\" stroke-width=\"{}\">",
            l.name,
            l.color,
            num(scene.line_width)
        );
        for s in &l.shapes {
            match s {
                Shape::Dot { at } => {
                    let _ = writeln!(
                        out,
                        "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{}\" stroke=\"none\"/>",
                        num(at[0]),
                        num(at[1]),
                        num(scene.point_radius),
                        l.color
                    );
                }
                Shape::Segment { a, b } => {
                    let _ = writeln!(
                        out,
                        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>",
                        num(a[0]),
                        num(a[1]),
                        num(b[0]),
                        num(b[1])
                    );
                }
                Shape::Circle { center, radius } => {
                    let _ = writeln!(
                        out,
                        "<circle cx=\"{}\" cy=\"{}\" r=\"{}\"/>",
                        num(center[0]),
                        num(center[1]),
                        num(*radius)
                    );
                }
                Shape::Polyline { points, closed } => {
                    let tag = if *closed { "polygon" } else { "polyline" };
                    let pts: Vec<String> =
                        points.iter().map(|p| format!("{},{}", num(p[0]), num(p[1]))).collect();
                    let _ = writeln!(out, "<{tag} points=\"{}\"/>", pts.join(" "));
                }
            }
        }
        out.push_str("</g>\n");
    }
    out.push_str("</g>\n</svg>\n");
    Ok(out)
}

pub fn render_scene(
    plan: &HomeoPlan,
    m: &DisplacementMap,
    style: &RenderStyle,
) -> Result<String, RenderError> {
    scene_to_svg(&build_scene(plan, m, style)?)
}

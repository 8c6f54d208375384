//! Test Delone sets.
//!
//! Randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64(spec.seed)`, so output is bit-identical for equal specs.

mod chair;
mod fibonacci;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use chair::{chair_tiles, chair_vertices, Chair};
pub use fibonacci::{fibonacci_points, PHI};

use crate::geom::{GeomError, Point, PointSet, Window};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Lattice,
    PerturbedLattice,
    Fibonacci1d,
    ChairVertices,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub dim: usize,
    pub window: Window,
    /// Largest perturbation, `perturbed_lattice` only.
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub seed: u64,
    /// Substitution steps, `chair_vertices` only.
    #[serde(default = "default_iterations")]
    pub iterations: u32,
}

fn default_iterations() -> u32 {
    1
}

/// Maximum substitution depth; deeper supertiles do not fit in memory.
pub const MAX_CHAIR_ITERATIONS: u32 = 11;

/// Largest lattice window (in points) a generator will enumerate.
pub const MAX_LATTICE_POINTS: f64 = 1e7;

impl GeneratorSpec {
    pub fn new(kind: GeneratorKind, window: Window) -> Self {
        GeneratorSpec {
            kind,
            dim: window.dim(),
            window,
            delta: 0.0,
            seed: 0,
            iterations: 1,
        }
    }

    pub fn validate(&self) -> Result<(), GeneratorError> {
        let bad = |m: &str| Err(GeneratorError::InvalidSpec(m.to_string()));
        if !self.window.is_valid() || self.window.dim() != self.dim {
            return bad("window must be a valid box of dimension `dim`");
        }
        let volume: f64 = (0..self.dim).map(|a| self.window.extent(a) + 1.0).product();
        match self.kind {
            GeneratorKind::Lattice | GeneratorKind::PerturbedLattice => {
                if !(volume <= MAX_LATTICE_POINTS) {
                    return bad("window holds too many lattice points");
                }
                if self.kind == GeneratorKind::PerturbedLattice
                    && !(self.delta >= 0.0 && self.delta < 0.5)
                {
                    return bad("delta must lie in [0, 1/2)");
                }
            }
            GeneratorKind::Fibonacci1d => {
                if self.dim != 1 {
                    return bad("fibonacci_1d is one-dimensional");
                }
                if !(volume <= MAX_LATTICE_POINTS) {
                    return bad("window too long");
                }
            }
            GeneratorKind::ChairVertices => {
                if self.dim != 2 {
                    return bad("chair_vertices is two-dimensional");
                }
                if self.iterations == 0 || self.iterations > MAX_CHAIR_ITERATIONS {
                    return bad("iterations must lie in 1..=11");
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, GeneratorError> {
        let spec: GeneratorSpec =
            serde_json::from_str(text).map_err(|e| GeneratorError::InvalidSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Pairs `(z, z + u_z)` certifying a perturbed lattice is boundedly
/// displaced from the lattice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceCorrespondence {
    pub pairs: Vec<(Point, Point)>,
}

impl SourceCorrespondence {
    pub fn max_displacement(&self) -> f64 {
        self.pairs
            .iter()
            .map(|(z, p)| z.distance(p))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeneratorError {
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

/// Uniform sample from the closed ball of radius `radius`.
pub fn uniform_in_ball(rng: &mut impl Rng, dim: usize, radius: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let n2: f64 = v.iter().map(|x| x * x).sum();
        if n2 <= 1.0 {
            return v.into_iter().map(|x| x * radius).collect();
        }
    }
}

pub fn generate(spec: &GeneratorSpec) -> Result<(PointSet, Option<SourceCorrespondence>), GeneratorError> {
    spec.validate()?;
    let w = &spec.window;
    match spec.kind {
        GeneratorKind::Lattice => Ok((PointSet::with_default_index(w.lattice_points(), w.clone())?, None)),
        GeneratorKind::PerturbedLattice => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let mut pairs = Vec::new();
            for z in w.lattice_points() {
                let u = uniform_in_ball(&mut rng, spec.dim, spec.delta);
                let p = Point::new(z.coords().iter().zip(&u).map(|(a, b)| a + b).collect());
                if w.contains(p.coords()) {
                    pairs.push((z, p));
                }
            }
            let pts = pairs.iter().map(|(_, p)| p.clone()).collect();
            let set = PointSet::with_default_index(pts, w.clone())?;
            Ok((set, Some(SourceCorrespondence { pairs })))
        }
        GeneratorKind::Fibonacci1d => {
            let pts = fibonacci_points(w.lower[0], w.upper[0])
                .into_iter()
                .map(|x| Point::new(vec![x]))
                .collect();
            Ok((PointSet::with_default_index(pts, w.clone())?, None))
        }
        GeneratorKind::ChairVertices => {
            let pts = chair_vertices(spec.iterations)
                .into_iter()
                .map(|(x, y)| Point::new(vec![x as f64, y as f64]))
                .filter(|p| w.contains(p.coords()))
                .collect();
            Ok((PointSet::with_default_index(pts, w.clone())?, None))
        }
    }
}

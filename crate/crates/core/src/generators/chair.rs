//! Vertices of the chair substitution tiling.
//!
//! A chair is an L-tromino: a `2h × 2h` box with one `h × h` quadrant
//! removed. One substitution step replaces it by four chairs of half size:
//! one in the corner opposite the missing quadrant, one in the center (both
//! with the parent's orientation), and one in each arm, rotated a quarter
//! turn toward the arm's free end.

use std::collections::BTreeSet;

/// Orientation `k` means the missing quadrant points along `R^k (1, 1)`,
/// `R` the counterclockwise quarter turn.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Chair {
    /// Center of the bounding box, in units of the final tile scale.
    pub cx: i64,
    pub cy: i64,
    /// Half the bounding-box side.
    pub half: i64,
    pub orient: u8,
}

fn rot(k: u8, x: i64, y: i64) -> (i64, i64) {
    match k % 4 {
        0 => (x, y),
        1 => (-y, x),
        2 => (-x, -y),
        _ => (y, -x),
    }
}

impl Chair {
    pub fn subdivide(&self) -> [Chair; 4] {
        let q = self.half / 2;
        let child = |dx: i64, dy: i64, turn: u8| {
            let (ox, oy) = rot(self.orient, dx, dy);
            Chair {
                cx: self.cx + ox,
                cy: self.cy + oy,
                half: q,
                orient: (self.orient + turn) % 4,
            }
        };
        [
            child(-q, -q, 0),
            child(0, 0, 0),
            child(q, -q, 1),
            child(-q, q, 3),
        ]
    }

    /// The six corners of the L outline.
    pub fn corners(&self) -> [(i64, i64); 6] {
        let h = self.half;
        let local = [(-h, -h), (h, -h), (h, 0), (0, 0), (0, h), (-h, h)];
        local.map(|(x, y)| {
            let (rx, ry) = rot(self.orient, x, y);
            (self.cx + rx, self.cy + ry)
        })
    }
}

/// Chairs after `iterations` substitutions of the chair with bounding box
/// `[0, 2^(iterations+1)]²`, missing its upper-right quadrant. The final
/// tiles have side 2, so every corner is an integer point.
pub fn chair_tiles(iterations: u32) -> Vec<Chair> {
    let half = 1i64 << iterations;
    let mut tiles = vec![Chair {
        cx: half,
        cy: half,
        half,
        orient: 0,
    }];
    for _ in 0..iterations {
        tiles = tiles.iter().flat_map(|c| c.subdivide()).collect();
    }
    tiles
}

/// Distinct tile corners, sorted.
pub fn chair_vertices(iterations: u32) -> Vec<(i64, i64)> {
    chair_tiles(iterations)
        .iter()
        .flat_map(|c| c.corners())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

//! The Fibonacci chain as a cut-and-project set.
//!
//! Lattice points `(m, n)` of the plane are kept when their coordinate
//! `φn − m` along the internal direction lies in `[-1, φ)`, the projection of
//! the unit square. Kept points are projected to `mφ + n` on the physical
//! line, which makes the two gap lengths exactly `1` and `φ`.

pub const PHI: f64 = 1.618_033_988_749_895;

/// Points of the chain in `[lo, hi)`, ascending.
pub fn fibonacci_points(lo: f64, hi: f64) -> Vec<f64> {
    // physical coordinate of an accepted point is about n(φ² + 1)
    let scale = PHI * PHI + 1.0;
    let n_lo = (lo / scale).floor() as i64 - 2;
    let n_hi = (hi / scale).ceil() as i64 + 2;
    let mut out = Vec::new();
    for n in n_lo..=n_hi {
        let m_lo = (PHI * n as f64 - PHI).floor() as i64 - 1;
        let m_hi = (PHI * n as f64 + 1.0).ceil() as i64 + 1;
        for m in m_lo..=m_hi {
            let internal = PHI * n as f64 - m as f64;
            if (-1.0..PHI).contains(&internal) {
                let x = m as f64 * PHI + n as f64;
                if (lo..hi).contains(&x) {
                    out.push(x);
                }
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

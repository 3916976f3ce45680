use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Elbow {
    pub k: usize,
    /// The curve has no knee (it is linear); `k` is then the smallest value.
    pub no_knee: bool,
    /// Vertical chord distance at `k`, in units of the inertia range.
    pub distance: f64,
}

/// Knee of a decreasing inertia curve: the `k` farthest below the chord
/// joining the endpoints, after scaling both axes to `[0, 1]`.
pub fn elbow(curve: &[(usize, f64)]) -> Result<Elbow> {
    if curve.len() < 3 {
        return Err(Error::InvalidInput("elbow needs at least three points".into()));
    }
    if curve.iter().any(|&(_, v)| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidInput("inertia values must be positive".into()));
    }
    if curve.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::InvalidInput("k values must be strictly increasing".into()));
    }
    let (k0, y0) = (curve[0].0 as f64, curve[0].1);
    let (k1, y1) = (curve[curve.len() - 1].0 as f64, curve[curve.len() - 1].1);
    let y_hi = curve.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    let y_lo = curve.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let span = y_hi - y_lo;
    if span == 0.0 {
        return Ok(Elbow { k: curve[0].0, no_knee: true, distance: 0.0 });
    }
    let mut best = (0.0, curve[0].0);
    for &(k, y) in &curve[1..curve.len() - 1] {
        let chord = y0 + (y1 - y0) * (k as f64 - k0) / (k1 - k0);
        let d = (chord - y) / span;
        if d > best.0 {
            best = (d, k);
        }
    }
    if best.0 <= 1e-9 {
        log::warn!("inertia curve has no knee; using k = {}", curve[0].0);
        return Ok(Elbow { k: curve[0].0, no_knee: true, distance: 0.0 });
    }
    Ok(Elbow { k: best.1, no_knee: false, distance: best.0 })
}

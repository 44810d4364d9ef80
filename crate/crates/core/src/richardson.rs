//! Richardson extrapolation of `g(h) = g∞ + C·hᵖ` from the three finest
//! entries of a refinement sequence. Ratios between successive `h` need not
//! be constant.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Extrapolated,
    /// Differences vanish to rounding; the order is undefined.
    Constant,
    Inconclusive(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extrapolation {
    pub limit: f64,
    /// `|g(h_finest) − g∞|`.
    pub error_estimate: f64,
    pub order: Option<f64>,
    pub status: Status,
}

impl Extrapolation {
    pub fn is_extrapolated(&self) -> bool {
        self.status == Status::Extrapolated
    }
}

/// `(h₁ᵖ − h₂ᵖ) / (h₂ᵖ − h₃ᵖ)`, increasing in `p` for `h₁ > h₂ > h₃ > 0`.
fn difference_ratio(h: [f64; 3], p: f64) -> f64 {
    let [a, b, c] = h.map(|x| x.powf(p));
    (a - b) / (b - c)
}

/// Fits the model through the last three `(h, g)` pairs.
///
/// Needs `h` strictly decreasing. Returns an inconclusive result when the
/// values change sign or the differences are not monotonically shrinking.
pub fn richardson_extrapolate(data: &[(f64, f64)]) -> Result<Extrapolation> {
    if data.len() < 3 {
        return Err(Error::Extrapolation(format!("need at least 3 meshes, got {}", data.len())));
    }
    if data.windows(2).any(|w| !(w[1].0 < w[0].0) || !(w[1].0 > 0.0)) {
        return Err(Error::Extrapolation("mesh sizes must be positive and strictly decreasing".into()));
    }
    let tail = &data[data.len() - 3..];
    let h = [tail[0].0, tail[1].0, tail[2].0];
    let g = [tail[0].1, tail[1].1, tail[2].1];
    let finest = g[2];
    let inconclusive = |why: &str| Extrapolation {
        limit: finest,
        error_estimate: f64::INFINITY,
        order: None,
        status: Status::Inconclusive(why.to_string()),
    };

    let (d1, d2) = (g[0] - g[1], g[1] - g[2]);
    let scale = g.iter().fold(0.0f64, |s, x| s.max(x.abs()));
    let noise = 64.0 * f64::EPSILON * scale.max(f64::MIN_POSITIVE);
    if d1.abs() <= noise && d2.abs() <= noise {
        return Ok(Extrapolation { limit: finest, error_estimate: 0.0, order: None, status: Status::Constant });
    }
    if g.iter().any(|&x| x > 0.0) && g.iter().any(|&x| x < 0.0) {
        return Ok(inconclusive("sign change"));
    }
    if d1 * d2 <= 0.0 {
        return Ok(inconclusive("non-monotone sequence"));
    }
    let target = d1 / d2;
    if !(target > 1.0) {
        return Ok(inconclusive("differences not decreasing"));
    }

    let (mut lo, mut hi) = (1e-3, 20.0);
    if difference_ratio(h, lo) > target || difference_ratio(h, hi) < target {
        return Ok(inconclusive("order outside [0.001, 20]"));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if difference_ratio(h, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let p = 0.5 * (lo + hi);
    let c = d2 / (h[1].powf(p) - h[2].powf(p));
    let limit = g[2] - c * h[2].powf(p);
    Ok(Extrapolation { limit, error_estimate: (finest - limit).abs(), order: Some(p), status: Status::Extrapolated })
}

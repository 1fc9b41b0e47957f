//! Monotone piecewise-cubic interpolation (Fritsch–Carlson) with a
//! bisection inverse, used for user-tabulated volume laws.

use crate::{Error, Result};

/// A strictly increasing piecewise-cubic Hermite interpolant.
///
/// Slopes are limited per Fritsch–Carlson, so the interpolant is monotone
/// whenever the data are; the constructor requires strictly increasing
/// abscissae and ordinates so the curve (and hence its inverse) is strictly
/// increasing.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::Parse(
                "interpolation table needs at least two (x, y) rows".into(),
            ));
        }
        for w in xs.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::Parse(format!(
                    "abscissae must be strictly increasing: {} then {}",
                    w[0], w[1]
                )));
            }
        }
        for w in ys.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::Parse(format!(
                    "ordinates must be strictly increasing: {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Parse("non-finite interpolation value".into()));
        }
        let slopes = fritsch_carlson_slopes(&xs, &ys);
        Ok(MonotoneCubic { xs, ys, slopes })
    }

    pub fn x_min(&self) -> f64 {
        self.xs[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    pub fn y_min(&self) -> f64 {
        self.ys[0]
    }

    pub fn y_max(&self) -> f64 {
        *self.ys.last().unwrap()
    }

    /// Evaluate at `x`, which must lie within the tabulated range.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(x >= self.x_min() && x <= self.x_max()) {
            return Err(Error::range(format!(
                "x = {x} outside tabulated range [{}, {}]",
                self.x_min(),
                self.x_max()
            )));
        }
        let i = match self.xs.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => return Ok(self.ys[i]),
            Err(i) => i - 1, // x strictly between xs[i-1] and xs[i]
        };
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let (d0, d1) = (self.slopes[i], self.slopes[i + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        Ok(h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1)
    }

    /// Invert `y = eval(x)` by bisection to 1e-12 relative in `x`.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if !(y >= self.y_min() && y <= self.y_max()) {
            return Err(Error::range(format!(
                "y = {y} outside attainable range [{}, {}]",
                self.y_min(),
                self.y_max()
            )));
        }
        let i = self.ys.partition_point(|v| *v < y);
        if i < self.ys.len() && self.ys[i] == y {
            return Ok(self.xs[i]);
        }
        let (mut lo, mut hi) = (self.xs[i - 1], self.xs[i]);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.eval(mid)? < y {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-12 * hi.abs().max(1e-300) {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Fritsch–Carlson slope limiting: harmonic-mean interior slopes, one-sided
/// endpoint slopes clipped to keep the interpolant monotone.
fn fritsch_carlson_slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] <= 0.0 {
            d[i] = 0.0;
        } else {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    d[0] = endpoint_slope(h[0], h.get(1).copied(), delta[0], delta.get(1).copied());
    d[n - 1] = endpoint_slope(
        h[n - 2],
        (n >= 3).then(|| h[n - 3]),
        delta[n - 2],
        (n >= 3).then(|| delta[n - 3]),
    );
    d
}

fn endpoint_slope(h0: f64, h1: Option<f64>, d0: f64, d1: Option<f64>) -> f64 {
    let slope = match (h1, d1) {
        (Some(h1), Some(d1)) => ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1),
        _ => d0,
    };
    if slope * d0 <= 0.0 {
        0.0
    } else if slope.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        slope
    }
}

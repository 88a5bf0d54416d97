//! Uniform-mesh quadrature helpers shared by the driving tables, the phase
//! integrals and the propagator kick integrals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform time mesh on `[0, t_max]` used for every accumulated integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub t_max: f64,
    /// Mesh step; `None` means `t_max / 4096`.
    pub step: Option<f64>,
}

impl QuadratureConfig {
    pub const DEFAULT_INTERVALS: usize = 4096;

    pub fn new(t_max: f64) -> Self {
        Self { t_max, step: None }
    }

    pub fn with_step(t_max: f64, step: f64) -> Self {
        Self {
            t_max,
            step: Some(step),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.t_max.is_finite() || self.t_max < 0.0 {
            return Err(Error::InvalidQuadrature(format!(
                "t_max must be finite and >= 0, got {}",
                self.t_max
            )));
        }
        if let Some(h) = self.step {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::InvalidQuadrature(format!(
                    "step must be > 0, got {h}"
                )));
            }
        }
        Ok(())
    }

    /// Number of mesh intervals, always even and at least 2.
    pub fn intervals(&self) -> usize {
        let raw = match self.step {
            Some(h) if self.t_max > 0.0 => (self.t_max / h).ceil() as usize,
            _ => Self::DEFAULT_INTERVALS,
        };
        let n = raw.max(2);
        n + (n % 2)
    }

    /// Mesh nodes `0 = t_0 < ... < t_n = t_max`.
    pub fn mesh(&self) -> Vec<f64> {
        let n = self.intervals();
        let h = self.t_max / n as f64;
        (0..=n).map(|i| i as f64 * h).collect()
    }
}

/// Composite Simpson rule over uniformly spaced samples.
///
/// An odd number of intervals is handled by closing the last interval with
/// the three-point quadratic rule, so any length >= 3 is accepted.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    cumulative_simpson(values, h).last().copied().unwrap_or(0.0)
}

/// Running integral `I[i] = int_{t_0}^{t_i}` of uniformly spaced samples,
/// fourth-order accurate at even nodes and third-order locally at odd nodes.
pub fn cumulative_simpson(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    match n {
        0 | 1 => return out,
        2 => {
            out[1] = 0.5 * h * (values[0] + values[1]);
            return out;
        }
        _ => {}
    }
    let mut i = 2;
    while i < n {
        out[i] = out[i - 2] + h / 3.0 * (values[i - 2] + 4.0 * values[i - 1] + values[i]);
        i += 2;
    }
    let mut j = 1;
    while j < n {
        out[j] = if j + 1 < n {
            out[j - 1] + h / 12.0 * (5.0 * values[j - 1] + 8.0 * values[j] - values[j + 1])
        } else {
            out[j - 1] + h / 12.0 * (-values[j - 2] + 8.0 * values[j - 1] + 5.0 * values[j])
        };
        j += 2;
    }
    out
}

/// Complex-valued counterpart of [`cumulative_simpson`].
pub fn cumulative_simpson_complex(
    values: &[num_complex::Complex64],
    h: f64,
) -> Vec<num_complex::Complex64> {
    let re: Vec<f64> = values.iter().map(|z| z.re).collect();
    let im: Vec<f64> = values.iter().map(|z| z.im).collect();
    cumulative_simpson(&re, h)
        .into_iter()
        .zip(cumulative_simpson(&im, h))
        .map(|(a, b)| num_complex::Complex64::new(a, b))
        .collect()
}

pub fn cumulative_trapezoid(values: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            acc += 0.5 * h * (values[i - 1] + v);
        }
        out.push(acc);
    }
    out
}

/// Simpson weights for `n` (even) equal intervals of width `h`.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    debug_assert!(n >= 2 && n.is_multiple_of(2));
    (0..=n)
        .map(|j| {
            let c = if j == 0 || j == n {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * h / 3.0
        })
        .collect()
}

/// Cubic Hermite interpolation on `[t0, t0 + h]` from values and slopes.
#[inline]
pub fn hermite(s: f64, h: f64, y0: f64, y1: f64, d0: f64, d1: f64) -> f64 {
    let u = s / h;
    let u2 = u * u;
    let u3 = u2 * u;
    let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
    let h10 = u3 - 2.0 * u2 + u;
    let h01 = -2.0 * u3 + 3.0 * u2;
    let h11 = u3 - u2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}

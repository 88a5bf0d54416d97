//! Uniform spatial grids, the smooth inner-product window, sampled
//! wavefunctions and the FFT machinery for spectral derivatives.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn fft_pair(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(n), p.plan_fft_inverse(n))
    })
}

/// Smooth taper restricting inner products to `[lo, hi]`.
///
/// The ramp over the outer `taper` fraction on each side is a cosine ramp
/// composed with itself, so the weight and its first three derivatives are
/// continuous and spectral derivatives of windowed states stay clean in the
/// flat interior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
    pub taper: f64,
}

impl Window {
    pub const DEFAULT_TAPER: f64 = 0.1;

    pub fn new(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            taper: Self::DEFAULT_TAPER,
        }
    }

    fn ramp(s: f64) -> f64 {
        let s = s.clamp(0.0, 1.0);
        let inner = 0.5 * (1.0 - (PI * s).cos());
        0.5 * (1.0 - (PI * inner).cos())
    }

    /// Ramp value with its first and second derivatives in `s`.
    fn ramp_derivatives(s: f64) -> (f64, f64, f64) {
        if s <= 0.0 {
            return (0.0, 0.0, 0.0);
        }
        if s >= 1.0 {
            return (1.0, 0.0, 0.0);
        }
        let u = 0.5 * (1.0 - (PI * s).cos());
        let du = 0.5 * PI * (PI * s).sin();
        let ddu = 0.5 * PI * PI * (PI * s).cos();
        let r = 0.5 * (1.0 - (PI * u).cos());
        let dr = 0.5 * PI * (PI * u).sin() * du;
        let ddr = 0.5 * PI * (PI * (PI * u).cos() * du * du + (PI * u).sin() * ddu);
        (r, dr, ddr)
    }

    /// `(w, w', w'')` at `x`.
    pub fn weight_derivatives(&self, x: f64) -> (f64, f64, f64) {
        if x <= self.lo || x >= self.hi {
            return (0.0, 0.0, 0.0);
        }
        let width = self.taper * (self.hi - self.lo);
        if width <= 0.0 {
            return (1.0, 0.0, 0.0);
        }
        let (a, da, dda) = Self::ramp_derivatives((x - self.lo) / width);
        let (b, db, ddb) = Self::ramp_derivatives((self.hi - x) / width);
        let (da, dda) = (da / width, dda / (width * width));
        let (db, ddb) = (-db / width, ddb / (width * width));
        (a * b, da * b + a * db, dda * b + 2.0 * da * db + a * ddb)
    }

    pub fn weight(&self, x: f64) -> f64 {
        if x <= self.lo || x >= self.hi {
            return 0.0;
        }
        let width = self.taper * (self.hi - self.lo);
        if width <= 0.0 {
            return 1.0;
        }
        Self::ramp((x - self.lo) / width) * Self::ramp((self.hi - x) / width)
    }

    /// True where the weight is exactly one.
    pub fn is_interior(&self, x: f64) -> bool {
        let width = self.taper * (self.hi - self.lo);
        x >= self.lo + width && x <= self.hi - width
    }
}

/// Uniform grid `x_i = x_min + i dx`, `dx = (x_max - x_min)/(n - 1)`.
///
/// Spectral operations treat the samples as one period of length `n dx`;
/// states are expected to vanish near both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
    pub window: Window,
}

impl SpatialGrid {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        Self::with_window(x_min, x_max, n, Window::new(x_min, x_max))
    }

    pub fn with_window(x_min: f64, x_max: f64, n: usize, window: Window) -> Result<Self> {
        let g = Self {
            x_min,
            x_max,
            n,
            window,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 16 || !self.n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n must be a power of two >= 16, got {}",
                self.n
            )));
        }
        if !(self.x_min.is_finite() && self.x_max.is_finite() && self.x_max > self.x_min) {
            return Err(Error::InvalidGrid(format!(
                "need x_min < x_max, got [{}, {}]",
                self.x_min, self.x_max
            )));
        }
        let w = &self.window;
        if !(w.lo < w.hi && w.taper >= 0.0 && w.taper < 0.5) {
            return Err(Error::InvalidGrid(format!(
                "bad window [{}, {}] taper {}",
                w.lo, w.hi, w.taper
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n - 1) as f64
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    pub fn window_weights(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.window.weight(self.x(i))).collect()
    }

    pub fn interior_mask(&self) -> Vec<bool> {
        (0..self.n).map(|i| self.window.is_interior(self.x(i))).collect()
    }

    pub fn spectral(&self) -> SpectralGrid {
        SpectralGrid::new(self)
    }

    /// Trapezoid weight of node `i` (half at the two ends).
    #[inline]
    pub fn trap_weight(&self, i: usize) -> f64 {
        if i == 0 || i == self.n - 1 {
            0.5 * self.dx()
        } else {
            self.dx()
        }
    }
}

/// Angular wavenumbers conjugate to a [`SpatialGrid`] in FFT order.
#[derive(Debug, Clone)]
pub struct SpectralGrid {
    pub dk: f64,
    pub k: Vec<f64>,
}

impl SpectralGrid {
    pub fn new(grid: &SpatialGrid) -> Self {
        let n = grid.n;
        let dk = 2.0 * PI / (n as f64 * grid.dx());
        let k = (0..n)
            .map(|j| {
                let m = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
                m * dk
            })
            .collect();
        Self { dk, k }
    }

    pub fn k_max(&self) -> f64 {
        self.k.iter().fold(0.0, |a, &b| a.max(b.abs()))
    }
}

/// First and second spectral derivatives of periodic samples.
pub fn spectral_derivatives(grid: &SpatialGrid, values: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
    let n = grid.n;
    let (fwd, inv) = fft_pair(n);
    let spec = grid.spectral();
    let mut hat = values.to_vec();
    fwd.process(&mut hat);
    let scale = 1.0 / n as f64;
    let mut d1: Vec<Complex64> = hat
        .iter()
        .enumerate()
        .map(|(j, c)| {
            if j == n / 2 {
                Complex64::new(0.0, 0.0)
            } else {
                c * Complex64::new(0.0, spec.k[j] * scale)
            }
        })
        .collect();
    let mut d2: Vec<Complex64> = hat
        .iter()
        .zip(&spec.k)
        .map(|(c, k)| c * (-k * k * scale))
        .collect();
    inv.process(&mut d1);
    inv.process(&mut d2);
    (d1, d2)
}

/// Order of the finite-difference fallback stencils.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StencilOrder {
    Second,
    Fourth,
}

/// Finite-difference first and second derivatives with periodic wrap.
pub fn fd_derivatives(
    grid: &SpatialGrid,
    values: &[Complex64],
    order: StencilOrder,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let n = grid.n;
    let h = grid.dx();
    let at = |i: isize| values[i.rem_euclid(n as isize) as usize];
    let mut d1 = Vec::with_capacity(n);
    let mut d2 = Vec::with_capacity(n);
    for i in 0..n as isize {
        match order {
            StencilOrder::Second => {
                d1.push((at(i + 1) - at(i - 1)) / (2.0 * h));
                d2.push((at(i + 1) - 2.0 * at(i) + at(i - 1)) / (h * h));
            }
            StencilOrder::Fourth => {
                d1.push((-at(i + 2) + 8.0 * at(i + 1) - 8.0 * at(i - 1) + at(i - 2)) / (12.0 * h));
                d2.push(
                    (-at(i + 2) + 16.0 * at(i + 1) - 30.0 * at(i) + 16.0 * at(i - 1) - at(i - 2))
                        / (12.0 * h * h),
                );
            }
        }
    }
    (d1, d2)
}

/// Complex samples of a state on a grid, tagged with the time they refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct GridWavefunction {
    pub grid: SpatialGrid,
    pub values: Vec<Complex64>,
    pub t: f64,
}

impl GridWavefunction {
    pub fn new(grid: SpatialGrid, values: Vec<Complex64>, t: f64) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.n {
            return Err(Error::InvalidGrid(format!(
                "expected {} samples, got {}",
                grid.n,
                values.len()
            )));
        }
        Ok(Self { grid, values, t })
    }

    pub fn zeros(grid: SpatialGrid, t: f64) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.n],
            t,
        }
    }

    pub fn from_fn(grid: SpatialGrid, t: f64, f: impl Fn(f64) -> Complex64) -> Self {
        let values = (0..grid.n).map(|i| f(grid.x(i))).collect();
        Self { grid, values, t }
    }

    /// Normalized Gaussian `exp(-(x-x0)^2/(4 sigma^2) + i p0 x / hbar)`.
    pub fn gaussian(grid: SpatialGrid, x0: f64, sigma: f64, p0: f64, hbar: f64) -> Self {
        let amp = (2.0 * PI * sigma * sigma).powf(-0.25);
        let mut psi = Self::from_fn(grid, 0.0, |x| {
            let g = amp * (-(x - x0).powi(2) / (4.0 * sigma * sigma)).exp();
            Complex64::from_polar(g, p0 * x / hbar)
        });
        let _ = psi.normalize();
        psi
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFiniteInput)
        }
    }

    pub fn same_grid(&self, other: &Self) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Plain L2 inner product `<self, other>` with trapezoid weights.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .enumerate()
            .map(|(i, (a, b))| a.conj() * b * self.grid.trap_weight(i))
            .sum())
    }

    pub fn norm_sq(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, a)| a.norm_sqr() * self.grid.trap_weight(i))
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Inner product with the window applied to both factors.
    pub fn windowed_inner(&self, other: &Self) -> Result<Complex64> {
        self.same_grid(other)?;
        let w = &self.grid.window;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .enumerate()
            .map(|(i, (a, b))| {
                let wi = w.weight(self.grid.x(i));
                a.conj() * b * (wi * wi * self.grid.trap_weight(i))
            })
            .sum())
    }

    pub fn windowed_norm_sq(&self) -> f64 {
        let w = &self.grid.window;
        self.values
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let wi = w.weight(self.grid.x(i));
                a.norm_sqr() * wi * wi * self.grid.trap_weight(i)
            })
            .sum()
    }

    /// Copy multiplied pointwise by the window.
    pub fn windowed(&self) -> Self {
        let w = &self.grid.window;
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, a)| a * w.weight(self.grid.x(i)))
            .collect();
        Self {
            grid: self.grid,
            values,
            t: self.t,
        }
    }

    pub fn scale(&mut self, s: Complex64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }

    /// Rescales to unit plain norm, returning the previous norm.
    pub fn normalize(&mut self) -> f64 {
        let nrm = self.norm();
        if nrm > 0.0 {
            self.scale(Complex64::new(1.0 / nrm, 0.0));
        }
        nrm
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: Complex64, other: &Self) -> Result<()> {
        self.same_grid(other)?;
        self.values
            .iter_mut()
            .zip(&other.values)
            .for_each(|(s, o)| *s += a * o);
        Ok(())
    }

    pub fn distance(&self, other: &Self) -> Result<f64> {
        let mut d = self.clone();
        d.axpy(Complex64::new(-1.0, 0.0), other)?;
        Ok(d.norm())
    }

    pub fn mean_x(&self) -> f64 {
        let n2 = self.norm_sq();
        self.values
            .iter()
            .enumerate()
            .map(|(i, a)| a.norm_sqr() * self.grid.x(i) * self.grid.trap_weight(i))
            .sum::<f64>()
            / n2
    }

    /// `<p>` from the spectral first derivative.
    pub fn mean_p(&self, hbar: f64) -> f64 {
        let (d1, _) = spectral_derivatives(&self.grid, &self.values);
        let mut dpsi = self.clone();
        dpsi.values = d1.into_iter().map(|z| z * Complex64::new(0.0, -hbar)).collect();
        self.inner(&dpsi).map(|z| z.re).unwrap_or(f64::NAN) / self.norm_sq()
    }

    /// Fraction of `norm_sq` held by the outer `frac` of the grid on either side.
    pub fn edge_fraction(&self, frac: f64) -> f64 {
        let m = ((self.grid.n as f64) * frac).ceil() as usize;
        let total = self.norm_sq();
        if total == 0.0 {
            return 0.0;
        }
        let edge: f64 = (0..self.grid.n)
            .filter(|&i| i < m || i + m >= self.grid.n)
            .map(|i| self.values[i].norm_sqr() * self.grid.trap_weight(i))
            .sum();
        edge / total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_derivatives_match_differences() {
        let w = Window::new(-10.0, 5.0);
        for x in [-9.9, -9.5, -9.0, -8.7, 0.0, 3.7, 4.2, 4.9] {
            let (v, d1, d2) = w.weight_derivatives(x);
            let h = 1e-4;
            let fd1 = (w.weight(x + h) - w.weight(x - h)) / (2.0 * h);
            let fd2 = (w.weight(x + h) - 2.0 * v + w.weight(x - h)) / (h * h);
            assert_eq!(v, w.weight(x));
            assert!((d1 - fd1).abs() < 1e-6 && (d2 - fd2).abs() < 1e-4, "x={x}");
        }
    }

    #[test]
    fn grid_validation() {
        assert!(SpatialGrid::new(0.0, 1.0, 8).is_err());
        assert!(SpatialGrid::new(0.0, 1.0, 100).is_err());
        assert!(SpatialGrid::new(1.0, 1.0, 64).is_err());
        let g = SpatialGrid::new(-1.0, 1.0, 64).unwrap();
        assert!((g.dx() - 2.0 / 63.0).abs() < 1e-15);
        assert_eq!(g.x(63), 1.0);
    }

    #[test]
    fn window_shape() {
        let w = Window::new(-10.0, 10.0);
        assert_eq!(w.weight(-10.0), 0.0);
        assert_eq!(w.weight(10.0), 0.0);
        assert_eq!(w.weight(0.0), 1.0);
        assert_eq!(w.weight(-8.0), 1.0);
        let mid = w.weight(-9.0);
        assert!((mid - 0.5).abs() < 1e-12);
        assert!(w.is_interior(-8.0) && !w.is_interior(-8.5));
        // monotone ramp
        let ramp: Vec<f64> = (0..=20).map(|i| w.weight(-10.0 + 0.1 * i as f64)).collect();
        assert!(ramp.windows(2).all(|p| p[1] >= p[0]));
    }

    #[test]
    fn spectral_derivative_of_gaussian() {
        let g = SpatialGrid::new(-20.0, 20.0, 512).unwrap();
        let psi = GridWavefunction::from_fn(g, 0.0, |x| Complex64::new((-x * x).exp(), 0.0));
        let (d1, d2) = spectral_derivatives(&g, &psi.values);
        for i in (0..g.n).step_by(7) {
            let x = g.x(i);
            let e1 = -2.0 * x * (-x * x).exp();
            let e2 = (4.0 * x * x - 2.0) * (-x * x).exp();
            assert!((d1[i].re - e1).abs() < 1e-10);
            assert!((d2[i].re - e2).abs() < 1e-10);
        }
    }

    #[test]
    fn fd_stencils_converge() {
        let f = |x: f64| Complex64::new((-x * x).exp(), 0.0);
        let err = |n: usize, order| {
            let g = SpatialGrid::new(-10.0, 10.0, n).unwrap();
            let psi = GridWavefunction::from_fn(g, 0.0, f);
            let (_, d2) = fd_derivatives(&g, &psi.values, order);
            (0..n)
                .map(|i| {
                    let x = g.x(i);
                    (d2[i].re - (4.0 * x * x - 2.0) * (-x * x).exp()).abs()
                })
                .fold(0.0, f64::max)
        };
        let r2 = err(256, StencilOrder::Second) / err(512, StencilOrder::Second);
        let r4 = err(256, StencilOrder::Fourth) / err(512, StencilOrder::Fourth);
        assert!((3.5..4.6).contains(&r2), "{r2}");
        assert!((14.0..18.0).contains(&r4), "{r4}");
    }

    #[test]
    fn gaussian_moments() {
        let g = SpatialGrid::new(-30.0, 30.0, 1024).unwrap();
        let psi = GridWavefunction::gaussian(g, 1.5, 1.2, 0.7, 1.0);
        assert!((psi.norm() - 1.0).abs() < 1e-12);
        assert!((psi.mean_x() - 1.5).abs() < 1e-10);
        assert!((psi.mean_p(1.0) - 0.7).abs() < 1e-10);
        assert!(psi.edge_fraction(0.05) < 1e-30);
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let a = GridWavefunction::zeros(SpatialGrid::new(-1.0, 1.0, 16).unwrap(), 0.0);
        let b = GridWavefunction::zeros(SpatialGrid::new(-1.0, 1.0, 32).unwrap(), 0.0);
        assert_eq!(a.inner(&b), Err(Error::GridMismatch));
    }
}

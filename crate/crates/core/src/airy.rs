//! Airy function evaluation, the translation-plus-phase transform that maps
//! the invariant onto `p^2 + c0 x`, and the delta-normalized eigenstates.
//!
//! The standard convention `Ai(z) = (1/2pi) int exp(i(s^3/3 + s z)) ds` is
//! used throughout, so the normalization prefactor is `(c0 hbar^4)^(-1/6)`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{fft_pair, GridWavefunction, SpatialGrid};
use crate::invariant::{InvariantCoefficients, InvariantConstants};
use crate::par::{fill_indexed, Exec};

/// `Ai(0) = 3^(-2/3) / Gamma(2/3)`
const AI0: f64 = 0.355_028_053_887_817_2;
/// `-Ai'(0) = 3^(-1/3) / Gamma(1/3)`
const AIP0: f64 = 0.258_819_403_792_806_8;

const N_ASYMPTOTIC: usize = 40;

/// Two-regime evaluator: Maclaurin series inside `|z| <= series_cutoff`,
/// optimally truncated asymptotic expansions outside.
#[derive(Debug, Clone)]
pub struct AiryEvaluator {
    pub series_cutoff: f64,
    pub tolerance: f64,
    u: [f64; N_ASYMPTOTIC],
}

impl Default for AiryEvaluator {
    fn default() -> Self {
        Self::new(6.0)
    }
}

impl AiryEvaluator {
    pub fn new(series_cutoff: f64) -> Self {
        // u_k = Gamma(3k + 1/2) / (54^k k! Gamma(k + 1/2))
        let mut u = [0.0; N_ASYMPTOTIC];
        u[0] = 1.0;
        for k in 1..N_ASYMPTOTIC {
            let kf = k as f64;
            u[k] = u[k - 1] * (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0)
                / (216.0 * kf * (2.0 * kf - 1.0));
        }
        Self {
            series_cutoff,
            tolerance: 1e-10,
            u,
        }
    }

    pub fn ai(&self, z: f64) -> f64 {
        if z.abs() <= self.series_cutoff {
            self.series(z)
        } else if z > 0.0 {
            self.asymptotic_decaying(z)
        } else {
            self.asymptotic_oscillating(-z)
        }
    }

    /// `Ai(z) = Ai(0) f(z) + Ai'(0) g(z)` with the two power series in `z^3`.
    pub fn series(&self, z: f64) -> f64 {
        let z3 = z * z * z;
        let (mut f, mut g) = (1.0, z);
        let (mut tf, mut tg) = (1.0, z);
        let mut k = 0.0;
        loop {
            k += 1.0;
            tf *= z3 / ((3.0 * k - 1.0) * (3.0 * k));
            tg *= z3 / ((3.0 * k) * (3.0 * k + 1.0));
            f += tf;
            g += tg;
            let small = tf.abs() <= 1e-17 * f.abs() && tg.abs() <= 1e-17 * g.abs();
            if small || k > 200.0 {
                break;
            }
        }
        AI0 * f - AIP0 * g
    }

    fn asymptotic_decaying(&self, z: f64) -> f64 {
        let zeta = 2.0 / 3.0 * z * z.sqrt();
        let mut sum = 0.0;
        let mut prev = f64::INFINITY;
        let mut power = 1.0;
        for (k, uk) in self.u.iter().enumerate() {
            let term = uk * power;
            if term.abs() >= prev.abs() {
                break;
            }
            sum += if k % 2 == 0 { term } else { -term };
            prev = term;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
            power /= zeta;
        }
        (-zeta).exp() / (2.0 * PI.sqrt() * z.powf(0.25)) * sum
    }

    fn asymptotic_oscillating(&self, x: f64) -> f64 {
        let zeta = 2.0 / 3.0 * x * x.sqrt();
        let (mut p, mut q) = (0.0, 0.0);
        let (mut prev_p, mut prev_q) = (f64::INFINITY, f64::INFINITY);
        let (mut p_done, mut q_done) = (false, false);
        let mut power = 1.0;
        for (k, uk) in self.u.iter().enumerate() {
            let term = uk * power;
            let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
            if k % 2 == 0 && !p_done {
                if term >= prev_p || term < 1e-18 {
                    p_done = true;
                } else {
                    p += sign * term;
                    prev_p = term;
                }
            } else if k % 2 == 1 && !q_done {
                if term >= prev_q || term < 1e-18 {
                    q_done = true;
                } else {
                    q += sign * term;
                    prev_q = term;
                }
            }
            if p_done && q_done {
                break;
            }
            power /= zeta;
        }
        let phase = zeta + PI / 4.0;
        (phase.sin() * p - phase.cos() * q) / (PI.sqrt() * x.powf(0.25))
    }
}

fn default_evaluator() -> &'static AiryEvaluator {
    static EVAL: OnceLock<AiryEvaluator> = OnceLock::new();
    EVAL.get_or_init(AiryEvaluator::default)
}

/// `Ai(z)` with the default evaluator.
pub fn airy_ai(z: f64) -> f64 {
    default_evaluator().ai(z)
}

/// `Xi(t) = exp(i shift p / hbar) exp(i phase_slope x)`, with
/// `shift = (b^2/4 - d)/c0` and `phase_slope = b/(2 hbar)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiTransform {
    pub shift: f64,
    pub phase_slope: f64,
    pub t: f64,
}

impl XiTransform {
    pub fn at(coeffs: &InvariantCoefficients, t: f64) -> Result<Self> {
        coeffs.consts.require_positive_c0()?;
        let (b, d) = (coeffs.b(t)?, coeffs.d(t)?);
        Ok(Self {
            shift: (b * b / 4.0 - d) / coeffs.consts.c0,
            phase_slope: b / (2.0 * coeffs.consts.hbar),
            t,
        })
    }

    pub fn identity(t: f64) -> Self {
        Self {
            shift: 0.0,
            phase_slope: 0.0,
            t,
        }
    }
}

/// `psi(x) -> psi(x + a)` by Fourier interpolation, refusing shifts that
/// would push more than `1e-8` of the norm off the grid.
fn translate(psi: &GridWavefunction, a: f64) -> Result<GridWavefunction> {
    if a == 0.0 {
        return Ok(psi.clone());
    }
    let g = psi.grid;
    let total = psi.norm_sq();
    let lost: f64 = (0..g.n)
        .filter(|&i| {
            let x = g.x(i);
            if a > 0.0 {
                x < g.x_min + a
            } else {
                x > g.x_max + a
            }
        })
        .map(|i| psi.values[i].norm_sqr() * g.dx())
        .sum();
    let frac = if total > 0.0 { lost / total } else { 0.0 };
    if frac > 1e-8 {
        return Err(Error::Truncation { lost: frac });
    }
    let (fwd, inv) = fft_pair(g.n);
    let spec = g.spectral();
    let mut hat = psi.values.clone();
    fwd.process(&mut hat);
    let scale = 1.0 / g.n as f64;
    for (j, c) in hat.iter_mut().enumerate() {
        *c *= Complex64::from_polar(scale, spec.k[j] * a);
    }
    inv.process(&mut hat);
    Ok(GridWavefunction {
        grid: g,
        values: hat,
        t: psi.t,
    })
}

/// `(Xi psi)(x) = exp(i beta (x + a)) psi(x + a)`
pub fn xi_apply(xi: &XiTransform, psi: &GridWavefunction) -> Result<GridWavefunction> {
    psi.check_finite()?;
    let g = psi.grid;
    let mut phased = psi.clone();
    for (i, v) in phased.values.iter_mut().enumerate() {
        *v *= Complex64::from_polar(1.0, xi.phase_slope * g.x(i));
    }
    translate(&phased, xi.shift)
}

/// `(Xi^+ phi)(x) = exp(-i beta x) phi(x - a)`
pub fn xi_apply_inverse(xi: &XiTransform, phi: &GridWavefunction) -> Result<GridWavefunction> {
    phi.check_finite()?;
    let mut out = translate(phi, -xi.shift)?;
    let g = out.grid;
    for (i, v) in out.values.iter_mut().enumerate() {
        *v *= Complex64::from_polar(1.0, -xi.phase_slope * g.x(i));
    }
    Ok(out)
}

fn scales(consts: &InvariantConstants) -> Result<(f64, f64)> {
    consts.validate()?;
    consts.require_positive_c0()?;
    let norm = (consts.c0 * consts.hbar.powi(4)).powf(-1.0 / 6.0);
    let alpha = (consts.c0 / (consts.hbar * consts.hbar)).cbrt();
    Ok((norm, alpha))
}

/// `Phi_k(x) = (c0 hbar^4)^(-1/6) Ai((c0/hbar^2)^(1/3) (x - k/c0))`, the
/// eigenstates of `p^2 + c0 x`.
pub fn eigenstate_fixed(k: f64, consts: &InvariantConstants, grid: &SpatialGrid) -> Result<GridWavefunction> {
    eigenstate_fixed_with(k, consts, grid, Exec::default())
}

pub fn eigenstate_fixed_with(
    k: f64,
    consts: &InvariantConstants,
    grid: &SpatialGrid,
    exec: Exec,
) -> Result<GridWavefunction> {
    grid.validate()?;
    let (norm, alpha) = scales(consts)?;
    let centre = k / consts.c0;
    let eval = default_evaluator();
    let mut values = vec![Complex64::new(0.0, 0.0); grid.n];
    fill_indexed(exec, &mut values, |i| {
        Complex64::new(norm * eval.ai(alpha * (grid.x(i) - centre)), 0.0)
    });
    Ok(GridWavefunction {
        grid: *grid,
        values,
        t: 0.0,
    })
}

/// Turning point `(b^2/4 + k - d)/c0` of the time-dependent eigenstate.
pub fn turning_point(k: f64, coeffs: &InvariantCoefficients, t: f64) -> Result<f64> {
    let (b, d) = (coeffs.b(t)?, coeffs.d(t)?);
    Ok((b * b / 4.0 + k - d) / coeffs.consts.c0)
}

/// `phi_k(x, t) = (c0 hbar^4)^(-1/6) exp(-i b x / 2 hbar) Ai(alpha (x - (b^2/4 + k - d)/c0))`
pub fn eigenstate_t(
    k: f64,
    coeffs: &InvariantCoefficients,
    t: f64,
    grid: &SpatialGrid,
) -> Result<GridWavefunction> {
    eigenstate_t_with(k, coeffs, t, grid, Exec::default())
}

pub fn eigenstate_t_with(
    k: f64,
    coeffs: &InvariantCoefficients,
    t: f64,
    grid: &SpatialGrid,
    exec: Exec,
) -> Result<GridWavefunction> {
    grid.validate()?;
    let consts = &coeffs.consts;
    let (norm, alpha) = scales(consts)?;
    let b = coeffs.b(t)?;
    let centre = turning_point(k, coeffs, t)?;
    if !(grid.x_min..=grid.x_max).contains(&centre) {
        return Err(Error::InvalidGrid(format!(
            "turning point {centre} lies outside [{}, {}]",
            grid.x_min, grid.x_max
        )));
    }
    let slope = -b / (2.0 * consts.hbar);
    let eval = default_evaluator();
    let mut values = vec![Complex64::new(0.0, 0.0); grid.n];
    fill_indexed(exec, &mut values, |i| {
        let x = grid.x(i);
        Complex64::from_polar(norm * eval.ai(alpha * (x - centre)), slope * x)
    });
    Ok(GridWavefunction {
        grid: *grid,
        values,
        t,
    })
}

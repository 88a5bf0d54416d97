//! The generalized phase `theta_k(t)` of a continuous-spectrum invariant,
//! computed from the eigendifferential matrix element, from the closed form
//! for the linear potential, and by projecting a propagated packet.
//!
//! Matrix-element convention: with window `w`,
//!
//! `rho(k, t) = <w dphi, (i d/dt - H/hbar)(w phi_k)> / <w dphi, w phi_k>`
//!
//! The continuum overlap `<dphi | phi_k>` is 1 for `k` inside the band, but on
//! a finite window it is much smaller, so the raw matrix element is divided by
//! its windowed value. The result tends to `-(k + b^2/2 - d)/(2 m hbar)`.

use std::io::Write;

use num_complex::Complex64;

use crate::airy::eigenstate_t_with;
use crate::driving::DrivingFunction;
use crate::error::{Error, Result};
use crate::grid::{spectral_derivatives, GridWavefunction, SpatialGrid};
use crate::invariant::InvariantCoefficients;
use crate::oracle::{evolve, PropagatorConfig};
use crate::packets::{build_packet_with, KBand};
use crate::par::{try_map_indexed, Exec};
use crate::quad::{cumulative_simpson, simpson};

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTrajectory {
    pub k: f64,
    pub times: Vec<f64>,
    /// Radians, relative to `times[0]`.
    pub theta: Vec<f64>,
    /// `|<dphi(t), psi(t)>| / |<dphi(0), psi(0)>|`, only for oracle extraction.
    pub abs_overlap: Option<Vec<f64>>,
}

impl PhaseTrajectory {
    pub fn max_deviation(&self, other: &Self) -> Result<f64> {
        if self.times.len() != other.times.len()
            || self.times.iter().zip(&other.times).any(|(a, b)| (a - b).abs() > 1e-12)
        {
            return Err(Error::InvalidQuadrature("trajectories use different time grids".into()));
        }
        Ok(self
            .theta
            .iter()
            .zip(&other.theta)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub fn final_theta(&self) -> f64 {
        *self.theta.last().unwrap_or(&0.0)
    }
}

/// Real value with the imaginary remainder kept as a diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Density {
    pub value: f64,
    pub imag: f64,
}

/// `n + 1` equally spaced times on `[0, t_max]`.
pub fn uniform_times(t_max: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|j| t_max * j as f64 / n as f64).collect()
}

/// Default finite-difference step for the time derivative of `phi_k`.
pub fn default_time_step(t_max: f64) -> f64 {
    t_max / 2048.0
}

fn check_uniform(t_grid: &[f64]) -> Result<f64> {
    if t_grid.len() < 2 {
        return Err(Error::InvalidQuadrature("time grid needs at least two points".into()));
    }
    if t_grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let h = t_grid[1] - t_grid[0];
    if h <= 0.0 {
        return Err(Error::InvalidQuadrature("time grid must be increasing".into()));
    }
    for w in t_grid.windows(2) {
        if ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1.0) {
            return Err(Error::InvalidQuadrature("time grid must be uniform".into()));
        }
    }
    Ok(h)
}

/// Weighted samples `(w^2 phi_k, w^2 (i d/dt - H/hbar) phi_k)` at time `t`.
///
/// Spatial derivatives are taken spectrally on `w phi_k` and the window
/// commutator is removed with the analytic `w'`, `w''`, so the operator acts
/// on `phi_k` itself rather than on the tapered state.
fn weighted_residual(
    k: f64,
    coeffs: &InvariantCoefficients,
    t: f64,
    grid: &SpatialGrid,
    h_t: f64,
) -> Result<(GridWavefunction, GridWavefunction)> {
    if !(h_t.is_finite() && h_t > 0.0) {
        return Err(Error::InvalidQuadrature(format!("time step must be positive, got {h_t}")));
    }
    let t_max = coeffs.t_max();
    if t < 0.0 || t > t_max {
        return Err(Error::OutOfRange { t, lo: 0.0, hi: t_max });
    }
    if 2.0 * h_t > t_max {
        return Err(Error::InvalidQuadrature(format!(
            "time step {h_t} too large for the coefficient range {t_max}"
        )));
    }
    let phi_at = |s: f64| -> Result<Vec<Complex64>> {
        Ok(eigenstate_t_with(k, coeffs, s, grid, Exec::Sequential)?.windowed().values)
    };
    let wphi = phi_at(t)?;
    // one-sided second-order stencils at the ends of the coefficient range
    let dt_wphi: Vec<Complex64> = if t - h_t < 0.0 {
        let (p1, p2) = (phi_at(t + h_t)?, phi_at(t + 2.0 * h_t)?);
        (0..grid.n)
            .map(|i| (-3.0 * wphi[i] + 4.0 * p1[i] - p2[i]) / (2.0 * h_t))
            .collect()
    } else if t + h_t > t_max {
        let (m1, m2) = (phi_at(t - h_t)?, phi_at(t - 2.0 * h_t)?);
        (0..grid.n)
            .map(|i| (3.0 * wphi[i] - 4.0 * m1[i] + m2[i]) / (2.0 * h_t))
            .collect()
    } else {
        let (p1, m1) = (phi_at(t + h_t)?, phi_at(t - h_t)?);
        (0..grid.n).map(|i| (p1[i] - m1[i]) / (2.0 * h_t)).collect()
    };

    let consts = &coeffs.consts;
    let f = coeffs.force(t)?;
    let (d1, d2) = spectral_derivatives(grid, &wphi);
    let kin = consts.hbar / (2.0 * consts.mass);
    let mut w2phi = Vec::with_capacity(grid.n);
    let mut residual = Vec::with_capacity(grid.n);
    for i in 0..grid.n {
        let x = grid.x(i);
        let (w, dw, ddw) = grid.window.weight_derivatives(x);
        // w phi is what was sampled; phi itself only appears multiplied by w
        let w2_dd = d2[i] * w - d1[i] * (2.0 * dw) + wphi[i] * (if w > 0.0 { (2.0 * dw * dw - w * ddw) / w } else { 0.0 });
        let w2_phi = wphi[i] * w;
        let h_over_hbar = -kin * w2_dd + w2_phi * (f * x / consts.hbar);
        residual.push(Complex64::i() * dt_wphi[i] * w - h_over_hbar);
        w2phi.push(w2_phi);
    }
    Ok((
        GridWavefunction {
            grid: *grid,
            values: w2phi,
            t,
        },
        GridWavefunction {
            grid: *grid,
            values: residual,
            t,
        },
    ))
}

pub fn matrix_element_density(
    k: f64,
    band: &KBand,
    coeffs: &InvariantCoefficients,
    t: f64,
    grid: &SpatialGrid,
    h_t: f64,
) -> Result<Density> {
    band.validate()?;
    if !band.contains(k) {
        return Err(Error::InvalidBand(format!(
            "band [{}, {}] does not contain k = {k}",
            band.k_lo,
            band.k_hi()
        )));
    }
    let packet = build_packet_with(band, coeffs, t, grid, Exec::Sequential)?;
    let bra = &packet.values;
    let (w2phi, residual) = weighted_residual(k, coeffs, t, grid, h_t)?;
    let den = bra.inner(&w2phi)?;
    let scale = (packet.norm_sq * phi_windowed_norm_sq(&w2phi)).sqrt();
    if band.delta_k < 1e-3 * h_t || den.norm() < 1e-8 * scale {
        return Err(Error::DegenerateBand(format!(
            "overlap {:.3e} of the band packet with phi_k is below the noise floor",
            den.norm()
        )));
    }
    let rho = bra.inner(&residual)? / den;
    Ok(Density {
        value: rho.re,
        imag: rho.im,
    })
}

/// `||w phi||^2` recovered from `w^2 phi` samples.
fn phi_windowed_norm_sq(w2phi: &GridWavefunction) -> f64 {
    let g = &w2phi.grid;
    (0..g.n)
        .map(|i| {
            let w = g.window.weight(g.x(i));
            if w > 0.0 {
                w2phi.values[i].norm_sqr() / (w * w) * g.trap_weight(i)
            } else {
                0.0
            }
        })
        .sum()
}

/// Unnormalized same-`k` element `<w phi_k, (i d/dt - H/hbar) w phi_k>`,
/// which grows with the window because `phi_k` is not square integrable.
pub fn naive_density(
    k: f64,
    coeffs: &InvariantCoefficients,
    t: f64,
    grid: &SpatialGrid,
    h_t: f64,
) -> Result<Density> {
    let phi = eigenstate_t_with(k, coeffs, t, grid, Exec::Sequential)?;
    let (_, residual) = weighted_residual(k, coeffs, t, grid, h_t)?;
    let z = phi.inner(&residual)?;
    Ok(Density {
        value: z.re,
        imag: z.im,
    })
}

/// `theta_k(t) = int_0^t rho(k, t') dt'` by cumulative Simpson over `t_grid`.
pub fn phase_overlap(
    k: f64,
    band: &KBand,
    coeffs: &InvariantCoefficients,
    t_grid: &[f64],
    grid: &SpatialGrid,
    h_t: f64,
) -> Result<PhaseTrajectory> {
    phase_overlap_with(k, band, coeffs, t_grid, grid, h_t, Exec::default())
}

pub fn phase_overlap_with(
    k: f64,
    band: &KBand,
    coeffs: &InvariantCoefficients,
    t_grid: &[f64],
    grid: &SpatialGrid,
    h_t: f64,
    exec: Exec,
) -> Result<PhaseTrajectory> {
    let h = check_uniform(t_grid)?;
    let rho = try_map_indexed(exec, t_grid.len(), |j| {
        matrix_element_density(k, band, coeffs, t_grid[j], grid, h_t).map(|d| d.value)
    })?;
    Ok(PhaseTrajectory {
        k,
        times: t_grid.to_vec(),
        theta: cumulative_simpson(&rho, h),
        abs_overlap: None,
    })
}

/// `theta_k(t) - theta_k(0) = -(1/(2 m hbar)) int (k + b^2/2 - d) dt'`
pub fn phase_closed_form(k: f64, coeffs: &InvariantCoefficients, t_grid: &[f64]) -> Result<PhaseTrajectory> {
    check_uniform(t_grid)?;
    const SUB: usize = 16;
    let consts = &coeffs.consts;
    let rate = |t: f64| -> Result<f64> {
        let (b, d) = (coeffs.b(t)?, coeffs.d(t)?);
        Ok(-(k + 0.5 * b * b - d) / (2.0 * consts.mass * consts.hbar))
    };
    let mut theta = Vec::with_capacity(t_grid.len());
    theta.push(0.0);
    let mut acc = 0.0;
    for w in t_grid.windows(2) {
        let h = (w[1] - w[0]) / SUB as f64;
        let vals = (0..=SUB)
            .map(|j| rate((w[0] + j as f64 * h).min(w[1])))
            .collect::<Result<Vec<_>>>()?;
        acc += simpson(&vals, h);
        theta.push(acc);
    }
    Ok(PhaseTrajectory {
        k,
        times: t_grid.to_vec(),
        theta,
        abs_overlap: None,
    })
}

/// Propagates the normalized, windowed packet of `band` with the TDSE oracle
/// and unwraps `arg <dphi(k; t), psi(t)>` step by step along `t_grid`.
///
/// `t_grid` must start at 0 and its spacing must be a whole number of
/// oracle steps.
#[allow(clippy::too_many_arguments)]
pub fn phase_from_oracle(
    k: f64,
    band: &KBand,
    coeffs: &InvariantCoefficients,
    driver: &DrivingFunction,
    t_grid: &[f64],
    grid: &SpatialGrid,
    oracle: &PropagatorConfig,
) -> Result<PhaseTrajectory> {
    let h = check_uniform(t_grid)?;
    if t_grid[0] != 0.0 {
        return Err(Error::InvalidQuadrature("oracle phase time grid must start at 0".into()));
    }
    let ratio = h / oracle.dt;
    let stride = ratio.round() as usize;
    if stride == 0 || (ratio - stride as f64).abs() > 1e-6 {
        return Err(Error::InvalidPropagator(format!(
            "time grid spacing {h} is not a multiple of the oracle step {}",
            oracle.dt
        )));
    }
    let cfg = PropagatorConfig {
        n_steps: stride * (t_grid.len() - 1),
        record_every: stride,
        ..*oracle
    };

    let packet0 = build_packet_with(band, coeffs, 0.0, grid, Exec::default())?;
    let mut psi0 = packet0.normalized_state();
    psi0.t = 0.0;

    let mut theta = Vec::with_capacity(t_grid.len());
    let mut abs = Vec::with_capacity(t_grid.len());
    let mut prev: Option<Complex64> = None;
    let mut first = 0.0;
    evolve(&psi0, driver, &coeffs.consts, &cfg, |psi| {
        let packet = build_packet_with(band, coeffs, psi.t, grid, Exec::default())?;
        let ov = packet.values.windowed_inner(psi)?;
        match prev {
            None => {
                first = ov.norm();
                theta.push(0.0);
            }
            Some(p) => {
                let inc = (ov / p).arg();
                if inc.abs() > std::f64::consts::FRAC_PI_2 {
                    return Err(Error::PhaseUnwrap { t: psi.t, increment: inc });
                }
                let last = *theta.last().expect("initial phase recorded");
                theta.push(last + inc);
            }
        }
        abs.push(ov.norm() / first);
        prev = Some(ov);
        Ok(())
    })?;
    Ok(PhaseTrajectory {
        k,
        times: t_grid.to_vec(),
        theta,
        abs_overlap: Some(abs),
    })
}

/// Least-squares line `y = slope x + intercept`, with the largest residual.
pub fn affine_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let resid = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).abs())
        .fold(0.0, f64::max);
    (slope, intercept, resid)
}

/// CSV with columns `t,theta,theta_closed_form,theta_oracle,abs_overlap`.
/// Missing oracle columns are written as `nan`.
pub fn write_phase_csv(
    overlap: &PhaseTrajectory,
    closed: &PhaseTrajectory,
    oracle: Option<&PhaseTrajectory>,
    out: &mut impl Write,
) -> std::io::Result<()> {
    writeln!(out, "t,theta,theta_closed_form,theta_oracle,abs_overlap")?;
    for (j, t) in overlap.times.iter().enumerate() {
        let (th_o, ab) = match oracle {
            Some(o) => (
                o.theta[j],
                o.abs_overlap.as_ref().map_or(f64::NAN, |a| a[j]),
            ),
            None => (f64::NAN, f64::NAN),
        };
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            t, overlap.theta[j], closed.theta[j], th_o, ab
        )?;
    }
    Ok(())
}

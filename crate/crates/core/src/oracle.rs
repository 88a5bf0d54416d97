//! Reference TDSE solvers for `H = p^2/2m + f(t) x`.
//!
//! [`propagate_split`] is a Strang split-operator stepper with the potential
//! sampled at the step midpoint. [`propagate_exact_linear`] solves the
//! momentum-space equation along its characteristics `p(t) = p0 - F1(t)`:
//!
//! `psi(x, t) = exp(-i F1 x / hbar) IFFT[ psi0~(q) exp(-i (q^2 t - 2 q G1 + G2) / (2 m hbar)) ]`
//!
//! with `G1 = int F1` and `G2 = int F1^2`, so it has no time-step error.

use std::io::Write;

use num_complex::Complex64;

use crate::driving::{DrivingFunction, IteratedIntegrals};
use crate::error::{Error, Result};
use crate::grid::{fft_pair, spectral_derivatives, GridWavefunction, SpatialGrid};
use crate::invariant::InvariantConstants;
use crate::quad::QuadratureConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    SplitOperator,
    ExactLinear,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Boundary {
    Periodic,
    /// Multiplicative mask over the outer `width` fraction of each side.
    AbsorbingMask { width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PropagatorConfig {
    pub dt: f64,
    pub n_steps: usize,
    pub method: Method,
    pub boundary: Boundary,
    /// Record a state every this many steps (the first and last are always kept).
    pub record_every: usize,
}

/// Norm fraction tolerated at the grid edges or absorbed by the mask.
pub const LEAK_TOLERANCE: f64 = 1e-6;
const EDGE_BAND: f64 = 0.02;

impl PropagatorConfig {
    pub fn new(dt: f64, n_steps: usize, method: Method) -> Self {
        Self {
            dt,
            n_steps,
            method,
            boundary: Boundary::Periodic,
            record_every: 1,
        }
    }

    pub fn recording(mut self, every: usize) -> Self {
        self.record_every = every;
        self
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.n_steps as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidPropagator(format!("dt must be positive, got {}", self.dt)));
        }
        if self.n_steps == 0 {
            return Err(Error::InvalidPropagator("n_steps must be at least 1".into()));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidPropagator("record_every must be at least 1".into()));
        }
        if let Boundary::AbsorbingMask { width } = self.boundary {
            if !(width > 0.0 && width < 0.5) {
                return Err(Error::InvalidPropagator(format!(
                    "mask width must lie in (0, 0.5), got {width}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<GridWavefunction>,
    /// Norm^2 removed by the absorbing mask (zero for periodic runs).
    pub absorbed: f64,
}

impl Trajectory {
    pub fn last(&self) -> &GridWavefunction {
        self.states.last().expect("trajectory holds the initial state")
    }
}

/// `H(t) psi` with spectral second derivative, `t` from the state's tag.
pub fn apply_hamiltonian(
    psi: &GridWavefunction,
    df: &DrivingFunction,
    consts: &InvariantConstants,
) -> Result<GridWavefunction> {
    psi.check_finite()?;
    let f = df.eval(psi.t)?;
    let (_, d2) = spectral_derivatives(&psi.grid, &psi.values);
    let kin = -consts.hbar * consts.hbar / (2.0 * consts.mass);
    let values = psi
        .values
        .iter()
        .zip(d2)
        .enumerate()
        .map(|(i, (v, dd))| dd * kin + v * (f * psi.grid.x(i)))
        .collect();
    Ok(GridWavefunction {
        grid: psi.grid,
        values,
        t: psi.t,
    })
}

fn check_initial(psi0: &GridWavefunction) -> Result<()> {
    psi0.check_finite()?;
    let norm = psi0.norm();
    if (norm - 1.0).abs() > 1e-6 {
        return Err(Error::NotNormalized { norm });
    }
    check_edges(psi0)
}

fn check_edges(psi: &GridWavefunction) -> Result<()> {
    let fraction = psi.edge_fraction(EDGE_BAND);
    if fraction > LEAK_TOLERANCE {
        return Err(Error::BoundaryLeak { t: psi.t, fraction });
    }
    Ok(())
}

fn mask(grid: &SpatialGrid, width: f64) -> Vec<f64> {
    let span = grid.x_max - grid.x_min;
    let w = width * span;
    (0..grid.n)
        .map(|i| {
            let x = grid.x(i);
            let d = (x - grid.x_min).min(grid.x_max - x);
            if d >= w {
                1.0
            } else {
                let s = (d / w).max(0.0);
                (0.5 * std::f64::consts::PI * s).sin().powf(0.125)
            }
        })
        .collect()
}

fn momentum_spread(psi: &GridWavefunction, hbar: f64) -> (f64, f64) {
    let (fwd, _) = fft_pair(psi.grid.n);
    let mut hat = psi.values.clone();
    fwd.process(&mut hat);
    let k = psi.grid.spectral().k;
    let w: f64 = hat.iter().map(|c| c.norm_sqr()).sum();
    let m1: f64 = hat.iter().zip(&k).map(|(c, k)| c.norm_sqr() * k).sum::<f64>() / w;
    let m2: f64 = hat.iter().zip(&k).map(|(c, k)| c.norm_sqr() * k * k).sum::<f64>() / w;
    (hbar * m1, hbar * (m2 - m1 * m1).max(0.0).sqrt())
}

fn integrals_for(df: &DrivingFunction, consts: &InvariantConstants, t_end: f64) -> Result<IteratedIntegrals> {
    df.integrals(&QuadratureConfig::new(t_end), consts.mass)
}

/// Runs the configured method, calling `observe` on the initial state, every
/// `record_every` steps, and on the final state. Returns the final state.
pub fn evolve(
    psi0: &GridWavefunction,
    df: &DrivingFunction,
    consts: &InvariantConstants,
    cfg: &PropagatorConfig,
    mut observe: impl FnMut(&GridWavefunction) -> Result<()>,
) -> Result<(GridWavefunction, f64)> {
    cfg.validate()?;
    consts.validate()?;
    df.validate()?;
    check_initial(psi0)?;
    let t0 = psi0.t;
    let t_end = t0 + cfg.duration();
    let record = |j: usize| j.is_multiple_of(cfg.record_every) || j == cfg.n_steps;
    observe(psi0)?;
    match cfg.method {
        Method::SplitOperator => split_steps(psi0, df, consts, cfg, t_end, record, observe),
        Method::ExactLinear => {
            if t0 != 0.0 {
                return Err(Error::InvalidPropagator(
                    "exact linear propagation starts from t = 0".into(),
                ));
            }
            if cfg.boundary != Boundary::Periodic {
                return Err(Error::InvalidPropagator(
                    "exact linear propagation has no absorbing boundary".into(),
                ));
            }
            let ints = integrals_for(df, consts, t_end)?;
            let solver = ExactLinear::new(psi0, &ints, consts);
            let mut last = psi0.clone();
            for j in 1..=cfg.n_steps {
                if record(j) {
                    let t = (j as f64 * cfg.dt).min(t_end);
                    last = solver.at(t)?;
                    check_edges(&last)?;
                    observe(&last)?;
                }
            }
            Ok((last, 0.0))
        }
    }
}

fn split_steps(
    psi0: &GridWavefunction,
    df: &DrivingFunction,
    consts: &InvariantConstants,
    cfg: &PropagatorConfig,
    t_end: f64,
    record: impl Fn(usize) -> bool,
    mut observe: impl FnMut(&GridWavefunction) -> Result<()>,
) -> Result<(GridWavefunction, f64)> {
    let grid = psi0.grid;
    let (hbar, m, dt) = (consts.hbar, consts.mass, cfg.dt);

    let ints = integrals_for(df, consts, t_end.max(f64::MIN_POSITIVE))?;
    let (p_mean, p_sigma) = momentum_spread(psi0, hbar);
    let steps = 256;
    let max_kick = (0..=steps)
        .map(|j| ints.f1(t_end * j as f64 / steps as f64).map(f64::abs))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let p_cut = hbar * grid.spectral().k_max();
    if p_mean.abs() + 4.0 * p_sigma + max_kick >= p_cut {
        return Err(Error::InvalidPropagator(format!(
            "momentum content |<p>| + 4 sigma_p + max|F1| = {:.3} exceeds the grid cutoff {:.3}",
            p_mean.abs() + 4.0 * p_sigma + max_kick,
            p_cut
        )));
    }

    let (fwd, inv) = fft_pair(grid.n);
    let xs = grid.xs();
    let k = grid.spectral().k;
    let scale = 1.0 / grid.n as f64;
    let kinetic: Vec<Complex64> = k
        .iter()
        .map(|k| Complex64::from_polar(scale, -hbar * k * k * dt / (2.0 * m)))
        .collect();
    let mask = match cfg.boundary {
        Boundary::Periodic => None,
        Boundary::AbsorbingMask { width } => Some(mask(&grid, width)),
    };

    let mut psi = psi0.clone();
    let mut absorbed = 0.0;
    for j in 1..=cfg.n_steps {
        let t = psi0.t + (j - 1) as f64 * dt;
        let f = df.eval(t + 0.5 * dt)?;
        let half = -f * dt / (2.0 * hbar);
        for (v, x) in psi.values.iter_mut().zip(&xs) {
            *v *= Complex64::from_polar(1.0, half * x);
        }
        fwd.process(&mut psi.values);
        for (v, kin) in psi.values.iter_mut().zip(&kinetic) {
            *v *= kin;
        }
        inv.process(&mut psi.values);
        for (v, x) in psi.values.iter_mut().zip(&xs) {
            *v *= Complex64::from_polar(1.0, half * x);
        }
        psi.t = psi0.t + j as f64 * dt;
        if let Some(mask) = &mask {
            let before = psi.norm_sq();
            for (v, w) in psi.values.iter_mut().zip(mask) {
                *v *= w;
            }
            absorbed += before - psi.norm_sq();
            if absorbed > LEAK_TOLERANCE {
                return Err(Error::BoundaryLeak {
                    t: psi.t,
                    fraction: absorbed,
                });
            }
        }
        if record(j) {
            if mask.is_none() {
                check_edges(&psi)?;
            }
            observe(&psi)?;
        }
    }
    Ok((psi, absorbed))
}

/// Closed-form evolution from a fixed initial state.
pub struct ExactLinear<'a> {
    hat0: Vec<Complex64>,
    grid: SpatialGrid,
    ints: &'a IteratedIntegrals,
    consts: InvariantConstants,
}

impl<'a> ExactLinear<'a> {
    pub fn new(psi0: &GridWavefunction, ints: &'a IteratedIntegrals, consts: &InvariantConstants) -> Self {
        let (fwd, _) = fft_pair(psi0.grid.n);
        let mut hat0 = psi0.values.clone();
        fwd.process(&mut hat0);
        Self {
            hat0,
            grid: psi0.grid,
            ints,
            consts: *consts,
        }
    }

    pub fn at(&self, t: f64) -> Result<GridWavefunction> {
        let (hbar, m) = (self.consts.hbar, self.consts.mass);
        let f1 = self.ints.f1(t)?;
        let g1 = self.ints.kick_area(t)?;
        let g2 = self.ints.kick_sq(t)?;
        let k = self.grid.spectral().k;
        let scale = 1.0 / self.grid.n as f64;
        let mut values: Vec<Complex64> = self
            .hat0
            .iter()
            .zip(&k)
            .map(|(c, k)| {
                let q = hbar * k;
                c * Complex64::from_polar(scale, -(q * q * t - 2.0 * q * g1 + g2) / (2.0 * m * hbar))
            })
            .collect();
        let (_, inv) = fft_pair(self.grid.n);
        inv.process(&mut values);
        for (i, v) in values.iter_mut().enumerate() {
            *v *= Complex64::from_polar(1.0, -f1 * self.grid.x(i) / hbar);
        }
        Ok(GridWavefunction {
            grid: self.grid,
            values,
            t,
        })
    }
}

fn collect(
    psi0: &GridWavefunction,
    df: &DrivingFunction,
    consts: &InvariantConstants,
    cfg: &PropagatorConfig,
) -> Result<Trajectory> {
    let mut times = Vec::new();
    let mut states = Vec::new();
    let (_, absorbed) = evolve(psi0, df, consts, cfg, |psi| {
        times.push(psi.t);
        states.push(psi.clone());
        Ok(())
    })?;
    Ok(Trajectory {
        times,
        states,
        absorbed,
    })
}

pub fn propagate_split(
    psi0: &GridWavefunction,
    df: &DrivingFunction,
    consts: &InvariantConstants,
    cfg: &PropagatorConfig,
) -> Result<Trajectory> {
    let cfg = PropagatorConfig {
        method: Method::SplitOperator,
        ..*cfg
    };
    collect(psi0, df, consts, &cfg)
}

pub fn propagate_exact_linear(
    psi0: &GridWavefunction,
    df: &DrivingFunction,
    consts: &InvariantConstants,
    cfg: &PropagatorConfig,
) -> Result<Trajectory> {
    let cfg = PropagatorConfig {
        method: Method::ExactLinear,
        ..*cfg
    };
    collect(psi0, df, consts, &cfg)
}

pub fn propagate(
    psi0: &GridWavefunction,
    df: &DrivingFunction,
    consts: &InvariantConstants,
    cfg: &PropagatorConfig,
) -> Result<Trajectory> {
    collect(psi0, df, consts, cfg)
}

/// CSV rows `t,x,abs2,re,im` for every `stride`-th grid point.
pub fn write_snapshot_csv(psi: &GridWavefunction, stride: usize, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "t,x,abs2,re,im")?;
    for i in (0..psi.grid.n).step_by(stride.max(1)) {
        let v = psi.values[i];
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            psi.t,
            psi.grid.x(i),
            v.norm_sqr(),
            v.re,
            v.im
        )?;
    }
    Ok(())
}

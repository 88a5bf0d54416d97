//! Named verification scenarios and their pass/fail reports.
//!
//! A [`Scenario`] fixes a driver, constants, grids and tolerances;
//! [`run_scenario`] runs every check and records the measured value next to
//! its bound, whether or not it passes. Errors inside a check are recorded on
//! that check and never abort the suite.

use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::airy::eigenstate_t_with;
use crate::driving::DrivingFunction;
use crate::error::{Error, Result};
use crate::grid::{GridWavefunction, SpatialGrid, Window};
use crate::invariant::{build_coefficients, eigenvalue_residual, invariant_expectation, InvariantCoefficients, InvariantConstants};
use crate::oracle::{evolve, Method, PropagatorConfig};
use crate::packets::{build_packet_with, projection_fraction, KBand};
use crate::par::{map_indexed, Exec};
use crate::phase::{
    affine_fit, default_time_step, matrix_element_density, naive_density, phase_closed_form, phase_from_oracle,
    phase_overlap_with, uniform_times,
};
use crate::quad::QuadratureConfig;

/// The single place where default tolerances live.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub coefficient_derivative: f64,
    pub eigen_residual: f64,
    pub norm_ratio_lo: f64,
    pub norm_ratio_hi: f64,
    pub disjoint_overlap: f64,
    pub confinement: f64,
    pub projector_drift: f64,
    pub phase_agreement: f64,
    pub phase_spot_rel: f64,
    pub phase_spot_abs: f64,
    pub density_slope_rel: f64,
    pub density_imag: f64,
    pub invariant_drift: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            coefficient_derivative: 1e-6,
            eigen_residual: 1e-6,
            norm_ratio_lo: 0.95,
            norm_ratio_hi: 1.05,
            disjoint_overlap: 1e-4,
            confinement: 0.99,
            projector_drift: 1e-3,
            phase_agreement: 0.02,
            phase_spot_rel: 0.01,
            phase_spot_abs: 1e-3,
            density_slope_rel: 0.01,
            density_imag: 1e-4,
            invariant_drift: 1e-5,
        }
    }
}

/// A phase value known in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpot {
    pub k: f64,
    pub t: f64,
    pub expected: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioGrids {
    /// Grid for eigenstates, residuals, packets and matrix elements.
    pub work: SpatialGrid,
    /// Padded grid for propagation; its window should match `work`.
    pub propagation: SpatialGrid,
    /// Intervals of the phase time grid on `[0, t_max]`.
    pub phase_intervals: usize,
    /// Split-operator step.
    pub oracle_dt: f64,
    /// Finite-difference step for `d phi_k / dt`; `None` means `t_max / 2048`.
    pub h_t: Option<f64>,
    /// Points per axis of the `(k, t)` eigenvalue residual sweep.
    pub residual_sweep: usize,
    /// Domain doublings in the naive matrix-element diagnostic.
    pub naive_levels: usize,
}

impl Default for ScenarioGrids {
    fn default() -> Self {
        let window = Window::new(-40.0, 15.0);
        Self {
            work: SpatialGrid::with_window(-40.0, 15.0, 4096, window).expect("valid default grid"),
            propagation: SpatialGrid::with_window(-100.0, 50.0, 8192, window).expect("valid default grid"),
            phase_intervals: 40,
            oracle_dt: 1e-3,
            h_t: None,
            residual_sweep: 5,
            naive_levels: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub driver: DrivingFunction,
    pub consts: InvariantConstants,
    /// Bands for the phase, confinement and conservation checks; each band's
    /// centre is the eigenvalue it represents.
    pub bands: Vec<KBand>,
    pub t_max: f64,
    pub grids: ScenarioGrids,
    pub tolerances: Tolerances,
    pub spots: Vec<PhaseSpot>,
    /// Eigenvalues for the affine fit of the matrix-element density.
    pub slope_ks: Vec<f64>,
}

pub const BUILTIN: [&str; 3] = ["free", "uniform-field", "sinusoidal"];

impl Scenario {
    fn base(name: &str, driver: DrivingFunction) -> Self {
        Self {
            name: name.to_string(),
            driver,
            consts: InvariantConstants::default(),
            bands: [0.0, 1.0, 2.0]
                .iter()
                .map(|&k| KBand::centred(k, 0.05).expect("valid default band"))
                .collect(),
            t_max: 2.0,
            grids: ScenarioGrids::default(),
            tolerances: Tolerances::default(),
            spots: Vec::new(),
            slope_ks: vec![0.0, 1.0, 2.0, 4.0],
        }
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "free" => {
                let mut s = Self::base(name, DrivingFunction::Zero);
                s.spots = vec![
                    PhaseSpot {
                        k: 1.0,
                        t: 1.0,
                        expected: -7.0 / 12.0,
                    },
                    PhaseSpot {
                        k: 0.0,
                        t: 2.0,
                        expected: -2.0 / 3.0,
                    },
                ];
                Some(s)
            }
            "uniform-field" => {
                let mut s = Self::base(name, DrivingFunction::Constant { f0: 1.0 });
                // b^2/2 - d vanishes identically for f0 = c0 = m = 1, b0 = 0
                s.spots = vec![PhaseSpot {
                    k: 0.0,
                    t: 1.0,
                    expected: 0.0,
                }];
                Some(s)
            }
            "sinusoidal" => Some(Self::base(
                name,
                DrivingFunction::Sinusoidal {
                    amplitude: 1.0,
                    omega: 1.0,
                },
            )),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.driver.validate()?;
        self.consts.validate()?;
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(Error::InvalidQuadrature(format!("t_max must be positive, got {}", self.t_max)));
        }
        self.grids.work.validate()?;
        self.grids.propagation.validate()?;
        if self.grids.phase_intervals < 2 || self.grids.residual_sweep < 2 || self.grids.naive_levels < 2 {
            return Err(Error::InvalidGrid(
                "phase_intervals, residual_sweep and naive_levels must be at least 2".into(),
            ));
        }
        if self.bands.is_empty() {
            return Err(Error::InvalidBand("scenario needs at least one band".into()));
        }
        for b in &self.bands {
            b.validate()?;
        }
        if self.slope_ks.len() < 2 {
            return Err(Error::InvalidBand("slope fit needs at least two eigenvalues".into()));
        }
        Ok(())
    }

    fn h_t(&self) -> f64 {
        self.grids.h_t.unwrap_or_else(|| default_time_step(self.t_max))
    }

    fn phase_times(&self) -> Vec<f64> {
        uniform_times(self.t_max, self.grids.phase_intervals)
    }

    fn delta_k(&self) -> f64 {
        self.bands[0].delta_k
    }
}

/// Acceptance region of a check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    Below(f64),
    Above(f64),
    Within(f64, f64),
}

impl Bound {
    pub fn admits(&self, v: f64) -> bool {
        match *self {
            Bound::Below(hi) => v < hi,
            Bound::Above(lo) => v > lo,
            Bound::Within(lo, hi) => (lo..=hi).contains(&v),
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Below(hi) => write!(f, "< {hi:e}"),
            Bound::Above(lo) => write!(f, "> {lo}"),
            Bound::Within(lo, hi) => write!(f, "in [{lo}, {hi}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub measured: Option<f64>,
    pub bound: Bound,
    pub pass: bool,
    pub error: Option<String>,
    pub detail: Option<String>,
}

impl CheckRecord {
    fn measured(name: &str, value: f64, bound: Bound, detail: Option<String>) -> Self {
        Self {
            name: name.to_string(),
            measured: Some(value),
            bound,
            pass: value.is_finite() && bound.admits(value),
            error: None,
            detail,
        }
    }

    fn failed(name: &str, bound: Bound, err: &Error) -> Self {
        Self {
            name: name.to_string(),
            measured: None,
            bound,
            pass: false,
            error: Some(err.to_string()),
            detail: None,
        }
    }

    pub fn status(&self) -> &'static str {
        if self.pass {
            "PASS"
        } else {
            "FAIL"
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: String,
    pub checks: Vec<CheckRecord>,
    pub pass: bool,
    pub wall_time_s: f64,
}

impl Report {
    pub fn write_text(&self, out: &mut impl std::io::Write) -> std::io::Result<()> {
        writeln!(out, "scenario {}", self.scenario)?;
        for c in &self.checks {
            let measured = c.measured.map_or_else(|| "n/a".to_string(), |v| format!("{v:.6e}"));
            write!(out, "  {} {:<26} measured {:>14}  bound {}", c.status(), c.name, measured, c.bound)?;
            if let Some(e) = &c.error {
                write!(out, "  error: {e}")?;
            }
            if let Some(d) = &c.detail {
                write!(out, "  ({d})")?;
            }
            writeln!(out)?;
        }
        writeln!(
            out,
            "overall {} ({} of {} checks pass, {:.1} s)",
            if self.pass { "PASS" } else { "FAIL" },
            self.checks.iter().filter(|c| c.pass).count(),
            self.checks.len(),
            self.wall_time_s
        )
    }

    /// One JSON object per check.
    pub fn write_json_lines(&self, out: &mut impl std::io::Write) -> std::io::Result<()> {
        for c in &self.checks {
            let line = serde_json::json!({ "scenario": self.scenario, "check": c });
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

/// Names of the records `run_scenario` emits, in order.
pub const CHECK_NAMES: [&str; 14] = [
    "coefficient_consistency",
    "eigen_residual",
    "packet_norm_ratio",
    "packet_norm_trend",
    "packet_disjoint_overlap",
    "subspace_confinement",
    "projector_constancy",
    "phase_agreement",
    "phase_spot",
    "density_slope",
    "density_imag",
    "naive_divergence",
    "invariant_conservation",
    "invariant_hermiticity",
];

pub fn run_scenario(s: &Scenario) -> Report {
    run_scenario_with(s, Exec::default())
}

pub fn run_scenario_with(s: &Scenario, exec: Exec) -> Report {
    let start = Instant::now();
    let tol = s.tolerances;
    let coeffs = s.validate().and_then(|_| {
        build_coefficients(&s.driver, s.consts, &QuadratureConfig::new(s.t_max))
    });

    type Check = fn(&Scenario, &InvariantCoefficients, Exec) -> Vec<CheckRecord>;
    let checks: [Check; 10] = [
        check_coefficients,
        check_residuals,
        check_packets,
        check_confinement,
        check_projector,
        check_phase,
        check_spots,
        check_density,
        check_naive,
        check_conservation,
    ];
    let records: Vec<CheckRecord> = match &coeffs {
        Ok(c) => map_indexed(exec, checks.len(), |j| checks[j](s, c, exec))
            .into_iter()
            .flatten()
            .collect(),
        Err(e) => CHECK_NAMES
            .iter()
            .map(|n| CheckRecord::failed(n, bound_for(n, &tol), e))
            .collect(),
    };
    let pass = records.iter().all(|r| r.pass);
    Report {
        scenario: s.name.clone(),
        checks: records,
        pass,
        wall_time_s: start.elapsed().as_secs_f64(),
    }
}

fn bound_for(name: &str, tol: &Tolerances) -> Bound {
    match name {
        "coefficient_consistency" => Bound::Below(tol.coefficient_derivative),
        "eigen_residual" => Bound::Below(tol.eigen_residual),
        "packet_norm_ratio" => Bound::Within(tol.norm_ratio_lo, tol.norm_ratio_hi),
        "packet_norm_trend" => Bound::Below(1.0),
        "packet_disjoint_overlap" => Bound::Below(tol.disjoint_overlap),
        "subspace_confinement" => Bound::Above(tol.confinement),
        "projector_constancy" => Bound::Below(tol.projector_drift),
        "phase_agreement" => Bound::Below(tol.phase_agreement),
        "phase_spot" => Bound::Below(1.0),
        "density_slope" => Bound::Below(tol.density_slope_rel),
        "density_imag" => Bound::Below(tol.density_imag),
        "naive_divergence" => Bound::Above(1.0),
        "invariant_conservation" => Bound::Below(tol.invariant_drift),
        "invariant_hermiticity" => Bound::Below(1e-8),
        _ => Bound::Below(0.0),
    }
}

fn record(name: &str, s: &Scenario, r: Result<(f64, Option<String>)>) -> CheckRecord {
    let bound = bound_for(name, &s.tolerances);
    match r {
        Ok((v, detail)) => CheckRecord::measured(name, v, bound, detail),
        Err(e) => CheckRecord::failed(name, bound, &e),
    }
}

/// Fourth-order central differences of the built `b`, `d` against their
/// defining derivatives, relative to `max(1, |derivative|)`.
fn check_coefficients(s: &Scenario, c: &InvariantCoefficients, _: Exec) -> Vec<CheckRecord> {
    let r = (|| {
        let h = 1e-3 * s.t_max;
        let n = 40;
        let cd = |g: &dyn Fn(f64) -> Result<f64>, t: f64| -> Result<f64> {
            Ok((-g(t + 2.0 * h)? + 8.0 * g(t + h)? - 8.0 * g(t - h)? + g(t - 2.0 * h)?) / (12.0 * h))
        };
        let mut worst: f64 = 0.0;
        for j in 0..=n {
            let t = 2.0 * h + (s.t_max - 4.0 * h) * j as f64 / n as f64;
            let db = cd(&|t| c.b(t), t)?;
            let dd = cd(&|t| c.d(t), t)?;
            let (eb, ed) = (c.db_dt(t)?, c.dd_dt(t)?);
            worst = worst
                .max((db - eb).abs() / eb.abs().max(1.0))
                .max((dd - ed).abs() / ed.abs().max(1.0));
        }
        Ok((worst, None))
    })();
    vec![record("coefficient_consistency", s, r)]
}

fn check_residuals(s: &Scenario, c: &InvariantCoefficients, exec: Exec) -> Vec<CheckRecord> {
    let r = (|| {
        let n = s.grids.residual_sweep;
        let k_hi = s.bands.iter().map(|b| b.centre()).fold(f64::MIN, f64::max).max(1.0);
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let k = k_hi * i as f64 / (n - 1) as f64;
            for j in 0..n {
                let t = s.t_max * j as f64 / (n - 1) as f64;
                let phi = eigenstate_t_with(k, c, t, &s.grids.work, exec)?;
                worst = worst.max(eigenvalue_residual(c, &phi, k)?);
            }
        }
        Ok((worst, Some(format!("{n}x{n} sweep, k in [0, {k_hi}]"))))
    })();
    vec![record("eigen_residual", s, r)]
}

fn check_packets(s: &Scenario, c: &InvariantCoefficients, exec: Exec) -> Vec<CheckRecord> {
    let g = &s.grids.work;
    let dk = s.delta_k();
    let k = s.bands[0].centre();
    let ratio = |dk: f64| -> Result<f64> {
        Ok(build_packet_with(&KBand::centred(k, dk)?, c, 0.0, g, exec)?.norm_ratio())
    };
    let ratios = [ratio(4.0 * dk), ratio(2.0 * dk), ratio(dk)];
    let norm = match &ratios[2] {
        Ok(r) => Ok((*r, None)),
        Err(e) => Err(e.clone()),
    };
    let trend = (|| {
        let r = ratios.iter().cloned().collect::<Result<Vec<_>>>()?;
        let dev: Vec<f64> = r.iter().map(|v| (v - 1.0).abs()).collect();
        let worst = (dev[1] / dev[0]).max(dev[2] / dev[1]);
        Ok((
            worst,
            Some(format!(
                "norm^2/dk = {:.4} / {:.4} / {:.4} at dk = {} / {} / {}",
                r[0],
                r[1],
                r[2],
                4.0 * dk,
                2.0 * dk,
                dk
            )),
        ))
    })();
    let disjoint = (|| {
        let a = build_packet_with(&KBand::centred(k, dk)?, c, 0.0, g, exec)?;
        let b = build_packet_with(&KBand::centred(k + 1.0, dk)?, c, 0.0, g, exec)?;
        let ov = a.values.windowed_inner(&b.values)?;
        Ok((ov.norm(), Some("band separation 1".to_string())))
    })();
    vec![
        record("packet_norm_ratio", s, norm),
        record("packet_norm_trend", s, trend),
        record("packet_disjoint_overlap", s, disjoint),
    ]
}

fn exact_config(s: &Scenario) -> PropagatorConfig {
    let dt = s.t_max / s.grids.phase_intervals as f64;
    PropagatorConfig::new(dt, s.grids.phase_intervals, Method::ExactLinear)
}

fn initial_packet(s: &Scenario, band: &KBand, c: &InvariantCoefficients, exec: Exec) -> Result<GridWavefunction> {
    let packet = build_packet_with(band, c, 0.0, &s.grids.propagation, exec)?;
    Ok(packet.normalized_state())
}

fn check_confinement(s: &Scenario, c: &InvariantCoefficients, exec: Exec) -> Vec<CheckRecord> {
    let r = (|| {
        let mut worst = f64::INFINITY;
        for band in &s.bands {
            let psi0 = initial_packet(s, band, c, exec)?;
            evolve(&psi0, &s.driver, &s.consts, &exact_config(s), |psi| {
                worst = worst.min(projection_fraction(band, c, psi, exec)?);
                Ok(())
            })?;
        }
        Ok((worst, Some(format!("minimum over t in [0, {}] and all bands", s.t_max))))
    })();
    vec![record("subspace_confinement", s, r)]
}

/// `<psi(t)| dP(t) |psi(t)>` for a Gaussian launched towards the band.
fn check_projector(s: &Scenario, c: &InvariantCoefficients, exec: Exec) -> Vec<CheckRecord> {
    let r = (|| {
        let band = s.bands[s.bands.len() / 2];
        let k = band.centre();
        let x0 = k / s.consts.c0 - 4.0;
        // classical momentum of the band at x0: p^2 + c0 x0 = k
        let p0 = (k - s.consts.c0 * x0).max(0.0).sqrt();
        let psi0 = GridWavefunction::gaussian(s.grids.propagation, x0, 1.5, p0, s.consts.hbar);
        let mut values = Vec::new();
        evolve(&psi0, &s.driver, &s.consts, &exact_config(s), |psi| {
            values.push(projection_fraction(&band, c, psi, exec)? * psi.windowed_norm_sq());
            Ok(())
        })?;
        let v0 = values[0];
        if v0 == 0.0 {
            return Err(Error::DegenerateBand("Gaussian has no weight in the band".into()));
        }
        let drift = values.iter().map(|v| (v - v0).abs() / v0.abs()).fold(0.0, f64::max);
        Ok((drift, Some(format!("<dP> at t=0 is {v0:.4e}"))))
    })();
    vec![record("projector_constancy", s, r)]
}

fn check_phase(s: &Scenario, c: &InvariantCoefficients, exec: Exec) -> Vec<CheckRecord> {
    let r = (|| {
        let ts = s.phase_times();
        let mut worst: f64 = 0.0;
        let mut worst_at = 0.0;
        for band in &s.bands {
            let k = band.centre();
            let overlap = phase_overlap_with(k, band, c, &ts, &s.grids.work, s.h_t(), exec)?;
            let closed = phase_closed_form(k, c, &ts)?;
            let oracle = phase_from_oracle(k, band, c, &s.driver, &ts, &s.grids.propagation, &exact_config(s))?;
            let dev = overlap
                .max_deviation(&closed)?
                .max(overlap.max_deviation(&oracle)?)
                .max(closed.max_deviation(&oracle)?);
            if dev > worst {
                worst = dev;
                worst_at = k;
            }
        }
        Ok((worst, Some(format!("largest at k = {worst_at}"))))
    })();
    vec![record("phase_agreement", s, r)]
}

/// Worst `|theta - expected| / tolerance` over the scenario's spot values.
fn check_spots(s: &Scenario, c: &InvariantCoefficients, exec: Exec) -> Vec<CheckRecord> {
    if s.spots.is_empty() {
        return vec![CheckRecord {
            detail: Some("no closed-form spot values for this driver".into()),
            ..CheckRecord::measured("phase_spot", 0.0, Bound::Below(1.0), None)
        }];
    }
    let r = (|| {
        let mut worst: f64 = 0.0;
        let mut notes = Vec::new();
        for spot in &s.spots {
            let band = KBand::centred(spot.k, s.delta_k())?;
            let ts = uniform_times(spot.t, 10);
            let theta = phase_overlap_with(spot.k, &band, c, &ts, &s.grids.work, s.h_t(), exec)?.final_theta();
            let tol = if spot.expected != 0.0 {
                s.tolerances.phase_spot_rel * spot.expected.abs()
            } else {
                s.tolerances.phase_spot_abs
            };
            worst = worst.max((theta - spot.expected).abs() / tol);
            notes.push(format!("k={} t={}: {theta:.6} vs {:.6}", spot.k, spot.t, spot.expected));
        }
        Ok((worst, Some(notes.join("; "))))
    })();
    vec![record("phase_spot", s, r)]
}

fn check_density(s: &Scenario, c: &InvariantCoefficients, exec: Exec) -> Vec<CheckRecord> {
    let t = 0.5 * s.t_max;
    let dens = crate::par::try_map_indexed(exec, s.slope_ks.len(), |j| {
        let k = s.slope_ks[j];
        matrix_element_density(k, &KBand::centred(k, s.delta_k())?, c, t, &s.grids.work, s.h_t())
    });
    match dens {
        Ok(d) => {
            let ys: Vec<f64> = d.iter().map(|d| d.value).collect();
            let (slope, _, _) = affine_fit(&s.slope_ks, &ys);
            let expected = -1.0 / (2.0 * s.consts.mass * s.consts.hbar);
            let imag = d.iter().map(|d| d.imag.abs()).fold(0.0, f64::max);
            vec![
                record(
                    "density_slope",
                    s,
                    Ok((
                        ((slope - expected) / expected).abs(),
                        Some(format!("slope {slope:.6} vs {expected:.6} at t = {t}")),
                    )),
                ),
                record("density_imag", s, Ok((imag, None))),
            ]
        }
        Err(e) => vec![
            record("density_slope", s, Err(e.clone())),
            record("density_imag", s, Err(e)),
        ],
    }
}

/// Same-`k` element on windows doubled towards the oscillatory side; its
/// magnitude must grow at every doubling. Uses the band farthest from zero so
/// that `k + b^2/2 - d` does not vanish.
fn check_naive(s: &Scenario, c: &InvariantCoefficients, _: Exec) -> Vec<CheckRecord> {
    let r = (|| {
        let g = &s.grids.work;
        let len = g.x_max - g.x_min;
        let k = outer_band(s).centre();
        let t = 0.5 * s.t_max;
        let mut values = Vec::new();
        for j in 0..s.grids.naive_levels {
            let scale = 1usize << j;
            let lo = g.x_max - len * scale as f64;
            let grid = SpatialGrid::new(lo, g.x_max, g.n * scale)?;
            values.push(naive_density(k, c, t, &grid, s.h_t())?.value.abs());
        }
        let growth = values.windows(2).map(|w| w[1] / w[0]).fold(f64::INFINITY, f64::min);
        let listed: Vec<String> = values.iter().map(|v| format!("{v:.4}")).collect();
        Ok((growth, Some(format!("|element| = {}", listed.join(" -> ")))))
    })();
    vec![record("naive_divergence", s, r)]
}

fn outer_band(s: &Scenario) -> KBand {
    *s.bands
        .iter()
        .max_by(|a, b| a.centre().abs().total_cmp(&b.centre().abs()))
        .expect("validated non-empty")
}

fn check_conservation(s: &Scenario, c: &InvariantCoefficients, exec: Exec) -> Vec<CheckRecord> {
    let mut herm: f64 = 0.0;
    let r: Result<(f64, Option<String>)> = (|| {
        let band = outer_band(s);
        let psi0 = initial_packet(s, &band, c, exec)?;
        let i0 = invariant_expectation(c, &psi0)?.value;
        let n_steps = (s.t_max / s.grids.oracle_dt).round() as usize;
        let stride = (n_steps / s.grids.phase_intervals).max(1);
        let mut worst: f64 = 0.0;
        for method in [Method::SplitOperator, Method::ExactLinear] {
            let cfg = PropagatorConfig::new(s.grids.oracle_dt, n_steps, method).recording(stride);
            evolve(&psi0, &s.driver, &s.consts, &cfg, |psi| {
                let e = invariant_expectation(c, psi)?;
                herm = herm.max(e.imag.abs());
                worst = worst.max((e.value - i0).abs() / i0.abs());
                Ok(())
            })?;
        }
        Ok((worst, Some(format!("<I>(0) = {i0:.6}, both propagators"))))
    })();
    let h = match &r {
        Ok(_) => Ok((herm, None)),
        Err(e) => Err(e.clone()),
    };
    vec![
        record("invariant_conservation", s, r),
        record("invariant_hermiticity", s, h),
    ]
}

//! The linear invariant `I(t) = p^2 + b(t) p + c0 x + d(t)` and its action on
//! sampled states.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::driving::{DrivingFunction, IteratedIntegrals};
use crate::error::{Error, Result};
use crate::grid::{fd_derivatives, spectral_derivatives, GridWavefunction, StencilOrder};
use crate::quad::QuadratureConfig;

/// Integration constants of the invariant plus the physical constants.
///
/// `a0 = 1` and `d0 = 0` are fixed. Eigenstate construction additionally
/// requires `c0 > 0`, checked by [`InvariantConstants::require_positive_c0`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InvariantConstants {
    pub b0: f64,
    pub c0: f64,
    pub mass: f64,
    pub hbar: f64,
}

impl Default for InvariantConstants {
    fn default() -> Self {
        Self {
            b0: 0.0,
            c0: 1.0,
            mass: 1.0,
            hbar: 1.0,
        }
    }
}

impl InvariantConstants {
    pub const A0: f64 = 1.0;
    pub const D0: f64 = 0.0;

    pub fn new(b0: f64, c0: f64, mass: f64, hbar: f64) -> Result<Self> {
        let c = Self { b0, c0, mass, hbar };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b0.is_finite() && self.c0.is_finite()) {
            return Err(Error::InvalidConstants("b0 and c0 must be finite".into()));
        }
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(Error::InvalidConstants(format!("mass must be > 0, got {}", self.mass)));
        }
        if !(self.hbar.is_finite() && self.hbar > 0.0) {
            return Err(Error::InvalidConstants(format!("hbar must be > 0, got {}", self.hbar)));
        }
        Ok(())
    }

    /// Airy eigenstates need a real cube root of `c0 / hbar^2`.
    pub fn require_positive_c0(&self) -> Result<()> {
        if self.c0 > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidConstants(format!(
                "c0 must be > 0 for Airy eigenstates, got {}",
                self.c0
            )))
        }
    }
}

/// `b(t)` and `d(t)` built from the driving integrals.
#[derive(Debug, Clone)]
pub struct InvariantCoefficients {
    pub consts: InvariantConstants,
    pub driver: DrivingFunction,
    integrals: Arc<IteratedIntegrals>,
}

pub fn build_coefficients(
    driver: &DrivingFunction,
    consts: InvariantConstants,
    quad: &QuadratureConfig,
) -> Result<InvariantCoefficients> {
    consts.validate()?;
    let integrals = driver.integrals(quad, consts.mass)?;
    Ok(InvariantCoefficients {
        consts,
        driver: driver.clone(),
        integrals: Arc::new(integrals),
    })
}

impl InvariantCoefficients {
    pub fn integrals(&self) -> &IteratedIntegrals {
        &self.integrals
    }

    pub fn t_max(&self) -> f64 {
        self.integrals.t_max()
    }

    /// `b = 2 a0 F1 - c0 t/m + b0`
    pub fn b(&self, t: f64) -> Result<f64> {
        let c = &self.consts;
        Ok(2.0 * InvariantConstants::A0 * self.integrals.f1(t)? - c.c0 * self.integrals.f1m(t)? + c.b0)
    }

    /// `d = 2 a0 F2ff - c0 F2fm + b0 F1 + d0`
    pub fn d(&self, t: f64) -> Result<f64> {
        let c = &self.consts;
        let ii = &self.integrals;
        Ok(2.0 * InvariantConstants::A0 * ii.f2ff(t)? - c.c0 * ii.f2fm(t)?
            + c.b0 * ii.f1(t)?
            + InvariantConstants::D0)
    }

    pub fn force(&self, t: f64) -> Result<f64> {
        self.driver.eval(t)
    }

    /// `db/dt = 2 a0 f - c0/m`, the differential form of the invariance condition.
    pub fn db_dt(&self, t: f64) -> Result<f64> {
        Ok(2.0 * InvariantConstants::A0 * self.force(t)? - self.consts.c0 / self.consts.mass)
    }

    /// `dd/dt = b f`
    pub fn dd_dt(&self, t: f64) -> Result<f64> {
        Ok(self.b(t)? * self.force(t)?)
    }

    fn combine(
        &self,
        psi: &GridWavefunction,
        d1: &[Complex64],
        d2: &[Complex64],
    ) -> Result<GridWavefunction> {
        let t = psi.t;
        let (b, d) = (self.b(t)?, self.d(t)?);
        let hbar = self.consts.hbar;
        let grid = psi.grid;
        let values = psi
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                -hbar * hbar * d2[i] - Complex64::new(0.0, hbar * b) * d1[i]
                    + v * (self.consts.c0 * grid.x(i) + d)
            })
            .collect();
        Ok(GridWavefunction { grid, values, t })
    }
}

/// `I(t) psi` with spectral (periodic FFT) derivatives; `t` is taken from the
/// state's time tag.
pub fn apply_invariant(coeffs: &InvariantCoefficients, psi: &GridWavefunction) -> Result<GridWavefunction> {
    psi.check_finite()?;
    let (d1, d2) = spectral_derivatives(&psi.grid, &psi.values);
    coeffs.combine(psi, &d1, &d2)
}

/// Finite-difference variant of [`apply_invariant`] for boundary-sensitive checks.
pub fn apply_invariant_fd(
    coeffs: &InvariantCoefficients,
    psi: &GridWavefunction,
    order: StencilOrder,
) -> Result<GridWavefunction> {
    psi.check_finite()?;
    let (d1, d2) = fd_derivatives(&psi.grid, &psi.values, order);
    coeffs.combine(psi, &d1, &d2)
}

/// `||(I - k) w psi|| / ||w psi||` over the window interior, with `w` the grid
/// window; this is how eigenvalue equations for non-normalizable states are
/// checked.
pub fn eigenvalue_residual(coeffs: &InvariantCoefficients, psi: &GridWavefunction, k: f64) -> Result<f64> {
    let wpsi = psi.windowed();
    let ipsi = apply_invariant(coeffs, &wpsi)?;
    let g = &psi.grid;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..g.n {
        if g.window.is_interior(g.x(i)) {
            num += (ipsi.values[i] - wpsi.values[i] * k).norm_sqr();
            den += wpsi.values[i].norm_sqr();
        }
    }
    if den == 0.0 {
        return Err(Error::InvalidGrid("window interior holds no samples".into()));
    }
    Ok((num / den).sqrt())
}

/// `<psi, I psi>` split into the reported real value and the imaginary
/// residue, which measures the discrete hermiticity defect.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Expectation {
    pub value: f64,
    pub imag: f64,
}

pub fn invariant_expectation(coeffs: &InvariantCoefficients, psi: &GridWavefunction) -> Result<Expectation> {
    let norm = psi.norm();
    if (norm - 1.0).abs() > 1e-6 {
        return Err(Error::NotNormalized { norm });
    }
    let ipsi = apply_invariant(coeffs, psi)?;
    let z = psi.inner(&ipsi)?;
    Ok(Expectation {
        value: z.re,
        imag: z.im,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpatialGrid;

    fn coeffs(driver: DrivingFunction, b0: f64, c0: f64) -> InvariantCoefficients {
        let c = InvariantConstants::new(b0, c0, 1.0, 1.0).unwrap();
        build_coefficients(&driver, c, &QuadratureConfig::new(2.0)).unwrap()
    }

    #[test]
    fn constants_validation() {
        assert!(InvariantConstants::new(0.0, 1.0, 0.0, 1.0).is_err());
        assert!(InvariantConstants::new(0.0, 1.0, 1.0, -1.0).is_err());
        let neg = InvariantConstants::new(0.0, -1.0, 1.0, 1.0).unwrap();
        assert!(matches!(neg.require_positive_c0(), Err(Error::InvalidConstants(_))));
    }

    #[test]
    fn free_driver_coefficients() {
        let c = coeffs(DrivingFunction::Zero, 0.0, 1.0);
        for t in [0.0, 0.5, 1.3, 2.0] {
            assert!((c.b(t).unwrap() + t).abs() < 1e-14);
            assert_eq!(c.d(t).unwrap(), 0.0);
        }
    }

    #[test]
    fn constant_driver_coefficients() {
        let (f0, c0, b0) = (0.7, 1.3, 0.4);
        let c = coeffs(DrivingFunction::Constant { f0 }, b0, c0);
        for t in [0.25, 1.0, 1.75] {
            assert!((c.b(t).unwrap() - (2.0 * f0 * t - c0 * t + b0)).abs() < 1e-12);
        }
        let c = coeffs(DrivingFunction::Constant { f0 }, 0.0, c0);
        for t in [0.25, 1.0, 1.75] {
            let exact = f0 * f0 * t * t - c0 * f0 * t * t / 2.0;
            assert!((c.d(t).unwrap() - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn initial_values() {
        let c = coeffs(DrivingFunction::Sinusoidal { amplitude: 1.0, omega: 2.0 }, 0.8, 1.0);
        assert_eq!(c.b(0.0).unwrap(), 0.8);
        assert_eq!(c.d(0.0).unwrap(), 0.0);
    }

    #[test]
    fn differential_form_holds() {
        for driver in [
            DrivingFunction::Constant { f0: 1.0 },
            DrivingFunction::Linear { slope: 0.5 },
            DrivingFunction::Sinusoidal { amplitude: 1.0, omega: 1.0 },
        ] {
            let c = coeffs(driver, 2.0, 1.0);
            let h = 1e-4;
            for t in (1..20).map(|i| i as f64 * 0.1) {
                let db = (c.b(t + h).unwrap() - c.b(t - h).unwrap()) / (2.0 * h);
                let dd = (c.d(t + h).unwrap() - c.d(t - h).unwrap()) / (2.0 * h);
                assert!((db - c.db_dt(t).unwrap()).abs() < 1e-6);
                assert!((dd - c.dd_dt(t).unwrap()).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn zero_state_maps_to_zero() {
        let c = coeffs(DrivingFunction::Zero, 0.0, 1.0);
        let g = SpatialGrid::new(-10.0, 10.0, 64).unwrap();
        let out = apply_invariant(&c, &GridWavefunction::zeros(g, 0.3)).unwrap();
        assert!(out.values.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn non_finite_input_rejected() {
        let c = coeffs(DrivingFunction::Zero, 0.0, 1.0);
        let g = SpatialGrid::new(-10.0, 10.0, 64).unwrap();
        let mut psi = GridWavefunction::zeros(g, 0.0);
        psi.values[3] = Complex64::new(f64::NAN, 0.0);
        assert_eq!(apply_invariant(&c, &psi), Err(Error::NonFiniteInput));
    }

    #[test]
    fn gaussian_matches_fd_oracle() {
        // I(0) psi = -psi'' + x psi for b0 = d0 = 0, c0 = 1
        let c = coeffs(DrivingFunction::Zero, 0.0, 1.0);
        let g = SpatialGrid::new(-15.0, 15.0, 1024).unwrap();
        let psi = GridWavefunction::gaussian(g, 0.5, 1.0, 0.0, 1.0);
        let spectral = apply_invariant(&c, &psi).unwrap();
        let h = g.dx();
        for i in 2..g.n - 2 {
            let x = g.x(i);
            let lap = (psi.values[i + 1] - 2.0 * psi.values[i] + psi.values[i - 1]) / (h * h);
            let oracle = -lap + psi.values[i] * x;
            assert!((spectral.values[i] - oracle).norm() < 5e-4);
        }
        let fd4 = apply_invariant_fd(&c, &psi, StencilOrder::Fourth).unwrap();
        assert!(spectral.distance(&fd4).unwrap() < 1e-6);
    }

    #[test]
    fn expectation_requires_normalization() {
        let c = coeffs(DrivingFunction::Zero, 0.0, 1.0);
        let g = SpatialGrid::new(-15.0, 15.0, 512).unwrap();
        let mut psi = GridWavefunction::gaussian(g, 0.0, 1.0, 0.0, 1.0);
        psi.scale(Complex64::new(1.1, 0.0));
        assert!(matches!(invariant_expectation(&c, &psi), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn gaussian_expectation_closed_form() {
        // <p^2> = 1/(4 s^2) + p0^2, <b p> = b p0, <c0 x> = c0 x0
        let c = coeffs(DrivingFunction::Constant { f0: 0.5 }, 0.3, 1.0);
        let g = SpatialGrid::new(-20.0, 20.0, 1024).unwrap();
        let (x0, s, p0) = (1.0, 0.8, 0.6);
        let mut psi = GridWavefunction::gaussian(g, x0, s, p0, 1.0);
        psi.t = 1.2;
        let e = invariant_expectation(&c, &psi).unwrap();
        let b = c.b(1.2).unwrap();
        let d = c.d(1.2).unwrap();
        let exact = 1.0 / (4.0 * s * s) + p0 * p0 + b * p0 + x0 + d;
        assert!((e.value - exact).abs() < 1e-9, "{} vs {exact}", e.value);
        assert!(e.imag.abs() < 1e-8);
    }
}

//! Time profiles `f(t)` of the linear force and their accumulated integrals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{cumulative_simpson, cumulative_trapezoid, hermite, QuadratureConfig};

/// Samples of a user-supplied force profile, linearly interpolated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tabulated {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl Tabulated {
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidDriver(
                "tabulated driver needs at least two samples".into(),
            ));
        }
        for (t, f) in &samples {
            if !t.is_finite() || !f.is_finite() {
                return Err(Error::InvalidDriver("non-finite sample".into()));
            }
        }
        if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidDriver(
                "sample times must be strictly increasing".into(),
            ));
        }
        let (times, values) = samples.into_iter().unzip();
        Ok(Self { times, values })
    }

    /// Parses two-column `t,f` CSV. A non-numeric first line is treated as a
    /// header; blank lines and `#` comments are skipped.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut samples = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 2 {
                return Err(Error::Parse(format!(
                    "line {}: expected 2 columns, found {}",
                    lineno + 1,
                    cols.len()
                )));
            }
            match (cols[0].parse::<f64>(), cols[1].parse::<f64>()) {
                (Ok(t), Ok(f)) => samples.push((t, f)),
                _ if samples.is_empty() => continue, // header
                _ => {
                    return Err(Error::Parse(format!(
                        "line {}: cannot parse '{line}'",
                        lineno + 1
                    )))
                }
            }
        }
        Self::new(samples)
    }

    pub fn span(&self) -> (f64, f64) {
        (self.times[0], *self.times.last().unwrap())
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        let (lo, hi) = self.span();
        if !(lo..=hi).contains(&t) {
            return Err(Error::OutOfRange { t, lo, hi });
        }
        let i = self.times.partition_point(|&s| s <= t).clamp(1, self.times.len() - 1);
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let (f0, f1) = (self.values[i - 1], self.values[i]);
        Ok(f0 + (f1 - f0) * (t - t0) / (t1 - t0))
    }
}

/// The force profile `f(t)` in `H = p^2/2m + f(t) x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DrivingFunction {
    Zero,
    Constant { f0: f64 },
    Linear { slope: f64 },
    Sinusoidal { amplitude: f64, omega: f64 },
    Tabulated(Tabulated),
}

impl DrivingFunction {
    pub fn eval(&self, t: f64) -> Result<f64> {
        Ok(match self {
            DrivingFunction::Zero => 0.0,
            DrivingFunction::Constant { f0 } => *f0,
            DrivingFunction::Linear { slope } => slope * t,
            DrivingFunction::Sinusoidal { amplitude, omega } => amplitude * (omega * t).sin(),
            DrivingFunction::Tabulated(tab) => tab.eval(t)?,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let finite = match self {
            DrivingFunction::Zero | DrivingFunction::Tabulated(_) => true,
            DrivingFunction::Constant { f0 } => f0.is_finite(),
            DrivingFunction::Linear { slope } => slope.is_finite(),
            DrivingFunction::Sinusoidal { amplitude, omega } => {
                amplitude.is_finite() && omega.is_finite()
            }
        };
        if finite {
            Ok(())
        } else {
            Err(Error::InvalidDriver("parameters must be finite".into()))
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            DrivingFunction::Zero => "zero",
            DrivingFunction::Constant { .. } => "constant",
            DrivingFunction::Linear { .. } => "linear",
            DrivingFunction::Sinusoidal { .. } => "sinusoidal",
            DrivingFunction::Tabulated(_) => "tabulated",
        }
    }

    /// Accumulates the nested integrals on the quadrature mesh.
    ///
    /// Analytic kinds use cumulative Simpson; tabulated data uses the
    /// trapezoid rule on the interpolated samples.
    pub fn integrals(&self, quad: &QuadratureConfig, mass: f64) -> Result<IteratedIntegrals> {
        quad.validate()?;
        self.validate()?;
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::InvalidConstants(format!("mass must be > 0, got {mass}")));
        }
        let mesh = quad.mesh();
        let h = if mesh.len() > 1 { mesh[1] - mesh[0] } else { 0.0 };
        let f = mesh.iter().map(|&t| self.eval(t)).collect::<Result<Vec<_>>>()?;

        let accumulate: fn(&[f64], f64) -> Vec<f64> = match self {
            DrivingFunction::Tabulated(_) => cumulative_trapezoid,
            _ => cumulative_simpson,
        };
        let f1 = accumulate(&f, h);
        let f_f1: Vec<f64> = f.iter().zip(&f1).map(|(a, b)| a * b).collect();
        let f2ff = accumulate(&f_f1, h);
        let f_t: Vec<f64> = f.iter().zip(&mesh).map(|(a, t)| a * t).collect();
        let f_moment = accumulate(&f_t, h);
        let kick_area = accumulate(&f1, h);
        let f1_sq: Vec<f64> = f1.iter().map(|v| v * v).collect();
        let kick_sq = accumulate(&f1_sq, h);

        Ok(IteratedIntegrals {
            mass,
            h,
            t_max: quad.t_max,
            f,
            f1,
            f2ff,
            f_moment,
            kick_area,
            kick_sq,
        })
    }
}

/// Precomputed running integrals of the driving function.
///
/// * `F1(t)   = int_0^t f`
/// * `F1m(t)  = t/m`
/// * `F2ff(t) = int_0^t f(s) F1(s) ds`
/// * `F2fm(t) = int_0^t f(s) s/m ds`
///
/// plus the kick integrals `int_0^t F1` and `int_0^t F1^2` used by the
/// characteristics propagator. Queries between mesh nodes use cubic Hermite
/// interpolation with the exact integrand as slope.
#[derive(Debug, Clone)]
pub struct IteratedIntegrals {
    mass: f64,
    h: f64,
    t_max: f64,
    f: Vec<f64>,
    f1: Vec<f64>,
    f2ff: Vec<f64>,
    f_moment: Vec<f64>,
    kick_area: Vec<f64>,
    kick_sq: Vec<f64>,
}

impl IteratedIntegrals {
    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    fn locate(&self, t: f64) -> Result<(usize, f64)> {
        let slack = 1e-12 * self.t_max.max(1.0);
        if !(t >= -slack && t <= self.t_max + slack) {
            return Err(Error::OutOfRange {
                t,
                lo: 0.0,
                hi: self.t_max,
            });
        }
        if self.h == 0.0 {
            return Ok((0, 0.0));
        }
        let t = t.clamp(0.0, self.t_max);
        let last = self.f.len() - 2;
        let i = ((t / self.h).floor() as usize).min(last);
        Ok((i, t - i as f64 * self.h))
    }

    fn interp(&self, t: f64, y: &[f64], slope: impl Fn(usize) -> f64) -> Result<f64> {
        let (i, s) = self.locate(t)?;
        if self.h == 0.0 {
            return Ok(y[0]);
        }
        Ok(hermite(s, self.h, y[i], y[i + 1], slope(i), slope(i + 1)))
    }

    fn node_t(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    /// Driving value reconstructed from the mesh (linear interpolation).
    pub fn force(&self, t: f64) -> Result<f64> {
        let (i, s) = self.locate(t)?;
        if self.h == 0.0 {
            return Ok(self.f[0]);
        }
        Ok(self.f[i] + (self.f[i + 1] - self.f[i]) * s / self.h)
    }

    pub fn f1(&self, t: f64) -> Result<f64> {
        self.interp(t, &self.f1, |i| self.f[i])
    }

    pub fn f1m(&self, t: f64) -> Result<f64> {
        self.locate(t)?;
        Ok(t / self.mass)
    }

    pub fn f2ff(&self, t: f64) -> Result<f64> {
        self.interp(t, &self.f2ff, |i| self.f[i] * self.f1[i])
    }

    pub fn f2fm(&self, t: f64) -> Result<f64> {
        Ok(self.interp(t, &self.f_moment, |i| self.f[i] * self.node_t(i))? / self.mass)
    }

    /// `int_0^t F1(s) ds`
    pub fn kick_area(&self, t: f64) -> Result<f64> {
        self.interp(t, &self.kick_area, |i| self.f1[i])
    }

    /// `int_0^t F1(s)^2 ds`
    pub fn kick_sq(&self, t: f64) -> Result<f64> {
        self.interp(t, &self.kick_sq, |i| self.f1[i] * self.f1[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sweep() -> impl Iterator<Item = f64> {
        (0..=40).map(|i| i as f64 * 0.05)
    }

    #[test]
    fn eval_examples() {
        assert_eq!(DrivingFunction::Zero.eval(3.7).unwrap(), 0.0);
        assert_eq!(DrivingFunction::Constant { f0: 2.0 }.eval(5.0).unwrap(), 2.0);
        let s = DrivingFunction::Sinusoidal {
            amplitude: 1.0,
            omega: 1.0,
        };
        assert!((s.eval(PI / 2.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tabulated_interpolates_and_rejects_out_of_range() {
        let tab = Tabulated::new(vec![(0.0, 0.0), (1.0, 2.0), (2.0, 0.0)]).unwrap();
        let d = DrivingFunction::Tabulated(tab);
        assert!((d.eval(0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!((d.eval(1.5).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(d.eval(2.5), Err(Error::OutOfRange { .. })));
        assert!(matches!(d.eval(-0.1), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn tabulated_requires_increasing_times() {
        assert!(Tabulated::new(vec![(0.0, 1.0), (0.0, 2.0)]).is_err());
        assert!(Tabulated::new(vec![(1.0, 1.0), (0.5, 2.0)]).is_err());
        assert!(Tabulated::new(vec![(0.0, 1.0)]).is_err());
    }

    #[test]
    fn csv_header_is_optional() {
        let a = Tabulated::from_csv("t,f\n0,1\n1,3\n").unwrap();
        let b = Tabulated::from_csv("# comment\n0, 1\n1, 3\n").unwrap();
        assert_eq!(a, b);
        assert!(Tabulated::from_csv("0,1\n1,x\n").is_err());
        assert!(Tabulated::from_csv("0,1,2\n").is_err());
    }

    #[test]
    fn tabulated_integrals_out_of_span() {
        let tab = Tabulated::new(vec![(0.0, 1.0), (1.0, 1.0)]).unwrap();
        let d = DrivingFunction::Tabulated(tab);
        assert!(d.integrals(&QuadratureConfig::new(2.0), 1.0).is_err());
        let ii = d.integrals(&QuadratureConfig::new(1.0), 1.0).unwrap();
        assert!((ii.f1(0.7).unwrap() - 0.7).abs() < 1e-12);
        assert!(ii.f1(1.5).is_err());
    }

    #[test]
    fn zero_driver_integrals_vanish() {
        let ii = DrivingFunction::Zero
            .integrals(&QuadratureConfig::new(2.0), 1.0)
            .unwrap();
        for t in sweep() {
            assert_eq!(ii.f1(t).unwrap(), 0.0);
            assert_eq!(ii.f2ff(t).unwrap(), 0.0);
            assert_eq!(ii.f2fm(t).unwrap(), 0.0);
        }
    }

    #[test]
    fn all_integrals_vanish_at_origin() {
        let d = DrivingFunction::Sinusoidal {
            amplitude: 1.3,
            omega: 2.0,
        };
        let ii = d.integrals(&QuadratureConfig::new(2.0), 0.7).unwrap();
        assert_eq!(ii.f1(0.0).unwrap(), 0.0);
        assert_eq!(ii.f1m(0.0).unwrap(), 0.0);
        assert_eq!(ii.f2ff(0.0).unwrap(), 0.0);
        assert_eq!(ii.f2fm(0.0).unwrap(), 0.0);
    }

    #[test]
    fn f2ff_derivative_matches_integrand() {
        for d in [
            DrivingFunction::Constant { f0: 1.5 },
            DrivingFunction::Linear { slope: -0.8 },
            DrivingFunction::Sinusoidal {
                amplitude: 1.0,
                omega: 1.0,
            },
        ] {
            let ii = d.integrals(&QuadratureConfig::new(2.0), 1.0).unwrap();
            let h = 1e-4;
            for t in sweep().filter(|&t| t > 0.0 && t < 2.0) {
                let cd = (ii.f2ff(t + h).unwrap() - ii.f2ff(t - h).unwrap()) / (2.0 * h);
                let exact = d.eval(t).unwrap() * ii.f1(t).unwrap();
                assert!((cd - exact).abs() < 1e-6, "{} t={t}", d.label());
            }
        }
    }

    #[test]
    fn queries_beyond_mesh_fail() {
        let ii = DrivingFunction::Zero
            .integrals(&QuadratureConfig::new(1.0), 1.0)
            .unwrap();
        assert!(ii.f1(1.01).is_err());
        assert!(ii.f2ff(-0.5).is_err());
    }

    #[test]
    fn degenerate_zero_length_mesh() {
        let ii = DrivingFunction::Constant { f0: 1.0 }
            .integrals(&QuadratureConfig::new(0.0), 1.0)
            .unwrap();
        assert_eq!(ii.f1(0.0).unwrap(), 0.0);
        assert!(ii.f1(0.1).is_err());
    }
}

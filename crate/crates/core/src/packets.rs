//! Weyl eigendifferentials `|dphi(k;t)> = int_k^{k+dk} |phi(k';t)> dk'` and
//! the differential projectors built from them.
//!
//! Inner products are taken with the grid window applied to both factors.

use num_complex::Complex64;

use crate::airy::{eigenstate_t_with, AiryEvaluator};
use crate::error::{Error, Result};
use crate::grid::{GridWavefunction, SpatialGrid};
use crate::invariant::InvariantCoefficients;
use crate::par::{fill_indexed, try_map_indexed, Exec};
use crate::quad::simpson_weights;

/// Eigenvalue band `[k_lo, k_lo + delta_k]` sampled at `n_sub + 1` Simpson
/// nodes (`n_sub` intervals).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct KBand {
    pub k_lo: f64,
    pub delta_k: f64,
    pub n_sub: usize,
}

impl KBand {
    pub const DEFAULT_N_SUB: usize = 32;

    pub fn new(k_lo: f64, delta_k: f64) -> Result<Self> {
        Self::with_nodes(k_lo, delta_k, Self::DEFAULT_N_SUB)
    }

    pub fn with_nodes(k_lo: f64, delta_k: f64, n_sub: usize) -> Result<Self> {
        let band = Self { k_lo, delta_k, n_sub };
        band.validate()?;
        Ok(band)
    }

    /// Band of width `delta_k` centred on `k`.
    pub fn centred(k: f64, delta_k: f64) -> Result<Self> {
        Self::new(k - 0.5 * delta_k, delta_k)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.k_lo.is_finite() || !self.delta_k.is_finite() {
            return Err(Error::InvalidBand("band edges must be finite".into()));
        }
        if self.delta_k <= 0.0 {
            return Err(Error::InvalidBand(format!(
                "delta_k must be positive, got {}",
                self.delta_k
            )));
        }
        if self.n_sub < 8 || !self.n_sub.is_multiple_of(2) {
            return Err(Error::InvalidBand(format!(
                "n_sub must be even and at least 8, got {}",
                self.n_sub
            )));
        }
        Ok(())
    }

    pub fn k_hi(&self) -> f64 {
        self.k_lo + self.delta_k
    }

    pub fn centre(&self) -> f64 {
        self.k_lo + 0.5 * self.delta_k
    }

    pub fn contains(&self, k: f64) -> bool {
        (self.k_lo..=self.k_hi()).contains(&k)
    }

    /// Quadrature nodes `(k_j, w_j)`.
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        let h = self.delta_k / self.n_sub as f64;
        simpson_weights(self.n_sub, h)
            .into_iter()
            .enumerate()
            .map(|(j, w)| (self.k_lo + j as f64 * h, w))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigendifferentialPacket {
    pub band: KBand,
    pub t: f64,
    pub values: GridWavefunction,
    /// Windowed `<dphi, dphi>`.
    pub norm_sq: f64,
}

impl EigendifferentialPacket {
    pub fn norm_ratio(&self) -> f64 {
        self.norm_sq / self.band.delta_k
    }

    /// Window-tapered copy rescaled to unit plain norm, suitable as an
    /// initial state for propagation.
    pub fn normalized_state(&self) -> GridWavefunction {
        let mut psi = self.values.windowed();
        psi.normalize();
        psi
    }
}

pub fn build_packet(
    band: &KBand,
    coeffs: &InvariantCoefficients,
    t: f64,
    grid: &SpatialGrid,
) -> Result<EigendifferentialPacket> {
    build_packet_with(band, coeffs, t, grid, Exec::default())
}

pub fn build_packet_with(
    band: &KBand,
    coeffs: &InvariantCoefficients,
    t: f64,
    grid: &SpatialGrid,
    exec: Exec,
) -> Result<EigendifferentialPacket> {
    band.validate()?;
    grid.validate()?;
    // validates constants and the turning points at both band edges
    eigenstate_t_with(band.k_lo, coeffs, t, &SpatialGrid::new(grid.x_min, grid.x_max, 16)?, exec)?;
    eigenstate_t_with(band.k_hi(), coeffs, t, &SpatialGrid::new(grid.x_min, grid.x_max, 16)?, exec)?;

    let consts = &coeffs.consts;
    let (b, d) = (coeffs.b(t)?, coeffs.d(t)?);
    let norm = (consts.c0 * consts.hbar.powi(4)).powf(-1.0 / 6.0);
    let alpha = (consts.c0 / (consts.hbar * consts.hbar)).cbrt();
    let slope = -b / (2.0 * consts.hbar);
    let centres: Vec<(f64, f64)> = band
        .nodes()
        .into_iter()
        .map(|(k, w)| ((b * b / 4.0 + k - d) / consts.c0, w))
        .collect();
    let eval = AiryEvaluator::default();

    let mut values = vec![Complex64::new(0.0, 0.0); grid.n];
    fill_indexed(exec, &mut values, |i| {
        let x = grid.x(i);
        let amp: f64 = centres.iter().map(|&(s, w)| w * eval.ai(alpha * (x - s))).sum();
        Complex64::from_polar(norm * amp, slope * x)
    });
    let values = GridWavefunction {
        grid: *grid,
        values,
        t,
    };
    let norm_sq = values.windowed_norm_sq();
    Ok(EigendifferentialPacket {
        band: *band,
        t,
        values,
        norm_sq,
    })
}

fn band_states(
    band: &KBand,
    coeffs: &InvariantCoefficients,
    psi: &GridWavefunction,
    exec: Exec,
) -> Result<Vec<(f64, f64, GridWavefunction, Complex64)>> {
    band.validate()?;
    psi.check_finite()?;
    let nodes = band.nodes();
    try_map_indexed(exec, nodes.len(), |j| {
        let (k, w) = nodes[j];
        let phi = eigenstate_t_with(k, coeffs, psi.t, &psi.grid, Exec::Sequential)?;
        let c = phi.windowed_inner(psi)?;
        Ok((k, w, phi, c))
    })
}

/// `C(k'; t) = <phi(k'; t), psi>` at the band nodes, `t` taken from `psi`.
pub fn band_coefficients(
    band: &KBand,
    coeffs: &InvariantCoefficients,
    psi: &GridWavefunction,
) -> Result<Vec<(f64, Complex64)>> {
    band_coefficients_with(band, coeffs, psi, Exec::default())
}

pub fn band_coefficients_with(
    band: &KBand,
    coeffs: &InvariantCoefficients,
    psi: &GridWavefunction,
    exec: Exec,
) -> Result<Vec<(f64, Complex64)>> {
    Ok(band_states(band, coeffs, psi, exec)?
        .into_iter()
        .map(|(k, _, _, c)| (k, c))
        .collect())
}

/// `dP(k; t) psi = int C(k'; t) |phi(k'; t)> dk'`
pub fn project(band: &KBand, coeffs: &InvariantCoefficients, psi: &GridWavefunction) -> Result<GridWavefunction> {
    project_with(band, coeffs, psi, Exec::default())
}

pub fn project_with(
    band: &KBand,
    coeffs: &InvariantCoefficients,
    psi: &GridWavefunction,
    exec: Exec,
) -> Result<GridWavefunction> {
    let states = band_states(band, coeffs, psi, exec)?;
    let mut out = GridWavefunction::zeros(psi.grid, psi.t);
    for (_, w, phi, c) in &states {
        out.axpy(c * *w, phi)?;
    }
    Ok(out)
}

/// Windowed `<psi | dP | psi> / <psi | psi>`.
pub fn projection_fraction(
    band: &KBand,
    coeffs: &InvariantCoefficients,
    psi: &GridWavefunction,
    exec: Exec,
) -> Result<f64> {
    let states = band_states(band, coeffs, psi, exec)?;
    let weight: f64 = states.iter().map(|(_, w, _, c)| w * c.norm_sqr()).sum();
    Ok(weight / psi.windowed_norm_sq())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::driving::DrivingFunction;
    use crate::invariant::{build_coefficients, InvariantConstants};
    use crate::quad::QuadratureConfig;

    fn free() -> InvariantCoefficients {
        build_coefficients(
            &DrivingFunction::Zero,
            InvariantConstants::default(),
            &QuadratureConfig::new(2.0),
        )
        .unwrap()
    }

    fn grid() -> SpatialGrid {
        SpatialGrid::new(-40.0, 15.0, 4096).unwrap()
    }

    #[test]
    fn band_validation() {
        assert!(KBand::new(0.0, 0.0).is_err());
        assert!(KBand::new(0.0, -1.0).is_err());
        assert!(KBand::with_nodes(0.0, 0.1, 7).is_err());
        assert!(KBand::with_nodes(0.0, 0.1, 9).is_err());
        assert!(KBand::new(f64::NAN, 0.1).is_err());
        let b = KBand::centred(1.0, 0.1).unwrap();
        assert!((b.k_lo - 0.95).abs() < 1e-15 && b.contains(1.0));
        let w: f64 = b.nodes().iter().map(|n| n.1).sum();
        assert!((w - 0.1).abs() < 1e-15);
    }

    #[test]
    fn packet_is_additive_over_adjacent_bands() {
        let c = free();
        let g = grid();
        let whole = build_packet(&KBand::with_nodes(1.0, 0.4, 32).unwrap(), &c, 0.5, &g).unwrap();
        let a = build_packet(&KBand::with_nodes(1.0, 0.2, 16).unwrap(), &c, 0.5, &g).unwrap();
        let b = build_packet(&KBand::with_nodes(1.2, 0.2, 16).unwrap(), &c, 0.5, &g).unwrap();
        let mut sum = a.values.clone();
        sum.axpy(Complex64::new(1.0, 0.0), &b.values).unwrap();
        assert!(sum.distance(&whole.values).unwrap() < 1e-12 * whole.values.norm());
    }

    #[test]
    fn norm_ratio_approaches_one_once_band_resolves_window() {
        // On a window of length L the eigenstates are only resolved to
        // dk ~ pi / sqrt(L); the ratio tends to 1 as dk grows past that.
        let c = free();
        let g = grid();
        let ratios: Vec<f64> = [0.5, 1.0, 2.0, 4.0]
            .iter()
            .map(|&dk| {
                build_packet(&KBand::with_nodes(0.0, dk, 64).unwrap(), &c, 0.0, &g)
                    .unwrap()
                    .norm_ratio()
            })
            .collect();
        assert!(ratios.windows(2).all(|w| w[1] > w[0]), "{ratios:?}");
        assert!((0.9..1.05).contains(&ratios[3]), "{ratios:?}");
    }

    #[test]
    fn disjoint_bands_are_orthogonal() {
        let c = free();
        let g = grid();
        let a = build_packet(&KBand::new(0.0, 0.05).unwrap(), &c, 0.0, &g).unwrap();
        let far = build_packet(&KBand::new(5.0, 0.05).unwrap(), &c, 0.0, &g).unwrap();
        assert!(a.values.windowed_inner(&far.values).unwrap().norm() < 1e-4);

        // the finite window leaves a residual kernel of a few 1e-4
        let psi = a.values.clone();
        let p = project(&KBand::new(5.0, 0.05).unwrap(), &c, &psi).unwrap();
        assert!(p.windowed_norm_sq().sqrt() < 1e-3 * psi.windowed_norm_sq().sqrt());
    }

    #[test]
    fn coefficients_are_flat_across_own_band() {
        let c = free();
        let g = grid();
        let band = KBand::new(1.0, 0.05).unwrap();
        let p = build_packet(&band, &c, 0.0, &g).unwrap();
        let coeffs = band_coefficients(&band, &c, &p.values).unwrap();
        let mags: Vec<f64> = coeffs.iter().map(|(_, z)| z.norm()).collect();
        let max = mags.iter().cloned().fold(f64::MIN, f64::max);
        let min = mags.iter().cloned().fold(f64::MAX, f64::min);
        assert!((max - min) / max < 0.1, "{min} {max}");
    }

    #[test]
    fn projector_reproduces_wide_packets() {
        let c = free();
        let g = grid();
        let errs: Vec<f64> = [1.0, 4.0]
            .iter()
            .map(|&dk| {
                let band = KBand::with_nodes(0.0, dk, 64).unwrap();
                let p = build_packet(&band, &c, 0.3, &g).unwrap();
                let pp = project(&band, &c, &p.values).unwrap();
                let mut diff = pp.clone();
                diff.axpy(Complex64::new(-1.0, 0.0), &p.values).unwrap();
                (diff.windowed_norm_sq() / p.values.windowed_norm_sq()).sqrt()
            })
            .collect();
        assert!(errs[1] < errs[0], "{errs:?}");
        assert!(errs[1] < 0.1, "{errs:?}");
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let c = free();
        let g = SpatialGrid::new(-40.0, 15.0, 1024).unwrap();
        let band = KBand::new(0.5, 0.1).unwrap();
        let a = build_packet_with(&band, &c, 0.7, &g, Exec::Sequential).unwrap();
        let b = build_packet_with(&band, &c, 0.7, &g, Exec::Parallel).unwrap();
        assert_eq!(a, b);
        let pa = project_with(&band, &c, &a.values, Exec::Sequential).unwrap();
        let pb = project_with(&band, &c, &a.values, Exec::Parallel).unwrap();
        assert_eq!(pa, pb);
    }
}

//! Acceptance suite: one test per criterion, each printing a single
//! PASS/FAIL line to stderr (written directly so it shows even when the
//! harness captures output).
//!
//! Reference values used here (closed-form coefficients, the -7/12 phase,
//! the -1/(2 m hbar) slope) are computed independently in this file.

use std::io::Write;
use std::time::Instant;

use lrinv::airy::eigenstate_t;
use lrinv::driving::DrivingFunction;
use lrinv::grid::{GridWavefunction, SpatialGrid, Window};
use lrinv::invariant::{build_coefficients, eigenvalue_residual, invariant_expectation, InvariantConstants};
use lrinv::oracle::{evolve, ExactLinear, Method, PropagatorConfig};
use lrinv::packets::{build_packet, projection_fraction, KBand};
use lrinv::phase::{
    affine_fit, default_time_step, matrix_element_density, naive_density, phase_closed_form, phase_from_oracle,
    phase_overlap, uniform_times,
};
use lrinv::quad::QuadratureConfig;

const T_MAX: f64 = 2.0;

fn emit(n: u32, title: &str, pass: bool, detail: &str, secs: f64) {
    let status = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(
        std::io::stderr(),
        "acceptance criterion {n} {status}: {title}: {detail} [{secs:.2} s]"
    );
}

fn drivers() -> Vec<DrivingFunction> {
    vec![
        DrivingFunction::Zero,
        DrivingFunction::Constant { f0: 1.0 },
        DrivingFunction::Sinusoidal {
            amplitude: 1.0,
            omega: 1.0,
        },
    ]
}

fn unit(b0: f64) -> InvariantConstants {
    InvariantConstants::new(b0, 1.0, 1.0, 1.0).unwrap()
}

fn work_grid() -> SpatialGrid {
    SpatialGrid::new(-40.0, 15.0, 4096).unwrap()
}

fn padded_grid() -> SpatialGrid {
    SpatialGrid::with_window(-100.0, 50.0, 8192, Window::new(-40.0, 15.0)).unwrap()
}

/// Antiderivative closed forms of `b` and `d` with `m = c0 = 1`.
fn closed_b_d(df: &DrivingFunction, b0: f64, t: f64) -> (f64, f64) {
    let (f1, f2ff, f2fm) = match *df {
        DrivingFunction::Zero => (0.0, 0.0, 0.0),
        DrivingFunction::Constant { f0 } => (f0 * t, f0 * f0 * t * t / 2.0, f0 * t * t / 2.0),
        DrivingFunction::Sinusoidal { amplitude: a, omega: w } => {
            let f1 = a * (1.0 - (w * t).cos()) / w;
            (f1, f1 * f1 / 2.0, a * ((w * t).sin() / (w * w) - t * (w * t).cos() / w))
        }
        _ => unreachable!(),
    };
    (2.0 * f1 - t + b0, 2.0 * f2ff - f2fm + b0 * f1)
}

#[test]
fn criterion_1_coefficient_closed_forms() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for df in drivers() {
        for b0 in [0.0, 2.0] {
            let c = build_coefficients(&df, unit(b0), &QuadratureConfig::new(T_MAX)).unwrap();
            let ts = uniform_times(T_MAX, 400);
            let exact: Vec<(f64, f64)> = ts.iter().map(|&t| closed_b_d(&df, b0, t)).collect();
            let scale_b = exact.iter().map(|e| e.0.abs()).fold(1e-300, f64::max);
            let scale_d = exact.iter().map(|e| e.1.abs()).fold(1e-300, f64::max);
            for (t, (eb, ed)) in ts.iter().zip(&exact) {
                // relative to the value, or to 1e-3 of its range where it crosses zero
                let rb = (c.b(*t).unwrap() - eb).abs() / eb.abs().max(1e-3 * scale_b);
                let rd = (c.d(*t).unwrap() - ed).abs() / ed.abs().max(1e-3 * scale_d);
                worst = worst.max(rb).max(rd);
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst < 1e-8 && secs < 1.0;
    emit(
        1,
        "b(t), d(t) against closed-form antiderivatives",
        pass,
        &format!("max relative error {worst:.3e} (bound 1e-8, runtime < 1 s)"),
        secs,
    );
    assert!(pass);
}

#[test]
fn criterion_2_eigenvalue_residual() {
    let start = Instant::now();
    let g = work_grid();
    let mut worst: f64 = 0.0;
    for df in drivers() {
        let c = build_coefficients(&df, unit(2.0), &QuadratureConfig::new(T_MAX)).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let (k, t) = (0.5 * i as f64, 0.5 * j as f64);
                let phi = eigenstate_t(k, &c, t, &g).unwrap();
                worst = worst.max(eigenvalue_residual(&c, &phi, k).unwrap());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst < 1e-6 && secs < 10.0;
    emit(
        2,
        "||(I(t) - k) phi_k|| / ||phi_k|| on 5x5 (k, t) sweep",
        pass,
        &format!("max residual {worst:.3e} (bound 1e-6, n = 4096, x in [-40, 15], runtime < 10 s)"),
        secs,
    );
    assert!(pass);
}

#[test]
fn criterion_3_delta_normalization() {
    let start = Instant::now();
    let c = build_coefficients(&DrivingFunction::Zero, unit(0.0), &QuadratureConfig::new(T_MAX)).unwrap();
    let g = SpatialGrid::new(-640.0, 15.0, 1 << 18).unwrap();
    let k = 1.0;
    let ratios: Vec<f64> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&dk| build_packet(&KBand::centred(k, dk).unwrap(), &c, 0.0, &g).unwrap().norm_ratio())
        .collect();
    let a = build_packet(&KBand::centred(k, 0.05).unwrap(), &c, 0.0, &g).unwrap();
    let b = build_packet(&KBand::centred(k + 1.0, 0.05).unwrap(), &c, 0.0, &g).unwrap();
    let overlap = a.values.windowed_inner(&b.values).unwrap().norm();
    let secs = start.elapsed().as_secs_f64();

    let in_range = (0.95..=1.05).contains(&ratios[2]);
    let trend = (ratios[1] - 1.0).abs() < (ratios[0] - 1.0).abs() && (ratios[2] - 1.0).abs() < (ratios[1] - 1.0).abs();
    let pass = in_range && trend && overlap < 1e-4 && secs < 30.0;
    emit(
        3,
        "packet norm^2/dk and disjoint-band overlap",
        pass,
        &format!(
            "norm^2/dk = {:.4} / {:.4} / {:.4} at dk = 0.2 / 0.1 / 0.05 (need [0.95, 1.05] at 0.05 and a trend to 1: {}), \
             overlap at separation 1 = {overlap:.3e} (bound 1e-4), x in [-640, 15], n = 2^18",
            ratios[0],
            ratios[1],
            ratios[2],
            if trend { "yes" } else { "no" }
        ),
        secs,
    );
    assert!(pass);
}

#[test]
fn criterion_4_invariant_conservation() {
    let start = Instant::now();
    let g = padded_grid();
    let mut worst: f64 = 0.0;
    for df in drivers() {
        let consts = unit(0.0);
        let c = build_coefficients(&df, consts, &QuadratureConfig::new(T_MAX)).unwrap();
        for k in [1.0, 2.0] {
            let psi0 = build_packet(&KBand::centred(k, 0.05).unwrap(), &c, 0.0, &g)
                .unwrap()
                .normalized_state();
            let i0 = invariant_expectation(&c, &psi0).unwrap().value;
            for method in [Method::SplitOperator, Method::ExactLinear] {
                let cfg = PropagatorConfig::new(1e-3, 2000, method).recording(50);
                evolve(&psi0, &df, &consts, &cfg, |psi| {
                    let i = invariant_expectation(&c, psi)?.value;
                    worst = worst.max((i - i0).abs() / i0.abs());
                    Ok(())
                })
                .unwrap();
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst < 1e-5 && secs < 60.0;
    emit(
        4,
        "<psi(t)|I(t)|psi(t)> drift for propagated packets",
        pass,
        &format!("max relative drift {worst:.3e} over t in [0, 2], both propagators, 3 drivers (bound 1e-5)"),
        secs,
    );
    assert!(pass);
}

#[test]
fn criterion_5_subspace_confinement() {
    let start = Instant::now();
    let g = padded_grid();
    let band = KBand::centred(1.0, 0.05).unwrap();
    let mut worst = f64::INFINITY;
    for df in drivers() {
        let consts = unit(0.0);
        let c = build_coefficients(&df, consts, &QuadratureConfig::new(T_MAX)).unwrap();
        let psi0 = build_packet(&band, &c, 0.0, &g).unwrap().normalized_state();
        let cfg = PropagatorConfig::new(0.1, 20, Method::ExactLinear);
        evolve(&psi0, &df, &consts, &cfg, |psi| {
            worst = worst.min(projection_fraction(&band, &c, psi, Default::default())?);
            Ok(())
        })
        .unwrap();
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst > 0.99 && secs < 60.0;
    emit(
        5,
        "band projection norm fraction of the evolved packet",
        pass,
        &format!("minimum fraction {worst:.4} over t in [0, 2], dk = 0.05, 3 drivers (bound > 0.99)"),
        secs,
    );
    assert!(pass);
}

#[test]
fn criterion_6_phase_three_way_agreement() {
    let start = Instant::now();
    let ts = uniform_times(T_MAX, 40);
    let h_t = default_time_step(T_MAX);
    let cfg = PropagatorConfig::new(T_MAX / 40.0, 40, Method::ExactLinear);
    let mut worst: f64 = 0.0;
    for df in drivers() {
        let c = build_coefficients(&df, unit(0.0), &QuadratureConfig::new(T_MAX)).unwrap();
        for k in [0.0, 1.0, 2.0] {
            let band = KBand::centred(k, 0.05).unwrap();
            let overlap = phase_overlap(k, &band, &c, &ts, &work_grid(), h_t).unwrap();
            let closed = phase_closed_form(k, &c, &ts).unwrap();
            let oracle = phase_from_oracle(k, &band, &c, &df, &ts, &padded_grid(), &cfg).unwrap();
            worst = worst
                .max(overlap.max_deviation(&closed).unwrap())
                .max(overlap.max_deviation(&oracle).unwrap())
                .max(closed.max_deviation(&oracle).unwrap());
        }
    }
    // theta = -(k t / 2 + t^3 / 12) for f = 0, b0 = 0: -7/12 at k = t = 1
    let free = build_coefficients(&DrivingFunction::Zero, unit(0.0), &QuadratureConfig::new(T_MAX)).unwrap();
    let spot = phase_overlap(1.0, &KBand::centred(1.0, 0.05).unwrap(), &free, &uniform_times(1.0, 20), &work_grid(), h_t)
        .unwrap()
        .final_theta();
    let expected = -7.0 / 12.0;
    let spot_rel = ((spot - expected) / expected).abs();
    let secs = start.elapsed().as_secs_f64();
    let pass = worst < 0.02 && spot_rel < 0.01 && secs < 120.0;
    emit(
        6,
        "overlap / closed-form / oracle phase agreement",
        pass,
        &format!(
            "max pairwise deviation {worst:.3e} rad (bound 0.02), theta(k=1, t=1) = {spot:.6} vs -7/12 (rel {spot_rel:.2e}, bound 1%)"
        ),
        secs,
    );
    assert!(pass);
}

#[test]
fn criterion_7_matrix_element_structure() {
    let start = Instant::now();
    let g = work_grid();
    let h_t = default_time_step(T_MAX);
    let ks = [0.0, 1.0, 2.0, 4.0];
    let expected = -1.0 / 2.0;
    let mut worst_slope: f64 = 0.0;
    for df in drivers() {
        let c = build_coefficients(&df, unit(0.0), &QuadratureConfig::new(T_MAX)).unwrap();
        let ys: Vec<f64> = ks
            .iter()
            .map(|&k| {
                matrix_element_density(k, &KBand::centred(k, 0.05).unwrap(), &c, 1.0, &g, h_t)
                    .unwrap()
                    .value
            })
            .collect();
        let (slope, _, _) = affine_fit(&ks, &ys);
        worst_slope = worst_slope.max(((slope - expected) / expected).abs());
    }

    let free = build_coefficients(&DrivingFunction::Zero, unit(0.0), &QuadratureConfig::new(T_MAX)).unwrap();
    let naive: Vec<f64> = (0..3)
        .map(|j| {
            let scale = 1usize << j;
            let grid = SpatialGrid::new(15.0 - 55.0 * scale as f64, 15.0, 4096 * scale).unwrap();
            naive_density(1.0, &free, 1.0, &grid, h_t).unwrap().value.abs()
        })
        .collect();
    let grows = naive.windows(2).all(|w| w[1] > w[0]);
    let secs = start.elapsed().as_secs_f64();
    let pass = worst_slope < 0.01 && grows && secs < 60.0;
    emit(
        7,
        "density slope in k and naive same-k divergence",
        pass,
        &format!(
            "worst slope error {worst_slope:.3e} vs -1/(2 m hbar) (bound 1%), naive |element| = {:.4} -> {:.4} -> {:.4} ({})",
            naive[0],
            naive[1],
            naive[2],
            if grows { "monotone growth" } else { "not monotone" }
        ),
        secs,
    );
    assert!(pass);
}

#[test]
fn criterion_8_oracle_cross_validation() {
    let start = Instant::now();
    let g = SpatialGrid::new(-40.0, 40.0, 2048).unwrap();
    let psi0 = GridWavefunction::gaussian(g, 0.5, 1.0, -0.3, 1.0);
    let df = DrivingFunction::Sinusoidal {
        amplitude: 1.0,
        omega: 1.0,
    };
    let consts = unit(0.0);
    let ints = df.integrals(&QuadratureConfig::new(T_MAX), 1.0).unwrap();
    let exact = ExactLinear::new(&psi0, &ints, &consts).at(T_MAX).unwrap();
    let errs: Vec<f64> = [4e-3, 2e-3, 1e-3]
        .iter()
        .map(|&dt| {
            let n = (T_MAX / dt).round() as usize;
            let cfg = PropagatorConfig::new(dt, n, Method::SplitOperator).recording(n);
            let (end, _) = evolve(&psi0, &df, &consts, &cfg, |_| Ok(())).unwrap();
            end.distance(&exact).unwrap()
        })
        .collect();
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let second_order = orders.iter().all(|p| (1.8..=2.2).contains(p));
    let secs = start.elapsed().as_secs_f64();
    let pass = errs[2] < 1e-6 && second_order && secs < 30.0;
    emit(
        8,
        "split-operator vs exact characteristics",
        pass,
        &format!(
            "L2 distance at t = 2: {:.3e} / {:.3e} / {:.3e} at dt = 4e-3 / 2e-3 / 1e-3 (bound 1e-6 at 1e-3), observed orders {:.3}, {:.3}",
            errs[0], errs[1], errs[2], orders[0], orders[1]
        ),
        secs,
    );
    assert!(pass);
}

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use lrinv::airy::eigenstate_t;
use lrinv::grid::GridWavefunction;
use lrinv::invariant::{build_coefficients, invariant_expectation, InvariantCoefficients};
use lrinv::oracle::{evolve, write_snapshot_csv, PropagatorConfig};
use lrinv::packets::build_packet;
use lrinv::phase::{
    default_time_step, phase_closed_form, phase_from_oracle, phase_overlap, uniform_times, write_phase_csv,
};
use lrinv::quad::QuadratureConfig;
use lrinv::verify::{run_scenario, Scenario, BUILTIN};

use crate::config::Config;
use crate::CliError;

type Written = Vec<PathBuf>;

/// Creates `dir/name`, writes the config header and hands the writer to `body`.
fn write_file(
    dir: &Path,
    name: &str,
    header: &str,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut out = BufWriter::new(File::create(&path)?);
    out.write_all(header.as_bytes())?;
    body(&mut out)?;
    out.flush()?;
    Ok(path)
}

fn coefficients(cfg: &Config, t_max: f64) -> Result<InvariantCoefficients, CliError> {
    Ok(build_coefficients(
        &cfg.driver,
        cfg.constants,
        &QuadratureConfig::new(t_max),
    )?)
}

fn write_profile(psi: &GridWavefunction, stride: usize, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "x,re,im,abs")?;
    for i in (0..psi.grid.n).step_by(stride) {
        let v = psi.values[i];
        writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e}", psi.grid.x(i), v.re, v.im, v.norm())?;
    }
    Ok(())
}

pub fn coeffs(cfg: &Config) -> Result<Written, CliError> {
    let t_max = cfg.time.t_max;
    let rows = if t_max > 0.0 {
        let c = coefficients(cfg, t_max)?;
        uniform_times(t_max, cfg.time.steps)
            .into_iter()
            .map(|t| Ok((t, c.b(t)?, c.d(t)?)))
            .collect::<lrinv::Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let path = write_file(&cfg.output.dir, "coeffs.csv", &cfg.header("coeffs"), |out| {
        writeln!(out, "t,b,d")?;
        for (t, b, d) in rows {
            writeln!(out, "{t:.16e},{b:.16e},{d:.16e}")?;
        }
        Ok(())
    })?;
    Ok(vec![path])
}

pub fn eigenstate(cfg: &Config, t: f64) -> Result<Written, CliError> {
    let c = coefficients(cfg, cfg.time.t_max.max(t))?;
    let k = cfg.band.k;
    let phi = eigenstate_t(k, &c, t, &cfg.grid.build("grid")?)?;
    let header = format!("{}# k = {k:.16e}\n# t = {t:.16e}\n", cfg.header("eigenstate"));
    let path = write_file(&cfg.output.dir, "eigenstate.csv", &header, |out| {
        write_profile(&phi, cfg.output.stride, out)
    })?;
    Ok(vec![path])
}

pub fn packet(cfg: &Config, t: f64) -> Result<Written, CliError> {
    let c = coefficients(cfg, cfg.time.t_max.max(t))?;
    let band = cfg.band.band(cfg.band.k, "band")?;
    let p = build_packet(&band, &c, t, &cfg.grid.build("grid")?)?;
    let header = format!(
        "{}# t = {t:.16e}\n# norm_sq = {:.16e}\n# norm_sq_over_delta_k = {:.16e}\n",
        cfg.header("packet"),
        p.norm_sq,
        p.norm_ratio()
    );
    let path = write_file(&cfg.output.dir, "packet.csv", &header, |out| {
        write_profile(&p.values, cfg.output.stride, out)
    })?;
    Ok(vec![path])
}

pub fn phase(cfg: &Config, with_oracle: bool) -> Result<Written, CliError> {
    let t_max = cfg.time.t_max;
    let c = coefficients(cfg, t_max)?;
    let k = cfg.band.k;
    let band = cfg.band.band(k, "band")?;
    let ts = uniform_times(t_max, cfg.time.steps);
    let grid = cfg.grid.build("grid")?;
    let overlap = phase_overlap(k, &band, &c, &ts, &grid, default_time_step(t_max))?;
    let closed = phase_closed_form(k, &c, &ts)?;
    let oracle = if with_oracle {
        let prop = PropagatorConfig::new(cfg.time.dt, 0, cfg.time.method);
        Some(phase_from_oracle(
            k,
            &band,
            &c,
            &cfg.driver,
            &ts,
            &cfg.propagation_grid.build("propagation_grid")?,
            &prop,
        )?)
    } else {
        None
    };
    let path = write_file(&cfg.output.dir, "phase.csv", &cfg.header("phase"), |out| {
        write_phase_csv(&overlap, &closed, oracle.as_ref(), out)
    })?;
    Ok(vec![path])
}

pub fn propagate(cfg: &Config, launch_packet: bool) -> Result<Written, CliError> {
    let t_max = cfg.time.t_max;
    let grid = cfg.propagation_grid.build("propagation_grid")?;
    let c = coefficients(cfg, t_max)?;
    let psi0 = if launch_packet {
        build_packet(&cfg.band.band(cfg.band.k, "band")?, &c, 0.0, &grid)?.normalized_state()
    } else {
        let i = &cfg.initial;
        GridWavefunction::gaussian(grid, i.x0, i.sigma, i.p0, cfg.constants.hbar)
    };
    let n_steps = (t_max / cfg.time.dt).round() as usize;
    let prop = PropagatorConfig::new(cfg.time.dt, n_steps, cfg.time.method).recording(cfg.time.record_every);

    let dir = cfg.output.dir.join("snapshots");
    let header = cfg.header("propagate");
    let mut written = Vec::new();
    let mut summary = Vec::new();
    let mut io_error = None;
    evolve(&psi0, &cfg.driver, &cfg.constants, &prop, |psi| {
        let inv = invariant_expectation(&c, psi)?;
        summary.push((psi.t, psi.norm(), psi.mean_x(), psi.mean_p(cfg.constants.hbar), inv.value));
        let name = format!("psi_{:05}.csv", written.len());
        match write_file(&dir, &name, &header, |out| write_snapshot_csv(psi, cfg.output.stride, out)) {
            Ok(p) => written.push(p),
            Err(e) => io_error = Some(e),
        }
        Ok(())
    })?;
    if let Some(e) = io_error {
        return Err(e);
    }
    let path = write_file(&cfg.output.dir, "propagate.csv", &header, |out| {
        writeln!(out, "t,norm,mean_x,mean_p,invariant")?;
        for (t, n, x, p, i) in &summary {
            writeln!(out, "{t:.16e},{n:.16e},{x:.16e},{p:.16e},{i:.16e}")?;
        }
        Ok(())
    })?;
    written.insert(0, path);
    Ok(written)
}

/// A scenario assembled from the config sections; no closed-form phase spots.
fn scenario_from_config(cfg: &Config) -> Result<Scenario, CliError> {
    let mut s = Scenario::builtin("free").expect("builtin scenario");
    s.name = "config".into();
    s.driver = cfg.driver.clone();
    s.consts = cfg.constants;
    s.bands = cfg
        .band
        .ks
        .iter()
        .enumerate()
        .map(|(i, &k)| cfg.band.band(k, &format!("band.ks[{i}]")))
        .collect::<Result<_, _>>()?;
    s.t_max = cfg.time.t_max;
    s.grids.work = cfg.grid.build("grid")?;
    s.grids.propagation = cfg.propagation_grid.build("propagation_grid")?;
    s.grids.phase_intervals = cfg.time.steps;
    s.grids.oracle_dt = cfg.time.dt;
    s.tolerances = cfg.tolerances;
    s.spots.clear();
    Ok(s)
}

pub fn verify(cfg: &Config, name: Option<&str>, from_file: bool, quiet: bool) -> Result<(), CliError> {
    let scenario = match name {
        Some(n) => {
            let mut s = Scenario::builtin(n).ok_or_else(|| {
                CliError::Usage(format!("unknown scenario `{n}`; expected one of {}", BUILTIN.join(", ")))
            })?;
            if from_file {
                s.tolerances = cfg.tolerances;
            }
            s
        }
        None if from_file => scenario_from_config(cfg)?,
        None => {
            return Err(CliError::Usage(format!(
                "give a scenario name ({}) or --config",
                BUILTIN.join(", ")
            )))
        }
    };
    scenario.validate()?;
    let report = run_scenario(&scenario);

    let header = format!(
        "{}# scenario = {}\n",
        cfg.header("verify"),
        serde_json::to_string(&scenario).expect("scenario serializes")
    );
    let dir = &cfg.output.dir;
    let text = write_file(dir, "report.txt", &header, |out| report.write_text(out))?;
    let json = write_file(dir, "report.jsonl", &header, |out| report.write_json_lines(out))?;
    if !quiet {
        report.write_text(&mut std::io::stdout().lock())?;
        println!("wrote {}\nwrote {}", text.display(), json.display());
    }
    if report.pass {
        Ok(())
    } else {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        Err(CliError::ChecksFailed(format!(
            "scenario `{}`: {}",
            report.scenario,
            failed.join(", ")
        )))
    }
}

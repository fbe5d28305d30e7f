// Copyright 2026 QISD Contributors
// SPDX-License-Identifier: Apache-2.0

//! Subcommand pipelines. Every numeric column is written with `{:.16e}`
//! (17 significant digits), so equal results give equal bytes.

use std::io::Write;

use qisd_core::action::om_action;
use qisd_core::dynamics::{
    run_ensemble, run_ensemble_summary, write_summary_csv, write_trajectories_csv, EnsembleOptions,
};
use qisd_core::influence::{build_influence_functional, evaluate_influence_exponent, PathPair};
use qisd_core::model::{LangevinSpec, Potential, TimeGrid};
use qisd_core::oracle::{
    gaussian_path_propagator, kramers_grid_series, moment_ode_evolve, relative_frobenius, GaussianState,
    LEAKAGE_WARNING,
};
use qisd_core::rng::derive_seed;
use qisd_core::wigner::{
    estimate_grid, negativity, propagate_wigner, sample_initial_state, write_grid_csv, PhaseWindow, StateSpec,
    WignerGrid,
};
use qisd_core::Error;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{EnsembleConfig, ExperimentConfig, GridConfig, ValidateConfig};
use crate::output::{sha256_hex, OutputDir, PlotSpec, Series};
use crate::{RunError, RunResult, Subcommand};

/// Run `sub`; returns the number of failed checks (nonzero only for
/// `validate`).
pub fn dispatch(sub: Subcommand, config: &ExperimentConfig, seed: u64, dir: &mut OutputDir) -> RunResult<usize> {
    let spec = config.model.build()?;
    match sub {
        Subcommand::Simulate => simulate(config, &spec, seed, dir).map(|_| 0),
        Subcommand::Wigner => wigner(config, &spec, seed, dir).map(|_| 0),
        Subcommand::Action => action(config, &spec, seed, dir).map(|_| 0),
        Subcommand::Inverse => inverse(config, &spec, dir).map(|_| 0),
        Subcommand::Validate => validate(config, &spec, dir),
    }
}

fn section<'a, T>(value: &'a Option<T>, name: &str) -> RunResult<&'a T> {
    value
        .as_ref()
        .ok_or_else(|| RunError::Config(format!("missing section [{name}]")))
}

fn build_grid(g: &GridConfig) -> RunResult<TimeGrid> {
    Ok(TimeGrid::with_max_step(g.tau, g.dt)?)
}

fn ensemble_options(e: &EnsembleConfig) -> EnsembleOptions {
    EnsembleOptions {
        integrator: e.integrator,
        on_failure: e.on_failure,
    }
}

fn write_failures(dir: &mut OutputDir, failures: &[(usize, Error)]) -> RunResult<()> {
    if failures.is_empty() {
        return Ok(());
    }
    dir.write_with("failures.csv", |out| {
        writeln!(out, "trajectory_id,error")?;
        for (i, e) in failures {
            writeln!(out, "{i},\"{}\"", e.to_string().replace('"', "'"))?;
        }
        Ok(())
    })?;
    Ok(())
}

fn simulate(config: &ExperimentConfig, spec: &LangevinSpec, seed: u64, dir: &mut OutputDir) -> RunResult<()> {
    let grid = build_grid(section(&config.grid, "grid")?)?;
    let ens = section(&config.ensemble, "ensemble")?;
    let opts = ensemble_options(ens);
    let summary = run_ensemble_summary(spec, &ens.initial, &grid, ens.n_traj, seed, ens.record_every, &opts)?;
    dir.write_with("ensemble_summary.csv", |out| write_summary_csv(out, &summary))?;
    write_failures(dir, &summary.failures)?;
    if ens.write_trajectories {
        let full = run_ensemble(spec, &ens.initial, &grid, ens.n_traj, seed, &opts)?;
        dir.write_with("trajectories.csv", |out| write_trajectories_csv(out, &full))?;
    }
    if config.output.plots {
        let means = PlotSpec::lines("Ensemble means", "ensemble_summary.csv", "t", "time", "mean")
            .with_series(Series::new("mean_x", Some("se_mean_x"), "<x>"))
            .with_series(Series::new("mean_v", Some("se_mean_v"), "<v>"));
        let second = PlotSpec::lines("Ensemble second moments", "ensemble_summary.csv", "t", "time", "moment")
            .with_series(Series::new("var_x", Some("se_var_x"), "var x"))
            .with_series(Series::new("var_v", Some("se_var_v"), "var v"))
            .with_series(Series::new("cov_xv", Some("se_cov_xv"), "cov(x, v)"));
        dir.write_plot("plot_means.json", &means)?;
        dir.write_plot("plot_second_moments.json", &second)?;
    }
    println!(
        "simulate: {} members, {} failed, {} recorded times",
        summary.n_members,
        summary.failures.len(),
        summary.times.len()
    );
    Ok(())
}

fn action(config: &ExperimentConfig, spec: &LangevinSpec, seed: u64, dir: &mut OutputDir) -> RunResult<()> {
    let grid = build_grid(section(&config.grid, "grid")?)?;
    let ens = section(&config.ensemble, "ensemble")?;
    let full = run_ensemble(spec, &ens.initial, &grid, ens.n_traj, seed, &ensemble_options(ens))?;
    let values = full
        .members
        .par_iter()
        .map(|(i, traj)| {
            om_action(traj, spec).map(|a| (*i, a)).map_err(|e| Error::Trajectory {
                index: *i,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    dir.write_with("action.csv", |out| {
        writeln!(out, "trajectory_id,s,log_measure_correction,total_log_weight")?;
        for (i, a) in &values {
            writeln!(
                out,
                "{i},{:.16e},{:.16e},{:.16e}",
                a.s, a.log_measure_correction, a.total_log_weight
            )?;
        }
        Ok(())
    })?;
    write_failures(dir, &full.failures)?;
    if config.output.plots {
        let hist = PlotSpec {
            kind: "histogram",
            title: "Onsager-Machlup action of sampled paths".into(),
            data: "action.csv".into(),
            x: "s",
            x_label: "action s",
            y: None,
            y_label: Some("count"),
            value: None,
            group_by: None,
            series: Vec::new(),
        };
        dir.write_plot("plot_action.json", &hist)?;
    }
    println!("action: {} paths", values.len());
    Ok(())
}

#[derive(Serialize)]
struct WignerRecord<'a> {
    file: String,
    state: &'a StateSpec,
    spec_sha256: &'a str,
    seed: u64,
    stage_seed: Option<u64>,
    n: usize,
    tau: f64,
    weight_sum: f64,
    normalization: f64,
    in_window_fraction: f64,
    negativity: f64,
    min: f64,
    min_stderr: f64,
    effective_sample_size: f64,
}

fn wigner(config: &ExperimentConfig, spec: &LangevinSpec, seed: u64, dir: &mut OutputDir) -> RunResult<()> {
    let w = section(&config.wigner, "wigner")?;
    w.window.validate()?;
    if w.times.is_empty() || w.times[0] < 0.0 || w.times.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::InvalidParameter("wigner.times must be non-negative and strictly increasing".into()).into());
    }
    let model_json = serde_json::to_string(&config.model).map_err(|e| RunError::Config(e.to_string()))?;
    let spec_hash = sha256_hex(model_json.as_bytes());
    let mut ens = sample_initial_state(&w.state, w.n_points, seed)?;
    let mut now = 0.0;
    let mut records = Vec::with_capacity(w.times.len());
    let mut rows = Vec::with_capacity(w.times.len());
    for (k, &t) in w.times.iter().enumerate() {
        let mut stage_seed = None;
        if t > now {
            let s = derive_seed(seed, k as u64);
            let steps = ((t - now) / w.dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
            let grid = TimeGrid::spanning(now, t, steps)?;
            ens = propagate_wigner(&ens, spec, t - now, &grid, s)?;
            stage_seed = Some(s);
            now = t;
        }
        let grid = estimate_grid(&ens, &w.window)?;
        let file = format!("wigner_grid_{k:03}.csv");
        dir.write_with(&file, |out| write_grid_csv(out, &grid))?;
        let argmin = grid.argmin();
        let neg = negativity(&grid);
        records.push(WignerRecord {
            file,
            state: &w.state,
            spec_sha256: &spec_hash,
            seed,
            stage_seed,
            n: ens.len(),
            tau: t,
            weight_sum: ens.weight_sum(),
            normalization: grid.normalization,
            in_window_fraction: grid.in_window_fraction,
            negativity: neg,
            min: grid.density[argmin],
            min_stderr: grid.stderr[argmin],
            effective_sample_size: ens.weight_diagnostics().effective_sample_size,
        });
        rows.push((t, ens.moments(), neg, grid.density[argmin], grid.stderr[argmin]));
    }
    dir.write_json_lines("wigner_metadata.jsonl", &records)?;
    dir.write_with("wigner_moments.csv", |out| {
        writeln!(
            out,
            "t,mean_x,mean_p,var_x,var_p,cov_xp,se_mean_x,se_mean_p,se_var_x,se_var_p,se_cov_xp,negativity,min_w,se_min_w"
        )?;
        for (t, m, neg, min, se) in &rows {
            let a = m.as_array();
            write!(out, "{t:.16e}")?;
            for e in &a {
                write!(out, ",{:.16e}", e.value)?;
            }
            for e in &a {
                write!(out, ",{:.16e}", e.stderr)?;
            }
            writeln!(out, ",{neg:.16e},{min:.16e},{se:.16e}")?;
        }
        Ok(())
    })?;
    if config.output.plots {
        for r in &records {
            let heat = PlotSpec {
                kind: "heatmap",
                title: format!("Wigner function at t = {}", r.tau),
                data: r.file.clone(),
                x: "x",
                x_label: "position x",
                y: Some("p"),
                y_label: Some("momentum p"),
                value: Some("W"),
                group_by: None,
                series: Vec::new(),
            };
            dir.write_plot(&r.file.replace("wigner_grid", "plot_wigner").replace(".csv", ".json"), &heat)?;
        }
        let neg = PlotSpec::lines("Wigner negativity", "wigner_moments.csv", "t", "time", "negativity")
            .with_series(Series::new("negativity", None, "negativity"));
        dir.write_plot("plot_negativity.json", &neg)?;
    }
    println!("wigner: {} points, {} snapshots", ens.len(), records.len());
    Ok(())
}

fn inverse(config: &ExperimentConfig, spec: &LangevinSpec, dir: &mut OutputDir) -> RunResult<()> {
    let inv = section(&config.inverse, "inverse")?;
    let mut ifs = build_influence_functional(spec)?;
    ifs.placement = inv.placement;
    if let Some(c) = inv.convention {
        ifs = ifs.to_convention(c)?;
    }
    dir.write_with("influence_functional.json", |out| {
        serde_json::to_writer_pretty(&mut *out, &ifs)?;
        writeln!(out)
    })?;
    let mut rows = Vec::with_capacity(inv.y0.len() * inv.tau.len());
    for &y0 in &inv.y0 {
        for &tau in &inv.tau {
            let grid = TimeGrid::with_max_step(tau, inv.dt)?;
            let n = grid.n_points();
            let pair = PathPair::new(grid, vec![inv.x0; n], vec![y0; n])?;
            rows.push((y0, tau, evaluate_influence_exponent(&ifs, &pair)?));
        }
    }
    dir.write_with("decoherence.csv", |out| {
        writeln!(out, "y0,tau,exponent_re,exponent_im,decoherence_factor")?;
        for (y0, tau, e) in &rows {
            writeln!(out, "{y0:.16e},{tau:.16e},{:.16e},{:.16e},{:.16e}", e.re, e.im, e.re.exp())?;
        }
        Ok(())
    })?;
    if config.output.plots {
        let mut p = PlotSpec::lines("Decoherence factor", "decoherence.csv", "tau", "time tau", "|F|")
            .with_series(Series::new("decoherence_factor", None, "decoherence factor"));
        p.group_by = Some("y0");
        dir.write_plot("plot_decoherence.json", &p)?;
    }
    println!("inverse: {} table rows", rows.len());
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.value < self.tolerance
    }
}

/// Harmonic Caldeira–Leggett parameters `(m, ω, γ, k_BT)` of a spec.
fn harmonic_cl(spec: &LangevinSpec) -> RunResult<(f64, f64, f64, f64)> {
    let (gamma, kbt) = spec.cl_parameters().ok_or_else(|| {
        RunError::Core(Error::InvalidParameter(
            "validate needs Caldeira-Leggett kernels (set [model.caldeira_leggett])".into(),
        ))
    })?;
    match spec.potential {
        Potential::Harmonic { stiffness } if stiffness > 0.0 => {
            Ok((spec.mass, (stiffness / spec.mass).sqrt(), gamma, kbt))
        }
        _ => Err(Error::InvalidParameter("validate needs a harmonic potential".into()).into()),
    }
}

/// Symmetric window holding `7σ` of every state in `states`, on cells of
/// size `cell`.
fn covering_window(states: &[GaussianState], cell: f64) -> RunResult<PhaseWindow> {
    let half = |k: usize| {
        let reach = states
            .iter()
            .map(|s| s.mean[k].abs() + 7.0 * s.cov[k][k].sqrt())
            .fold(0.0, f64::max);
        (reach / cell).ceil() * cell
    };
    let (hx, hp) = (half(0), half(1));
    let n = |h: f64| (2.0 * h / cell).round() as usize;
    Ok(PhaseWindow::new((-hx, hx), (-hp, hp), n(hx), n(hp))?)
}

fn moment_error(got: &GaussianState, want: &GaussianState, resolution: &[f64; 5]) -> f64 {
    let (a, b) = (got.as_array(), want.as_array());
    (0..5).map(|k| (a[k] - b[k]).abs() / resolution[k]).fold(0.0, f64::max)
}

/// The three reference solvers for the linear Caldeira–Leggett model,
/// checked pairwise.
pub fn oracle_checks(spec: &LangevinSpec, v: &ValidateConfig) -> RunResult<Vec<Check>> {
    let (m, omega, gamma, kbt) = harmonic_cl(spec)?;
    let initial = GaussianState::new(v.mean, v.cov)?;
    let prop = gaussian_path_propagator(m, omega, gamma, kbt, &TimeGrid::with_max_step(v.tau, v.dt)?)?;
    let t_prop = prop.elapsed();

    let sharp = moment_ode_evolve(m, omega, gamma, kbt, &GaussianState::point(0.0, 0.0), t_prop)?;
    let ex = moment_ode_evolve(m, omega, gamma, kbt, &GaussianState::point(1.0, 0.0), t_prop)?;
    let ep = moment_ode_evolve(m, omega, gamma, kbt, &GaussianState::point(0.0, 1.0), t_prop)?;
    let ode_map = [[ex.mean[0], ep.mean[0]], [ex.mean[1], ep.mean[1]]];

    let ode_at_tau = moment_ode_evolve(m, omega, gamma, kbt, &initial, v.tau)?;
    let stationary = GaussianState::new([0.0, 0.0], [[kbt / (m * omega * omega), 0.0], [0.0, m * kbt]])?;
    let window = covering_window(&[initial, ode_at_tau, stationary], v.cell)?;
    let state = StateSpec::Gaussian {
        mean: v.mean,
        cov: v.cov,
    };
    let start = WignerGrid::from_fn(window, |x, p| state.wigner(x, p).unwrap_or(0.0))?;
    let series = kramers_grid_series(spec, &start, &[t_prop, v.tau], None)?;
    let as_state = |g: &WignerGrid| {
        let (mean, cov) = g.moments();
        GaussianState { mean, cov }
    };
    let pde_prop = &series[0];
    let pde_tau = &series[1];

    Ok(vec![
        Check {
            name: "propagator_vs_moment_ode_covariance",
            value: relative_frobenius(&prop.covariance(), &sharp.cov),
            tolerance: 1e-3,
        },
        Check {
            name: "propagator_vs_moment_ode_mean_map",
            value: relative_frobenius(&prop.mean_map(), &ode_map),
            tolerance: 1e-3,
        },
        Check {
            name: "grid_pde_vs_moment_ode_moments",
            value: moment_error(&as_state(&pde_tau.grid), &ode_at_tau, &pde_tau.resolution),
            tolerance: 2.0,
        },
        Check {
            name: "grid_pde_vs_propagator_moments",
            value: moment_error(&as_state(&pde_prop.grid), &prop.evolve(&initial), &pde_prop.resolution),
            tolerance: 2.0,
        },
        Check {
            name: "grid_pde_leakage",
            value: pde_tau.leakage.abs(),
            tolerance: LEAKAGE_WARNING,
        },
    ])
}

fn validate(config: &ExperimentConfig, spec: &LangevinSpec, dir: &mut OutputDir) -> RunResult<usize> {
    let checks = oracle_checks(spec, &config.validate)?;
    dir.write_with("validate.csv", |out| {
        writeln!(out, "check,value,tolerance,pass")?;
        for c in &checks {
            writeln!(out, "{},{:.16e},{:.16e},{}", c.name, c.value, c.tolerance, c.passed())?;
        }
        Ok(())
    })?;
    let mut failed = 0;
    for c in &checks {
        let tag = if c.passed() { "PASS" } else { "FAIL" };
        println!("{tag} {:<40} {:.3e} < {:.1e}", c.name, c.value, c.tolerance);
        failed += usize::from(!c.passed());
    }
    println!("validate: {} of {} checks passed", checks.len() - failed, checks.len());
    Ok(failed)
}

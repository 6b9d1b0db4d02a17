//! Dispatch from a validated config to the library, and report emission.

use bridgelab::basis::{eval_series, synthesize};
use bridgelab::characteristics::{run_characteristics, CharTrajectory};
use bridgelab::dynamics::{absorbing_probe, attractor_probe, decompose_with, lemaW_audit, sample_ball};
use bridgelab::nonlinearity::Family;
use bridgelab::spectral::{eigenvalues, f_xi_period, pruss_sweep, F_xi, F_xi_inf};
use bridgelab::timestepper::{dissipation_residual, fit_decay_rate, simulate_steps, TrajectoryRecord};
use bridgelab::{assemble, classify_damping_point, ModalState};
use nalgebra::DVector;
use serde_json::{json, Value};

use crate::config::{Experiment, ExperimentConfig};
use crate::error::CliError;
use crate::output::{FileEntry, OutputDir};

/// Runs one experiment into `out` and writes the manifest.
pub fn run_experiment(config: &ExperimentConfig, mut out: OutputDir) -> Result<Vec<FileEntry>, CliError> {
    out.write_json("config.json", config)?;
    let summary = match config.experiment {
        Experiment::Simulate => simulate_exp(config, &mut out, false)?,
        Experiment::Decay => simulate_exp(config, &mut out, true)?,
        Experiment::Spectrum => spectrum_exp(config, &mut out)?,
        Experiment::ResolventSweep => resolvent_exp(config, &mut out)?,
        Experiment::FXi => f_xi_exp(config, &mut out)?,
        Experiment::Characteristics => characteristics_exp(config, &mut out)?,
        Experiment::CrossValidate => cross_validate_exp(config, &mut out)?,
        Experiment::Decompose => decompose_exp(config, &mut out)?,
        Experiment::Absorbing => absorbing_exp(config, &mut out)?,
        Experiment::Attractor => attractor_exp(config, &mut out)?,
    };
    out.finish(config.experiment.tag(), summary)
}

fn n_steps(config: &ExperimentConfig) -> usize {
    let n = &config.numerics;
    (n.t_end / n.dt - 1e-9).ceil().max(0.0) as usize
}

fn write_energy_csv(out: &mut OutputDir, rec: &TrajectoryRecord) -> Result<(), CliError> {
    let header: Vec<String> = [
        "t",
        "E_total",
        "E_kinetic_cable",
        "E_potential_cable",
        "E_kinetic_deck",
        "E_bending_deck",
        "E_stretching_deck",
        "E_coupling",
        "P_damp",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let rows = rec.times.iter().zip(&rec.energies).zip(&rec.damping_power).map(|((t, e), p)| {
        vec![
            *t,
            e.total,
            e.kinetic_cable,
            e.potential_cable,
            e.kinetic_deck,
            e.bending_deck,
            e.stretching_deck,
            e.coupling,
            *p,
        ]
    });
    out.write_csv(
        "energy.csv",
        "energy series: time, total energy, its parts, damping power gamma v_t(xi)^2 + gamma0 u_t(xi)^2",
        &header,
        rows,
    )
}

fn simulate_exp(c: &ExperimentConfig, out: &mut OutputDir, fit: bool) -> Result<Value, CliError> {
    let n = &c.numerics;
    let gen = assemble(&c.params, n.n_modes)?;
    let init = c.initial.build(n.n_modes);
    let rec = simulate_steps(&gen, &c.spec(), &init, n_steps(c), n.dt, n.stride)?;
    write_energy_csv(out, &rec)?;
    let residual = dissipation_residual(&rec).ok();
    let mut summary = json!({
        "schema": "bridgelab.simulate.v1",
        "n_modes": n.n_modes,
        "dt": n.dt,
        "n_steps": rec.metadata.n_steps,
        "scheme": rec.metadata.scheme,
        "energy_initial": rec.energies[0].total,
        "energy_final": rec.energies.last().map(|e| e.total),
        "dissipation_residual": residual,
        "max_step_residual": rec.metadata.max_step_residual,
        "max_fixed_point_iterations": rec.metadata.max_iterations_used,
    });
    if fit {
        let f = fit_decay_rate(&rec, n.fit_window)?;
        summary["schema"] = json!("bridgelab.decay.v1");
        summary["decay_fit"] = serde_json::to_value(f).unwrap_or_default();
        out.write_json("decay.json", &summary)?;
    } else {
        out.write_json("simulate.json", &summary)?;
        out.write_json("final_state.json", rec.final_state())?;
    }
    Ok(summary)
}

fn spectrum_exp(c: &ExperimentConfig, out: &mut OutputDir) -> Result<Value, CliError> {
    let gen = assemble(&c.params, c.numerics.n_modes)?;
    let rep = eigenvalues(&gen)?;
    let class = classify_damping_point(c.params.xi, c.params.ell);
    let mut doc = serde_json::to_value(&rep).unwrap_or_default();
    doc["classification"] = serde_json::to_value(class).unwrap_or_default();
    out.write_json("spectrum.json", &doc)?;
    out.write_csv(
        "eigenvalues.csv",
        "eigenvalues of A_N sorted by imaginary then real part",
        &["re".into(), "im".into()],
        rep.eigenvalues.iter().map(|z| vec![z.re, z.im]),
    )?;
    Ok(json!({
        "spectral_abscissa": rep.spectral_abscissa,
        "axis_gap": rep.axis_gap,
        "undamped_witnesses": rep.undamped_witnesses,
        "classification": doc["classification"],
    }))
}

fn resolvent_exp(c: &ExperimentConfig, out: &mut OutputDir) -> Result<Value, CliError> {
    let gen = assemble(&c.params, c.numerics.n_modes)?;
    let sweep = pruss_sweep(&gen, c.numerics.lambda_max, c.numerics.n_grid)?;
    out.write_json("resolvent.json", &sweep)?;
    out.write_csv(
        "resolvent.csv",
        "resolvent norm ||(i lambda - A_N)^-1|| in the energy norm",
        &["lambda".into(), "norm".into()],
        sweep.lambdas.iter().zip(&sweep.norms).map(|(l, r)| vec![*l, *r]),
    )?;
    Ok(json!({ "sup": sweep.sup }))
}

fn f_xi_exp(c: &ExperimentConfig, out: &mut OutputDir) -> Result<Value, CliError> {
    let inf = F_xi_inf(&c.params, c.numerics.lambda_window)?;
    out.write_json("f_xi.json", &inf)?;
    let (a, b) = match f_xi_period(&c.params) {
        Some(p) => (0.0, p),
        None => inf.window,
    };
    let m = c.numerics.n_grid.max(2);
    out.write_csv(
        "f_xi.csv",
        "F_xi(lambda) sampled over one period or the search window",
        &["lambda".into(), "F_xi".into()],
        (0..m).map(|i| {
            let l = a + (b - a) * i as f64 / (m - 1) as f64;
            vec![l, F_xi(l, &c.params)]
        }),
    )?;
    Ok(json!({ "min": inf.min, "argmin": inf.argmin, "period": inf.period }))
}

/// Cable displacement at the edges and velocity at the midpoints of the grid.
fn char_initial(c: &ExperimentConfig, init: &ModalState) -> (Vec<f64>, Vec<f64>) {
    let ell = c.params.ell;
    let cells = c.numerics.cells;
    let dx = ell / cells as f64;
    let edges = (0..=cells).map(|i| eval_series(&init.a, ell, i as f64 * dx)).collect();
    let mids = (0..cells)
        .map(|i| eval_series(&init.adot, ell, (i as f64 + 0.5) * dx))
        .collect();
    (edges, mids)
}

fn run_char(c: &ExperimentConfig, init: &ModalState, stride: usize) -> Result<CharTrajectory, CliError> {
    let (edges, mids) = char_initial(c, init);
    Ok(run_characteristics(&c.params, &edges, &mids, c.numerics.t_end, stride)?)
}

fn characteristics_exp(c: &ExperimentConfig, out: &mut OutputDir) -> Result<Value, CliError> {
    let init = c.initial.build(c.numerics.n_modes);
    let traj = run_char(c, &init, c.numerics.stride)?;
    let mut cumulative = 0.0;
    let rows: Vec<Vec<f64>> = traj
        .energy
        .iter()
        .enumerate()
        .map(|(i, (t, e))| {
            if i > 0 {
                cumulative += traj.dissipated[i - 1];
            }
            vec![*t, *e, cumulative]
        })
        .collect();
    let e0 = traj.energy[0].1;
    let e_end = traj.energy.last().map_or(e0, |x| x.1);
    let balance = (e0 - e_end - cumulative).abs() / e0.max(f64::MIN_POSITIVE);
    out.write_csv(
        "characteristics_energy.csv",
        "exact-transport wave solver: time, energy, cumulative energy absorbed by the damper",
        &["t".into(), "E_total".into(), "dissipated".into()],
        rows,
    )?;
    let summary = json!({
        "schema": "bridgelab.characteristics.v1",
        "dt": traj.dt,
        "cells": traj.x.len(),
        "energy_initial": e0,
        "energy_final": e_end,
        "dissipated": cumulative,
        "balance_defect": balance,
    });
    out.write_json("characteristics.json", &summary)?;
    Ok(summary)
}

fn cross_validate_exp(c: &ExperimentConfig, out: &mut OutputDir) -> Result<Value, CliError> {
    let n = &c.numerics;
    let init = c.initial.build(n.n_modes);
    let traj = run_char(c, &init, 1)?;
    let sub = ((traj.dt / n.dt).ceil() as usize).max(1);
    let gen = assemble(&c.params, n.n_modes)?;
    let steps = (traj.snapshots.len() - 1) * sub;
    let rec = simulate_steps(&gen, &c.spec(), &init, steps, traj.dt / sub as f64, sub)?;
    let dx = c.params.ell / traj.x.len() as f64;
    let gaps: Vec<(f64, f64)> = traj
        .snapshots
        .iter()
        .zip(&rec.states)
        .map(|(snap, st)| {
            let fields = synthesize(st, c.params.ell, &traj.x);
            let e2: f64 = fields.iter().zip(&snap.v).map(|(f, v)| (f.v - v).powi(2) * dx).sum();
            (snap.t, e2.sqrt())
        })
        .collect();
    let sup = gaps.iter().map(|g| g.1).fold(0.0, f64::max);
    out.write_csv(
        "cross_validation.csv",
        "L2 gap in cable displacement between the characteristics and Galerkin solvers",
        &["t".into(), "l2_gap".into()],
        gaps.iter().map(|(t, g)| vec![*t, *g]),
    )?;
    let summary = json!({
        "schema": "bridgelab.cross_validation.v1",
        "characteristics_dt": traj.dt,
        "galerkin_dt": traj.dt / sub as f64,
        "sup_l2_gap": sup,
    });
    out.write_json("cross_validation.json", &summary)?;
    Ok(summary)
}

fn decompose_exp(c: &ExperimentConfig, out: &mut OutputDir) -> Result<Value, CliError> {
    let n = &c.numerics;
    let gen = assemble(&c.params, n.n_modes)?;
    let spec = c.spec();
    let rec = decompose_with(&gen, &spec, &c.initial.build(n.n_modes), n.t_end, n.dt)?;
    let audit = lemaW_audit(&rec, &gen);
    out.write_csv(
        "decomposition.csv",
        "norms of the decaying part W, of A_N V and of V_t for U = W + V",
        &["t".into(), "W_norm".into(), "AV_norm".into(), "Vt_norm".into()],
        (0..rec.len()).map(|i| vec![rec.times[i], rec.w_norm[i], rec.av_norm[i], rec.vt_norm[i]]),
    )?;
    let mut summary = json!({
        "schema": "bridgelab.decomposition.v1",
        "additivity_defect": rec.additivity_defect,
        "audit": audit,
        "final_av_norm": rec.av_norm.last(),
    });
    if let (Family::Zero, Some(f)) = (spec.family, &spec.forcing) {
        let f = DVector::from_column_slice(f);
        let steady = gen.steady_state(&f)?;
        let v_end = rec.v.last().map(|v| v.to_vector()).unwrap_or_else(|| DVector::zeros(gen.dim()));
        let m = gen.metric();
        summary["steady_state_gap"] = json!(m.norm(&(&v_end - &steady)) / m.norm(&steady).max(f64::MIN_POSITIVE));
    }
    out.write_json("decomposition.json", &summary)?;
    Ok(summary)
}

fn absorbing_exp(c: &ExperimentConfig, out: &mut OutputDir) -> Result<Value, CliError> {
    let n = &c.numerics;
    let seed = n.seed.unwrap_or_default();
    let rep = absorbing_probe(
        &c.params,
        &c.spec(),
        n.n_modes,
        n.radius,
        n.ensemble_size,
        n.t_end,
        n.dt,
        n.stride,
        seed,
    )?;
    let mut header = vec!["t".to_string()];
    header.extend((0..rep.ensemble_size).map(|m| format!("member_{m}")));
    out.write_csv(
        "absorbing_norms.csv",
        "energy norm of each ensemble member",
        &header,
        (0..rep.times.len()).map(|i| {
            let mut row = vec![rep.times[i]];
            row.extend(rep.norms.iter().map(|s| s[i]));
            row
        }),
    )?;
    out.write_json("absorbing.json", &rep)?;
    Ok(json!({
        "all_entered": rep.all_entered,
        "ball_radius": rep.ball_radius,
        "envelope": rep.envelope,
        "flagged": rep.flagged,
    }))
}

fn attractor_exp(c: &ExperimentConfig, out: &mut OutputDir) -> Result<Value, CliError> {
    let n = &c.numerics;
    let gen = assemble(&c.params, n.n_modes)?;
    let ens = sample_ball(&gen, n.radius, n.ensemble_size, n.seed.unwrap_or_default());
    let rep = attractor_probe(&c.params, &c.spec(), &ens, n.t_end, n.dt, n.t_star, n.stride)?;
    let header: Vec<String> = (0..rep.ensemble_size).map(|m| format!("member_{m}")).collect();
    out.write_csv(
        "pairwise_energy.csv",
        "final-time pairwise distances in the energy norm",
        &header,
        rep.pairwise_energy.clone(),
    )?;
    out.write_csv(
        "pairwise_h_minus1.csv",
        "final-time pairwise distances in the norm ||A_N^-1 .||",
        &header,
        rep.pairwise_h_minus1.clone(),
    )?;
    out.write_json("attractor.json", &rep)?;
    Ok(json!({
        "dimension_estimate": rep.dimension_estimate,
        "cloud_diameter": rep.cloud_diameter,
        "max_contraction": rep.contraction_factors.iter().copied().fold(0.0, f64::max),
    }))
}

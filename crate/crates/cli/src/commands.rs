use std::path::PathBuf;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use hyperbn_core::continuation::{compactness_check, geometric_p_list, subcritical_sequence};
use hyperbn_core::diagnostics::{
    annulus_gradient_scaling, default_tail_window, energy_j, euclidean_sobolev_constant,
    fit_tail_decay, minimize_quotient, pohozaev_check, uniform_bound_ratios, MinimizeControls,
};
use hyperbn_core::geometry::{gauge_transform, GaugeDirection};
use hyperbn_core::linear_ode::radial_dirichlet_eigenvalues;
use hyperbn_core::radial_ode::{ode_residual, ProfileMeta};
use hyperbn_core::shooting::{log_grid, nonexistence_scan, solve_knode, SolutionRecord};
use hyperbn_core::{Gauge, Params, RadialProfile, ShotControls};

use crate::args::{BranchArgs, Command, EigArgs, ScanArgs, Shooting, SobolevArgs, SolveArgs, VerifyArgs};
use crate::output::{fmt_f, read_csv_columns, RunDir};
use crate::Failure;

pub fn run(cmd: &Command) -> Result<PathBuf> {
    match cmd {
        Command::Solve(a) => solve(a, cmd),
        Command::Scan(a) => scan(a, cmd),
        Command::Branch(a) => branch(a, cmd),
        Command::Verify(a) => verify(a, cmd),
        Command::Eig(a) => eig(a, cmd),
        Command::Sobolev(a) => sobolev(a, cmd),
    }
}

/// Parameter record for the manifest, without the output location.
fn parameters(args: &impl Serialize, extra: Value) -> Result<Value> {
    let mut v = serde_json::to_value(args)?;
    if let (Some(obj), Value::Object(more)) = (v.as_object_mut(), extra) {
        obj.remove("out");
        obj.remove("config");
        obj.extend(more);
    }
    Ok(v)
}

fn run_dir(cmd: &Command, parameters: &Value) -> Result<RunDir> {
    let path = match &cmd.common().out {
        Some(p) => p.clone(),
        None => RunDir::default_path(cmd.name(), parameters),
    };
    RunDir::create(path)
}

fn controls_of(s: &Shooting) -> Result<ShotControls> {
    let c = ShotControls { r_max: s.rmax, tol: s.tol, ..ShotControls::default() };
    c.validate()?;
    Ok(c)
}

fn grid_of(s: &Shooting) -> Result<Vec<f64>> {
    if !(s.a_min > 0.0 && s.a_max > s.a_min && s.grid_points >= 2) {
        return Err(Failure::Invalid("need 0 < a-min < a-max and at least 2 grid points".into()).into());
    }
    Ok(log_grid(s.a_min, s.a_max, s.grid_points))
}

/// A solution record without its sample arrays, which go to CSV.
fn record_json(rec: &SolutionRecord) -> Result<Value> {
    let mut v = serde_json::to_value(rec)?;
    let obj = v.as_object_mut().context("record is not an object")?;
    obj.remove("profile");
    obj.insert("params".into(), serde_json::to_value(rec.params())?);
    obj.insert("profile_samples".into(), json!(rec.profile.len()));
    Ok(v)
}

fn max_pohozaev(rec: &SolutionRecord) -> f64 {
    rec.pohozaev_residuals.iter().map(|(_, r)| r.abs()).fold(0.0, f64::max)
}

fn profile_rows(profile: &RadialProfile) -> Result<Vec<Vec<String>>> {
    let v = gauge_transform(profile, GaugeDirection::HyperbolicToEuclidean)?;
    Ok((0..profile.len())
        .map(|i| {
            let r = profile.radii[i];
            vec![
                fmt_f(r),
                fmt_f((0.5 * r).tanh()),
                fmt_f(profile.values[i]),
                fmt_f(profile.derivs[i]),
                fmt_f(v.values[i]),
            ]
        })
        .collect())
}

fn solve(a: &SolveArgs, cmd: &Command) -> Result<PathBuf> {
    let p = a.problem.p.resolve(a.problem.dim);
    let params = Params::new(a.problem.dim, a.problem.lambda, p)?;
    let controls = controls_of(&a.shooting)?;
    let grid = grid_of(&a.shooting)?;
    let pv = parameters(a, json!({ "p_resolved": params.p }))?;
    let rec = solve_knode(&params, a.nodes, &grid, a.shooting.tol_a, &controls)?;
    let mut dir = run_dir(cmd, &pv)?;
    dir.write_csv("profile.csv", &["r", "s", "u", "u_prime", "v"], &profile_rows(&rec.profile)?)?;
    dir.write_json("solution.json", &record_json(&rec)?)?;
    let summary = json!({
        "amplitude": rec.amplitude,
        "nodes": rec.nodes,
        "energy_j": rec.energy_j,
        "energy_g": rec.energy_g,
        "nehari_residual": rec.nehari_residual,
        "max_pohozaev_residual": max_pohozaev(&rec),
        "fitted_decay": rec.fitted_decay,
        "expected_decay": rec.expected_decay,
        "ode_residual": rec.ode_residual,
    });
    let path = dir.path.clone();
    dir.finish("manifest.json", cmd.name(), &pv, &summary)?;
    Ok(path)
}

fn scan(a: &ScanArgs, cmd: &Command) -> Result<PathBuf> {
    let p = a.problem.p.resolve(a.problem.dim);
    let params = Params::new(a.problem.dim, a.problem.lambda, p)?;
    let controls = controls_of(&a.shooting)?;
    let grid = grid_of(&a.shooting)?;
    let pv = parameters(a, json!({ "p_resolved": params.p }))?;
    let report = nonexistence_scan(&params, &grid, &controls)?;
    let mut dir = run_dir(cmd, &pv)?;
    let rows: Vec<Vec<String>> = report
        .entries
        .iter()
        .map(|e| {
            let class = serde_json::to_value(e.class).ok().and_then(|v| v.as_str().map(String::from));
            vec![fmt_f(e.amplitude), class.unwrap_or_default(), e.nodes.to_string()]
        })
        .collect();
    dir.write_csv("scan.csv", &["amplitude", "class", "nodes"], &rows)?;
    dir.write_json("scan.json", &report)?;
    let summary = json!({
        "verdict": report.verdict,
        "decay_count": report.decay_count,
        "undetermined_count": report.undetermined_count,
        "transitions": report.transitions.len(),
    });
    let path = dir.path.clone();
    dir.finish("manifest.json", cmd.name(), &pv, &summary)?;
    Ok(path)
}

fn branch(a: &BranchArgs, cmd: &Command) -> Result<PathBuf> {
    let base = Params::critical(a.dim, a.lambda)?;
    let p_list = match &a.p_list {
        Some(ps) => ps.clone(),
        None => geometric_p_list(&base, a.delta, a.count)?,
    };
    let controls = controls_of(&a.shooting)?;
    let grid = grid_of(&a.shooting)?;
    let pv = parameters(a, json!({ "p_sequence_requested": p_list }))?;
    let br = subcritical_sequence(&base, a.nodes, &p_list, &grid, a.shooting.tol_a, &controls)?;
    let compactness = if br.records.len() >= 3 { Some(compactness_check(&br)?) } else { None };
    let mut dir = run_dir(cmd, &pv)?;
    let rows: Vec<Vec<String>> = br
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            vec![
                fmt_f(br.p_sequence[i]),
                fmt_f(r.amplitude),
                fmt_f(r.energy_j),
                fmt_f(r.energy_g),
                fmt_f(r.nehari_residual),
                fmt_f(r.bound_ratio_52),
                if i == 0 { String::new() } else { fmt_f(br.sup_diffs[i - 1]) },
            ]
        })
        .collect();
    dir.write_csv(
        "branch.csv",
        &["p", "amplitude", "energy_j", "energy_g", "nehari_residual", "bound_ratio_52", "sup_diff"],
        &rows,
    )?;
    let records = br.records.iter().map(record_json).collect::<Result<Vec<_>>>()?;
    dir.write_json(
        "branch.json",
        &json!({
            "params_base": br.params_base,
            "k": br.k,
            "p_sequence": br.p_sequence,
            "sup_diffs": br.sup_diffs,
            "energies": br.energies,
            "verdict": br.verdict,
            "failure": br.failure,
            "compactness": compactness,
            "records": records,
        }),
    )?;
    let summary = json!({
        "verdict": br.verdict,
        "solved": br.records.len(),
        "requested": p_list.len(),
        "final_sup_diff": br.sup_diffs.last(),
        "final_energy": br.energies.last(),
        "failure": br.failure,
    });
    let path = dir.path.clone();
    dir.finish("manifest.json", cmd.name(), &pv, &summary)?;
    if br.records.is_empty() {
        let why = br.failure.map_or_else(String::new, |(_, m)| m);
        return Err(Failure::Empty(format!("no solution on the branch: {why}")).into());
    }
    Ok(path)
}

fn verify(a: &VerifyArgs, cmd: &Command) -> Result<PathBuf> {
    let text = std::fs::read_to_string(a.input.join("solution.json"))
        .map_err(|e| Failure::Invalid(format!("cannot read solution.json in {}: {e}", a.input.display())))?;
    let stored: Value = serde_json::from_str(&text).context("parsing solution.json")?;
    let params: Params = serde_json::from_value(stored["params"].clone()).context("stored params")?;
    let controls: ShotControls = serde_json::from_value(stored["controls"].clone()).context("stored controls")?;
    let cols = read_csv_columns(&a.input.join("profile.csv"), &["r", "u", "u_prime"])?;
    let [r, u, du]: [Vec<f64>; 3] = cols.try_into().map_err(|_| Failure::Invalid("bad profile".into()))?;
    let profile = RadialProfile::new(r, u, du, Gauge::Hyperbolic, params)?
        .with_meta(ProfileMeta { tol: Some(controls.tol), decaying_tail: true });
    let v = gauge_transform(&profile, GaugeDirection::HyperbolicToEuclidean)?;
    let s_end = (0.5 * profile.r_end()).tanh();
    let radii: Vec<f64> = a.radii.iter().copied().filter(|r| *r < s_end).collect();
    let pohozaev = pohozaev_check(&v, &radii)?;
    let window = default_tail_window(&profile)?;
    let fitted = fit_tail_decay(&profile, window)?;
    let energy = energy_j(&profile)?;
    let bounds = uniform_bound_ratios(&profile)?;
    let annulus = match annulus_gradient_scaling(&v, &a.eps) {
        Ok(fit) => serde_json::to_value(fit)?,
        Err(e) => json!({ "error": e.to_string() }),
    };
    let report = json!({
        "source": stored,
        "pohozaev": pohozaev,
        "max_pohozaev_residual": pohozaev.max_relative_residual(),
        "tail_window": window,
        "fitted_decay": fitted,
        "energy_j": energy,
        "bound_ratios": bounds,
        "annulus": annulus,
        "ode_residual": ode_residual(&profile)?,
    });
    let pv = parameters(a, json!({}))?;
    let mut dir = match &a.common.out {
        Some(p) => RunDir::create(p.clone())?,
        None => RunDir::create(a.input.clone())?,
    };
    dir.write_json("verify.json", &report)?;
    let summary = json!({
        "max_pohozaev_residual": pohozaev.max_relative_residual(),
        "pohozaev_flagged": pohozaev.flagged,
        "fitted_decay": fitted,
        "nehari_residual": energy.nehari_residual,
        "annulus_alpha": report["annulus"]["alpha"],
    });
    let path = dir.path.clone();
    dir.finish("verify-manifest.json", cmd.name(), &pv, &summary)?;
    Ok(path)
}

fn eig(a: &EigArgs, cmd: &Command) -> Result<PathBuf> {
    let values = radial_dirichlet_eigenvalues(a.dim, a.count)?;
    let pv = parameters(a, json!({}))?;
    let mut dir = run_dir(cmd, &pv)?;
    let rows: Vec<Vec<String>> =
        values.iter().enumerate().map(|(k, l)| vec![(k + 1).to_string(), fmt_f(*l)]).collect();
    dir.write_csv("eig.csv", &["k", "lambda"], &rows)?;
    dir.write_json("eig.json", &json!({ "dim": a.dim, "eigenvalues": values }))?;
    let path = dir.path.clone();
    dir.finish("manifest.json", cmd.name(), &pv, &json!({ "eigenvalues": values }))?;
    Ok(path)
}

fn sobolev(a: &SobolevArgs, cmd: &Command) -> Result<PathBuf> {
    let p = a.problem.p.resolve(a.problem.dim);
    let params = Params::new(a.problem.dim, a.problem.lambda, p)?;
    let controls = MinimizeControls {
        elements: a.elements,
        max_iter: a.max_iter,
        tol: a.tol,
        seed: a.common.seed,
        perturbation: a.perturbation,
    };
    let pv = parameters(a, json!({ "p_resolved": params.p }))?;
    let est = minimize_quotient(&params, &controls)?;
    let reference = if params.is_critical() { Some(euclidean_sobolev_constant(params.dim)?) } else { None };
    let mut dir = run_dir(cmd, &pv)?;
    let rows: Vec<Vec<String>> =
        est.nodes.iter().zip(&est.values).map(|(s, v)| vec![fmt_f(*s), fmt_f(*v)]).collect();
    dir.write_csv("minimizer.csv", &["s", "v"], &rows)?;
    let report = json!({
        "params": params,
        "quotient": est.quotient,
        "initial_quotient": est.initial_quotient,
        "iterations": est.iterations,
        "converged": est.converged,
        "euclidean_constant": reference,
        "ratio_to_euclidean": reference.map(|s| est.quotient / s),
        "history": est.history,
    });
    dir.write_json("sobolev.json", &report)?;
    let summary = json!({
        "quotient": est.quotient,
        "euclidean_constant": reference,
        "converged": est.converged,
    });
    let path = dir.path.clone();
    dir.finish("manifest.json", cmd.name(), &pv, &summary)?;
    Ok(path)
}

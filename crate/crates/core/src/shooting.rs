//! Amplitude shooting for k-node solutions and evidence scans below the threshold.
//!
//! Shots are keyed by `(classification, nodes)`.  Increasing the amplitude
//! through a finite-energy solution with `k` nodes moves the key from
//! `k` nodes with eventual sign `(-1)^k` to `k + 1` nodes with the opposite
//! sign, so bisection on the predicate `nodes <= k` converges to it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    default_tail_window, energy_g, energy_j, fit_tail_decay, pohozaev_check, uniform_bound_ratios,
};
use crate::error::{invalid, Error, Result};
use crate::geometry::{gauge_transform, GaugeDirection, Params};
use crate::radial_ode::{
    classify, integrate, ode_residual, ProfileMeta, RadialProfile, ShotClass, ShotControls, ShotResult,
};

pub const MAX_BISECTIONS: usize = 200;
pub const MAX_NODES: usize = 4;
pub const DEFAULT_TOL_A: f64 = 1e-12;
/// Euclidean radii at which the local Pohozaev balance is evaluated.
pub const POHOZAEV_RADII: [f64; 3] = [0.3, 0.6, 0.9];

/// Samples with smaller magnitude are ignored when counting sign changes.
const NODE_FLOOR: f64 = 1e-13;

/// Strict sign changes between consecutive samples with `|u| >= 1e-13`.
pub fn count_nodes(profile: &RadialProfile) -> Result<usize> {
    if profile.is_trivial() {
        return Err(Error::TrivialProfile);
    }
    let mut last = 0.0;
    let mut nodes = 0;
    for v in profile.values.iter().filter(|v| v.abs() >= NODE_FLOOR) {
        let s = v.signum();
        if last != 0.0 && s != last {
            nodes += 1;
        }
        last = s;
    }
    Ok(nodes)
}

/// `count` log-spaced amplitudes from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..count)
                .map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64))
                .collect()
        }
    }
}

/// 60 log-spaced amplitudes in `[1e-3, 1e3]`.
pub fn default_grid() -> Vec<f64> {
    log_grid(1e-3, 1e3, 60)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub a_lo: f64,
    pub a_hi: f64,
    /// Smaller node count of the two ends: the node count of the solution inside.
    pub k: usize,
    pub lo_key: (ShotClass, usize),
    pub hi_key: (ShotClass, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub amplitude: f64,
    pub class: ShotClass,
    pub nodes: usize,
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.iter().any(|a| !(*a > 0.0 && a.is_finite())) || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("amplitude grid must be positive and strictly increasing"));
    }
    Ok(())
}

/// Integrates every grid amplitude in parallel, keeping only the keys.
pub fn scan_grid(params: &Params, grid: &[f64], controls: &ShotControls) -> Result<Vec<ScanEntry>> {
    check_grid(grid)?;
    grid.par_iter()
        .map(|&a| {
            classify(a, params, controls).map(|s| ScanEntry {
                amplitude: a,
                class: s.class,
                nodes: s.nodes,
            })
        })
        .collect()
}

/// Consecutive grid pairs whose keys differ, skipping undetermined shots.
pub fn brackets_of(entries: &[ScanEntry]) -> Vec<Bracket> {
    entries
        .windows(2)
        .filter(|w| {
            w[0].class != ShotClass::Undetermined
                && w[1].class != ShotClass::Undetermined
                && (w[0].class, w[0].nodes) != (w[1].class, w[1].nodes)
        })
        .map(|w| Bracket {
            a_lo: w[0].amplitude,
            a_hi: w[1].amplitude,
            k: w[0].nodes.min(w[1].nodes),
            lo_key: (w[0].class, w[0].nodes),
            hi_key: (w[1].class, w[1].nodes),
        })
        .collect()
}

pub fn bracket_scan(params: &Params, grid: &[f64], controls: &ShotControls) -> Result<Vec<Bracket>> {
    if grid.is_empty() {
        return Err(Error::Empty("amplitude grid is empty".into()));
    }
    Ok(brackets_of(&scan_grid(params, grid, controls)?))
}

/// A computed solution together with its diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    /// Hyperbolic-gauge profile, cut where the bracketing shots separate.
    pub profile: RadialProfile,
    pub amplitude: f64,
    pub nodes: usize,
    pub energy_j: f64,
    pub energy_g: f64,
    pub nehari_residual: f64,
    /// `(R, relative residual)` of the local Pohozaev balance, Euclidean `R`.
    pub pohozaev_residuals: Vec<(f64, f64)>,
    pub pohozaev_flagged: bool,
    pub fitted_decay: f64,
    /// Fast rate of the linearised tail, the expected value of `fitted_decay`.
    pub expected_decay: f64,
    pub tail_window: (f64, f64),
    pub bound_ratio_51: f64,
    pub bound_ratio_52: f64,
    /// Largest per-interval defect against a tighter re-integration, relative to `|u| + |u'|`.
    pub ode_residual: f64,
    pub max_energy_increase: f64,
    pub bisections: usize,
    pub controls: ShotControls,
    pub tol_a: f64,
}

impl SolutionRecord {
    /// Runs every diagnostic on a decaying hyperbolic-gauge profile.
    pub fn from_profile(
        profile: RadialProfile,
        amplitude: f64,
        controls: ShotControls,
        tol_a: f64,
        bisections: usize,
        max_energy_increase: f64,
    ) -> Result<Self> {
        let params = profile.params;
        let nodes = count_nodes(&profile)?;
        let j = energy_j(&profile)?;
        let v = gauge_transform(&profile, GaugeDirection::HyperbolicToEuclidean)?;
        let g = energy_g(&v)?;
        let s_end = (0.5 * profile.r_end()).tanh();
        let radii: Vec<f64> = POHOZAEV_RADII.iter().copied().filter(|r| *r < s_end).collect();
        let poh = pohozaev_check(&v, &radii)?;
        let window = default_tail_window(&profile)?;
        let fitted_decay = fit_tail_decay(&profile, window)?;
        let (expected_decay, _) = params
            .tail_rates()
            .ok_or_else(|| invalid("tail rates undefined for these parameters"))?;
        let bounds = uniform_bound_ratios(&profile)?;
        let residual = ode_residual(&profile)?;
        Ok(Self {
            amplitude,
            nodes,
            energy_j: j.energy,
            energy_g: g.energy,
            nehari_residual: j.nehari_residual,
            pohozaev_residuals: radii.iter().copied().zip(poh.relative_residual.iter().copied()).collect(),
            pohozaev_flagged: poh.flagged,
            fitted_decay,
            expected_decay,
            tail_window: window,
            bound_ratio_51: bounds.ratio_51,
            bound_ratio_52: bounds.ratio_52,
            ode_residual: residual,
            max_energy_increase,
            bisections,
            controls,
            tol_a,
            profile,
        })
    }

    pub fn params(&self) -> Params {
        self.profile.params
    }
}

/// Relative phase-space gap between the bracketing shots at which the
/// computed profile is cut.
pub const SEPARATION: f64 = 1e-6;

/// Outcome of amplitude bisection before diagnostics.
#[derive(Debug, Clone)]
pub struct Bisection {
    /// Converged shot on the `nodes <= k` side.
    pub inside: ShotResult,
    /// Shot on the other side, absent when a decaying shot was hit directly.
    pub outside: Option<ShotResult>,
    pub iterations: usize,
}

impl Bisection {
    /// Number of leading samples on which both bracketing shots agree to
    /// [`SEPARATION`] in `|u| + |u'|/c`, `c` the fast tail rate.  The true
    /// solution lies between them, so these samples resolve it.
    pub fn resolved_len(&self) -> usize {
        let a = &self.inside.profile;
        let Some(b) = self.outside.as_ref().map(|s| &s.profile) else {
            return a.len();
        };
        let c = a.params.tail_rates().map_or(1.0, |r| r.0);
        let n = a.len().min(b.len());
        (0..n)
            .find(|&i| {
                let gap = (a.values[i] - b.values[i]).abs() + (a.derivs[i] - b.derivs[i]).abs() / c;
                let size = a.values[i].abs() + a.derivs[i].abs() / c;
                gap > SEPARATION * size
            })
            .unwrap_or(n)
    }

    /// The resolved part of the converged shot, marked as decaying.  Fails if
    /// the shots separate before the tail is linear, since the quadratures
    /// then cannot extrapolate past the cut.
    pub fn resolved_profile(&self) -> Result<RadialProfile> {
        let end = self.resolved_len();
        let shot = &self.inside;
        let r_cut = shot.profile.radii[end.saturating_sub(1)];
        match shot.diagnostics.linear_from {
            Some(r_lin) if r_cut >= r_lin => {}
            _ if self.outside.is_none() && shot.class == ShotClass::Decay => {}
            _ => {
                return Err(Error::Numerical(format!(
                    "bracketing shots separate at r = {r_cut} before the linear tail; \
                     amplitude resolution is insufficient"
                )))
            }
        }
        Ok(shot.profile.truncated(end).with_meta(ProfileMeta {
            tol: shot.profile.meta.tol,
            decaying_tail: true,
        }))
    }
}

/// Bisects on the predicate `nodes <= k` until the bracket is below
/// `tol_a` relative to the amplitude.
pub fn bisect_knode(
    params: &Params,
    k: usize,
    bracket: (f64, f64),
    tol_a: f64,
    controls: &ShotControls,
) -> Result<Bisection> {
    if k > MAX_NODES {
        return Err(invalid(format!("node counts above {MAX_NODES} are not searched")));
    }
    if !(tol_a > 0.0) {
        return Err(invalid("amplitude tolerance must be positive"));
    }
    let (lo, hi) = bracket;
    if !(lo.is_finite() && hi.is_finite()) || lo == hi || lo.signum() != hi.signum() || lo == 0.0 {
        return Err(invalid("bracket ends must be distinct, non-zero and of one sign"));
    }
    controls.validate()?;
    let controls = &controls.resolved_for(lo.abs().max(hi.abs()), params);
    let inside_of = |s: &ShotResult| s.nodes <= k;
    let found = |s: &ShotResult| s.class == ShotClass::Decay && s.nodes == k;
    let direct = |s: ShotResult, iterations| Bisection { inside: s, outside: None, iterations };
    let s_lo = integrate(lo, params, controls)?;
    let s_hi = integrate(hi, params, controls)?;
    for s in [&s_lo, &s_hi] {
        if found(s) {
            return Ok(direct(s.clone(), 0));
        }
    }
    if inside_of(&s_lo) == inside_of(&s_hi) {
        return Err(Error::InvalidBracket { lo, hi });
    }
    let (mut inside, mut outside) = if inside_of(&s_lo) { (s_lo, s_hi) } else { (s_hi, s_lo) };
    for iterations in 0..MAX_BISECTIONS {
        let (a_in, a_out) = (inside.amplitude, outside.amplitude);
        let mid = 0.5 * (a_in + a_out);
        if (a_in - a_out).abs() <= tol_a * a_in.abs().max(a_out.abs()) || mid == a_in || mid == a_out {
            return Ok(Bisection { inside, outside: Some(outside), iterations });
        }
        let shot = integrate(mid, params, controls)?;
        if found(&shot) {
            return Ok(direct(shot, iterations + 1));
        }
        if inside_of(&shot) {
            inside = shot;
        } else {
            outside = shot;
        }
    }
    Err(Error::BisectionExhausted(MAX_BISECTIONS))
}

/// Bisects a bracket down to the `k`-node solution it contains.
pub fn find_knode(
    params: &Params,
    k: usize,
    bracket: (f64, f64),
    tol_a: f64,
    controls: &ShotControls,
) -> Result<SolutionRecord> {
    let bis = bisect_knode(params, k, bracket, tol_a, controls)?;
    let profile = bis.resolved_profile()?;
    let nodes = count_nodes(&profile)?;
    if nodes != k || bis.inside.nodes != k {
        return Err(Error::NodeMismatch { expected: k, found: nodes.min(bis.inside.nodes) });
    }
    SolutionRecord::from_profile(
        profile,
        bis.inside.amplitude,
        controls.resolved_for(bracket.0.abs().max(bracket.1.abs()), params),
        tol_a,
        bis.iterations,
        bis.inside.diagnostics.max_energy_increase,
    )
}

/// Scans the grid and solves for the `k`-node solution in the first bracket
/// whose lower node count is `k`.
pub fn solve_knode(
    params: &Params,
    k: usize,
    grid: &[f64],
    tol_a: f64,
    controls: &ShotControls,
) -> Result<SolutionRecord> {
    let brackets = bracket_scan(params, grid, controls)?;
    let b = brackets
        .iter()
        .find(|b| b.k == k && b.lo_key.1 != b.hi_key.1)
        .ok_or_else(|| Error::Empty(format!("no bracket with {k} nodes on the amplitude grid")))?;
    find_knode(params, k, (b.a_lo, b.a_hi), tol_a, controls)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanVerdict {
    ConsistentWithNonexistence,
    DecayFound,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonexistenceReport {
    pub params: Params,
    pub entries: Vec<ScanEntry>,
    pub decay_count: usize,
    pub undetermined_count: usize,
    /// Key changes between neighbouring amplitudes.  A change of eventual
    /// sign forces a finite-energy solution in between, so these are listed
    /// as supplementary evidence.
    pub transitions: Vec<Bracket>,
    pub verdict: ScanVerdict,
}

/// Classifies every grid amplitude for a `λ` at or below `N(N-2)/4`
/// (any admissible `λ` when `N = 3`).  Evidence only, never a proof.
pub fn nonexistence_scan(
    params: &Params,
    grid: &[f64],
    controls: &ShotControls,
) -> Result<NonexistenceReport> {
    if params.lambda > params.window.0 && params.dim != 3 {
        return Err(invalid(format!(
            "λ = {} lies above N(N-2)/4 = {}; the scan is for the nonexistence range",
            params.lambda, params.window.0
        )));
    }
    let entries = if grid.is_empty() { vec![] } else { scan_grid(params, grid, controls)? };
    let decay_count = entries.iter().filter(|e| e.class == ShotClass::Decay).count();
    let undetermined_count = entries.iter().filter(|e| e.class == ShotClass::Undetermined).count();
    let verdict = if entries.is_empty() || undetermined_count == entries.len() {
        ScanVerdict::Undetermined
    } else if decay_count > 0 {
        ScanVerdict::DecayFound
    } else {
        ScanVerdict::ConsistentWithNonexistence
    };
    Ok(NonexistenceReport {
        params: *params,
        transitions: brackets_of(&entries),
        entries,
        decay_count,
        undetermined_count,
        verdict,
    })
}

//! Following k-node solutions along increasing exponents toward `2N/(N-2)`.

use serde::{Deserialize, Serialize};

use crate::diagnostics::quadrature::{uniform_profile, UniformSamples};
use crate::error::{invalid, Error, Result};
use crate::geometry::Params;
use crate::radial_ode::ShotControls;
use crate::shooting::{find_knode, solve_knode, SolutionRecord, MAX_NODES};

/// Factor by which the warm-start bracket is widened after each failure.
const WIDEN: f64 = 1.2;
const MAX_WIDENINGS: usize = 6;
/// Final relative sup-difference below which a branch counts as converged.
pub const CONVERGED_DIFF: f64 = 1e-4;
/// Allowed growth between consecutive differences in the final three steps.
/// The last two steps of a geometric list have equal length, so their
/// differences agree to leading order.
pub const DECREASE_SLACK: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BranchVerdict {
    Converging,
    NonConverging,
    Incomplete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchRecord {
    pub params_base: Params,
    pub k: usize,
    /// Exponents actually solved, in order.
    pub p_sequence: Vec<f64>,
    pub records: Vec<SolutionRecord>,
    /// `sup|u_j - u_{j+1}| / sup|u_{j+1}|` over the common radii of consecutive profiles.
    pub sup_diffs: Vec<f64>,
    pub energies: Vec<f64>,
    pub verdict: BranchVerdict,
    /// Exponent at which the branch was lost, with the reason.
    pub failure: Option<(f64, String)>,
}

/// `count` exponents `2* - δ 2^{-j}` for `j = 0..count-1`, followed by `2*`.
pub fn geometric_p_list(params: &Params, delta: f64, count: usize) -> Result<Vec<f64>> {
    let pc = params.p_crit;
    if !(delta > 0.0 && delta < pc - 2.0) {
        return Err(invalid(format!("offset must lie in (0, {}), got {delta}", pc - 2.0)));
    }
    let mut ps: Vec<f64> = (0..count).map(|j| pc - delta * 0.5f64.powi(j as i32)).collect();
    ps.push(pc);
    Ok(ps)
}

/// Relative sup-norm difference of two profiles on the radii they share,
/// evaluated on the finer of the two grids.
pub fn profile_sup_diff(a: &SolutionRecord, b: &SolutionRecord) -> Result<f64> {
    let (ga, gb) = (uniform_profile(&a.profile)?, uniform_profile(&b.profile)?);
    let (fine, coarse) = if ga.h <= gb.h { (&ga, &gb) } else { (&gb, &ga) };
    let coarse_u = UniformSamples::new(coarse.r0, coarse.h, coarse.values.clone())?;
    let r_hi = fine.r_end().min(coarse.r_end());
    let r_lo = fine.r0.max(coarse.r0);
    let mut diff = 0.0f64;
    for i in 0..fine.len() {
        let r = fine.radius(i);
        if r < r_lo || r > r_hi {
            continue;
        }
        diff = diff.max((fine.values[i] - coarse_u.interpolate(r)).abs());
    }
    let scale = b.profile.sup_norm();
    if scale == 0.0 {
        return Err(Error::TrivialProfile);
    }
    Ok(diff / scale)
}

fn verdict_of(diffs: &[f64], failed: bool) -> BranchVerdict {
    if failed || diffs.len() < 3 {
        return BranchVerdict::Incomplete;
    }
    let t = &diffs[diffs.len() - 3..];
    if t[1] <= DECREASE_SLACK * t[0] && t[2] <= DECREASE_SLACK * t[1] && t[2] < CONVERGED_DIFF {
        BranchVerdict::Converging
    } else {
        BranchVerdict::NonConverging
    }
}

/// Solves at `p`, bracketing around the previous amplitude and widening on failure.
fn warm_solve(
    params: &Params,
    k: usize,
    previous: f64,
    tol_a: f64,
    controls: &ShotControls,
) -> Result<SolutionRecord> {
    let mut factor = WIDEN;
    let mut last = Error::Empty("no attempt made".into());
    for _ in 0..MAX_WIDENINGS {
        match find_knode(params, k, (previous / factor, previous * factor), tol_a, controls) {
            Ok(rec) => return Ok(rec),
            Err(e @ (Error::InvalidBracket { .. } | Error::NodeMismatch { .. } | Error::Numerical(_))) => {
                log::debug!("p = {}: bracket factor {factor} failed: {e}", params.p);
                last = e;
                factor *= factor;
            }
            Err(e) => return Err(e),
        }
    }
    Err(last)
}

/// Solves the `k`-node problem along `p_list`, the first point from a grid
/// scan and later points warm-started from the previous amplitude.
pub fn subcritical_sequence(
    params: &Params,
    k: usize,
    p_list: &[f64],
    grid: &[f64],
    tol_a: f64,
    controls: &ShotControls,
) -> Result<BranchRecord> {
    if k > MAX_NODES {
        return Err(invalid(format!("node counts above {MAX_NODES} are not searched")));
    }
    if p_list.is_empty() {
        return Err(Error::Empty("exponent list is empty".into()));
    }
    if p_list.windows(2).any(|w| !(w[1] > w[0])) || p_list[p_list.len() - 1] > params.p_crit {
        return Err(invalid("exponents must increase strictly and not exceed 2N/(N-2)"));
    }
    let mut branch = BranchRecord {
        params_base: *params,
        k,
        p_sequence: Vec::new(),
        records: Vec::new(),
        sup_diffs: Vec::new(),
        energies: Vec::new(),
        verdict: BranchVerdict::Incomplete,
        failure: None,
    };
    for &p in p_list {
        let pr = params.with_p(p)?;
        let solved = match branch.records.last() {
            None => solve_knode(&pr, k, grid, tol_a, controls),
            Some(prev) => warm_solve(&pr, k, prev.amplitude, tol_a, controls),
        };
        let rec = match solved {
            Ok(rec) => rec,
            Err(e) => {
                log::info!("branch lost at p = {p}: {e}");
                branch.failure = Some((pr.p, e.to_string()));
                break;
            }
        };
        if let Some(prev) = branch.records.last() {
            branch.sup_diffs.push(profile_sup_diff(prev, &rec)?);
        }
        branch.p_sequence.push(pr.p);
        branch.energies.push(rec.energy_j);
        branch.records.push(rec);
    }
    branch.verdict = verdict_of(&branch.sup_diffs, branch.failure.is_some());
    Ok(branch)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompactnessReport {
    pub ratios_52: Vec<f64>,
    pub max_ratio_52: f64,
    pub median_ratio_52: f64,
    /// Every ratio lies within a factor 2 of the median.
    pub within_factor_two: bool,
    /// Some ratio exceeds ten times the first one.
    pub violation: bool,
    /// Ratios of consecutive sup-differences; values below one mean a Cauchy trend.
    pub cauchy_rates: Vec<f64>,
    /// Relative change of the energy over the last step.
    pub final_energy_change: f64,
    pub verdict: BranchVerdict,
}

/// Uniformity of the boundary-decay constant and Cauchy behaviour along a branch.
pub fn compactness_check(branch: &BranchRecord) -> Result<CompactnessReport> {
    let n = branch.records.len();
    if n < 3 {
        return Err(Error::Empty(format!("compactness check needs 3 records, branch has {n}")));
    }
    let ratios: Vec<f64> = branch.records.iter().map(|r| r.bound_ratio_52).collect();
    let mut sorted = ratios.clone();
    sorted.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    let max = sorted[n - 1];
    let e = &branch.energies;
    let last = e[n - 1];
    Ok(CompactnessReport {
        within_factor_two: ratios.iter().all(|r| *r <= 2.0 * median && *r >= 0.5 * median),
        violation: ratios.iter().any(|r| *r > 10.0 * ratios[0]),
        cauchy_rates: branch
            .sup_diffs
            .windows(2)
            .map(|w| if w[0] == 0.0 { 0.0 } else { w[1] / w[0] })
            .collect(),
        final_energy_change: if last == 0.0 { 0.0 } else { ((last - e[n - 2]) / last).abs() },
        max_ratio_52: max,
        median_ratio_52: median,
        ratios_52: ratios,
        verdict: branch.verdict,
    })
}

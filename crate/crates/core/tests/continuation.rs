use hyperbn_core::continuation::{
    compactness_check, geometric_p_list, profile_sup_diff, subcritical_sequence, BranchRecord,
    BranchVerdict, CONVERGED_DIFF,
};
use hyperbn_core::diagnostics::uniform_bound_ratios;
use hyperbn_core::shooting::{log_grid, solve_knode, SolutionRecord};
use hyperbn_core::{Error, Params, ShotControls};
use std::sync::OnceLock;

fn base() -> Params {
    Params::critical(7, 8.9).unwrap()
}

fn grid() -> Vec<f64> {
    log_grid(1e-3, 1e4, 80)
}

/// k = 0 branch starting at 2* - 0.01 and ending at 2*.
fn ground_branch() -> &'static BranchRecord {
    static BRANCH: OnceLock<BranchRecord> = OnceLock::new();
    BRANCH.get_or_init(|| {
        let ps = geometric_p_list(&base(), 0.01, 15).unwrap();
        subcritical_sequence(&base(), 0, &ps, &grid(), 1e-12, &ShotControls::default()).unwrap()
    })
}

#[test]
fn ground_state_branch_converges() {
    let b = ground_branch();
    assert_eq!(b.verdict, BranchVerdict::Converging, "{:?}", b.sup_diffs);
    assert!(b.failure.is_none());
    assert_eq!(b.records.len(), 16);
    assert!(b.records.iter().all(|r| r.nodes == 0));
    assert!(*b.sup_diffs.last().unwrap() < CONVERGED_DIFF);
    assert!(b.p_sequence.windows(2).all(|w| w[1] > w[0]));
    assert_eq!(*b.p_sequence.last().unwrap(), base().p_crit);
}

#[test]
fn branch_energies_approach_the_direct_critical_solve() {
    let b = ground_branch();
    let direct = solve_knode(&base(), 0, &grid(), 1e-12, &ShotControls::default()).unwrap();
    let n = b.energies.len();
    let last_sub = b.energies[n - 2];
    assert!(((last_sub - direct.energy_j) / direct.energy_j).abs() < 1e-4);
    assert!(b.energies.iter().all(|e| e.is_finite() && *e > 0.0));
}

#[test]
fn warm_and_cold_solves_agree() {
    let b = ground_branch();
    for i in [3, 9, 15] {
        let p = b.p_sequence[i];
        let cold = solve_knode(&base().with_p(p).unwrap(), 0, &grid(), 1e-12, &ShotControls::default())
            .unwrap();
        let warm = b.records[i].amplitude;
        assert!(((warm - cold.amplitude) / cold.amplitude).abs() < 1e-10, "p = {p}");
    }
}

#[test]
fn ground_branch_bound_ratios_are_uniform() {
    let rep = compactness_check(ground_branch()).unwrap();
    assert!(rep.within_factor_two, "{:?}", rep.ratios_52);
    assert!(!rep.violation);
    assert!(rep.ratios_52.iter().all(|r| r.is_finite()));
    assert!(rep.final_energy_change < 1e-4);
}

#[test]
fn single_entry_branch_is_incomplete() {
    let b = subcritical_sequence(&base(), 0, &[2.7], &grid(), 1e-12, &ShotControls::default()).unwrap();
    assert_eq!(b.records.len(), 1);
    assert!(b.sup_diffs.is_empty());
    assert_eq!(b.verdict, BranchVerdict::Incomplete);
    assert!(matches!(compactness_check(&b), Err(Error::Empty(_))));
}

#[test]
fn invalid_exponent_lists_are_rejected() {
    let c = ShotControls::default();
    assert!(subcritical_sequence(&base(), 0, &[], &grid(), 1e-12, &c).is_err());
    assert!(subcritical_sequence(&base(), 0, &[2.7, 2.6], &grid(), 1e-12, &c).is_err());
    assert!(subcritical_sequence(&base(), 0, &[2.7, 2.9], &grid(), 1e-12, &c).is_err());
    assert!(subcritical_sequence(&base(), 5, &[2.7], &grid(), 1e-12, &c).is_err());
}

#[test]
fn lost_branch_is_recorded() {
    // the one-node branch does not survive a jump from 2.6 straight to 2*
    let ps = [2.6, base().p_crit];
    let b = subcritical_sequence(&base(), 1, &ps, &grid(), 1e-12, &ShotControls::default()).unwrap();
    assert_eq!(b.records.len(), 1);
    assert_eq!(b.records[0].nodes, 1);
    assert_eq!(b.verdict, BranchVerdict::Incomplete);
    let (p, reason) = b.failure.as_ref().unwrap();
    assert_eq!(*p, base().p_crit);
    assert!(!reason.is_empty());
}

fn synthetic(records: Vec<SolutionRecord>) -> BranchRecord {
    let diffs = records
        .windows(2)
        .map(|w| profile_sup_diff(&w[0], &w[1]).unwrap())
        .collect::<Vec<_>>();
    BranchRecord {
        params_base: base(),
        k: 0,
        p_sequence: (0..records.len()).map(|i| 2.7 + 0.01 * i as f64).collect(),
        energies: records.iter().map(|r| r.energy_j).collect(),
        records,
        sup_diffs: diffs,
        verdict: BranchVerdict::Incomplete,
        failure: None,
    }
}

#[test]
fn constant_branch_has_zero_differences() {
    let rec = ground_branch().records[5].clone();
    let b = synthetic(vec![rec.clone(), rec.clone(), rec.clone(), rec]);
    assert!(b.sup_diffs.iter().all(|d| *d == 0.0));
    let rep = compactness_check(&b).unwrap();
    assert!(!rep.violation && rep.within_factor_two);
    assert!(rep.cauchy_rates.iter().all(|r| *r == 0.0));
    assert_eq!(rep.final_energy_change, 0.0);
}

#[test]
fn injected_concentration_is_flagged() {
    // replace the profile by a bubble concentrating at the origin with scale μ
    let template = ground_branch().records[5].clone();
    let n = base().n();
    let records: Vec<SolutionRecord> = [1.0, 0.3, 0.1, 0.03]
        .iter()
        .map(|&mu: &f64| {
            let mut rec = template.clone();
            let prof = &mut rec.profile;
            for i in 0..prof.len() {
                let s = (0.5 * prof.radii[i]).tanh();
                let bubble = (mu / (mu * mu + s * s)).powf(0.5 * (n - 2.0));
                let w = (1.0 - s * s).powf(0.5 * (n - 1.0));
                prof.values[i] = bubble * w;
            }
            rec.bound_ratio_52 = uniform_bound_ratios(prof).unwrap().ratio_52;
            rec
        })
        .collect();
    let b = synthetic(records);
    let rep = compactness_check(&b).unwrap();
    assert!(rep.violation, "{:?}", rep.ratios_52);
    assert!(rep.ratios_52.windows(2).all(|w| w[1] > w[0]));
}

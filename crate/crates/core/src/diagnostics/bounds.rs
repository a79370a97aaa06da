//! Weighted sup-norms measuring how fast a profile vanishes at the ideal boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radial_ode::{Gauge, RadialProfile};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundRatios {
    /// `sup |u| s^{N/2} (1-s^2)^{-(N-1)/2}`.
    pub ratio_51: f64,
    /// `sup |u| (1-s^2)^{-(N-1)/2}`.
    pub ratio_52: f64,
}

/// Both ratios over the stored samples of a hyperbolic-gauge profile.
///
/// With `s = tanh(r/2)` one has `(1-s^2)^{-1} = cosh^2(r/2)`, so the weights
/// are evaluated in logarithms to stay finite far out.
pub fn uniform_bound_ratios(profile: &RadialProfile) -> Result<BoundRatios> {
    if profile.gauge != Gauge::Hyperbolic {
        return Err(Error::GaugeMismatch {
            expected: "Hyperbolic".into(),
            found: format!("{:?}", profile.gauge),
        });
    }
    let n = profile.params.n();
    let mut out = BoundRatios { ratio_51: 0.0, ratio_52: 0.0 };
    for (r, u) in profile.radii.iter().zip(&profile.values) {
        if *u == 0.0 {
            continue;
        }
        let half = 0.5 * r;
        let ln_cosh = half + (-2.0 * half).exp().ln_1p() - std::f64::consts::LN_2;
        let ln_w52 = (n - 1.0) * ln_cosh;
        let ln_u = u.abs().ln();
        out.ratio_52 = out.ratio_52.max((ln_u + ln_w52).exp());
        if *r > 0.0 {
            let ln_s = half.tanh().ln();
            out.ratio_51 = out.ratio_51.max((ln_u + ln_w52 + 0.5 * n * ln_s).exp());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Params;

    fn profile(dim: usize, f: impl Fn(f64) -> f64) -> RadialProfile {
        let radii: Vec<f64> = (0..=2000).map(|i| 0.01 * i as f64).collect();
        let pr = Params::critical(dim, 0.0).unwrap();
        RadialProfile::from_fn(radii, Gauge::Hyperbolic, pr, |r| (f(r), 0.0)).unwrap()
    }

    #[test]
    fn zero_profile() {
        let b = uniform_bound_ratios(&profile(5, |_| 0.0)).unwrap();
        assert_eq!((b.ratio_51, b.ratio_52), (0.0, 0.0));
    }

    #[test]
    fn saturating_profile_has_unit_ratio() {
        for dim in [3, 5, 7] {
            let k = (dim as f64 - 1.0) / 2.0;
            // (1 - s^2)^{(N-1)/2} = cosh(r/2)^{-(N-1)}
            let b = uniform_bound_ratios(&profile(dim, |r| (0.5 * r).cosh().powf(-2.0 * k))).unwrap();
            assert!((b.ratio_52 - 1.0).abs() < 1e-13, "{}", b.ratio_52);
            assert!(b.ratio_51 <= b.ratio_52 * (1.0 + 1e-13));
        }
    }

    #[test]
    fn slower_decay_gives_larger_ratio() {
        let fast = uniform_bound_ratios(&profile(5, |r| (-2.5 * r).exp())).unwrap();
        let slow = uniform_bound_ratios(&profile(5, |r| (-1.5 * r).exp())).unwrap();
        assert!(slow.ratio_52 > fast.ratio_52);
        assert!(fast.ratio_52.is_finite());
    }
}

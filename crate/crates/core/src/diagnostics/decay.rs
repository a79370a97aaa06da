//! Tail decay rates: the a priori exponent and least-squares fits.

use crate::diagnostics::quadrature::least_squares_slope;
use crate::error::{invalid, Error, Result};
use crate::radial_ode::{Gauge, RadialProfile};

/// `(c_λ, c_lin)` with `c_lin = ((N-1) + sqrt((N-1)^2 - 4λ))/2` the fast
/// rate of the linearised tail and `c_λ = min(c_lin, (N+2)/2)`.
pub fn decay_exponent(dim: usize, lambda: f64) -> Result<(f64, f64)> {
    if dim < 3 {
        return Err(invalid(format!("dimension must be at least 3, got {dim}")));
    }
    let n1 = dim as f64 - 1.0;
    let disc = n1 * n1 - 4.0 * lambda;
    if !(disc > 0.0) {
        return Err(invalid(format!(
            "λ = {lambda} must lie below (N-1)^2/4 = {}",
            n1 * n1 / 4.0
        )));
    }
    let c_lin = 0.5 * (n1 + disc.sqrt());
    Ok((c_lin.min(0.5 * (dim as f64 + 2.0)), c_lin))
}

/// Negated least-squares slope of `ln|u|` against `r` over `[r_a, r_b]`.
pub fn fit_tail_decay(profile: &RadialProfile, window: (f64, f64)) -> Result<f64> {
    if profile.gauge != Gauge::Hyperbolic {
        return Err(Error::GaugeMismatch {
            expected: "Hyperbolic".into(),
            found: format!("{:?}", profile.gauge),
        });
    }
    let (ra, rb) = window;
    if !(ra < rb) || ra < profile.radii[0] || rb > profile.r_end() {
        return Err(invalid(format!(
            "window [{ra}, {rb}] not inside profile support [{}, {}]",
            profile.radii[0],
            profile.r_end()
        )));
    }
    let mut pts = Vec::new();
    let mut sign = 0.0;
    for (r, u) in profile.radii.iter().zip(&profile.values) {
        if *r < ra || *r > rb {
            continue;
        }
        if *u == 0.0 {
            return Err(invalid(format!("profile vanishes at r = {r} inside the fit window")));
        }
        if sign != 0.0 && u.signum() != sign {
            return Err(invalid("fit window contains a node"));
        }
        sign = u.signum();
        pts.push((*r, u.abs().ln()));
    }
    if pts.len() < 2 {
        return Err(Error::Empty("fewer than two samples in the fit window".into()));
    }
    Ok(-least_squares_slope(&pts))
}

/// Default fit window: the final 30% of the stretch between the last node
/// (or the origin) and the radius past which `|u| < 1e-12` for good.
pub fn default_tail_window(profile: &RadialProfile) -> Result<(f64, f64)> {
    let n = profile.len();
    let stop = profile
        .values
        .iter()
        .rposition(|u| u.abs() >= 1e-12)
        .map_or(0, |i| (i + 1).min(n - 1));
    let start = (1..=stop)
        .rev()
        .find(|&i| profile.values[i - 1].signum() != profile.values[i].signum())
        .unwrap_or(0);
    let (ra, rb) = (profile.radii[start], profile.radii[stop]);
    if !(rb > ra) {
        return Err(Error::Empty("no decaying stretch in profile".into()));
    }
    Ok((rb - 0.3 * (rb - ra), rb))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Params;
    use approx::assert_relative_eq;

    fn synthetic(f: impl Fn(f64) -> f64) -> RadialProfile {
        let radii: Vec<f64> = (0..=3000).map(|i| 0.01 * i as f64).collect();
        RadialProfile::from_fn(radii, Gauge::Hyperbolic, Params::critical(5, 3.9).unwrap(), |r| {
            (f(r), 0.0)
        })
        .unwrap()
    }

    #[test]
    fn exponent_examples() {
        assert_eq!(decay_exponent(4, 2.0).unwrap(), (2.0, 2.0));
        assert_eq!(decay_exponent(3, 0.0).unwrap(), (2.0, 2.0));
        let (c, lin) = decay_exponent(6, 5.0).unwrap();
        assert_relative_eq!(lin, (5.0 + 5f64.sqrt()) / 2.0, epsilon = 1e-15);
        assert_eq!(c, lin);
        assert!(decay_exponent(5, 4.0).is_err());
        assert!(decay_exponent(2, 0.0).is_err());
    }

    #[test]
    fn fit_recovers_exponentials() {
        let prof = synthetic(|r| (-3.0 * r).exp());
        assert_relative_eq!(fit_tail_decay(&prof, (5.0, 20.0)).unwrap(), 3.0, epsilon = 1e-10);
        let prof = synthetic(|r| (1.0 + r.cosh()).powi(-2));
        let near = fit_tail_decay(&prof, (2.0, 4.0)).unwrap();
        let far = fit_tail_decay(&prof, (20.0, 25.0)).unwrap();
        assert!((far - 2.0).abs() < (near - 2.0).abs());
        assert!((far - 2.0).abs() < 1e-8);
    }

    #[test]
    fn fit_rejects_nodes_and_bad_windows() {
        let prof = synthetic(|r| (r - 10.0) * (-r).exp());
        assert!(fit_tail_decay(&prof, (5.0, 15.0)).is_err());
        assert!(fit_tail_decay(&prof, (12.0, 40.0)).is_err());
        assert!(fit_tail_decay(&prof, (12.0, 11.0)).is_err());
    }

    #[test]
    fn default_window_follows_last_node() {
        let prof = synthetic(|r| (r - 2.0) * (-r).exp());
        let (a, b) = default_tail_window(&prof).unwrap();
        assert!((b - 30.0).abs() < 1e-9);
        assert!((a - (b - 0.3 * (b - 2.0))).abs() < 0.01);
    }
}

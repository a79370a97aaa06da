//! Local Pohozaev balance for radial solutions in the Euclidean gauge.
//!
//! Multiplying `-Δv - λ̃W²v = W^q|v|^{p-2}v` by `s^N v'` and integrating over
//! `[0, R]` gives, after the sphere area factor,
//!
//! ```text
//! (2-N)/2 ∫ s^{N-1} v'^2 + λ̃N/2 ∫ W^2 v^2 s^{N-1} + λ̃ ∫ W^3 v^2 s^{N+1}
//!   + N/p ∫ |v|^p W^q s^{N-1} + q/p ∫ |v|^p W^{q+1} s^{N+1}
//!   - R^N v'(R)^2/2 - λ̃/2 R^N W(R)^2 v(R)^2 - 1/p R^N |v(R)|^p W(R)^q = 0
//! ```
//!
//! using `W' = sW^2`.  Each term is reported separately.

use serde::{Deserialize, Serialize};

use crate::diagnostics::energy::sphere_area;
use crate::diagnostics::quadrature::{radial_integral, uniform_profile};
use crate::error::{invalid, Error, Result};
use crate::geometry::{conformal_factor, geodesic_radius};
use crate::radial_ode::{Gauge, RadialProfile};

/// Relative residual above which a balance is flagged.
pub const FLAG_THRESHOLD: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTerm {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PohozaevReport {
    /// Euclidean radii of the balls.
    pub radii_r: Vec<f64>,
    pub interior_terms: Vec<Vec<NamedTerm>>,
    pub boundary_terms: Vec<Vec<NamedTerm>>,
    pub residual: Vec<f64>,
    pub normalizer: Vec<f64>,
    pub relative_residual: Vec<f64>,
    /// `-4λ̃ ∫_B (1+s^2)/(1-s^2)^3 v^2`, reported only when `λ̃ <= 0`.
    pub global_term: Option<f64>,
    /// Some balance exceeded [`FLAG_THRESHOLD`]: the profile does not solve the equation.
    pub flagged: bool,
}

impl PohozaevReport {
    pub fn max_relative_residual(&self) -> f64 {
        self.relative_residual.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

fn term(name: &str, value: f64) -> NamedTerm {
    NamedTerm { name: name.into(), value }
}

pub fn pohozaev_check(profile: &RadialProfile, radii: &[f64]) -> Result<PohozaevReport> {
    if profile.gauge != Gauge::Euclidean {
        return Err(Error::GaugeMismatch {
            expected: "Euclidean".into(),
            found: format!("{:?}", profile.gauge),
        });
    }
    let pr = profile.params;
    let (n, p, q, lt) = (pr.n(), pr.p, pr.q, pr.lambda_tilde);
    let omega = sphere_area(pr.dim);
    let grid = uniform_profile(profile)?;
    let wq = |w: f64| if q == 0.0 { 1.0 } else { w.powf(q) };

    let mut report = PohozaevReport {
        radii_r: radii.to_vec(),
        interior_terms: Vec::new(),
        boundary_terms: Vec::new(),
        residual: Vec::new(),
        normalizer: Vec::new(),
        relative_residual: Vec::new(),
        global_term: None,
        flagged: false,
    };
    for &big_r in radii {
        if !(big_r > 0.0 && big_r < 1.0) {
            return Err(invalid(format!("ball radius must lie in (0, 1), got {big_r}")));
        }
        let r_b = geodesic_radius(big_r)?;
        if r_b > grid.r_end() || r_b < grid.r0 {
            return Err(Error::OutOfDomain(format!(
                "ball radius {big_r} (r = {r_b}) outside the profile support"
            )));
        }
        // ∫_0^R g ds, evaluated in r
        let ds = |g: &dyn Fn(f64, f64, f64, f64, f64) -> f64| -> Result<f64> {
            Ok(omega
                * radial_integral(&grid, Some(r_b), false, |r, v, dv| {
                    let w = conformal_factor(r);
                    let s = (0.5 * r).tanh();
                    g(s, w, v, dv, s.powf(n - 1.0)) / w
                })?)
        };
        let interior = vec![
            term("gradient", (2.0 - n) / 2.0 * ds(&|_, _, _, dv, sn| dv * dv * sn)?),
            term(
                "potential_volume",
                lt * n / 2.0 * ds(&|_, w, v, _, sn| w * w * v * v * sn)?,
            ),
            term(
                "potential_weight",
                lt * ds(&|s, w, v, _, sn| w * w * w * v * v * sn * s * s)?,
            ),
            term(
                "nonlinear_volume",
                n / p * ds(&|_, w, v, _, sn| v.abs().powf(p) * wq(w) * sn)?,
            ),
            term(
                "nonlinear_weight",
                q / p * ds(&|s, w, v, _, sn| v.abs().powf(p) * wq(w) * w * sn * s * s)?,
            ),
        ];
        let (v, dv) = grid.state_at(r_b);
        let w = conformal_factor(r_b);
        let rn = omega * big_r.powf(n);
        let boundary = vec![
            term("gradient_flux", -0.5 * rn * dv * dv),
            term("potential_flux", -0.5 * lt * rn * w * w * v * v),
            term("nonlinear_flux", -rn * v.abs().powf(p) * wq(w) / p),
        ];
        let all = interior.iter().chain(&boundary);
        let residual: f64 = all.clone().map(|t| t.value).sum();
        let normalizer = all.fold(0.0f64, |m, t| m.max(t.value.abs()));
        let relative = if normalizer == 0.0 { 0.0 } else { residual / normalizer };
        report.flagged |= relative.abs() > FLAG_THRESHOLD;
        report.interior_terms.push(interior);
        report.boundary_terms.push(boundary);
        report.residual.push(residual);
        report.normalizer.push(normalizer);
        report.relative_residual.push(relative);
    }
    if lt < 0.0 && profile.meta.decaying_tail {
        // (1+s^2)/(1-s^2)^3 = (1+s^2) W^3 / 8
        let integral = radial_integral(&grid, None, true, |r, v, _| {
            let w = conformal_factor(r);
            let s = (0.5 * r).tanh();
            (1.0 + s * s) * w * w * v * v * s.powf(n - 1.0) / 8.0
        })?;
        report.global_term = Some(-4.0 * lt * omega * integral);
    } else if lt == 0.0 {
        report.global_term = Some(0.0);
    }
    Ok(report)
}

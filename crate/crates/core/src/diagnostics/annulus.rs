//! Gradient mass of a profile in thin annuli at the ideal boundary.

use serde::{Deserialize, Serialize};

use crate::diagnostics::quadrature::{least_squares_slope, tail_rate, uniform_profile};
use crate::error::{invalid, Error, Result};
use crate::geometry::{conformal_factor, geodesic_radius};
use crate::radial_ode::{Gauge, RadialProfile};

pub const DEFAULT_EPS: [f64; 6] = [0.1, 0.05, 0.025, 0.0125, 0.00625, 0.003125];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnulusFit {
    pub eps: Vec<f64>,
    /// `∫_{1-2ε < s < 1-ε} |v'|^2 s^{N-1} ds` per ε (without the sphere area).
    /// Profiles marked as ending in a decaying tail are continued exponentially.
    pub integrals: Vec<f64>,
    /// Least-squares slope of `ln ∫` against `ln ε`.
    pub alpha: f64,
}

pub fn annulus_gradient_scaling(profile: &RadialProfile, eps: &[f64]) -> Result<AnnulusFit> {
    if profile.gauge != Gauge::Euclidean {
        return Err(Error::GaugeMismatch {
            expected: "Euclidean".into(),
            found: format!("{:?}", profile.gauge),
        });
    }
    if eps.len() < 2 {
        return Err(invalid("need at least two annulus widths"));
    }
    if eps.iter().any(|e| !(*e > 0.0 && *e < 0.2)) || eps.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(invalid("annulus widths must decrease inside (0, 0.2)"));
    }
    let grid = uniform_profile(profile)?;
    let n1 = profile.params.n() - 1.0;
    let samples = grid.samples(|r, _, dv| {
        let s = (0.5 * r).tanh();
        dv * dv * s.powf(n1) / conformal_factor(r)
    });
    let end = grid.r_end();
    let tail = if profile.meta.decaying_tail { tail_rate(&samples) } else { None };
    let f_end = *samples.values.last().expect("non-empty samples");
    let mut integrals = Vec::with_capacity(eps.len());
    for &e in eps {
        let (ra, rb) = (geodesic_radius(1.0 - 2.0 * e)?, geodesic_radius(1.0 - e)?);
        if ra < grid.r0 {
            return Err(Error::OutOfDomain(format!("annulus for ε = {e} starts before the first sample")));
        }
        let inside = if ra < end { samples.integral(ra, rb.min(end))? } else { 0.0 };
        let beyond = match tail {
            _ if rb <= end => 0.0,
            // exponential continuation f_end e^{-κ(r - end)} of a decaying tail
            Some(kappa) => {
                let from = ra.max(end) - end;
                f_end / kappa * ((-kappa * from).exp() - (-kappa * (rb - end)).exp())
            }
            None => {
                return Err(Error::OutOfDomain(format!(
                    "annulus for ε = {e} reaches r = {rb}, beyond the profile end {end}"
                )))
            }
        };
        integrals.push(inside + beyond);
    }
    if integrals.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Numerical("gradient vanishes on an annulus".into()));
    }
    let pts: Vec<(f64, f64)> = eps.iter().zip(&integrals).map(|(e, v)| (e.ln(), v.ln())).collect();
    Ok(AnnulusFit { eps: eps.to_vec(), integrals, alpha: least_squares_slope(&pts) })
}

//! Energy functionals in both gauges and the Nehari balance.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::diagnostics::quadrature::{radial_integral, uniform_profile, UniformProfile};
use crate::error::{Error, Result};
use crate::geometry::conformal_factor;
use crate::radial_ode::{Gauge, RadialProfile};

/// Area of the unit sphere `S^{N-1}`, `2 π^{N/2} / Γ(N/2)`.
pub fn sphere_area(dim: usize) -> f64 {
    let n = dim as f64;
    (std::f64::consts::LN_2 + 0.5 * n * std::f64::consts::PI.ln() - ln_gamma(0.5 * n)).exp()
}

/// The three integrals of an energy, each including the sphere area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyTerms {
    pub gradient: f64,
    /// `∫ u^2` (hyperbolic) or `∫ W^2 v^2` (Euclidean).
    pub mass: f64,
    /// `∫ |u|^p` (hyperbolic) or `∫ |v|^p W^q` (Euclidean).
    pub nonlinear: f64,
    pub energy: f64,
    /// `gradient - λ mass - nonlinear`, relative to the largest of the three.
    pub nehari_residual: f64,
}

fn check(profile: &RadialProfile, gauge: Gauge) -> Result<()> {
    if profile.gauge != gauge {
        return Err(Error::GaugeMismatch {
            expected: format!("{gauge:?}"),
            found: format!("{:?}", profile.gauge),
        });
    }
    if !profile.meta.decaying_tail && !profile.is_trivial() {
        return Err(Error::NotADecayingProfile(
            "energies are defined only for profiles on the decaying branch".into(),
        ));
    }
    Ok(())
}

fn assemble(gradient: f64, mass: f64, nonlinear: f64, lambda: f64, p: f64) -> EnergyTerms {
    let scale = gradient.abs().max((lambda * mass).abs()).max(nonlinear.abs());
    let nehari = gradient - lambda * mass - nonlinear;
    EnergyTerms {
        gradient,
        mass,
        nonlinear,
        energy: 0.5 * gradient - 0.5 * lambda * mass - nonlinear / p,
        nehari_residual: if scale == 0.0 { 0.0 } else { nehari / scale },
    }
}

fn integral(grid: &UniformProfile, g: impl Fn(f64, f64, f64) -> f64) -> Result<f64> {
    radial_integral(grid, None, true, g)
}

/// `J(u) = ½∫|∇u|² - (λ/2)∫u² - (1/p)∫|u|^p` with the hyperbolic volume
/// `ω_{N-1} sinh^{N-1}(r) dr`.
pub fn energy_j(profile: &RadialProfile) -> Result<EnergyTerms> {
    check(profile, Gauge::Hyperbolic)?;
    let pr = profile.params;
    if profile.is_trivial() {
        return Ok(assemble(0.0, 0.0, 0.0, pr.lambda, pr.p));
    }
    let grid = uniform_profile(profile)?;
    let n1 = pr.n() - 1.0;
    let omega = sphere_area(pr.dim);
    let vol = |r: f64| r.sinh().powf(n1);
    let gradient = omega * integral(&grid, |r, _, du| du * du * vol(r))?;
    let mass = omega * integral(&grid, |r, u, _| u * u * vol(r))?;
    let nonlinear = omega * integral(&grid, |r, u, _| u.abs().powf(pr.p) * vol(r))?;
    Ok(assemble(gradient, mass, nonlinear, pr.lambda, pr.p))
}

/// `G(v) = ½∫|∇v|² - (λ̃/2)∫W²v² - (1/p)∫|v|^p W^q` over the Euclidean ball,
/// `W = 2/(1-s^2)`.  Integrals in `s` are taken in `r` using `ds = dr/W`.
pub fn energy_g(profile: &RadialProfile) -> Result<EnergyTerms> {
    check(profile, Gauge::Euclidean)?;
    let pr = profile.params;
    if profile.is_trivial() {
        return Ok(assemble(0.0, 0.0, 0.0, pr.lambda_tilde, pr.p));
    }
    let grid = uniform_profile(profile)?;
    let n1 = pr.n() - 1.0;
    let omega = sphere_area(pr.dim);
    let meas = |r: f64| (0.5 * r).tanh().powf(n1) / conformal_factor(r);
    let gradient = omega * integral(&grid, |r, _, dv| dv * dv * meas(r))?;
    let mass = omega
        * integral(&grid, |r, v, _| {
            let w = conformal_factor(r);
            w * w * v * v * meas(r)
        })?;
    let nonlinear = omega
        * integral(&grid, |r, v, _| {
            let wq = if pr.q == 0.0 { 1.0 } else { conformal_factor(r).powf(pr.q) };
            v.abs().powf(pr.p) * wq * meas(r)
        })?;
    Ok(assemble(gradient, mass, nonlinear, pr.lambda_tilde, pr.p))
}

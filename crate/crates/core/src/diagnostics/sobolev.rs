//! Poincaré-Sobolev quotients in the Euclidean gauge.
//!
//! `Q(v) = (∫|∇v|² - λ̃∫W²v²) / (∫|v|^p W^q)^{2/p}` on the unit ball with
//! `W = 2/(1-s²)` and `λ̃ = λ - N(N-2)/4`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::diagnostics::energy::sphere_area;
use crate::diagnostics::quadrature::{radial_integral, uniform_profile};
use crate::error::{invalid, Error, Result};
use crate::geometry::{conformal_factor, Params};
use crate::radial_ode::{Gauge, RadialProfile};

/// Best constant of `S ‖v‖²_{2N/(N-2)} <= ‖∇v‖²_2` on `R^N`,
/// `π N (N-2) (Γ(N/2)/Γ(N))^{2/N}`.
pub fn euclidean_sobolev_constant(dim: usize) -> Result<f64> {
    if dim < 3 {
        return Err(invalid(format!("dimension must be at least 3, got {dim}")));
    }
    let n = dim as f64;
    let ratio = (2.0 / n) * (ln_gamma(n / 2.0) - ln_gamma(n));
    Ok(std::f64::consts::PI * n * (n - 2.0) * ratio.exp())
}

fn check_params(params: &Params) -> Result<()> {
    if params.lambda > params.window.1 {
        return Err(invalid(format!(
            "λ = {} exceeds (N-1)^2/4 = {}",
            params.lambda, params.window.1
        )));
    }
    Ok(())
}

/// Quotient of a sampled Euclidean-gauge profile, with the exponent, weight
/// and shift taken from `params`.
pub fn sobolev_quotient(profile: &RadialProfile, params: &Params) -> Result<f64> {
    if profile.gauge != Gauge::Euclidean {
        return Err(Error::GaugeMismatch {
            expected: "Euclidean".into(),
            found: format!("{:?}", profile.gauge),
        });
    }
    check_params(params)?;
    if profile.is_trivial() {
        return Err(Error::TrivialProfile);
    }
    let grid = uniform_profile(profile)?;
    let tail = profile.meta.decaying_tail;
    let n1 = params.n() - 1.0;
    let meas = |r: f64| (0.5 * r).tanh().powf(n1) / conformal_factor(r);
    let (p, q) = (params.p, params.q);
    let gradient = radial_integral(&grid, None, tail, |r, _, dv| dv * dv * meas(r))?;
    let mass = radial_integral(&grid, None, tail, |r, v, _| {
        let w = conformal_factor(r);
        w * w * v * v * meas(r)
    })?;
    let nonlinear = radial_integral(&grid, None, tail, |r, v, _| {
        v.abs().powf(p) * conformal_factor(r).powf(q) * meas(r)
    })?;
    quotient_of(sphere_area(params.dim), gradient - params.lambda_tilde * mass, nonlinear, p)
}

fn quotient_of(omega: f64, numerator: f64, denominator: f64, p: f64) -> Result<f64> {
    if !(denominator > 0.0) || !denominator.is_finite() {
        return Err(Error::Numerical(format!("denominator {denominator} is not positive and finite")));
    }
    let q = omega * numerator / (omega * denominator).powf(2.0 / p);
    if !q.is_finite() {
        return Err(Error::Numerical("quotient overflowed".into()));
    }
    Ok(q)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimizeControls {
    /// Number of elements; nodes sit at `s_i = (i/M)^3`.
    pub elements: usize,
    pub max_iter: usize,
    /// Stop once an iteration lowers the quotient by less than this, relatively.
    pub tol: f64,
    pub seed: u64,
    /// Scale of the random perturbation applied to the initial bubble.
    pub perturbation: f64,
}

impl Default for MinimizeControls {
    fn default() -> Self {
        Self { elements: 400, max_iter: 3000, tol: 1e-12, seed: 0, perturbation: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolevEstimate {
    pub quotient: f64,
    pub initial_quotient: f64,
    pub iterations: usize,
    /// The last step met `tol`; otherwise the last iterate is reported.
    pub converged: bool,
    /// Node radii `s_i`, the last one at `s = 1`.
    pub nodes: Vec<f64>,
    /// Nodal values normalized to `∫|v|^p W^q = 1` (without the sphere area).
    pub values: Vec<f64>,
    /// Quotient after every tenth iteration.
    pub history: Vec<f64>,
}

const GL_T: [f64; 8] = [
    0.019_855_071_751_231_88,
    0.101_666_761_293_186_6,
    0.237_233_795_041_835_5,
    0.408_282_678_752_175_1,
    0.591_717_321_247_824_9,
    0.762_766_204_958_164_5,
    0.898_333_238_706_813_4,
    0.980_144_928_248_768_1,
];
const GL_WT: [f64; 8] = [
    0.050_614_268_145_188_13,
    0.111_190_517_226_687_2,
    0.156_853_322_938_943_6,
    0.181_341_891_689_181_0,
    0.181_341_891_689_181_0,
    0.156_853_322_938_943_6,
    0.111_190_517_226_687_2,
    0.050_614_268_145_188_13,
];

/// Piecewise linear radial functions on a graded grid with zero value at `s = 1`.
struct Fem {
    s: Vec<f64>,
    /// `∫ s^{N-1} ds / h²` per element.
    stiff: Vec<f64>,
    /// `W² s^{N-1} h w_k` per element and Gauss point.
    mass_w: Vec<[f64; 8]>,
    /// `W^q s^{N-1} h w_k` per element and Gauss point.
    nl_w: Vec<[f64; 8]>,
    lambda_tilde: f64,
    p: f64,
}

struct Evaluation {
    numerator: f64,
    denominator: f64,
    quotient: f64,
}

impl Fem {
    fn new(params: &Params, elements: usize) -> Self {
        let n = params.n();
        let s: Vec<f64> = (0..=elements).map(|i| (i as f64 / elements as f64).powi(3)).collect();
        let mut stiff = Vec::with_capacity(elements);
        let mut mass_w = Vec::with_capacity(elements);
        let mut nl_w = Vec::with_capacity(elements);
        for e in 0..elements {
            let (a, b) = (s[e], s[e + 1]);
            let h = b - a;
            stiff.push((b.powf(n) - a.powf(n)) / (n * h * h));
            let mut mw = [0.0; 8];
            let mut nw = [0.0; 8];
            for k in 0..8 {
                let x = a + h * GL_T[k];
                let w = 2.0 / ((1.0 - x) * (1.0 + x));
                let base = x.powf(n - 1.0) * h * GL_WT[k];
                mw[k] = w * w * base;
                nw[k] = w.powf(params.q) * base;
            }
            mass_w.push(mw);
            nl_w.push(nw);
        }
        Self { s, stiff, mass_w, nl_w, lambda_tilde: params.lambda_tilde, p: params.p }
    }

    fn elements(&self) -> usize {
        self.stiff.len()
    }

    /// Value at node `i`, with the boundary node pinned to zero.
    fn node(v: &[f64], i: usize) -> f64 {
        v.get(i).copied().unwrap_or(0.0)
    }

    fn evaluate(&self, v: &[f64], grad: Option<&mut [f64]>) -> Evaluation {
        let (mut a, mut b) = (0.0, 0.0);
        let mut ga = vec![0.0; v.len()];
        let mut gb = vec![0.0; v.len()];
        let want = grad.is_some();
        for e in 0..self.elements() {
            let (vl, vr) = (Self::node(v, e), Self::node(v, e + 1));
            let d = vr - vl;
            a += self.stiff[e] * d * d;
            let (mut dl_a, mut dr_a) = (-2.0 * self.stiff[e] * d, 2.0 * self.stiff[e] * d);
            let (mut dl_b, mut dr_b) = (0.0, 0.0);
            for (k, &t) in GL_T.iter().enumerate() {
                let x = vl * (1.0 - t) + vr * t;
                a -= self.lambda_tilde * self.mass_w[e][k] * x * x;
                let ax = x.abs();
                b += self.nl_w[e][k] * ax.powf(self.p);
                if want {
                    let dm = -2.0 * self.lambda_tilde * self.mass_w[e][k] * x;
                    dl_a += dm * (1.0 - t);
                    dr_a += dm * t;
                    let dn = if ax == 0.0 { 0.0 } else { self.p * self.nl_w[e][k] * ax.powf(self.p - 2.0) * x };
                    dl_b += dn * (1.0 - t);
                    dr_b += dn * t;
                }
            }
            if want {
                ga[e] += dl_a;
                gb[e] += dl_b;
                if e + 1 < v.len() {
                    ga[e + 1] += dr_a;
                    gb[e + 1] += dr_b;
                }
            }
        }
        let scale = b.powf(2.0 / self.p);
        let quotient = a / scale;
        if let Some(g) = grad {
            for i in 0..v.len() {
                g[i] = (ga[i] - (2.0 / self.p) * (a / b) * gb[i]) / scale;
            }
        }
        Evaluation { numerator: a, denominator: b, quotient }
    }

    /// Solves `K z = g` for the tridiagonal stiffness matrix on the free nodes.
    fn precondition(&self, g: &[f64]) -> Vec<f64> {
        let m = g.len();
        let k = &self.stiff;
        let diag: Vec<f64> = (0..m).map(|i| k[i] + if i > 0 { k[i - 1] } else { 0.0 }).collect();
        // off-diagonal between i and i+1 is -k[i]
        let mut c = vec![0.0; m];
        let mut d = vec![0.0; m];
        c[0] = -k[0] / diag[0];
        d[0] = g[0] / diag[0];
        for i in 1..m {
            let denom = diag[i] + k[i - 1] * c[i - 1];
            c[i] = if i + 1 < m { -k[i] / denom } else { 0.0 };
            d[i] = (g[i] + k[i - 1] * d[i - 1]) / denom;
        }
        let mut z = vec![0.0; m];
        z[m - 1] = d[m - 1];
        for i in (0..m - 1).rev() {
            z[i] = d[i] - c[i] * z[i + 1];
        }
        z
    }
}

/// Quotient of a function given at the nodes `s_i = (i/M)^3`, `i < M`, of
/// the minimizer's grid and interpolated linearly.
pub fn fem_quotient(params: &Params, elements: usize, values: &[f64]) -> Result<f64> {
    check_params(params)?;
    if elements < 2 || values.len() != elements {
        return Err(invalid("one value per node below s = 1 is required"));
    }
    if values.iter().all(|v| *v == 0.0) {
        return Err(Error::TrivialProfile);
    }
    let ev = Fem::new(params, elements).evaluate(values, None);
    quotient_of(sphere_area(params.dim), ev.numerator, ev.denominator, params.p)
}

/// Descends the quotient over piecewise linear radial profiles, starting from
/// a randomly scaled and perturbed bubble `(ε² + s²)^{-(N-2)/2} - (ε² + 1)^{-(N-2)/2}`.
pub fn minimize_quotient(params: &Params, controls: &MinimizeControls) -> Result<SobolevEstimate> {
    check_params(params)?;
    if controls.elements < 8 || controls.max_iter == 0 || !(controls.tol >= 0.0) {
        return Err(invalid("need at least 8 elements, one iteration and a non-negative tolerance"));
    }
    let fem = Fem::new(params, controls.elements);
    let omega = sphere_area(params.dim);
    let m = controls.elements;
    let k = (params.n() - 2.0) / 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(controls.seed);
    let eps: f64 = rng.gen_range(0.2..0.6);
    let coeffs: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
    let mut v: Vec<f64> = fem.s[..m]
        .iter()
        .map(|&s| {
            let bubble = (eps * eps + s * s).powf(-k) - (eps * eps + 1.0).powf(-k);
            let wiggle: f64 = coeffs
                .iter()
                .enumerate()
                .map(|(j, c)| c * ((j + 1) as f64 * std::f64::consts::PI * s).sin())
                .sum();
            bubble * (1.0 + controls.perturbation * wiggle)
        })
        .collect();

    let normalize = |v: &mut Vec<f64>, b: f64| {
        let f = b.powf(-1.0 / params.p);
        v.iter_mut().for_each(|x| *x *= f);
    };
    let mut grad = vec![0.0; m];
    let mut ev = fem.evaluate(&v, Some(&mut grad));
    if !(ev.denominator > 0.0) {
        return Err(Error::Numerical("initial profile has zero denominator".into()));
    }
    normalize(&mut v, ev.denominator);
    ev = fem.evaluate(&v, Some(&mut grad));
    let initial = ev.quotient;
    let mut history = vec![omega * ev.quotient / omega.powf(2.0 / params.p)];
    let mut alpha: f64 = 1.0;
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..controls.max_iter {
        iterations = it + 1;
        let dir = fem.precondition(&grad);
        let slope: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
        if !(slope > 0.0) {
            converged = true;
            break;
        }
        let mut accepted = None;
        let mut trial_alpha = (alpha * 2.0).min(1e6);
        for _ in 0..60 {
            let trial: Vec<f64> = v.iter().zip(&dir).map(|(x, d)| x - trial_alpha * d).collect();
            let t = fem.evaluate(&trial, None);
            if t.denominator > 0.0 && t.quotient <= ev.quotient - 1e-4 * trial_alpha * slope {
                accepted = Some(trial);
                break;
            }
            trial_alpha *= 0.5;
        }
        let Some(mut next) = accepted else {
            converged = true;
            break;
        };
        alpha = trial_alpha;
        let b = fem.evaluate(&next, None).denominator;
        normalize(&mut next, b);
        let previous = ev.quotient;
        v = next;
        ev = fem.evaluate(&v, Some(&mut grad));
        if it % 10 == 9 {
            history.push(omega * ev.quotient / omega.powf(2.0 / params.p));
        }
        if (previous - ev.quotient) <= controls.tol * ev.quotient.abs() {
            converged = true;
            break;
        }
    }
    let to_full = |q: f64| omega * q / omega.powf(2.0 / params.p);
    let mut values = v;
    values.push(0.0);
    Ok(SobolevEstimate {
        quotient: to_full(ev.quotient),
        initial_quotient: to_full(initial),
        iterations,
        converged,
        nodes: fem.s,
        values,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constant_examples() {
        let s3 = 3.0 * (std::f64::consts::PI / 2.0).powf(4.0 / 3.0);
        assert_relative_eq!(euclidean_sobolev_constant(3).unwrap(), s3, max_relative = 1e-14);
        assert!(euclidean_sobolev_constant(2).is_err());
    }

    #[test]
    fn fem_quotient_is_homogeneous() {
        let pr = Params::new(3, 1.0, 6.0).unwrap();
        let m = 50;
        let v: Vec<f64> = (0..m).map(|i| 1.0 - (i as f64 / m as f64).powi(3)).collect();
        let q = fem_quotient(&pr, m, &v).unwrap();
        for t in [0.5, 2.0, 10.0] {
            let w: Vec<f64> = v.iter().map(|x| t * x).collect();
            assert_relative_eq!(fem_quotient(&pr, m, &w).unwrap(), q, max_relative = 1e-12);
        }
        assert!(fem_quotient(&pr, m, &vec![0.0; m]).is_err());
    }

    #[test]
    fn gradient_matches_differences() {
        let pr = Params::new(4, 2.2, 3.5).unwrap();
        let fem = Fem::new(&pr, 20);
        let v: Vec<f64> = (0..20).map(|i| (1.0 - fem.s[i]) * (1.0 + fem.s[i])).collect();
        let mut g = vec![0.0; 20];
        let q0 = fem.evaluate(&v, Some(&mut g)).quotient;
        for i in [0, 7, 19] {
            let mut w = v.clone();
            let h = 1e-6;
            w[i] += h;
            let qp = fem.evaluate(&w, None).quotient;
            w[i] -= 2.0 * h;
            let qm = fem.evaluate(&w, None).quotient;
            assert_relative_eq!((qp - qm) / (2.0 * h), g[i], max_relative = 1e-6, epsilon = 1e-9);
            assert!(q0.is_finite());
        }
    }
}

//! The singular linear problem `-v'' + η v / r² = f` on `(0, 1)` and radial
//! Dirichlet eigenvalues of the Euclidean unit ball.

use serde::{Deserialize, Serialize};

use crate::diagnostics::quadrature::gauss_legendre;
use crate::error::{invalid, Error, Result};
use crate::ode::{Flow, StepControl, Stepper};

/// Lower truncation of the `t = ln r` quadratures.
pub const T_MIN: f64 = -40.0;
/// Longest `t`-interval covered by a single Gauss-Legendre piece.
const PIECE: f64 = 0.25;
/// Samples used to estimate `sup |f|` on `(0, 1)` beyond the caller's grid.
const SUP_SAMPLES: usize = 4096;

/// Roots `(m1, m2)` of `m² - m - η = 0`, with `m1 >= m2`.
pub fn characteristic_exponents(eta: f64) -> Result<(f64, f64)> {
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(invalid(format!("η must be finite and non-negative, got {eta}")));
    }
    let d = (4.0 * eta + 1.0).sqrt();
    let m1 = 0.5 * (1.0 + d);
    // m2 = -η / m1 avoids cancellation in (1 - d) / 2 for small η
    Ok((m1, -eta / m1))
}

/// Constants of the bound `|v(r)| <= C1 r^{m1} + C2 r²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub c1: f64,
    pub c2: f64,
    /// `M / (sqrt(4η+1) (m1 + 1))`, the contribution of the second coefficient.
    pub c2_explicit: f64,
    /// `M / (sqrt(4η+1) |m2 + 1|)`, the contribution of the first coefficient.
    pub c2_from_v1: f64,
    /// `m1 = 2`: the first coefficient grows like `|ln r|` and no finite
    /// constants of this form exist.
    pub resonant: bool,
}

/// Bound constants from the sup `m_sup` of `|f|` on `(0, 1)`, with `v1_at_0`
/// the matching value of the first variation coefficient at `r = 1`.
pub fn bound_constants(m_sup: f64, eta: f64, v1_at_0: f64) -> Result<BoundConstants> {
    if !(m_sup >= 0.0) || !m_sup.is_finite() {
        return Err(invalid(format!("sup of |f| must be finite and non-negative, got {m_sup}")));
    }
    if !(eta > 0.0) {
        return Err(invalid(format!("η must be positive, got {eta}")));
    }
    let (m1, m2) = characteristic_exponents(eta)?;
    let d = (4.0 * eta + 1.0).sqrt();
    let c2_explicit = m_sup / (d * (m1 + 1.0));
    let gap = (m2 + 1.0).abs();
    let resonant = gap < 1e-12;
    let c2_from_v1 = if resonant { f64::INFINITY } else { m_sup / (d * gap) };
    Ok(BoundConstants {
        c1: v1_at_0.abs() + c2_from_v1,
        c2: c2_explicit + c2_from_v1,
        c2_explicit,
        c2_from_v1,
        resonant,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearOdeSolution {
    pub eta: f64,
    pub m1: f64,
    pub m2: f64,
    pub grid: Vec<f64>,
    pub v_values: Vec<f64>,
    pub v_derivs: Vec<f64>,
    pub bounds: BoundConstants,
    /// Estimated `sup |f|` on `(0, 1)`.
    pub m_sup: f64,
    /// Analytic bound on the neglected part `t < T_MIN` of the quadratures.
    pub truncation_bound: f64,
}

impl LinearOdeSolution {
    /// `C1 r^{m1} + C2 r²`.
    pub fn bound_at(&self, r: f64) -> f64 {
        self.bounds.c1 * r.powf(self.m1) + self.bounds.c2 * r * r
    }
}

/// `∫ e^{c s} f(e^s) ds` over `[a, b]`, split into short Gauss-Legendre pieces.
fn weighted_integral(a: f64, b: f64, c: f64, f: &impl Fn(f64) -> f64) -> f64 {
    let n = ((b - a).abs() / PIECE).ceil().max(1.0) as usize;
    let h = (b - a) / n as f64;
    (0..n)
        .map(|i| {
            let lo = a + i as f64 * h;
            gauss_legendre(lo, lo + h, |s| (c * s).exp() * f(s.exp()))
        })
        .sum()
}

/// Solves `-v'' + η v / r² = f` with `v(0) = 0` by variation of parameters
/// in `t = ln r`:
/// `v = v1(t) e^{m1 t} + v2(t) e^{m2 t}` with
/// `v1(t) = v1(0) + ∫_t^0 e^{(m2+1)s} f(e^s) ds / sqrt(4η+1)` and
/// `v2(t) = ∫_{-∞}^t e^{(m1+1)s} f(e^s) ds / sqrt(4η+1)`.
pub fn variation_of_parameters(
    f: impl Fn(f64) -> f64,
    eta: f64,
    grid: &[f64],
    v1_at_0: f64,
) -> Result<LinearOdeSolution> {
    if grid.is_empty() {
        return Err(Error::Empty("grid is empty".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) || !(grid[0] > T_MIN.exp()) || grid[grid.len() - 1] > 1.0 {
        return Err(invalid("grid must increase strictly inside (e^-40, 1]"));
    }
    if !(eta > 0.0) {
        return Err(invalid(format!("η must be positive, got {eta}")));
    }
    let (m1, m2) = characteristic_exponents(eta)?;
    let d = (4.0 * eta + 1.0).sqrt();

    let probes = (1..SUP_SAMPLES).flat_map(|i| {
        let x = i as f64 / SUP_SAMPLES as f64;
        [x, (T_MIN * (1.0 - x)).exp()]
    });
    let mut m_sup = 0.0f64;
    for r in grid.iter().copied().chain(probes) {
        let v = f(r);
        if !v.is_finite() {
            return Err(invalid(format!("forcing is not finite at r = {r}")));
        }
        if r < 1.0 {
            m_sup = m_sup.max(v.abs());
        }
    }

    let ts: Vec<f64> = grid.iter().map(|r| r.ln()).collect();
    let n = ts.len();
    // second coefficient accumulated upward from T_MIN
    let mut v2 = vec![0.0; n];
    let mut acc = 0.0;
    let mut prev = T_MIN;
    for i in 0..n {
        acc += weighted_integral(prev, ts[i], m1 + 1.0, &f);
        prev = ts[i];
        v2[i] = acc / d;
    }
    // first coefficient accumulated downward from t = 0, so no large terms cancel
    let mut v1 = vec![0.0; n];
    let mut acc = 0.0;
    let mut prev = 0.0;
    for i in (0..n).rev() {
        acc += weighted_integral(ts[i], prev, m2 + 1.0, &f);
        prev = ts[i];
        v1[i] = v1_at_0 + acc / d;
    }

    let mut v_values = Vec::with_capacity(n);
    let mut v_derivs = Vec::with_capacity(n);
    for i in 0..n {
        let (e1, e2) = ((m1 * ts[i]).exp(), (m2 * ts[i]).exp());
        v_values.push(v1[i] * e1 + v2[i] * e2);
        // θ' = m1 v1 e^{m1 t} + m2 v2 e^{m2 t} and v' = θ' / r
        v_derivs.push((m1 * v1[i] * e1 + m2 * v2[i] * e2) / grid[i]);
    }
    Ok(LinearOdeSolution {
        eta,
        m1,
        m2,
        grid: grid.to_vec(),
        v_values,
        v_derivs,
        bounds: bound_constants(m_sup, eta, v1_at_0)?,
        m_sup,
        truncation_bound: m_sup * ((m1 + 1.0) * T_MIN).exp() / (d * (m1 + 1.0)),
    })
}

/// `T1 λ_{k+1}^{p0 / (2 (p0 - 2))}`; infinite once the exponent overflows.
pub fn energy_level_bound(lambda_k1: f64, p0: f64, t1: f64) -> Result<f64> {
    if !(p0 > 2.0) {
        return Err(invalid(format!("p0 must exceed 2, got {p0}")));
    }
    if !(t1 > 0.0) || !(lambda_k1 > 0.0) {
        return Err(invalid("T1 and the eigenvalue must be positive"));
    }
    Ok(t1 * lambda_k1.powf(p0 / (2.0 * (p0 - 2.0))))
}

/// Start of the eigenfunction integration; the series is used below it.
const EIG_R0: f64 = 1e-3;
const EIG_RTOL: f64 = 1e-13;

/// `φ(r0), φ'(r0)` for the regular solution `Σ (-λr²/4)^j / (j! (N/2)_j)`.
fn bessel_series(dim: usize, lambda: f64, r: f64) -> (f64, f64) {
    let half_n = dim as f64 / 2.0;
    let x = -lambda * r * r / 4.0;
    let (mut term, mut phi, mut dphi) = (1.0, 1.0, 0.0);
    for j in 1..30 {
        term *= x / (j as f64 * (half_n + j as f64 - 1.0));
        phi += term;
        dphi += term * 2.0 * j as f64 / r;
        if term.abs() < 1e-18 {
            break;
        }
    }
    (phi, dphi)
}

/// Sign changes of the regular radial solution on `(0, 1]`, counting the end
/// value, so that the count jumps from `k-1` to `k` exactly at `λ_k`.
fn sign_changes(dim: usize, lambda: f64, rtol: f64) -> Result<usize> {
    let n1 = dim as f64 - 1.0;
    let (phi, dphi) = bessel_series(dim, lambda, EIG_R0);
    let rhs = move |r: f64, y: &[f64; 2]| [y[1], -n1 / r * y[1] - lambda * y[0]];
    let ctl = StepControl { rtol, atol: 1e-300, h_init: 1e-3, h_max: 0.02 };
    let mut st = Stepper::new(rhs, EIG_R0, [phi, dphi], ctl);
    let mut last = phi.signum();
    let mut count = 0;
    st.advance_to(1.0, |_, y, _| {
        if y[0] != 0.0 && y[0].signum() != last {
            count += 1;
            last = y[0].signum();
        }
        Flow::Continue
    })
    .map_err(|e| Error::Numerical(format!("eigenfunction integration failed: {e:?}")))?;
    // an exact zero at r = 1 counts as the crossing
    if st.y[0] == 0.0 {
        count += 1;
    }
    Ok(count)
}

/// The `count` smallest eigenvalues of `-Δ` on radial functions of the unit
/// ball in `R^N` with Dirichlet data.
pub fn radial_dirichlet_eigenvalues(dim: usize, count: usize) -> Result<Vec<f64>> {
    radial_dirichlet_eigenvalues_tol(dim, count, EIG_RTOL)
}

/// As [`radial_dirichlet_eigenvalues`] with an explicit integration tolerance.
pub fn radial_dirichlet_eigenvalues_tol(dim: usize, count: usize, rtol: f64) -> Result<Vec<f64>> {
    if dim < 3 {
        return Err(invalid(format!("dimension must be at least 3, got {dim}")));
    }
    if count == 0 {
        return Err(invalid("count must be at least 1"));
    }
    let mut out = Vec::with_capacity(count);
    let mut lo = 0.0;
    for k in 1..=count {
        let mut hi = (lo * 2.0f64).max(4.0);
        while sign_changes(dim, hi, rtol)? < k {
            lo = hi;
            hi *= 2.0;
        }
        while hi - lo > 4.0 * f64::EPSILON * hi {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if sign_changes(dim, mid, rtol)? >= k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        out.push(0.5 * (lo + hi));
        lo = hi;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponent_examples() {
        assert_eq!(characteristic_exponents(0.0).unwrap(), (1.0, 0.0));
        assert_eq!(characteristic_exponents(2.0).unwrap(), (2.0, -1.0));
        assert_eq!(characteristic_exponents(6.0).unwrap(), (3.0, -2.0));
        assert!(characteristic_exponents(-0.1).is_err());
    }

    #[test]
    fn bound_constant_examples() {
        let b = bound_constants(1.0, 2.0, 0.0).unwrap();
        assert_relative_eq!(b.c2_explicit, 1.0 / 9.0, epsilon = 1e-15);
        assert!(b.resonant && b.c1.is_infinite());
        let z = bound_constants(0.0, 3.0, 0.0).unwrap();
        assert_eq!((z.c1, z.c2), (0.0, 0.0));
        let one = bound_constants(1.0, 3.0, 0.5).unwrap();
        let two = bound_constants(2.0, 3.0, 0.5).unwrap();
        assert_relative_eq!(two.c2, 2.0 * one.c2, epsilon = 1e-15);
        assert_relative_eq!(two.c1 - 0.5, 2.0 * (one.c1 - 0.5), epsilon = 1e-15);
        assert!(bound_constants(1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn zero_forcing_gives_zero() {
        let grid: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
        let sol = variation_of_parameters(|_| 0.0, 3.0, &grid, 0.0).unwrap();
        assert!(sol.v_values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn resonant_closed_form() {
        // η = 2, f = 1: v = -r² ln r / 3 + B r², with B fixed by v1(0) = 0
        let grid: Vec<f64> = (1..=20).map(|i| i as f64 / 20.0).collect();
        let sol = variation_of_parameters(|_| 1.0, 2.0, &grid, 0.0).unwrap();
        let b = sol.v_values[19];
        for (r, v) in grid.iter().zip(&sol.v_values) {
            assert_relative_eq!(*v, -r * r * r.ln() / 3.0 + b * r * r, epsilon = 1e-13);
        }
    }

    #[test]
    fn energy_bound_examples() {
        assert_relative_eq!(energy_level_bound(20.19, 3.0, 1.0).unwrap(), 20.19f64.powf(1.5));
        assert_relative_eq!(energy_level_bound(7.0, 4.0, 2.0).unwrap(), 14.0, epsilon = 1e-14);
        assert!(energy_level_bound(7.0, 2.0, 1.0).is_err());
        assert!(energy_level_bound(7.0, 2.0 + 1e-3, 1.0).unwrap().is_infinite());
    }

    #[test]
    fn eigenvalues_of_the_three_ball() {
        let ev = radial_dirichlet_eigenvalues(3, 3).unwrap();
        for (k, l) in ev.iter().enumerate() {
            let exact = ((k + 1) as f64 * std::f64::consts::PI).powi(2);
            assert!((l - exact).abs() < 1e-8, "{l} vs {exact}");
        }
    }
}

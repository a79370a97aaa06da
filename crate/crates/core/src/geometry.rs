//! Ball model coordinates, conformal factors and the ball/half-space isometry.
//!
//! The ball model `B^N` carries the metric `(2/(1-|x|^2))^2 δ_ij`.  A radial
//! function is described by its geodesic radius `r`, related to the
//! Euclidean radius by `s = tanh(r/2)`, so that `2/(1-s^2) = 1 + cosh r`.
//! Near the ideal boundary `s` rounds to `1.0` long before `r` becomes
//! large, so [`BallRadius`] carries the gap `1 - s` alongside `s`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::radial_ode::{Gauge, RadialProfile};

/// Problem instance `-Δ_B u - λu = |u|^{p-2}u` together with its derived constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub dim: usize,
    pub lambda: f64,
    pub p: f64,
    /// `λ - N(N-2)/4`, the coefficient of the conformal potential.
    pub lambda_tilde: f64,
    /// `N(N-2)/4 - λ`, the Hardy-type coefficient in the half-space picture.
    pub eta: f64,
    /// Exponent of the conformal weight on the nonlinearity, `(2N - p(N-2))/2`.
    pub q: f64,
    pub p_crit: f64,
    /// Open interval `(N(N-2)/4, (N-1)^2/4)` of λ admitting positive solutions.
    pub window: (f64, f64),
}

impl Params {
    /// Builds a parameter record, rejecting `N < 3` and `p` outside `(2, 2N/(N-2)]`.
    ///
    /// Exponents within a few ulps of the critical one are snapped onto it.
    pub fn new(dim: usize, lambda: f64, p: f64) -> Result<Self> {
        if dim < 3 {
            return Err(invalid(format!("dimension must be at least 3, got {dim}")));
        }
        if !lambda.is_finite() || !p.is_finite() {
            return Err(invalid("lambda and p must be finite"));
        }
        let n = dim as f64;
        let p_crit = 2.0 * n / (n - 2.0);
        let p = if (p - p_crit).abs() <= 1e-14 * p_crit {
            p_crit
        } else {
            p
        };
        if p <= 2.0 || p > p_crit {
            return Err(invalid(format!(
                "exponent p = {p} outside (2, {p_crit}] for N = {dim}"
            )));
        }
        let threshold = n * (n - 2.0) / 4.0;
        let q = if p == p_crit {
            0.0
        } else {
            (2.0 * n - p * (n - 2.0)) / 2.0
        };
        Ok(Self {
            dim,
            lambda,
            p,
            lambda_tilde: lambda - threshold,
            eta: threshold - lambda,
            q,
            p_crit,
            window: (threshold, (n - 1.0) * (n - 1.0) / 4.0),
        })
    }

    /// Same as [`Params::new`] with `p = 2N/(N-2)`.
    pub fn critical(dim: usize, lambda: f64) -> Result<Self> {
        if dim < 3 {
            return Err(invalid(format!("dimension must be at least 3, got {dim}")));
        }
        let n = dim as f64;
        Self::new(dim, lambda, 2.0 * n / (n - 2.0))
    }

    /// Copy of `self` with a different exponent.
    pub fn with_p(&self, p: f64) -> Result<Self> {
        Self::new(self.dim, self.lambda, p)
    }

    pub fn n(&self) -> f64 {
        self.dim as f64
    }

    pub fn is_critical(&self) -> bool {
        self.p == self.p_crit
    }

    pub fn in_window(&self) -> bool {
        self.lambda > self.window.0 && self.lambda < self.window.1
    }

    /// `(N-1)^2 - 4λ`; positive exactly when the linearized tail is overdamped.
    pub fn discriminant(&self) -> f64 {
        let m = self.n() - 1.0;
        m * m - 4.0 * self.lambda
    }

    /// Decay rates `(fast, slow)` of `u'' + (N-1)u' + λu = 0`, the constant
    /// coefficient limit of the radial equation.  `None` unless `λ < (N-1)^2/4`.
    pub fn tail_rates(&self) -> Option<(f64, f64)> {
        let d = self.discriminant();
        if d <= 0.0 {
            return None;
        }
        let m = self.n() - 1.0;
        let root = d.sqrt();
        Some(((m + root) / 2.0, (m - root) / 2.0))
    }
}

/// Convenience wrapper mirroring the parameter record constructor.
pub fn make_params(dim: usize, lambda: f64, p: f64) -> Result<Params> {
    Params::new(dim, lambda, p)
}

/// Point of the ball model, `|x| < 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BallPoint(Vec<f64>);

impl BallPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Empty("ball point has no coordinates".into()));
        }
        let norm2: f64 = coords.iter().map(|c| c * c).sum();
        if !(norm2 < 1.0) {
            return Err(Error::OutOfDomain(format!(
                "|x| = {} is not inside the unit ball",
                norm2.sqrt()
            )));
        }
        Ok(Self(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

/// Point `(x', x_N)` of the upper half space, `x_N > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpacePoint {
    pub horizontal: Vec<f64>,
    pub height: f64,
}

impl HalfSpacePoint {
    pub fn new(horizontal: Vec<f64>, height: f64) -> Result<Self> {
        if !(height > 0.0) {
            return Err(Error::OutOfDomain(format!(
                "half-space height must be positive, got {height}"
            )));
        }
        Ok(Self { horizontal, height })
    }

    /// Concatenated coordinates `(x', x_N)`.
    pub fn coords(&self) -> Vec<f64> {
        let mut c = self.horizontal.clone();
        c.push(self.height);
        c
    }
}

/// The map `M(x) = (2x', 1 - |x|^2) / ((1 + x_N)^2 + |x'|^2)` on raw coordinates.
///
/// `M` is its own inverse wherever the denominator does not vanish.
pub fn isometry_map(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let (head, last) = x.split_at(n - 1);
    let xn = last[0];
    let h2: f64 = head.iter().map(|c| c * c).sum();
    let denom = (1.0 + xn) * (1.0 + xn) + h2;
    let mut out: Vec<f64> = head.iter().map(|c| 2.0 * c / denom).collect();
    out.push((1.0 - h2 - xn * xn) / denom);
    out
}

pub fn ball_to_halfspace(x: &BallPoint) -> HalfSpacePoint {
    let mut image = isometry_map(x.coords());
    let height = image.pop().expect("non-empty point");
    HalfSpacePoint {
        horizontal: image,
        height,
    }
}

pub fn halfspace_to_ball(y: &HalfSpacePoint) -> Result<BallPoint> {
    BallPoint::new(isometry_map(&y.coords()))
}

/// Euclidean radius in the ball stored together with its complement `1 - s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallRadius {
    pub s: f64,
    pub gap: f64,
}

impl BallRadius {
    pub fn from_s(s: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&s) {
            return Err(Error::OutOfDomain(format!(
                "Euclidean radius must lie in [0, 1), got {s}"
            )));
        }
        Ok(Self { s, gap: 1.0 - s })
    }

    /// `1 - s^2`, accurate up to the boundary.
    pub fn one_minus_s2(&self) -> f64 {
        self.gap * (1.0 + self.s)
    }

    /// Geodesic distance to the origin, `2 artanh(s)`.
    pub fn geodesic(&self) -> f64 {
        if self.s < 0.5 {
            2.0 * self.s.atanh()
        } else {
            ((1.0 + self.s) / self.gap).ln()
        }
    }
}

/// `r = 2 artanh(s)` for `s ∈ [0, 1)`.
pub fn geodesic_radius(s: f64) -> Result<f64> {
    Ok(BallRadius::from_s(s)?.geodesic())
}

/// Inverse of [`geodesic_radius`]: `s = tanh(r/2)` with `1 - s = 2/(1 + e^r)`.
pub fn euclidean_radius(r: f64) -> Result<BallRadius> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::OutOfDomain(format!(
            "geodesic radius must be finite and non-negative, got {r}"
        )));
    }
    let e = (-r).exp();
    Ok(BallRadius {
        s: (r / 2.0).tanh(),
        gap: 2.0 * e / (1.0 + e),
    })
}

/// `(2/(1 - s^2))^exponent`.
pub fn conformal_weight(s: f64, exponent: f64) -> Result<f64> {
    let b = BallRadius::from_s(s)?;
    Ok((2.0 / b.one_minus_s2()).powf(exponent))
}

/// `2/(1 - s^2)` written in the geodesic variable: `1 + cosh r`.
#[inline]
pub fn conformal_factor(r: f64) -> f64 {
    1.0 + r.cosh()
}

/// Direction of a [`gauge_transform`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GaugeDirection {
    HyperbolicToEuclidean,
    EuclideanToHyperbolic,
}

/// Applies `v = (2/(1-s^2))^{(N-2)/2} u` or its inverse to a sampled profile.
///
/// In the Euclidean gauge the derivative channel holds `dv/ds`; in the
/// hyperbolic gauge it holds `du/dr`.  With `W = 1 + cosh r` and `W' = sW` in
/// `r`, the product rule gives `dv/ds = W^{k+1}(u' + k s u)` for `k = (N-2)/2`.
pub fn gauge_transform(profile: &RadialProfile, direction: GaugeDirection) -> Result<RadialProfile> {
    let (source, target) = match direction {
        GaugeDirection::HyperbolicToEuclidean => (Gauge::Hyperbolic, Gauge::Euclidean),
        GaugeDirection::EuclideanToHyperbolic => (Gauge::Euclidean, Gauge::Hyperbolic),
    };
    if profile.gauge != source {
        return Err(Error::GaugeMismatch {
            expected: format!("{source:?}"),
            found: format!("{:?}", profile.gauge),
        });
    }
    let k = (profile.params.n() - 2.0) / 2.0;
    let n = profile.len();
    let mut values = Vec::with_capacity(n);
    let mut derivs = Vec::with_capacity(n);
    for i in 0..n {
        let r = profile.radii[i];
        let w = conformal_factor(r);
        let s = (r / 2.0).tanh();
        let (y, dy) = (profile.values[i], profile.derivs[i]);
        match direction {
            GaugeDirection::HyperbolicToEuclidean => {
                let wk = w.powf(k);
                values.push(wk * y);
                derivs.push(wk * w * (dy + k * s * y));
            }
            GaugeDirection::EuclideanToHyperbolic => {
                let wk = w.powf(-k);
                let u = wk * y;
                values.push(u);
                derivs.push(wk * dy / w - k * s * u);
            }
        }
    }
    Ok(RadialProfile {
        radii: profile.radii.clone(),
        values,
        derivs,
        gauge: target,
        params: profile.params,
        meta: profile.meta.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn params_examples() {
        let p = make_params(4, 2.0, 4.0).unwrap();
        assert_eq!(p.lambda_tilde, 0.0);
        assert_eq!(p.eta, 0.0);
        assert_eq!(p.p_crit, 4.0);
        assert_eq!(p.q, 0.0);
        assert!(!p.in_window());

        let p = make_params(5, 3.9, 10.0 / 3.0).unwrap();
        assert!((p.lambda_tilde - 0.15).abs() < 1e-14);
        assert!((p.eta + 0.15).abs() < 1e-14);
        assert_eq!(p.q, 0.0);
        assert!(p.is_critical());
        assert!(p.in_window());

        let p = make_params(7, 8.9, 2.5).unwrap();
        assert!((p.q - 0.75).abs() < 1e-14);
        assert!(p.in_window());
    }

    #[test]
    fn params_rejects_bad_input() {
        assert!(make_params(2, 0.0, 3.0).is_err());
        assert!(make_params(5, 3.9, 2.0).is_err());
        assert!(make_params(5, 3.9, 3.4).is_err());
        assert!(make_params(5, f64::NAN, 3.0).is_err());
    }

    #[test]
    fn params_identities() {
        for dim in 3..=10 {
            let p = Params::critical(dim, 0.3 * dim as f64).unwrap();
            assert_eq!(p.lambda_tilde, -p.eta);
            assert!((p.window.1 - p.window.0 - 0.25).abs() < 1e-14);
            assert_eq!(p.q, 0.0);
            let two = Params::new(dim, 0.0, 2.0 + 1e-9).unwrap();
            assert!((two.q - 2.0).abs() < 1e-8);
        }
    }

    #[test]
    fn isometry_examples() {
        let origin = BallPoint::new(vec![0.0; 4]).unwrap();
        let h = ball_to_halfspace(&origin);
        assert_eq!(h.horizontal, vec![0.0; 3]);
        assert_eq!(h.height, 1.0);

        let x = BallPoint::new(vec![0.0, 0.0, 0.5]).unwrap();
        let h = ball_to_halfspace(&x);
        assert!((h.height - 1.0 / 3.0).abs() < 1e-15);
        assert!(h.horizontal.iter().all(|c| *c == 0.0));

        assert!(BallPoint::new(vec![0.6, 0.8]).is_err());
    }

    #[test]
    fn isometry_is_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..2000 {
            let dim = rng.gen_range(2..8);
            let mut x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm = x.iter().map(|c| c * c).sum::<f64>().sqrt();
            let radius = rng.gen_range(0.0..0.999);
            x.iter_mut().for_each(|c| *c *= radius / norm);
            let ball = BallPoint::new(x.clone()).unwrap();
            let half = ball_to_halfspace(&ball);
            assert!(half.height > 0.0);
            let back = isometry_map(&half.coords());
            for (a, b) in back.iter().zip(&x) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn radius_round_trips() {
        assert_eq!(geodesic_radius(0.0).unwrap(), 0.0);
        for r in [0.1, 1.0, 10.0, 40.0] {
            let b = euclidean_radius(r).unwrap();
            assert!((b.geodesic() - r).abs() < 1e-12 * r.max(1.0), "r = {r}");
        }
        for i in 0..100 {
            let r = 0.3 * i as f64;
            let b = euclidean_radius(r).unwrap();
            let lhs = b.one_minus_s2() / 2.0;
            let rhs = 1.0 / (1.0 + r.cosh());
            assert!((lhs - rhs).abs() <= 1e-12 * rhs);
        }
        assert!(geodesic_radius(1.0).is_err());
        assert!(euclidean_radius(-0.1).is_err());
    }

    #[test]
    fn geodesic_radius_derivative_is_metric_factor() {
        let h = 1e-6;
        for i in 1..19 {
            let s = 0.05 * i as f64;
            let fd = (geodesic_radius(s + h).unwrap() - geodesic_radius(s - h).unwrap()) / (2.0 * h);
            assert!((fd - 2.0 / (1.0 - s * s)).abs() < 1e-6 * fd);
        }
    }

    #[test]
    fn conformal_weight_cases() {
        assert_eq!(conformal_weight(0.0, 3.5).unwrap(), 2f64.powf(3.5));
        assert_eq!(conformal_weight(0.7, 0.0).unwrap(), 1.0);
        for r in [0.2, 1.0, 3.0, 8.0] {
            let s = euclidean_radius(r).unwrap().s;
            let w = conformal_weight(s, 1.0).unwrap();
            assert!((w - conformal_factor(r)).abs() < 1e-10 * w);
        }
        assert!(conformal_weight(1.0, 1.0).is_err());
    }
}

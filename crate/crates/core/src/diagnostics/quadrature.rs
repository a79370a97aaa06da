//! Integration of sampled radial profiles.
//!
//! Integrands are formed on a uniform grid in the geodesic radius and
//! integrated with composite Boole's rule; pieces that do not cover whole
//! four-interval blocks use an eight-point Lagrange interpolant of the
//! integrand evaluated at Gauss-Legendre nodes.  Profiles whose radii are not
//! uniform are first resampled to four times as many points.

use crate::error::{invalid, Error, Result};
use crate::radial_ode::RadialProfile;

const STENCIL: usize = 8;

// 8-point Gauss-Legendre on [-1, 1]
const GL_X: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329_0,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_W: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362_0,
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Eight-point Gauss-Legendre rule for `∫_a^b f`.
pub fn gauss_legendre(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    if b == a {
        return 0.0;
    }
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    GL_X.iter().zip(GL_W).map(|(x, w)| w * f(mid + half * x)).sum::<f64>() * half
}

/// Samples `f(x0 + i h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformSamples {
    pub x0: f64,
    pub h: f64,
    pub values: Vec<f64>,
}

impl UniformSamples {
    pub fn new(x0: f64, h: f64, values: Vec<f64>) -> Result<Self> {
        if !(h > 0.0) || values.len() < STENCIL {
            return Err(invalid(format!(
                "uniform samples need h > 0 and at least {STENCIL} points"
            )));
        }
        Ok(Self { x0, h, values })
    }

    pub fn x_end(&self) -> f64 {
        self.x0 + (self.values.len() - 1) as f64 * self.h
    }

    fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }

    /// Local Lagrange interpolation on the eight nearest samples.
    pub fn interpolate(&self, x: f64) -> f64 {
        let n = self.values.len();
        let mut t = (x - self.x0) / self.h;
        // positions that are samples up to rounding return the sample itself
        if (t - t.round()).abs() < 1e-9 {
            t = t.round();
        }
        let centre = t.floor() as isize - (STENCIL as isize / 2 - 1);
        let start = centre.clamp(0, (n - STENCIL) as isize) as usize;
        let mut acc = 0.0;
        for j in 0..STENCIL {
            let tj = (start + j) as f64;
            if t == tj {
                return self.values[start + j];
            }
            let mut w = 1.0;
            for m in 0..STENCIL {
                if m != j {
                    let tm = (start + m) as f64;
                    w *= (t - tm) / (tj - tm);
                }
            }
            acc += w * self.values[start + j];
        }
        acc
    }

    fn gauss_piece(&self, a: f64, b: f64) -> f64 {
        gauss_legendre(a, b, |x| self.interpolate(x))
    }

    /// Boole's rule over samples `i..j` where `j - i` is a multiple of four.
    fn boole(&self, i: usize, j: usize) -> f64 {
        let v = &self.values;
        let mut acc = 0.0;
        let mut k = i;
        while k < j {
            acc += 7.0 * (v[k] + v[k + 4]) + 32.0 * (v[k + 1] + v[k + 3]) + 12.0 * v[k + 2];
            k += 4;
        }
        acc * 2.0 * self.h / 45.0
    }

    /// `∫_{x0}^{b} f`, for `x0 <= b <= x_end`.
    fn integral_to(&self, b: f64) -> f64 {
        let steps = ((b - self.x0) / self.h + 1e-9).floor() as usize;
        let blocks = steps.min(self.values.len() - 1) / 4 * 4;
        self.boole(0, blocks) + self.gauss_piece(self.x(blocks), b)
    }

    /// `∫_a^b f` for `x0 <= a <= b <= x_end` (up to rounding).
    pub fn integral(&self, a: f64, b: f64) -> Result<f64> {
        let slack = 1e-9 * self.h;
        if !(a >= self.x0 - slack && b <= self.x_end() + slack && a <= b) {
            return Err(invalid(format!(
                "integration range [{a}, {b}] outside sampled range [{}, {}]",
                self.x0,
                self.x_end()
            )));
        }
        let (a, b) = (a.max(self.x0), b.min(self.x_end()));
        Ok(self.integral_to(b) - self.integral_to(a))
    }

    pub fn total(&self) -> f64 {
        let n = self.values.len() - 1;
        let blocks = n / 4 * 4;
        self.boole(0, blocks) + self.gauss_piece(self.x(blocks), self.x_end())
    }
}

/// A profile on a uniform grid of geodesic radii.
#[derive(Debug, Clone)]
pub struct UniformProfile {
    pub r0: f64,
    pub h: f64,
    pub values: Vec<f64>,
    pub derivs: Vec<f64>,
}

impl UniformProfile {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn radius(&self, i: usize) -> f64 {
        self.r0 + i as f64 * self.h
    }

    pub fn r_end(&self) -> f64 {
        self.radius(self.len() - 1)
    }

    /// Samples `g(r, u, u')` on the grid.
    pub fn samples(&self, g: impl Fn(f64, f64, f64) -> f64) -> UniformSamples {
        let values = (0..self.len())
            .map(|i| g(self.radius(i), self.values[i], self.derivs[i]))
            .collect();
        UniformSamples { x0: self.r0, h: self.h, values }
    }

    /// Interpolated `(u, u')` at `r`.
    pub fn state_at(&self, r: f64) -> (f64, f64) {
        let u = UniformSamples { x0: self.r0, h: self.h, values: self.values.clone() };
        let du = UniformSamples { x0: self.r0, h: self.h, values: self.derivs.clone() };
        (u.interpolate(r), du.interpolate(r))
    }
}

fn is_uniform(radii: &[f64]) -> bool {
    let h = radii[1] - radii[0];
    radii
        .windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h)
}

/// Cubic Hermite value from end values and slopes on `[x0, x1]`.
fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0
        + (t3 - 2.0 * t2 + t) * h * d0
        + (-2.0 * t3 + 3.0 * t2) * y1
        + (t3 - t2) * h * d1
}

/// Fritsch-Carlson slopes for a monotonicity-preserving cubic through `y`.
fn monotone_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
    let mut m = vec![0.0; n];
    m[0] = delta[0];
    m[n - 1] = delta[n - 2];
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] > 0.0 {
            let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
            let (w1, w2) = (2.0 * h1 + h0, h1 + 2.0 * h0);
            m[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    m
}

/// Views a profile on a uniform grid.  Profiles already sampled uniformly are
/// used as they are, except for an irregular final sample which is dropped;
/// anything else is resampled onto `4 * len` points, values by cubic Hermite
/// with the stored derivatives and derivatives by a monotone cubic.
pub fn uniform_profile(profile: &RadialProfile) -> Result<UniformProfile> {
    let n = profile.len();
    if n < STENCIL {
        return Err(Error::Empty(format!(
            "profile has {n} samples, quadrature needs at least {STENCIL}"
        )));
    }
    let radii = &profile.radii;
    for keep in [n, n - 1] {
        if is_uniform(&radii[..keep]) {
            return Ok(UniformProfile {
                r0: radii[0],
                h: radii[1] - radii[0],
                values: profile.values[..keep].to_vec(),
                derivs: profile.derivs[..keep].to_vec(),
            });
        }
    }
    let m = 4 * n;
    let (a, b) = (radii[0], radii[n - 1]);
    let h = (b - a) / (m - 1) as f64;
    let dslopes = monotone_slopes(radii, &profile.derivs);
    let mut values = Vec::with_capacity(m);
    let mut derivs = Vec::with_capacity(m);
    let mut k = 0;
    for i in 0..m {
        let r = if i == m - 1 { b } else { a + i as f64 * h };
        while k + 2 < n && radii[k + 1] < r {
            k += 1;
        }
        let (x0, x1) = (radii[k], radii[k + 1]);
        values.push(hermite(
            x0,
            x1,
            profile.values[k],
            profile.values[k + 1],
            profile.derivs[k],
            profile.derivs[k + 1],
            r,
        ));
        derivs.push(hermite(
            x0,
            x1,
            profile.derivs[k],
            profile.derivs[k + 1],
            dslopes[k],
            dslopes[k + 1],
            r,
        ));
    }
    Ok(UniformProfile { r0: a, h, values, derivs })
}

/// Rate `κ` of an exponentially decaying positive integrand, fitted by least
/// squares over the final unit of radius.  `None` if the samples do not decay.
pub fn tail_rate(samples: &UniformSamples) -> Option<f64> {
    let n = samples.values.len();
    let span = ((1.0 / samples.h).round() as usize).clamp(2, n - 1);
    let pts: Vec<(f64, f64)> = (n - 1 - span..n)
        .filter_map(|i| {
            let f = samples.values[i].abs();
            (f > 0.0).then(|| (samples.x(i), f.ln()))
        })
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let slope = -least_squares_slope(&pts);
    (slope > 0.0).then_some(slope)
}

/// Least-squares slope of `y` against `x`.
pub fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// `∫_0^{x0} f` for the quadratic through the first three samples.
fn head_piece(samples: &UniformSamples) -> f64 {
    let v = &samples.values;
    let quad = |x: f64| {
        let t = (x - samples.x0) / samples.h;
        0.5 * (t - 1.0) * (t - 2.0) * v[0] - t * (t - 2.0) * v[1] + 0.5 * t * (t - 1.0) * v[2]
    };
    let a = samples.x0;
    a / 6.0 * (quad(0.0) + 4.0 * quad(0.5 * a) + quad(a))
}

/// `∫_0^{upper} g(r, u, u') dr` over a profile, with `[0, r0]` from the
/// quadratic through the first three samples and, when `tail` is set and the range runs to the end,
/// the exponential continuation `f_end / κ` past the last sample.
pub fn radial_integral(
    grid: &UniformProfile,
    upper: Option<f64>,
    tail: bool,
    g: impl Fn(f64, f64, f64) -> f64,
) -> Result<f64> {
    let samples = grid.samples(&g);
    let head = head_piece(&samples);
    match upper {
        Some(b) if b < samples.x_end() => Ok(head + samples.integral(grid.r0, b)?),
        _ => {
            let mut total = head + samples.total();
            if tail {
                let f_end = *samples.values.last().unwrap();
                if f_end != 0.0 {
                    total += f_end / tail_rate(&samples).unwrap_or(f64::INFINITY);
                }
            }
            Ok(total)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sampled(f: impl Fn(f64) -> f64, x0: f64, h: f64, n: usize) -> UniformSamples {
        UniformSamples::new(x0, h, (0..n).map(|i| f(x0 + i as f64 * h)).collect()).unwrap()
    }

    #[test]
    fn boole_and_partial_pieces() {
        let s = sampled(f64::sin, 0.0, 0.01, 1001);
        assert_relative_eq!(s.total(), 1.0 - 10f64.cos(), epsilon = 1e-12);
        assert_relative_eq!(s.integral(0.0, 3.217).unwrap(), 1.0 - 3.217f64.cos(), epsilon = 1e-12);
        assert_relative_eq!(
            s.integral(1.005, 7.3333).unwrap(),
            1.005f64.cos() - 7.3333f64.cos(),
            epsilon = 1e-12
        );
        assert!(s.integral(-1.0, 2.0).is_err());
    }

    #[test]
    fn interpolation_is_high_order() {
        let s = sampled(f64::exp, 0.0, 0.01, 200);
        for x in [0.001, 0.5555, 1.234, 1.985] {
            assert_relative_eq!(s.interpolate(x), x.exp(), max_relative = 1e-13);
        }
    }

    #[test]
    fn nonuniform_profile_is_resampled() {
        let pr = crate::geometry::Params::critical(5, 3.9).unwrap();
        let radii: Vec<f64> = (0..400).map(|i| 0.05 * (i as f64).powf(1.2) + 0.01).collect();
        let prof = RadialProfile::from_fn(
            radii,
            crate::radial_ode::Gauge::Hyperbolic,
            pr,
            |r| ((-r).exp(), -(-r).exp()),
        )
        .unwrap();
        let grid = uniform_profile(&prof).unwrap();
        assert_eq!(grid.len(), 1600);
        let r_end = prof.r_end();
        let exact = 1.0 - (-r_end).exp();
        let got = radial_integral(&grid, None, false, |_, u, _| u).unwrap();
        assert_relative_eq!(got, exact, max_relative = 1e-6);
    }

    #[test]
    fn tail_extrapolation_recovers_infinite_integral() {
        let s = sampled(|x| (-2.5 * x).exp(), 0.0, 0.01, 1001);
        let kappa = tail_rate(&s).unwrap();
        assert_relative_eq!(kappa, 2.5, epsilon = 1e-10);
        let grid = UniformProfile {
            r0: 1e-4,
            h: 0.01,
            values: (0..1001).map(|i| (-2.5 * (1e-4 + i as f64 * 0.01)).exp()).collect(),
            derivs: vec![0.0; 1001],
        };
        let got = radial_integral(&grid, None, true, |_, u, _| u).unwrap();
        assert_relative_eq!(got, 0.4, max_relative = 1e-10);
    }
}

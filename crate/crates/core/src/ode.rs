//! Embedded Dormand-Prince 5(4) stepper with exact landing on output points.

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;

// fifth-order minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepError {
    /// Step size fell below the representable resolution at the current abscissa.
    Underflow,
    /// The right-hand side produced a non-finite value.
    NonFinite,
}

/// Whether the caller wants to keep stepping after an accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

#[derive(Debug, Default, Clone, Copy)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
}

/// Adaptive integrator state for `y' = f(t, y)` with `D` components.
///
/// The local error is measured against `atol + rtol * max(|y_old|_1, |y_new|_1)`,
/// one scale shared by all components, so that a zero of a single component
/// does not force tiny steps.
pub struct Stepper<const D: usize, F>
where
    F: Fn(f64, &[f64; D]) -> [f64; D],
{
    f: F,
    pub t: f64,
    pub y: [f64; D],
    dy: [f64; D],
    h: f64,
    ctl: StepControl,
    pub stats: StepStats,
}

fn axpy<const D: usize>(y: &[f64; D], h: f64, terms: &[(f64, &[f64; D])]) -> [f64; D] {
    let mut out = *y;
    for i in 0..D {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

fn norm1<const D: usize>(y: &[f64; D]) -> f64 {
    y.iter().map(|v| v.abs()).sum()
}

impl<const D: usize, F> Stepper<D, F>
where
    F: Fn(f64, &[f64; D]) -> [f64; D],
{
    pub fn new(f: F, t0: f64, y0: [f64; D], ctl: StepControl) -> Self {
        let dy = f(t0, &y0);
        Self {
            f,
            t: t0,
            y: y0,
            dy,
            h: ctl.h_init.min(ctl.h_max),
            ctl,
            stats: StepStats::default(),
        }
    }

    /// Derivative at the current point (first stage of the next step).
    pub fn derivative(&self) -> [f64; D] {
        self.dy
    }

    fn attempt(&self, h: f64) -> ([f64; D], [f64; D], f64) {
        let (t, y, k1) = (self.t, &self.y, &self.dy);
        let f = &self.f;
        let k2 = f(t + C2 * h, &axpy(y, h, &[(A21, k1)]));
        let k3 = f(t + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]));
        let k4 = f(t + C4 * h, &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(
            t + C5 * h,
            &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            t + h,
            &axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y_new = axpy(y, h, &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = f(t + h, &y_new);
        let mut err = 0.0f64;
        let scale = self.ctl.atol + self.ctl.rtol * norm1(y).max(norm1(&y_new));
        for i in 0..D {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            err = err.max(e.abs() / scale);
        }
        (y_new, k7, err)
    }

    /// Advances exactly to `target`, calling `on_step(t, y, y')` after every
    /// accepted step.  Returns early with `Ok(Flow::Stop)` if the callback asks.
    pub fn advance_to<C>(&mut self, target: f64, mut on_step: C) -> Result<Flow, StepError>
    where
        C: FnMut(f64, &[f64; D], &[f64; D]) -> Flow,
    {
        let dir = (target - self.t).signum();
        while (target - self.t) * dir > 0.0 {
            let remaining = target - self.t;
            let mut h = self.h.min(self.ctl.h_max).min(remaining.abs()) * dir;
            // stretch by up to 1% rather than leave a sliver before the target
            let landing = remaining.abs() <= 1.01 * h.abs();
            if landing {
                h = remaining;
            }
            if h.abs() <= 1e-14 * self.t.abs().max(1e-300) {
                return Err(StepError::Underflow);
            }
            let (y_new, k7, err) = self.attempt(h);
            if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
                if h.abs() < 1e-300 {
                    return Err(StepError::NonFinite);
                }
                self.stats.rejected += 1;
                self.h = h.abs() * 0.1;
                continue;
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                self.t = if landing { target } else { self.t + h };
                self.y = y_new;
                self.dy = k7;
                self.stats.accepted += 1;
                // a clipped landing step says nothing about the natural step size
                if !landing {
                    self.h = h.abs() * factor;
                } else {
                    self.h = self.h.max(h.abs() * factor.min(1.0));
                }
                if on_step(self.t, &self.y, &self.dy) == Flow::Stop {
                    return Ok(Flow::Stop);
                }
            } else {
                self.stats.rejected += 1;
                self.h = h.abs() * factor;
            }
        }
        Ok(Flow::Continue)
    }
}

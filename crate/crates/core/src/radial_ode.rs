//! The radial equation in the geodesic variable and single-shot integration.
//!
//! For `u = u(r)` with `r` the hyperbolic distance to the origin, the
//! Laplace-Beltrami operator of the ball model reduces to
//! `u'' + (N-1) coth(r) u'`, so radial solutions of
//! `-Δ_B u - λu = |u|^{p-2}u` satisfy
//!
//! ```text
//! u'' + (N-1) coth(r) u' + λ u + |u|^{p-2} u = 0,   u(0) = a,  u'(0) = 0.
//! ```
//!
//! For `λ < (N-1)^2/4` the tail is overdamped: far out the trajectory is a
//! combination `A e^{-c_f r} + B e^{-c_s r}` of a fast and a slow mode with
//! `c_{f,s} = ((N-1) ± sqrt((N-1)^2 - 4λ))/2`.  Only the fast mode has finite
//! energy, so finite-energy solutions are exactly the shots with `B = 0`.
//! Shots are classified by which mode wins in the tail.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::Params;
use crate::ode::{Flow, StepControl, StepError, Stepper};

/// Which function a profile samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Gauge {
    /// `u` on the hyperbolic ball; derivative channel holds `du/dr`.
    Hyperbolic,
    /// `v = (2/(1-s^2))^{(N-2)/2} u`; derivative channel holds `dv/ds`.
    Euclidean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ProfileMeta {
    /// Relative tolerance the samples were integrated with, if computed.
    pub tol: Option<f64>,
    /// The profile ends inside an exponentially decaying tail; quadratures
    /// may extrapolate past the last sample.
    pub decaying_tail: bool,
}

/// Radial function sampled at increasing geodesic radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub derivs: Vec<f64>,
    pub gauge: Gauge,
    pub params: Params,
    pub meta: ProfileMeta,
}

impl RadialProfile {
    pub fn new(
        radii: Vec<f64>,
        values: Vec<f64>,
        derivs: Vec<f64>,
        gauge: Gauge,
        params: Params,
    ) -> Result<Self> {
        if radii.is_empty() {
            return Err(Error::Empty("profile has no samples".into()));
        }
        if radii.len() != values.len() || radii.len() != derivs.len() {
            return Err(invalid("profile channels have different lengths"));
        }
        if radii[0] < 0.0 || radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("profile radii must be non-negative and strictly increasing"));
        }
        Ok(Self {
            radii,
            values,
            derivs,
            gauge,
            params,
            meta: ProfileMeta::default(),
        })
    }

    /// Samples `f(r) = (value, derivative)` on the given radii.
    pub fn from_fn(
        radii: Vec<f64>,
        gauge: Gauge,
        params: Params,
        f: impl Fn(f64) -> (f64, f64),
    ) -> Result<Self> {
        let (values, derivs) = radii.iter().map(|&r| f(r)).unzip();
        Self::new(radii, values, derivs, gauge, params)
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn r_end(&self) -> f64 {
        *self.radii.last().expect("non-empty profile")
    }

    pub fn with_meta(mut self, meta: ProfileMeta) -> Self {
        self.meta = meta;
        self
    }

    /// Keeps the samples with index `< end`.
    pub fn truncated(&self, end: usize) -> Self {
        let end = end.clamp(1, self.len());
        Self {
            radii: self.radii[..end].to_vec(),
            values: self.values[..end].to_vec(),
            derivs: self.derivs[..end].to_vec(),
            gauge: self.gauge,
            params: self.params,
            meta: self.meta.clone(),
        }
    }

    /// Pointwise negation, used by the odd symmetry of the equation.
    pub fn negated(&self) -> Self {
        Self {
            values: self.values.iter().map(|v| -v).collect(),
            derivs: self.derivs.iter().map(|v| -v).collect(),
            ..self.clone()
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[inline]
fn nonlinearity(u: f64, p: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        u.abs().powf(p - 2.0) * u
    }
}

#[inline]
fn rhs_unchecked(r: f64, u: f64, du: f64, params: &Params) -> f64 {
    let coth = 1.0 / r.tanh();
    -(params.n() - 1.0) * coth * du - params.lambda * u - nonlinearity(u, params.p)
}

/// Right-hand side `(u', u'')` of the radial equation; singular at `r = 0`.
pub fn radial_rhs(r: f64, state: (f64, f64), params: &Params) -> Result<(f64, f64)> {
    if !(r > 0.0) {
        return Err(invalid(format!("radial equation is singular at r = {r}")));
    }
    Ok((state.1, rhs_unchecked(r, state.0, state.1, params)))
}

/// `H = u'^2/2 + λu^2/2 + |u|^p/p`, non-increasing along radial trajectories
/// since `dH/dr = -(N-1) coth(r) u'^2`.
pub fn hamiltonian(u: f64, du: f64, params: &Params) -> f64 {
    0.5 * du * du + 0.5 * params.lambda * u * u + u.abs().powf(params.p) / params.p
}

/// Regular seed `(u(r0), u'(r0))` for amplitude `a` from the Taylor expansion
/// `u = a - (λa + |a|^{p-2}a) r^2/(2N) + O(r^4)`.
pub fn origin_series(a: f64, params: &Params, r0: f64) -> Result<(f64, f64)> {
    if !(r0 > 0.0 && r0 <= 0.1) {
        return Err(invalid(format!("seed radius must lie in (0, 0.1], got {r0}")));
    }
    let force = params.lambda * a + nonlinearity(a, params.p);
    let n = params.n();
    Ok((a - force * r0 * r0 / (2.0 * n), -force * r0 / n))
}

/// Tail classification of one shot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ShotClass {
    /// Stayed on the fast-decaying (finite-energy) manifold up to `r_max`.
    Decay,
    /// Left the finite-energy manifold with eventual sign `+`: the slow mode
    /// dominates, so `u e^{c_f r}` grows without bound.  Also used when
    /// `|u|` itself reaches `u_max * max(1, |a|)` while positive.
    BlowupPositive,
    /// As [`ShotClass::BlowupPositive`] with eventual sign `-`.
    BlowupNegative,
    /// Neither test fired before `r_max`, or the stepper failed.
    Undetermined,
}

impl ShotClass {
    pub fn is_blowup(self) -> bool {
        matches!(self, Self::BlowupPositive | Self::BlowupNegative)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotControls {
    pub r_max: f64,
    pub tol: f64,
    pub u_max: f64,
    pub eps_decay: f64,
    /// Seed radius for the origin series.
    pub r0: f64,
    /// Spacing of the stored samples; the stepper lands on every sample.
    pub sample_step: f64,
}

impl Default for ShotControls {
    fn default() -> Self {
        Self {
            r_max: 60.0,
            tol: 1e-10,
            u_max: 1e6,
            eps_decay: 1e-8,
            r0: 1e-4,
            sample_step: 0.01,
        }
    }
}

impl ShotControls {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_max > 1.0) {
            return Err(invalid(format!("r_max must exceed 1, got {}", self.r_max)));
        }
        if !(self.tol > 0.0 && self.tol < 1e-2) {
            return Err(invalid(format!("tolerance must lie in (0, 1e-2), got {}", self.tol)));
        }
        if !(self.u_max > 0.0 && self.eps_decay > 0.0) {
            return Err(invalid("u_max and eps_decay must be positive"));
        }
        if !(self.sample_step > 0.0 && self.sample_step <= 0.1) {
            return Err(invalid("sample step must lie in (0, 0.1]"));
        }
        if !(self.r0 > 0.0 && self.r0 <= 0.1 && self.r0 < self.sample_step) {
            return Err(invalid("seed radius must lie in (0, min(0.1, sample_step))"));
        }
        Ok(())
    }
}

/// Length over which a shot of amplitude `a` bends near the origin,
/// `sqrt(N |a| / |λa + |a|^{p-2}a|)`.
pub fn core_length(a: f64, params: &Params) -> f64 {
    let force = (params.lambda * a + nonlinearity(a, params.p)).abs();
    if force == 0.0 {
        f64::INFINITY
    } else {
        (params.n() * a.abs() / force).sqrt()
    }
}

impl ShotControls {
    /// Controls fine enough for amplitude `a`: the sample step is halved until
    /// it is below 1/16 of [`core_length`] and the seed radius is kept below
    /// `1e-3` of it.  Never coarsens, so controls resolved for the largest
    /// amplitude of a bracket are left unchanged for every amplitude inside.
    pub fn resolved_for(&self, a: f64, params: &Params) -> Self {
        let ell = core_length(a, params);
        let mut step = self.sample_step;
        while step > ell / 16.0 && step > 1e-6 {
            step *= 0.5;
        }
        let r0 = self.r0.min(1e-3 * ell).min(0.5 * step);
        Self { sample_step: step, r0, ..*self }
    }
}

/// Ratio at which the slow mode is considered dominant.
const ESCAPE_RATIO: f64 = 10.0;
/// Length of `r` over which the escape test must hold.
const ESCAPE_WINDOW: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ShotDiagnostics {
    /// First sample radius at which the linear constant-coefficient tail applies.
    pub linear_from: Option<f64>,
    /// Largest single-step increase of `H`, relative to `H(r0)`.
    pub max_energy_increase: f64,
    pub step_underflow: bool,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotResult {
    pub amplitude: f64,
    pub class: ShotClass,
    /// Strict sign changes of `u` over every accepted step.
    pub nodes: usize,
    pub r_end: f64,
    pub terminal_state: (f64, f64),
    pub profile: RadialProfile,
    pub diagnostics: ShotDiagnostics,
}

impl ShotResult {
    /// Bracketing key: classification together with the node count.
    pub fn key(&self) -> (ShotClass, usize) {
        (self.class, self.nodes)
    }
}

/// Integrates one shot from the origin series seed until it is classified,
/// sampling finely enough to resolve the core (see [`ShotControls::resolved_for`]).
pub fn integrate(a: f64, params: &Params, controls: &ShotControls) -> Result<ShotResult> {
    shoot(a, params, controls, true)
}

/// Same classification as [`integrate`], but only the seed radius is adapted
/// to the amplitude; the stored profile keeps the caller's sample step.
pub fn classify(a: f64, params: &Params, controls: &ShotControls) -> Result<ShotResult> {
    shoot(a, params, controls, false)
}

fn shoot(a: f64, params: &Params, controls: &ShotControls, fine_samples: bool) -> Result<ShotResult> {
    if !(a != 0.0 && a.is_finite()) {
        return Err(invalid(format!("amplitude must be finite and non-zero, got {a}")));
    }
    controls.validate()?;
    let resolved = controls.resolved_for(a, params);
    let controls = &if fine_samples {
        resolved
    } else {
        ShotControls { r0: resolved.r0, ..*controls }
    };
    let (c_fast, c_slow) = params.tail_rates().ok_or_else(|| {
        invalid(format!(
            "λ = {} is not below (N-1)^2/4 = {}; the tail is oscillatory",
            params.lambda, params.window.1
        ))
    })?;
    let gap = c_fast - c_slow;
    let n1 = params.n() - 1.0;
    let p = params.p;
    let pr = *params;

    let r0 = controls.r0;
    let (u0, du0) = origin_series(a, params, r0)?;
    // H never increases, so |u| stays of the order of |a|; the cap scales with it
    let u_cap = controls.u_max * a.abs().max(1.0);
    let rhs = move |r: f64, y: &[f64; 2]| [y[1], rhs_unchecked(r, y[0], y[1], &pr)];
    let mut stepper = Stepper::new(
        rhs,
        r0,
        [u0, du0],
        StepControl {
            rtol: controls.tol,
            atol: 1e-300,
            h_init: r0,
            h_max: controls.sample_step,
        },
    );

    let mut radii = vec![r0];
    let mut values = vec![u0];
    let mut derivs = vec![du0];

    let h0 = hamiltonian(u0, du0, params);
    let h_scale = h0.abs().max(f64::MIN_POSITIVE);
    let mut h_prev = h0;
    let mut max_increase = 0.0f64;
    let mut nodes = 0usize;
    let mut last_sign = a.signum();
    let mut blowup: Option<ShotClass> = None;

    let mut diag = ShotDiagnostics::default();
    let mut escape_since: Option<f64> = None;
    let mut cone_since: Option<f64> = None;
    let mut class: Option<ShotClass> = None;

    let mut i = 1usize;
    loop {
        let target = (r0 + i as f64 * controls.sample_step).min(controls.r_max);
        let flow = stepper.advance_to(target, |_r, y, _dy| {
            let (u, du) = (y[0], y[1]);
            if u != 0.0 {
                let sign = u.signum();
                if sign != last_sign {
                    nodes += 1;
                    last_sign = sign;
                }
            }
            let h = hamiltonian(u, du, &pr);
            max_increase = max_increase.max((h - h_prev) / h_scale);
            h_prev = h;
            if u.abs() >= u_cap {
                blowup = Some(if u > 0.0 {
                    ShotClass::BlowupPositive
                } else {
                    ShotClass::BlowupNegative
                });
                return Flow::Stop;
            }
            Flow::Continue
        });
        match flow {
            Err(StepError::Underflow) | Err(StepError::NonFinite) => {
                diag.step_underflow = true;
                class = Some(ShotClass::Undetermined);
            }
            Ok(_) => {}
        }
        let r = stepper.t;
        let (u, du) = (stepper.y[0], stepper.y[1]);
        if r > *radii.last().unwrap() {
            radii.push(r);
            values.push(u);
            derivs.push(du);
        }
        if class.is_some() {
            break;
        }
        if let Some(b) = blowup {
            class = Some(b);
            break;
        }

        // tail analysis on the stored samples
        let coth_excess = n1 * (1.0 / r.tanh() - 1.0);
        let nonlinear = if u == 0.0 { 0.0 } else { u.abs().powf(p - 2.0) };
        let linear = coth_excess <= 1e-3 * gap && nonlinear <= 1e-3 * gap * gap;
        if linear && diag.linear_from.is_none() {
            diag.linear_from = Some(r);
        }
        if diag.linear_from.is_some() {
            let slow = du + c_fast * u;
            let fast = du + c_slow * u;
            let ratio = if fast == 0.0 { f64::INFINITY } else { (slow / fast).abs() };
            if ratio >= ESCAPE_RATIO {
                let since = *escape_since.get_or_insert(r);
                if r - since >= ESCAPE_WINDOW {
                    class = Some(if slow > 0.0 {
                        ShotClass::BlowupPositive
                    } else {
                        ShotClass::BlowupNegative
                    });
                    break;
                }
            } else {
                escape_since = None;
            }
            let in_cone = u != 0.0
                && u.abs() < controls.eps_decay
                && {
                    let slope = du / u;
                    slope >= -1.5 * c_fast && slope <= -(c_fast + c_slow) / 2.0
                };
            if in_cone {
                cone_since.get_or_insert(r);
            } else {
                cone_since = None;
            }
        }
        if r >= controls.r_max {
            class = Some(if cone_since.is_some() {
                ShotClass::Decay
            } else {
                ShotClass::Undetermined
            });
            break;
        }
        i += 1;
    }

    diag.max_energy_increase = max_increase;
    diag.accepted_steps = stepper.stats.accepted;
    diag.rejected_steps = stepper.stats.rejected;
    let profile = RadialProfile {
        radii,
        values,
        derivs,
        gauge: Gauge::Hyperbolic,
        params: *params,
        meta: ProfileMeta {
            tol: Some(controls.tol),
            decaying_tail: false,
        },
    };
    Ok(ShotResult {
        amplitude: a,
        class: class.unwrap_or(ShotClass::Undetermined),
        nodes,
        r_end: stepper.t,
        terminal_state: (stepper.y[0], stepper.y[1]),
        profile,
        diagnostics: diag,
    })
}

/// Largest one-interval defect of the stored samples: each sample is carried
/// to the next radius at a tolerance of `1e-13` and compared with the stored
/// state, relative to `|u| + |u'|` there.
pub fn ode_residual(profile: &RadialProfile) -> Result<f64> {
    if profile.gauge != Gauge::Hyperbolic {
        return Err(Error::GaugeMismatch {
            expected: "Hyperbolic".into(),
            found: format!("{:?}", profile.gauge),
        });
    }
    if profile.radii[0] <= 0.0 {
        return Err(invalid("profile must start away from the origin"));
    }
    let pr = profile.params;
    let rhs = move |r: f64, y: &[f64; 2]| [y[1], rhs_unchecked(r, y[0], y[1], &pr)];
    let mut worst = 0.0f64;
    for i in 0..profile.len().saturating_sub(1) {
        let (r0, r1) = (profile.radii[i], profile.radii[i + 1]);
        let mut st = Stepper::new(
            rhs,
            r0,
            [profile.values[i], profile.derivs[i]],
            StepControl { rtol: 1e-13, atol: 1e-300, h_init: (r1 - r0) / 4.0, h_max: r1 - r0 },
        );
        st.advance_to(r1, |_, _, _| Flow::Continue)
            .map_err(|e| Error::Numerical(format!("reference step failed at r = {r0}: {e:?}")))?;
        let (u, du) = (profile.values[i + 1], profile.derivs[i + 1]);
        let scale = u.abs() + du.abs();
        if scale > 0.0 {
            worst = worst.max(((st.y[0] - u).abs() + (st.y[1] - du).abs()) / scale);
        }
    }
    Ok(worst)
}

use hyperbn_core::linear_ode::{
    bound_constants, characteristic_exponents, radial_dirichlet_eigenvalues,
    radial_dirichlet_eigenvalues_tol, variation_of_parameters,
};
use proptest::prelude::*;

/// Numerov finite differences for `φ = e^{-t/2} θ`, `θ(t) = v(e^t)`, which
/// satisfies `φ'' = (η + 1/4) φ - e^{3t/2} f(e^t)` on `[-30, 0]` with
/// `φ(-30) = 0` and `φ(0) = v(1)`; the Thomas algorithm solves the system.
fn numerov_oracle(f: &dyn Fn(f64) -> f64, eta: f64, v_at_1: f64, radii: &[f64]) -> Vec<f64> {
    let (t0, n) = (-30.0, 60_000usize);
    let h = -t0 / n as f64;
    let k = eta + 0.25;
    let g = |t: f64| -(1.5 * t).exp() * f(t.exp());
    let off = 1.0 - h * h * k / 12.0;
    let diag = -(2.0 + 10.0 * h * h * k / 12.0);
    // unknowns y_1 .. y_{n-1}
    let m = n - 1;
    let mut rhs: Vec<f64> = (1..n)
        .map(|i| {
            let t = t0 + i as f64 * h;
            h * h / 12.0 * (g(t - h) + 10.0 * g(t) + g(t + h))
        })
        .collect();
    rhs[m - 1] -= off * v_at_1;
    let mut c = vec![0.0; m];
    let mut d = vec![0.0; m];
    c[0] = off / diag;
    d[0] = rhs[0] / diag;
    for i in 1..m {
        let den = diag - off * c[i - 1];
        c[i] = off / den;
        d[i] = (rhs[i] - off * d[i - 1]) / den;
    }
    let mut y = vec![0.0; n + 1];
    y[n] = v_at_1;
    y[m] = d[m - 1];
    for i in (1..m).rev() {
        y[i] = d[i - 1] - c[i - 1] * y[i + 1];
    }
    radii
        .iter()
        .map(|&r| {
            let t = r.ln();
            let i = ((t - t0) / h).round() as usize;
            assert!((t0 + i as f64 * h - t).abs() < 1e-9, "radius {r} is not on the oracle grid");
            y[i] * (0.5 * t).exp()
        })
        .collect()
}

/// Radii `e^t` for `t = -12, -11.8, ..., 0`, all on the oracle's lattice.
type Forcing = Box<dyn Fn(f64) -> f64>;

fn lattice_radii() -> Vec<f64> {
    (0..=60).map(|i| (-12.0 + 0.2 * i as f64).exp()).collect()
}

#[test]
fn variation_of_parameters_matches_a_finite_difference_oracle() {
    let forcings: [(&str, Forcing); 3] = [
        ("constant", Box::new(|_| 1.0)),
        ("oscillating", Box::new(|r: f64| (7.0 * r).cos() + 0.3)),
        ("root", Box::new(|r: f64| r.sqrt() * (2.0 - r))),
    ];
    let radii = lattice_radii();
    assert_eq!(*radii.last().unwrap(), 1.0);
    for eta in [0.3, 2.0, 6.0, 15.0] {
        for (name, f) in &forcings {
            for v1 in [0.0, 1.5] {
                let sol = variation_of_parameters(f, eta, &radii, v1).unwrap();
                let v_at_1 = *sol.v_values.last().unwrap();
                let oracle = numerov_oracle(f.as_ref(), eta, v_at_1, &radii);
                let scale = oracle.iter().fold(1.0f64, |m, v| m.max(v.abs()));
                for (i, (a, b)) in sol.v_values.iter().zip(&oracle).enumerate() {
                    assert!(
                        (a - b).abs() <= 1e-8 * scale,
                        "η = {eta}, {name}, v1 = {v1}, r = {}: {a} vs {b}",
                        radii[i]
                    );
                }
            }
        }
    }
}

#[test]
fn eigenvalues_in_dimension_three_are_squares_of_multiples_of_pi() {
    let eig = radial_dirichlet_eigenvalues(3, 5).unwrap();
    for (k, l) in eig.iter().enumerate() {
        let exact = ((k + 1) as f64 * std::f64::consts::PI).powi(2);
        assert!((l - exact).abs() < 1e-8, "k = {}: {l} vs {exact}", k + 1);
    }
}

/// First positive root of `tan x = x`, by bisection on `sin x - x cos x`.
fn tan_root() -> f64 {
    let g = |x: f64| x.sin() - x * x.cos();
    let (mut lo, mut hi) = (std::f64::consts::PI, 1.5 * std::f64::consts::PI - 1e-9);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid).signum() == g(lo).signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn first_eigenvalue_in_dimension_five() {
    let x = tan_root();
    assert!((x - 4.493409457909064).abs() < 1e-12);
    let l = radial_dirichlet_eigenvalues(5, 1).unwrap()[0];
    assert!((l - x * x).abs() < 1e-6, "{l} vs {}", x * x);
}

#[test]
fn first_eigenvalue_in_dimension_four_is_a_bessel_zero() {
    let j11: f64 = 3.831_705_970_207_512_3;
    let l = radial_dirichlet_eigenvalues(4, 1).unwrap()[0];
    assert!((l - j11 * j11).abs() < 1e-6);
}

#[test]
fn eigenvalues_converge_as_the_tolerance_shrinks() {
    let exact = std::f64::consts::PI.powi(2) * 4.0;
    let errs: Vec<f64> = [1e-6, 1e-9, 1e-12]
        .iter()
        .map(|&t| (radial_dirichlet_eigenvalues_tol(3, 2, t).unwrap()[1] - exact).abs())
        .collect();
    assert!(errs[2] <= errs[0], "{errs:?}");
    assert!(errs[2] < 1e-8, "{errs:?}");
}

#[test]
fn eigenvalues_increase_with_the_dimension() {
    let l: Vec<f64> = (3..=8).map(|d| radial_dirichlet_eigenvalues(d, 1).unwrap()[0]).collect();
    assert!(l.windows(2).all(|w| w[1] > w[0]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exponent_identities(eta in 0.0f64..1e3) {
        let (m1, m2) = characteristic_exponents(eta).unwrap();
        prop_assert!((m1 + m2 - 1.0).abs() <= 1e-14 * m1.max(1.0));
        prop_assert!((m1 * m2 + eta).abs() <= 1e-14 * eta.max(1.0));
        prop_assert!(m1 >= 1.0 && m2 <= 0.0);
    }

    #[test]
    fn pointwise_bound_holds(
        eta in 0.1f64..20.0,
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
        w in 0.5f64..12.0,
        v1 in -1.0f64..1.0,
    ) {
        prop_assume!((eta - 2.0).abs() > 0.05);
        let f = move |r: f64| a + b * (w * r).sin();
        let grid: Vec<f64> = (1..=400).map(|i| (i as f64 / 400.0).powi(2)).collect();
        let sol = variation_of_parameters(f, eta, &grid, v1).unwrap();
        prop_assert!(!sol.bounds.resonant);
        for (r, v) in grid.iter().zip(&sol.v_values) {
            let bound = sol.bound_at(*r);
            prop_assert!(v.abs() <= bound * (1.0 + 1e-9) + sol.truncation_bound, "r = {}: |v| = {} > {}", r, v.abs(), bound);
        }
    }

    #[test]
    fn bound_constants_scale_linearly(m in 0.0f64..10.0, eta in 0.1f64..10.0, t in 0.1f64..10.0) {
        prop_assume!((eta - 2.0).abs() > 0.05);
        let b1 = bound_constants(m, eta, 0.0).unwrap();
        let bt = bound_constants(t * m, eta, 0.0).unwrap();
        prop_assert!((bt.c1 - t * b1.c1).abs() <= 1e-12 * (1.0 + bt.c1));
        prop_assert!((bt.c2 - t * b1.c2).abs() <= 1e-12 * (1.0 + bt.c2));
    }
}

use std::f64::consts::{E, LN_2, SQRT_2};

use lcent::constructions::{counterexample_row, lambda0_params, make_trapezoid, x_lambda_density, TrapezoidSpec};
use lcent::entropy::{entropy, trapezoid_entropy_i};
use lcent::harness::checks::{small_theta_limit, triangle_margin, uniform_box_check, KAPPA_PROVEN, SMALL_THETA_SLOPE};
use lcent::lc2d::{random_model, Family};
use lcent::PiecewisePolyDensity;

fn close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
}

fn gap_formula(l0: f64) -> f64 {
    LN_2 - 0.5 + (1.0 - l0).sqrt().ln() + 0.25 * (l0 / (1.0 - l0)).sqrt()
}

#[test]
fn box_convolutions_are_trapezoids() {
    let u = PiecewisePolyDensity::indicator(0.0, 1.0).unwrap();
    let tri = u.convolve(&u).unwrap();
    close(tri.eval(1.0), 1.0, 1e-15);
    close(tri.total_mass(), 1.0, 1e-15);
    let wide = u.convolve(&PiecewisePolyDensity::indicator(2.0, 5.0).unwrap()).unwrap();
    let t = make_trapezoid(&TrapezoidSpec::new(2.0, 1.0, 3.0, 1.0).unwrap()).unwrap();
    close(t.total_mass(), 3.0, 1e-14);
    for k in 0..=60 {
        let x = 1.5 + k as f64 * 0.1;
        close(wide.eval(x), t.eval(x), 1e-14);
    }
}

#[test]
fn trapezoid_entropy_integral() {
    close(trapezoid_entropy_i(1.0, 1.0, 1.0).unwrap(), -0.5, 1e-15);
    let (a, al, be) = (0.7_f64, 1.3, 2.1);
    close(trapezoid_entropy_i(a, al, be).unwrap(), a * al * be * (a * al).ln() - 0.5 * a * al * al, 1e-14);
}

#[test]
fn entropy_under_scaling() {
    let f = make_trapezoid(&TrapezoidSpec::new(-1.0, 1.0, 1.0, 1.0).unwrap()).unwrap();
    let s = entropy(&f).unwrap().value;
    close(entropy(&f.scale_pushforward(3.0).unwrap()).unwrap().value - s, 3f64.ln(), 1e-13);
}

#[test]
fn half_mixture_entropy() {
    let f = x_lambda_density(1.0, 1.0, 0.5).unwrap();
    close(entropy(&f).unwrap().value, LN_2 + 0.5, 1e-12);
}

#[test]
fn two_bump_gap_is_positive_below_threshold() {
    for l0 in [0.01, 0.05, 0.1, 0.14] {
        let row = counterexample_row(l0, 1.0).unwrap();
        close(row.gap_closed, gap_formula(l0), 1e-12);
        assert!(row.gap_closed > 0.0);
        close(row.s_half_closed, LN_2 + 0.5, 1e-12);
        assert!(row.abs_discrepancy < 1e-9);
    }
    let threshold = 1.0 / (2.0 * (2.0 + SQRT_2));
    assert!(lambda0_params(0.2, 1.0).is_err());
    assert!(lambda0_params(threshold + 1e-6, 1.0).is_err());
    assert!(threshold < 0.2);
}

#[test]
fn small_theta_constant_supports_fifth_power() {
    let t0 = 1.0 / SMALL_THETA_SLOPE;
    let k = KAPPA_PROVEN;
    assert!(k.exp() <= t0.powf(k) + (1.0 - t0).powf(k));
    close(SMALL_THETA_SLOPE, 60.0 * (1.0 + E), 0.0);
    assert!(t0 < 1.0 / (2.0 * (1.0 + E)));
    assert!(small_theta_limit() > 0.0);
}

#[test]
fn uniform_box_row_at_half_width() {
    let r = uniform_box_check(0.5, 1.0).unwrap();
    close(r.lhs, 0.25f64.exp(), 1e-12);
    close(r.rhs, 1.5, 1e-12);
    assert!(r.pass);
}

#[test]
fn busemann_triangle_on_random_polygons() {
    for seed in 0..100 {
        let m = random_model(seed, Family::Polygon, 8).unwrap();
        let sum = m.busemann_norm([1.0, 1.0]).unwrap();
        assert!(sum <= m.busemann_norm([1.0, 0.0]).unwrap() + m.busemann_norm([0.0, 1.0]).unwrap() + 1e-12);
    }
}

#[test]
fn fifth_power_triangle_on_random_polygons() {
    for seed in 0..100 {
        let m = random_model(seed, Family::Polygon, 8).unwrap();
        let r = triangle_margin(&m, [1.0, 0.0], [0.0, 1.0], KAPPA_PROVEN).unwrap();
        assert!(r.pass, "seed {seed}: margin {}", r.margin);
    }
}

//! Differential entropy `S(f) = -∫ f ln f` in nats.
//!
//! Linear pieces use the antiderivative of `u ln u`; higher-degree pieces are
//! integrated by adaptive Gauss–Kronrod with breakpoints as forced
//! subdivision points.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly;
use crate::pwpoly::PiecewisePolyDensity;
use crate::quadrature;

/// Absolute quadrature tolerance per piece.
pub const QUAD_TOL: f64 = 1e-11;
pub const QUAD_MAX_DEPTH: u32 = 40;

/// Values below this contribute nothing (`t ln t → 0`).
const ZERO_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyMethod {
    ClosedForm,
    Quadrature,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyValue {
    pub value: f64,
    pub method: EntropyMethod,
    pub abs_error_bound: f64,
}

pub fn entropy(f: &PiecewisePolyDensity) -> Result<EntropyValue> {
    entropy_with_tol(f, QUAD_TOL)
}

/// Entropy with a custom per-piece quadrature tolerance.
pub fn entropy_with_tol(f: &PiecewisePolyDensity, tol: f64) -> Result<EntropyValue> {
    if !f.is_normalized() {
        return Err(Error::NotNormalized(f.total_mass()));
    }
    let mut value = 0.0;
    let mut error = 0.0;
    let (mut closed, mut quad) = (false, false);
    let floor = 1e-8 * f.pieces().iter().map(|p| p[0].abs()).fold(0.0, f64::max);
    for (k, p) in f.pieces().iter().enumerate() {
        let (a, b) = f.piece_interval(k);
        let w = b - a;
        let deg = poly::effective_degree(p, w, 0.0);
        if deg <= 1 {
            let c1 = if p.len() > 1 { p[1] } else { 0.0 };
            value += linear_plogp(p[0], c1, w);
            closed = true;
        } else {
            let dip = check_piece_nonnegative(p, a, w, floor)?;
            if dip > 0.0 {
                error += w * 2.0 * dip * (1.0 - (2.0 * dip).ln());
            }
            let q = quadrature::integrate(
                |t| {
                    let v = poly::eval(p, t);
                    if v < ZERO_FLOOR {
                        0.0
                    } else {
                        v * v.ln()
                    }
                },
                0.0,
                w,
                tol,
                QUAD_MAX_DEPTH,
            );
            value += q.value;
            error += q.error;
            quad = true;
        }
    }
    let method = match (closed, quad) {
        (_, false) => EntropyMethod::ClosedForm,
        (false, true) => EntropyMethod::Quadrature,
        (true, true) => EntropyMethod::Mixed,
    };
    Ok(EntropyValue { value: -value, method, abs_error_bound: error })
}

/// Rejects values below `-1e-12` relative to the piece or below `-floor`
/// and returns the deepest accepted dip below zero. Convolving factors of
/// very unequal widths in local coordinates loses about `eps (L/δ)^2`
/// relative accuracy, which shows up as residue at the support ends.
fn check_piece_nonnegative(p: &[f64], left: f64, w: f64, floor: f64) -> Result<f64> {
    let scale = poly::eval(&p.iter().map(|c| c.abs()).collect::<Vec<_>>(), w).max(f64::MIN_POSITIVE);
    let mut probes = vec![0.0, w];
    probes.extend(poly::real_roots(&poly::derivative(p), 0.0, w));
    let mut dip: f64 = 0.0;
    for t in probes {
        let v = poly::eval(p, t);
        if v < -(1e-12 * scale).max(floor) {
            return Err(Error::NegativeDensity { x: left + t, value: v });
        }
        dip = dip.max(-v);
    }
    Ok(dip)
}

/// `∫_0^w u ln u dt` for `u = c0 + c1 t`, stable for nearly flat pieces.
fn linear_plogp(c0: f64, c1: f64, w: f64) -> f64 {
    let u0 = c0.max(0.0);
    let u1 = (c0 + c1 * w).max(0.0);
    if c1 == 0.0 || c1.abs() < 1e-14 * c0.abs() {
        return w * xlogx(u0);
    }
    let mean = 0.5 * (u0 + u1);
    let delta = u1 - u0;
    if mean <= ZERO_FLOOR {
        return 0.0;
    }
    let r = delta / mean;
    let avg = if r.abs() < 0.25 {
        // average of u ln u over [mean - δ/2, mean + δ/2] as a series in r
        let r2 = r * r;
        let mut sum = mean * mean.ln();
        let mut rpow = 1.0;
        let mut fact_num = 1.0; // (2k-2)!
        let mut fact_den = 6.0; // (2k+1)!
        let mut four = 4.0;
        for k in 1..=12u32 {
            rpow *= r2;
            sum += mean * rpow * fact_num / (four * fact_den);
            let kk = k as f64;
            fact_num *= (2.0 * kk - 1.0) * (2.0 * kk);
            fact_den *= (2.0 * kk + 2.0) * (2.0 * kk + 3.0);
            four *= 4.0;
        }
        sum
    } else {
        (g_antideriv(u1) - g_antideriv(u0)) / delta
    };
    w * avg
}

/// Antiderivative of `u ln u`.
fn g_antideriv(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else {
        u * u * (0.5 * u.ln() - 0.25)
    }
}

fn xlogx(x: f64) -> f64 {
    if x < ZERO_FLOOR {
        0.0
    } else {
        x * x.ln()
    }
}

/// `(-ln ‖f‖∞, 1 - ln ‖f‖∞)`, the entropy sandwich for log-concave densities.
pub fn entropy_bounds(f: &PiecewisePolyDensity) -> Result<(f64, f64)> {
    if !f.is_normalized() {
        return Err(Error::NotNormalized(f.total_mass()));
    }
    let sup = f.sup_norm();
    if !(sup > 0.0) {
        return Err(Error::InvalidDensity("zero density".into()));
    }
    Ok((-sup.ln(), 1.0 - sup.ln()))
}

/// `∫ A·T ln(A·T)` for a trapezoid `T` with slope widths `alpha <= beta`:
/// `Aαβ ln(Aα) - ½Aα²`.
pub fn trapezoid_entropy_i(amplitude: f64, alpha: f64, beta: f64) -> Result<f64> {
    if !(amplitude > 0.0) || !(alpha > 0.0) {
        return Err(Error::Domain(format!(
            "need A > 0 and alpha > 0, got A = {amplitude}, alpha = {alpha}"
        )));
    }
    if alpha > beta {
        return Err(Error::Domain(format!("need alpha <= beta, got {alpha} > {beta}")));
    }
    Ok(amplitude * alpha * beta * (amplitude * alpha).ln() - 0.5 * amplitude * alpha * alpha)
}

/// Entropy of a centred normal law with the given variance.
pub fn gaussian_entropy(variance: f64) -> f64 {
    0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * variance).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn triangle() -> PiecewisePolyDensity {
        PiecewisePolyDensity::new(vec![-1.0, 0.0, 1.0], vec![vec![0.0, 1.0], vec![1.0, -1.0]]).unwrap()
    }

    #[test]
    fn uniform_entropies() {
        let u = PiecewisePolyDensity::uniform(0.0, 1.0).unwrap();
        let s = entropy(&u).unwrap();
        assert_eq!(s.value, 0.0);
        assert_eq!(s.method, EntropyMethod::ClosedForm);
        assert_eq!(s.abs_error_bound, 0.0);
        close(entropy(&PiecewisePolyDensity::uniform(0.0, 0.5).unwrap()).unwrap().value, -std::f64::consts::LN_2, 1e-15);
    }

    #[test]
    fn triangle_entropy_is_one_half() {
        close(entropy(&triangle()).unwrap().value, 0.5, 1e-15);
    }

    #[test]
    fn nearly_flat_linear_piece() {
        // slope 1e-9 on a unit-height piece: series branch
        let eps = 1e-9;
        let p = PiecewisePolyDensity::new(vec![0.0, 1.0], vec![vec![1.0 - eps / 2.0, eps]]).unwrap();
        // exact: -∫ u ln u with u ≈ 1 + eps(t - 1/2); ≈ -eps²/24 to leading order
        let s = entropy(&p).unwrap().value;
        close(s, -eps * eps / 24.0, 1e-24);
    }

    #[test]
    fn quadrature_matches_closed_form_on_degree_two_shell() {
        // the triangle written with explicit zero quadratic terms still takes the
        // closed-form path; a genuine quadratic goes through quadrature
        let q = PiecewisePolyDensity::new(vec![0.0, 1.0], vec![vec![0.0, 6.0, -6.0]]).unwrap();
        let s = entropy(&q).unwrap();
        assert_eq!(s.method, EntropyMethod::Quadrature);
        // -∫_0^1 6t(1-t) ln(6t(1-t)) dt = 5/3 - ln 6
        close(s.value, 5.0 / 3.0 - 6f64.ln(), 1e-11);
    }

    #[test]
    fn bounds_examples() {
        let (lo, hi) = entropy_bounds(&PiecewisePolyDensity::uniform(0.0, 1.0).unwrap()).unwrap();
        close(lo, 0.0, 0.0);
        close(hi, 1.0, 0.0);
        let (lo, hi) = entropy_bounds(&triangle()).unwrap();
        assert!(lo <= 0.5 && 0.5 <= hi);
        let u2 = PiecewisePolyDensity::uniform(0.0, 2.0).unwrap();
        let (lo, _) = entropy_bounds(&u2).unwrap();
        close(lo, entropy(&u2).unwrap().value, 1e-15);
    }

    #[test]
    fn trapezoid_i_values() {
        close(trapezoid_entropy_i(1.0, 1.0, 1.0).unwrap(), -0.5, 0.0);
        close(trapezoid_entropy_i(0.5, 1.0, 2.0).unwrap(), -std::f64::consts::LN_2 - 0.25, 1e-15);
        assert!(trapezoid_entropy_i(1.0, 2.0, 1.0).is_err());
        assert!(trapezoid_entropy_i(0.0, 1.0, 1.0).is_err());
        assert!(trapezoid_entropy_i(1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn rejects_unnormalized() {
        let d = PiecewisePolyDensity::indicator(0.0, 2.0).unwrap();
        assert!(matches!(entropy(&d), Err(Error::NotNormalized(_))));
    }
}

//! Trapezoids, the symmetric two-bump density, and the entropies of
//! `X_λ = √λ X + √(1-λ) X'` for i.i.d. two-bump summands.
//!
//! For the two-bump law with gap `a` and bump width `h`, `X_{1/2}` is a sum
//! of three disjoint triangles when `a/h > 1/2`, and at the special `λ₀`
//! where `√((1-λ₀)/λ₀) = 2a/h + 1` the first two trapezoids of `X_{λ₀}` merge
//! into one wide trapezoid. Both entropies then have closed forms, and the
//! latter is strictly larger whenever `λ₀ < 1/(2(2+√2))`.

use serde::{Deserialize, Serialize};

use crate::entropy::{entropy, trapezoid_entropy_i};
use crate::error::{Error, Result};
use crate::pwpoly::PiecewisePolyDensity;

/// `1/(2(2+√2)) = (2-√2)/4`: the disjoint-support threshold for `λ₀`.
pub const LAMBDA0_THRESHOLD: f64 = 0.146_446_609_406_726_24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapezoidSpec {
    pub s: f64,
    pub alpha: f64,
    pub beta: f64,
    pub amplitude: f64,
}

impl TrapezoidSpec {
    pub fn new(s: f64, alpha: f64, beta: f64, amplitude: f64) -> Result<Self> {
        let spec = TrapezoidSpec { s, alpha, beta, amplitude };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(Error::Domain(format!("trapezoid alpha must be positive, got {}", self.alpha)));
        }
        if self.alpha > self.beta {
            return Err(Error::Domain(format!(
                "trapezoid needs alpha <= beta, got {} > {}",
                self.alpha, self.beta
            )));
        }
        if !(self.amplitude > 0.0) {
            return Err(Error::Domain(format!("amplitude must be positive, got {}", self.amplitude)));
        }
        Ok(())
    }

    pub fn support(&self) -> (f64, f64) {
        (self.s, self.s + self.alpha + self.beta)
    }

    pub fn mass(&self) -> f64 {
        self.amplitude * self.alpha * self.beta
    }

    /// Pointwise value of `amplitude · T^s_{α,β}(x)`.
    pub fn value(&self, x: f64) -> f64 {
        let (s, a, b) = (self.s, self.alpha, self.beta);
        let t = if x < s || x > s + a + b {
            0.0
        } else if x <= s + a {
            x - s
        } else if x <= s + b {
            a
        } else {
            s + a + b - x
        };
        self.amplitude * t
    }
}

/// `amplitude · T^s_{α,β}` as a (generally unnormalized) piecewise-linear function.
pub fn make_trapezoid(spec: &TrapezoidSpec) -> Result<PiecewisePolyDensity> {
    spec.validate()?;
    let TrapezoidSpec { s, alpha, beta, amplitude } = *spec;
    let top = amplitude * alpha;
    let mut bp = vec![s, s + alpha];
    let mut pieces = vec![vec![0.0, amplitude]];
    if beta > alpha {
        bp.push(s + beta);
        pieces.push(vec![top]);
    }
    bp.push(s + alpha + beta);
    pieces.push(vec![top, -amplitude]);
    PiecewisePolyDensity::new(bp, pieces)
}

/// `(1/2h)(1_[-b,-a] + 1_[a,b])` with `b = a + h`.
pub fn two_bump_density(a: f64, h: f64) -> Result<PiecewisePolyDensity> {
    if !(a > 0.0) || !(h > 0.0) {
        return Err(Error::Domain(format!("two-bump needs a > 0 and h > 0, got a = {a}, h = {h}")));
    }
    let b = a + h;
    let height = 1.0 / (2.0 * h);
    PiecewisePolyDensity::new(vec![-b, -a, a, b], vec![vec![height], vec![0.0], vec![height]])
}

/// Density of `√λ X + √(1-λ) Y` for independent `X ~ f`, `Y ~ g`.
pub fn normalized_sum_density(
    f: &PiecewisePolyDensity,
    g: &PiecewisePolyDensity,
    lambda: f64,
) -> Result<PiecewisePolyDensity> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Domain(format!("lambda must lie in (0,1), got {lambda}")));
    }
    let x = f.scale_pushforward(lambda.sqrt())?;
    let y = g.scale_pushforward((1.0 - lambda).sqrt())?;
    x.convolve(&y)
}

/// Density of `X_λ` for i.i.d. two-bump summands, `0 < λ <= 1/2`.
pub fn x_lambda_density(a: f64, h: f64, lambda: f64) -> Result<PiecewisePolyDensity> {
    if !(lambda > 0.0 && lambda <= 0.5) {
        return Err(Error::Domain(format!("lambda must lie in (0, 1/2], got {lambda}")));
    }
    let f = two_bump_density(a, h)?;
    if lambda == 0.5 {
        let half = f.scale_pushforward(std::f64::consts::FRAC_1_SQRT_2)?;
        return half.convolve(&half);
    }
    normalized_sum_density(&f, &f, lambda)
}

/// The four shifted trapezoids whose sum is `(2h)² uv · f_λ`.
pub fn x_lambda_trapezoids(a: f64, h: f64, lambda: f64) -> Result<[TrapezoidSpec; 4]> {
    if !(lambda > 0.0 && lambda <= 0.5) {
        return Err(Error::Domain(format!("lambda must lie in (0, 1/2], got {lambda}")));
    }
    let b = a + h;
    let u = lambda.sqrt();
    let v = (1.0 - lambda).sqrt();
    let amp = 1.0 / ((2.0 * h).powi(2) * u * v);
    let shifts = [-(u + v) * b, u * a - v * b, -u * b + v * a, (u + v) * a];
    let mut out = [TrapezoidSpec { s: 0.0, alpha: u * h, beta: v * h, amplitude: amp }; 4];
    for (spec, s) in out.iter_mut().zip(shifts) {
        spec.s = s;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoBumpSpec {
    pub a: f64,
    pub h: f64,
    pub lambda0: f64,
}

impl TwoBumpSpec {
    pub fn b(&self) -> f64 {
        self.a + self.h
    }

    fn validate(&self) -> Result<()> {
        if !(self.a > 0.0) || !(self.h > 0.0) {
            return Err(Error::Domain(format!("need a, h > 0, got a = {}, h = {}", self.a, self.h)));
        }
        check_lambda0(self.lambda0)?;
        if !(self.a / self.h > 0.5) {
            return Err(Error::Domain(format!("need a/h > 1/2, got {}", self.a / self.h)));
        }
        let lhs = ((1.0 - self.lambda0) / self.lambda0).sqrt();
        let rhs = 2.0 * self.a / self.h + 1.0;
        if (lhs - rhs).abs() > 1e-12 * rhs {
            return Err(Error::Domain(format!(
                "parameters do not satisfy √((1-λ₀)/λ₀) = 2a/h + 1 ({lhs} vs {rhs})"
            )));
        }
        Ok(())
    }
}

fn check_lambda0(lambda0: f64) -> Result<()> {
    if !(lambda0 > 0.0 && lambda0 < LAMBDA0_THRESHOLD) {
        return Err(Error::Domain(format!(
            "lambda0 = {lambda0} must lie in (0, 1/(2(2+√2))) = (0, {LAMBDA0_THRESHOLD:.10})"
        )));
    }
    Ok(())
}

/// The gap `a` that makes the first two trapezoids of `X_{λ₀}` merge.
pub fn lambda0_params(lambda0: f64, h: f64) -> Result<TwoBumpSpec> {
    check_lambda0(lambda0)?;
    if !(h > 0.0) {
        return Err(Error::Domain(format!("h must be positive, got {h}")));
    }
    let a = h * (((1.0 - lambda0) / lambda0).sqrt() - 1.0) / 2.0;
    let spec = TwoBumpSpec { a, h, lambda0 };
    spec.validate()?;
    Ok(spec)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormEntropies {
    pub s_half: f64,
    pub s_lambda0: f64,
    pub gap: f64,
}

pub fn closed_form_entropies(spec: &TwoBumpSpec) -> Result<ClosedFormEntropies> {
    spec.validate()?;
    let h = spec.h;
    let l0 = spec.lambda0;
    let ratio = (l0 / (1.0 - l0)).sqrt();
    let s_half = (2.0 * h).ln() + 0.5;
    let s_lambda0 = (4.0 * h * (1.0 - l0).sqrt()).ln() + 0.25 * ratio;
    let gap = std::f64::consts::LN_2 - 0.5 + 0.5 * (1.0 - l0).ln() + 0.25 * ratio;
    Ok(ClosedFormEntropies { s_half, s_lambda0, gap })
}

/// Case-1 entropy assembled from the trapezoid integral `I`, independent of
/// the simplified `ln(2h) + 1/2`.
pub fn s_half_from_trapezoid_integrals(h: f64) -> Result<f64> {
    let w = h / std::f64::consts::SQRT_2;
    Ok(-2.0 * trapezoid_entropy_i(1.0 / (2.0 * h * h), w, w)? - trapezoid_entropy_i(1.0 / (h * h), w, w)?)
}

/// One row of the counterexample table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleRow {
    pub lambda0: f64,
    pub a: f64,
    pub h: f64,
    pub s_half_closed: f64,
    pub s_lambda0_closed: f64,
    pub gap_closed: f64,
    pub s_half_pipeline: f64,
    pub s_lambda0_pipeline: f64,
    pub abs_discrepancy: f64,
}

impl CounterexampleRow {
    pub const CSV_HEADER: &'static str = "lambda0,a,h,s_half_closed,s_lambda0_closed,gap_closed,s_half_pipeline,s_lambda0_pipeline,abs_discrepancy";

    pub fn to_csv(&self) -> String {
        [
            self.lambda0,
            self.a,
            self.h,
            self.s_half_closed,
            self.s_lambda0_closed,
            self.gap_closed,
            self.s_half_pipeline,
            self.s_lambda0_pipeline,
            self.abs_discrepancy,
        ]
        .iter()
        .map(|&x| crate::jsonfmt::fmt_f64(x))
        .collect::<Vec<_>>()
        .join(",")
    }
}

/// Closed forms next to the exact convolution pipeline for one `λ₀`.
pub fn counterexample_row(lambda0: f64, h: f64) -> Result<CounterexampleRow> {
    let spec = lambda0_params(lambda0, h)?;
    let closed = closed_form_entropies(&spec)?;
    let s_half_pipeline = entropy(&x_lambda_density(spec.a, h, 0.5)?)?.value;
    let s_lambda0_pipeline = entropy(&x_lambda_density(spec.a, h, lambda0)?)?.value;
    let abs_discrepancy = (s_half_pipeline - closed.s_half)
        .abs()
        .max((s_lambda0_pipeline - closed.s_lambda0).abs());
    Ok(CounterexampleRow {
        lambda0,
        a: spec.a,
        h,
        s_half_closed: closed.s_half,
        s_lambda0_closed: closed.s_lambda0,
        gap_closed: closed.gap,
        s_half_pipeline,
        s_lambda0_pipeline,
        abs_discrepancy,
    })
}

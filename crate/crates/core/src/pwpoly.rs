//! Compactly supported piecewise-polynomial densities on the real line.
//!
//! A density is a strictly increasing list of breakpoints plus one
//! polynomial per interval, stored in the local coordinate `t = x - left`.
//! Local coordinates keep coefficients small when supports sit far from the
//! origin and when convolution raises the degree.
//!
//! Convolution is exact: two pieces `p·1[0,L1]` and `q·1[0,L2]` convolve to
//! a polynomial on each of the three regions cut out by `min(L1,L2)` and
//! `max(L1,L2)`, and the global result is the sum of these contributions on
//! the set of pairwise breakpoint sums.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly;

/// Maximum polynomial degree a piece may carry.
pub const DEGREE_CAP: usize = 16;

/// Relative (to support width) tolerance for merging breakpoint sums.
pub const DEDUP_REL: f64 = 1e-12;

/// Mass tolerance for operations that require a normalized density.
pub const NORMALIZED_TOL: f64 = 1e-9;

const EVEN_TOL: f64 = 1e-12;
const LOG_CONCAVE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DensityFile", into = "DensityFile")]
pub struct PiecewisePolyDensity {
    breakpoints: Vec<f64>,
    pieces: Vec<Vec<f64>>,
    total_mass: f64,
}

/// On-disk form: `{ "breakpoints": [...], "pieces": [[c0, c1, ...], ...] }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityFile {
    pub breakpoints: Vec<f64>,
    pub pieces: Vec<Vec<f64>>,
}

impl TryFrom<DensityFile> for PiecewisePolyDensity {
    type Error = Error;

    fn try_from(file: DensityFile) -> Result<Self> {
        PiecewisePolyDensity::new(file.breakpoints, file.pieces)
    }
}

impl From<PiecewisePolyDensity> for DensityFile {
    fn from(d: PiecewisePolyDensity) -> Self {
        DensityFile { breakpoints: d.breakpoints, pieces: d.pieces }
    }
}

impl PiecewisePolyDensity {
    /// Validates structure and the nonnegativity certificate, then caches the mass.
    pub fn new(breakpoints: Vec<f64>, pieces: Vec<Vec<f64>>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::InvalidDensity("need at least two breakpoints".into()));
        }
        if pieces.len() + 1 != breakpoints.len() {
            return Err(Error::InvalidDensity(format!(
                "{} breakpoints but {} pieces",
                breakpoints.len(),
                pieces.len()
            )));
        }
        if breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidDensity("non-finite breakpoint".into()));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidDensity("breakpoints must be strictly increasing".into()));
        }
        for p in &pieces {
            if p.is_empty() {
                return Err(Error::InvalidDensity("empty coefficient list".into()));
            }
            if p.len() - 1 > DEGREE_CAP {
                return Err(Error::DegreeCap { degree: p.len() - 1, cap: DEGREE_CAP });
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidDensity("non-finite coefficient".into()));
            }
        }
        let d = Self::from_parts(breakpoints, pieces);
        d.check_nonnegative()?;
        Ok(d)
    }

    pub(crate) fn from_parts(breakpoints: Vec<f64>, pieces: Vec<Vec<f64>>) -> Self {
        let mut d = PiecewisePolyDensity { breakpoints, pieces, total_mass: 0.0 };
        d.total_mass = d.exact_mass();
        d
    }

    /// Uniform probability density on `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::Domain(format!("uniform needs lo < hi, got [{lo}, {hi}]")));
        }
        Self::new(vec![lo, hi], vec![vec![1.0 / (hi - lo)]])
    }

    /// The indicator `1_[lo, hi]` (mass `hi - lo`).
    pub fn indicator(lo: f64, hi: f64) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::Domain(format!("indicator needs lo < hi, got [{lo}, {hi}]")));
        }
        Self::new(vec![lo, hi], vec![vec![1.0]])
    }

    /// Continuous piecewise-linear function through `(xs[i], ys[i])`.
    pub fn piecewise_linear(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::InvalidDensity("xs and ys differ in length".into()));
        }
        let pieces = xs
            .windows(2)
            .zip(ys.windows(2))
            .map(|(x, y)| vec![y[0], (y[1] - y[0]) / (x[1] - x[0])])
            .collect();
        Self::new(xs.to_vec(), pieces)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[Vec<f64>] {
        &self.pieces
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn support(&self) -> (f64, f64) {
        (self.breakpoints[0], *self.breakpoints.last().unwrap())
    }

    pub fn num_pieces(&self) -> usize {
        self.pieces.len()
    }

    pub fn max_degree(&self) -> usize {
        self.pieces.iter().map(|p| p.len() - 1).max().unwrap_or(0)
    }

    /// `[left, right]` endpoints of piece `k`.
    pub fn piece_interval(&self, k: usize) -> (f64, f64) {
        (self.breakpoints[k], self.breakpoints[k + 1])
    }

    pub fn is_normalized(&self) -> bool {
        (self.total_mass - 1.0).abs() <= NORMALIZED_TOL
    }

    fn require_normalized(&self) -> Result<()> {
        if self.is_normalized() {
            Ok(())
        } else {
            Err(Error::NotNormalized(self.total_mass))
        }
    }

    fn exact_mass(&self) -> f64 {
        self.pieces
            .iter()
            .enumerate()
            .map(|(k, p)| poly::integral_from_zero(p, self.width(k)))
            .sum()
    }

    fn width(&self, k: usize) -> f64 {
        self.breakpoints[k + 1] - self.breakpoints[k]
    }

    /// Value at piece endpoints and interior critical points must be >= -tol.
    fn check_nonnegative(&self) -> Result<()> {
        let scale = self.endpoint_scale();
        let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
        for (k, p) in self.pieces.iter().enumerate() {
            let w = self.width(k);
            let mut probes = vec![0.0, w];
            if p.len() > 2 {
                probes.extend(poly::real_roots(&poly::derivative(p), 0.0, w));
            }
            for t in probes {
                let v = poly::eval(p, t);
                if v < -tol {
                    return Err(Error::NegativeDensity { x: self.breakpoints[k] + t, value: v });
                }
            }
        }
        Ok(())
    }

    fn endpoint_scale(&self) -> f64 {
        self.pieces
            .iter()
            .enumerate()
            .map(|(k, p)| poly::eval(p, 0.0).abs().max(poly::eval(p, self.width(k)).abs()))
            .fold(0.0, f64::max)
    }

    fn piece_index(&self, x: f64) -> Option<usize> {
        let (lo, hi) = self.support();
        if !(x >= lo && x <= hi) {
            return None;
        }
        let k = self.breakpoints.partition_point(|&b| b <= x);
        Some(k.saturating_sub(1).min(self.pieces.len() - 1))
    }

    /// Density value; zero outside the support. At an interior breakpoint the
    /// piece to the right is used.
    pub fn eval(&self, x: f64) -> f64 {
        match self.piece_index(x) {
            Some(k) => poly::eval(&self.pieces[k], x - self.breakpoints[k]),
            None => 0.0,
        }
    }

    /// `∫_lo^hi f`; infinite bounds are allowed.
    pub fn integrate(&self, lo: f64, hi: f64) -> Result<f64> {
        if lo > hi {
            return Err(Error::ReversedBounds { lo, hi });
        }
        let mut acc = 0.0;
        for (k, p) in self.pieces.iter().enumerate() {
            let (a, b) = self.piece_interval(k);
            let l = lo.max(a);
            let r = hi.min(b);
            if r > l {
                acc += poly::integral_from_zero(p, r - a) - poly::integral_from_zero(p, l - a);
            }
        }
        Ok(acc)
    }

    /// Exact maximum over endpoints and interior critical points.
    pub fn sup_norm(&self) -> f64 {
        let mut best = 0.0f64;
        for (k, p) in self.pieces.iter().enumerate() {
            let w = self.width(k);
            best = best.max(poly::eval(p, 0.0)).max(poly::eval(p, w));
            if p.len() > 2 {
                for t in poly::real_roots(&poly::derivative(p), 0.0, w) {
                    best = best.max(poly::eval(p, t));
                }
            }
        }
        best
    }

    /// Exact convolution `f ⋆ g`.
    pub fn convolve(&self, other: &Self) -> Result<Self> {
        let degree = self.max_degree() + other.max_degree() + 1;
        if degree > DEGREE_CAP {
            return Err(Error::DegreeCap { degree, cap: DEGREE_CAP });
        }
        let (flo, fhi) = self.support();
        let (glo, ghi) = other.support();
        let width = (fhi - flo) + (ghi - glo);
        let tol = DEDUP_REL * width;

        let mut sums: Vec<f64> = self
            .breakpoints
            .iter()
            .flat_map(|&a| other.breakpoints.iter().map(move |&b| a + b))
            .collect();
        sums.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut out_bp: Vec<f64> = Vec::with_capacity(sums.len());
        for s in sums {
            match out_bp.last() {
                Some(&last) if s - last <= tol => {}
                _ => out_bp.push(s),
            }
        }
        let nearest = |x: f64| -> usize {
            let k = out_bp.partition_point(|&b| b < x);
            if k == 0 {
                0
            } else if k == out_bp.len() || (x - out_bp[k - 1]) <= (out_bp[k] - x) {
                k - 1
            } else {
                k
            }
        };

        let mut out: Vec<Vec<f64>> = vec![vec![0.0]; out_bp.len() - 1];
        for (i, p) in self.pieces.iter().enumerate() {
            if p.iter().all(|&c| c == 0.0) {
                continue;
            }
            let l1 = self.width(i);
            for (j, q) in other.pieces.iter().enumerate() {
                if q.iter().all(|&c| c == 0.0) {
                    continue;
                }
                let l2 = other.width(j);
                let offset = self.breakpoints[i] + other.breakpoints[j];
                for region in piece_pair_regions(p, l1, q, l2) {
                    if region.length <= tol {
                        continue;
                    }
                    let start = offset + region.z0;
                    let ks = nearest(start);
                    let ke = nearest(start + region.length);
                    for k in ks..ke {
                        let shifted = poly::taylor_shift(&region.poly, out_bp[k] - start);
                        poly::add_into(&mut out[k], &shifted);
                    }
                }
            }
        }
        Ok(Self::from_parts(out_bp, out))
    }

    /// Density of `bX`, i.e. `x ↦ f(x/b)/|b|`.
    pub fn scale_pushforward(&self, b: f64) -> Result<Self> {
        if b == 0.0 || !b.is_finite() {
            return Err(Error::ZeroScale);
        }
        let inv = 1.0 / b;
        let norm = 1.0 / b.abs();
        let n = self.pieces.len();
        let (breakpoints, pieces) = if b > 0.0 {
            let bp = self.breakpoints.iter().map(|&x| b * x).collect();
            let pcs = self
                .pieces
                .iter()
                .map(|p| poly::scale(&poly::compose_affine(p, 0.0, inv), norm))
                .collect();
            (bp, pcs)
        } else {
            let bp = self.breakpoints.iter().rev().map(|&x| b * x).collect();
            let pcs = (0..n)
                .rev()
                .map(|k| poly::scale(&poly::compose_affine(&self.pieces[k], self.width(k), inv), norm))
                .collect();
            (bp, pcs)
        };
        Ok(Self::from_parts(breakpoints, pieces))
    }

    /// Density of `X + c`.
    pub fn translate(&self, c: f64) -> Self {
        Self::from_parts(self.breakpoints.iter().map(|&x| x + c).collect(), self.pieces.clone())
    }

    /// Rescales coefficients so the mass is one.
    pub fn normalize(&self) -> Result<Self> {
        let mass = self.exact_mass();
        if !(mass > 0.0) {
            return Err(Error::NonPositiveMass(mass));
        }
        let pieces = self.pieces.iter().map(|p| poly::scale(p, 1.0 / mass)).collect();
        Ok(Self::from_parts(self.breakpoints.clone(), pieces))
    }

    /// `P(X > a)`.
    pub fn tail_prob(&self, a: f64) -> Result<f64> {
        self.require_normalized()?;
        self.integrate(a, f64::INFINITY)
    }

    /// The point `a` with `P(X > a) = prob`, by bisection to `1e-12`.
    pub fn upper_quantile(&self, prob: f64) -> Result<f64> {
        self.require_normalized()?;
        if !(prob > 0.0 && prob < 1.0) {
            return Err(Error::Domain(format!("tail probability {prob} outside (0,1)")));
        }
        let (mut lo, mut hi) = self.support();
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.integrate(mid, f64::INFINITY)? > prob {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    pub fn mean(&self) -> Result<f64> {
        self.require_normalized()?;
        Ok(self
            .pieces
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let w = self.width(k);
                self.breakpoints[k] * poly::integral_from_zero(p, w)
                    + poly::first_moment_from_zero(p, w)
            })
            .sum())
    }

    /// Evenness probe: symmetric support and `f(x) = f(-x)` on an interior grid.
    pub fn is_even(&self) -> bool {
        let (lo, hi) = self.support();
        let width = hi - lo;
        if (lo + hi).abs() > EVEN_TOL * width.max(1.0) {
            return false;
        }
        let tol = EVEN_TOL * self.sup_norm().max(1.0);
        const N: usize = 257;
        (0..N).all(|k| {
            let x = hi * (k as f64 + 0.382) / N as f64;
            (self.eval(x) - self.eval(-x)).abs() <= tol
        })
    }

    /// `sup{x > 0 : f(x) >= e^{-beta} f(0)}` for an even density.
    pub fn a_beta(&self, beta: f64) -> Result<f64> {
        if !(beta > 0.0) {
            return Err(Error::Domain(format!("beta must be positive, got {beta}")));
        }
        if !self.is_even() {
            return Err(Error::Hypothesis("a_beta needs an even density".into()));
        }
        let f0 = self.eval(0.0);
        if !(f0 > 0.0) {
            return Err(Error::Hypothesis("a_beta needs f(0) > 0".into()));
        }
        let level = (-beta).exp() * f0;
        for k in (0..self.pieces.len()).rev() {
            let (a, b) = self.piece_interval(k);
            if b <= 0.0 {
                break;
            }
            let p = &self.pieces[k];
            let w = b - a;
            if poly::eval(p, w) >= level {
                return Ok(b);
            }
            let t0 = (-a).max(0.0);
            let mut shifted = p.clone();
            shifted[0] -= level;
            if let Some(&r) = poly::real_roots(&shifted, t0, w).last() {
                return Ok(a + r);
            }
        }
        Ok(0.0)
    }

    /// Probe-based log-concavity certificate.
    ///
    /// Samples `probes` points per piece, requires the positive set to be
    /// contiguous, and checks midpoint concavity of `ln f` over sample pairs
    /// at dyadic index strides. A sample counts as positive only when it
    /// exceeds its floating-point evaluation error, and that error is added
    /// to the `1e-9` slack.
    pub fn is_log_concave(&self, probes: usize) -> bool {
        let probes = probes.max(3);
        let mut samples: Vec<(f64, f64, f64)> = Vec::new();
        for (k, p) in self.pieces.iter().enumerate() {
            let w = self.width(k);
            for j in 0..probes {
                let t = w * j as f64 / (probes - 1) as f64;
                let v = poly::eval(p, t);
                samples.push((self.breakpoints[k] + t, v, eval_error(p, t)));
            }
        }
        samples.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let positive: Vec<bool> = samples.iter().map(|&(_, v, e)| v > e).collect();
        let (first, last) = match (positive.iter().position(|&p| p), positive.iter().rposition(|&p| p)) {
            (Some(a), Some(b)) => (a, b),
            _ => return false,
        };
        if positive[first..=last].iter().any(|&p| !p) {
            return false;
        }
        let pts: Vec<(f64, f64, f64)> = samples[first..=last]
            .iter()
            .map(|&(x, v, e)| (x, v.ln(), e / v))
            .collect();
        let n = pts.len();
        let mut stride = 1;
        while stride < n {
            for i in 0..n - stride {
                let (x, lx, ex) = pts[i];
                let (y, ly, ey) = pts[i + stride];
                if y <= x {
                    continue;
                }
                let m = 0.5 * (x + y);
                let k = match self.piece_index(m) {
                    Some(k) => k,
                    None => return false,
                };
                let t = m - self.breakpoints[k];
                let vm = poly::eval(&self.pieces[k], t);
                let em = eval_error(&self.pieces[k], t);
                if !(vm > em) {
                    return false;
                }
                let slack = LOG_CONCAVE_SLACK + em / vm + 0.5 * (ex + ey);
                if vm.ln() < 0.5 * (lx + ly) - slack {
                    return false;
                }
            }
            stride *= 2;
        }
        true
    }

    /// `∫ f g` for two piecewise polynomials (not necessarily densities).
    pub fn integral_of_product(&self, other: &Self) -> f64 {
        let mut acc = 0.0;
        let (mut i, mut j) = (0, 0);
        while i < self.pieces.len() && j < other.pieces.len() {
            let (a0, a1) = self.piece_interval(i);
            let (b0, b1) = other.piece_interval(j);
            let lo = a0.max(b0);
            let hi = a1.min(b1);
            if hi > lo {
                let p = poly::taylor_shift(&self.pieces[i], lo - a0);
                let q = poly::taylor_shift(&other.pieces[j], lo - b0);
                acc += poly::integral_from_zero(&poly::mul(&p, &q), hi - lo);
            }
            if a1 <= b1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        acc
    }

    /// Largest jump between the two one-sided values at interior breakpoints,
    /// relative to the sup norm.
    pub fn max_relative_jump(&self) -> f64 {
        let scale = self.sup_norm().max(f64::MIN_POSITIVE);
        (1..self.pieces.len())
            .map(|k| {
                let left = poly::eval(&self.pieces[k - 1], self.width(k - 1));
                let right = poly::eval(&self.pieces[k], 0.0);
                (left - right).abs() / scale
            })
            .fold(0.0, f64::max)
    }

    /// Serializes with 17 significant digits.
    pub fn to_json(&self) -> Result<String> {
        Ok(crate::jsonfmt::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Rough forward error bound for evaluating a stored polynomial.
fn eval_error(p: &[f64], t: f64) -> f64 {
    let mag = poly::eval(&p.iter().map(|c| c.abs()).collect::<Vec<_>>(), t.abs());
    64.0 * f64::EPSILON * mag
}

struct Region {
    z0: f64,
    length: f64,
    /// Convolution on `[z0, z0 + length]` in the local variable `τ = z - z0`.
    poly: Vec<f64>,
}

/// The three polynomial regions of `(p·1[0,l1]) ⋆ (q·1[0,l2])`.
fn piece_pair_regions(p: &[f64], l1: f64, q: &[f64], l2: f64) -> Vec<Region> {
    let (short, long) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
    // (z0, length, lower bound (α, β), upper bound (α, β)) with x = α + βτ.
    let mut specs = vec![(0.0, short, (0.0, 0.0), (0.0, 1.0))];
    if l1 <= l2 {
        specs.push((l1, l2 - l1, (0.0, 0.0), (l1, 0.0)));
    } else {
        specs.push((l2, l1 - l2, (0.0, 1.0), (l2, 1.0)));
    }
    specs.push((long, short, (long - l2, 1.0), (l1, 0.0)));

    specs
        .into_iter()
        .map(|(z0, length, lower, upper)| {
            let qs = poly::taylor_shift(q, z0);
            let prim = primitive(p, &qs);
            let mut g = substitute(&prim, upper.0, upper.1);
            let lo = substitute(&prim, lower.0, lower.1);
            for (gk, lk) in g.iter_mut().zip(&lo) {
                *gk -= lk;
            }
            Region { z0, length, poly: g }
        })
        .collect()
}

/// Antiderivative in `x` of `p(x) q(τ - x)` as `c[a][b] x^a τ^b`.
fn primitive(p: &[f64], q: &[f64]) -> Vec<Vec<f64>> {
    let dp = p.len() - 1;
    let dq = q.len() - 1;
    let mut c = vec![vec![0.0; dq + 1]; dp + dq + 2];
    let binom = binomials(dq);
    for (i, &pi) in p.iter().enumerate() {
        if pi == 0.0 {
            continue;
        }
        for (k, &qk) in q.iter().enumerate() {
            if qk == 0.0 {
                continue;
            }
            for m in 0..=k {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                let a = i + m + 1;
                c[a][k - m] += sign * pi * qk * binom[k][m] / a as f64;
            }
        }
    }
    c
}

/// Evaluates the bivariate primitive at `x = alpha + beta τ`.
fn substitute(c: &[Vec<f64>], alpha: f64, beta: f64) -> Vec<f64> {
    let max_deg = c.len() - 1 + c[0].len() - 1;
    let mut out = vec![0.0; max_deg + 1];
    let mut power = vec![1.0];
    for row in c {
        for (b, &cab) in row.iter().enumerate() {
            if cab == 0.0 {
                continue;
            }
            for (e, &pe) in power.iter().enumerate() {
                out[e + b] += cab * pe;
            }
        }
        power = poly::mul(&power, &[alpha, beta]);
    }
    out
}

fn binomials(n: usize) -> Vec<Vec<f64>> {
    let mut t = vec![vec![1.0]];
    for k in 1..=n {
        let prev = &t[k - 1];
        let mut row = vec![1.0; k + 1];
        for m in 1..k {
            row[m] = prev[m - 1] + prev[m];
        }
        t.push(row);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn triangle() -> PiecewisePolyDensity {
        // T^{-1}_{1,1}: apex 1 at 0.
        PiecewisePolyDensity::new(vec![-1.0, 0.0, 1.0], vec![vec![0.0, 1.0], vec![1.0, -1.0]]).unwrap()
    }

    fn two_bump() -> PiecewisePolyDensity {
        PiecewisePolyDensity::new(
            vec![-2.0, -1.0, 1.0, 2.0],
            vec![vec![0.5], vec![0.0], vec![0.5]],
        )
        .unwrap()
    }

    #[test]
    fn eval_uniform_and_outside() {
        let u = PiecewisePolyDensity::uniform(0.0, 1.0).unwrap();
        assert_eq!(u.eval(0.5), 1.0);
        assert_eq!(u.eval(2.0), 0.0);
        assert_eq!(u.eval(-1e-300), 0.0);
    }

    #[test]
    fn convolution_apex() {
        let u = PiecewisePolyDensity::uniform(0.0, 1.0).unwrap();
        let t = u.convolve(&u).unwrap();
        close(t.eval(1.0), 1.0, 1e-15);
        close(t.eval(0.5), 0.5, 1e-15);
        close(t.integrate(f64::NEG_INFINITY, f64::INFINITY).unwrap(), 1.0, 1e-15);
    }

    #[test]
    fn convolution_of_offset_indicators() {
        let a = PiecewisePolyDensity::indicator(0.0, 1.0).unwrap();
        let b = PiecewisePolyDensity::indicator(2.0, 5.0).unwrap();
        let c = a.convolve(&b).unwrap();
        // T^2_{1,3}
        let t = |x: f64| -> f64 {
            if !(2.0..=6.0).contains(&x) {
                0.0
            } else if x <= 3.0 {
                x - 2.0
            } else if x <= 5.0 {
                1.0
            } else {
                6.0 - x
            }
        };
        for k in 0..=400 {
            let x = 1.5 + 5.0 * k as f64 / 400.0;
            close(c.eval(x), t(x), 1e-12);
        }
        close(c.total_mass(), 3.0, 1e-13);
    }

    #[test]
    fn integrate_examples() {
        let u = PiecewisePolyDensity::uniform(0.0, 1.0).unwrap();
        close(u.integrate(-10.0, 10.0).unwrap(), 1.0, 1e-15);
        let t12 = PiecewisePolyDensity::indicator(0.0, 1.0)
            .unwrap()
            .convolve(&PiecewisePolyDensity::indicator(0.0, 2.0).unwrap())
            .unwrap();
        close(t12.integrate(-1.0, 4.0).unwrap(), 2.0, 1e-14);
        assert!(matches!(u.integrate(1.0, 0.0), Err(Error::ReversedBounds { .. })));
    }

    #[test]
    fn sup_norm_examples() {
        close(PiecewisePolyDensity::uniform(0.0, 2.0).unwrap().sup_norm(), 0.5, 1e-16);
        close(triangle().sup_norm(), 1.0, 1e-16);
        close(two_bump().sup_norm(), 0.5, 1e-16);
        // interior maximum of a quadratic piece: 1 - (t - 0.5)^2 style
        let q = PiecewisePolyDensity::new(vec![0.0, 1.0], vec![vec![0.0, 4.0, -4.0]]).unwrap();
        close(q.sup_norm(), 1.0, 1e-14);
    }

    #[test]
    fn scale_examples() {
        let u = PiecewisePolyDensity::uniform(0.0, 1.0).unwrap();
        let s = u.scale_pushforward(2.0).unwrap();
        assert_eq!(s.support(), (0.0, 2.0));
        close(s.eval(1.0), 0.5, 1e-16);
        let r = u.scale_pushforward(-1.0).unwrap();
        assert_eq!(r.support(), (-1.0, 0.0));
        close(r.eval(-0.5), 1.0, 1e-16);
        assert!(matches!(u.scale_pushforward(0.0), Err(Error::ZeroScale)));
        // reflection of an asymmetric piece
        let ramp = PiecewisePolyDensity::new(vec![0.0, 1.0], vec![vec![0.0, 2.0]]).unwrap();
        let back = ramp.scale_pushforward(-3.0).unwrap();
        close(back.eval(-1.5), ramp.eval(0.5) / 3.0, 1e-15);
        close(back.total_mass(), 1.0, 1e-15);
    }

    #[test]
    fn normalize_examples() {
        let two = PiecewisePolyDensity::new(vec![0.0, 1.0], vec![vec![2.0]]).unwrap();
        close(two.normalize().unwrap().eval(0.5), 1.0, 1e-16);
        let wide = PiecewisePolyDensity::indicator(0.0, 4.0).unwrap();
        close(wide.normalize().unwrap().eval(1.0), 0.25, 1e-16);
        let t12 = PiecewisePolyDensity::indicator(0.0, 1.0)
            .unwrap()
            .convolve(&PiecewisePolyDensity::indicator(0.0, 2.0).unwrap())
            .unwrap();
        close(t12.normalize().unwrap().sup_norm(), 0.5, 1e-15);
        let zero = PiecewisePolyDensity::new(vec![0.0, 1.0], vec![vec![0.0]]).unwrap();
        assert!(matches!(zero.normalize(), Err(Error::NonPositiveMass(_))));
    }

    #[test]
    fn negative_piece_is_rejected() {
        let r = PiecewisePolyDensity::new(vec![0.0, 1.0], vec![vec![0.1, -1.0]]);
        assert!(matches!(r, Err(Error::NegativeDensity { .. })));
        // negative only at an interior critical point
        let r = PiecewisePolyDensity::new(vec![0.0, 1.0], vec![vec![0.2, -2.0, 2.0]]);
        assert!(matches!(r, Err(Error::NegativeDensity { .. })));
    }

    #[test]
    fn tail_and_mean() {
        let u = PiecewisePolyDensity::uniform(0.0, 1.0).unwrap();
        close(u.tail_prob(1.0 - (-1.0f64).exp()).unwrap(), 0.367_879_441_171_442_3, 1e-15);
        close(u.tail_prob(0.0).unwrap(), 1.0, 1e-16);
        close(triangle().tail_prob(0.0).unwrap(), 0.5, 1e-16);
        close(u.mean().unwrap(), 0.5, 1e-16);
        close(triangle().mean().unwrap(), 0.0, 1e-16);
        close(two_bump().mean().unwrap(), 0.0, 1e-16);
        let unnorm = PiecewisePolyDensity::indicator(0.0, 2.0).unwrap();
        assert!(matches!(unnorm.mean(), Err(Error::NotNormalized(_))));
        assert!(matches!(unnorm.tail_prob(0.0), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn a_beta_examples() {
        close(PiecewisePolyDensity::uniform(-1.0, 1.0).unwrap().a_beta(1.0).unwrap(), 1.0, 0.0);
        let e1 = (-1.0f64).exp();
        close(triangle().a_beta(1.0).unwrap(), 1.0 - e1, 1e-15);
        close(triangle().a_beta(std::f64::consts::LN_2).unwrap(), 0.5, 1e-15);
        let skew = PiecewisePolyDensity::uniform(0.0, 1.0).unwrap();
        assert!(matches!(skew.a_beta(1.0), Err(Error::Hypothesis(_))));
        assert!(matches!(two_bump().a_beta(1.0), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn a_beta_on_cubic_pieces_uses_bisection() {
        // triangle ⋆ triangle is an even piecewise cubic
        let t = triangle().convolve(&triangle()).unwrap();
        let a = t.a_beta(1.0).unwrap();
        close(t.eval(a), (-1.0f64).exp() * t.eval(0.0), 1e-12);
    }

    #[test]
    fn log_concavity_probe() {
        assert!(PiecewisePolyDensity::uniform(0.0, 1.0).unwrap().is_log_concave(64));
        let u = PiecewisePolyDensity::uniform(0.0, 1.0).unwrap();
        assert!(u.convolve(&u).unwrap().is_log_concave(64));
        assert!(!two_bump().is_log_concave(64));
        // a convex bump in the middle of the support
        let dip = PiecewisePolyDensity::piecewise_linear(&[0.0, 1.0, 2.0], &[1.0, 0.2, 1.0]).unwrap();
        assert!(!dip.is_log_concave(64));
        // concave piecewise-linear shapes are log-concave
        let tent = PiecewisePolyDensity::piecewise_linear(&[-1.0, -0.3, 0.0, 0.3, 1.0], &[0.1, 0.8, 1.0, 0.8, 0.1])
            .unwrap();
        assert!(tent.is_log_concave(64));
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let t = triangle().convolve(&PiecewisePolyDensity::uniform(-0.3, 0.7).unwrap()).unwrap();
        let s = t.to_json().unwrap();
        assert!(s.contains("\"breakpoints\""));
        let back = PiecewisePolyDensity::from_json(&s).unwrap();
        assert_eq!(back, t);
        assert!(PiecewisePolyDensity::from_json(r#"{"breakpoints":[0,1],"pieces":[[1]],"x":1}"#).is_err());
        assert!(PiecewisePolyDensity::from_json(r#"{"breakpoints":[1,0],"pieces":[[1]]}"#).is_err());
    }

    #[test]
    fn degree_cap_is_enforced() {
        let p = PiecewisePolyDensity::new(vec![0.0, 1.0], vec![vec![1.0; 9]]).unwrap();
        assert!(matches!(p.convolve(&p), Err(Error::DegreeCap { degree: 17, .. })));
    }

    #[test]
    fn product_integral() {
        let u = PiecewisePolyDensity::uniform(0.0, 2.0).unwrap();
        close(triangle().integral_of_product(&u), 0.25, 1e-16);
    }
}

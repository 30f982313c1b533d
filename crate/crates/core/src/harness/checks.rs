//! Individual inequality checks.

use std::f64::consts::{E, LN_2};

use crate::constructions::normalized_sum_density;
use crate::entropy::{self, EntropyValue};
use crate::error::{Error, Result};
use crate::lc2d::polygon::Point;
use crate::lc2d::{LcModel2D, Precision, Projection, LOG_CONCAVE_PROBES};
use crate::pwpoly::PiecewisePolyDensity;

use super::report::CheckReport;

/// The exponent for which the triangle inequality is proved.
pub const KAPPA_PROVEN: f64 = 0.2;
/// `ln 2 / (1 + ln 2)`, the exponent an Aoki–Rolewicz renorming gives.
pub const AOKI_ROLEWICZ_KAPPA: f64 = LN_2 / (1.0 + LN_2);
/// Width to which `kappa_scan` bisects.
pub const KAPPA_RESOLUTION: f64 = 1e-4;
/// Constant of the small-θ bound `S(X) + SMALL_THETA_SLOPE·θ`.
pub const SMALL_THETA_SLOPE: f64 = 60.0 * (1.0 + E);
/// Constant of the derivative functional bound `D ≤ FUNCTIONAL_CONSTANT·γ·∫w`.
pub const FUNCTIONAL_CONSTANT: f64 = 30.0;
/// Equal entropies are accepted within this distance (plus error bounds).
pub const EQUALIZED_TOL: f64 = 1e-9;

/// Largest θ covered by the small-θ bound, `1/(2(1+e))`.
pub fn small_theta_limit() -> f64 {
    1.0 / (2.0 * (1.0 + E))
}

pub(crate) fn uniform_spacing(grid: &[f64]) -> Result<f64> {
    if grid.len() < 3 {
        return Err(Error::Config("a λ grid needs at least 3 values".into()));
    }
    let h = grid[1] - grid[0];
    if !(h > 0.0) || grid.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1e-3)) {
        return Err(Error::Config("λ grid must be uniformly spaced and increasing".into()));
    }
    Ok(h)
}

/// Entropy of a projection with its error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectedEntropy {
    pub value: f64,
    pub error: f64,
    pub sup: f64,
    /// Relative sup-norm error of the projection density.
    pub sup_error: f64,
}

impl ProjectedEntropy {
    pub fn of(p: &Projection, precision: &Precision) -> Result<Self> {
        let EntropyValue { value, abs_error_bound, .. } = p.entropy_with(precision)?;
        let sup_error = match p {
            Projection::Piecewise { error_bound, .. } => *error_bound,
            Projection::Gaussian { .. } => 0.0,
        };
        Ok(ProjectedEntropy { value, error: abs_error_bound, sup: p.sup_norm(), sup_error })
    }

    fn norm(&self, kappa: f64) -> f64 {
        (kappa * self.value).exp()
    }
}

/// Memoized projection entropies of one model.
pub struct EntropyCache<'a> {
    model: &'a LcModel2D,
    precision: Precision,
    entries: Vec<(Point, ProjectedEntropy)>,
}

impl<'a> EntropyCache<'a> {
    pub fn new(model: &'a LcModel2D, precision: Precision) -> Self {
        EntropyCache { model, precision, entries: Vec::new() }
    }

    pub fn get(&mut self, v: Point) -> Result<ProjectedEntropy> {
        if let Some((_, e)) = self.entries.iter().find(|(w, _)| w[0].to_bits() == v[0].to_bits() && w[1].to_bits() == v[1].to_bits()) {
            return Ok(*e);
        }
        let p = self.model.projection_with(v, &self.precision)?;
        let e = ProjectedEntropy::of(&p, &self.precision)?;
        self.entries.push((v, e));
        Ok(e)
    }

    /// Every entropy computed so far, in insertion order.
    pub fn entries(&self) -> &[(Point, ProjectedEntropy)] {
        &self.entries
    }
}

/// `e^{κ S(⟨v,X⟩)}`, and 0 at `v = 0`.
pub fn entropy_norm(m: &LcModel2D, v: Point, kappa: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::Domain(format!("kappa must be positive, got {kappa}")));
    }
    if v == [0.0, 0.0] {
        return Ok(0.0);
    }
    Ok((kappa * m.projection_density(v)?.entropy()?.value).exp())
}

pub(crate) fn triangle_check_id(kappa: f64) -> &'static str {
    if kappa == 1.0 {
        "norm_triangle"
    } else {
        "kappa_triangle"
    }
}

pub(crate) fn triangle_report(
    model: &str,
    u: Point,
    v: Point,
    entropies: [ProjectedEntropy; 3],
    kappa: f64,
    base_tol: f64,
) -> CheckReport {
    let [eu, ev, euv] = entropies;
    let (nu, nv, nuv) = (eu.norm(kappa), ev.norm(kappa), euv.norm(kappa));
    let error = kappa * (nu * eu.error + nv * ev.error + nuv * euv.error);
    CheckReport::new(triangle_check_id(kappa), model, nuv, nu + nv, base_tol + error, error)
        .with_vector("u", u)
        .with_vector("v", v)
        .with_input("kappa", kappa)
}

fn check_pair(u: Point, v: Point) -> Result<Point> {
    let w = [u[0] + v[0], u[1] + v[1]];
    if u == [0.0, 0.0] || v == [0.0, 0.0] || w == [0.0, 0.0] {
        return Err(Error::Domain("u, v and u+v must be nonzero".into()));
    }
    Ok(w)
}

/// `N^κ(u+v) ≤ N^κ(u) + N^κ(v)` for the entropy exponential `N`.
pub fn triangle_margin(m: &LcModel2D, u: Point, v: Point, kappa: f64) -> Result<CheckReport> {
    if !(kappa > 0.0) {
        return Err(Error::Domain(format!("kappa must be positive, got {kappa}")));
    }
    let w = check_pair(u, v)?;
    let mut cache = EntropyCache::new(m, Precision::standard());
    let entropies = [cache.get(u)?, cache.get(v)?, cache.get(w)?];
    Ok(triangle_report(&m.descriptor(), u, v, entropies, kappa, 0.0))
}

/// Result of a κ scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaScan {
    /// Largest κ (to `KAPPA_RESOLUTION`) for which every pair passes.
    pub kappa: f64,
    /// Whether every pair passes at the top of the grid.
    pub at_top: bool,
    /// Index of the pair failing just above `kappa`.
    pub witness: Option<usize>,
}

fn all_pass(entropies: &[[ProjectedEntropy; 3]], kappa: f64) -> Option<usize> {
    entropies.iter().position(|[eu, ev, euv]| {
        let (nu, nv, nuv) = (eu.norm(kappa), ev.norm(kappa), euv.norm(kappa));
        let error = kappa * (nu * eu.error + nv * ev.error + nuv * euv.error);
        nu + nv - nuv < -error
    })
}

/// κ scan on precomputed pair entropies `[S(u), S(v), S(u+v)]`.
pub fn kappa_scan_entropies(entropies: &[[ProjectedEntropy; 3]], grid: &[f64]) -> Result<KappaScan> {
    if entropies.is_empty() {
        return Err(Error::Domain("kappa scan needs at least one pair".into()));
    }
    if grid.is_empty() || grid.iter().any(|&k| !(k > 0.0 && k <= 2.0)) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("kappa grid must be increasing within (0,2]".into()));
    }
    let first_fail = grid.iter().position(|&k| all_pass(entropies, k).is_some());
    let Some(j) = first_fail else {
        return Ok(KappaScan { kappa: grid[grid.len() - 1], at_top: true, witness: None });
    };
    let (mut lo, mut hi) = (if j == 0 { 0.0 } else { grid[j - 1] }, grid[j]);
    while hi - lo > KAPPA_RESOLUTION {
        let mid = 0.5 * (lo + hi);
        if all_pass(entropies, mid).is_some() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(KappaScan { kappa: lo, at_top: false, witness: all_pass(entropies, hi) })
}

/// Largest κ on `grid` (refined by bisection) for which the κ-triangle
/// inequality holds on every pair.
pub fn kappa_scan(m: &LcModel2D, pairs: &[(Point, Point)], grid: &[f64]) -> Result<KappaScan> {
    let mut cache = EntropyCache::new(m, Precision::standard());
    let mut entropies = Vec::with_capacity(pairs.len());
    for &(u, v) in pairs {
        let w = check_pair(u, v)?;
        entropies.push([cache.get(u)?, cache.get(v)?, cache.get(w)?]);
    }
    kappa_scan_entropies(&entropies, grid)
}

/// Independent centered uniforms of widths `t` and 1: the κ-triangle
/// inequality on `(e1, e2)` reads `e^{κt/2} ≤ 1 + t^κ`. The report holds the
/// closed form; `error_bound` is the gap to the projection pipeline.
pub fn uniform_box_check(t: f64, kappa: f64) -> Result<CheckReport> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::Domain(format!("t must lie in (0,1], got {t}")));
    }
    if !(kappa > 0.0) {
        return Err(Error::Domain(format!("kappa must be positive, got {kappa}")));
    }
    let lhs = (kappa * t / 2.0).exp();
    let rhs = 1.0 + t.powf(kappa);
    let m = LcModel2D::product(PiecewisePolyDensity::uniform(-t / 2.0, t / 2.0)?, PiecewisePolyDensity::uniform(-0.5, 0.5)?)?;
    let (f, g, h) = m.marginals_and_sum()?;
    let (sf, sg, sh) = (f.entropy()?.value, g.entropy()?.value, h.entropy()?.value);
    let lhs_pipeline = (kappa * sh).exp();
    let rhs_pipeline = (kappa * sf).exp() + (kappa * sg).exp();
    let gap = (lhs - lhs_pipeline).abs().max((rhs - rhs_pipeline).abs());
    Ok(CheckReport::new("uniform_box", &m.descriptor(), lhs, rhs, 0.0, gap).with_input("t", t).with_input("kappa", kappa))
}

/// `e^{S(X+Y)} ≤ e·(e^{S(X)} + e^{S(Y)})`.
pub fn sum_entropy_check(m: &LcModel2D) -> Result<CheckReport> {
    let mut cache = EntropyCache::new(m, Precision::standard());
    let (sx, sy, ss) = (cache.get([1.0, 0.0])?, cache.get([0.0, 1.0])?, cache.get([1.0, 1.0])?);
    Ok(sum_entropy_report(&m.descriptor(), sx, sy, ss, 0.0))
}

pub(crate) fn sum_entropy_report(
    model: &str,
    sx: ProjectedEntropy,
    sy: ProjectedEntropy,
    ss: ProjectedEntropy,
    base_tol: f64,
) -> CheckReport {
    let (nx, ny, ns) = (sx.norm(1.0), sy.norm(1.0), ss.norm(1.0));
    let error = ns * ss.error + E * (nx * sx.error + ny * sy.error);
    CheckReport::new("sum_entropy", model, ns, E * (nx + ny), base_tol + error, error)
}

fn require_equalized(sx: &ProjectedEntropy, sy: &ProjectedEntropy) -> Result<()> {
    if (sx.value - sy.value).abs() > EQUALIZED_TOL + sx.error + sy.error {
        return Err(Error::Hypothesis(format!(
            "marginal entropies differ: S(X) = {}, S(Y) = {}; equalize the model first",
            sx.value, sy.value
        )));
    }
    Ok(())
}

/// Linearized inequalities on an entropy-equalized model: for each θ in
/// `thetas`, `S(θX+(1-θ)Y) ≤ S(X) + (1/κ)·ln(θ^κ + (1-θ)^κ)`, and for each θ
/// in `small_thetas`, `S(θX+(1-θ)Y) ≤ S(X) + 60(1+e)θ`.
pub fn theorem_checks(
    m: &LcModel2D,
    thetas: &[f64],
    small_thetas: &[f64],
    kappa: f64,
    base_tol: f64,
    small_theta_tol: f64,
) -> Result<Vec<CheckReport>> {
    let mut cache = EntropyCache::new(m, Precision::standard());
    theorem_checks_cached(&mut cache, &m.descriptor(), thetas, small_thetas, kappa, base_tol, small_theta_tol)
}

pub(crate) fn theorem_checks_cached(
    cache: &mut EntropyCache,
    model: &str,
    thetas: &[f64],
    small_thetas: &[f64],
    kappa: f64,
    base_tol: f64,
    small_theta_tol: f64,
) -> Result<Vec<CheckReport>> {
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(Error::Domain(format!("kappa must lie in (0,1], got {kappa}")));
    }
    if let Some(t) = thetas.iter().chain(small_thetas).find(|&&t| !(t > 0.0 && t < 1.0)) {
        return Err(Error::Domain(format!("theta {t} outside (0,1)")));
    }
    if let Some(t) = small_thetas.iter().find(|&&t| t > small_theta_limit()) {
        return Err(Error::Domain(format!("small-theta bound needs θ ≤ 1/(2(1+e)), got {t}")));
    }
    let sx = cache.get([1.0, 0.0])?;
    let sy = cache.get([0.0, 1.0])?;
    require_equalized(&sx, &sy)?;
    let mut out = Vec::new();
    for &t in thetas {
        let s = cache.get([t, 1.0 - t])?;
        let rhs = sx.value + (t.powf(kappa) + (1.0 - t).powf(kappa)).ln() / kappa;
        let error = s.error + sx.error;
        out.push(
            CheckReport::new("kappa_linear", model, s.value, rhs, base_tol + error, error)
                .with_input("theta", t)
                .with_input("kappa", kappa),
        );
    }
    for &t in small_thetas {
        let s = cache.get([t, 1.0 - t])?;
        let error = s.error + sx.error;
        out.push(
            CheckReport::new("small_theta", model, s.value, sx.value + SMALL_THETA_SLOPE * t, small_theta_tol + error, error)
                .with_input("theta", t),
        );
    }
    Ok(out)
}

/// The exponential and linearized forms of the κ-triangle inequality on
/// `(e1, e2)` must give the same margin in log scale once
/// `θ = e^{S(X)}/(e^{S(X)} + e^{S(Y)})` rescales both marginals to equal
/// entropy. The report's lhs is the absolute difference of the two margins.
pub fn equivalence_check(m: &LcModel2D, kappa: f64, tol: f64) -> Result<CheckReport> {
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(Error::Domain(format!("kappa must lie in (0,1], got {kappa}")));
    }
    let mut cache = EntropyCache::new(m, Precision::standard());
    let (sx, sy, ss) = (cache.get([1.0, 0.0])?, cache.get([0.0, 1.0])?, cache.get([1.0, 1.0])?);
    let exp_form = ((kappa * sx.value).exp() + (kappa * sy.value).exp()).ln() / kappa - ss.value;
    let theta = 1.0 / (1.0 + (sy.value - sx.value).exp());
    let scaled = m.scale_axes(1.0 / theta, 1.0 / (1.0 - theta))?;
    let mut scaled_cache = EntropyCache::new(&scaled, Precision::standard());
    let sx_scaled = scaled_cache.get([1.0, 0.0])?;
    let mix = scaled_cache.get([theta, 1.0 - theta])?;
    let lin_form = sx_scaled.value + (theta.powf(kappa) + (1.0 - theta).powf(kappa)).ln() / kappa - mix.value;
    let gap = (exp_form - lin_form).abs();
    Ok(CheckReport::new("linear_equivalence", &m.descriptor(), gap, 0.0, tol, ss.error + mix.error)
        .with_input("theta", theta)
        .with_input("kappa", kappa)
        .with_input("exp_form_margin", exp_form)
        .with_input("linear_form_margin", lin_form))
}

/// `S(X+Y) ≤ S(X) + ln 2` for a swap-invariant model.
pub fn exchangeable_check(m: &LcModel2D) -> Result<CheckReport> {
    if !m.is_exchangeable(1e-10) {
        return Err(Error::Hypothesis("model is not invariant under the coordinate swap".into()));
    }
    let mut cache = EntropyCache::new(m, Precision::standard());
    let (sx, ss) = (cache.get([1.0, 0.0])?, cache.get([1.0, 1.0])?);
    let error = sx.error + ss.error;
    Ok(CheckReport::new("exchangeable_sum", &m.descriptor(), ss.value, sx.value + LN_2, error, error))
}

/// Both sides of `-ln‖f‖∞ ≤ S(f) ≤ 1 - ln‖f‖∞`.
pub fn sandwich_reports(model: &str, v: Point, e: &ProjectedEntropy, base_tol: f64) -> [CheckReport; 2] {
    let log_sup = e.sup.ln();
    let error = e.error + e.sup_error;
    [
        CheckReport::new("max_sandwich_lower", model, -log_sup, e.value, base_tol + error, error).with_vector("v", v),
        CheckReport::new("max_sandwich_upper", model, e.value, 1.0 - log_sup, base_tol + error, error).with_vector("v", v),
    ]
}

/// `‖u+v‖ ≤ ‖u‖ + ‖v‖` for the Busemann norm.
pub fn busemann_triangle(m: &LcModel2D, u: Point, v: Point, rel_tol: f64) -> Result<CheckReport> {
    let w = check_pair(u, v)?;
    let (nu, nv, nw) = (m.busemann_norm(u)?, m.busemann_norm(v)?, m.busemann_norm(w)?);
    let tol = rel_tol * (nu + nv);
    Ok(CheckReport::new("busemann_triangle", &m.descriptor(), nw, nu + nv, tol, 0.0).with_vector("u", u).with_vector("v", v))
}

/// `∬ (-f'/f)(x)·y·w ≤ 30·γ·∫w`; `tol` applies to exact families and
/// `grid_tol` to grid models.
pub fn derivative_functional_check(m: &LcModel2D, tol: f64, grid_tol: f64) -> Result<CheckReport> {
    let d = m.derivative_functional()?;
    let gamma = m.gamma()?;
    let base = if m.is_exact() { tol } else { grid_tol };
    Ok(CheckReport::new("derivative_functional", &m.descriptor(), d.value, FUNCTIONAL_CONSTANT * gamma * d.mass, base, d.error_estimate)
        .with_input("gamma", gamma)
        .with_input("mass", d.mass))
}

/// `S(√λX + √(1-λ)Y) ≥ λS(X) + (1-λ)S(Y)` for the independent coordinates of
/// a product model.
pub fn epi_floor_check(m: &LcModel2D, lambda: f64, tol: f64) -> Result<CheckReport> {
    if !matches!(m, LcModel2D::Product { .. } | LcModel2D::Gaussian(_)) {
        return Err(Error::Hypothesis("the entropy power floor needs independent coordinates".into()));
    }
    if let LcModel2D::Gaussian(c) = m {
        if c.entries().1 != 0.0 {
            return Err(Error::Hypothesis("the entropy power floor needs independent coordinates".into()));
        }
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Domain(format!("lambda must lie in (0,1), got {lambda}")));
    }
    let mut cache = EntropyCache::new(m, Precision::standard());
    let (sx, sy) = (cache.get([1.0, 0.0])?, cache.get([0.0, 1.0])?);
    let mix = cache.get([lambda.sqrt(), (1.0 - lambda).sqrt()])?;
    Ok(epi_report(&m.descriptor(), lambda, sx, sy, mix, tol))
}

fn epi_report(model: &str, lambda: f64, sx: ProjectedEntropy, sy: ProjectedEntropy, mix: ProjectedEntropy, tol: f64) -> CheckReport {
    let error = mix.error + lambda * sx.error + (1.0 - lambda) * sy.error;
    CheckReport::new("epi_floor", model, lambda * sx.value + (1.0 - lambda) * sy.value, mix.value, tol + error, error)
        .with_input("lambda", lambda)
}

/// Entropies of `√λX + √(1-λ)Y` along a λ grid for i.i.d. summands.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcavityScan {
    pub lambdas: Vec<f64>,
    pub entropies: Vec<f64>,
    pub errors: Vec<f64>,
    /// Largest second difference; the report's margin is its negative.
    pub report: CheckReport,
    /// Middle index of the largest second difference.
    pub worst: usize,
    /// Entropy power floor `S(X_λ) ≥ S(X)` at every grid point.
    pub floor: Vec<CheckReport>,
}

/// `S(√λX + √(1-λ)Y)` for i.i.d. `X, Y ~ f`.
pub fn lambda_entropy(f: &PiecewisePolyDensity, lambda: f64, quad_tol: f64) -> Result<EntropyValue> {
    entropy::entropy_with_tol(&normalized_sum_density(f, f, lambda)?, quad_tol)
}

/// Discrete concavity of `λ ↦ S(√λX + √(1-λ)Y)` on a uniform grid.
///
/// `allow_non_log_concave` skips the hypothesis check, for demonstrating
/// what happens without it.
pub fn concavity_scan(
    f: &PiecewisePolyDensity,
    lambdas: &[f64],
    tol: f64,
    epi_tol: f64,
    allow_non_log_concave: bool,
) -> Result<ConcavityScan> {
    let h = uniform_spacing(lambdas)?;
    if lambdas.iter().any(|&l| !(l > 0.0 && l < 1.0)) {
        return Err(Error::Domain("λ grid must lie in (0,1)".into()));
    }
    if !allow_non_log_concave && !(f.is_even() && f.is_log_concave(LOG_CONCAVE_PROBES)) {
        return Err(Error::Hypothesis("concavity scan needs an even log-concave density".into()));
    }
    let base = entropy::entropy(f)?;
    let values: Vec<EntropyValue> = lambdas.iter().map(|&l| lambda_entropy(f, l, entropy::QUAD_TOL)).collect::<Result<_>>()?;
    let entropies: Vec<f64> = values.iter().map(|v| v.value).collect();
    let errors: Vec<f64> = values.iter().map(|v| v.abs_error_bound).collect();
    let (mut worst, mut second) = (1, f64::NEG_INFINITY);
    for k in 1..entropies.len() - 1 {
        let d = entropies[k - 1] + entropies[k + 1] - 2.0 * entropies[k];
        if d > second {
            second = d;
            worst = k;
        }
    }
    let error = errors[worst - 1] + errors[worst + 1] + 2.0 * errors[worst];
    let desc = format!("density({} pieces)", f.num_pieces());
    let report = CheckReport::new("lambda_concavity", &desc, second, 0.0, tol * h * h + error, error)
        .with_input("lambda", lambdas[worst])
        .with_input("spacing", h);
    let floor = lambdas
        .iter()
        .zip(&values)
        .map(|(&l, v)| {
            let error = v.abs_error_bound + base.abs_error_bound;
            CheckReport::new("epi_floor", &desc, base.value, v.value, epi_tol + error, error).with_input("lambda", l)
        })
        .collect();
    Ok(ConcavityScan { lambdas: lambdas.to_vec(), entropies, errors, report, worst, floor })
}

/// `P(X > a) ≤ e^{-1}` implies `E X ≤ a`, at the smallest such `a`.
pub fn grunbaum_row(f: &PiecewisePolyDensity, tol: f64) -> Result<CheckReport> {
    let a = f.upper_quantile((-1.0f64).exp())?;
    let mean = f.mean()?;
    let scale = f.support().1 - f.support().0;
    Ok(CheckReport::new("grunbaum", &format!("density({} pieces)", f.num_pieces()), mean, a, tol * scale.max(1.0), 1e-12 * scale))
}

/// The level-set sandwich `2e^{-β}a_β ≤ ∫f/f(0) ≤ 2(1 + e^{-β}/β)a_β` for
/// each β, plus the Grünbaum row.
pub fn classical_lemma_checks(f: &PiecewisePolyDensity, betas: &[f64], tol: f64) -> Result<Vec<CheckReport>> {
    if !f.is_log_concave(LOG_CONCAVE_PROBES) {
        return Err(Error::Hypothesis("density is not log-concave".into()));
    }
    if !f.is_even() {
        return Err(Error::Hypothesis("level-set sandwich needs an even density".into()));
    }
    let desc = format!("density({} pieces)", f.num_pieces());
    let ratio = f.total_mass() / f.eval(0.0);
    let mut out = Vec::new();
    for &beta in betas {
        let a = f.a_beta(beta)?;
        let lower = 2.0 * (-beta).exp() * a;
        let upper = 2.0 * (1.0 + (-beta).exp() / beta) * a;
        let t = tol * ratio.max(1.0);
        out.push(CheckReport::new("level_sandwich_lower", &desc, lower, ratio, t, 0.0).with_input("beta", beta));
        out.push(CheckReport::new("level_sandwich_upper", &desc, ratio, upper, t, 0.0).with_input("beta", beta));
    }
    out.push(grunbaum_row(f, tol)?);
    Ok(out)
}

/// Law of `X` conditioned on `X ≥ 0` (log-concave whenever `f` is).
pub fn positive_half(f: &PiecewisePolyDensity) -> Result<PiecewisePolyDensity> {
    let (lo, hi) = f.support();
    if !(hi > 0.0) {
        return Err(Error::Domain("density has no mass on the positive half-line".into()));
    }
    let mut breaks = vec![0.0f64.max(lo)];
    let mut pieces = Vec::new();
    for k in 0..f.num_pieces() {
        let (a, b) = f.piece_interval(k);
        if b <= breaks[0] {
            continue;
        }
        let start = a.max(breaks[0]);
        pieces.push(crate::poly::taylor_shift(&f.pieces()[k], start - a));
        breaks.push(b);
    }
    PiecewisePolyDensity::new(breaks, pieces)?.normalize()
}

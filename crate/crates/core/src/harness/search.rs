//! Seeded randomized campaigns over generated models.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lc2d::generate::{random_model, Family};
use crate::lc2d::polygon::Point;
use crate::lc2d::{LcModel2D, Precision};
use crate::pwpoly::PiecewisePolyDensity;

use super::checks::{self, EntropyCache, KappaScan, ProjectedEntropy, AOKI_ROLEWICZ_KAPPA, KAPPA_PROVEN};
use super::report::{CheckReport, HarnessConfig, SummaryRow, ViolationCertificate, Witness, SUMMARY_HEADER};

pub const VERSION: &str = concat!("lcent ", env!("CARGO_PKG_VERSION"));

/// Check ids whose failure is evidence against an open conjecture rather
/// than a bug.
pub const CONJECTURE_CHECKS: [&str; 2] = ["norm_triangle", "lambda_concavity"];

pub fn is_conjecture_check(id: &str) -> bool {
    CONJECTURE_CHECKS.contains(&id)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub reports: Vec<CheckReport>,
    pub certificates: Vec<ViolationCertificate>,
    pub summary: Vec<SummaryRow>,
    pub min_kappa: Option<f64>,
    /// Trials whose κ scan fell below the Aoki–Rolewicz exponent.
    pub noteworthy: Vec<String>,
}

impl SearchOutcome {
    pub fn theorem_failures(&self) -> Vec<&CheckReport> {
        self.reports.iter().filter(|r| !r.pass && !is_conjecture_check(&r.check_id)).collect()
    }

    pub fn worst_margin(&self, check_id: &str) -> Option<f64> {
        self.summary.iter().find(|r| r.check_id == check_id).map(|r| r.worst_margin)
    }
}

struct TrialOutcome {
    reports: Vec<CheckReport>,
    certificates: Vec<ViolationCertificate>,
    kappa: Option<f64>,
    noteworthy: Option<String>,
}

/// Generator of trial `trial`: the master seed on stream `trial`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// The model and direction pairs used by a trial.
pub fn trial_instance(config: &HarnessConfig, trial: u64) -> Result<(LcModel2D, Vec<(Point, Point)>)> {
    let mut rng = trial_rng(config.seed, trial);
    let family = config.family_of(trial);
    let model = random_model(rng.gen(), family, config.size_of(family))?;
    let mut pairs: Vec<(Point, Point)> = (0..config.random_pairs)
        .map(|_| {
            let (a, b): (f64, f64) = (rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..2.0 * PI));
            ([a.cos(), a.sin()], [b.cos(), b.sin()])
        })
        .collect();
    pairs.push(([1.0, 0.0], [0.0, 1.0]));
    pairs.push(([1.0, 0.0], [1.0, 1.0]));
    Ok((model, pairs))
}

fn sum(u: Point, v: Point) -> Point {
    [u[0] + v[0], u[1] + v[1]]
}

fn worst(reports: Vec<CheckReport>) -> Vec<CheckReport> {
    let failing: Vec<CheckReport> = reports.iter().filter(|r| !r.pass).cloned().collect();
    if !failing.is_empty() {
        return failing;
    }
    reports.into_iter().min_by(|a, b| a.margin.total_cmp(&b.margin)).into_iter().collect()
}

fn run_trial(config: &HarnessConfig, trial: u64) -> Result<TrialOutcome> {
    let (model, pairs) = trial_instance(config, trial)?;
    let desc = model.descriptor();
    let tol = &config.tolerances;
    let mut reports = Vec::new();
    let mut certificates = Vec::new();

    let mut cache = EntropyCache::new(&model, Precision::standard());
    let mut pair_entropies = Vec::with_capacity(pairs.len());
    for &(u, v) in &pairs {
        pair_entropies.push([cache.get(u)?, cache.get(v)?, cache.get(sum(u, v))?]);
    }

    let scan = checks::kappa_scan_entropies(&pair_entropies, &config.kappa_grid)?;
    reports.push(kappa_scan_report(&desc, &scan, &pairs));
    let noteworthy = (scan.kappa < AOKI_ROLEWICZ_KAPPA)
        .then(|| format!("trial {trial} ({desc}): κ scan stopped at {:.4}", scan.kappa));

    if config.suite.theorems() {
        let triangles = pairs
            .iter()
            .zip(&pair_entropies)
            .map(|(&(u, v), &e)| checks::triangle_report(&desc, u, v, e, config.kappa, tol.exact))
            .collect();
        reports.extend(worst(triangles));
        let busemann = pairs
            .iter()
            .map(|&(u, v)| checks::busemann_triangle(&model, u, v, busemann_tol(&model, tol.busemann)))
            .collect::<Result<Vec<_>>>()?;
        reports.extend(worst(busemann));
        let (sx, sy, ss) = (cache.get([1.0, 0.0])?, cache.get([0.0, 1.0])?, cache.get([1.0, 1.0])?);
        reports.push(checks::sum_entropy_report(&desc, sx, sy, ss, tol.exact));
        reports.push(checks::equivalence_check(&model, config.kappa, tol.equivalence)?);
        reports.push(checks::derivative_functional_check(&model, tol.exact, tol.grid_functional)?);

        let (equalized, _) = model.equalize_entropies()?;
        let mut eq_cache = EntropyCache::new(&equalized, Precision::standard());
        reports.extend(checks::theorem_checks_cached(
            &mut eq_cache,
            &equalized.descriptor(),
            &config.theta_grid,
            &config.small_theta_grid,
            config.kappa,
            tol.exact,
            tol.small_theta,
        )?);

        for f in exact_marginals(&model)? {
            reports.extend(checks::classical_lemma_checks(&f, &config.beta_grid, tol.sandwich)?);
            reports.push(checks::grunbaum_row(&checks::positive_half(&f)?, tol.sandwich)?);
        }
        if matches!(model, LcModel2D::Product { .. }) {
            for &l in &config.epi_lambdas {
                let mix = cache.get([l.sqrt(), (1.0 - l).sqrt()])?;
                reports.push(epi_row(&desc, l, sx, sy, mix, tol.epi));
            }
        }

        let (mut lower, mut upper) = (Vec::new(), Vec::new());
        for (v, e) in cache.entries().iter().chain(eq_cache.entries()) {
            let [lo, hi] = checks::sandwich_reports(&desc, *v, e, tol.sandwich);
            lower.push(lo);
            upper.push(hi);
        }
        reports.extend(worst(lower));
        reports.extend(worst(upper));
    }

    if config.suite.conjectures() {
        let triangles: Vec<CheckReport> = pairs
            .iter()
            .zip(&pair_entropies)
            .map(|(&(u, v), &e)| checks::triangle_report(&desc, u, v, e, 1.0, tol.exact))
            .collect();
        for r in triangles.iter().filter(|r| !r.pass) {
            let u = [r.inputs["u_x"], r.inputs["u_y"]];
            let v = [r.inputs["v_x"], r.inputs["v_y"]];
            certificates.push(triangle_certificate(&model, u, v, config.seed, trial)?);
        }
        reports.extend(worst(triangles));

        if let Some(f) = exact_marginals(&model)?.into_iter().next() {
            let scan = checks::concavity_scan(&f, &config.lambda_grid, tol.concavity, tol.epi, false)?;
            if !scan.report.pass {
                let k = scan.worst;
                let lambdas = [scan.lambdas[k - 1], scan.lambdas[k], scan.lambdas[k + 1]];
                certificates.push(concavity_certificate(&f, lambdas, config.seed, trial)?);
            }
            let mut r = scan.report;
            r.model = desc.clone();
            reports.push(r);
            reports.extend(worst(scan.floor).into_iter().map(|mut r| {
                r.model = desc.clone();
                r
            }));
        }
    }

    let reports = reports.into_iter().map(|r| r.with_trial(trial)).collect();
    Ok(TrialOutcome { reports, certificates, kappa: Some(scan.kappa), noteworthy })
}

fn busemann_tol(model: &LcModel2D, rel: f64) -> f64 {
    // the bilinear interpolant of a grid model is log-concave only up to
    // its interpolation error
    if model.is_exact() {
        rel
    } else {
        rel.max(1e-6)
    }
}

fn epi_row(desc: &str, l: f64, sx: ProjectedEntropy, sy: ProjectedEntropy, mix: ProjectedEntropy, tol: f64) -> CheckReport {
    let error = mix.error + l * sx.error + (1.0 - l) * sy.error;
    CheckReport::new("epi_floor", desc, l * sx.value + (1.0 - l) * sy.value, mix.value, tol + error, error).with_input("lambda", l)
}

fn kappa_scan_report(desc: &str, scan: &KappaScan, pairs: &[(Point, Point)]) -> CheckReport {
    let mut r = CheckReport::new("kappa_scan", desc, KAPPA_PROVEN, scan.kappa, 0.0, checks::KAPPA_RESOLUTION)
        .with_input("at_top", if scan.at_top { 1.0 } else { 0.0 });
    if let Some(i) = scan.witness {
        r = r.with_vector("u", pairs[i].0).with_vector("v", pairs[i].1);
    }
    r
}

/// Exact even marginals of polygon and product models (empty otherwise).
fn exact_marginals(model: &LcModel2D) -> Result<Vec<PiecewisePolyDensity>> {
    match model {
        LcModel2D::Polygon(_) | LcModel2D::Product { .. } => {
            let (f, g, _) = model.marginals_and_sum()?;
            Ok([f, g].into_iter().filter_map(|p| p.piecewise().cloned()).collect())
        }
        _ => Ok(Vec::new()),
    }
}

fn triangle_entropies(model: &LcModel2D, u: Point, v: Point) -> Result<(Vec<f64>, f64)> {
    let precision = Precision::doubled();
    let s: Vec<f64> = [u, v, sum(u, v)]
        .iter()
        .map(|&w| Ok(model.projection_with(w, &precision)?.entropy_with(&precision)?.value))
        .collect::<Result<_>>()?;
    let margin = s[0].exp() + s[1].exp() - s[2].exp();
    Ok((s, margin))
}

fn concavity_entropies(f: &PiecewisePolyDensity, lambdas: [f64; 3]) -> Result<(Vec<f64>, f64)> {
    let tol = Precision::doubled().quad_tol;
    let s: Vec<f64> = lambdas.iter().map(|&l| Ok(checks::lambda_entropy(f, l, tol)?.value)).collect::<Result<_>>()?;
    Ok((s.clone(), -(s[0] + s[2] - 2.0 * s[1])))
}

pub fn triangle_certificate(model: &LcModel2D, u: Point, v: Point, seed: u64, trial: u64) -> Result<ViolationCertificate> {
    let (entropies, margin) = triangle_entropies(model, u, v)?;
    Ok(ViolationCertificate {
        conjecture: "norm_triangle".into(),
        witness: Witness::Triangle { model: model.clone(), u, v },
        entropies,
        margin,
        tolerance: 0.0,
        seed,
        trial,
        version: VERSION.into(),
    })
}

pub fn concavity_certificate(f: &PiecewisePolyDensity, lambdas: [f64; 3], seed: u64, trial: u64) -> Result<ViolationCertificate> {
    let (entropies, margin) = concavity_entropies(f, lambdas)?;
    Ok(ViolationCertificate {
        conjecture: "lambda_concavity".into(),
        witness: Witness::Concavity { density: f.clone(), lambdas },
        entropies,
        margin,
        tolerance: 0.0,
        seed,
        trial,
        version: VERSION.into(),
    })
}

/// Recomputes a certificate's margin from its witness alone; errors if it
/// differs from the recorded margin by more than `tol`.
pub fn verify_certificate(cert: &ViolationCertificate, tol: f64) -> Result<f64> {
    let (_, margin) = match &cert.witness {
        Witness::Triangle { model, u, v } => triangle_entropies(model, *u, *v)?,
        Witness::Concavity { density, lambdas } => concavity_entropies(density, *lambdas)?,
    };
    if !((margin - cert.margin).abs() <= tol) {
        return Err(Error::Certificate(format!(
            "{}: recomputed margin {margin:e} vs recorded {:e}",
            cert.file_name(),
            cert.margin
        )));
    }
    Ok(margin)
}

fn summarize(reports: &[CheckReport], min_kappa: Option<f64>) -> Vec<SummaryRow> {
    let mut rows: BTreeMap<&str, (BTreeSet<Option<u64>>, f64)> = BTreeMap::new();
    for r in reports {
        let e = rows.entry(&r.check_id).or_insert((BTreeSet::new(), f64::INFINITY));
        e.0.insert(r.trial);
        e.1 = e.1.min(r.margin);
    }
    rows.into_iter()
        .map(|(id, (trials, worst))| SummaryRow {
            check_id: id.to_string(),
            trials: trials.len() as u64,
            worst_margin: worst,
            min_kappa: if id == "kappa_scan" { min_kappa } else { None },
        })
        .collect()
}

/// Runs every trial and collects reports without aborting on failures.
pub fn run_trials(config: &HarnessConfig) -> Result<SearchOutcome> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let outcomes: Vec<Result<TrialOutcome>> =
        pool.install(|| (0..config.trials).into_par_iter().map(|t| run_trial(config, t)).collect());
    let mut reports = Vec::new();
    let mut certificates = Vec::new();
    let mut noteworthy = Vec::new();
    let mut min_kappa: Option<f64> = None;
    for (trial, outcome) in outcomes.into_iter().enumerate() {
        let outcome = outcome.map_err(|e| annotate(e, config, trial as u64))?;
        reports.extend(outcome.reports);
        certificates.extend(outcome.certificates);
        noteworthy.extend(outcome.noteworthy);
        if let Some(k) = outcome.kappa {
            min_kappa = Some(min_kappa.map_or(k, |m| m.min(k)));
        }
    }
    let summary = summarize(&reports, min_kappa);
    Ok(SearchOutcome { reports, certificates, summary, min_kappa, noteworthy })
}

fn annotate(e: Error, config: &HarnessConfig, trial: u64) -> Error {
    let family = config.family_of(trial);
    match e {
        Error::GridTooCoarse { .. } | Error::Hypothesis(_) | Error::InvalidModel(_) | Error::Domain(_) => {
            Error::TheoremViolation(format!("seed {} trial {trial} ({}): {e}", config.seed, family.name()))
        }
        other => Error::InTrial { seed: config.seed, trial, family: family.name(), source: Box::new(other) },
    }
}

/// Runs the campaign and fails on any theorem-grade report.
pub fn search(config: &HarnessConfig) -> Result<SearchOutcome> {
    let outcome = run_trials(config)?;
    if let Some(r) = outcome.theorem_failures().first() {
        return Err(Error::TheoremViolation(failure_diagnostic(r, outcome.theorem_failures().len())));
    }
    Ok(outcome)
}

pub fn failure_diagnostic(r: &CheckReport, count: usize) -> String {
    format!(
        "{count} theorem-grade failure(s); first: {} trial {:?} on {}: lhs {:e} rhs {:e} margin {:e} tolerance {:e}",
        r.check_id, r.trial, r.model, r.lhs, r.rhs, r.margin, r.tolerance
    )
}

#[derive(Serialize)]
struct Header<'a> {
    version: &'a str,
    config: &'a HarnessConfig,
}

/// One JSON line with the tool version and effective config.
pub fn header_line(config: &HarnessConfig) -> Result<String> {
    Ok(crate::jsonfmt::to_string(&Header { version: VERSION, config })?)
}

/// Writes `reports.jsonl`, `summary.csv` and one file per certificate;
/// `header` (a JSON object on one line) heads both text files.
pub fn write_outputs(outcome: &SearchOutcome, header: &str, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut jsonl = std::io::BufWriter::new(fs::File::create(dir.join("reports.jsonl"))?);
    writeln!(jsonl, "{header}")?;
    for r in &outcome.reports {
        writeln!(jsonl, "{}", r.to_json()?)?;
    }
    jsonl.flush()?;
    let mut csv = String::new();
    csv.push_str(&format!("# {header}\n{SUMMARY_HEADER}\n"));
    for row in &outcome.summary {
        csv.push_str(&row.to_csv());
        csv.push('\n');
    }
    fs::write(dir.join("summary.csv"), csv)?;
    for c in &outcome.certificates {
        fs::write(dir.join(c.file_name()), c.to_json()?)?;
    }
    Ok(())
}

/// Family counts over the configured trials.
pub fn family_counts(config: &HarnessConfig) -> BTreeMap<Family, u64> {
    let mut counts = BTreeMap::new();
    for t in 0..config.trials {
        *counts.entry(config.family_of(t)).or_insert(0) += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::report::{FamilyWeight, Suite};

    fn small(suite: Suite, threads: usize) -> HarnessConfig {
        HarnessConfig {
            trials: 6,
            families: vec![
                FamilyWeight { family: Family::Polygon, weight: 1 },
                FamilyWeight { family: Family::Product, weight: 1 },
                FamilyWeight { family: Family::Gaussian, weight: 1 },
            ],
            suite,
            threads,
            ..HarnessConfig::default()
        }
    }

    #[test]
    fn small_campaign_passes_and_is_deterministic() {
        let a = search(&small(Suite::All, 1)).unwrap();
        let b = search(&small(Suite::All, 2)).unwrap();
        assert_eq!(a, b);
        assert!(a.min_kappa.unwrap() >= KAPPA_PROVEN);
        let ids: BTreeSet<&str> = a.reports.iter().map(|r| r.check_id.as_str()).collect();
        for id in ["kappa_triangle", "norm_triangle", "sum_entropy", "small_theta", "kappa_linear", "lambda_concavity", "epi_floor"] {
            assert!(ids.contains(id), "missing {id}");
        }
        for c in &a.certificates {
            verify_certificate(c, 1e-8).unwrap();
        }
    }

    #[test]
    fn concavity_certificate_reverifies() {
        let f = crate::constructions::two_bump_density(1.0, 1.0).unwrap();
        let c = concavity_certificate(&f, [0.05, 0.1, 0.15], 1, 2).unwrap();
        let back = ViolationCertificate::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(back, c);
        verify_certificate(&back, 1e-8).unwrap();
        let mut forged = back.clone();
        forged.margin += 1e-6;
        assert!(matches!(verify_certificate(&forged, 1e-8), Err(Error::Certificate(_))));
        assert_eq!(c.file_name(), "violation-lambda_concavity-1-2.json");
    }

    #[test]
    fn triangle_certificate_reverifies() {
        let m = LcModel2D::Polygon(crate::lc2d::polygon::Polygon::rectangle(1.0, 1.0).unwrap());
        let c = triangle_certificate(&m, [1.0, 0.0], [1.0, 1e-3], 3, 4).unwrap();
        let back = ViolationCertificate::from_json(&c.to_json().unwrap()).unwrap();
        assert!((verify_certificate(&back, 1e-8).unwrap() - c.margin).abs() <= 1e-8);
    }

    #[test]
    fn outputs_are_written() {
        let config = small(Suite::Theorems, 1);
        let outcome = search(&config).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_outputs(&outcome, &header_line(&config).unwrap(), dir.path()).unwrap();
        let jsonl = fs::read_to_string(dir.path().join("reports.jsonl")).unwrap();
        let mut lines = jsonl.lines();
        assert!(lines.next().unwrap().contains("\"version\""));
        let first = CheckReport::from_json(lines.next().unwrap()).unwrap();
        assert_eq!(first, outcome.reports[0]);
        let csv = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert!(csv.lines().nth(1).unwrap() == SUMMARY_HEADER);
    }
}

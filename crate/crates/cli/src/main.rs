//! `lcent`: entropies of projections of log-concave vectors from the command line.
//!
//! Exit codes: 0 on success, 1 when a theorem-grade check fails, 2 on input
//! errors.

mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lcent::constructions::{counterexample_row, lambda0_params, CounterexampleRow};
use lcent::harness::checks::{self, AOKI_ROLEWICZ_KAPPA, KAPPA_PROVEN};
use lcent::harness::report::SUMMARY_HEADER;
use lcent::harness::search::{self, VERSION};
use lcent::harness::{HarnessConfig, Tolerances};
use lcent::lc2d::generate::{random_model, Family};
use lcent::lc2d::{LcModel2D, Precision, Projection};
use lcent::{EntropyValue, Error, PiecewisePolyDensity, Result};
use rand::{Rng, SeedableRng};
use serde::Serialize;

use config::{parse_families, pick, FileConfig, Format};

#[derive(Parser, Debug)]
#[command(name = "lcent", version, about = "Entropies of projections of log-concave random vectors")]
struct Cli {
    /// JSON config file; keys are the long flag names.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Common {
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write the result here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Differential entropy of a piecewise-polynomial density file.
    Entropy {
        #[arg(long)]
        density: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Density and entropy of `⟨v, X⟩` for a model file.
    Project {
        #[arg(long)]
        model: Option<PathBuf>,
        /// Direction as `x,y`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        direction: Option<Vec<f64>>,
        #[arg(long)]
        doubled_precision: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Closed-form and pipeline entropies of the two-bump counterexample.
    Counterexample {
        #[arg(long)]
        lambda0: Option<f64>,
        #[arg(long)]
        h: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Largest κ for which the κ-triangle inequality holds on sampled pairs.
    ScanKappa {
        /// Model file; without it a random model is generated.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        family: Option<Family>,
        #[arg(long)]
        size: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Random unit-circle pairs, on top of (e1,e2) and (e1,e1+e2).
        #[arg(long)]
        pairs: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        kappa_grid: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
    /// Concavity of `λ ↦ S(√λX + √(1-λ)Y)` for i.i.d. summands.
    Concavity {
        #[arg(long)]
        density: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        lambda_grid: Option<Vec<f64>>,
        /// Skip the even log-concave hypothesis check.
        #[arg(long)]
        allow_non_log_concave: bool,
        /// Second-difference tolerance before scaling by the squared spacing.
        #[arg(long)]
        tolerance: Option<f64>,
        /// Where to write a certificate if concavity fails.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Randomized campaign over generated models.
    Verify {
        #[arg(long)]
        suite: Option<lcent::harness::Suite>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
        /// Worker threads (0 = all cores); results do not depend on it.
        #[arg(long)]
        threads: Option<usize>,
        /// Family weights, e.g. `polygon:2,product:2,grid:1`.
        #[arg(long, value_parser = parse_families)]
        families: Option<Vec<lcent::harness::FamilyWeight>>,
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        kappa_grid: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        lambda_grid: Option<Vec<f64>>,
        /// Tolerance of exact-family entropy checks.
        #[arg(long)]
        tolerance: Option<f64>,
        /// Directory for reports.jsonl, summary.csv and certificates.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

/// Exit status of a successful run.
enum Status {
    Ok,
    TheoremFailure,
}

#[derive(Serialize)]
struct Header<'a> {
    version: &'a str,
    config: &'a FileConfig,
}

fn header(config: &FileConfig) -> Result<String> {
    Ok(lcent::jsonfmt::to_string(&Header { version: VERSION, config })?)
}

#[derive(Serialize)]
struct JsonOut<'a, T: Serialize> {
    version: &'a str,
    config: &'a FileConfig,
    result: T,
}

fn json_out<T: Serialize>(config: &FileConfig, result: T) -> Result<String> {
    let mut s = lcent::jsonfmt::to_string(&JsonOut { version: VERSION, config, result })?;
    s.push('\n');
    Ok(s)
}

fn csv_out(config: &FileConfig, columns: &str, rows: &[String]) -> Result<String> {
    let mut s = format!("# {}\n{columns}\n", header(config)?);
    for r in rows {
        s.push_str(r);
        s.push('\n');
    }
    Ok(s)
}

fn f(x: f64) -> String {
    lcent::jsonfmt::fmt_f64(x)
}

fn emit(text: &str, output: &Option<PathBuf>) -> Result<()> {
    match output {
        Some(path) => Ok(std::fs::write(path, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_density(path: &Path) -> Result<PiecewisePolyDensity> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    PiecewisePolyDensity::from_json(&text)
}

fn read_model(path: &Path) -> Result<LcModel2D> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

fn required<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| Error::Config(format!("--{flag} is required")))
}

fn run(cli: Cli) -> Result<Status> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Entropy { density, common } => {
            let eff = FileConfig {
                format: Some(pick(&common.format, &file.format).unwrap_or_default()),
                density: Some(required(pick(&density, &file.density), "density")?),
                ..FileConfig::default()
            };
            let d = read_density(eff.density.as_ref().unwrap())?;
            let s = lcent::entropy(&d)?;
            let text = match eff.format.unwrap() {
                Format::Json => json_out(&eff, s)?,
                Format::Csv => csv_out(&eff, "value,method,abs_error_bound", &[entropy_csv(&s)])?,
            };
            emit(&text, &pick(&common.output, &file.output))?;
            Ok(Status::Ok)
        }
        Command::Project { model, direction, doubled_precision, common } => {
            let eff = FileConfig {
                format: Some(pick(&common.format, &file.format).unwrap_or_default()),
                model: Some(required(pick(&model, &file.model), "model")?),
                direction: Some(required(pick(&direction, &file.direction), "direction")?),
                doubled_precision: Some(doubled_precision || file.doubled_precision.unwrap_or(false)),
                ..FileConfig::default()
            };
            let v = eff.direction.clone().unwrap();
            if v.len() != 2 {
                return Err(Error::Config(format!("--direction needs two components, got {}", v.len())));
            }
            let m = read_model(eff.model.as_ref().unwrap())?;
            let precision = if eff.doubled_precision == Some(true) { Precision::doubled() } else { Precision::standard() };
            let p = m.projection_with([v[0], v[1]], &precision)?;
            let s = p.entropy_with(&precision)?;
            let text = match eff.format.unwrap() {
                Format::Json => json_out(&eff, ProjectOut::new(&p, s))?,
                Format::Csv => csv_out(&eff, "x,density", &projection_samples(&p))?,
            };
            emit(&text, &pick(&common.output, &file.output))?;
            Ok(Status::Ok)
        }
        Command::Counterexample { lambda0, h, common } => {
            let eff = FileConfig {
                format: Some(pick(&common.format, &file.format).unwrap_or_default()),
                lambda0: Some(pick(&lambda0, &file.lambda0).unwrap_or(0.1)),
                h: Some(pick(&h, &file.h).unwrap_or(1.0)),
                ..FileConfig::default()
            };
            let (l0, h) = (eff.lambda0.unwrap(), eff.h.unwrap());
            lambda0_params(l0, h).map_err(|e| Error::Config(e.to_string()))?;
            let row = counterexample_row(l0, h)?;
            let text = match eff.format.unwrap() {
                Format::Json => json_out(&eff, row)?,
                Format::Csv => csv_out(&eff, CounterexampleRow::CSV_HEADER, &[row.to_csv()])?,
            };
            emit(&text, &pick(&common.output, &file.output))?;
            Ok(if row.gap_closed > 0.0 { Status::Ok } else { Status::TheoremFailure })
        }
        Command::ScanKappa { model, family, size, seed, pairs, kappa_grid, common } => {
            let model_path = pick(&model, &file.model);
            let family = pick(&family, &file.family).unwrap_or(Family::Polygon);
            let defaults = HarnessConfig::default();
            let eff = FileConfig {
                format: Some(pick(&common.format, &file.format).unwrap_or_default()),
                family: model_path.is_none().then_some(family),
                size: model_path.is_none().then(|| pick(&size, &file.size).unwrap_or(defaults.size_of(family))),
                model: model_path,
                seed: Some(pick(&seed, &file.seed).unwrap_or(42)),
                pairs: Some(pick(&pairs, &file.pairs).unwrap_or(defaults.random_pairs)),
                kappa_grid: Some(pick(&kappa_grid, &file.kappa_grid).unwrap_or(defaults.kappa_grid)),
                ..FileConfig::default()
            };
            let grid = eff.kappa_grid.clone().unwrap();
            if grid.is_empty() || grid.iter().any(|&k| !(k > 0.0 && k <= 2.0)) || grid.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::Config("--kappa-grid must be increasing within (0,2]".into()));
            }
            let seed = eff.seed.unwrap();
            let m = match &eff.model {
                Some(p) => read_model(p)?,
                None => random_model(seed, family, eff.size.unwrap())?,
            };
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x5ca1_ab1e);
            let mut list: Vec<([f64; 2], [f64; 2])> = (0..eff.pairs.unwrap())
                .map(|_| {
                    let (a, b): (f64, f64) = (rng.gen_range(0.0..std::f64::consts::TAU), rng.gen_range(0.0..std::f64::consts::TAU));
                    ([a.cos(), a.sin()], [b.cos(), b.sin()])
                })
                .collect();
            list.push(([1.0, 0.0], [0.0, 1.0]));
            list.push(([1.0, 0.0], [1.0, 1.0]));
            let scan = checks::kappa_scan(&m, &list, &grid)?;
            let witness = scan.witness.map(|i| list[i]);
            let out = ScanOut {
                model: m.descriptor(),
                kappa: scan.kappa,
                at_top: scan.at_top,
                witness_u: witness.map(|w| w.0),
                witness_v: witness.map(|w| w.1),
                reference_kappa: AOKI_ROLEWICZ_KAPPA,
            };
            if scan.kappa < AOKI_ROLEWICZ_KAPPA {
                eprintln!("note: κ scan stopped at {:.4}, below ln2/(1+ln2)", scan.kappa);
            }
            let text = match eff.format.unwrap() {
                Format::Json => json_out(&eff, &out)?,
                Format::Csv => {
                    let (u, v) = witness.unwrap_or(([f64::NAN; 2], [f64::NAN; 2]));
                    let row = format!("{},{},{},{},{},{}", f(out.kappa), out.at_top, f(u[0]), f(u[1]), f(v[0]), f(v[1]));
                    csv_out(&eff, "kappa,at_top,u_x,u_y,v_x,v_y", &[row])?
                }
            };
            emit(&text, &pick(&common.output, &file.output))?;
            if scan.kappa < KAPPA_PROVEN {
                eprintln!("theorem-grade failure: κ scan found {} < {KAPPA_PROVEN}", scan.kappa);
                return Ok(Status::TheoremFailure);
            }
            Ok(Status::Ok)
        }
        Command::Concavity { density, lambda_grid, allow_non_log_concave, tolerance, output_dir, common } => {
            let eff = FileConfig {
                format: Some(pick(&common.format, &file.format).unwrap_or_default()),
                density: Some(required(pick(&density, &file.density), "density")?),
                lambda_grid: Some(pick(&lambda_grid, &file.lambda_grid).unwrap_or(HarnessConfig::default().lambda_grid)),
                allow_non_log_concave: Some(allow_non_log_concave || file.allow_non_log_concave.unwrap_or(false)),
                tolerance: Some(pick(&tolerance, &file.tolerance).unwrap_or(Tolerances::default().concavity)),
                ..FileConfig::default()
            };
            let grid = eff.lambda_grid.clone().unwrap();
            if grid.iter().any(|&l| !(l > 0.0 && l < 1.0)) {
                return Err(Error::Config("--lambda-grid values must lie in (0,1)".into()));
            }
            let d = read_density(eff.density.as_ref().unwrap())?;
            let scan = checks::concavity_scan(
                &d,
                &grid,
                eff.tolerance.unwrap(),
                Tolerances::default().epi,
                eff.allow_non_log_concave.unwrap(),
            )
            .map_err(|e| match e {
                Error::Hypothesis(m) => Error::Config(format!("hypothesis not satisfied: {m} (use --allow-non-log-concave to override)")),
                other => other,
            })?;
            if !scan.report.pass {
                eprintln!("concavity fails: second difference {:e} at λ = {}", scan.report.lhs, scan.lambdas[scan.worst]);
                if let Some(dir) = pick(&output_dir, &file.output_dir) {
                    let k = scan.worst;
                    let cert = search::concavity_certificate(&d, [scan.lambdas[k - 1], scan.lambdas[k], scan.lambdas[k + 1]], 0, 0)?;
                    std::fs::create_dir_all(&dir)?;
                    std::fs::write(dir.join(cert.file_name()), cert.to_json()?)?;
                }
            }
            let floor_ok = scan.floor.iter().all(|r| r.pass);
            let text = match eff.format.unwrap() {
                Format::Json => json_out(&eff, ConcavityOut::new(&scan))?,
                Format::Csv => {
                    let rows: Vec<String> = (0..scan.lambdas.len())
                        .map(|k| format!("{},{},{}", f(scan.lambdas[k]), f(scan.entropies[k]), f(scan.errors[k])))
                        .collect();
                    csv_out(&eff, "lambda,entropy,abs_error_bound", &rows)?
                }
            };
            emit(&text, &pick(&common.output, &file.output))?;
            if !floor_ok {
                eprintln!("theorem-grade failure: entropy power floor violated");
                return Ok(Status::TheoremFailure);
            }
            Ok(Status::Ok)
        }
        Command::Verify {
            suite,
            seed,
            trials,
            threads,
            families,
            kappa,
            kappa_grid,
            lambda_grid,
            tolerance,
            output_dir,
            common,
        } => {
            let d = HarnessConfig::default();
            let mut tolerances = file.tolerances.unwrap_or_default();
            if let Some(t) = pick(&tolerance, &file.tolerance) {
                tolerances.exact = t;
            }
            let eff = FileConfig {
                format: Some(pick(&common.format, &file.format).unwrap_or(Format::Csv)),
                suite: Some(pick(&suite, &file.suite).unwrap_or(d.suite)),
                seed: Some(pick(&seed, &file.seed).unwrap_or(d.seed)),
                trials: Some(pick(&trials, &file.trials).unwrap_or(d.trials)),
                families: Some(pick(&families, &file.families).unwrap_or(d.families.clone())),
                polygon_points: Some(file.polygon_points.unwrap_or(d.polygon_points)),
                product_pieces: Some(file.product_pieces.unwrap_or(d.product_pieces)),
                grid_terms: Some(file.grid_terms.unwrap_or(d.grid_terms)),
                pairs: Some(file.pairs.unwrap_or(d.random_pairs)),
                kappa: Some(pick(&kappa, &file.kappa).unwrap_or(d.kappa)),
                kappa_grid: Some(pick(&kappa_grid, &file.kappa_grid).unwrap_or(d.kappa_grid.clone())),
                theta_grid: Some(file.theta_grid.clone().unwrap_or(d.theta_grid.clone())),
                small_theta_grid: Some(file.small_theta_grid.clone().unwrap_or(d.small_theta_grid.clone())),
                lambda_grid: Some(pick(&lambda_grid, &file.lambda_grid).unwrap_or(d.lambda_grid.clone())),
                epi_lambdas: Some(file.epi_lambdas.clone().unwrap_or(d.epi_lambdas.clone())),
                beta_grid: Some(file.beta_grid.clone().unwrap_or(d.beta_grid.clone())),
                tolerances: Some(tolerances),
                ..FileConfig::default()
            };
            let config = HarnessConfig {
                seed: eff.seed.unwrap(),
                trials: eff.trials.unwrap(),
                families: eff.families.clone().unwrap(),
                suite: eff.suite.unwrap(),
                polygon_points: eff.polygon_points.unwrap(),
                product_pieces: eff.product_pieces.unwrap(),
                grid_terms: eff.grid_terms.unwrap(),
                random_pairs: eff.pairs.unwrap(),
                kappa: eff.kappa.unwrap(),
                kappa_grid: eff.kappa_grid.clone().unwrap(),
                theta_grid: eff.theta_grid.clone().unwrap(),
                small_theta_grid: eff.small_theta_grid.clone().unwrap(),
                lambda_grid: eff.lambda_grid.clone().unwrap(),
                epi_lambdas: eff.epi_lambdas.clone().unwrap(),
                beta_grid: eff.beta_grid.clone().unwrap(),
                tolerances,
                threads: pick(&threads, &file.threads).unwrap_or(0),
                output_dir: pick(&output_dir, &file.output_dir),
            };
            config.validate()?;
            let outcome = search::run_trials(&config)?;
            if let Some(dir) = &config.output_dir {
                search::write_outputs(&outcome, &header(&eff)?, dir)?;
            }
            for note in &outcome.noteworthy {
                eprintln!("note: {note}");
            }
            for cert in &outcome.certificates {
                let reloaded = lcent::harness::ViolationCertificate::from_json(&cert.to_json()?)?;
                search::verify_certificate(&reloaded, config.tolerances.certificate)?;
                eprintln!("certificate {} re-verified (margin {:e})", cert.file_name(), cert.margin);
            }
            let text = match eff.format.unwrap() {
                Format::Csv => {
                    let rows: Vec<String> = outcome.summary.iter().map(|r| r.to_csv()).collect();
                    csv_out(&eff, SUMMARY_HEADER, &rows)?
                }
                Format::Json => json_out(
                    &eff,
                    VerifyOut {
                        summary: &outcome.summary,
                        min_kappa: outcome.min_kappa,
                        certificates: outcome.certificates.iter().map(|c| c.file_name()).collect(),
                        theorem_failures: outcome.theorem_failures().len(),
                    },
                )?,
            };
            emit(&text, &pick(&common.output, &file.output))?;
            let failures = outcome.theorem_failures();
            if let Some(first) = failures.first() {
                eprintln!("theorem-grade failure: {}", search::failure_diagnostic(first, failures.len()));
                return Ok(Status::TheoremFailure);
            }
            Ok(Status::Ok)
        }
    }
}

fn entropy_csv(s: &EntropyValue) -> String {
    let method = serde_json::to_value(s.method).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
    format!("{},{},{}", f(s.value), method, f(s.abs_error_bound))
}

#[derive(Serialize)]
struct ProjectOut {
    entropy: EntropyValue,
    sup_norm: f64,
    interpolation_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    density: Option<PiecewisePolyDensity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    variance: Option<f64>,
}

impl ProjectOut {
    fn new(p: &Projection, entropy: EntropyValue) -> Self {
        let (density, variance, interpolation_error) = match p {
            Projection::Piecewise { density, error_bound, .. } => (Some(density.clone()), None, *error_bound),
            Projection::Gaussian { variance } => (None, Some(*variance), 0.0),
        };
        ProjectOut { entropy, sup_norm: p.sup_norm(), interpolation_error, density, variance }
    }
}

fn projection_samples(p: &Projection) -> Vec<String> {
    let (lo, hi) = match p {
        Projection::Piecewise { density, .. } => density.support(),
        Projection::Gaussian { variance } => (-6.0 * variance.sqrt(), 6.0 * variance.sqrt()),
    };
    const N: usize = 512;
    (0..=N)
        .map(|k| {
            let x = lo + (hi - lo) * k as f64 / N as f64;
            let mut s = String::new();
            let _ = write!(s, "{},{}", f(x), f(p.eval(x)));
            s
        })
        .collect()
}

#[derive(Serialize)]
struct ScanOut {
    model: String,
    kappa: f64,
    at_top: bool,
    witness_u: Option<[f64; 2]>,
    witness_v: Option<[f64; 2]>,
    reference_kappa: f64,
}

#[derive(Serialize)]
struct ConcavityOut<'a> {
    lambdas: &'a [f64],
    entropies: &'a [f64],
    errors: &'a [f64],
    worst_second_difference: f64,
    worst_lambda: f64,
    pass: bool,
    floor_min_margin: f64,
}

impl<'a> ConcavityOut<'a> {
    fn new(s: &'a lcent::harness::ConcavityScan) -> Self {
        ConcavityOut {
            lambdas: &s.lambdas,
            entropies: &s.entropies,
            errors: &s.errors,
            worst_second_difference: s.report.lhs,
            worst_lambda: s.lambdas[s.worst],
            pass: s.report.pass,
            floor_min_margin: s.floor.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min),
        }
    }
}

#[derive(Serialize)]
struct VerifyOut<'a> {
    summary: &'a [lcent::harness::SummaryRow],
    min_kappa: Option<f64>,
    certificates: Vec<String>,
    theorem_failures: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::TheoremFailure) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 1 for failed proved statements and certificates, 2 for everything else.
fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::TheoremViolation(_) | Error::Certificate(_) => 1,
        _ => 2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_contract() {
        assert_eq!(exit_code(&Error::TheoremViolation("x".into())), 1);
        assert_eq!(exit_code(&Error::Certificate("x".into())), 1);
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
        assert_eq!(exit_code(&Error::Domain("x".into())), 2);
        assert_eq!(exit_code(&Error::GridTooCoarse { estimate: 1.0, limit: 0.1 }), 2);
    }
}

//! Acceptance criteria, one pass/fail line each. Exits nonzero if any fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use lcent::constructions::{closed_form_entropies, counterexample_row, lambda0_params, make_trapezoid, TrapezoidSpec};
use lcent::entropy::trapezoid_entropy_i;
use lcent::harness::checks::{classical_lemma_checks, grunbaum_row, positive_half, uniform_box_check};
use lcent::harness::{run_trials, CheckReport, HarnessConfig, Suite, ViolationCertificate};
use lcent::lc2d::generate::{random_even_log_concave, Family};
use lcent::quadrature;
use lcent::PiecewisePolyDensity;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg)
    }
}

fn counterexample() -> Outcome {
    let start = Instant::now();
    let row = counterexample_row(0.1, 1.0).map_err(|e| e.to_string())?;
    let spec = lambda0_params(0.1, 1.0).map_err(|e| e.to_string())?;
    ensure((spec.a - 1.0).abs() < 1e-15, format!("a = {}", spec.a))?;
    let closed = closed_form_entropies(&spec).map_err(|e| e.to_string())?;
    let half = 2f64.ln() + 0.5;
    ensure((row.s_half_pipeline - half).abs() <= 1e-9, format!("S(X_1/2) = {}", row.s_half_pipeline))?;
    ensure((row.s_lambda0_pipeline - closed.s_lambda0).abs() <= 1e-9, format!("S(X_0.1) = {}", row.s_lambda0_pipeline))?;
    ensure((row.s_lambda0_pipeline - 1.416947).abs() < 5e-7, format!("S(X_0.1) = {}", row.s_lambda0_pipeline))?;
    ensure((row.gap_closed - 0.223800).abs() < 5e-7 && row.gap_closed > 0.0, format!("gap = {}", row.gap_closed))?;
    for k in 1..=14 {
        let l0 = k as f64 / 100.0;
        let r = counterexample_row(l0, 1.0).map_err(|e| e.to_string())?;
        ensure(r.gap_closed > 0.0 && r.s_lambda0_pipeline > r.s_half_pipeline, format!("gap at λ₀ = {l0}: {}", r.gap_closed))?;
    }
    let elapsed = start.elapsed().as_secs_f64();
    ensure(elapsed < 1.0, format!("took {elapsed:.2} s"))?;
    Ok(format!("S(X_1/2) = {:.9}, S(X_0.1) = {:.9}, gap = {:.6}, {elapsed:.3} s", row.s_half_pipeline, row.s_lambda0_pipeline, row.gap_closed))
}

fn by_id<'a>(reports: &'a [CheckReport], id: &str) -> Vec<&'a CheckReport> {
    reports.iter().filter(|r| r.check_id == id).collect()
}

fn worst(reports: &[&CheckReport]) -> f64 {
    reports.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min)
}

struct Corpus {
    config: HarnessConfig,
    reports: Vec<CheckReport>,
    seconds: f64,
}

fn corpus() -> Result<Corpus, String> {
    let config = HarnessConfig { seed: 42, trials: 1000, suite: Suite::Theorems, ..HarnessConfig::default() };
    let start = Instant::now();
    let outcome = run_trials(&config).map_err(|e| e.to_string())?;
    Ok(Corpus { config, reports: outcome.reports, seconds: start.elapsed().as_secs_f64() })
}

fn kappa_triangle(c: &Corpus) -> Outcome {
    let mut families: BTreeMap<Family, u64> = BTreeMap::new();
    for t in 0..c.config.trials {
        *families.entry(c.config.family_of(t)).or_default() += 1;
    }
    ensure(
        [Family::Polygon, Family::Product, Family::Grid].iter().all(|f| families.contains_key(f)),
        format!("families {families:?}"),
    )?;
    let rows = by_id(&c.reports, "kappa_triangle");
    let trials: std::collections::BTreeSet<_> = rows.iter().map(|r| r.trial).collect();
    let pairs = c.config.random_pairs + 2;
    ensure(trials.len() as u64 >= 1000 && pairs == 22, format!("{} models × {pairs} pairs", trials.len()))?;
    ensure(rows.iter().all(|r| r.inputs["kappa"] == 0.2), "κ is not 1/5".into())?;
    let w = worst(&rows);
    ensure(w >= -1e-7 && rows.iter().all(|r| r.pass), format!("worst margin {w:e}"))?;
    ensure(c.seconds < 300.0, format!("corpus took {:.0} s", c.seconds))?;
    Ok(format!("{} models ({families:?}) × {pairs} pairs, worst margin {w:.6e}, {:.0} s", trials.len(), c.seconds))
}

fn margin_check(c: &Corpus, id: &str, floor: f64, min_rows: usize) -> Outcome {
    let rows = by_id(&c.reports, id);
    ensure(rows.len() >= min_rows, format!("only {} {id} rows", rows.len()))?;
    let w = worst(&rows);
    ensure(w >= -floor, format!("worst {id} margin {w:e}"))?;
    Ok(format!("{} rows, worst margin {w:.6e}", rows.len()))
}

fn small_theta(c: &Corpus) -> Outcome {
    let rows = by_id(&c.reports, "small_theta");
    let thetas: std::collections::BTreeSet<u64> = rows.iter().map(|r| r.inputs["theta"].to_bits()).collect();
    ensure(thetas.len() == 4, format!("θ values {thetas:?}"))?;
    margin_check(c, "small_theta", 1e-6, 4000)
}

fn derivative_functional(c: &Corpus) -> Outcome {
    let rows: Vec<&CheckReport> = by_id(&c.reports, "derivative_functional").into_iter().filter(|r| r.model.starts_with("grid")).collect();
    ensure(rows.len() >= 100, format!("only {} grid models", rows.len()))?;
    let bad = rows.iter().filter(|r| r.lhs > r.rhs + 5e-3).count();
    ensure(bad == 0, format!("{bad} grid models exceed 30γ∫w + 5e-3"))?;
    let ratio = rows.iter().map(|r| r.lhs / r.rhs).fold(f64::NEG_INFINITY, f64::max);
    Ok(format!("{} grid models, largest D/(30γ∫w) = {ratio:.4}", rows.len()))
}

fn classical_lemmas() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let betas = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0];
    let mut rows = 0;
    let mut worst_margin = f64::INFINITY;
    for k in 0..200 {
        let pieces = rng.gen_range(1..8);
        let f = random_even_log_concave(&mut rng, pieces).map_err(|e| e.to_string())?;
        let mut reports = classical_lemma_checks(&f, &betas, 1e-9).map_err(|e| format!("density {k}: {e}"))?;
        reports.push(grunbaum_row(&positive_half(&f).map_err(|e| e.to_string())?, 1e-9).map_err(|e| e.to_string())?);
        for r in &reports {
            ensure(r.pass, format!("density {k}: {} margin {:e}", r.check_id, r.margin))?;
            worst_margin = worst_margin.min(r.margin);
        }
        rows += reports.len();
    }
    Ok(format!("200 densities, {rows} rows, worst margin {worst_margin:.6e}"))
}

fn sandwich(c: &Corpus) -> Outcome {
    let lo = margin_check(c, "max_sandwich_lower", 1e-9, 1000)?;
    let hi = margin_check(c, "max_sandwich_upper", 1e-9, 1000)?;
    Ok(format!("lower: {lo}; upper: {hi}"))
}

fn uniform_box() -> Outcome {
    let mut gap: f64 = 0.0;
    for t in [0.001, 0.01, 0.1, 0.5, 1.0] {
        let r = uniform_box_check(t, 0.2).map_err(|e| e.to_string())?;
        ensure(r.pass, format!("κ = 0.2, t = {t}: margin {:e}", r.margin))?;
        gap = gap.max(r.error_bound);
    }
    let r = uniform_box_check(0.001, 1.5).map_err(|e| e.to_string())?;
    ensure(!r.pass, format!("κ = 1.5, t = 0.001 unexpectedly passes (margin {:e})", r.margin))?;
    gap = gap.max(r.error_bound);
    ensure(gap <= 1e-10, format!("closed form and pipeline differ by {gap:e}"))?;
    Ok(format!("κ = 0.2 passes on all t, κ = 1.5 fails at t = 0.001 (margin {:.3e}), route gap {gap:.1e}", r.margin))
}

/// Random piecewise-linear density, zero at both ends, with every knot on
/// the lattice `lo + i h`, `i < cells`.
fn random_pl(rng: &mut ChaCha8Rng, h: f64, cells: usize) -> PiecewisePolyDensity {
    let n = rng.gen_range(2..7);
    let lo = rng.gen_range(-1.0..0.0);
    let m = rng.gen_range(cells / 4..cells);
    let slot = m / (n + 1);
    let mut idx = vec![0];
    for j in 1..=n {
        idx.push(j * slot + rng.gen_range(slot / 5..4 * slot / 5) - slot / 2);
    }
    idx.push(m);
    let knots: Vec<f64> = idx.iter().map(|&i| lo + i as f64 * h).collect();
    let mut ys: Vec<f64> = (0..knots.len()).map(|_| rng.gen_range(0.2..1.0)).collect();
    ys[0] = 0.0;
    *ys.last_mut().unwrap() = 0.0;
    PiecewisePolyDensity::piecewise_linear(&knots, &ys).unwrap().normalize().unwrap()
}

fn oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut sup_err: f64 = 0.0;
    for _ in 0..50 {
        let n: usize = 4096;
        let h = 2.0 / (n - 1) as f64;
        let (f, g) = (random_pl(&mut rng, h, n - 1), random_pl(&mut rng, h, n - 1));
        let exact = f.convolve(&g).map_err(|e| e.to_string())?;
        let (fl, gl) = (f.support().0, g.support().0);
        let fs: Vec<f64> = (0..n).map(|i| f.eval(fl + i as f64 * h)).collect();
        let gs: Vec<f64> = (0..n).map(|i| g.eval(gl + i as f64 * h)).collect();
        // Cell-exact weights for a product of two linear functions.
        let gs: Vec<f64> = (0..n)
            .map(|j| (4.0 * gs[j] + if j > 0 { gs[j - 1] } else { 0.0 } + gs.get(j + 1).copied().unwrap_or(0.0)) / 6.0)
            .collect();
        for k in (0..2 * n - 1).step_by(3) {
            let i0 = k.saturating_sub(n - 1);
            let i1 = k.min(n - 1);
            let s: f64 = (i0..=i1).map(|i| fs[i] * gs[k - i]).sum::<f64>() * h;
            let z = fl + gl + k as f64 * h;
            sup_err = sup_err.max((s - exact.eval(z)).abs());
        }
    }
    ensure(sup_err <= 1e-6, format!("dense-grid convolution differs by {sup_err:e}"))?;
    let mut ent_err: f64 = 0.0;
    for _ in 0..50 {
        let alpha = rng.gen_range(0.1..2.0);
        let beta = alpha + rng.gen_range(0.0..2.0);
        let amp = rng.gen_range(0.1..3.0);
        let closed = trapezoid_entropy_i(amp, alpha, beta).map_err(|e| e.to_string())?;
        let t = make_trapezoid(&TrapezoidSpec::new(0.0, alpha, beta, amp).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let mut quad = 0.0;
        for k in 0..t.num_pieces() {
            let (a, b) = t.piece_interval(k);
            let q = quadrature::integrate(
                |x| {
                    let v = t.eval(x.clamp(a + 1e-300, b));
                    if v > 0.0 {
                        v * v.ln()
                    } else {
                        0.0
                    }
                },
                a,
                b,
                1e-13,
                50,
            );
            quad += q.value;
        }
        ent_err = ent_err.max((quad - closed).abs());
    }
    ensure(ent_err <= 1e-9, format!("trapezoid entropy closed form differs by {ent_err:e}"))?;
    Ok(format!("convolution sup error {sup_err:.2e}, trapezoid entropy error {ent_err:.2e}"))
}

fn lcent_cmd(args: &[&str], dir: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_lcent")).args(args).current_dir(dir).output().expect("run lcent")
}

fn conjecture_campaign(dir: &Path) -> Outcome {
    let o = lcent_cmd(&["verify", "--suite", "conjectures", "--seed", "42", "--trials", "1000", "--output-dir", "conj"], dir);
    ensure(o.status.code() == Some(0), format!("exit {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr)))?;
    let summary = String::from_utf8_lossy(&o.stdout).to_string();
    let field = |id: &str| -> Option<f64> {
        summary.lines().find(|l| l.starts_with(&format!("{id},"))).and_then(|l| l.split(',').nth(2)).and_then(|x| x.parse().ok())
    };
    let triangle = field("norm_triangle").ok_or("summary lacks the κ=1 triangle row")?;
    let concavity = field("lambda_concavity").ok_or("summary lacks the concavity row")?;
    let mut certs = 0;
    for entry in fs::read_dir(dir.join("conj")).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        if path.file_name().unwrap().to_string_lossy().starts_with("violation-") {
            let cert = ViolationCertificate::from_json(&fs::read_to_string(&path).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            lcent::harness::verify_certificate(&cert, 1e-8).map_err(|e| e.to_string())?;
            certs += 1;
        }
    }
    Ok(format!(
        "worst κ=1 margin {triangle:.6e}, worst second difference {:.6e}, {certs} certificate(s) re-verified",
        -concavity
    ))
}

fn determinism(dir: &Path) -> Outcome {
    let mut outputs = Vec::new();
    for threads in ["1", "2", "4"] {
        let out = format!("det{threads}");
        let o = lcent_cmd(&["verify", "--suite", "all", "--seed", "42", "--trials", "40", "--threads", threads, "--output-dir", &out], dir);
        ensure(o.status.code() == Some(0), format!("exit {:?}", o.status.code()))?;
        let mut files = BTreeMap::new();
        for entry in fs::read_dir(dir.join(&out)).map_err(|e| e.to_string())? {
            let path = entry.map_err(|e| e.to_string())?.path();
            files.insert(path.file_name().unwrap().to_string_lossy().to_string(), fs::read(&path).map_err(|e| e.to_string())?);
        }
        outputs.push((o.stdout, files));
    }
    ensure(outputs.windows(2).all(|w| w[0] == w[1]), "outputs differ across thread counts".into())?;
    let bytes: usize = outputs[0].1.values().map(Vec::len).sum();
    Ok(format!("1, 2 and 4 threads give byte-identical output ({} files, {bytes} bytes)", outputs[0].1.len()))
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let mut failed = 0;
    let mut report = |n: usize, name: &str, outcome: Outcome| {
        match &outcome {
            Ok(detail) => println!("criterion {n:>2} [{name}]: PASS ({detail})"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n:>2} [{name}]: FAIL ({detail})")
            }
        }
    };
    report(1, "counterexample", counterexample());
    match corpus() {
        Ok(c) => {
            report(2, "kappa_triangle", kappa_triangle(&c));
            report(3, "sum_entropy", margin_check(&c, "sum_entropy", 1e-7, 1000));
            report(4, "small_theta", small_theta(&c));
            report(5, "derivative_functional", derivative_functional(&c));
            report(6, "classical_lemmas", classical_lemmas());
            report(7, "max_sandwich", sandwich(&c));
            report(8, "epi_floor", margin_check(&c, "epi_floor", 1e-8, 1000));
        }
        Err(e) => {
            for (n, name) in [(2, "kappa_triangle"), (3, "sum_entropy"), (4, "small_theta"), (5, "derivative_functional"), (7, "max_sandwich"), (8, "epi_floor")] {
                report(n, name, Err(format!("corpus run failed: {e}")));
            }
            report(6, "classical_lemmas", classical_lemmas());
        }
    }
    report(9, "uniform_box", uniform_box());
    report(10, "oracles", oracles());
    report(11, "conjecture_campaign", conjecture_campaign(dir.path()));
    report(12, "determinism", determinism(dir.path()));
    if failed > 0 {
        println!("{failed} acceptance criterion/criteria failed");
        std::process::exit(1);
    }
    println!("all 12 acceptance criteria pass");
}

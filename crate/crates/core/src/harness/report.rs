//! Check reports, violation certificates and the harness configuration.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lc2d::generate::Family;
use crate::lc2d::polygon::Point;
use crate::lc2d::LcModel2D;
use crate::pwpoly::PiecewisePolyDensity;

/// Outcome of one inequality evaluated on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckReport {
    pub check_id: String,
    pub trial: Option<u64>,
    pub model: String,
    pub inputs: BTreeMap<String, f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub error_bound: f64,
}

impl CheckReport {
    /// Builds a report for `lhs ≤ rhs`.
    pub fn new(check_id: &str, model: &str, lhs: f64, rhs: f64, tolerance: f64, error_bound: f64) -> Self {
        let margin = rhs - lhs;
        CheckReport {
            check_id: check_id.to_string(),
            trial: None,
            model: model.to_string(),
            inputs: BTreeMap::new(),
            lhs,
            rhs,
            margin,
            tolerance,
            pass: margin >= -tolerance,
            error_bound,
        }
    }

    pub fn with_input(mut self, name: &str, value: f64) -> Self {
        self.inputs.insert(name.to_string(), value);
        self
    }

    pub fn with_vector(self, name: &str, v: Point) -> Self {
        self.with_input(&format!("{name}_x"), v[0]).with_input(&format!("{name}_y"), v[1])
    }

    pub fn with_trial(mut self, trial: u64) -> Self {
        self.trial = Some(trial);
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(crate::jsonfmt::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// What a certificate claims to have found.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Witness {
    /// `N(u+v) > N(u) + N(v)` for the entropy exponential of `model`.
    Triangle { model: LcModel2D, u: Point, v: Point },
    /// A positive second difference of `λ ↦ S(√λX + √(1-λ)Y)` at three
    /// equally spaced values, for i.i.d. summands with the given density.
    Concavity { density: PiecewisePolyDensity, lambdas: [f64; 3] },
}

/// Self-contained record of a conjecture violation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViolationCertificate {
    pub conjecture: String,
    pub witness: Witness,
    /// Entropies recomputed with the doubled precision settings.
    pub entropies: Vec<f64>,
    pub margin: f64,
    pub tolerance: f64,
    pub seed: u64,
    pub trial: u64,
    pub version: String,
}

impl ViolationCertificate {
    pub fn file_name(&self) -> String {
        format!("violation-{}-{}-{}.json", self.conjecture, self.seed, self.trial)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(crate::jsonfmt::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Theorems,
    Conjectures,
    All,
}

impl Suite {
    pub fn theorems(self) -> bool {
        matches!(self, Suite::Theorems | Suite::All)
    }

    pub fn conjectures(self) -> bool {
        matches!(self, Suite::Conjectures | Suite::All)
    }
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theorems" => Ok(Suite::Theorems),
            "conjectures" => Ok(Suite::Conjectures),
            "all" => Ok(Suite::All),
            other => Err(Error::Config(format!("unknown suite {other:?}"))),
        }
    }
}

/// A model family and its share of the trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyWeight {
    pub family: Family,
    pub weight: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Entropy-based checks on exact families, before adding error bounds.
    pub exact: f64,
    /// Derivative functional on grid models.
    pub grid_functional: f64,
    pub small_theta: f64,
    pub sandwich: f64,
    pub epi: f64,
    /// Multiplied by the squared λ spacing.
    pub concavity: f64,
    /// Agreement of the two forms of the linearized inequality.
    pub equivalence: f64,
    /// Relative slack of the Busemann triangle inequality.
    pub busemann: f64,
    /// Certificate re-verification.
    pub certificate: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            exact: 1e-7,
            grid_functional: 5e-3,
            small_theta: 1e-6,
            sandwich: 1e-9,
            epi: 1e-8,
            concavity: 1e-6,
            equivalence: 1e-9,
            busemann: 1e-9,
            certificate: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HarnessConfig {
    pub seed: u64,
    /// Total number of trials; trial `i` draws its family from the weighted
    /// cycle of `families`.
    pub trials: u64,
    pub families: Vec<FamilyWeight>,
    pub suite: Suite,
    pub polygon_points: usize,
    pub product_pieces: usize,
    pub grid_terms: usize,
    /// Random unit-circle pairs per trial, on top of the two fixed pairs.
    pub random_pairs: usize,
    pub kappa: f64,
    pub kappa_grid: Vec<f64>,
    pub theta_grid: Vec<f64>,
    pub small_theta_grid: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    pub epi_lambdas: Vec<f64>,
    pub beta_grid: Vec<f64>,
    pub tolerances: Tolerances,
    /// Worker threads; 0 uses all available cores. Not echoed, since it
    /// does not affect results.
    #[serde(skip_serializing)]
    pub threads: usize,
    #[serde(skip_serializing)]
    pub output_dir: Option<PathBuf>,
}

fn steps(lo: f64, step: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| ((lo + step * k as f64) * 1e6).round() / 1e6).collect()
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            seed: 42,
            trials: 100,
            families: vec![
                FamilyWeight { family: Family::Polygon, weight: 2 },
                FamilyWeight { family: Family::Product, weight: 2 },
                FamilyWeight { family: Family::Grid, weight: 1 },
            ],
            suite: Suite::All,
            polygon_points: 8,
            product_pieces: 4,
            grid_terms: 4,
            random_pairs: 20,
            kappa: 0.2,
            kappa_grid: steps(0.1, 0.1, 20),
            theta_grid: steps(0.05, 0.05, 19),
            small_theta_grid: vec![0.01, 0.05, 0.1, 0.13],
            lambda_grid: steps(0.05, 0.05, 19),
            epi_lambdas: vec![0.2, 0.5, 0.8],
            beta_grid: vec![0.5, 1.0, 2.0, 4.0],
            tolerances: Tolerances::default(),
            threads: 0,
            output_dir: None,
        }
    }
}

fn in_open_unit(name: &str, values: &[f64]) -> Result<()> {
    if let Some(x) = values.iter().find(|&&x| !(x > 0.0 && x < 1.0)) {
        return Err(Error::Config(format!("{name} value {x} outside (0,1)")));
    }
    Ok(())
}

impl HarnessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.families.is_empty() || self.families.iter().all(|f| f.weight == 0) {
            return Err(Error::Config("at least one family needs a positive weight".into()));
        }
        if self.polygon_points < 3 {
            return Err(Error::Config("polygon_points must be at least 3".into()));
        }
        if self.product_pieces < 2 {
            return Err(Error::Config("product_pieces must be at least 2".into()));
        }
        let proven = super::checks::KAPPA_PROVEN;
        if !(self.kappa > 0.0 && self.kappa <= proven) {
            return Err(Error::Config(format!("kappa {} outside (0,{proven}]; larger exponents are not theorem-grade", self.kappa)));
        }
        if self.kappa_grid.is_empty() || self.kappa_grid.iter().any(|&k| !(k > 0.0 && k <= 2.0)) {
            return Err(Error::Config("kappa_grid must be a nonempty subset of (0,2]".into()));
        }
        if self.kappa_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("kappa_grid must be strictly increasing".into()));
        }
        in_open_unit("theta_grid", &self.theta_grid)?;
        in_open_unit("lambda_grid", &self.lambda_grid)?;
        in_open_unit("epi_lambdas", &self.epi_lambdas)?;
        in_open_unit("small_theta_grid", &self.small_theta_grid)?;
        let limit = super::checks::small_theta_limit();
        if let Some(t) = self.small_theta_grid.iter().find(|&&t| t > limit) {
            return Err(Error::Config(format!("small_theta_grid value {t} above 1/(2(1+e)) = {limit:.6}")));
        }
        super::checks::uniform_spacing(&self.lambda_grid)?;
        if self.beta_grid.iter().any(|&b| !(b > 0.0 && b.is_finite())) {
            return Err(Error::Config("beta_grid values must be positive".into()));
        }
        let t = &self.tolerances;
        let all = [
            t.exact,
            t.grid_functional,
            t.small_theta,
            t.sandwich,
            t.epi,
            t.concavity,
            t.equivalence,
            t.busemann,
            t.certificate,
        ];
        if all.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
            return Err(Error::Config("tolerances must be finite and nonnegative".into()));
        }
        Ok(())
    }

    /// Family used by trial `i`.
    pub fn family_of(&self, trial: u64) -> Family {
        let total: u64 = self.families.iter().map(|f| f.weight as u64).sum();
        let mut r = trial % total;
        for f in &self.families {
            if r < f.weight as u64 {
                return f.family;
            }
            r -= f.weight as u64;
        }
        unreachable!("weights sum to total")
    }

    pub fn size_of(&self, family: Family) -> usize {
        match family {
            Family::Polygon => self.polygon_points,
            Family::Product => self.product_pieces,
            Family::Grid => self.grid_terms,
            Family::Gaussian => 0,
        }
    }
}

/// Worst margin per check id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub check_id: String,
    pub trials: u64,
    pub worst_margin: f64,
    pub min_kappa: Option<f64>,
}

pub const SUMMARY_HEADER: &str = "check_id,trials,worst_margin,min_kappa";

impl SummaryRow {
    pub fn to_csv(&self) -> String {
        let kappa = self.min_kappa.map(crate::jsonfmt::fmt_f64).unwrap_or_default();
        format!("{},{},{},{}", self.check_id, self.trials, crate::jsonfmt::fmt_f64(self.worst_margin), kappa)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_pass_follows_margin() {
        let r = CheckReport::new("x", "m", 1.0, 1.0 - 1e-8, 1e-7, 0.0);
        assert!(r.pass);
        let r = CheckReport::new("x", "m", 1.0, 1.0 - 1e-6, 1e-7, 0.0);
        assert!(!r.pass);
        assert_eq!(r.margin, (1.0 - 1e-6) - 1.0);
    }

    #[test]
    fn report_round_trips_bit_exactly() {
        let r = CheckReport::new("kappa_triangle", "polygon(8)", 0.1 + 0.2, 1.0 / 3.0, 1e-7, 1e-13)
            .with_vector("u", [0.6, -0.8])
            .with_trial(17);
        let back = CheckReport::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.lhs.to_bits(), r.lhs.to_bits());
    }

    #[test]
    fn default_config_is_valid_and_cycles_families() {
        let c = HarnessConfig::default();
        c.validate().unwrap();
        let fams: Vec<Family> = (0..5).map(|i| c.family_of(i)).collect();
        assert_eq!(fams, vec![Family::Polygon, Family::Polygon, Family::Product, Family::Product, Family::Grid]);
        assert_eq!(c.kappa_grid.len(), 20);
        assert_eq!(c.kappa_grid[19], 2.0);
        assert_eq!(c.theta_grid[18], 0.95);
    }

    #[test]
    fn config_rejects_bad_values() {
        let c = HarnessConfig { small_theta_grid: vec![0.2], ..HarnessConfig::default() };
        assert!(c.validate().is_err());
        let c = HarnessConfig { kappa: 0.5, ..HarnessConfig::default() };
        assert!(c.validate().is_err());
        let c = HarnessConfig { lambda_grid: vec![0.1, 0.2, 0.4], ..HarnessConfig::default() };
        assert!(c.validate().is_err());
        let err = serde_json::from_str::<HarnessConfig>(r#"{"seed": 1, "bogus": 2}"#);
        assert!(err.is_err());
    }
}

//! Seeded random instances of every model family.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::grid::GridModel;
use super::polygon::Polygon;
use super::{Covariance, LcModel2D};
use crate::error::{Error, Result};
use crate::pwpoly::PiecewisePolyDensity;

/// Side length (in nodes) of generated grid models.
pub const GRID_NODES: usize = 401;
/// Generated grids cover the sublevel set `{ψ ≤ GRID_LEVEL}`.
pub const GRID_LEVEL: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Polygon,
    Product,
    Grid,
    Gaussian,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Polygon => "polygon",
            Family::Product => "product",
            Family::Grid => "grid",
            Family::Gaussian => "gaussian",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "polygon" => Ok(Family::Polygon),
            "product" => Ok(Family::Product),
            "grid" => Ok(Family::Grid),
            "gaussian" => Ok(Family::Gaussian),
            other => Err(Error::Config(format!("unknown model family {other:?}"))),
        }
    }
}

/// `size` is the number of random points (polygon), pieces per half-line
/// (product) or piecewise-linear potential terms (grid); it is ignored for
/// Gaussians.
pub fn random_model(seed: u64, family: Family, size: usize) -> Result<LcModel2D> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_model_from_rng(&mut rng, family, size)
}

pub fn random_model_from_rng<R: Rng>(rng: &mut R, family: Family, size: usize) -> Result<LcModel2D> {
    match family {
        Family::Polygon => random_polygon(rng, size).map(LcModel2D::Polygon),
        Family::Product => {
            if size < 2 {
                return Err(Error::Domain(format!("product marginals need at least 2 pieces, got {size}")));
            }
            let f = random_even_log_concave(rng, size)?;
            let g = random_even_log_concave(rng, size)?;
            LcModel2D::product(f, g)
        }
        Family::Grid => random_grid(rng, size, GRID_NODES).map(LcModel2D::Grid),
        Family::Gaussian => {
            let (l1, l2) = (rng.gen_range(0.2..5.0), rng.gen_range(0.2..5.0));
            let phi: f64 = rng.gen_range(0.0..std::f64::consts::PI);
            let (c, s) = (phi.cos(), phi.sin());
            Covariance::new(l1 * c * c + l2 * s * s, (l1 - l2) * c * s, l1 * s * s + l2 * c * c).map(LcModel2D::Gaussian)
        }
    }
}

fn random_polygon<R: Rng>(rng: &mut R, size: usize) -> Result<Polygon> {
    if size < 3 {
        return Err(Error::Domain(format!("polygon generation needs at least 3 points, got {size}")));
    }
    let phi: f64 = rng.gen_range(0.0..std::f64::consts::PI);
    let stretch: f64 = rng.gen_range(0.2..1.0);
    let (c, s) = (phi.cos(), phi.sin());
    let points: Vec<[f64; 2]> = (0..size)
        .map(|_| {
            let (x, y): (f64, f64) = (rng.gen_range(-1.0..1.0), stretch * rng.gen_range(-1.0..1.0));
            [c * x - s * y, s * x + c * y]
        })
        .collect();
    Polygon::symmetric_hull(&points)?.with_unit_area()
}

/// Even density that is concave (hence log-concave) on its support, with
/// `pieces` linear pieces on each side of the origin and a possible jump at
/// the support ends.
pub fn random_even_log_concave<R: Rng>(rng: &mut R, pieces: usize) -> Result<PiecewisePolyDensity> {
    let pieces = pieces.max(1);
    let half: f64 = rng.gen_range(0.5..2.0);
    let mut widths: Vec<f64> = (0..pieces).map(|_| rng.gen_range(0.2..1.0)).collect();
    let total: f64 = widths.iter().sum();
    widths.iter_mut().for_each(|w| *w *= half / total);
    let mut drops: Vec<f64> = (0..pieces).map(|_| rng.gen_range(0.0..1.0)).collect();
    drops.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let end: f64 = if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.0..0.9) };
    let fall: f64 = drops.iter().zip(&widths).map(|(d, w)| d * w).sum();
    let scale = if fall > 0.0 { (1.0 - end) / fall } else { 0.0 };
    let mut xs = vec![0.0];
    let mut ys = vec![1.0];
    for (d, w) in drops.iter().zip(&widths) {
        xs.push(xs[xs.len() - 1] + w);
        ys.push((ys[ys.len() - 1] - d * scale * w).max(0.0));
    }
    let mut full_x: Vec<f64> = xs.iter().rev().map(|x| -x).collect();
    let mut full_y: Vec<f64> = ys.iter().rev().cloned().collect();
    full_x.extend_from_slice(&xs[1..]);
    full_y.extend_from_slice(&ys[1..]);
    PiecewisePolyDensity::piecewise_linear(&full_x, &full_y)?.normalize()
}

/// `ψ(z) = ½ zᵀAz + Σ c_k |⟨a_k, z⟩|` sampled on an `n × n` grid covering
/// `{ψ ≤ GRID_LEVEL}`.
pub fn random_grid<R: Rng>(rng: &mut R, terms: usize, n: usize) -> Result<GridModel> {
    let (l1, l2): (f64, f64) = (rng.gen_range(0.3..3.0), rng.gen_range(0.3..3.0));
    let phi: f64 = rng.gen_range(0.0..std::f64::consts::PI);
    let (c, s) = (phi.cos(), phi.sin());
    let a = [l1 * c * c + l2 * s * s, (l1 - l2) * c * s, l1 * s * s + l2 * c * c];
    let lines: Vec<(f64, [f64; 2])> = (0..terms)
        .map(|_| {
            let t: f64 = rng.gen_range(0.0..std::f64::consts::PI);
            (rng.gen_range(0.0..2.0), [t.cos(), t.sin()])
        })
        .collect();
    let psi = move |x: f64, y: f64| {
        0.5 * (a[0] * x * x + 2.0 * a[1] * x * y + a[2] * y * y)
            + lines.iter().map(|(ck, d)| ck * (d[0] * x + d[1] * y).abs()).sum::<f64>()
    };
    let (bx, by) = sublevel_box(&psi, GRID_LEVEL);
    let (hx, hy) = (1.02 * bx / ((n - 1) / 2) as f64, 1.02 * by / ((n - 1) / 2) as f64);
    GridModel::from_fn(n, n, hx, hy, psi)
}

/// Half-widths of the bounding box of `{ψ ≤ level}` for a convex `ψ` with
/// `ψ(0) = 0`, by bisection along rays.
fn sublevel_box(psi: &dyn Fn(f64, f64) -> f64, level: f64) -> (f64, f64) {
    let (mut bx, mut by) = (0.0f64, 0.0f64);
    let rays = 720;
    for k in 0..rays {
        let t = std::f64::consts::PI * k as f64 / rays as f64;
        let (dx, dy) = (t.cos(), t.sin());
        let mut hi = 1.0;
        while psi(hi * dx, hi * dy) < level {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if psi(mid * dx, mid * dy) < level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        bx = bx.max((hi * dx).abs());
        by = by.max((hi * dy).abs());
    }
    (bx, by)
}

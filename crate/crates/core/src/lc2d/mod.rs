//! Centrally symmetric log-concave densities on the plane.
//!
//! Four families share one interface: uniform densities on symmetric convex
//! polygons and products of even log-concave piecewise-linear marginals
//! (both with exact projections), grids of convex potential samples
//! (numeric projections with an error bound) and centred Gaussians
//! (closed forms everywhere).

pub mod generate;
pub mod grid;
pub mod polygon;

use serde::{Deserialize, Serialize};

use crate::entropy::{self, EntropyMethod, EntropyValue};
use crate::error::{Error, Result};
use crate::pwpoly::PiecewisePolyDensity;

pub use generate::{random_model, random_model_from_rng, Family};
pub use grid::{GridModel, GridSettings};
pub use polygon::{Point, Polygon};

/// Probe count used when certifying log-concavity of exact densities.
pub const LOG_CONCAVE_PROBES: usize = 64;

/// Accepted relative error of the grid derivative functional.
pub const FUNCTIONAL_REL_LIMIT: f64 = 1e-3;

/// Sample spacing, in grid cells, of the grid log-concavity certificate.
pub const GRID_STRIDE: f64 = 4.0;

/// Symmetric positive-definite 2×2 covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Covariance {
    xx: f64,
    xy: f64,
    yy: f64,
}

impl Covariance {
    pub fn new(xx: f64, xy: f64, yy: f64) -> Result<Self> {
        if !(xx > 0.0 && yy > 0.0 && xx.is_finite() && yy.is_finite() && xy.is_finite()) || xx * yy - xy * xy <= 0.0 {
            return Err(Error::InvalidModel(format!(
                "covariance [[{xx}, {xy}], [{xy}, {yy}]] is not positive definite"
            )));
        }
        Ok(Covariance { xx, xy, yy })
    }

    pub fn identity() -> Self {
        Covariance { xx: 1.0, xy: 0.0, yy: 1.0 }
    }

    pub fn entries(&self) -> (f64, f64, f64) {
        (self.xx, self.xy, self.yy)
    }

    fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    /// `vᵀΣv`.
    pub fn quadratic(&self, v: Point) -> f64 {
        self.xx * v[0] * v[0] + 2.0 * self.xy * v[0] * v[1] + self.yy * v[1] * v[1]
    }

    /// `vᵀΣ⁻¹v`.
    pub fn inverse_quadratic(&self, v: Point) -> f64 {
        (self.yy * v[0] * v[0] - 2.0 * self.xy * v[0] * v[1] + self.xx * v[1] * v[1]) / self.det()
    }
}

/// A symmetric log-concave planar density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelFile", into = "ModelFile")]
pub enum LcModel2D {
    Polygon(Polygon),
    Product { x: PiecewisePolyDensity, y: PiecewisePolyDensity },
    Grid(GridModel),
    Gaussian(Covariance),
}

/// On-disk form, tagged by `"type"`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelFile {
    Polygon { vertices: Vec<Point> },
    Product { f: PiecewisePolyDensity, g: PiecewisePolyDensity },
    Grid { nx: usize, ny: usize, hx: f64, hy: f64, psi: Vec<f64> },
    Gaussian { cov: [[f64; 2]; 2] },
}

impl TryFrom<ModelFile> for LcModel2D {
    type Error = Error;

    fn try_from(file: ModelFile) -> Result<Self> {
        match file {
            ModelFile::Polygon { vertices } => Ok(LcModel2D::Polygon(Polygon::new(vertices)?)),
            ModelFile::Product { f, g } => LcModel2D::product(f, g),
            ModelFile::Grid { nx, ny, hx, hy, psi } => Ok(LcModel2D::Grid(GridModel::new(nx, ny, hx, hy, psi)?)),
            ModelFile::Gaussian { cov } => {
                if cov[0][1] != cov[1][0] {
                    return Err(Error::InvalidModel("covariance must be symmetric".into()));
                }
                Ok(LcModel2D::Gaussian(Covariance::new(cov[0][0], cov[0][1], cov[1][1])?))
            }
        }
    }
}

impl From<LcModel2D> for ModelFile {
    fn from(m: LcModel2D) -> Self {
        match m {
            LcModel2D::Polygon(p) => ModelFile::Polygon { vertices: p.vertices().to_vec() },
            LcModel2D::Product { x, y } => ModelFile::Product { f: x, g: y },
            LcModel2D::Grid(g) => {
                let (nx, ny) = g.dims();
                let (hx, hy) = g.spacing();
                ModelFile::Grid { nx, ny, hx, hy, psi: g.psi().to_vec() }
            }
            LcModel2D::Gaussian(c) => ModelFile::Gaussian { cov: [[c.xx, c.xy], [c.xy, c.yy]] },
        }
    }
}

/// Numerical settings for projections and their entropies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Precision {
    pub quad_tol: f64,
    pub grid: GridSettings,
}

impl Precision {
    pub fn standard() -> Self {
        Precision { quad_tol: entropy::QUAD_TOL, grid: GridSettings::default() }
    }

    /// Tighter settings used to recompute certificates.
    pub fn doubled() -> Self {
        Precision { quad_tol: 1e-13, grid: GridSettings { error_target: 1e-7, initial_intervals: 128 } }
    }
}

impl Default for Precision {
    fn default() -> Self {
        Self::standard()
    }
}

/// A one-dimensional projection density.
#[derive(Debug, Clone, PartialEq)]
pub enum Projection {
    Piecewise {
        density: PiecewisePolyDensity,
        /// Sup-norm interpolation error relative to the maximum (0 if exact).
        error_bound: f64,
        /// Bound on the entropy error caused by interpolation.
        entropy_error: f64,
        /// Cell width of the source grid along the projection (0 if exact);
        /// log-concavity is then certified on samples a few cells apart.
        grid_step: f64,
    },
    Gaussian { variance: f64 },
}

impl Projection {
    fn exact(density: PiecewisePolyDensity) -> Self {
        Projection::Piecewise { density, error_bound: 0.0, entropy_error: 0.0, grid_step: 0.0 }
    }

    pub fn entropy(&self) -> Result<EntropyValue> {
        self.entropy_with(&Precision::standard())
    }

    pub fn entropy_with(&self, precision: &Precision) -> Result<EntropyValue> {
        match self {
            Projection::Piecewise { density, entropy_error, .. } => {
                let mut s = entropy::entropy_with_tol(density, precision.quad_tol)?;
                s.abs_error_bound += entropy_error;
                Ok(s)
            }
            Projection::Gaussian { variance } => Ok(EntropyValue {
                value: entropy::gaussian_entropy(*variance),
                method: EntropyMethod::ClosedForm,
                abs_error_bound: 0.0,
            }),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        match self {
            Projection::Piecewise { density, .. } => density.sup_norm(),
            Projection::Gaussian { variance } => 1.0 / (2.0 * std::f64::consts::PI * variance).sqrt(),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Projection::Piecewise { density, .. } => density.eval(x),
            Projection::Gaussian { variance } => {
                (-0.5 * x * x / variance).exp() / (2.0 * std::f64::consts::PI * variance).sqrt()
            }
        }
    }

    pub fn mass(&self) -> f64 {
        match self {
            Projection::Piecewise { density, .. } => density.total_mass(),
            Projection::Gaussian { .. } => 1.0,
        }
    }

    pub fn piecewise(&self) -> Option<&PiecewisePolyDensity> {
        match self {
            Projection::Piecewise { density, .. } => Some(density),
            Projection::Gaussian { .. } => None,
        }
    }

    /// Log-concavity certificate: the probe check for exact densities, and
    /// for grid output a check of `ln f` second differences on samples
    /// `GRID_STRIDE` cells apart wherever `f ≥ 1e-6·max f`.
    pub fn is_log_concave(&self) -> bool {
        match self {
            Projection::Gaussian { .. } => true,
            Projection::Piecewise { density, grid_step, .. } if *grid_step == 0.0 => {
                density.is_log_concave(LOG_CONCAVE_PROBES)
            }
            Projection::Piecewise { density, error_bound, grid_step, .. } => {
                let peak = density.sup_norm();
                let abs_err = (error_bound * peak).max(1e-14 * peak);
                let (lo, hi) = density.support();
                let h = GRID_STRIDE * grid_step;
                let n = ((hi - lo) / h).floor() as usize;
                let vals: Vec<f64> = (0..=n).map(|k| density.eval(lo + k as f64 * h)).collect();
                vals.windows(3).all(|w| {
                    if w.iter().any(|&v| v < 1e-6 * peak) {
                        return true;
                    }
                    let second = w[0].ln() + w[2].ln() - 2.0 * w[1].ln();
                    second <= 1e-9 + 4.0 * abs_err / w[0].min(w[1]).min(w[2])
                })
            }
        }
    }
}

/// Value of the derivative functional `∬ (-f'/f)(x) y w` with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeFunctional {
    pub value: f64,
    pub error_estimate: f64,
    pub mass: f64,
}

fn nonzero(v: Point) -> Result<()> {
    if v[0] == 0.0 && v[1] == 0.0 {
        Err(Error::Domain("direction vector must be nonzero".into()))
    } else if !(v[0].is_finite() && v[1].is_finite()) {
        Err(Error::Domain("direction vector must be finite".into()))
    } else {
        Ok(())
    }
}

impl LcModel2D {
    /// Product of two even, normalized, log-concave marginals.
    pub fn product(f: PiecewisePolyDensity, g: PiecewisePolyDensity) -> Result<Self> {
        for (name, d) in [("f", &f), ("g", &g)] {
            if !d.is_normalized() {
                return Err(Error::InvalidModel(format!("marginal {name} is not normalized")));
            }
            if !d.is_even() {
                return Err(Error::InvalidModel(format!("marginal {name} is not even")));
            }
            if !d.is_log_concave(LOG_CONCAVE_PROBES) {
                return Err(Error::InvalidModel(format!("marginal {name} is not log-concave")));
            }
        }
        Ok(LcModel2D::Product { x: f, y: g })
    }

    pub fn family(&self) -> Family {
        match self {
            LcModel2D::Polygon(_) => Family::Polygon,
            LcModel2D::Product { .. } => Family::Product,
            LcModel2D::Grid(_) => Family::Grid,
            LcModel2D::Gaussian(_) => Family::Gaussian,
        }
    }

    /// Short human-readable description.
    pub fn descriptor(&self) -> String {
        match self {
            LcModel2D::Polygon(p) => format!("polygon({} vertices)", p.vertices().len()),
            LcModel2D::Product { x, y } => format!("product({}+{} pieces)", x.num_pieces(), y.num_pieces()),
            LcModel2D::Grid(g) => {
                let (nx, ny) = g.dims();
                format!("grid({nx}x{ny})")
            }
            LcModel2D::Gaussian(c) => format!("gaussian({}, {}, {})", c.xx, c.xy, c.yy),
        }
    }

    /// Whether projections carry interpolation error.
    pub fn is_exact(&self) -> bool {
        !matches!(self, LcModel2D::Grid(_))
    }

    pub fn total_mass(&self) -> f64 {
        match self {
            LcModel2D::Grid(g) => g.total_mass(),
            _ => 1.0,
        }
    }

    pub fn projection_density(&self, v: Point) -> Result<Projection> {
        self.projection_with(v, &Precision::standard())
    }

    /// Density of `v1·X + v2·Y`.
    pub fn projection_with(&self, v: Point, precision: &Precision) -> Result<Projection> {
        nonzero(v)?;
        match self {
            LcModel2D::Polygon(p) => Ok(Projection::exact(p.projection(v)?)),
            LcModel2D::Product { x, y } => {
                let d = if v[1] == 0.0 {
                    x.scale_pushforward(v[0])?
                } else if v[0] == 0.0 {
                    y.scale_pushforward(v[1])?
                } else {
                    x.scale_pushforward(v[0])?.convolve(&y.scale_pushforward(v[1])?)?.normalize()?
                };
                Ok(Projection::exact(d))
            }
            LcModel2D::Grid(g) => {
                let p = g.projection(v, &precision.grid)?;
                Ok(Projection::Piecewise {
                    density: p.density,
                    error_bound: p.error_bound,
                    entropy_error: p.entropy_error,
                    grid_step: {
                        let (hx, hy) = g.spacing();
                        hx * v[0].abs() + hy * v[1].abs()
                    },
                })
            }
            LcModel2D::Gaussian(c) => Ok(Projection::Gaussian { variance: c.quadratic(v) }),
        }
    }

    /// Densities of `X`, `Y` and `X + Y`.
    pub fn marginals_and_sum(&self) -> Result<(Projection, Projection, Projection)> {
        Ok((
            self.projection_density([1.0, 0.0])?,
            self.projection_density([0.0, 1.0])?,
            self.projection_density([1.0, 1.0])?,
        ))
    }

    /// `∫ w(t v) dt` over the whole line.
    pub fn line_integral(&self, v: Point) -> Result<f64> {
        nonzero(v)?;
        let value = match self {
            LcModel2D::Polygon(p) => 2.0 / (p.area() * p.gauge(v)),
            LcModel2D::Product { x, y } => {
                if v[0] == 0.0 {
                    x.eval(0.0) / v[1].abs()
                } else if v[1] == 0.0 {
                    y.eval(0.0) / v[0].abs()
                } else {
                    // f(v1 t) = (pushforward of f by 1/v1)(t) / |v1|
                    let fx = x.scale_pushforward(1.0 / v[0])?;
                    let gy = y.scale_pushforward(1.0 / v[1])?;
                    fx.integral_of_product(&gy) / (v[0] * v[1]).abs()
                }
            }
            LcModel2D::Grid(g) => g.line_integral_along(v),
            LcModel2D::Gaussian(c) => {
                let q = c.inverse_quadratic(v);
                (2.0 * std::f64::consts::PI / q).sqrt() / (2.0 * std::f64::consts::PI * c.det().sqrt())
            }
        };
        if !(value > 0.0) {
            return Err(Error::Domain(format!("density vanishes along direction ({}, {})", v[0], v[1])));
        }
        Ok(value)
    }

    /// `‖v‖_w = (∫ w(t v) dt)^{-1}`, zero at the origin.
    pub fn busemann_norm(&self, v: Point) -> Result<f64> {
        if v[0] == 0.0 && v[1] == 0.0 {
            return Ok(0.0);
        }
        Ok(1.0 / self.line_integral(v)?)
    }

    /// `∫ w(0,y) dy / ∫ w(x,0) dx`.
    pub fn gamma(&self) -> Result<f64> {
        Ok(self.line_integral([0.0, 1.0])? / self.line_integral([1.0, 0.0])?)
    }

    /// `∬ (-f'(x)/f(x)) y w(x,y) dx dy` with `f` the x-marginal.
    pub fn derivative_functional(&self) -> Result<DerivativeFunctional> {
        let mass = self.total_mass();
        match self {
            LcModel2D::Polygon(p) => Ok(DerivativeFunctional { value: p.derivative_functional(), error_estimate: 0.0, mass }),
            LcModel2D::Product { x, y } => {
                // separable: E[-f'/f(X)] · E[Y], with E[Y] = 0 for even g
                let k = x.num_pieces() - 1;
                let (a, b) = x.piece_interval(k);
                let right_end = crate::poly::eval(&x.pieces()[k], b - a);
                let score = x.eval(x.support().0) - right_end;
                Ok(DerivativeFunctional { value: score * y.mean()?, error_estimate: 0.0, mass })
            }
            LcModel2D::Grid(g) => {
                let (value, error_estimate) = g.derivative_functional();
                let scale = value.abs().max(self.gamma()? * mass);
                if error_estimate > FUNCTIONAL_REL_LIMIT * scale {
                    return Err(Error::GridTooCoarse { estimate: error_estimate / scale, limit: FUNCTIONAL_REL_LIMIT });
                }
                Ok(DerivativeFunctional { value, error_estimate, mass })
            }
            LcModel2D::Gaussian(c) => Ok(DerivativeFunctional { value: c.xy / c.xx, error_estimate: 0.0, mass }),
        }
    }

    /// Law of `(sx·X, sy·Y)`.
    pub fn scale_axes(&self, sx: f64, sy: f64) -> Result<Self> {
        if sx == 0.0 || sy == 0.0 {
            return Err(Error::ZeroScale);
        }
        Ok(match self {
            LcModel2D::Polygon(p) => LcModel2D::Polygon(p.scale_axes(sx, sy)?),
            LcModel2D::Product { x, y } => LcModel2D::Product { x: x.scale_pushforward(sx)?, y: y.scale_pushforward(sy)? },
            LcModel2D::Grid(g) => LcModel2D::Grid(g.scale_axes(sx, sy)?),
            LcModel2D::Gaussian(c) => LcModel2D::Gaussian(Covariance::new(c.xx * sx * sx, c.xy * sx * sy, c.yy * sy * sy)?),
        })
    }

    /// Law of `(Y, X)`.
    pub fn swap(&self) -> Result<Self> {
        Ok(match self {
            LcModel2D::Polygon(p) => LcModel2D::Polygon(p.swap()?),
            LcModel2D::Product { x, y } => LcModel2D::Product { x: y.clone(), y: x.clone() },
            LcModel2D::Grid(g) => LcModel2D::Grid(g.swap()?),
            LcModel2D::Gaussian(c) => LcModel2D::Gaussian(Covariance::new(c.yy, c.xy, c.xx)?),
        })
    }

    /// Whether the law is invariant under the coordinate swap.
    pub fn is_exchangeable(&self, tol: f64) -> bool {
        match self {
            LcModel2D::Polygon(p) => p.is_swap_invariant(tol),
            LcModel2D::Product { x, y } => {
                x.support() == y.support()
                    && x.breakpoints().iter().chain(y.breakpoints()).all(|&t| (x.eval(t) - y.eval(t)).abs() <= tol)
            }
            LcModel2D::Grid(g) => g.is_swap_invariant(tol),
            LcModel2D::Gaussian(c) => (c.xx - c.yy).abs() <= tol * c.xx,
        }
    }

    /// `(X, cY)` with `c = e^{S(X) - S(Y)}`, so both marginal entropies agree.
    pub fn equalize_entropies(&self) -> Result<(Self, f64)> {
        let sx = self.projection_density([1.0, 0.0])?.entropy()?.value;
        let sy = self.projection_density([0.0, 1.0])?.entropy()?.value;
        let c = (sx - sy).exp();
        if c == 1.0 {
            return Ok((self.clone(), 1.0));
        }
        Ok((self.scale_axes(1.0, c)?, c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn unit_square() -> LcModel2D {
        LcModel2D::Polygon(Polygon::rectangle(1.0, 1.0).unwrap())
    }

    fn uniform_product(a: f64, b: f64) -> LcModel2D {
        LcModel2D::product(
            PiecewisePolyDensity::uniform(-a / 2.0, a / 2.0).unwrap(),
            PiecewisePolyDensity::uniform(-b / 2.0, b / 2.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn square_and_uniform_product_agree() {
        for m in [unit_square(), uniform_product(1.0, 1.0)] {
            let (f, g, h) = m.marginals_and_sum().unwrap();
            close(f.entropy().unwrap().value, 0.0, 1e-15);
            close(g.entropy().unwrap().value, 0.0, 1e-15);
            close(h.entropy().unwrap().value, 0.5, 1e-14);
            close(m.busemann_norm([1.0, 0.0]).unwrap(), 1.0, 1e-15);
            close(m.gamma().unwrap(), 1.0, 1e-15);
            close(m.busemann_norm([1.0, 1.0]).unwrap(), 1.0, 1e-14);
        }
    }

    #[test]
    fn gaussian_closed_forms() {
        let id = LcModel2D::Gaussian(Covariance::identity());
        let p = id.projection_density([1.0, 1.0]).unwrap();
        close(p.entropy().unwrap().value, 0.5 * (4.0 * PI * E).ln(), 1e-15);
        close(id.busemann_norm([1.0, 0.0]).unwrap(), (2.0 * PI).sqrt(), 1e-14);
        close(id.gamma().unwrap(), 1.0, 1e-15);
        let d = LcModel2D::Gaussian(Covariance::new(4.0, 0.0, 1.0).unwrap());
        close(d.gamma().unwrap(), 0.5, 1e-15);
        let rho = LcModel2D::Gaussian(Covariance::new(1.0, 0.5, 1.0).unwrap());
        close(rho.derivative_functional().unwrap().value, 0.5, 0.0);
        let (_, c) = LcModel2D::Gaussian(Covariance::new(1.0, 0.0, 4.0).unwrap()).equalize_entropies().unwrap();
        close(c, 0.5, 1e-15);
    }

    #[test]
    fn equalize_uniform_product() {
        let (m, c) = uniform_product(1.0, 2.0).equalize_entropies().unwrap();
        close(c, 0.5, 1e-15);
        let (f, g, _) = m.marginals_and_sum().unwrap();
        close(f.entropy().unwrap().value, 0.0, 1e-15);
        close(g.entropy().unwrap().value, 0.0, 1e-15);
        let (same, c1) = unit_square().equalize_entropies().unwrap();
        assert_eq!(c1, 1.0);
        assert_eq!(same, unit_square());
    }

    #[test]
    fn zero_direction_is_rejected() {
        assert!(unit_square().projection_density([0.0, 0.0]).is_err());
        assert_eq!(unit_square().busemann_norm([0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn model_json_round_trip() {
        let models = [
            unit_square(),
            uniform_product(1.0, 2.0),
            LcModel2D::Gaussian(Covariance::new(2.0, 0.3, 1.0).unwrap()),
            LcModel2D::Grid(GridModel::from_fn(5, 7, 0.5, 0.25, |x, y| x * x + y * y).unwrap()),
        ];
        for m in models {
            let s = crate::jsonfmt::to_string(&m).unwrap();
            let back: LcModel2D = serde_json::from_str(&s).unwrap();
            assert_eq!(back, m);
        }
        let bad = r#"{"type":"gaussian","cov":[[1,0],[0,1]],"extra":1}"#;
        assert!(serde_json::from_str::<LcModel2D>(bad).is_err());
        let square = r#"{"type":"polygon","vertices":[[-0.5,-0.5],[0.5,-0.5],[0.5,0.5],[-0.5,0.5]]}"#;
        assert_eq!(serde_json::from_str::<LcModel2D>(square).unwrap(), unit_square());
    }

    #[test]
    fn generated_models_are_deterministic() {
        let a = random_model(42, Family::Polygon, 8).unwrap();
        let b = random_model(42, Family::Polygon, 8).unwrap();
        assert_eq!(a, b);
        match a {
            LcModel2D::Polygon(p) => close(p.area(), 1.0, 1e-12),
            _ => unreachable!(),
        }
    }
}

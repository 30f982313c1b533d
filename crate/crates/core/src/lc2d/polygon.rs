//! Uniform distributions on centrally symmetric convex polygons.
//!
//! Projections are exact: the density of `⟨v, Z⟩` at `s` is the chord length
//! of the polygon along `⟨v, z⟩ = s` divided by `area·|v|`, which is linear
//! between consecutive projected vertices.

use crate::error::{Error, Result};
use crate::pwpoly::{PiecewisePolyDensity, DEDUP_REL};

pub type Point = [f64; 2];

const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point>,
    area: f64,
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

impl Polygon {
    /// Counterclockwise, strictly convex, centrally symmetric
    /// (`v[i] = -v[i + n/2]`) vertex list.
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        let n = vertices.len();
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::InvalidModel(format!(
                "a centrally symmetric polygon needs an even vertex count >= 4, got {n}"
            )));
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidModel("non-finite vertex".into()));
        }
        for i in 0..n {
            let c = cross(vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]);
            if !(c > 0.0) {
                return Err(Error::InvalidModel(format!(
                    "polygon is not strictly convex and counterclockwise at vertex {}",
                    (i + 1) % n
                )));
            }
        }
        let scale = vertices.iter().map(|v| v[0].abs().max(v[1].abs())).fold(0.0, f64::max);
        let k = n / 2;
        for i in 0..k {
            let (a, b) = (vertices[i], vertices[i + k]);
            if (a[0] + b[0]).abs() > SYMMETRY_TOL * scale || (a[1] + b[1]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::InvalidModel(format!("vertex {i} has no antipodal partner")));
            }
        }
        let area = shoelace(&vertices);
        if !(area > 0.0) {
            return Err(Error::InvalidModel("polygon has no area".into()));
        }
        Ok(Polygon { vertices, area })
    }

    /// Axis-aligned rectangle `[-w/2, w/2] × [-h/2, h/2]`.
    pub fn rectangle(width: f64, height: f64) -> Result<Self> {
        let (x, y) = (0.5 * width, 0.5 * height);
        Self::new(vec![[-x, -y], [x, -y], [x, y], [-x, y]])
    }

    /// Convex hull of `points ∪ -points`.
    pub fn symmetric_hull(points: &[Point]) -> Result<Self> {
        let mut all: Vec<Point> = points.iter().flat_map(|&p| [p, [-p[0], -p[1]]]).collect();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        all.dedup();
        if all.len() < 3 {
            return Err(Error::InvalidModel("too few distinct points for a hull".into()));
        }
        let mut hull: Vec<Point> = Vec::with_capacity(all.len() + 1);
        for &p in all.iter() {
            while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        let lower = hull.len() + 1;
        for &p in all.iter().rev().skip(1) {
            while hull.len() >= lower && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
        Self::new(hull)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    /// Same shape rescaled to unit area.
    pub fn with_unit_area(&self) -> Result<Self> {
        let s = 1.0 / self.area.sqrt();
        self.scale_axes(s, s)
    }

    /// Image under `(x, y) ↦ (sx·x, sy·y)`.
    pub fn scale_axes(&self, sx: f64, sy: f64) -> Result<Self> {
        if sx == 0.0 || sy == 0.0 {
            return Err(Error::ZeroScale);
        }
        let mut v: Vec<Point> = self.vertices.iter().map(|p| [sx * p[0], sy * p[1]]).collect();
        if sx * sy < 0.0 {
            v.reverse();
        }
        Self::new(v)
    }

    /// Image under `(x, y) ↦ (y, x)`.
    pub fn swap(&self) -> Result<Self> {
        let mut v: Vec<Point> = self.vertices.iter().map(|p| [p[1], p[0]]).collect();
        v.reverse();
        Self::new(v)
    }

    /// `½(P + swap P)`, which is invariant under the coordinate swap.
    pub fn swap_symmetrized(&self) -> Result<Self> {
        let sw = self.swap()?;
        let sums: Vec<Point> = self
            .vertices
            .iter()
            .flat_map(|p| sw.vertices.iter().map(move |q| [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]))
            .collect();
        Self::symmetric_hull(&sums)
    }

    /// Whether the vertex set is invariant under the coordinate swap.
    pub fn is_swap_invariant(&self, tol: f64) -> bool {
        self.vertices.iter().all(|p| {
            self.vertices
                .iter()
                .any(|q| (q[0] - p[1]).abs() <= tol && (q[1] - p[0]).abs() <= tol)
        })
    }

    /// `(min, max)` of the chord `{z ∈ P : ⟨v, z⟩ = s}` measured along
    /// `(-v2, v1)/|v|`; `None` if the line misses the polygon.
    pub fn chord(&self, v: Point, s: f64) -> Option<(f64, f64)> {
        let norm = dot(v, v).sqrt();
        let u = [-v[1] / norm, v[0] / norm];
        let n = self.vertices.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let p = self.vertices[i];
            let q = self.vertices[(i + 1) % n];
            let da = dot(v, p) - s;
            let db = dot(v, q) - s;
            if da == 0.0 {
                let t = dot(u, p);
                lo = lo.min(t);
                hi = hi.max(t);
            }
            if da * db < 0.0 {
                let r = da / (da - db);
                let z = [p[0] + r * (q[0] - p[0]), p[1] + r * (q[1] - p[1])];
                let t = dot(u, z);
                lo = lo.min(t);
                hi = hi.max(t);
            }
        }
        (lo <= hi).then_some((lo, hi))
    }

    /// Exact density of `⟨v, Z⟩`.
    pub fn projection(&self, v: Point) -> Result<PiecewisePolyDensity> {
        let norm = dot(v, v).sqrt();
        if !(norm > 0.0) {
            return Err(Error::Domain("projection direction must be nonzero".into()));
        }
        let mut s: Vec<f64> = self.vertices.iter().map(|&p| dot(v, p)).collect();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let tol = DEDUP_REL * (s[s.len() - 1] - s[0]);
        let mut knots: Vec<f64> = Vec::with_capacity(s.len());
        for x in s {
            match knots.last() {
                Some(&last) if x - last <= tol => {}
                _ => knots.push(x),
            }
        }
        let scale = 1.0 / (self.area * norm);
        let values: Vec<f64> = knots
            .iter()
            .map(|&k| self.chord(v, k).map_or(0.0, |(a, b)| (b - a) * scale))
            .collect();
        PiecewisePolyDensity::piecewise_linear(&knots, &values)?.normalize()
    }

    /// Minkowski gauge `min{t > 0 : z ∈ tP}`.
    pub fn gauge(&self, z: Point) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let p = self.vertices[i];
                let q = self.vertices[(i + 1) % n];
                let normal = [q[1] - p[1], p[0] - q[0]];
                dot(normal, z) / dot(normal, p)
            })
            .fold(0.0, f64::max)
    }

    /// `∬ (-f'(x)/f(x)) y dx dy / area` with `f` the x-marginal, computed
    /// piece by piece from the chord endpoints.
    pub fn derivative_functional(&self) -> f64 {
        let v = [1.0, 0.0];
        let mut xs: Vec<f64> = self.vertices.iter().map(|p| p[0]).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        xs.dedup();
        // chords along e1 are parametrized by u = (0, 1), i.e. by y
        let ends: Vec<(f64, f64)> = xs.iter().map(|&x| self.chord(v, x).unwrap_or((0.0, 0.0))).collect();
        let mut acc = 0.0;
        for k in 0..xs.len() - 1 {
            let dx = xs[k + 1] - xs[k];
            let (bl, tl) = ends[k];
            let (br, tr) = ends[k + 1];
            let slope = ((tr - br) - (tl - bl)) / (self.area * dx);
            let mid_avg = 0.25 * (bl + tl + br + tr);
            acc -= slope * mid_avg * dx;
        }
        acc
    }
}

fn shoelace(v: &[Point]) -> f64 {
    let n = v.len();
    0.5 * (0..n)
        .map(|i| {
            let (a, b) = (v[i], v[(i + 1) % n]);
            a[0] * b[1] - a[1] * b[0]
        })
        .sum::<f64>()
}

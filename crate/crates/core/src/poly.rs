//! Dense univariate polynomial helpers on ascending coefficient slices.
//!
//! Everything here works on `&[f64]` where `c[k]` multiplies `t^k`. The
//! piecewise densities store one such slice per piece in the local
//! coordinate `t = x - left`.

/// Horner evaluation.
#[inline]
pub fn eval(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * t + ck)
}

pub fn derivative(c: &[f64]) -> Vec<f64> {
    if c.len() <= 1 {
        return vec![0.0];
    }
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(k, &ck)| ck * k as f64)
        .collect()
}

/// `∫_0^t p(s) ds`.
pub fn integral_from_zero(c: &[f64], t: f64) -> f64 {
    let mut acc = 0.0;
    for (k, &ck) in c.iter().enumerate().rev() {
        acc = acc * t + ck / (k + 1) as f64;
    }
    acc * t
}

/// `∫_0^t s p(s) ds`.
pub fn first_moment_from_zero(c: &[f64], t: f64) -> f64 {
    let mut acc = 0.0;
    for (k, &ck) in c.iter().enumerate().rev() {
        acc = acc * t + ck / (k + 2) as f64;
    }
    acc * t * t
}

/// Coefficients of `p(t + d)`.
pub fn taylor_shift(c: &[f64], d: f64) -> Vec<f64> {
    let mut out = c.to_vec();
    if d == 0.0 {
        return out;
    }
    let n = out.len();
    for i in 0..n {
        for j in (i..n - 1).rev() {
            out[j] += d * out[j + 1];
        }
    }
    out
}

/// Coefficients of `p(a0 + a1 s)` as a polynomial in `s`.
pub fn compose_affine(c: &[f64], a0: f64, a1: f64) -> Vec<f64> {
    let mut out = taylor_shift(c, a0);
    let mut scale = 1.0;
    for ck in out.iter_mut() {
        *ck *= scale;
        scale *= a1;
    }
    out
}

pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Adds `src` into `dst`, growing `dst` if needed.
pub fn add_into(dst: &mut Vec<f64>, src: &[f64]) {
    if dst.len() < src.len() {
        dst.resize(src.len(), 0.0);
    }
    for (d, &s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

pub fn scale(c: &[f64], factor: f64) -> Vec<f64> {
    c.iter().map(|&ck| ck * factor).collect()
}

/// Effective degree on `[0, width]`: trailing terms whose magnitude over the
/// interval is below `rel * (sum of term magnitudes)` are ignored.
pub fn effective_degree(c: &[f64], width: f64, rel: f64) -> usize {
    let mags: Vec<f64> = c
        .iter()
        .enumerate()
        .map(|(k, &ck)| ck.abs() * width.abs().powi(k as i32))
        .collect();
    let total: f64 = mags.iter().sum();
    if total == 0.0 {
        return 0;
    }
    let mut deg = c.len().saturating_sub(1);
    while deg > 0 && mags[deg] <= rel * total {
        deg -= 1;
    }
    deg
}

const ROOT_TRIM: f64 = 1e-14;
const BISECT_TOL: f64 = 1e-13;

/// Real roots of `p` in `[lo, hi]`, sorted ascending.
///
/// Degrees up to two are solved in closed form; higher degrees are isolated
/// between consecutive critical points (found recursively) and refined by
/// bisection to `1e-13`. Only sign changes and exact zeros are reported, so
/// even-multiplicity tangencies that never reach zero are skipped.
pub fn real_roots(c: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    if hi < lo {
        return Vec::new();
    }
    let width = (hi - lo).abs().max(hi.abs()).max(lo.abs());
    let deg = effective_degree(c, if width > 0.0 { width } else { 1.0 }, ROOT_TRIM);
    let c = &c[..=deg.min(c.len().saturating_sub(1))];
    let mut roots = match deg {
        0 => Vec::new(),
        1 => vec![-c[0] / c[1]],
        2 => quadratic_roots(c[0], c[1], c[2]),
        _ => {
            let crit = real_roots(&derivative(c), lo, hi);
            let mut knots = Vec::with_capacity(crit.len() + 2);
            knots.push(lo);
            knots.extend(crit.into_iter().filter(|&x| x > lo && x < hi));
            knots.push(hi);
            let mut found = Vec::new();
            for w in knots.windows(2) {
                let (a, b) = (w[0], w[1]);
                let (fa, fb) = (eval(c, a), eval(c, b));
                if fa == 0.0 {
                    found.push(a);
                }
                if fa * fb < 0.0 {
                    found.push(bisect(c, a, b, fa));
                }
            }
            if eval(c, hi) == 0.0 {
                found.push(hi);
            }
            found
        }
    };
    roots.retain(|&x| x >= lo && x <= hi && x.is_finite());
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots.dedup_by(|a, b| (*a - *b).abs() <= BISECT_TOL);
    roots
}

fn quadratic_roots(c0: f64, c1: f64, c2: f64) -> Vec<f64> {
    let disc = c1 * c1 - 4.0 * c2 * c0;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    let q = -0.5 * (c1 + c1.signum() * sq);
    if q == 0.0 {
        return vec![0.0];
    }
    vec![q / c2, c0 / q]
}

fn bisect(c: &[f64], mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    while b - a > BISECT_TOL {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = eval(c, m);
        if fm == 0.0 {
            return m;
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    0.5 * (a + b)
}

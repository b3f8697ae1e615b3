//! Real roots of cubic polynomials.
//!
//! Roots come from the depressed cubic (trigonometric form when all three are
//! real, Cardano otherwise) and are then polished by Newton's method on the
//! original coefficients.

use std::f64::consts::PI;

/// Evaluates `c[0] x³ + c[1] x² + c[2] x + c[3]` and its derivative.
fn eval(c: [f64; 4], x: f64) -> (f64, f64) {
    let v = ((c[0] * x + c[1]) * x + c[2]) * x + c[3];
    let dv = (3.0 * c[0] * x + 2.0 * c[1]) * x + c[2];
    (v, dv)
}

/// `|p(x)|` divided by the sum of the magnitudes of its terms.
pub fn relative_residual(c: [f64; 4], x: f64) -> f64 {
    let (v, _) = eval(c, x);
    let ax = x.abs();
    let scale = c[0].abs() * ax.powi(3) + c[1].abs() * ax * ax + c[2].abs() * ax + c[3].abs();
    if scale == 0.0 {
        0.0
    } else {
        v.abs() / scale
    }
}

/// Newton iterations that only ever accept a step reducing `|p|`.
pub fn polish<F>(f: F, mut x: f64, iters: usize) -> f64
where
    F: Fn(f64) -> (f64, f64),
{
    let (mut v, mut dv) = f(x);
    for _ in 0..iters {
        if v == 0.0 || dv == 0.0 {
            break;
        }
        let next = x - v / dv;
        let (nv, ndv) = f(next);
        if nv.abs() >= v.abs() {
            break;
        }
        x = next;
        v = nv;
        dv = ndv;
    }
    x
}

/// Distinct real roots of `c[0] x³ + c[1] x² + c[2] x + c[3]`, ascending.
///
/// A vanishing leading coefficient falls back to the quadratic or linear case.
/// Roots closer than `1e-9 (1 + |x|)` are merged.
pub fn real_cubic_roots(c: [f64; 4]) -> Vec<f64> {
    let [a, b, cc, d] = c;
    let mut roots = if a == 0.0 { real_quadratic_roots(b, cc, d) } else { depressed_roots(b / a, cc / a, d / a) };
    for r in roots.iter_mut() {
        *r = polish(|x| eval(c, x), *r, 16);
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|x, y| (*x - *y).abs() <= 1e-9 * (1.0 + y.abs()));
    roots
}

fn depressed_roots(b: f64, c: f64, d: f64) -> Vec<f64> {
    // x = t − b/3 turns x³ + b x² + c x + d into t³ + p t + q.
    let shift = b / 3.0;
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);

    if p == 0.0 && q == 0.0 {
        return vec![-shift];
    }
    if disc > 0.0 {
        let u = (-q / 2.0 - q.signum() * disc.sqrt()).cbrt();
        let t = if u == 0.0 { 0.0 } else { u - p / (3.0 * u) };
        vec![t - shift]
    } else {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        (0..3).map(|k| m * (phi - 2.0 * PI * k as f64 / 3.0).cos() - shift).collect()
    }
}

fn real_quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        return if b == 0.0 { Vec::new() } else { vec![-c / b] };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    if q == 0.0 {
        return vec![0.0];
    }
    vec![q / a, c / q]
}

//! Small numerical kernels shared by the models: FFT, Gauss-Legendre
//! quadrature, interpolation and least-squares line fits.

mod fft;
mod quad;

pub use fft::{Complex, Fft, ToeplitzConv};
pub use quad::GaussLegendre;

use alloc::vec::Vec;

pub(crate) use libm::{atan, ceil, cos, erf, fabs, floor, log, pow, round, sin, sqrt, tgamma};

pub const PI: f64 = core::f64::consts::PI;

/// Ordinary least-squares line `y = a + b x`; returns `(a, b, r2)`.
pub fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len().min(y.len()) as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
        syy += (yi - my) * (yi - my);
    }
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let r2 = if syy > 0.0 && sxx > 0.0 {
        sxy * sxy / (sxx * syy)
    } else {
        1.0
    };
    (a, b, r2)
}

/// Cubic (Catmull-Rom) interpolation of uniformly sampled data.
///
/// `pos` is the fractional node index; values outside `[0, n-1]` are clamped
/// and the caller is expected to handle extrapolation.
pub fn cubic_at(values: &[f64], pos: f64) -> f64 {
    let n = values.len();
    debug_assert!(n >= 4);
    let pos = pos.clamp(0.0, (n - 1) as f64);
    let mut i = floor(pos) as usize;
    if i >= n - 1 {
        i = n - 2;
    }
    let t = pos - i as f64;
    let p0 = values[if i == 0 { 0 } else { i - 1 }];
    let p1 = values[i];
    let p2 = values[i + 1];
    let p3 = values[(i + 2).min(n - 1)];
    // Mirror the end slopes at the boundary so linear data stays linear.
    let p0 = if i == 0 { 2.0 * p1 - p2 } else { p0 };
    let p3 = if i + 2 > n - 1 { 2.0 * p2 - p1 } else { p3 };
    let t2 = t * t;
    let t3 = t2 * t;
    0.5 * ((2.0 * p1)
        + (-p0 + p2) * t
        + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2
        + (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * t3)
}

/// First crossing of `level` by piecewise-linear interpolation of `(x, v)`,
/// scanning left to right. `None` if the level is never reached.
pub fn first_crossing(x: &[f64], v: &[f64], level: f64) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    if v[0] == level {
        return Some(x[0]);
    }
    for i in 0..v.len() - 1 {
        let (a, b) = (v[i] - level, v[i + 1] - level);
        if b == 0.0 {
            return Some(x[i + 1]);
        }
        if a * b < 0.0 {
            let t = a / (a - b);
            return Some(x[i] + t * (x[i + 1] - x[i]));
        }
    }
    None
}

/// Sup-norm of the difference of two equally long slices.
pub fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| fabs(x - y))
        .fold(0.0, f64::max)
}

pub fn sup_norm(a: &[f64]) -> f64 {
    a.iter().map(|x| fabs(*x)).fold(0.0, f64::max)
}

/// Centered finite-difference derivative with one-sided ends.
pub fn gradient(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = alloc::vec![0.0; n];
    if n < 2 {
        return out;
    }
    out[0] = (values[1] - values[0]) / h;
    out[n - 1] = (values[n - 1] - values[n - 2]) / h;
    for i in 1..n - 1 {
        out[i] = (values[i + 1] - values[i - 1]) / (2.0 * h);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_fit_recovers_exact_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let (a, b, r2) = fit_line(&x, &y);
        assert!((a - 2.0).abs() < 1e-12 && (b + 0.5).abs() < 1e-12);
        assert!((r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cubic_is_exact_on_cubics_in_the_interior() {
        let v: Vec<f64> = (0..8).map(|i| (i as f64).powi(2)).collect();
        assert!((cubic_at(&v, 3.5) - 12.25).abs() < 1e-12);
        assert!((cubic_at(&v, 0.0) - 0.0).abs() < 1e-12);
    }

    #[test]
    fn crossing_interpolates_linearly() {
        let x = [0.0, 1.0, 2.0];
        let v = [0.0, 0.5, 1.0];
        assert_eq!(first_crossing(&x, &v, 0.75), Some(1.5));
        assert_eq!(first_crossing(&x, &v, 2.0), None);
    }
}

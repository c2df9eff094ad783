//! Numerical law of `|X1 - X2|` for i.i.d. `X1, X2 ~ f`, by the CDF method:
//!
//! ```text
//! F_Y(y) = ∫ f(x) [F(x + y) - F(x - y)] dx
//! f_Y(y) = ∫ [f(x + y) + f(x - y)] f(x) dx
//! ```
//!
//! Both integrals use the composite trapezoid rule on one uniform grid, with
//! `y` restricted to grid multiples so every shifted evaluation lands on a
//! node. Independent of the closed forms it is used to check.

use super::dist::ClosedFormDist;
use crate::exec::{map_range, ExecPolicy};
use crate::{Error, Result};

const MIN_GRID: usize = 1000;
const NORMALIZATION_TOL: f64 = 1e-6;

fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values {
        [] | [_] => 0.0,
        [first, .., last] => h * (values.iter().sum::<f64>() - 0.5 * (first + last)),
    }
}

/// Tabulates the distribution of `|X1 - X2|` on `grid_n` points spanning
/// `[0, hi - lo]`, where `pdf` is supported on `[lo, hi]`.
pub fn abs_diff_oracle<F>(pdf: F, support: (f64, f64), grid_n: usize) -> Result<ClosedFormDist>
where
    F: Fn(f64) -> f64,
{
    let (lo, hi) = support;
    if grid_n < MIN_GRID {
        return Err(Error::Domain(format!(
            "oracle grid needs at least {MIN_GRID} points, got {grid_n}"
        )));
    }
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Domain(format!(
            "invalid oracle support [{lo}, {hi}]"
        )));
    }
    let h = (hi - lo) / (grid_n - 1) as f64;
    let node = |j: usize| {
        if j + 1 == grid_n {
            hi
        } else {
            lo + j as f64 * h
        }
    };
    let f: Vec<f64> = (0..grid_n).map(|j| pdf(node(j))).collect();

    let total = trapezoid(&f, h);
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::Domain(format!(
            "density integrates to {total} over [{lo}, {hi}], expected 1"
        )));
    }

    let mut cum = vec![0.0; grid_n];
    for j in 1..grid_n {
        cum[j] = cum[j - 1] + 0.5 * h * (f[j - 1] + f[j]);
    }
    let top = cum[grid_n - 1];

    let n = grid_n;
    let columns = map_range(ExecPolicy::Parallel, n, |k| {
        // F(x + y) saturates at the top of the support, F(x - y) at zero.
        let mut cdf_acc = 0.0;
        for j in 0..n {
            let upper = if j + k < n { cum[j + k] } else { top };
            let lower = if j >= k { cum[j - k] } else { 0.0 };
            let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
            cdf_acc += w * f[j] * (upper - lower);
        }
        // f(x + y) f(x) is supported on x in [lo, hi - y]; the second term
        // mirrors it, so both share one integral.
        let shifted: Vec<f64> = (0..n - k).map(|j| f[j] * f[j + k]).collect();
        let pdf_val = 2.0 * trapezoid(&shifted, h);
        (cdf_acc * h, pdf_val)
    });
    let (cdf, pdf_y): (Vec<f64>, Vec<f64>) = columns.into_iter().unzip();
    ClosedFormDist::tabulated(0.0, hi - lo, pdf_y, cdf, "|X1 - X2| (quadrature)")
}

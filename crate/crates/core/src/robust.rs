//! Sample median, MAD and lower empirical quantiles.
//!
//! Median of an even-sized sample is the midpoint of the two middle order
//! statistics. MAD is the median of absolute deviations from the median, with
//! no consistency factor. Everything uses exact selection, never
//! approximation, so results are reproducible bit-for-bit.

use crate::error::{Error, Result};

fn check(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Empty("real sample"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("sample values must be finite"));
    }
    Ok(())
}

pub fn sample_median(values: &[f64]) -> Result<f64> {
    check(values)?;
    let mut buf = values.to_vec();
    Ok(median_in_place(&mut buf))
}

pub fn sample_mad(values: &[f64]) -> Result<f64> {
    check(values)?;
    let mut buf = values.to_vec();
    Ok(median_and_mad_in_place(&mut buf).1)
}

/// Median and MAD together; reuses one scratch buffer.
pub fn median_and_mad(values: &[f64]) -> Result<(f64, f64)> {
    check(values)?;
    let mut buf = values.to_vec();
    Ok(median_and_mad_in_place(&mut buf))
}

/// Lower empirical quantile: the `k`-th order statistic with
/// `k = max(1, ceil(u * n))`. `u = 0` gives the minimum.
pub fn empirical_quantile(values: &[f64], u: f64) -> Result<f64> {
    check(values)?;
    let k = quantile_rank(values.len(), u)?;
    let mut buf = values.to_vec();
    let (_, kth, _) = buf.select_nth_unstable_by(k - 1, f64::total_cmp);
    Ok(*kth)
}

/// 1-based order-statistic index used by [`empirical_quantile`].
pub fn quantile_rank(n: usize, u: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&u) {
        return Err(Error::domain(format!("quantile level u = {u} is outside [0, 1)")));
    }
    let x = u * n as f64;
    let nearest = x.round();
    // Snap float noise such as 0.07 * 100 = 7.000000000000001.
    let k = if (x - nearest).abs() <= 1e-9 * (n as f64).max(1.0) {
        nearest
    } else {
        x.ceil()
    };
    Ok((k as usize).clamp(1, n))
}

/// Median of a non-empty buffer of finite values; reorders `buf`.
pub(crate) fn median_in_place(buf: &mut [f64]) -> f64 {
    let n = buf.len();
    let mid = n / 2;
    let (lower, upper, _) = buf.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower = lower
            .iter()
            .copied()
            .max_by(f64::total_cmp)
            .expect("even n >= 2 has a lower half");
        midpoint(lower, upper)
    }
}

/// Median and MAD of a non-empty buffer; overwrites `buf`.
pub(crate) fn median_and_mad_in_place(buf: &mut [f64]) -> (f64, f64) {
    let med = median_in_place(buf);
    for v in buf.iter_mut() {
        *v = (*v - med).abs();
    }
    (med, median_in_place(buf))
}

#[inline]
fn midpoint(a: f64, b: f64) -> f64 {
    (a + b) / 2.0
}

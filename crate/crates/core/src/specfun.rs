//! Special functions for the closed-form photon distribution.

use crate::error::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Shift point above which the asymptotic series is used directly.
const STIRLING_MIN: f64 = 10.0;

/// `B_2k / (2k (2k - 1))` for k = 1..8.
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

/// `ln Gamma(x)` for `x > 0`.
///
/// Arguments below 10 are shifted upward with the recurrence
/// `Gamma(x + 1) = x Gamma(x)`, then the Stirling series is summed to
/// eight correction terms (truncation error below `1e-17` at `x = 10`).
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain("ln_gamma needs a finite x > 0"));
    }
    let mut shifted = x;
    let mut product = 1.0;
    while shifted < STIRLING_MIN {
        product *= shifted;
        shifted += 1.0;
    }
    let inv = 1.0 / shifted;
    let inv2 = inv * inv;
    let mut series = 0.0;
    for c in STIRLING.iter().rev() {
        series = series * inv2 + c;
    }
    series *= inv;
    let stirling = (shifted - 0.5) * libm::log(shifted) - shifted + LN_SQRT_2PI + series;
    Ok(stirling - libm::log(product))
}

/// Stopping rule for the Kummer series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesControl {
    /// Stop once `next term / partial sum` drops below this.
    pub rel_tol: f64,
    pub max_terms: usize,
}

impl Default for SeriesControl {
    fn default() -> Self {
        SeriesControl { rel_tol: 1e-14, max_terms: 100_000 }
    }
}

const RESCALE_AT: f64 = 1e250;
const RESCALE_BY: f64 = 1e-250;
const LN_RESCALE: f64 = 575.646_273_248_511_4; // 250 ln 10

/// `ln 1F1(1, b; z)` for `b > 0`, `z >= 0`.
///
/// The series `sum_k z^k / (b)_k` grows like `e^z`, so partial sums are
/// rescaled whenever they pass `1e250` and the logarithm of the scale is
/// carried separately.
pub fn ln_kummer_1f1_a1(b: f64, z: f64, ctl: SeriesControl) -> Result<f64> {
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::Domain("1F1(1, b; z) needs a finite b > 0"));
    }
    if !(z >= 0.0) || !z.is_finite() {
        return Err(Error::Domain("1F1(1, b; z) needs a finite z >= 0"));
    }
    if !(ctl.rel_tol > 0.0) || ctl.max_terms == 0 {
        return Err(Error::InvalidParameter("series control needs rel_tol > 0 and max_terms >= 1"));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    // Neumaier compensation for the long positive sum.
    let mut carry = 0.0_f64;
    let mut ln_scale = 0.0_f64;
    for k in 0..ctl.max_terms {
        let denom = b + k as f64;
        term *= z / denom;
        let t = sum + term;
        carry += if sum >= term { (sum - t) + term } else { (term - t) + sum };
        sum = t;
        if sum > RESCALE_AT {
            sum *= RESCALE_BY;
            term *= RESCALE_BY;
            carry *= RESCALE_BY;
            ln_scale += LN_RESCALE;
        }
        // Only stop on the decreasing side of the term sequence.
        if z < denom + 1.0 && term <= ctl.rel_tol * sum {
            return Ok(libm::log(sum + carry) + ln_scale);
        }
    }
    Err(Error::IterationLimit {
        terms: ctl.max_terms,
        partial: libm::exp(libm::log(sum + carry) + ln_scale),
    })
}

/// `1F1(1, b; z) = sum_k z^k / (b)_k`, `(b)_k` the rising factorial.
///
/// Overflows to `inf` for `z` beyond roughly 700; use
/// [`ln_kummer_1f1_a1`] there.
pub fn kummer_1f1_a1(b: f64, z: f64, ctl: SeriesControl) -> Result<f64> {
    ln_kummer_1f1_a1(b, z, ctl).map(libm::exp)
}

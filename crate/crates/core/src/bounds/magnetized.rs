use crate::error::{Error, Result};
use crate::flow::SMALL_ANGLE;

/// Below this `|ωt|` the cubic defect is summed as a power series.
pub const CUBIC_SERIES_THRESHOLD: f64 = 0.1;

fn check_dim(d: usize) -> Result<()> {
    if d == 2 || d == 3 {
        Ok(())
    } else {
        Err(Error::Domain(format!("dimension must be 2 or 3, got {d}")))
    }
}

fn check_nonneg(name: &str, x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{name} must be finite and nonnegative, got {x}"
        )))
    }
}

/// `e^{(1+2H)t} W1(0)`.
pub fn dobrushin_bound(h: f64, t: f64, w1_0: f64) -> f64 {
    ((1.0 + 2.0 * h) * t).exp() * w1_0
}

/// `(t - sin(ωt)/ω)/ω²`, which tends to `t³/6` as `ω → 0`.
pub fn cubic_defect(omega: f64, t: f64) -> f64 {
    let x = omega * t;
    if x.abs() < CUBIC_SERIES_THRESHOLD {
        // (x - sin x)/x³ = Σ (-1)^k x^{2k}/(2k+3)!
        let x2 = x * x;
        let mut term = 1.0 / 6.0;
        let mut sum = term;
        for k in 1..8 {
            term *= -x2 / ((2 * k + 2) * (2 * k + 3)) as f64;
            sum += term;
        }
        sum * t * t * t
    } else {
        (t - (x.sin()) / omega) / (omega * omega)
    }
}

/// Prefactor `√(2(1-cos ωt)/ω² [+ t²]) + 1`, with `+ t²` in three dimensions.
pub fn magnetized_gain(d: usize, omega: f64, t: f64) -> Result<f64> {
    check_dim(d)?;
    check_nonneg("gyrofrequency", omega)?;
    check_nonneg("time", t)?;
    // 2(1 - cos ωt)/ω² = (2 sin(ωt/2)/ω)²; the chord stays accurate for small ωt.
    let chord = if (omega * t).abs() < SMALL_ANGLE {
        let x2 = (omega * t).powi(2);
        t * (1.0 - x2 / 24.0)
    } else {
        2.0 * (0.5 * omega * t).sin().abs() / omega
    };
    let sq = if d == 3 {
        chord * chord + t * t
    } else {
        chord * chord
    };
    Ok(sq.sqrt() + 1.0)
}

/// `4H(2(t - sin(ωt)/ω)/ω² + t [+ t³/3])`, the cubic term only in three dimensions.
pub fn magnetized_exponent(d: usize, h: f64, omega: f64, t: f64) -> Result<f64> {
    check_dim(d)?;
    check_nonneg("Hessian bound", h)?;
    check_nonneg("gyrofrequency", omega)?;
    check_nonneg("time", t)?;
    let extra = if d == 3 { t * t * t / 3.0 } else { 0.0 };
    Ok(4.0 * h * (2.0 * cubic_defect(omega, t) + extra + t))
}

/// `min(gain · e^{exponent}, e^{(1+2H)t}) · W1(0)`.
pub fn magnetized_bound(d: usize, h: f64, omega: f64, t: f64, w1_0: f64) -> Result<f64> {
    check_nonneg("initial distance", w1_0)?;
    let magnetized = magnetized_gain(d, omega, t)? * magnetized_exponent(d, h, omega, t)?.exp();
    Ok(magnetized.min(((1.0 + 2.0 * h) * t).exp()) * w1_0)
}

use crate::error::{Error, Result};

/// Default smallness threshold `c₀` for the square-root-log estimate.
pub const DEFAULT_SMALLNESS: f64 = 0.135_335_283_236_612_7; // e^{-2}

const E_MINUS_2: f64 = DEFAULT_SMALLNESS;

fn check_initial(w2sq_0: f64) -> Result<()> {
    if w2sq_0 > 0.0 && w2sq_0.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "initial squared distance must be positive, got {w2sq_0}"
        )))
    }
}

/// Double-exponential estimate
/// `W₂²(t) ≤ exp(log W₂²(0) · exp(-c_d ∫_0^t J))`, valid when
/// `W₂²(0) < e^{-2}` and `|log W₂²(0)| ≥ exp(c_d ∫_0^T J)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoglinearCheck {
    pub admissible: bool,
    pub w2sq_0: f64,
    pub c_d: f64,
    pub j_integral: f64,
}

impl LoglinearCheck {
    /// Right-hand side for a running integral `∫_0^t J`.
    pub fn rhs(&self, j_integral_t: f64) -> f64 {
        (self.w2sq_0.ln() * (-self.c_d * j_integral_t).exp()).exp()
    }
}

pub fn loglinear_stability(w2sq_0: f64, j_integral: f64, c_d: f64) -> Result<LoglinearCheck> {
    check_initial(w2sq_0)?;
    let admissible = w2sq_0 < E_MINUS_2 && w2sq_0.ln().abs() >= (c_d * j_integral).exp();
    Ok(LoglinearCheck {
        admissible,
        w2sq_0,
        c_d,
        j_integral,
    })
}

/// Estimate `W₂²(t) ≤ 2 exp(-(√|log P| - C_d ∫_0^t J)²)` with
/// `P = W₂²(0) |log(W₂²(0)/2)|`, valid when `W₂²(0) < c₀`, `P < 1` and
/// `√|log P| ≥ C_d ∫_0^T J + 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SqrtlogCheck {
    pub admissible: bool,
    pub w2sq_0: f64,
    pub c_upper: f64,
    pub c0: f64,
    pub j_integral: f64,
    /// `P`; the estimate is only meaningful while it stays below one.
    pub inner: f64,
    /// `√|log P|`.
    pub root: f64,
}

impl SqrtlogCheck {
    pub fn rhs(&self, j_integral_t: f64) -> f64 {
        2.0 * (-(self.root - self.c_upper * j_integral_t).powi(2)).exp()
    }
}

pub fn sqrtlog_stability(
    w2sq_0: f64,
    j_integral: f64,
    c_upper: f64,
    c0: f64,
) -> Result<SqrtlogCheck> {
    check_initial(w2sq_0)?;
    let inner = w2sq_0 * (0.5 * w2sq_0).ln().abs();
    let root = inner.ln().abs().sqrt();
    let admissible = w2sq_0 < c0 && inner < 1.0 && root >= c_upper * j_integral + 1.0;
    Ok(SqrtlogCheck {
        admissible,
        w2sq_0,
        c_upper,
        c0,
        j_integral,
        inner,
        root,
    })
}

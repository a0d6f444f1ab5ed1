use crate::error::{Error, Result};
use crate::flow::exp_weighted_integrals;

/// Values sampled on a strictly increasing, nonnegative time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::Precondition(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.is_empty() {
            return Err(Error::Precondition("empty time series".into()));
        }
        if !(times[0] >= 0.0) || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Precondition(
                "time grid must be nonnegative and strictly increasing".into(),
            ));
        }
        Ok(Self { times, values })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(times: Vec<f64>, f: F) -> Result<Self> {
        let values = times.iter().map(|&t| f(t)).collect();
        Self::new(times, values)
    }

    /// `n + 1` equispaced samples on `[0, horizon]`.
    pub fn uniform_grid(horizon: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|k| horizon * k as f64 / n as f64).collect()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest grid spacing.
    pub fn max_step(&self) -> f64 {
        self.times
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    pub fn same_grid(&self, other: &TimeSeries) -> bool {
        self.times == other.times
    }

    /// Running trapezoid integral from the first sample.
    pub fn cumulative_integral(&self) -> Vec<f64> {
        exp_weighted_integrals(&self.times, &self.values, 0.0)
    }

    /// Piecewise-linear interpolation, clamped outside the grid.
    pub fn interpolate(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            return self.values[0];
        }
        if k == self.times.len() {
            return self.values[k - 1];
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = (t - t0) / (t1 - t0);
        self.values[k - 1] * (1.0 - w) + self.values[k] * w
    }

    fn index_of(&self, t: f64) -> Result<usize> {
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-12 * (1.0 + t.abs()))
            .ok_or_else(|| Error::Precondition(format!("t = {t} is not a grid point")))
    }
}

/// A value of `J` with a Richardson estimate of the trapezoid error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JValue {
    pub value: f64,
    pub quadrature_error: f64,
}

/// `J` on the whole grid together with its running integral.
#[derive(Clone, Debug, PartialEq)]
pub struct JSeries {
    pub j: TimeSeries,
    /// `∫_0^t J` by the trapezoid rule, one value per sample.
    pub integral: Vec<f64>,
    pub quadrature_step: f64,
}

/// `J(s) = A(s) + ‖B‖_hol (e^{s‖B‖∞} + ∫_0^s (1 + ρ₂(u)) e^{(s-u)‖B‖∞} du)`
/// at the grid point `s` of `rho2_sup`.
pub fn j_integrand(
    s: f64,
    a_s: f64,
    rho2_sup: &TimeSeries,
    b_sup: f64,
    b_hol: f64,
) -> Result<JValue> {
    let k = rho2_sup.index_of(s)?;
    let times = &rho2_sup.times()[..=k];
    let g: Vec<f64> = rho2_sup.values()[..=k].iter().map(|r| 1.0 + r).collect();
    let fine = *exp_weighted_integrals(times, &g, b_sup).last().unwrap();
    // Same rule on every other node; the gap estimates the fine-grid error.
    let quadrature_error = if k >= 2 && k % 2 == 0 {
        let ct: Vec<f64> = times.iter().step_by(2).copied().collect();
        let cg: Vec<f64> = g.iter().step_by(2).copied().collect();
        let coarse = *exp_weighted_integrals(&ct, &cg, b_sup).last().unwrap();
        b_hol * (fine - coarse).abs() / 3.0
    } else {
        let h = rho2_sup.max_step();
        b_hol
            * h
            * h
            * s
            * g.iter().copied().fold(0.0, f64::max)
            * (s * b_sup).exp()
            * (1.0 + b_sup).powi(2)
            / 12.0
    };
    Ok(JValue {
        value: a_s + b_hol * ((s * b_sup).exp() + fine),
        quadrature_error,
    })
}

/// `J` at every sample of the shared grid of `a` and `rho2_sup`.
pub fn j_series(a: &TimeSeries, rho2_sup: &TimeSeries, b_sup: f64, b_hol: f64) -> Result<JSeries> {
    if !a.same_grid(rho2_sup) {
        return Err(Error::Precondition(
            "A and the density series must share one time grid".into(),
        ));
    }
    if !(b_sup >= 0.0 && b_hol >= 0.0) {
        return Err(Error::Domain("field norms must be nonnegative".into()));
    }
    let g: Vec<f64> = rho2_sup.values().iter().map(|r| 1.0 + r).collect();
    let inner = exp_weighted_integrals(a.times(), &g, b_sup);
    let values: Vec<f64> = (0..a.len())
        .map(|k| a.values()[k] + b_hol * ((a.times()[k] * b_sup).exp() + inner[k]))
        .collect();
    let j = TimeSeries::new(a.times().to_vec(), values)?;
    let integral = j.cumulative_integral();
    Ok(JSeries {
        quadrature_step: a.max_step(),
        j,
        integral,
    })
}

/// Integrability of the density-norm series `A` on its grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionVerdict {
    pub passed: bool,
    pub integral: f64,
    pub quadrature_step: f64,
}

pub fn efield_condition_check(a: &TimeSeries) -> ConditionVerdict {
    let finite = a.values().iter().all(|v| v.is_finite());
    let integral = if finite {
        *a.cumulative_integral().last().unwrap()
    } else {
        f64::INFINITY
    };
    ConditionVerdict {
        passed: finite && integral.is_finite(),
        integral,
        quadrature_step: a.max_step(),
    }
}

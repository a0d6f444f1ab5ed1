use crate::error::{Error, Result};

use super::TimeSeries;

const REGIME_EDGE: f64 = 0.367_879_441_171_442_33; // 1/e

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GronwallKind {
    /// `Q' = c J Q |log Q|`
    Loglinear,
    /// `Q' = c J Q √|log Q|`
    Sqrtlog,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GronwallStatus {
    Completed,
    /// `Q` reached `1/e` inside the step ending at `t`.
    RegimeExit {
        t: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct GronwallSolution {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub status: GronwallStatus,
}

impl GronwallSolution {
    pub fn last(&self) -> f64 {
        *self.values.last().unwrap()
    }
}

/// Classical RK4 on the grid of `j`, with `J` interpolated linearly inside
/// each step.
pub fn gronwall_ode_solve(
    kind: GronwallKind,
    j: &TimeSeries,
    q0: f64,
    rate: f64,
) -> Result<GronwallSolution> {
    if !(q0 > 0.0 && q0 < REGIME_EDGE) {
        return Err(Error::Domain(format!(
            "initial value must lie in (0, 1/e), got {q0}"
        )));
    }
    let rhs = |t: f64, q: f64| {
        let l = q.ln().abs();
        let g = match kind {
            GronwallKind::Loglinear => l,
            GronwallKind::Sqrtlog => l.sqrt(),
        };
        rate * j.interpolate(t) * q * g
    };
    let times = j.times();
    let mut values = vec![q0];
    let mut q = q0;
    for w in times.windows(2) {
        let (t, h) = (w[0], w[1] - w[0]);
        let k1 = rhs(t, q);
        let k2 = rhs(t + 0.5 * h, q + 0.5 * h * k1);
        let k3 = rhs(t + 0.5 * h, q + 0.5 * h * k2);
        let k4 = rhs(t + h, q + h * k3);
        q += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !(q < REGIME_EDGE) || !(q > 0.0) {
            return Ok(GronwallSolution {
                times: times[..values.len()].to_vec(),
                values,
                status: GronwallStatus::RegimeExit { t: w[1] },
            });
        }
        values.push(q);
    }
    Ok(GronwallSolution {
        times: times.to_vec(),
        values,
        status: GronwallStatus::Completed,
    })
}

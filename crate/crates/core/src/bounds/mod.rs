//! Closed-form stability bounds, admissibility conditions and a Grönwall
//! cross-checker.

mod gronwall;
mod magnetized;
mod report;
mod series;
mod stability;

pub use gronwall::{gronwall_ode_solve, GronwallKind, GronwallSolution, GronwallStatus};
pub use magnetized::{
    cubic_defect, dobrushin_bound, magnetized_bound, magnetized_exponent, magnetized_gain,
    CUBIC_SERIES_THRESHOLD,
};
pub use report::{BoundInputs, BoundReport, BoundRow, Verdict, DEFAULT_TOLERANCE};
pub use series::{
    efield_condition_check, j_integrand, j_series, ConditionVerdict, JSeries, JValue, TimeSeries,
};
pub use stability::{
    loglinear_stability, sqrtlog_stability, LoglinearCheck, SqrtlogCheck, DEFAULT_SMALLNESS,
};

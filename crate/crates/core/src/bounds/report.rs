use std::fmt;
use std::io::Write;

use crate::ensemble::fmt17;
use crate::error::Result;

use super::DEFAULT_SMALLNESS;

/// Relative slack granted to integrator and quadrature error.
pub const DEFAULT_TOLERANCE: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// The hypotheses of the estimate do not hold for this run.
    Inadmissible,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inadmissible => "inadmissible",
        })
    }
}

/// Inputs shared by the bound evaluators, recorded in every report.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundInputs {
    pub hessian_bound: f64,
    pub omega: f64,
    pub dim: usize,
    pub w1_0: Option<f64>,
    pub w2sq_0: Option<f64>,
    pub b_sup: f64,
    pub b_hol: f64,
    pub c_d: f64,
    pub c_upper: f64,
    pub c0: f64,
    pub quadrature_step: f64,
}

impl Default for BoundInputs {
    fn default() -> Self {
        Self {
            hessian_bound: 0.0,
            omega: 0.0,
            dim: 2,
            w1_0: None,
            w2sq_0: None,
            b_sup: 0.0,
            b_hol: 0.0,
            c_d: 1.0,
            c_upper: 1.0,
            c0: DEFAULT_SMALLNESS,
            quadrature_step: 0.0,
        }
    }
}

impl BoundInputs {
    fn header(&self) -> Vec<(String, String)> {
        let opt = |v: Option<f64>| v.map(fmt17).unwrap_or_else(|| "none".into());
        vec![
            ("H".into(), fmt17(self.hessian_bound)),
            ("omega".into(), fmt17(self.omega)),
            ("d".into(), self.dim.to_string()),
            ("W1_0".into(), opt(self.w1_0)),
            ("W2sq_0".into(), opt(self.w2sq_0)),
            ("Bsup".into(), fmt17(self.b_sup)),
            ("Bhol".into(), fmt17(self.b_hol)),
            ("c_d".into(), fmt17(self.c_d)),
            ("C_d".into(), fmt17(self.c_upper)),
            ("c0".into(), format!("{} (placeholder)", fmt17(self.c0))),
            ("quadrature_step".into(), fmt17(self.quadrature_step)),
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundRow {
    pub t: f64,
    pub measured: f64,
    pub bound: f64,
    /// `bound - measured`.
    pub slack: f64,
    pub verdict: Verdict,
}

/// Measured values against one bound along a run.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub label: String,
    pub inputs: BoundInputs,
    pub tolerance: f64,
    /// Set when the hypotheses behind the bound are not literally met by the data.
    pub qualitative: bool,
    pub notes: Vec<String>,
    pub rows: Vec<BoundRow>,
}

impl BoundReport {
    pub fn new(label: impl Into<String>, inputs: BoundInputs, tolerance: f64) -> Self {
        Self {
            label: label.into(),
            inputs,
            tolerance,
            qualitative: false,
            notes: Vec::new(),
            rows: Vec::new(),
        }
    }

    /// Records a sample; passes iff `measured ≤ bound · (1 + tolerance)`.
    pub fn push(&mut self, t: f64, measured: f64, bound: f64) -> Verdict {
        let verdict = if measured <= bound * (1.0 + self.tolerance) {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        self.rows.push(BoundRow {
            t,
            measured,
            bound,
            slack: bound - measured,
            verdict,
        });
        verdict
    }

    pub fn push_inadmissible(&mut self, t: f64, measured: f64, bound: f64) {
        self.rows.push(BoundRow {
            t,
            measured,
            bound,
            slack: bound - measured,
            verdict: Verdict::Inadmissible,
        });
    }

    pub fn failures(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| r.verdict == Verdict::Fail)
            .count()
    }

    pub fn passed(&self) -> bool {
        self.failures() == 0
    }

    /// Smallest `bound·(1+tol) - measured` over rows that were evaluated.
    pub fn worst_margin(&self) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.verdict != Verdict::Inadmissible)
            .map(|r| r.bound * (1.0 + self.tolerance) - r.measured)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn summary(&self) -> String {
        let tag = if self.qualitative {
            " [qualitative]"
        } else {
            ""
        };
        let inadmissible = self
            .rows
            .iter()
            .filter(|r| r.verdict == Verdict::Inadmissible)
            .count();
        let status = if !self.passed() {
            "FAIL"
        } else if inadmissible == self.rows.len() && !self.rows.is_empty() {
            "INADMISSIBLE"
        } else {
            "PASS"
        };
        format!(
            "{}{}: {} ({} samples, {} failures, {} inadmissible, tolerance {})",
            self.label,
            tag,
            status,
            self.rows.len(),
            self.failures(),
            inadmissible,
            self.tolerance
        )
    }

    /// `#`-prefixed input block, then `t,measured,bound,slack,verdict`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# bound = {}", self.label)?;
        writeln!(out, "# tolerance = {}", fmt17(self.tolerance))?;
        writeln!(out, "# qualitative = {}", self.qualitative)?;
        for (k, v) in self.inputs.header() {
            writeln!(out, "# {k} = {v}")?;
        }
        for note in &self.notes {
            writeln!(out, "# note: {note}")?;
        }
        writeln!(out, "t,measured,bound,slack,verdict")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                fmt17(r.t),
                fmt17(r.measured),
                fmt17(r.bound),
                fmt17(r.slack),
                r.verdict
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_respects_tolerance() {
        let mut r = BoundReport::new("x", BoundInputs::default(), 0.01);
        assert_eq!(r.push(0.0, 1.0, 1.0), Verdict::Pass);
        assert_eq!(r.push(0.1, 1.0099, 1.0), Verdict::Pass);
        assert_eq!(r.push(0.2, 1.02, 1.0), Verdict::Fail);
        assert_eq!(r.failures(), 1);
        assert!(!r.passed());
        r.push_inadmissible(0.3, 5.0, 1.0);
        assert_eq!(r.failures(), 1);
    }

    #[test]
    fn csv_layout() {
        let mut r = BoundReport::new(
            "dobrushin",
            BoundInputs {
                w1_0: Some(0.01),
                ..Default::default()
            },
            0.01,
        );
        r.push(0.0, 0.01, 0.01);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data[0], "t,measured,bound,slack,verdict");
        assert!(data[1].ends_with(",pass"));
        assert!(text.contains("# W1_0 = 1.0000000000000000e-2"));
    }
}

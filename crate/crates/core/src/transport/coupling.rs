use std::io::Write;

use crate::ensemble::{fmt17, PhaseEnsemble};
use crate::error::{Error, Result};
use crate::sum::pairwise_sum_by;

use super::PhaseMetric;

pub const MARGINAL_TOLERANCE: f64 = 1e-10;

/// Sparse transport plan: `(i, j, mass)` moves `mass` from particle `i` of the
/// source ensemble to particle `j` of the target.
#[derive(Clone, Debug, PartialEq)]
pub struct Coupling {
    entries: Vec<(usize, usize, f64)>,
}

impl Coupling {
    /// Entries with nonpositive mass are dropped.
    pub fn from_entries(entries: Vec<(usize, usize, f64)>) -> Result<Self> {
        if let Some(e) = entries.iter().find(|e| !(e.2 >= 0.0) || !e.2.is_finite()) {
            return Err(Error::Domain(format!(
                "coupling mass {} is not a nonnegative number",
                e.2
            )));
        }
        Ok(Self {
            entries: entries.into_iter().filter(|e| e.2 > 0.0).collect(),
        })
    }

    /// Pairs particle `i` with `i`, carrying the source weights.
    pub fn identity<const D: usize>(source: &PhaseEnsemble<D>) -> Self {
        Self {
            entries: (0..source.len())
                .map(|i| (i, i, source.weight(i)))
                .collect(),
        }
    }

    /// Pairs `i` with `perm[i]`, carrying the source weights.
    pub fn from_permutation<const D: usize>(source: &PhaseEnsemble<D>, perm: &[usize]) -> Self {
        Self {
            entries: perm
                .iter()
                .enumerate()
                .map(|(i, &j)| (i, j, source.weight(i)))
                .collect(),
        }
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Largest deviation of the row and column sums from the ensemble weights.
    pub fn marginal_error<const D: usize>(
        &self,
        source: &PhaseEnsemble<D>,
        target: &PhaseEnsemble<D>,
    ) -> Result<f64> {
        let mut rows = vec![0.0; source.len()];
        let mut cols = vec![0.0; target.len()];
        for &(i, j, m) in &self.entries {
            if i >= rows.len() || j >= cols.len() {
                return Err(Error::Precondition(format!(
                    "coupling entry ({i}, {j}) is out of range"
                )));
            }
            rows[i] += m;
            cols[j] += m;
        }
        let row_err = rows
            .iter()
            .enumerate()
            .map(|(i, r)| (r - source.weight(i)).abs());
        let col_err = cols
            .iter()
            .enumerate()
            .map(|(j, c)| (c - target.weight(j)).abs());
        Ok(row_err.chain(col_err).fold(0.0, f64::max))
    }

    pub fn validate<const D: usize>(
        &self,
        source: &PhaseEnsemble<D>,
        target: &PhaseEnsemble<D>,
    ) -> Result<()> {
        let err = self.marginal_error(source, target)?;
        if err > MARGINAL_TOLERANCE {
            return Err(Error::Precondition(format!(
                "coupling marginals are off by {err:e}"
            )));
        }
        Ok(())
    }

    /// `Σ mass · cost` under `metric`.
    pub fn total_cost<const D: usize>(
        &self,
        source: &PhaseEnsemble<D>,
        target: &PhaseEnsemble<D>,
        metric: PhaseMetric,
    ) -> f64 {
        pairwise_sum_by(self.entries.len(), |k| {
            let (i, j, m) = self.entries[k];
            m * metric.cost(source, i, target, j)
        })
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "i,j,mass")?;
        for &(i, j, m) in &self.entries {
            writeln!(out, "{i},{j},{}", fmt17(m))?;
        }
        Ok(())
    }
}

use crate::ensemble::PhaseEnsemble;
use crate::error::{Error, Result};

use super::{cost_matrix, hungarian, min_cost_transport, Coupling, PhaseMetric};

/// Largest combined particle count accepted by the exact solvers.
pub const DEFAULT_SIZE_CAP: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct ExactTransport {
    pub distance: f64,
    /// `Σ π_ij c_ij` of the optimal plan.
    pub total_cost: f64,
    pub coupling: Coupling,
}

/// Exact Wasserstein distance between two discrete measures.
///
/// Equal counts with uniform weights go through the assignment solver; any
/// other pair is solved as a min-cost flow.
pub fn wasserstein_exact<const D: usize>(
    a: &PhaseEnsemble<D>,
    b: &PhaseEnsemble<D>,
    metric: PhaseMetric,
) -> Result<ExactTransport> {
    wasserstein_exact_with_cap(a, b, metric, DEFAULT_SIZE_CAP)
}

pub fn wasserstein_exact_with_cap<const D: usize>(
    a: &PhaseEnsemble<D>,
    b: &PhaseEnsemble<D>,
    metric: PhaseMetric,
    cap: usize,
) -> Result<ExactTransport> {
    let size = a.len() + b.len();
    if size > cap {
        return Err(Error::Capacity { size, cap });
    }
    let cost = cost_matrix(a, b, metric);
    let coupling = if a.len() == b.len() && a.has_uniform_weights() && b.has_uniform_weights() {
        Coupling::from_permutation(a, &hungarian(&cost, a.len()))
    } else {
        let supply: Vec<f64> = (0..a.len()).map(|i| a.weight(i)).collect();
        let demand: Vec<f64> = (0..b.len()).map(|j| b.weight(j)).collect();
        Coupling::from_entries(min_cost_transport(&cost, &supply, &demand)?)?
    };
    let total_cost = coupling.total_cost(a, b, metric);
    Ok(ExactTransport {
        distance: metric.distance_from_cost(total_cost),
        total_cost,
        coupling,
    })
}

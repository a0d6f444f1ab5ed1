//! Optimal transport on phase space and the coupling functionals that
//! follow two solutions along their characteristics.

mod assignment;
mod coupling;
mod entropic;
mod exact;
mod functionals;
mod mincost;

use rayon::prelude::*;

use crate::ensemble::PhaseEnsemble;
use crate::error::{Error, Result};
use crate::geometry::torus_distance;

pub use assignment::hungarian;
pub use coupling::{Coupling, MARGINAL_TOLERANCE};
pub use entropic::{wasserstein_entropic, EntropicEstimate};
pub use exact::{wasserstein_exact, wasserstein_exact_with_cap, ExactTransport, DEFAULT_SIZE_CAP};
pub use functionals::{
    coupling_moments, dobrushin_functional, dobrushin_functional_states, kinetic_q_fixed_point,
    kinetic_quantity, loeper_functional, loeper_functional_states, renormalized_functional,
    renormalized_functional_states, KineticQ, KINETIC_Q_UPPER,
};
pub use mincost::min_cost_transport;

/// Order of the phase-space Wasserstein distance.
///
/// `W1` prices a pair by `|Δx| + |Δv|`, `W2` by `|Δx|² + |Δv|²` with the
/// square root taken on the total. Position differences use the minimal image.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PhaseMetric {
    W1,
    W2,
}

impl PhaseMetric {
    pub fn from_order(p: u32) -> Result<Self> {
        match p {
            1 => Ok(Self::W1),
            2 => Ok(Self::W2),
            _ => Err(Error::Domain(format!(
                "only orders 1 and 2 are supported, got {p}"
            ))),
        }
    }

    pub fn order(self) -> u32 {
        match self {
            Self::W1 => 1,
            Self::W2 => 2,
        }
    }

    /// Pair cost between particle `i` of `a` and particle `j` of `b`.
    pub fn cost<const D: usize>(
        self,
        a: &PhaseEnsemble<D>,
        i: usize,
        b: &PhaseEnsemble<D>,
        j: usize,
    ) -> f64 {
        let (p, q) = (&a.particles()[i], &b.particles()[j]);
        let dx = torus_distance(&p.position, &q.position);
        let dv = (p.velocity - q.velocity).norm();
        match self {
            Self::W1 => dx + dv,
            Self::W2 => dx * dx + dv * dv,
        }
    }

    /// Distance from the optimal total cost.
    pub fn distance_from_cost(self, total: f64) -> f64 {
        let total = total.max(0.0);
        match self {
            Self::W1 => total,
            Self::W2 => total.sqrt(),
        }
    }
}

/// Dense row-major `a.len() × b.len()` cost matrix, rows built in parallel.
pub fn cost_matrix<const D: usize>(
    a: &PhaseEnsemble<D>,
    b: &PhaseEnsemble<D>,
    metric: PhaseMetric,
) -> Vec<f64> {
    let m = b.len();
    let mut out = vec![0.0; a.len() * m];
    out.par_chunks_mut(m.max(1))
        .enumerate()
        .for_each(|(i, row)| {
            for (j, c) in row.iter_mut().enumerate() {
                *c = metric.cost(a, i, b, j);
            }
        });
    out
}

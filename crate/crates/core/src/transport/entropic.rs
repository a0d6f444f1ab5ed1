use rayon::prelude::*;

use crate::ensemble::PhaseEnsemble;
use crate::error::{Error, Result};
use crate::sum::{pairwise_sum, pairwise_sum_by};

use super::{cost_matrix, PhaseMetric};

const MARGINAL_TARGET: f64 = 1e-6;

/// Result of the regularized solver. `distance` is the cost of a feasible
/// plan, so it never falls below the exact distance.
#[derive(Clone, Debug, PartialEq)]
pub struct EntropicEstimate {
    pub distance: f64,
    pub epsilon: f64,
    pub iterations: usize,
    /// False when the iteration budget ran out before the marginals settled;
    /// the estimate then comes from the last iterate.
    pub converged: bool,
    /// L1 marginal violation of the unrounded plan at exit.
    pub marginal_error: f64,
}

fn log_sum_exp(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Log-domain Sinkhorn with geometric annealing of the regularization down
/// to `epsilon`, followed by rounding onto the exact marginals.
pub fn wasserstein_entropic<const D: usize>(
    a: &PhaseEnsemble<D>,
    b: &PhaseEnsemble<D>,
    metric: PhaseMetric,
    epsilon: f64,
    max_iters: usize,
) -> Result<EntropicEstimate> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::Domain(format!(
            "regularization must be positive, got {epsilon}"
        )));
    }
    let (m, n) = (a.len(), b.len());
    let cost = cost_matrix(a, b, metric);
    let log_a: Vec<f64> = (0..m).map(|i| a.weight(i).ln()).collect();
    let log_b: Vec<f64> = (0..n).map(|j| b.weight(j).ln()).collect();
    let mut f = vec![0.0; m];
    let mut g = vec![0.0; n];
    let c_max = cost.iter().copied().fold(0.0, f64::max);
    let mut eps = c_max.max(epsilon);
    let mut iterations = 0;
    let mut marginal_error = f64::INFINITY;
    loop {
        let last_stage = eps <= epsilon;
        loop {
            if iterations >= max_iters {
                break;
            }
            iterations += 1;
            f.par_iter_mut().enumerate().for_each(|(i, fi)| {
                let row = &cost[i * n..(i + 1) * n];
                *fi = -eps * log_sum_exp((0..n).map(|j| log_b[j] + (g[j] - row[j]) / eps));
            });
            g.par_iter_mut().enumerate().for_each(|(j, gj)| {
                *gj = -eps * log_sum_exp((0..m).map(|i| log_a[i] + (f[i] - cost[i * n + j]) / eps));
            });
            // Columns are exact after the g update; measure the rows.
            let row_errors: Vec<f64> = (0..m)
                .into_par_iter()
                .map(|i| {
                    let row = &cost[i * n..(i + 1) * n];
                    let s: f64 = (0..n)
                        .map(|j| (log_a[i] + log_b[j] + (f[i] + g[j] - row[j]) / eps).exp())
                        .sum();
                    (s - a.weight(i)).abs()
                })
                .collect();
            marginal_error = pairwise_sum(&row_errors);
            let stage_target = if last_stage { MARGINAL_TARGET } else { 1e-3 };
            if marginal_error < stage_target {
                break;
            }
        }
        if last_stage || iterations >= max_iters {
            break;
        }
        eps = (eps * 0.5).max(epsilon);
    }
    let converged = marginal_error < MARGINAL_TARGET;
    let mut plan: Vec<f64> = (0..m * n)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / n, k % n);
            (log_a[i] + log_b[j] + (f[i] + g[j] - cost[k]) / eps).exp()
        })
        .collect();
    round_to_marginals(&mut plan, a, b);
    let total = pairwise_sum_by(plan.len(), |k| plan[k] * cost[k]);
    Ok(EntropicEstimate {
        distance: metric.distance_from_cost(total),
        epsilon: eps,
        iterations,
        converged,
        marginal_error,
    })
}

/// Projects a nonnegative plan onto the transport polytope: rows and columns
/// are scaled down to their targets, then the remaining deficit is filled by
/// a rank-one correction.
fn round_to_marginals<const D: usize>(
    plan: &mut [f64],
    a: &PhaseEnsemble<D>,
    b: &PhaseEnsemble<D>,
) {
    let (m, n) = (a.len(), b.len());
    for i in 0..m {
        let row = &mut plan[i * n..(i + 1) * n];
        let s: f64 = row.iter().sum();
        if s > a.weight(i) {
            let scale = a.weight(i) / s;
            row.iter_mut().for_each(|p| *p *= scale);
        }
    }
    for j in 0..n {
        let s: f64 = (0..m).map(|i| plan[i * n + j]).sum();
        if s > b.weight(j) {
            let scale = b.weight(j) / s;
            (0..m).for_each(|i| plan[i * n + j] *= scale);
        }
    }
    let da: Vec<f64> = (0..m)
        .map(|i| (a.weight(i) - plan[i * n..(i + 1) * n].iter().sum::<f64>()).max(0.0))
        .collect();
    let db: Vec<f64> = (0..n)
        .map(|j| (b.weight(j) - (0..m).map(|i| plan[i * n + j]).sum::<f64>()).max(0.0))
        .collect();
    let total: f64 = da.iter().sum();
    if total > 0.0 {
        for i in 0..m {
            for j in 0..n {
                plan[i * n + j] += da[i] * db[j] / total;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{sample_ensemble, InitialCondition};
    use crate::geometry::Vector;
    use crate::transport::wasserstein_exact;

    #[test]
    fn identical_clouds_vanish_with_epsilon() {
        let a = sample_ensemble::<2>(&InitialCondition::Maxwellian { sigma: 0.3 }, 24, 4).unwrap();
        let mut prev = f64::INFINITY;
        for eps in [1e-1, 1e-2, 1e-3] {
            let r = wasserstein_entropic(&a, &a, PhaseMetric::W1, eps, 20_000).unwrap();
            assert!(r.distance <= eps * (a.len() as f64).ln() + 1e-9, "{r:?}");
            assert!(r.distance <= prev + 1e-12);
            prev = r.distance;
        }
    }

    #[test]
    fn sweep_approaches_the_exact_value_from_above() {
        let a = sample_ensemble::<2>(&InitialCondition::Maxwellian { sigma: 0.5 }, 64, 21).unwrap();
        let b = sample_ensemble::<2>(&InitialCondition::Maxwellian { sigma: 0.5 }, 64, 22).unwrap();
        for metric in [PhaseMetric::W1, PhaseMetric::W2] {
            let exact = wasserstein_exact(&a, &b, metric).unwrap().distance;
            let mut prev = f64::INFINITY;
            let mut last = 0.0;
            for eps in [1e-1, 1e-2, 1e-3] {
                let r = wasserstein_entropic(&a, &b, metric, eps, 400_000).unwrap();
                assert!(r.converged, "{r:?}");
                assert!(r.distance >= exact - 1e-12);
                assert!(r.distance <= prev + 1e-12);
                prev = r.distance;
                last = r.distance;
            }
            assert!(
                (last - exact) / exact < 0.02,
                "{metric:?}: {last} vs {exact}"
            );
        }
    }

    #[test]
    fn translated_cloud_is_bounded_below_by_the_shift() {
        let a = sample_ensemble::<2>(&InitialCondition::Maxwellian { sigma: 1.0 }, 40, 5).unwrap();
        let b = a.shifted(&Vector::<2>::new(0.1, 0.0), &Vector::zeros());
        let exact = wasserstein_exact(&a, &b, PhaseMetric::W1).unwrap().distance;
        assert!((exact - 0.1).abs() < 1e-12);
        let r = wasserstein_entropic(&a, &b, PhaseMetric::W1, 1e-2, 20_000).unwrap();
        assert!(r.distance >= exact - 1e-12);
    }

    #[test]
    fn rejects_bad_epsilon() {
        let a = sample_ensemble::<2>(&InitialCondition::UniformCold, 4, 0).unwrap();
        assert!(wasserstein_entropic(&a, &a, PhaseMetric::W1, 0.0, 10).is_err());
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let a = sample_ensemble::<2>(&InitialCondition::Maxwellian { sigma: 0.5 }, 16, 1).unwrap();
        let b = sample_ensemble::<2>(&InitialCondition::Maxwellian { sigma: 0.5 }, 16, 2).unwrap();
        let r = wasserstein_entropic(&a, &b, PhaseMetric::W1, 1e-4, 1).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 1);
    }
}

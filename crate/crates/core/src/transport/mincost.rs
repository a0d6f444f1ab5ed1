use crate::error::{Error, Result};

const FLOW_EPS: f64 = 1e-15;

/// Optimal plan between weights `supply` (rows) and `demand` (columns) for a
/// dense row-major cost matrix with nonnegative entries.
///
/// Successive shortest augmenting paths on the bipartite residual network with
/// Johnson potentials. Every augmentation exhausts a supply, a demand, or the
/// flow on some reverse arc, so the loop terminates.
pub fn min_cost_transport(
    cost: &[f64],
    supply: &[f64],
    demand: &[f64],
) -> Result<Vec<(usize, usize, f64)>> {
    let (m, n) = (supply.len(), demand.len());
    if cost.len() != m * n {
        return Err(Error::Precondition(
            "cost matrix does not match the marginals".into(),
        ));
    }
    if cost.iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
        return Err(Error::Domain(
            "transport costs must be finite and nonnegative".into(),
        ));
    }
    let mut supply = supply.to_vec();
    let mut demand = demand.to_vec();
    let mut flow = vec![0.0; m * n];
    // Nodes 0..m are sources, m..m+n sinks.
    let mut pot = vec![0.0; m + n];
    let mut dist = vec![0.0; m + n];
    let mut prev = vec![usize::MAX; m + n];
    let mut done = vec![false; m + n];
    let max_rounds = 4 * (m + n) * (m + n) + 16;
    for _ in 0..max_rounds {
        if supply.iter().all(|&s| s <= FLOW_EPS) || demand.iter().all(|&d| d <= FLOW_EPS) {
            break;
        }
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        prev.iter_mut().for_each(|p| *p = usize::MAX);
        done.iter_mut().for_each(|d| *d = false);
        for i in 0..m {
            if supply[i] > FLOW_EPS {
                dist[i] = 0.0;
            }
        }
        // Dense Dijkstra on reduced costs.
        loop {
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for (k, &d) in dist.iter().enumerate() {
                if !done[k] && d < best {
                    best = d;
                    u = k;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            if u < m {
                let row = &cost[u * n..(u + 1) * n];
                for j in 0..n {
                    let w = m + j;
                    let nd = best + (row[j] + pot[u] - pot[w]).max(0.0);
                    if !done[w] && nd < dist[w] {
                        dist[w] = nd;
                        prev[w] = u;
                    }
                }
            } else {
                let j = u - m;
                for i in 0..m {
                    if flow[i * n + j] > FLOW_EPS && !done[i] {
                        let nd = best + (-cost[i * n + j] + pot[u] - pot[i]).max(0.0);
                        if nd < dist[i] {
                            dist[i] = nd;
                            prev[i] = u;
                        }
                    }
                }
            }
        }
        let target = (0..n)
            .filter(|&j| demand[j] > FLOW_EPS && dist[m + j].is_finite())
            .min_by(|&a, &b| dist[m + a].total_cmp(&dist[m + b]));
        let Some(tj) = target else {
            return Err(Error::Degenerate(
                "no augmenting path while demand remains".into(),
            ));
        };
        let reach = dist[m + tj];
        for k in 0..m + n {
            pot[k] += dist[k].min(reach);
        }
        // Bottleneck along the path.
        let mut amount = demand[tj];
        let mut v = m + tj;
        while prev[v] != usize::MAX {
            let u = prev[v];
            if u >= m {
                amount = amount.min(flow[v * n + (u - m)]);
            }
            v = u;
        }
        amount = amount.min(supply[v]);
        supply[v] -= amount;
        demand[tj] -= amount;
        let mut v = m + tj;
        while prev[v] != usize::MAX {
            let u = prev[v];
            if u < m {
                flow[u * n + (v - m)] += amount;
            } else {
                flow[v * n + (u - m)] -= amount;
            }
            v = u;
        }
    }
    let mut entries = Vec::new();
    for i in 0..m {
        for j in 0..n {
            let f = flow[i * n + j];
            if f > FLOW_EPS {
                entries.push((i, j, f));
            }
        }
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan_cost(cost: &[f64], n: usize, plan: &[(usize, usize, f64)]) -> f64 {
        plan.iter().map(|&(i, j, f)| f * cost[i * n + j]).sum()
    }

    #[test]
    fn one_dimensional_monotone_plan() {
        // On a line with convex cost the sorted coupling is optimal.
        let xs = [0.0, 0.3, 0.7];
        let ys = [0.1, 0.5, 0.9, 1.0];
        let a = [0.5, 0.25, 0.25];
        let b = [0.25, 0.25, 0.25, 0.25];
        let cost: Vec<f64> = xs
            .iter()
            .flat_map(|x| ys.iter().map(move |y| (x - y) * (x - y)))
            .collect();
        let plan = min_cost_transport(&cost, &a, &b).unwrap();
        let sorted = 0.25 * 0.01 + 0.25 * 0.25 + 0.25 * 0.36 + 0.25 * 0.09;
        assert!((plan_cost(&cost, 4, &plan) - sorted).abs() < 1e-14);
    }

    #[test]
    fn uniform_weights_reduce_to_assignment() {
        let cost = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let w = [1.0 / 3.0; 3];
        let plan = min_cost_transport(&cost, &w, &w).unwrap();
        let perm = super::super::hungarian(&cost, 3);
        let assign: f64 = perm
            .iter()
            .enumerate()
            .map(|(i, &j)| cost[i * 3 + j] / 3.0)
            .sum();
        assert!((plan_cost(&cost, 3, &plan) - assign).abs() < 1e-14);
    }

    #[test]
    fn rejects_negative_costs() {
        assert!(min_cost_transport(&[-1.0], &[1.0], &[1.0]).is_err());
    }
}

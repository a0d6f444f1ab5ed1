//! Quick invariant suite behind the `selftest` command.

use std::f64::consts::{E, TAU};

use crate::bounds::{
    dobrushin_bound, gronwall_ode_solve, magnetized_gain, GronwallKind, TimeSeries,
};
use crate::ensemble::{sample_ensemble, DensityGrid, InitialCondition};
use crate::fields::solve_poisson;
use crate::flow::{free_flow_ensemble, push_constant_b};
use crate::geometry::{torus_distance, Vector};
use crate::transport::{kinetic_q_fixed_point, wasserstein_exact, KineticQ, PhaseMetric};

#[derive(Clone, Debug, PartialEq)]
pub struct SelfTestResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, err: f64, tol: f64) -> SelfTestResult {
    SelfTestResult {
        name,
        passed: err <= tol,
        detail: format!("error {err:e} (tolerance {tol:e})"),
    }
}

fn free_flow_check() -> SelfTestResult {
    let e = sample_ensemble::<3>(&InitialCondition::Maxwellian { sigma: 1.0 }, 32, 1)
        .expect("valid sample");
    let zero = vec![Vector::<3>::zeros(); e.len()];
    let (omega, dt, steps) = (2.0, 1e-3, 1000);
    let mut stepped = e.clone();
    for _ in 0..steps {
        stepped = push_constant_b(&stepped, &zero, omega, dt);
    }
    let exact = free_flow_ensemble(&e, omega, steps as f64 * dt);
    let err = stepped
        .particles()
        .iter()
        .zip(exact.particles())
        .map(|(a, b)| {
            torus_distance(&a.position, &b.position).max((a.velocity - b.velocity).amax())
        })
        .fold(0.0, f64::max);
    check("free flow exactness", err, 1e-10)
}

fn transport_check() -> SelfTestResult {
    let a = sample_ensemble::<2>(&InitialCondition::Maxwellian { sigma: 1.0 }, 5, 2)
        .expect("valid sample");
    let b = sample_ensemble::<2>(&InitialCondition::Maxwellian { sigma: 1.0 }, 5, 3)
        .expect("valid sample");
    let exact = wasserstein_exact(&a, &b, PhaseMetric::W1)
        .expect("small problem")
        .distance;
    let mut best = f64::INFINITY;
    let mut perm = [0, 1, 2, 3, 4];
    permute(&mut perm, 0, &mut |p| {
        let c: f64 = p
            .iter()
            .enumerate()
            .map(|(i, &j)| PhaseMetric::W1.cost(&a, i, &b, j) / 5.0)
            .sum();
        best = best.min(c);
    });
    check("assignment vs enumeration", (exact - best).abs(), 1e-9)
}

fn permute(p: &mut [usize; 5], k: usize, f: &mut dyn FnMut(&[usize; 5])) {
    if k == p.len() {
        f(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, f);
        p.swap(k, i);
    }
}

fn poisson_check() -> SelfTestResult {
    let n = 64;
    let rho = DensityGrid::from_fn(n, 2, |x| 1.0 + (TAU * x[0]).cos()).expect("valid grid");
    let field = solve_poisson(&rho).expect("zero-mean source");
    let err = (0..n * n)
        .map(|k| {
            let x = (k / n) as f64 / n as f64;
            let u = (TAU * x).cos() / (TAU * TAU);
            (field.potential()[k] - u)
                .abs()
                .max((field.efield(0)[k] - (TAU * x).sin() / TAU).abs())
        })
        .fold(0.0, f64::max);
    check("Poisson manufactured solution", err, 1e-10)
}

fn kinetic_check() -> SelfTestResult {
    let q = match kinetic_q_fixed_point(0.1, 0.05) {
        Ok(KineticQ::Root(q)) => q,
        _ => {
            return SelfTestResult {
                name: "kinetic fixed point",
                passed: false,
                detail: "no root".into(),
            }
        }
    };
    check(
        "kinetic fixed point",
        (q - 0.5 * (0.1 * q.ln().abs() + 0.05)).abs(),
        1e-12,
    )
}

fn gronwall_check() -> SelfTestResult {
    let ones =
        TimeSeries::from_fn(TimeSeries::uniform_grid(1.0, 1000), |_| 1.0).expect("valid grid");
    let s =
        gronwall_ode_solve(GronwallKind::Loglinear, &ones, (-4f64).exp(), 1.0).expect("in regime");
    check(
        "Grönwall closed form",
        (s.last() - (-4.0 / E).exp()).abs(),
        1e-8,
    )
}

fn bound_check() -> SelfTestResult {
    let err = (dobrushin_bound(0.0, 1.0, 1.0) - E).abs()
        + (magnetized_gain(2, 1e-8, 1.0).unwrap_or(f64::NAN) - 2.0).abs();
    check("bound formulas", err, 1e-6)
}

pub fn run_selftest() -> Vec<SelfTestResult> {
    vec![
        free_flow_check(),
        transport_check(),
        poisson_check(),
        kinetic_check(),
        gronwall_check(),
        bound_check(),
    ]
}

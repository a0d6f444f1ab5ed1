//! Growth bound on velocity characteristics under `E` and a bounded `B`:
//! `|V(t)| <= |v| e^{t‖B‖∞} + ∫_0^t ‖E(s)‖∞ e^{(t-s)‖B‖∞} ds`.

use crate::error::{Error, Result};

use super::Trajectory;

#[derive(Clone, Debug, PartialEq)]
pub struct VelocityBoundSample {
    pub t: f64,
    /// Largest `|V_i(t)|` over particles.
    pub max_speed: f64,
    /// Smallest `bound_i(t) - |V_i(t)|` over particles.
    pub min_slack: f64,
    /// Speed and bound of the particle attaining `min_slack`.
    pub tight_speed: f64,
    pub tight_bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VelocityBoundReport {
    pub samples: Vec<VelocityBoundSample>,
    pub b_sup: f64,
}

impl VelocityBoundReport {
    pub fn min_slack(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.min_slack)
            .fold(f64::INFINITY, f64::min)
    }

    /// Nonnegative slack everywhere up to `tolerance`.
    pub fn holds(&self, tolerance: f64) -> bool {
        self.min_slack() >= -tolerance
    }
}

/// `∫_0^{t_k} g(s) e^{(t_k - s) b} ds` for every grid time `t_k`, trapezoid
/// rule on the grid. The recursion reproduces the full trapezoid sum at each `t_k`.
pub fn exp_weighted_integrals(times: &[f64], g: &[f64], b: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    for k in 0..times.len() {
        if k > 0 {
            let h = times[k] - times[k - 1];
            let grow = (h * b).exp();
            acc = acc * grow + 0.5 * h * (g[k - 1] * grow + g[k]);
        }
        out.push(acc);
    }
    out
}

/// Checks the velocity bound at every sample of `traj`. `e_sup` must be
/// sampled on `e_times`, a grid that contains every trajectory time (it may
/// be finer, e.g. one value per integration step).
pub fn velocity_bound_check<const D: usize>(
    traj: &Trajectory<D>,
    e_times: &[f64],
    e_sup: &[f64],
    b_sup: f64,
) -> Result<VelocityBoundReport> {
    if e_times.len() != e_sup.len() || e_times.is_empty() {
        return Err(Error::Precondition(
            "field series and its time grid differ in length".into(),
        ));
    }
    let integrals = exp_weighted_integrals(e_times, e_sup, b_sup);
    let initial = traj
        .states()
        .first()
        .ok_or_else(|| Error::Precondition("empty trajectory".into()))?;
    let mut samples = Vec::with_capacity(traj.len());
    for (t, state) in traj.times().iter().zip(traj.states()) {
        let k = e_times
            .iter()
            .position(|s| (s - t).abs() <= 1e-9 * (1.0 + t.abs()))
            .ok_or_else(|| Error::Precondition(format!("field series has no sample at t = {t}")))?;
        let grow = (t * b_sup).exp();
        let mut sample = VelocityBoundSample {
            t: *t,
            max_speed: 0.0,
            min_slack: f64::INFINITY,
            tight_speed: 0.0,
            tight_bound: 0.0,
        };
        for (p0, p) in initial.particles().iter().zip(state.particles()) {
            let speed = p.velocity.norm();
            let bound = p0.velocity.norm() * grow + integrals[k];
            sample.max_speed = sample.max_speed.max(speed);
            if bound - speed < sample.min_slack {
                sample.min_slack = bound - speed;
                sample.tight_speed = speed;
                sample.tight_bound = bound;
            }
        }
        samples.push(sample);
    }
    Ok(VelocityBoundReport { samples, b_sup })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{sample_ensemble, InitialCondition, PhaseEnsemble};
    use crate::fields::MagneticField;
    use crate::flow::{push_constant_b, push_nonuniform_b, UniformField};
    use crate::geometry::{TorusPoint, Vector};

    #[test]
    fn exp_weighted_integral_of_constant() {
        let times: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
        let ones = vec![1.0; times.len()];
        let r = exp_weighted_integrals(&times, &ones, 0.0);
        assert!((r[1000] - 1.0).abs() < 1e-12);
        let r = exp_weighted_integrals(&times, &ones, 1.0);
        // ∫_0^1 e^{1-s} ds = e - 1, trapezoid error ~ h²/12 (e - 1)
        assert!((r[1000] - (1f64.exp() - 1.0)).abs() < 2e-7);
    }

    #[test]
    fn rotation_only_has_positive_slack() {
        let omega = 2.0;
        let mut e =
            sample_ensemble::<2>(&InitialCondition::Maxwellian { sigma: 1.0 }, 20, 3).unwrap();
        let mut traj = Trajectory::new();
        traj.record(0.0, e.clone()).unwrap();
        let dt = 0.05;
        let zero = vec![Vector::<2>::zeros(); 20];
        let mut times = vec![0.0];
        for k in 1..=20 {
            e = push_constant_b(&e, &zero, omega, dt);
            traj.record(k as f64 * dt, e.clone()).unwrap();
            times.push(k as f64 * dt);
        }
        let esup = vec![0.0; times.len()];
        let r = velocity_bound_check(&traj, &times, &esup, omega).unwrap();
        assert!(r.samples[0].min_slack.abs() < 1e-12);
        assert!(r.samples[1..].iter().all(|s| s.min_slack > 0.0));
    }

    #[test]
    fn constant_field_aligned_data_attains_the_bound() {
        let e0 = 0.7;
        let v0 = Vector::<2>::new(0.4, 0.0);
        let mut e = PhaseEnsemble::equal_weight(vec![(TorusPoint::origin(), v0)]).unwrap();
        let field = UniformField(Vector::<2>::new(e0, 0.0));
        let no_b = MagneticField::uniform(0.0).unwrap();
        let mut traj = Trajectory::new();
        traj.record(0.0, e.clone()).unwrap();
        let dt = 0.1;
        let mut times = vec![0.0];
        for k in 0..10 {
            e = push_nonuniform_b(&e, &field, &no_b, k as f64 * dt, dt);
            times.push((k + 1) as f64 * dt);
            traj.record(times[k + 1], e.clone()).unwrap();
        }
        let r = velocity_bound_check(&traj, &times, &vec![e0; times.len()], 0.0).unwrap();
        for s in &r.samples {
            assert!(s.min_slack.abs() < 1e-12, "{s:?}");
        }
        assert!(r.holds(1e-12));
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let e = sample_ensemble::<2>(&InitialCondition::UniformCold, 2, 0).unwrap();
        let mut traj = Trajectory::new();
        traj.record(0.0, e.clone()).unwrap();
        traj.record(0.5, e).unwrap();
        assert!(velocity_bound_check(&traj, &[0.0, 1.0], &[0.0], 0.0).is_err());
        assert!(velocity_bound_check(&traj, &[0.0, 1.0], &[0.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn trajectory_enforces_time_order() {
        let e = sample_ensemble::<2>(&InitialCondition::UniformCold, 2, 0).unwrap();
        let mut traj = Trajectory::new();
        assert!(traj.record(0.5, e.clone()).is_err());
        traj.record(0.0, e.clone()).unwrap();
        assert!(traj.record(0.0, e.clone()).is_err());
        traj.record(0.25, e.clone()).unwrap();
        assert!(traj.state_at(0.25).is_ok());
        assert!(traj.state_at(0.3).is_err());
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,particle_id,x1,x2,v1,v2\n"));
        assert_eq!(text.lines().count(), 5);
    }
}

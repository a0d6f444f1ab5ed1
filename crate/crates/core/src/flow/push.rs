//! Time integrators for the full characteristic system.

use crate::ensemble::PhaseEnsemble;
use crate::fields::{FieldSample, MagneticField};
use crate::geometry::{cross_with, TorusPoint, Vector};

use super::gyration::{free_flow, free_flow_raw};

/// An electric (or mean-field) force that can be evaluated anywhere on the torus.
pub trait ElectricField<const D: usize>: Sync {
    /// `x` may be unwrapped; implementations are periodic.
    fn at(&self, t: f64, x: &Vector<D>) -> Vector<D>;
}

/// `E ≡ 0`.
pub struct NoField;

impl<const D: usize> ElectricField<D> for NoField {
    fn at(&self, _: f64, _: &Vector<D>) -> Vector<D> {
        Vector::zeros()
    }
}

/// Spatially constant field.
pub struct UniformField<const D: usize>(pub Vector<D>);

impl<const D: usize> ElectricField<D> for UniformField<D> {
    fn at(&self, _: f64, _: &Vector<D>) -> Vector<D> {
        self.0
    }
}

/// Closure-backed field; the closure receives a wrapped position.
pub struct FnField<F>(pub F);

impl<const D: usize, F> ElectricField<D> for FnField<F>
where
    F: Fn(f64, &Vector<D>) -> Vector<D> + Sync,
{
    fn at(&self, t: f64, x: &Vector<D>) -> Vector<D> {
        (self.0)(t, TorusPoint::wrap_finite(*x).coords())
    }
}

impl<const D: usize> ElectricField<D> for FieldSample {
    fn at(&self, _: f64, x: &Vector<D>) -> Vector<D> {
        self.efield_at(&TorusPoint::wrap_finite(*x))
    }
}

/// One kick–rotate–kick step with the same force for both half kicks.
/// With zero force this is exactly the free flow over `dt`.
pub fn push_constant_b<const D: usize>(
    ens: &PhaseEnsemble<D>,
    force: &[Vector<D>],
    omega: f64,
    dt: f64,
) -> PhaseEnsemble<D> {
    assert!(dt > 0.0, "time step must be positive");
    assert_eq!(force.len(), ens.len(), "one force per particle");
    ens.with_states(|i, p| {
        let half = 0.5 * dt * force[i];
        let v = p.velocity + half;
        let (x, v) = free_flow(omega, dt, 0.0, &p.position, &v);
        (x, v + half)
    })
}

/// Kick–rotate–kick where the closing half kick uses the force recomputed
/// at the new positions. Returns the new ensemble and that force, which is
/// the opening force of the next step.
pub fn push_constant_b_two_force<const D: usize, F>(
    ens: &PhaseEnsemble<D>,
    force: &[Vector<D>],
    omega: f64,
    dt: f64,
    force_at: F,
) -> (PhaseEnsemble<D>, Vec<Vector<D>>)
where
    F: Fn(&PhaseEnsemble<D>) -> Vec<Vector<D>>,
{
    assert!(dt > 0.0, "time step must be positive");
    let drifted = ens.with_states(|i, p| {
        let v = p.velocity + 0.5 * dt * force[i];
        free_flow(omega, dt, 0.0, &p.position, &v)
    });
    let next_force = force_at(&drifted);
    let out = drifted.with_states(|i, p| (p.position, p.velocity + 0.5 * dt * next_force[i]));
    (out, next_force)
}

/// One classical four-stage Runge–Kutta step of `Ẋ = V`, `V̇ = E + V ∧ B`
/// starting at time `t`. Positions are wrapped at the end of the step.
pub fn push_nonuniform_b<const D: usize, E: ElectricField<D> + ?Sized>(
    ens: &PhaseEnsemble<D>,
    efield: &E,
    bfield: &MagneticField,
    t: f64,
    dt: f64,
) -> PhaseEnsemble<D> {
    assert!(dt > 0.0, "time step must be positive");
    let rhs = |s: f64, x: &Vector<D>, v: &Vector<D>| -> (Vector<D>, Vector<D>) {
        let b = bfield.eval_raw(s, x);
        (*v, efield.at(s, x) + cross_with(v, &b))
    };
    ens.with_states(|_, p| {
        let x0 = *p.position.coords();
        let v0 = p.velocity;
        let (k1x, k1v) = rhs(t, &x0, &v0);
        let (k2x, k2v) = rhs(t + 0.5 * dt, &(x0 + 0.5 * dt * k1x), &(v0 + 0.5 * dt * k1v));
        let (k3x, k3v) = rhs(t + 0.5 * dt, &(x0 + 0.5 * dt * k2x), &(v0 + 0.5 * dt * k2v));
        let (k4x, k4v) = rhs(t + dt, &(x0 + dt * k3x), &(v0 + dt * k3v));
        let x = x0 + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        let v = v0 + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        (TorusPoint::wrap_finite(x), v)
    })
}

/// Exact force-free step for a constant field; used by tests as the reference.
pub fn free_flow_ensemble<const D: usize>(
    ens: &PhaseEnsemble<D>,
    omega: f64,
    tau: f64,
) -> PhaseEnsemble<D> {
    ens.with_states(|_, p| {
        let (x, v) = free_flow_raw(omega, tau, 0.0, p.position.coords(), &p.velocity);
        (TorusPoint::wrap_finite(x), v)
    })
}

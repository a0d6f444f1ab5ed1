use crate::ensemble::PhaseEnsemble;
use crate::error::{Error, Result};
use crate::flow::{renormalized_position, Trajectory};
use crate::geometry::{minimal_image, torus_displacement};
use crate::sum::pairwise_sum_by;

use super::Coupling;

/// Right end of the bracket for the kinetic fixed point, just below `1/e`.
pub const KINETIC_Q_UPPER: f64 = std::f64::consts::E.recip() - 1e-12;
const KINETIC_Q_LOWER: f64 = 1e-300;

fn states_at<'a, const D: usize>(
    a: &'a Trajectory<D>,
    b: &'a Trajectory<D>,
    t: f64,
) -> Result<(&'a PhaseEnsemble<D>, &'a PhaseEnsemble<D>)> {
    Ok((a.state_at(t)?, b.state_at(t)?))
}

fn check_indices<const D: usize>(
    pi: &Coupling,
    a: &PhaseEnsemble<D>,
    b: &PhaseEnsemble<D>,
) -> Result<()> {
    if pi
        .entries()
        .iter()
        .any(|&(i, j, _)| i >= a.len() || j >= b.len())
    {
        return Err(Error::Precondition(
            "coupling refers to particles outside the ensembles".into(),
        ));
    }
    Ok(())
}

/// `Σ mass · (|ΔX|² , |ΔV|²)` over the pairs of `pi`.
pub fn coupling_moments<const D: usize>(
    pi: &Coupling,
    a: &PhaseEnsemble<D>,
    b: &PhaseEnsemble<D>,
) -> Result<(f64, f64)> {
    check_indices(pi, a, b)?;
    let e = pi.entries();
    let (pa, pb) = (a.particles(), b.particles());
    let pos = pairwise_sum_by(e.len(), |k| {
        let (i, j, m) = e[k];
        m * torus_displacement(&pa[i].position, &pb[j].position).norm_squared()
    });
    let vel = pairwise_sum_by(e.len(), |k| {
        let (i, j, m) = e[k];
        m * (pa[i].velocity - pb[j].velocity).norm_squared()
    });
    Ok((pos, vel))
}

/// `Σ mass · (|ΔX| + |ΔV|)` for states already advanced to a common time.
pub fn dobrushin_functional_states<const D: usize>(
    pi: &Coupling,
    a: &PhaseEnsemble<D>,
    b: &PhaseEnsemble<D>,
) -> Result<f64> {
    check_indices(pi, a, b)?;
    let e = pi.entries();
    let (pa, pb) = (a.particles(), b.particles());
    Ok(pairwise_sum_by(e.len(), |k| {
        let (i, j, m) = e[k];
        m * (torus_displacement(&pa[i].position, &pb[j].position).norm()
            + (pa[i].velocity - pb[j].velocity).norm())
    }))
}

/// The coupling `pi` fixed at `t = 0` and transported by particle identity.
pub fn dobrushin_functional<const D: usize>(
    pi: &Coupling,
    traj_a: &Trajectory<D>,
    traj_b: &Trajectory<D>,
    t: f64,
) -> Result<f64> {
    let (a, b) = states_at(traj_a, traj_b, t)?;
    dobrushin_functional_states(pi, a, b)
}

/// `½ Σ mass · (λ|ΔX|² + |ΔV|²)`.
pub fn loeper_functional_states<const D: usize>(
    pi: &Coupling,
    a: &PhaseEnsemble<D>,
    b: &PhaseEnsemble<D>,
    lambda: f64,
) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!(
            "position weight must be positive, got {lambda}"
        )));
    }
    let (pos, vel) = coupling_moments(pi, a, b)?;
    Ok(0.5 * (lambda * pos + vel))
}

pub fn loeper_functional<const D: usize>(
    pi: &Coupling,
    traj_a: &Trajectory<D>,
    traj_b: &Trajectory<D>,
    t: f64,
    lambda: f64,
) -> Result<f64> {
    let (a, b) = states_at(traj_a, traj_b, t)?;
    loeper_functional_states(pi, a, b, lambda)
}

/// Outcome of the kinetic fixed-point search on `(0, 1/e)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KineticQ {
    Root(f64),
    /// `g` is still negative at the right end of the bracket; carries `g` there.
    OutsideRegime {
        endpoint_value: f64,
    },
}

impl KineticQ {
    pub fn value(self) -> Option<f64> {
        match self {
            Self::Root(q) => Some(q),
            Self::OutsideRegime { .. } => None,
        }
    }
}

/// Solves `Q = ½(a|log Q| + b)` on `(0, 1/e)`.
///
/// `g(Q) = Q - ½(a|log Q| + b)` is strictly increasing there, so the root is
/// unique when it exists.
pub fn kinetic_q_fixed_point(a: f64, b: f64) -> Result<KineticQ> {
    if !(a >= 0.0 && b >= 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::Domain(format!(
            "moments must be finite and nonnegative, got a = {a}, b = {b}"
        )));
    }
    if a == 0.0 && b == 0.0 {
        return Err(Error::Degenerate(
            "both moments vanish, the kinetic quantity is zero".into(),
        ));
    }
    let g = |q: f64| q - 0.5 * (a * q.ln().abs() + b);
    let right = g(KINETIC_Q_UPPER);
    if right < 0.0 {
        return Ok(KineticQ::OutsideRegime {
            endpoint_value: right,
        });
    }
    if a == 0.0 {
        return Ok(KineticQ::Root(0.5 * b));
    }
    let (mut lo, mut hi) = (KINETIC_Q_LOWER, KINETIC_Q_UPPER);
    if g(lo) >= 0.0 {
        return Ok(KineticQ::Root(lo));
    }
    for _ in 0..4000 {
        // Geometric steps while the bracket spans decades.
        let mid = if hi > 4.0 * lo {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(KineticQ::Root(if g(lo).abs() < g(hi).abs() {
        lo
    } else {
        hi
    }))
}

/// Kinetic quantity of the pairs of `pi` at the given states.
pub fn kinetic_quantity<const D: usize>(
    pi: &Coupling,
    a: &PhaseEnsemble<D>,
    b: &PhaseEnsemble<D>,
) -> Result<KineticQ> {
    let (pos, vel) = coupling_moments(pi, a, b)?;
    kinetic_q_fixed_point(pos, vel)
}

/// `Σ mass · (|X_ω(0) difference| + |ΔV|)` where each particle is pulled back
/// along the magnetized free flow before the positions are compared.
pub fn renormalized_functional_states<const D: usize>(
    pi: &Coupling,
    a: &PhaseEnsemble<D>,
    b: &PhaseEnsemble<D>,
    omega: f64,
    t: f64,
) -> Result<f64> {
    check_indices(pi, a, b)?;
    let e = pi.entries();
    let (pa, pb) = (a.particles(), b.particles());
    Ok(pairwise_sum_by(e.len(), |k| {
        let (i, j, m) = e[k];
        let (p, q) = (&pa[i], &pb[j]);
        let ya = renormalized_position(omega, t, &p.position, &p.velocity);
        let yb = renormalized_position(omega, t, &q.position, &q.velocity);
        m * (minimal_image(&(ya - yb)).norm() + (p.velocity - q.velocity).norm())
    }))
}

pub fn renormalized_functional<const D: usize>(
    pi: &Coupling,
    traj_a: &Trajectory<D>,
    traj_b: &Trajectory<D>,
    omega: f64,
    t: f64,
) -> Result<f64> {
    let (a, b) = states_at(traj_a, traj_b, t)?;
    renormalized_functional_states(pi, a, b, omega, t)
}

//! Unit torus `[0,1)^d` and the phase-space vector conventions.

use nalgebra::SVector;

use crate::error::{Error, Result};

/// Fixed-size real vector used for positions, velocities and forces.
pub type Vector<const D: usize> = SVector<f64, D>;

/// Velocities live in the whole of `R^d`; finiteness is checked when an
/// ensemble is assembled.
pub type Velocity<const D: usize> = Vector<D>;

/// A point of the unit torus. Every coordinate lies in `[0,1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorusPoint<const D: usize>(Vector<D>);

impl<const D: usize> TorusPoint<D> {
    /// Reduces `raw` modulo 1. Fails on non-finite input.
    pub fn wrap(raw: Vector<D>) -> Result<Self> {
        if raw.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite torus coordinate {raw:?}"
            )));
        }
        Ok(Self::wrap_finite(raw))
    }

    pub(crate) fn wrap_finite(raw: Vector<D>) -> Self {
        Self(raw.map(wrap_unit))
    }

    pub fn from_array(raw: [f64; D]) -> Result<Self> {
        Self::wrap(Vector::from(raw))
    }

    pub fn origin() -> Self {
        Self(Vector::zeros())
    }

    pub fn coords(&self) -> &Vector<D> {
        &self.0
    }

    /// Translates by an arbitrary real vector and wraps.
    pub fn translate(&self, by: &Vector<D>) -> Self {
        Self::wrap_finite(self.0 + by)
    }
}

fn wrap_unit(x: f64) -> f64 {
    let r = x - x.floor();
    // x slightly below an integer can round up to exactly 1.0
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Minimal-image representative of a raw difference: every coordinate in `[-1/2, 1/2)`.
pub fn minimal_image<const D: usize>(raw: &Vector<D>) -> Vector<D> {
    raw.map(|c| {
        let mut r = c - (c + 0.5).floor();
        if r >= 0.5 {
            r -= 1.0;
        }
        if r < -0.5 {
            r += 1.0;
        }
        r
    })
}

/// Reduces each coordinate of `x` modulo 1.
pub fn torus_wrap<const D: usize>(x: Vector<D>) -> Result<TorusPoint<D>> {
    TorusPoint::wrap(x)
}

/// Shortest representative of `x - y` on the torus.
pub fn torus_displacement<const D: usize>(x: &TorusPoint<D>, y: &TorusPoint<D>) -> Vector<D> {
    minimal_image(&(x.0 - y.0))
}

/// Geodesic distance on the unit torus.
pub fn torus_distance<const D: usize>(x: &TorusPoint<D>, y: &TorusPoint<D>) -> f64 {
    torus_displacement(x, y).norm()
}

/// Cross product `v ∧ b` restricted to the first `D` components. For `D = 2`
/// the velocity is embedded as `(v1, v2, 0)`.
pub fn cross_with<const D: usize>(v: &Vector<D>, b: &nalgebra::Vector3<f64>) -> Vector<D> {
    let v3 = nalgebra::Vector3::new(
        v[0],
        if D > 1 { v[1] } else { 0.0 },
        if D > 2 { v[2] } else { 0.0 },
    );
    let c = v3.cross(b);
    Vector::from_fn(|i, _| c[i])
}

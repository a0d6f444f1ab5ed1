//! Closed-form magnetized free transport for `B = (0, 0, ω)`.

use nalgebra::SMatrix;

use crate::geometry::{TorusPoint, Vector, Velocity};

/// Below this `|ωτ|` the gyration coefficients switch to their Taylor series.
pub const SMALL_ANGLE: f64 = 1e-4;

/// `sin(ωτ)/ω`.
pub(crate) fn sin_over_omega(omega: f64, tau: f64) -> f64 {
    let x = omega * tau;
    if x.abs() < SMALL_ANGLE {
        let x2 = x * x;
        tau * (1.0 - x2 / 6.0 + x2 * x2 / 120.0)
    } else {
        x.sin() / omega
    }
}

/// `(1 - cos(ωτ))/ω`, evaluated as `2 sin²(ωτ/2)/ω` to avoid cancellation.
pub(crate) fn one_minus_cos_over_omega(omega: f64, tau: f64) -> f64 {
    let x = omega * tau;
    if x.abs() < SMALL_ANGLE {
        let x2 = x * x;
        0.5 * x * tau * (1.0 - x2 / 12.0 + x2 * x2 / 360.0)
    } else {
        let s = (0.5 * x).sin();
        2.0 * s * s / omega
    }
}

/// Rotation of the first two coordinates by angle `ωt`; identity on the third.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationMatrix<const D: usize>(pub SMatrix<f64, D, D>);

impl<const D: usize> RotationMatrix<D> {
    pub fn apply(&self, v: &Vector<D>) -> Vector<D> {
        self.0 * v
    }

    pub fn matrix(&self) -> &SMatrix<f64, D, D> {
        &self.0
    }
}

/// `R_ω(t) = [[cos ωt, -sin ωt], [sin ωt, cos ωt]]` (plus a unit third row in 3D).
pub fn rotation<const D: usize>(omega: f64, t: f64) -> RotationMatrix<D> {
    let (s, c) = (omega * t).sin_cos();
    let mut m = SMatrix::<f64, D, D>::identity();
    m[(0, 0)] = c;
    m[(0, 1)] = -s;
    m[(1, 0)] = s;
    m[(1, 1)] = c;
    RotationMatrix(m)
}

/// `D_ω(t)/ω`, the map taking a velocity to the displacement that undoes
/// free gyration over `[0, t]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriftMatrix<const D: usize>(pub SMatrix<f64, D, D>);

impl<const D: usize> DriftMatrix<D> {
    pub fn new(omega: f64, t: f64) -> Self {
        Self(displacement_matrix(omega, -t))
    }

    pub fn apply(&self, v: &Vector<D>) -> Vector<D> {
        self.0 * v
    }

    pub fn matrix(&self) -> &SMatrix<f64, D, D> {
        &self.0
    }
}

/// Matrix `M(τ)` with `X_ω(t+τ; t, x, v) = x + M(τ) v`.
fn displacement_matrix<const D: usize>(omega: f64, tau: f64) -> SMatrix<f64, D, D> {
    let s = sin_over_omega(omega, tau);
    let c = one_minus_cos_over_omega(omega, tau);
    let mut m = SMatrix::<f64, D, D>::zeros();
    m[(0, 0)] = s;
    m[(0, 1)] = c;
    m[(1, 0)] = -c;
    m[(1, 1)] = s;
    for k in 2..D {
        m[(k, k)] = tau;
    }
    m
}

/// `(D_ω(t)/ω) v`.
pub fn drift_apply<const D: usize>(omega: f64, t: f64, v: &Velocity<D>) -> Vector<D> {
    DriftMatrix::new(omega, t).apply(v)
}

/// Unwrapped free-transport characteristic `(X_ω(s; t, x, v), V_ω(s; t, x, v))`.
pub(crate) fn free_flow_raw<const D: usize>(
    omega: f64,
    s: f64,
    t: f64,
    x: &Vector<D>,
    v: &Velocity<D>,
) -> (Vector<D>, Velocity<D>) {
    let tau = s - t;
    let x_new = x + displacement_matrix::<D>(omega, tau) * v;
    // V_ω(s; t, x, v) = R_ω(t - s) v
    let v_new = rotation::<D>(omega, -tau).apply(v);
    (x_new, v_new)
}

/// Magnetized free-transport flow from time `t` to time `s`, position wrapped.
pub fn free_flow<const D: usize>(
    omega: f64,
    s: f64,
    t: f64,
    x: &TorusPoint<D>,
    v: &Velocity<D>,
) -> (TorusPoint<D>, Velocity<D>) {
    let (xs, vs) = free_flow_raw(omega, s, t, x.coords(), v);
    (TorusPoint::wrap_finite(xs), vs)
}

/// `X_ω(0; t, X, V) = X + (D_ω(t)/ω) V`, deliberately left unwrapped.
pub fn renormalized_position<const D: usize>(
    omega: f64,
    t: f64,
    x: &TorusPoint<D>,
    v: &Velocity<D>,
) -> Vector<D> {
    x.coords() + drift_apply(omega, t, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::minimal_image;
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn rotation_examples() {
        assert_eq!(rotation::<2>(0.0, 3.0).0, SMatrix::<f64, 2, 2>::identity());
        assert_eq!(rotation::<3>(5.0, 0.0).0, SMatrix::<f64, 3, 3>::identity());
        let r = rotation::<2>(1.0, PI / 2.0);
        assert!((r.apply(&Vector::<2>::new(1.0, 0.0)) - Vector::<2>::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn rotation_is_orthogonal_with_unit_determinant() {
        for (w, t) in [(0.3, 1.0), (2.0, 7.1), (8.0, 0.05)] {
            let r = rotation::<3>(w, t).0;
            assert!((r.transpose() * r - SMatrix::<f64, 3, 3>::identity()).norm() < 1e-14);
            assert!((r.determinant() - 1.0).abs() < 1e-14);
            assert_eq!(r[(2, 2)], 1.0);
        }
    }

    #[test]
    fn drift_matrix_structure() {
        assert_eq!(
            DriftMatrix::<3>::new(2.0, 0.0).0,
            SMatrix::<f64, 3, 3>::zeros()
        );
        assert_eq!(DriftMatrix::<3>::new(2.0, 1.7).0[(2, 2)], -1.7);
        assert_eq!(DriftMatrix::<3>::new(0.0, 1.7).0[(2, 2)], -1.7);
        // matches the trigonometric entries of D_ω(t)/ω
        let (w, t) = (1.3, 0.8);
        let m = DriftMatrix::<2>::new(w, t).0;
        let expect = SMatrix::<f64, 2, 2>::new(
            -(w * t).sin(),
            1.0 - (w * t).cos(),
            (w * t).cos() - 1.0,
            -(w * t).sin(),
        ) / w;
        assert!((m - expect).norm() < 1e-15);
    }

    #[test]
    fn drift_examples() {
        let v = Vector::<2>::new(0.4, -1.1);
        assert_eq!(drift_apply(3.0, 0.0, &v), Vector::<2>::zeros());
        // vanishing field: X - tV
        let t = 0.9;
        let r = drift_apply(1e-8, t, &v);
        for k in 0..2 {
            assert!(((r[k] + t * v[k]) / (t * v[k])).abs() < 1e-6);
        }
        // ω = π, t = 1, v = (1, 0): norm 2/π
        let r = drift_apply(PI, 1.0, &Vector::<2>::new(1.0, 0.0));
        assert!((r.norm() - 2.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn taylor_and_trig_branches_agree_at_crossover() {
        for omega in [1.0, 3.0, 1e-3] {
            let t = SMALL_ANGLE / omega;
            for (a, b) in [(t * (1.0 - 1e-12), t * (1.0 + 1e-12))] {
                let sa = sin_over_omega(omega, a);
                let sb = sin_over_omega(omega, b);
                let ca = one_minus_cos_over_omega(omega, a);
                let cb = one_minus_cos_over_omega(omega, b);
                assert!(((sa - sb) / sb).abs() < 1e-10);
                assert!(((ca - cb) / cb).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn free_flow_examples() {
        let x = TorusPoint::<3>::from_array([0.1, 0.2, 0.3]).unwrap();
        let v = Vector::<3>::new(0.5, -0.25, 2.0);
        assert_eq!(free_flow(2.0, 1.5, 1.5, &x, &v), (x, v));
        let (xs, vs) = free_flow(0.0, 1.0, 0.0, &x, &v);
        assert!((minimal_image(&(xs.coords() - x.translate(&v).coords()))).norm() < 1e-15);
        assert_eq!(vs, v);

        let x2 = TorusPoint::<2>::from_array([0.1, 0.7]).unwrap();
        let v2 = Vector::<2>::new(0.3, -0.8);
        let (xp, vp) = free_flow(2.0 * PI, 1.0, 0.0, &x2, &v2);
        assert!(minimal_image(&(xp.coords() - x2.coords())).norm() < 1e-14);
        assert!((vp - v2).norm() < 1e-14);
    }

    #[test]
    fn free_flow_solves_the_characteristic_ode() {
        // dX/ds = V, dV/ds = V ∧ (0,0,ω), checked by central differences
        let (w, t) = (1.7, 0.4);
        let x = Vector::<3>::new(0.2, 0.4, 0.6);
        let v = Vector::<3>::new(0.9, -0.3, 0.5);
        let s = 1.3;
        let h = 1e-5;
        let (xp, vp) = free_flow_raw(w, s + h, t, &x, &v);
        let (xm, vm) = free_flow_raw(w, s - h, t, &x, &v);
        let (_, vs) = free_flow_raw(w, s, t, &x, &v);
        let dx = (xp - xm) / (2.0 * h);
        let dv = (vp - vm) / (2.0 * h);
        assert!((dx - vs).norm() < 1e-9);
        let lorentz = Vector::<3>::new(vs[1] * w, -vs[0] * w, 0.0);
        assert!((dv - lorentz).norm() < 1e-9);
    }

    #[test]
    fn renormalized_position_examples() {
        let x = TorusPoint::<2>::from_array([0.3, 0.9]).unwrap();
        let v = Vector::<2>::new(1.0, 2.0);
        assert_eq!(renormalized_position(1.0, 0.0, &x, &v), *x.coords());
        assert_eq!(
            renormalized_position(1.0, 5.0, &x, &Vector::zeros()),
            *x.coords()
        );
        // constant along an exact free-flow trajectory
        let base = renormalized_position(1.0, 0.0, &x, &v);
        for k in 1..20 {
            let t = 0.37 * k as f64;
            let (xt, vt) = free_flow(1.0, t, 0.0, &x, &v);
            let r = renormalized_position(1.0, t, &xt, &vt);
            assert!(minimal_image(&(r - base)).norm() < 1e-10);
        }
    }

    fn arb_state() -> impl Strategy<Value = ([f64; 3], [f64; 3])> {
        (
            proptest::array::uniform3(0.0..1.0f64),
            proptest::array::uniform3(-3.0..3.0f64),
        )
    }

    proptest! {
        #[test]
        fn rotation_group_property(w in 0.0..10.0f64, t in -5.0..5.0f64, s in -5.0..5.0f64) {
            let a = rotation::<3>(w, t).0 * rotation::<3>(w, s).0;
            prop_assert!((a - rotation::<3>(w, t + s).0).norm() < 1e-12);
        }

        #[test]
        fn rotation_is_an_isometry(w in 0.0..10.0f64, t in -5.0..5.0f64, v in proptest::array::uniform2(-10.0..10.0f64)) {
            let v = Vector::<2>::from(v);
            prop_assert!((rotation::<2>(w, t).apply(&v).norm() - v.norm()).abs() < 1e-13);
        }

        #[test]
        fn free_flow_composes(w in 0.0..6.0f64, (x, v) in arb_state(), t in -2.0..2.0f64, s in -2.0..2.0f64, u in -2.0..2.0f64) {
            let (x, v) = (Vector::<3>::from(x), Vector::<3>::from(v));
            let (xs, vs) = free_flow_raw(w, s, t, &x, &v);
            let (xu, vu) = free_flow_raw(w, u, s, &xs, &vs);
            let (xd, vd) = free_flow_raw(w, u, t, &x, &v);
            prop_assert!((xu - xd).norm() < 1e-10);
            prop_assert!((vu - vd).norm() < 1e-10);
        }

        #[test]
        fn free_flow_preserves_volume(w in 0.0..6.0f64, (x, v) in arb_state(), tau in -3.0..3.0f64) {
            let h = 1e-6;
            let z = [x[0], x[1], x[2], v[0], v[1], v[2]];
            let mut jac = DMatrix::<f64>::zeros(6, 6);
            for c in 0..6 {
                let mut zp = z;
                let mut zm = z;
                zp[c] += h;
                zm[c] -= h;
                let f = |z: [f64; 6]| {
                    let (a, b) = free_flow_raw(w, tau, 0.0, &Vector::<3>::new(z[0], z[1], z[2]), &Vector::<3>::new(z[3], z[4], z[5]));
                    [a[0], a[1], a[2], b[0], b[1], b[2]]
                };
                let (fp, fm) = (f(zp), f(zm));
                for r in 0..6 {
                    jac[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
                }
            }
            prop_assert!((jac.determinant() - 1.0).abs() < 1e-6);
        }

        #[test]
        fn renormalized_velocity_gap_is_isometric(w in 0.0..6.0f64, t in 0.0..4.0f64, a in proptest::array::uniform3(-3.0..3.0f64), b in proptest::array::uniform3(-3.0..3.0f64)) {
            let (v1, v2) = (Vector::<3>::from(a), Vector::<3>::from(b));
            let r = rotation::<3>(w, t);
            prop_assert!(((r.apply(&v1) - r.apply(&v2)).norm() - (v1 - v2).norm()).abs() < 1e-13);
        }

        #[test]
        fn drift_norm_identity(w in 0.0..6.0f64, t in 0.0..4.0f64, v in proptest::array::uniform3(-3.0..3.0f64)) {
            let v = Vector::<3>::from(v);
            let r = drift_apply(w, t, &v);
            let c = one_minus_cos_over_omega(w, t);
            // 2(1 - cos ωt)/ω² = 2 c / ω, written without dividing by ω
            let g = if w == 0.0 { t * t } else { 2.0 * c / w };
            let expect = (v[0] * v[0] + v[1] * v[1]) * g + t * t * v[2] * v[2];
            prop_assert!((r.norm_squared() - expect).abs() < 1e-12 * (1.0 + expect));
        }
    }
}

//! External magnetic fields and their sup / Hölder norms.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geometry::{torus_distance, TorusPoint, Vector};

pub type FieldFn = Arc<dyn Fn(f64, &[f64]) -> Vector3<f64> + Send + Sync>;

/// Norms known in closed form for a field model. They take precedence over
/// probing, which only ever gives a lower estimate.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DeclaredNorms {
    pub sup: Option<f64>,
    /// `(α, seminorm)` pairs.
    pub holder: Vec<(f64, f64)>,
}

#[derive(Clone)]
pub enum MagneticField {
    /// `B = (0, 0, ω)`, `ω >= 0`.
    ConstantUniform { omega: f64 },
    /// Arbitrary `B(t, x)`; for `d = 2` only the third component is used.
    AnalyticNonUniform {
        label: String,
        field: FieldFn,
        declared: DeclaredNorms,
    },
}

impl fmt::Debug for MagneticField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ConstantUniform { omega } => write!(f, "ConstantUniform(ω={omega})"),
            Self::AnalyticNonUniform {
                label, declared, ..
            } => write!(f, "AnalyticNonUniform({label}, {declared:?})"),
        }
    }
}

impl MagneticField {
    pub fn uniform(omega: f64) -> Result<Self> {
        if !(omega >= 0.0) || !omega.is_finite() {
            return Err(Error::Domain(format!(
                "gyrofrequency must be finite and >= 0, got {omega}"
            )));
        }
        Ok(Self::ConstantUniform { omega })
    }

    /// Planar field `B = (0, 0, b(t, x))`.
    pub fn planar<F>(label: impl Into<String>, b: F, declared: DeclaredNorms) -> Self
    where
        F: Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
    {
        Self::AnalyticNonUniform {
            label: label.into(),
            field: Arc::new(move |t, x| Vector3::new(0.0, 0.0, b(t, x))),
            declared,
        }
    }

    /// `b(x) = offset + amplitude · sin(2π x1)` with declared norms.
    pub fn sine(amplitude: f64, offset: f64) -> Self {
        let declared = DeclaredNorms {
            sup: Some(offset.abs() + amplitude.abs()),
            holder: [0.25, 0.5, 0.75, 0.9]
                .iter()
                .map(|&a| (a, amplitude.abs() * sine_holder_seminorm(a)))
                .collect(),
        };
        Self::planar(
            format!("sine(amplitude={amplitude}, offset={offset})"),
            move |_, x| offset + amplitude * (2.0 * PI * x[0]).sin(),
            declared,
        )
    }

    pub fn label(&self) -> String {
        match self {
            Self::ConstantUniform { omega } => format!("uniform(omega={omega})"),
            Self::AnalyticNonUniform { label, .. } => label.clone(),
        }
    }

    pub fn gyrofrequency(&self) -> Option<f64> {
        match self {
            Self::ConstantUniform { omega } => Some(*omega),
            Self::AnalyticNonUniform { .. } => None,
        }
    }

    pub fn declared(&self) -> DeclaredNorms {
        match self {
            Self::ConstantUniform { omega } => DeclaredNorms {
                sup: Some(*omega),
                holder: vec![],
            },
            Self::AnalyticNonUniform { declared, .. } => declared.clone(),
        }
    }

    pub fn eval<const D: usize>(&self, t: f64, x: &TorusPoint<D>) -> Vector3<f64> {
        self.eval_raw(t, x.coords())
    }

    /// Evaluation at an unwrapped position; the position is reduced to the torus first.
    pub(crate) fn eval_raw<const D: usize>(&self, t: f64, x: &Vector<D>) -> Vector3<f64> {
        match self {
            Self::ConstantUniform { omega } => Vector3::new(0.0, 0.0, *omega),
            Self::AnalyticNonUniform { field, .. } => {
                let wrapped = TorusPoint::wrap_finite(*x);
                let b = field(t, wrapped.coords().as_slice());
                if D == 2 {
                    Vector3::new(0.0, 0.0, b[2])
                } else {
                    b
                }
            }
        }
    }
}

/// `B(t, x)`.
pub fn eval_b<const D: usize>(model: &MagneticField, t: f64, x: &TorusPoint<D>) -> Vector3<f64> {
    model.eval(t, x)
}

/// `sup_{0<h<=1/2} 2 sin(π h) / h^α`, the Hölder seminorm of `sin(2π x)`
/// on the unit circle, by a dense scan refined with golden-section search.
pub fn sine_holder_seminorm(alpha: f64) -> f64 {
    let g = |h: f64| 2.0 * (PI * h).sin() / h.powf(alpha);
    let steps = 20_000;
    let (mut best_h, mut best) = (0.5, g(0.5));
    for i in 1..steps {
        let h = 0.5 * i as f64 / steps as f64;
        if g(h) > best {
            best = g(h);
            best_h = h;
        }
    }
    let (mut lo, mut hi) = (
        (best_h - 0.5 / steps as f64).max(1e-12),
        (best_h + 0.5 / steps as f64).min(0.5),
    );
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let a = hi - phi * (hi - lo);
        let b = lo + phi * (hi - lo);
        if g(a) > g(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    best.max(g(0.5 * (lo + hi)))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldNorms {
    pub sup: f64,
    pub holder_seminorm: f64,
    /// True when at least one value came from probing rather than a declaration.
    pub probed: bool,
}

impl FieldNorms {
    /// `‖B‖_{L^∞(C^{0,α})}`: sup norm plus seminorm.
    pub fn holder_norm(&self) -> f64 {
        self.sup + self.holder_seminorm
    }
}

/// Probe-grid estimates of `sup |B|` and `sup |B(x)-B(y)| / |x-y|^α` over
/// `[0, T] x T^d`, using `probe_times` equally spaced times.
pub fn probe_b_norms<const D: usize>(
    model: &MagneticField,
    horizon: f64,
    alpha: f64,
    n: usize,
    probe_times: usize,
) -> Result<FieldNorms> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!(
            "Hölder exponent must lie in (0,1), got {alpha}"
        )));
    }
    if let MagneticField::ConstantUniform { omega } = model {
        return Ok(FieldNorms {
            sup: *omega,
            holder_seminorm: 0.0,
            probed: false,
        });
    }
    let points: Vec<TorusPoint<D>> = (0..n.pow(D as u32))
        .map(|flat| {
            let mut x = Vector::<D>::zeros();
            let mut rest = flat;
            for k in (0..D).rev() {
                x[k] = (rest % n) as f64 / n as f64;
                rest /= n;
            }
            TorusPoint::wrap_finite(x)
        })
        .collect();
    let times: Vec<f64> = if probe_times <= 1 {
        vec![0.0]
    } else {
        (0..probe_times)
            .map(|i| horizon * i as f64 / (probe_times - 1) as f64)
            .collect()
    };
    let (mut sup, mut semi) = (0.0f64, 0.0f64);
    for &t in &times {
        let vals: Vec<Vector3<f64>> = points.iter().map(|x| model.eval(t, x)).collect();
        for (i, bi) in vals.iter().enumerate() {
            sup = sup.max(bi.norm());
            for j in 0..i {
                let r = torus_distance(&points[i], &points[j]);
                semi = semi.max((bi - vals[j]).norm() / r.powf(alpha));
            }
        }
    }
    Ok(FieldNorms {
        sup,
        holder_seminorm: semi,
        probed: true,
    })
}

/// Sup norm and Hölder seminorm, preferring declared values over probing.
pub fn b_norms<const D: usize>(
    model: &MagneticField,
    horizon: f64,
    alpha: f64,
    n: usize,
) -> Result<FieldNorms> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!(
            "Hölder exponent must lie in (0,1), got {alpha}"
        )));
    }
    let declared = model.declared();
    let declared_semi = declared
        .holder
        .iter()
        .find(|(a, _)| (a - alpha).abs() < 1e-12)
        .map(|(_, s)| *s);
    if let MagneticField::ConstantUniform { omega } = model {
        return Ok(FieldNorms {
            sup: *omega,
            holder_seminorm: 0.0,
            probed: false,
        });
    }
    match (declared.sup, declared_semi) {
        (Some(sup), Some(holder_seminorm)) => Ok(FieldNorms {
            sup,
            holder_seminorm,
            probed: false,
        }),
        _ => {
            let probed = probe_b_norms::<D>(model, horizon, alpha, n, 5)?;
            Ok(FieldNorms {
                sup: declared.sup.unwrap_or(probed.sup),
                holder_seminorm: declared_semi.unwrap_or(probed.holder_seminorm),
                probed: true,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_field_evaluation() {
        let b = MagneticField::uniform(2.0).unwrap();
        for t in [0.0, 1.0, 7.5] {
            let x = TorusPoint::<3>::from_array([0.3, 0.1, 0.9]).unwrap();
            assert_eq!(eval_b(&b, t, &x), Vector3::new(0.0, 0.0, 2.0));
        }
        assert!(MagneticField::uniform(-1.0).is_err());
    }

    #[test]
    fn planar_closure_evaluation() {
        let b = MagneticField::sine(1.0, 0.0);
        let x = TorusPoint::<2>::from_array([0.25, 0.0]).unwrap();
        assert!((eval_b(&b, 0.0, &x) - Vector3::new(0.0, 0.0, 1.0)).norm() < 1e-15);
        let lin = MagneticField::planar("t*x1", |t, x| t * x[0], DeclaredNorms::default());
        assert_eq!(
            eval_b(&lin, 0.0, &TorusPoint::<2>::from_array([0.7, 0.2]).unwrap()),
            Vector3::zeros()
        );
    }

    #[test]
    fn planar_model_ignores_in_plane_components_in_2d() {
        let m = MagneticField::AnalyticNonUniform {
            label: "tilted".into(),
            field: Arc::new(|_, _| Vector3::new(1.0, 1.0, 3.0)),
            declared: DeclaredNorms::default(),
        };
        let x2 = TorusPoint::<2>::origin();
        let x3 = TorusPoint::<3>::origin();
        assert_eq!(m.eval(0.0, &x2), Vector3::new(0.0, 0.0, 3.0));
        assert_eq!(m.eval(0.0, &x3), Vector3::new(1.0, 1.0, 3.0));
    }

    #[test]
    fn norms_of_uniform_field_are_exact() {
        let b = MagneticField::uniform(1.5).unwrap();
        for n in [2, 5, 11] {
            let r = b_norms::<2>(&b, 1.0, 0.5, n).unwrap();
            assert_eq!((r.sup, r.holder_seminorm), (1.5, 0.0));
            let p = probe_b_norms::<3>(&b, 1.0, 0.3, n, 3).unwrap();
            assert_eq!(p.holder_seminorm, 0.0);
        }
    }

    #[test]
    fn sine_field_norms() {
        let b = MagneticField::sine(1.0, 0.0);
        let r = b_norms::<2>(&b, 1.0, 0.5, 8).unwrap();
        assert_eq!(r.sup, 1.0);
        assert!(!r.probed);
        assert!(r.holder_seminorm.is_finite() && r.holder_seminorm >= 2.0);
        assert!(b_norms::<2>(&b, 1.0, 1.0, 8).is_err());
        assert!(b_norms::<2>(&b, 1.0, 0.0, 8).is_err());
    }

    #[test]
    fn probing_refines_monotonically_toward_declared_value() {
        let b = MagneticField::sine(1.0, 0.0);
        let exact = sine_holder_seminorm(0.5);
        let mut prev = 0.0;
        for n in [4, 8, 16, 32] {
            let p = probe_b_norms::<2>(&b, 1.0, 0.5, n, 1).unwrap();
            assert!(p.holder_seminorm >= prev - 1e-12);
            assert!(p.holder_seminorm <= exact + 1e-9);
            assert!(p.sup <= 1.0 + 1e-15);
            prev = p.holder_seminorm;
        }
        assert!(exact - prev < 0.05 * exact);
    }

    #[test]
    fn sine_seminorm_oracle() {
        // lower bound from the probe pair (0.25, 0): |sin(π/2) - 0| / 0.25^{1/2} = 2
        let s = sine_holder_seminorm(0.5);
        assert!(s >= 2.0);
        // a scan at a different resolution finds nothing larger
        let scan = (1..=100_000)
            .map(|i| 0.5 * i as f64 / 100_000.0)
            .map(|h| 2.0 * (PI * h).sin() / h.sqrt())
            .fold(0.0, f64::max);
        assert!(scan <= s + 1e-12 && s - scan < 1e-8);
    }
}

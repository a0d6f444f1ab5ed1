//! Smooth interaction kernels and the mean-field force `∇(K ∗ ρ)` of an
//! empirical measure.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::ensemble::PhaseEnsemble;
use crate::geometry::{torus_displacement, Vector};
use crate::sum::pairwise_sum_vec;

const TAU: f64 = 2.0 * PI;

/// A periodic `C^{1,1}` interaction potential on the unit torus.
pub trait InteractionKernel<const D: usize>: Send + Sync {
    fn potential(&self, dx: &Vector<D>) -> f64;

    fn gradient(&self, dx: &Vector<D>) -> Vector<D>;

    /// `‖D²K‖_∞` when it is known in closed form.
    fn analytic_hessian_bound(&self) -> Option<f64> {
        None
    }

    fn name(&self) -> String;

    /// `force_i = Σ_j w_j ∇K(x_i - x_j)`, self term included.
    fn forces(&self, ens: &PhaseEnsemble<D>) -> Vec<Vector<D>> {
        let ps = ens.particles();
        ps.par_iter()
            .map(|target| {
                let s = pairwise_sum_vec::<D, _>(ps.len(), |j| {
                    let g = self.gradient(&torus_displacement(&target.position, &ps[j].position));
                    let mut out = [0.0; D];
                    for k in 0..D {
                        out[k] = ps[j].weight * g[k];
                    }
                    out
                });
                Vector::from(s)
            })
            .collect()
    }
}

/// `K ≡ 0`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroKernel;

impl<const D: usize> InteractionKernel<D> for ZeroKernel {
    fn potential(&self, _: &Vector<D>) -> f64 {
        0.0
    }

    fn gradient(&self, _: &Vector<D>) -> Vector<D> {
        Vector::zeros()
    }

    fn analytic_hessian_bound(&self) -> Option<f64> {
        Some(0.0)
    }

    fn name(&self) -> String {
        "zero".into()
    }

    fn forces(&self, ens: &PhaseEnsemble<D>) -> Vec<Vector<D>> {
        vec![Vector::zeros(); ens.len()]
    }
}

/// `K(x) = a cos(2π x1) / (4π²)`, so `‖D²K‖_∞ = |a|`.
#[derive(Clone, Copy, Debug)]
pub struct CosineKernel {
    pub amplitude: f64,
}

impl<const D: usize> InteractionKernel<D> for CosineKernel {
    fn potential(&self, dx: &Vector<D>) -> f64 {
        self.amplitude * (TAU * dx[0]).cos() / (TAU * TAU)
    }

    fn gradient(&self, dx: &Vector<D>) -> Vector<D> {
        let mut g = Vector::zeros();
        g[0] = -self.amplitude * (TAU * dx[0]).sin() / TAU;
        g
    }

    fn analytic_hessian_bound(&self) -> Option<f64> {
        Some(self.amplitude.abs())
    }

    fn name(&self) -> String {
        format!("cosine(a={})", self.amplitude)
    }
}

/// `K(x) = a cos(2π x1) cos(2π x2) / (4π²)`.
///
/// The Hessian is `a [[-c1c2, s1s2], [s1s2, -c1c2]]` with eigenvalues
/// `-a cos(2π(x1 ± x2))`, hence `‖D²K‖_∞ = |a|`.
#[derive(Clone, Copy, Debug)]
pub struct CosineProductKernel {
    pub amplitude: f64,
}

impl<const D: usize> InteractionKernel<D> for CosineProductKernel {
    fn potential(&self, dx: &Vector<D>) -> f64 {
        self.amplitude * (TAU * dx[0]).cos() * (TAU * dx[1]).cos() / (TAU * TAU)
    }

    fn gradient(&self, dx: &Vector<D>) -> Vector<D> {
        let (s1, c1) = (TAU * dx[0]).sin_cos();
        let (s2, c2) = (TAU * dx[1]).sin_cos();
        let mut g = Vector::zeros();
        g[0] = -self.amplitude * s1 * c2 / TAU;
        g[1] = -self.amplitude * c1 * s2 / TAU;
        g
    }

    fn analytic_hessian_bound(&self) -> Option<f64> {
        Some(self.amplitude.abs())
    }

    fn name(&self) -> String {
        format!("cosine_product(a={})", self.amplitude)
    }

    /// Same pair sum, with the per-particle phases computed once: the pair
    /// phases follow from the angle-difference identities.
    fn forces(&self, ens: &PhaseEnsemble<D>) -> Vec<Vector<D>> {
        let ps = ens.particles();
        let phases: Vec<[f64; 4]> = ps
            .iter()
            .map(|p| {
                let (s1, c1) = (TAU * p.position.coords()[0]).sin_cos();
                let (s2, c2) = (TAU * p.position.coords()[1]).sin_cos();
                [s1, c1, s2, c2]
            })
            .collect();
        let scale = -self.amplitude / TAU;
        phases
            .par_iter()
            .map(|pi| {
                let s = pairwise_sum_vec::<2, _>(ps.len(), |j| {
                    let pj = &phases[j];
                    let sin1 = pi[0] * pj[1] - pi[1] * pj[0];
                    let cos1 = pi[1] * pj[1] + pi[0] * pj[0];
                    let sin2 = pi[2] * pj[3] - pi[3] * pj[2];
                    let cos2 = pi[3] * pj[3] + pi[2] * pj[2];
                    let w = ps[j].weight;
                    [w * sin1 * cos2, w * cos1 * sin2]
                });
                let mut f = Vector::zeros();
                f[0] = scale * s[0];
                f[1] = scale * s[1];
                f
            })
            .collect()
    }
}

pub type PotentialFn<const D: usize> = Arc<dyn Fn(&Vector<D>) -> f64 + Send + Sync>;
pub type GradientFn<const D: usize> = Arc<dyn Fn(&Vector<D>) -> Vector<D> + Send + Sync>;

/// User-supplied kernel. Its Hessian bound has to be probed.
#[derive(Clone)]
pub struct ClosureKernel<const D: usize> {
    pub label: String,
    pub potential: PotentialFn<D>,
    pub gradient: GradientFn<D>,
}

impl<const D: usize> InteractionKernel<D> for ClosureKernel<D> {
    fn potential(&self, dx: &Vector<D>) -> f64 {
        (self.potential)(dx)
    }

    fn gradient(&self, dx: &Vector<D>) -> Vector<D> {
        (self.gradient)(dx)
    }

    fn name(&self) -> String {
        self.label.clone()
    }
}

/// Per-particle mean-field force of a smooth kernel.
pub fn kernel_force<const D: usize, K: InteractionKernel<D> + ?Sized>(
    ens: &PhaseEnsemble<D>,
    kernel: &K,
) -> Vec<Vector<D>> {
    kernel.forces(ens)
}

/// `H = ‖D²K‖_∞`: the analytic value for built-in kernels, otherwise the
/// largest spectral norm of a central-difference Hessian over an `n^d` probe grid.
pub fn kernel_hessian_bound<const D: usize, K: InteractionKernel<D> + ?Sized>(
    kernel: &K,
    n: usize,
) -> f64 {
    if let Some(h) = kernel.analytic_hessian_bound() {
        return h;
    }
    probe_hessian_bound(kernel, n)
}

/// Finite-difference estimate of `‖D²K‖_∞`, ignoring any analytic value.
pub fn probe_hessian_bound<const D: usize, K: InteractionKernel<D> + ?Sized>(
    kernel: &K,
    n: usize,
) -> f64 {
    let h = 1e-4;
    let mut best: f64 = 0.0;
    let total = n.pow(D as u32);
    for flat in 0..total {
        let mut x = Vector::<D>::zeros();
        let mut rest = flat;
        for k in (0..D).rev() {
            x[k] = (rest % n) as f64 / n as f64;
            rest /= n;
        }
        let mut hess = DMatrix::<f64>::zeros(D, D);
        for a in 0..D {
            for b in 0..D {
                let mut ea = Vector::<D>::zeros();
                let mut eb = Vector::<D>::zeros();
                ea[a] = h;
                eb[b] = h;
                let v = (kernel.potential(&(x + ea + eb))
                    - kernel.potential(&(x + ea - eb))
                    - kernel.potential(&(x - ea + eb))
                    + kernel.potential(&(x - ea - eb)))
                    / (4.0 * h * h);
                hess[(a, b)] = v;
            }
        }
        let sym = (&hess + hess.transpose()) * 0.5;
        let norm = sym
            .symmetric_eigenvalues()
            .iter()
            .fold(0.0f64, |m, e| m.max(e.abs()));
        best = best.max(norm);
    }
    best
}

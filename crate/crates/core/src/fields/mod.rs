//! Force models: periodic Poisson coupling, smooth interaction kernels and
//! external magnetic fields.

pub mod kernel;
pub mod magnetic;
pub mod poisson;

use std::sync::Arc;

pub use kernel::{
    kernel_force, kernel_hessian_bound, probe_hessian_bound, ClosureKernel, CosineKernel,
    CosineProductKernel, InteractionKernel, ZeroKernel,
};
pub use magnetic::{
    b_norms, eval_b, probe_b_norms, sine_holder_seminorm, DeclaredNorms, FieldNorms, MagneticField,
};
pub use poisson::{
    efield_bound_report, mollify, solve_poisson, spectral_laplacian, EfieldBoundReport, FieldSample,
};

use crate::error::{Error, Result};

/// How particles interact.
#[derive(Clone)]
pub enum InteractionModel<const D: usize> {
    SmoothKernel {
        kernel: Arc<dyn InteractionKernel<D>>,
        hessian_bound: f64,
    },
    PoissonCoupling {
        grid: usize,
        mollification: f64,
    },
}

impl<const D: usize> InteractionModel<D> {
    pub fn smooth<K: InteractionKernel<D> + 'static>(kernel: K, probe_n: usize) -> Result<Self> {
        let hessian_bound = kernel_hessian_bound(&kernel, probe_n);
        if !(hessian_bound >= 0.0) || !hessian_bound.is_finite() {
            return Err(Error::Domain(format!(
                "kernel Hessian bound {hessian_bound} is not finite"
            )));
        }
        Ok(Self::SmoothKernel {
            kernel: Arc::new(kernel),
            hessian_bound,
        })
    }

    pub fn poisson(grid: usize, mollification: f64) -> Result<Self> {
        if grid < 4 {
            return Err(Error::Domain(format!(
                "Poisson grid needs n >= 4, got {grid}"
            )));
        }
        if !(mollification >= 0.0) {
            return Err(Error::Domain(format!(
                "mollification radius must be >= 0, got {mollification}"
            )));
        }
        Ok(Self::PoissonCoupling {
            grid,
            mollification,
        })
    }

    pub fn label(&self) -> String {
        match self {
            Self::SmoothKernel {
                kernel,
                hessian_bound,
            } => format!("{} (H={hessian_bound})", kernel.name()),
            Self::PoissonCoupling {
                grid,
                mollification,
            } => format!("poisson(n={grid}, delta={mollification})"),
        }
    }
}

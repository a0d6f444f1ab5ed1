//! Two-solution stability runs: both ensembles are stepped on one schedule,
//! distances and coupling functionals are sampled, and bounds are evaluated.

use std::cell::Cell;
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::bounds::{
    dobrushin_bound, j_series, loglinear_stability, magnetized_bound, sqrtlog_stability,
    BoundInputs, BoundReport, JSeries, TimeSeries,
};
use crate::ensemble::{deposit_density, sample_ensemble, PhaseEnsemble};
use crate::error::{Error, Result};
use crate::fields::{
    b_norms, mollify, solve_poisson, CosineKernel, CosineProductKernel, InteractionKernel,
    MagneticField, ZeroKernel,
};
use crate::flow::{
    push_constant_b_two_force, push_nonuniform_b, velocity_bound_check, ElectricField, Trajectory,
};
use crate::geometry::{torus_displacement, TorusPoint, Vector};
use crate::sum::pairwise_sum_vec;
use crate::transport::{
    dobrushin_functional_states, kinetic_quantity, loeper_functional_states,
    renormalized_functional_states, wasserstein_entropic, wasserstein_exact, Coupling, KineticQ,
    PhaseMetric,
};

use super::config::{
    BoundKind, DistanceSection, ExperimentConfig, InteractionSection, MagneticSection,
    SecondEnsemble,
};

const B_PROBE_GRID: usize = 16;

/// Coupling functionals at one sample, all using the couplings fixed at `t = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FunctionalRow {
    pub t: f64,
    pub dobrushin: f64,
    pub loeper: f64,
    /// `NaN` when the fixed point leaves `(0, 1/e)`.
    pub kinetic_q: f64,
    /// Only defined for a uniform field.
    pub renormalized: Option<f64>,
}

/// Per-step field diagnostics of a Poisson-coupled run.
#[derive(Clone, Debug, PartialEq)]
pub struct DensitySeries {
    /// `‖ρ₁‖∞ + ‖ρ₂‖∞` of the mollified densities.
    pub a: TimeSeries,
    pub rho2_sup: TimeSeries,
    pub j: JSeries,
}

/// Everything a run produces.
#[derive(Clone, Debug)]
pub struct RunArtifacts<const D: usize> {
    pub config_hash: String,
    pub version: &'static str,
    pub wall_time: Duration,
    pub trajectories: [Trajectory<D>; 2],
    pub samples: Vec<f64>,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub distance_method: String,
    pub functionals: Vec<FunctionalRow>,
    pub bounds: Vec<BoundReport>,
    pub density: Option<DensitySeries>,
    pub hessian_bound: Option<f64>,
    pub interaction_label: String,
    pub field_label: String,
    pub notes: Vec<String>,
}

impl<const D: usize> RunArtifacts<D> {
    pub fn passed(&self) -> bool {
        self.bounds.iter().all(BoundReport::passed)
    }

    pub fn bound(&self, label: &str) -> Option<&BoundReport> {
        self.bounds.iter().find(|b| b.label == label)
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct ForceDiag {
    e_sup: f64,
    rho_sup: f64,
}

#[derive(Clone)]
enum Model<const D: usize> {
    Kernel {
        kernel: Arc<dyn InteractionKernel<D>>,
        hessian_bound: f64,
    },
    Poisson {
        grid: usize,
        delta: f64,
    },
}

impl<const D: usize> Model<D> {
    fn from_config(section: &InteractionSection) -> Self {
        let kernel: Arc<dyn InteractionKernel<D>> = match *section {
            InteractionSection::None => Arc::new(ZeroKernel),
            InteractionSection::Cosine { amplitude } => Arc::new(CosineKernel { amplitude }),
            InteractionSection::CosineProduct { amplitude } => {
                Arc::new(CosineProductKernel { amplitude })
            }
            InteractionSection::Poisson {
                grid,
                mollification,
            } => {
                return Self::Poisson {
                    grid,
                    delta: mollification,
                }
            }
        };
        let hessian_bound = kernel
            .analytic_hessian_bound()
            .expect("built-in kernels have closed-form Hessian bounds");
        Self::Kernel {
            kernel,
            hessian_bound,
        }
    }

    fn label(&self) -> String {
        match self {
            Self::Kernel {
                kernel,
                hessian_bound,
            } => format!("{} with H = {hessian_bound}", kernel.name()),
            Self::Poisson { grid, delta } => {
                format!("poisson(grid = {grid}, mollification = {delta})")
            }
        }
    }

    fn forces(&self, ens: &PhaseEnsemble<D>) -> Result<(Vec<Vector<D>>, ForceDiag)> {
        match self {
            Self::Kernel { kernel, .. } => {
                let f = kernel.forces(ens);
                let e_sup = f.iter().map(|v| v.norm()).fold(0.0, f64::max);
                Ok((
                    f,
                    ForceDiag {
                        e_sup,
                        rho_sup: f64::NAN,
                    },
                ))
            }
            Self::Poisson { grid, delta } => {
                let rho = mollify(&deposit_density(ens, *grid)?, *delta)?;
                let field = solve_poisson(&rho)?;
                let f = ens
                    .particles()
                    .iter()
                    .map(|p| field.efield_at(&p.position))
                    .collect();
                Ok((
                    f,
                    ForceDiag {
                        e_sup: field.efield_sup(),
                        rho_sup: rho.max(),
                    },
                ))
            }
        }
    }
}

/// Mean field of a frozen source ensemble, evaluated anywhere.
struct FrozenKernelField<'a, const D: usize> {
    kernel: &'a dyn InteractionKernel<D>,
    sources: &'a PhaseEnsemble<D>,
}

impl<const D: usize> ElectricField<D> for FrozenKernelField<'_, D> {
    fn at(&self, _: f64, x: &Vector<D>) -> Vector<D> {
        let target = TorusPoint::wrap_finite(*x);
        let ps = self.sources.particles();
        Vector::from(pairwise_sum_vec::<D, _>(ps.len(), |j| {
            let g = self
                .kernel
                .gradient(&torus_displacement(&target, &ps[j].position));
            std::array::from_fn(|k| ps[j].weight * g[k])
        }))
    }
}

fn magnetic_model(section: &MagneticSection) -> Result<MagneticField> {
    match *section {
        MagneticSection::Uniform { omega } => MagneticField::uniform(omega),
        MagneticSection::Sine { amplitude, offset } => Ok(MagneticField::sine(amplitude, offset)),
    }
}

fn shift_vector<const D: usize>(raw: &[f64]) -> Vector<D> {
    if raw.is_empty() {
        Vector::zeros()
    } else {
        Vector::from_fn(|k, _| raw[k])
    }
}

/// The two initial ensembles of a configuration.
pub fn initial_pair<const D: usize>(
    cfg: &ExperimentConfig,
) -> Result<(PhaseEnsemble<D>, PhaseEnsemble<D>)> {
    let init = cfg.initial_condition()?;
    let first = sample_ensemble::<D>(&init, cfg.run.particles, cfg.run.seed)?;
    let dx = shift_vector::<D>(&cfg.initial.shift_x);
    let dv = shift_vector::<D>(&cfg.initial.shift_v);
    let base = match cfg.initial.second {
        SecondEnsemble::Shift => first.clone(),
        SecondEnsemble::Independent => {
            sample_ensemble::<D>(&init, cfg.run.particles, cfg.run.seed.wrapping_add(1))?
        }
    };
    Ok((first.clone(), base.shifted(&dx, &dv)))
}

struct Stepper<const D: usize> {
    model: Model<D>,
    field: MagneticField,
    dt: f64,
}

impl<const D: usize> Stepper<D> {
    fn diag(&self, ens: &PhaseEnsemble<D>) -> Result<(Vec<Vector<D>>, ForceDiag)> {
        self.model.forces(ens)
    }

    /// Advances one step from `t`. For a uniform field the scheme is
    /// kick-rotate-kick; otherwise RK4 with the mean field frozen over the step.
    fn step(
        &self,
        ens: &PhaseEnsemble<D>,
        force: &[Vector<D>],
        t: f64,
    ) -> Result<(PhaseEnsemble<D>, Vec<Vector<D>>, ForceDiag)> {
        match self.field.gyrofrequency() {
            Some(omega) => {
                let diag = Cell::new(ForceDiag::default());
                let failure = Cell::new(None);
                let (next, f) =
                    push_constant_b_two_force(ens, force, omega, self.dt, |e| {
                        match self.model.forces(e) {
                            Ok((f, d)) => {
                                diag.set(d);
                                f
                            }
                            Err(err) => {
                                failure.set(Some(err.to_string()));
                                vec![Vector::zeros(); e.len()]
                            }
                        }
                    });
                if let Some(msg) = failure.take() {
                    return Err(Error::Precondition(msg));
                }
                Ok((next, f, diag.get()))
            }
            None => {
                let next = match &self.model {
                    Model::Kernel { kernel, .. } => {
                        let frozen = FrozenKernelField {
                            kernel: kernel.as_ref(),
                            sources: ens,
                        };
                        push_nonuniform_b(ens, &frozen, &self.field, t, self.dt)
                    }
                    Model::Poisson { grid, delta } => {
                        let rho = mollify(&deposit_density(ens, *grid)?, *delta)?;
                        let field = solve_poisson(&rho)?;
                        push_nonuniform_b(ens, &field, &self.field, t, self.dt)
                    }
                };
                let (f, d) = self.model.forces(&next)?;
                Ok((next, f, d))
            }
        }
    }
}

fn distances<const D: usize>(
    a: &PhaseEnsemble<D>,
    b: &PhaseEnsemble<D>,
    method: DistanceSection,
) -> Result<(f64, f64)> {
    match method {
        DistanceSection::Exact => Ok((
            wasserstein_exact(a, b, PhaseMetric::W1)?.distance,
            wasserstein_exact(a, b, PhaseMetric::W2)?.distance,
        )),
        DistanceSection::Entropic {
            epsilon,
            max_iterations,
        } => Ok((
            wasserstein_entropic(a, b, PhaseMetric::W1, epsilon, max_iterations)?.distance,
            wasserstein_entropic(a, b, PhaseMetric::W2, epsilon, max_iterations)?.distance,
        )),
    }
}

fn kinetic_value<const D: usize>(
    pi: &Coupling,
    a: &PhaseEnsemble<D>,
    b: &PhaseEnsemble<D>,
) -> Result<f64> {
    match kinetic_quantity(pi, a, b) {
        Ok(KineticQ::Root(q)) => Ok(q),
        Ok(KineticQ::OutsideRegime { .. }) => Ok(f64::NAN),
        Err(Error::Degenerate(_)) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// Runs the two-solution experiment of `cfg` in dimension `D`.
pub fn run_stability_experiment<const D: usize>(cfg: &ExperimentConfig) -> Result<RunArtifacts<D>> {
    cfg.validate()?;
    if cfg.run.dimension != D {
        return Err(Error::Config(format!(
            "configuration is for d = {}, run requested d = {D}",
            cfg.run.dimension
        )));
    }
    let started = Instant::now();
    let model = Model::<D>::from_config(&cfg.interaction);
    let field = magnetic_model(&cfg.magnetic)?;
    let stepper = Stepper {
        model: model.clone(),
        field: field.clone(),
        dt: cfg.run.dt,
    };
    let steps = cfg.steps();
    let stride = cfg.run.sample_stride;
    let mut notes = Vec::new();

    let (mut e1, mut e2) = initial_pair::<D>(cfg)?;
    let (pi_w1, pi_w2) = match cfg.distance {
        DistanceSection::Exact => (
            wasserstein_exact(&e1, &e2, PhaseMetric::W1)?.coupling,
            wasserstein_exact(&e1, &e2, PhaseMetric::W2)?.coupling,
        ),
        DistanceSection::Entropic { .. } => {
            notes.push("functionals use the identity pairing as the initial coupling".into());
            (Coupling::identity(&e1), Coupling::identity(&e1))
        }
    };

    let (mut f1, d1) = stepper.diag(&e1)?;
    let (mut f2, d2) = stepper.diag(&e2)?;
    let mut step_times = vec![0.0];
    let mut esup = [vec![d1.e_sup], vec![d2.e_sup]];
    let mut rho_sup = [vec![d1.rho_sup], vec![d2.rho_sup]];

    let mut traj = [Trajectory::new(), Trajectory::new()];
    let mut samples = Vec::new();
    let (mut w1, mut w2) = (Vec::new(), Vec::new());
    let mut functionals = Vec::new();
    let omega = field.gyrofrequency();
    let mut record = |t: f64, a: &PhaseEnsemble<D>, b: &PhaseEnsemble<D>| -> Result<()> {
        traj[0].record(t, a.clone())?;
        traj[1].record(t, b.clone())?;
        let (d1, d2) = distances(a, b, cfg.distance)?;
        samples.push(t);
        w1.push(d1);
        w2.push(d2);
        functionals.push(FunctionalRow {
            t,
            dobrushin: dobrushin_functional_states(&pi_w1, a, b)?,
            loeper: loeper_functional_states(&pi_w2, a, b, 1.0)?,
            kinetic_q: kinetic_value(&pi_w2, a, b)?,
            renormalized: omega
                .map(|w| renormalized_functional_states(&pi_w1, a, b, w, t))
                .transpose()?,
        });
        Ok(())
    };
    record(0.0, &e1, &e2)?;
    for k in 1..=steps {
        let t0 = (k - 1) as f64 * cfg.run.dt;
        let t = k as f64 * cfg.run.dt;
        let (n1, g1, d1) = stepper.step(&e1, &f1, t0)?;
        let (n2, g2, d2) = stepper.step(&e2, &f2, t0)?;
        (e1, f1, e2, f2) = (n1, g1, n2, g2);
        step_times.push(t);
        esup[0].push(d1.e_sup);
        esup[1].push(d2.e_sup);
        rho_sup[0].push(d1.rho_sup);
        rho_sup[1].push(d2.rho_sup);
        if k % stride == 0 || k == steps {
            record(t, &e1, &e2)?;
        }
    }
    drop(record);

    let b = b_norms::<D>(
        &field,
        cfg.run.horizon,
        cfg.bounds.holder_exponent,
        B_PROBE_GRID,
    )?;
    let hessian_bound = match &model {
        Model::Kernel { hessian_bound, .. } => Some(*hessian_bound),
        Model::Poisson { .. } => None,
    };
    let mut inputs = BoundInputs {
        hessian_bound: hessian_bound.unwrap_or(f64::NAN),
        omega: omega.unwrap_or(f64::NAN),
        dim: D,
        w1_0: Some(w1[0]),
        w2sq_0: Some(w2[0] * w2[0]),
        b_sup: b.sup,
        b_hol: b.holder_norm(),
        c_d: cfg.bounds.c_d,
        c_upper: cfg.bounds.c_upper,
        c0: cfg.bounds.c0,
        quadrature_step: cfg.run.dt,
    };
    let density = match &model {
        Model::Poisson { .. } => {
            let a_vals: Vec<f64> = rho_sup[0]
                .iter()
                .zip(&rho_sup[1])
                .map(|(x, y)| x + y)
                .collect();
            let a = TimeSeries::new(step_times.clone(), a_vals)?;
            let rho2 = TimeSeries::new(step_times.clone(), rho_sup[1].clone())?;
            let j = j_series(&a, &rho2, b.sup, b.holder_norm())?;
            Some(DensitySeries {
                a,
                rho2_sup: rho2,
                j,
            })
        }
        Model::Kernel { .. } => None,
    };
    if b.probed {
        notes.push("magnetic field norms were estimated on a probe grid".into());
    }

    let tol = cfg.bounds.tolerance;
    let mut reports = Vec::new();
    for kind in &cfg.bounds.evaluate {
        match kind {
            BoundKind::Dobrushin | BoundKind::Magnetized => {
                let (Some(h), Some(w)) = (hessian_bound, omega) else {
                    notes.push(format!(
                        "{} bound skipped: it needs a smooth kernel and a uniform field",
                        kind.file_stem()
                    ));
                    continue;
                };
                let mut r = BoundReport::new(kind.file_stem(), inputs.clone(), tol);
                for (t, m) in samples.iter().zip(&w1) {
                    let bound = if *kind == BoundKind::Dobrushin {
                        dobrushin_bound(h, *t, w1[0])
                    } else {
                        magnetized_bound(D, h, w, *t, w1[0])?
                    };
                    r.push(*t, *m, bound);
                }
                reports.push(r);
            }
            BoundKind::Velocity => {
                let mut r = BoundReport::new("velocity", inputs.clone(), tol);
                let v1 = velocity_bound_check(&traj[0], &step_times, &esup[0], b.sup)?;
                let v2 = velocity_bound_check(&traj[1], &step_times, &esup[1], b.sup)?;
                for (s1, s2) in v1.samples.iter().zip(&v2.samples) {
                    let s = if s1.min_slack <= s2.min_slack { s1 } else { s2 };
                    r.push(s.t, s.tight_speed, s.tight_bound);
                }
                r.notes.push(
                    "rows show the particle with the smallest slack over both ensembles".into(),
                );
                reports.push(r);
            }
            BoundKind::Loglinear | BoundKind::Sqrtlog => {
                let Some(ds) = &density else {
                    notes.push(format!(
                        "{} bound skipped: it needs Poisson coupling",
                        kind.file_stem()
                    ));
                    continue;
                };
                inputs.quadrature_step = ds.j.quadrature_step;
                let integral_at = |t: f64| {
                    let k = (t / cfg.run.dt).round() as usize;
                    ds.j.integral[k]
                };
                let total = *ds.j.integral.last().unwrap();
                let w2sq: Vec<f64> = w2.iter().map(|w| w * w).collect();
                let push_rows = |label: &str, c_d: f64| -> Result<BoundReport> {
                    let mut r = BoundReport::new(
                        label,
                        BoundInputs {
                            c_d,
                            ..inputs.clone()
                        },
                        tol,
                    );
                    r.qualitative = true;
                    r.notes.push(
                        "particle data do not have the bounded densities the estimate assumes"
                            .into(),
                    );
                    for (t, m) in samples.iter().zip(&w2sq) {
                        if w2sq[0] == 0.0 {
                            r.push(*t, *m, 0.0);
                            continue;
                        }
                        let (admissible, rhs) = if *kind == BoundKind::Loglinear {
                            let c = loglinear_stability(w2sq[0], total, c_d)?;
                            (c.admissible, c.rhs(integral_at(*t)))
                        } else {
                            let c = sqrtlog_stability(
                                w2sq[0],
                                total,
                                cfg.bounds.c_upper,
                                cfg.bounds.c0,
                            )?;
                            (c.admissible, c.rhs(integral_at(*t)))
                        };
                        if admissible {
                            r.push(*t, *m, rhs);
                        } else {
                            r.push_inadmissible(*t, *m, rhs);
                        }
                    }
                    Ok(r)
                };
                reports.push(push_rows(kind.file_stem(), cfg.bounds.c_d)?);
                if *kind == BoundKind::Loglinear {
                    if let Some(c_fit) = fitted_c_d(&samples, &w2sq, &integral_at) {
                        let mut r = push_rows("loglinear_fitted", c_fit.max(f64::MIN_POSITIVE))?;
                        r.notes
                            .push(format!("c_d fitted to the measured series: {c_fit:e}"));
                        reports.push(r);
                    } else {
                        notes.push("c_d could not be fitted: W2^2(0) is not in (0, 1)".into());
                    }
                }
            }
        }
    }

    Ok(RunArtifacts {
        config_hash: cfg.hash(),
        version: env!("CARGO_PKG_VERSION"),
        wall_time: started.elapsed(),
        trajectories: traj,
        samples,
        w1,
        w2,
        distance_method: match cfg.distance {
            DistanceSection::Exact => "exact".into(),
            DistanceSection::Entropic { epsilon, .. } => format!("entropic(epsilon = {epsilon})"),
        },
        functionals,
        bounds: reports,
        density,
        hessian_bound,
        interaction_label: model.label(),
        field_label: field.label(),
        notes,
    })
}

/// Smallest `c_d` for which `exp(log W(0) e^{-c_d I(t)})` dominates every
/// measured `W(t)`: `max_t log(L(0)/L(t)) / I(t)` with `L = -log W`.
pub fn fitted_c_d(times: &[f64], w2sq: &[f64], integral_at: &dyn Fn(f64) -> f64) -> Option<f64> {
    let w0 = *w2sq.first()?;
    if !(w0 > 0.0 && w0 < 1.0) {
        return None;
    }
    let l0 = -w0.ln();
    let mut c: f64 = 0.0;
    for (t, w) in times.iter().zip(w2sq).skip(1) {
        let i = integral_at(*t);
        if i <= 0.0 {
            continue;
        }
        if !(*w > 0.0) {
            continue;
        }
        if *w >= 1.0 {
            return None;
        }
        c = c.max((l0 / -w.ln()).ln() / i);
    }
    Some(c)
}

/// Advances the first ensemble of `cfg` alone and returns its trajectory.
pub fn simulate_single<const D: usize>(cfg: &ExperimentConfig) -> Result<Trajectory<D>> {
    cfg.validate()?;
    let stepper = Stepper {
        model: Model::<D>::from_config(&cfg.interaction),
        field: magnetic_model(&cfg.magnetic)?,
        dt: cfg.run.dt,
    };
    let (mut e, _) = initial_pair::<D>(cfg)?;
    let (mut f, _) = stepper.diag(&e)?;
    let mut traj = Trajectory::new();
    traj.record(0.0, e.clone())?;
    let steps = cfg.steps();
    for k in 1..=steps {
        let (n, g, _) = stepper.step(&e, &f, (k - 1) as f64 * cfg.run.dt)?;
        (e, f) = (n, g);
        if k % cfg.run.sample_stride == 0 || k == steps {
            traj.record(k as f64 * cfg.run.dt, e.clone())?;
        }
    }
    Ok(traj)
}

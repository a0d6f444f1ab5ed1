//! Characteristic flows: exact magnetized free transport, the renormalizing
//! drift, and integrators for the interacting dynamics.

mod gyration;
mod push;
mod trajectory;
mod velocity_bound;

pub use gyration::{
    drift_apply, free_flow, renormalized_position, rotation, DriftMatrix, RotationMatrix,
    SMALL_ANGLE,
};
pub use push::{
    free_flow_ensemble, push_constant_b, push_constant_b_two_force, push_nonuniform_b,
    ElectricField, FnField, NoField, UniformField,
};
pub use trajectory::Trajectory;
pub use velocity_bound::{
    exp_weighted_integrals, velocity_bound_check, VelocityBoundReport, VelocityBoundSample,
};

//! Cylindrical Stratonovich noise, Brownian increments, time steppers and
//! tracer flow maps.

pub mod brownian;
pub mod noise;
pub mod schemes;
pub mod tracers;

pub use brownian::{BrownianDriver, BrownianPath};
pub use noise::{transport_velocity_increment, BumpMode, NoiseBasis};
pub use schemes::{
    euler_maruyama_step, heun_step, integrate, integrate_with, ito_drift_correction, rk4_step,
    step, Scheme, Trajectory,
};
pub use tracers::{advance_tracers, GridVelocity, TracerCloud, VelocitySource};

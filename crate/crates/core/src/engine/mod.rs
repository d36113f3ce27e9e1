//! Graphical construction on a finite window.
//!
//! Each site carries a rate-one Poisson clock; at a ring the particle there
//! (if any) tries to jump by a displacement drawn from the kernel and
//! succeeds iff the target is empty. Clocks are keyed by `(seed, site)`, so
//! runs are reproducible and a larger window replays the same rings on the
//! shared sites.

mod config;
mod dynamics;
mod light_cone;
pub mod rng;
mod stream;

pub use config::{count_interval, sample_initial_step, Configuration, Window};
pub use dynamics::{
    apply_event, apply_event_with, evolve_to, evolve_to_with, peek_outcome, Boundary, EventLog,
    EvolveStats, JumpOutcome, Observer,
};
pub use light_cone::{LeftwardFront, LightCone, RightwardFront};
pub use stream::{
    reflect_event, reflect_stream, shift_stream, Event, EventSource, EventStream, ReflectedStream,
};

use crate::kernel_profile::JumpKernel;

/// Default buffer on each side of the observation range for a run of
/// length `t`: `ceil((M + 3) t)`.
pub fn default_buffer(kernel: &JumpKernel, t: f64) -> i64 {
    ((kernel.first_moment() + 3.0) * t).ceil() as i64
}

/// `[floor(u t) - buffer, ceil(v t) + buffer]`.
pub fn observation_window(u: f64, v: f64, t: f64, buffer: i64) -> Window {
    Window::new((u * t).floor() as i64 - buffer, (v * t).ceil() as i64 + buffer)
        .expect("u <= v gives an ordered window")
}

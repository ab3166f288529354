//! Coordinated motion planning of unit-square robots on the integer grid.
//!
//! * [`model`]: pixels, directions, instances, configurations and schedules.
//! * [`validate`]: exact step and schedule feasibility, lower bounds, stretch.
//! * [`generate`]: randomized benchmark instances and diverse subset selection.
//! * [`solve`]: prioritized space-time planning with annealed k-replanning.
//! * [`evaluate`]: contest-style `L / V` scoring of solution suites.

pub mod evaluate;
pub mod generate;
pub mod grid;
pub mod model;
pub mod seed;
pub mod solve;
pub mod validate;

pub use model::{
    apply_step, schedule_objectives, Configuration, Direction, Instance, ModelError, Objective, Objectives, Pixel,
    Rect, Schedule, Step,
};
pub use validate::{check_step, lower_bounds, validate_schedule, ValidationReport};

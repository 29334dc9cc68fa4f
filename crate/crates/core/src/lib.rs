//! Tumor-lymphocyte predator-prey dynamics under periodic cytokine immunotherapy.
//!
//! The crate is organized around the rescaled two-population model:
//!
//! - [`model`]: parameters, rescaling, vector fields and the mechanical potential analogue.
//! - [`integrator`]: adaptive Dormand-Prince integration with dense sampling and events.
//! - [`stability`]: closed-form fixed points, eigenvalues and their classification.
//! - [`analysis`]: growth verdicts, limit-cycle detection and the regrowth experiment.
//! - [`sweep`]: `(V, β)` phase diagrams, threshold extraction and hyperbolic fitting.
//! - [`cli`]: configuration handling and the commands behind the `tumordyn` binary.
//!
//! ```
//! use tumordyn::{integrator, model::{ModelParams, State}, stability};
//!
//! let p = ModelParams::new(2.0, 0.2, 0.25);
//! let l1 = stability::classify(&p).remove(1);
//! assert_eq!(l1.class, stability::StabilityClass::StableFocus);
//!
//! let traj = integrator::integrate_forced(State::new(5.3, 6.7), &p, &Default::default()).unwrap();
//! assert!((traj.last().state.x - 0.4167).abs() < 0.05);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod error;
pub mod integrator;
pub mod model;
pub mod stability;
pub mod sweep;

pub use error::{Error, Result};

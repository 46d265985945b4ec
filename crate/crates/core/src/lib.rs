//! Six-degree-of-freedom object localization from tactile contact points
//! with a memory unscented particle filter.
//!
//! The object is a triangle mesh; each measurement is a world-frame point
//! believed to lie on its surface. The filter estimates the pose
//! `(x, y, z, phi, theta, psi)` that maps the mesh onto the contacts.
//!
//! ```no_run
//! use std::sync::Arc;
//! use mupf_core::{harness, FilterConfig, RunOptions};
//!
//! let (mesh, scenario) = harness::box_scenario().unwrap();
//! let mesh = Arc::new(mesh);
//! let sim = mupf_core::simulate::sample_contacts(&scenario, &mesh).unwrap();
//! let (report, _) = harness::run_trial(
//!     mesh,
//!     &sim.measurements,
//!     Some(scenario.true_pose),
//!     &scenario.symmetries,
//!     &FilterConfig::simulation_profile(),
//!     &RunOptions::default(),
//! )
//! .unwrap();
//! println!("{:?} index {}", report.estimate, report.final_index);
//! ```

pub mod config;
pub mod error;
pub mod filter;
pub mod gaussian;
pub mod geometry;
pub mod harness;
pub mod metrics;
pub mod mupf;
pub mod simulate;
pub mod unscented;
pub mod upf;

pub use config::{Cov6, FilterConfig, ResamplingScheme, SigmaPInterpretation};
pub use error::{Error, Result};
pub use filter::{ContactModel, Particle, ProximityModel};
pub use geometry::{Pose, TriMesh};
pub use harness::RunOptions;
pub use metrics::{SuccessThresholds, TrialReport};
pub use mupf::{extract_pose, init, run, step, FilterState, PoseEstimate};
pub use unscented::SutParams;

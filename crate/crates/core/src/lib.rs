//! Optimal voltage control for transmission networks.
//!
//! Out-of-limit load-bus voltages are restored by moving generator voltage
//! set-points along the dominant singular direction of the Q–V control
//! matrix. The crate bundles everything that needs: a per-unit network
//! model, case readers, dense linear algebra, AC power flow, the
//! sensitivity model, and the controller itself.
//!
//! ```
//! use qvctl_core::cases::Scenario;
//! use qvctl_core::controller::{ovc_run, ControlConfig, Outcome};
//!
//! let net = Scenario::ieee9().network();
//! let trace = ovc_run(&net, &ControlConfig::default()).unwrap();
//! assert_eq!(trace.outcome, Outcome::Resolved);
//! assert!(trace.final_vm(9).unwrap() > 0.9);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod caseio;
pub mod cases;
pub mod controller;
pub mod netmodel;
pub mod numerics;
pub mod powerflow;
pub mod sensitivity;

//! Large deviations of return times for Gibbs measures on shifts of finite type.
//!
//! Given a shift, a locally constant potential and a set `R`, the library
//! computes the return-time CGF `Ψ_R` through penalized pressure, its
//! Legendre transform `Φ_R`, inner/outer bounds for open sets, and Monte Carlo
//! and exact finite-`n` distributions to compare against.
//!
//! ```
//! use returnlab::cylinder::CylinderSet;
//! use returnlab::ldp::{legendre, Cgf};
//! use returnlab::potential::Potential;
//! use returnlab::sft::Sft;
//!
//! let sft = Sft::full2();
//! let zero = CylinderSet::new(&sft, 0, 1, [vec![0]]).unwrap();
//! let cgf = Cgf::new(&sft, &Potential::zero(&sft), &zero).unwrap();
//! assert!((cgf.mean_return() - 2.0).abs() < 1e-12);
//! let phi = legendre(&cgf, 3.0).unwrap();
//! assert!((phi.value + 0.169899036795).abs() < 1e-9);
//! ```

pub mod cylinder;
pub mod error;
mod graph;
pub mod perron;
pub mod potential;
pub mod presentation;
pub mod sft;
pub mod thermo;
pub mod karp;
pub mod openset;
pub mod ldp;
pub mod simulate;
pub mod dp;
pub mod verify;

/// Library version, embedded in every output file of the command-line tool.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

//! Guide listings compiled as doc-tests.
//!
//! mdbook can't run listings against a workspace crate, so each chapter is
//! pulled in here as a module doc and `cargo test --doc` runs them. One module
//! per chapter keeps failures traceable to the Markdown file.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/shifts.md")]
pub mod shifts {}
#[doc = include_str!("../../../book/src/pressure.md")]
pub mod pressure {}
#[doc = include_str!("../../../book/src/holes.md")]
pub mod holes {}
#[doc = include_str!("../../../book/src/rates.md")]
pub mod rates {}
#[doc = include_str!("../../../book/src/open_sets.md")]
pub mod open_sets {}
#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}

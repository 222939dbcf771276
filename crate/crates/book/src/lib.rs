//! The guide's chapters, compiled as doc comments so `cargo test` runs every
//! snippet in the book.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/quantile_regression.md")]
pub mod quantile_regression {}
#[doc = include_str!("../../../book/src/environments.md")]
pub mod environments {}
#[doc = include_str!("../../../book/src/oracle.md")]
pub mod oracle {}
#[doc = include_str!("../../../book/src/tabular_agents.md")]
pub mod tabular_agents {}
#[doc = include_str!("../../../book/src/linear_agents.md")]
pub mod linear_agents {}
#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}

//! The guide under `book/`, compiled so that its code samples run as
//! doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/graphs.md")]
pub mod graphs {}

#[doc = include_str!("../../../book/src/simulator.md")]
pub mod simulator {}

#[doc = include_str!("../../../book/src/luby.md")]
pub mod luby {}

#[doc = include_str!("../../../book/src/warmup.md")]
pub mod warmup {}

#[doc = include_str!("../../../book/src/fast.md")]
pub mod fast {}

#[doc = include_str!("../../../book/src/lowerbound.md")]
pub mod lowerbound {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}

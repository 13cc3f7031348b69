//! Compiles and runs every code block of the guide as a doctest.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/topologies.md")]
pub mod topologies {}

#[doc = include_str!("../../../book/src/problem.md")]
pub mod problem {}

#[doc = include_str!("../../../book/src/teleportation.md")]
pub mod teleportation_chapter {}

#[doc = include_str!("../../../book/src/choosing-k.md")]
pub mod choosing_k {}

#[doc = include_str!("../../../book/src/rates.md")]
pub mod rates {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}

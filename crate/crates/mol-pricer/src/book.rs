//! Doc-tested guide chapters: each module includes one chapter of the
//! mdbook guide, so the code fences in the book compile and run under
//! `cargo test --doc` and cannot drift from the library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/mesh.md")]
pub mod mesh {}

#[doc = include_str!("../../../book/src/operators.md")]
pub mod operators {}

#[doc = include_str!("../../../book/src/time-integration.md")]
pub mod time_integration {}

#[doc = include_str!("../../../book/src/bermudan.md")]
pub mod bermudan {}

#[doc = include_str!("../../../book/src/greeks.md")]
pub mod greeks {}

#[doc = include_str!("../../../book/src/validation.md")]
pub mod validation {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}

// the workspace README's example is held to the same standard
#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
pub mod readme {}

//! Runs the book's code snippets as doc-tests.
//!
//! mdbook cannot execute snippets against workspace dependencies, so each
//! chapter is embedded here as module documentation; `cargo test --doc`
//! then compiles and runs every Rust fence, keeping the book honest.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/model.md")]
pub mod model {}

#[doc = include_str!("../../../book/src/cycles.md")]
pub mod cycles {}

#[doc = include_str!("../../../book/src/single-loss.md")]
pub mod single_loss {}

#[doc = include_str!("../../../book/src/averages.md")]
pub mod averages {}

#[doc = include_str!("../../../book/src/buffer-sizing.md")]
pub mod buffer_sizing {}

#[doc = include_str!("../../../book/src/simulator.md")]
pub mod simulator {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}

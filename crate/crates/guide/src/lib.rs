//! Doc-test shim for the book.
//!
//! Each chapter under `book/src` is included as rustdoc on an empty
//! module, which turns every fenced Rust block in the book into a
//! doc-test of this crate. `cargo test -p guide` (or a plain workspace
//! test run) therefore fails whenever a snippet drifts out of sync with
//! the library — the book cannot lie about the API.
//!
//! mdBook renders the same files; `mdbook build book` from the repository
//! root produces the HTML version and needs no Rust toolchain.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/filters.md")]
pub mod filters {}

#[doc = include_str!("../../../book/src/kernels.md")]
pub mod kernels {}

#[doc = include_str!("../../../book/src/estimators.md")]
pub mod estimators {}

#[doc = include_str!("../../../book/src/synthetic.md")]
pub mod synthetic {}

#[doc = include_str!("../../../book/src/rates.md")]
pub mod rates {}

#[doc = include_str!("../../../book/src/saturation.md")]
pub mod saturation {}

#[doc = include_str!("../../../book/src/cme.md")]
pub mod cme {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}

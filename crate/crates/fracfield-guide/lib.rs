// The book's code listings are doc-tests of this crate: each chapter is
// included as the documentation of an empty module, so `cargo test` runs
// every snippet against the current library. A module per chapter keeps
// failure reports traceable to their chapter.

#[doc = include_str!("../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../book/src/mittag_leffler.md")]
pub mod mittag_leffler {}
#[doc = include_str!("../../book/src/caputo_l1.md")]
pub mod caputo_l1 {}
#[doc = include_str!("../../book/src/fractional_odes.md")]
pub mod fractional_odes {}
#[doc = include_str!("../../book/src/kernels.md")]
pub mod kernels {}
#[doc = include_str!("../../book/src/solver.md")]
pub mod solver {}
#[doc = include_str!("../../book/src/diagnostics.md")]
pub mod diagnostics {}
#[doc = include_str!("../../book/src/cli.md")]
pub mod cli {}
#[doc = include_str!("../../README.md")]
pub mod readme {}

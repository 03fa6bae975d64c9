//! The guide's chapters, compiled so every Rust snippet runs as a doc-test.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/series.md")]
pub mod series {}
#[doc = include_str!("../../../book/src/sets.md")]
pub mod sets {}
#[doc = include_str!("../../../book/src/transforms.md")]
pub mod transforms {}
#[doc = include_str!("../../../book/src/witnesses.md")]
pub mod witnesses {}
#[doc = include_str!("../../../book/src/rs_sequences.md")]
pub mod rs_sequences {}
#[doc = include_str!("../../../book/src/stochastic.md")]
pub mod stochastic {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
#[doc = include_str!("../../../book/src/horizons.md")]
pub mod horizons {}

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod format;
pub mod hpe;
pub mod operators;
pub mod oracles;
pub mod problems;
pub mod runner;
pub mod space;

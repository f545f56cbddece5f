//! Poisson point processes on the line, their suspensions under interval maps, the
//! leftmost-return transformation, and the statistics used to check them.
//!
//! Configurations are revealed lazily: a [`point_process::Configuration`] knows the
//! points of one window and can extend itself, and every extension agrees with what a
//! one-shot draw of the larger window would have produced.

// `!(a < b)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod point_process;
pub mod stats;
pub mod transforms;

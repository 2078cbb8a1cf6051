#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod dynamics;
pub mod energy;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod scenes;
pub mod vtg;

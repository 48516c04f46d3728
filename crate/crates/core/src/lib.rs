#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]
pub mod linalg;
pub mod scalar;
pub mod series;
pub mod spatial;
pub mod normal_form;
pub mod boundary;
pub mod solvers;
pub mod experiment;

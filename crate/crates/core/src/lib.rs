// `!(x > 0.0)` is used on purpose so NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod app;
pub mod eho;
pub mod features;
pub mod metrics;
pub mod mpta;
pub mod pipeline;
pub mod record;
pub mod svm;
pub mod workflow;

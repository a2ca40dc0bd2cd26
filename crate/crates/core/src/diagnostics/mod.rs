//! Weighted P values, the bounded-support uniform demonstration, and the
//! family-substitution sensitivity check.

mod pvalue;
mod sensitivity;

pub use pvalue::{
    lambda, pointwise_pvalue, uniform_demo, weighted_pvalue, weighted_pvalue_with, PValueNode, PValueReport,
    TestStatistic, UniformDemo,
};
pub use sensitivity::{sensitivity_compare, SensitivityOptions, SensitivityReport, Verdict};

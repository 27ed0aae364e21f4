//! Exact evaluation by enumeration, plus Monte Carlo estimates for larger
//! regimes.

mod conditional;
mod distance;
mod entropy_loss;
mod enumerate;
mod hwise;
mod montecarlo;
mod report;
mod table;

pub use conditional::{conditional_analysis, ConditionalEntry, ConditionalReport};
pub use distance::{distance_from_uniform, distance_from_uniform_given, statistical_distance, strong_distance};
pub use entropy_loss::{min_entropy_loss_check, EntropyLossReport, FixingEntry};
pub use enumerate::{check_budget, product_size, push_forward, ENUMERATION_BUDGET};
pub use hwise::{choose_subsets, hwise_report, HwiseReport, SubsetDistance, SubsetPlan};
pub use montecarlo::{mc_distance_upper, McEstimate, BOOTSTRAP_RESAMPLES, MC_MAX_OUTPUT_BITS};
pub use report::{MetricRow, MetricsReport};
pub use table::JointTable;

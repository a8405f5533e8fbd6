//! Rank-based hypothesis tests, multiple-comparison correction, subgroup
//! comparisons and seeded patient-level data splits.

mod comparison;
mod correction;
pub mod ranks;
mod rng;
mod split;
mod subgroup;
mod wilcoxon;

pub use comparison::{
    compare_tables, mean_sd, Comparison, ComparisonReport, GroupSummary, MetricKind, OrganComparison,
};
pub use correction::{bonferroni, stars, SignificanceLevel, Stars};
pub use rng::SplitRng;
pub use split::{largest_remainder, make_cv_folds, make_split, parse_ratio, sample_cases, Bucket, SplitPlan};
pub use subgroup::{age_group, subgroup_analysis, Dimension, SubgroupSpec};
pub use wilcoxon::{
    wilcoxon_rank_sum, wilcoxon_signed_rank, PairedSample, TestMethod, TestResult, RANK_SUM_EXACT_MAX,
    SIGNED_RANK_EXACT_MAX,
};

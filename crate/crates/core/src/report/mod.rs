//! Aggregates over metric tables and reviewer scores: per-organ summaries,
//! box-plot data and Likert usability.

mod boxplot;
mod likert;
mod summary;

pub use boxplot::{boxplot_export, BoxGroup, BoxplotDoc, GroupKey, LabelledTable};
pub use likert::{
    likert_summarize, parse_likert_lines, LikertRecord, LikertSummary, RaterSummary, ScoreSubmission, Usability,
    DISAGREEMENT_GAP,
};
pub use summary::{quartiles, summarize, write_summary_csv, MetricStats, OrganSummary, QUARTILE_RULE};

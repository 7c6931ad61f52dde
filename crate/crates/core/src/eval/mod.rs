//! Cross-validation folds, confusion matrices and ROC points, and the
//! statistics and report built from them.

mod confusion;
mod folds;
mod report;
pub mod stats;

pub use confusion::{roc_point, ConfusionMatrix, RunResult};
pub use folds::{make_folds, FoldPlan};
pub use report::{
    render_report, report_stats, AxisTests, ConfigurationSummary, EvalReport, ReportBundle,
    ReportOptions, ReportStats, TEST_NOTE,
};
pub use stats::{anova_one_way, confidence_interval, pairwise_t_tests, student_t_quantile, welch_t_test};

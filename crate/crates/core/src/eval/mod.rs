//! Generation metrics, the cross-entropy optimality check, clustering
//! quality, and the downstream regression comparison.

mod metrics;
mod stats;
mod theorem;

pub use metrics::{metrics, metrics_with, write_histograms, Histogram, MetricsSummary, Reference};
pub use stats::{
    cohens_d, knn_predict, paired_t_test, regression_study, silhouette, ModelComparison,
    RegressionConfig, RegressionStudyResult, Ridge, TTest,
};
pub use theorem::{
    cov_error, empirical_cross_entropy, gaussian_cross_entropy, gradient_checks, mean_error,
    precision_gradient, precision_objective, random_spd, verify_theorem1, GradientCheck, Source,
    TheoremConfig, TheoremReport,
};

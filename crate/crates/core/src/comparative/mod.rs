//! Cross-period and cross-model comparisons: amplifier flows, correlation
//! reports, partition agreement and half-life sensitivity.

mod agreement;
mod correlation;
mod flows;
mod periods;
mod sensitivity;

pub use agreement::{
    adjusted_rand_index, jaccard, jaccard_match, member_sets, support_sets, JaccardBasis,
    JaccardMatch,
};
pub use correlation::{
    compare_correlations, correlation_report, fisher_interval, pearson, pearson_ci,
    period_activity_matrix, ActivityMatrix, ActivityMode, ActivityRow, CorrelationGroup,
    CorrelationResult, CorrelationRow, R_CLAMP,
};
pub use flows::{amplifier_flows, weighted_bias_by_period, FlowTable, PeriodFlow, COVERAGE_TARGET};
pub use periods::{Period, PeriodSpec};
pub use sensitivity::{
    compare_runs, run_model, sensitivity_sweep, FlagRule, ModelRun, SpikeMatch, SweepConfig,
    SweepResult,
};

use alloc::string::String;

use crate::landscape::LandscapeError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ComparativeError {
    #[error("invalid period spec: {0}")]
    InvalidPeriods(String),
    #[error("period {0} has no weeks inside the study window")]
    EmptyPeriod(String),
    #[error("missing bias for attractor {0} with amplifier activity")]
    MissingBias(u32),
    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(&'static str),
    #[error("correlation needs more than 3 samples, got {0}")]
    TooFewSamples(usize),
    #[error("partitions cover different point sets ({0} vs {1} points)")]
    MismatchedUniverse(usize, usize),
    #[error("sensitivity sweep needs at least two half-lives")]
    TooFewModels,
    #[error("reference half-life {0} is not in the sweep")]
    MissingReference(f64),
    #[error(transparent)]
    Landscape(#[from] LandscapeError),
    #[error(transparent)]
    Dynamics(#[from] crate::beliefdyn::DynamicsError),
}

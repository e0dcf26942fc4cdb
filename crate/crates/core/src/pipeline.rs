//! Composition of the landscape stages shared by the reports and the
//! sensitivity sweep.

use crate::beliefdyn::{build_belief_vectors, BeliefVectorSeries, SmoothingParams};
use crate::datamodel::WeeklyCounts;
use crate::landscape::{
    assign_weekly, density_peak_cluster, fallback_project, AssignmentTable, AttractorSet,
    ClusterConfig, Embedding, EmbeddingReport, EmbeddingRow, LandscapeError,
};

/// Where landscape coordinates come from.
#[derive(Clone, Copy, Debug)]
pub enum EmbeddingSource<'a> {
    /// Precomputed coordinates, indexed against the belief-vector series.
    Rows(&'a [EmbeddingRow]),
    /// [`fallback_project`] of the belief vectors.
    Fallback,
}

#[derive(Clone, Debug)]
pub struct LandscapeRun {
    pub series: BeliefVectorSeries,
    pub embedding: Embedding,
    /// Present for [`EmbeddingSource::Rows`].
    pub embedding_report: Option<EmbeddingReport>,
    pub attractors: AttractorSet,
    pub assignments: AssignmentTable,
}

/// Belief vectors, embedding, density-peak clustering and weekly
/// assignment in one pass.
pub fn build_landscape(
    counts: &WeeklyCounts,
    params: SmoothingParams,
    source: EmbeddingSource<'_>,
    cluster: &ClusterConfig,
) -> Result<LandscapeRun, LandscapeError> {
    let series = build_belief_vectors(counts, params);
    let (embedding, embedding_report) = match source {
        EmbeddingSource::Rows(rows) => {
            let (e, report) = Embedding::from_rows(&series, rows.iter().cloned())?;
            (e, Some(report))
        }
        EmbeddingSource::Fallback => (fallback_project(&series)?, None),
    };
    let attractors = density_peak_cluster(&embedding, cluster)?;
    let assignments = assign_weekly(&embedding, &attractors, &embedding)?;
    Ok(LandscapeRun {
        series,
        embedding,
        embedding_report,
        attractors,
        assignments,
    })
}

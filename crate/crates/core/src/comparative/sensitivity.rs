use alloc::vec::Vec;
use core::ops::Range;

use super::{
    adjusted_rand_index, jaccard_match, member_sets, support_sets, ComparativeError, JaccardBasis,
};
use crate::beliefdyn::SmoothingParams;
use crate::datamodel::WeeklyCounts;
use crate::events::{
    coordinated_spikes, detect_spikes, spiking_attractors, AttractorActivity, SpikeConfig,
    SpikeReport,
};
use crate::landscape::{attractor_profiles, AssignmentTable, ClusterConfig, ProfileSet};
use crate::pipeline::{build_landscape, EmbeddingSource};

/// Which reference-model attractors are tracked across half-lives.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FlagRule {
    /// Spikes from both populations inside the window.
    #[default]
    Coordinated,
    /// Any spike inside the window.
    AnySpike,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub half_lives: Vec<f64>,
    pub reference: f64,
    pub cluster: ClusterConfig,
    pub threshold: f64,
    /// `None` uses each model's default burn-in.
    pub burn_in: Option<u32>,
    /// Spike window the flagged attractors are checked in.
    pub window: Range<u32>,
    pub basis: JaccardBasis,
    pub flag: FlagRule,
}

/// One half-life's landscape and spikes.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelRun {
    pub half_life: f64,
    pub assignments: AssignmentTable,
    pub profiles: ProfileSet,
    pub spikes: SpikeReport,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpikeMatch {
    pub half_life: f64,
    pub reference_attractor: u32,
    pub matched: Option<u32>,
    pub jaccard: f64,
    /// The matched attractor spikes inside the window in this model.
    pub spikes_in_window: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub half_lives: Vec<f64>,
    /// Pairwise ARI of modal user assignments, in `half_lives` order.
    pub ari: Vec<Vec<f64>>,
    pub flagged: Vec<u32>,
    /// Rows for every non-reference model and flagged attractor.
    pub matches: Vec<SpikeMatch>,
}

/// Rebuilds vectors, landscape, assignments and spikes for one half-life.
pub fn run_model(
    counts: &WeeklyCounts,
    source: EmbeddingSource<'_>,
    half_life: f64,
    cfg: &SweepConfig,
) -> Result<ModelRun, ComparativeError> {
    let params = SmoothingParams::from_half_life(half_life)?;
    let run = build_landscape(counts, params, source, &cfg.cluster)?;
    let activity = AttractorActivity::from_assignments(&run.assignments, counts);
    let mut spike_cfg = SpikeConfig::new(params);
    spike_cfg.threshold = cfg.threshold;
    if let Some(b) = cfg.burn_in {
        spike_cfg.burn_in = b;
    }
    Ok(ModelRun {
        half_life,
        profiles: attractor_profiles(&run.assignments, counts, counts.weeks()),
        spikes: detect_spikes(&activity, &spike_cfg),
        assignments: run.assignments,
    })
}

fn flagged(run: &ModelRun, cfg: &SweepConfig) -> Result<Vec<u32>, ComparativeError> {
    Ok(match cfg.flag {
        FlagRule::Coordinated => coordinated_spikes(&run.spikes, cfg.window.clone())
            .map_err(|_| ComparativeError::EmptyPeriod(alloc::format!("{:?}", cfg.window)))?,
        FlagRule::AnySpike => spiking_attractors(&run.spikes, cfg.window.clone(), None),
    })
}

/// ARI matrix and spike matches for already computed models.
pub fn compare_runs(
    runs: &[ModelRun],
    counts: &WeeklyCounts,
    cfg: &SweepConfig,
) -> Result<SweepResult, ComparativeError> {
    if runs.len() < 2 {
        return Err(ComparativeError::TooFewModels);
    }
    let reference = runs
        .iter()
        .position(|r| r.half_life == cfg.reference)
        .ok_or(ComparativeError::MissingReference(cfg.reference))?;
    let n_users = counts.users().len();
    let modal: Vec<_> = runs
        .iter()
        .map(|r| r.assignments.modal_labels(n_users, counts.weeks()))
        .collect();
    let mut ari = Vec::with_capacity(runs.len());
    for a in &modal {
        ari.push(
            modal
                .iter()
                .map(|b| adjusted_rand_index(a, b))
                .collect::<Result<Vec<_>, _>>()?,
        );
    }

    let basis_sets = |i: usize| match cfg.basis {
        JaccardBasis::MemberUsers => member_sets(&modal[i], runs[i].assignments.k),
        JaccardBasis::BeliefSupport => support_sets(&runs[i].profiles, runs[i].assignments.k),
    };
    let flagged = flagged(&runs[reference], cfg)?;
    let reference_sets = basis_sets(reference);
    let mut matches = Vec::new();
    for (i, run) in runs.iter().enumerate() {
        if i == reference {
            continue;
        }
        let spiking = spiking_attractors(&run.spikes, cfg.window.clone(), None);
        let table = jaccard_match(&reference_sets, &basis_sets(i));
        for &a in &flagged {
            let m = table[a as usize];
            matches.push(SpikeMatch {
                half_life: run.half_life,
                reference_attractor: a,
                matched: m.best_b,
                jaccard: m.jaccard,
                spikes_in_window: m.best_b.is_some_and(|b| spiking.contains(&b)),
            });
        }
    }
    Ok(SweepResult {
        half_lives: runs.iter().map(|r| r.half_life).collect(),
        ari,
        flagged,
        matches,
    })
}

/// Runs every half-life sequentially and compares them.
pub fn sensitivity_sweep(
    counts: &WeeklyCounts,
    source: EmbeddingSource<'_>,
    cfg: &SweepConfig,
) -> Result<SweepResult, ComparativeError> {
    if cfg.half_lives.len() < 2 {
        return Err(ComparativeError::TooFewModels);
    }
    let runs = cfg
        .half_lives
        .iter()
        .map(|&h| run_model(counts, source, h, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    compare_runs(&runs, counts, cfg)
}

//! Subcommand bodies. Each returns its output files in memory; nothing
//! touches the output directory until every file has been produced.

use std::collections::{BTreeMap, BTreeSet};

use bld_core::beliefdyn::{belief_lifespans, build_belief_vectors};
use bld_core::comparative::{
    amplifier_flows, compare_correlations, compare_runs, correlation_report,
    period_activity_matrix, run_model, weighted_bias_by_period, ActivityMode, CorrelationGroup,
    SweepConfig,
};
use bld_core::events::{
    coordinated_spikes, detect_spikes, AttractorActivity, SpikeConfig, SpikeReport,
};
use bld_core::landscape::{attractor_profiles, EmbeddingRow, PeakSelection, ProfileSet};
use bld_core::measures::{
    attractor_bias, belief_bias, mean_homogeneity_ranking, weekly_homogeneity, AttractorBiasTable,
    BeliefBias, HomogeneityRanking, HomogeneityTable, WeeklyAttractorCounts,
};
use bld_core::pipeline::{build_landscape, EmbeddingSource, LandscapeRun};
use bld_core::synth::{generate_stream, presets, ScenarioConfig};
use bld_core::{bin_weekly, Community, SmoothingParams, UserIdx, WeeklyCounts};
use rayon::prelude::*;
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::format::{json_bytes, num, opt, opt_id, Table};
use crate::io::{self, EventStream};

/// Output files in write order.
#[derive(Debug, Default)]
pub struct Outputs {
    pub files: Vec<(String, Vec<u8>)>,
    /// Printed to stdout after the files are written.
    pub stdout: Option<String>,
}

impl Outputs {
    fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_owned(), bytes));
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, b)| b.as_slice())
    }
}

pub const DEFAULT_PERIODS: &str = "pre=0..19,event=20..23,post=24..";
pub const DEFAULT_FLOW_PERIODS: &str = "pre=18..19,event=20..21,post=22..23";

/// An events file binned into weeks.
pub struct Study {
    pub stream: EventStream,
    pub counts: WeeklyCounts,
}

impl Study {
    pub fn load(cfg: &RunConfig) -> Result<Self> {
        let stream = io::read_events(cfg.events_path()?)?;
        let mut counts = bin_weekly(&stream.events, stream.header.epoch, stream.header.n_beliefs)?;
        counts.extend_weeks(stream.header.weeks.unwrap_or(0));
        Ok(Self { stream, counts })
    }

    fn name(&self, c: Community) -> &str {
        &self.stream.header.community_names[c.index()]
    }

    fn user(&self, u: UserIdx) -> &str {
        &self.counts.users().get(u).id
    }
}

pub fn params(cfg: &RunConfig) -> Result<SmoothingParams> {
    Ok(SmoothingParams::from_half_life(cfg.half_life)?)
}

pub fn spike_config(cfg: &RunConfig, params: SmoothingParams) -> SpikeConfig {
    let mut sc = SpikeConfig::new(params);
    sc.threshold = cfg.z_threshold;
    if let Some(b) = cfg.burn_in {
        sc.burn_in = b;
    }
    sc
}

fn embedding_rows(cfg: &RunConfig) -> Result<Option<Vec<EmbeddingRow>>> {
    cfg.embedding.as_deref().map(io::read_embedding).transpose()
}

fn source(rows: &Option<Vec<EmbeddingRow>>) -> EmbeddingSource<'_> {
    match rows {
        Some(r) => EmbeddingSource::Rows(r),
        None => EmbeddingSource::Fallback,
    }
}

pub fn landscape_run(
    cfg: &RunConfig,
    study: &Study,
    params: SmoothingParams,
) -> Result<LandscapeRun> {
    let rows = embedding_rows(cfg)?;
    Ok(build_landscape(
        &study.counts,
        params,
        source(&rows),
        &cfg.cluster()?,
    )?)
}

pub fn execute(command: &str, cfg: &RunConfig) -> Result<Outputs> {
    match command {
        "validate" => validate(cfg),
        "vectors" => vectors(cfg),
        "landscape" => landscape(cfg),
        "measures" => measures(cfg),
        "events" => events(cfg),
        "h1" => h1(cfg),
        "h2" => h2(cfg),
        "rq2" => rq2(cfg),
        "sensitivity" => sensitivity(cfg),
        "synth" => synth(cfg),
        other => Err(CliError::internal(format!("unknown subcommand {other}"))),
    }
}

fn validate(cfg: &RunConfig) -> Result<Outputs> {
    let stream = io::read_events(cfg.events_path()?)?;
    let body = json_bytes(&stream.report)?;
    let mut out = Outputs {
        stdout: Some(String::from_utf8(body.clone()).map_err(CliError::internal)?),
        ..Outputs::default()
    };
    out.add("validation.json", body);
    Ok(out)
}

fn vectors(cfg: &RunConfig) -> Result<Outputs> {
    let study = Study::load(cfg)?;
    let series = build_belief_vectors(&study.counts, params(cfg)?);
    let lifespans = belief_lifespans(&study.stream.events, study.stream.header.epoch)?;
    let mut spans = Table::new([
        "belief_cluster",
        "first_week",
        "last_week",
        "lifespan_weeks",
    ]);
    for (b, s) in &lifespans.spans {
        spans.row([
            b.to_string(),
            s.first_week.to_string(),
            s.last_week.to_string(),
            s.lifespan().to_string(),
        ]);
    }
    let mut hist = Table::new(["lifespan_weeks", "beliefs"]);
    for (d, n) in lifespans.histogram.iter().enumerate() {
        hist.row([d.to_string(), n.to_string()]);
    }
    let mut out = Outputs::default();
    out.add("vectors.bin", io::vectors_bin(&series));
    out.add("vectors.csv", io::vectors_csv(&series));
    out.add("lifespans.csv", spans.into_bytes());
    out.add("lifespan_histogram.csv", hist.into_bytes());
    Ok(out)
}

fn landscape_files(
    out: &mut Outputs,
    cfg: &RunConfig,
    study: &Study,
    run: &LandscapeRun,
) -> Result<()> {
    let set = &run.attractors;
    let selection = match set.config.selection {
        PeakSelection::TopK(k) => json!({"top_k": k}),
        PeakSelection::GammaThreshold(g) => json!({"gamma_threshold": g}),
    };
    let peaks: Vec<_> = set
        .peaks
        .iter()
        .enumerate()
        .map(|(id, p)| {
            json!({
                "id": id,
                "x": p.x,
                "y": p.y,
                "density": p.density,
                "members": set.members[id],
            })
        })
        .collect();
    let noise = set.labels.iter().filter(|l| l.is_none()).count();
    let report = run.embedding_report.as_ref().map(|r| {
        json!({
            "points": r.n_points,
            "rejected_unknown_user": r.rejected_unknown_user,
            "rejected_no_vector": r.rejected_no_vector,
        })
    });
    let doc = json!({
        "half_life": cfg.half_life,
        "embedding": if run.embedding_report.is_some() { "given" } else { "fallback" },
        "embedding_report": report,
        "bandwidth": set.bandwidth,
        "selection": selection,
        "noise_floor": set.config.noise_floor,
        "points": set.labels.len(),
        "noise_points": noise,
        "peaks": peaks,
    });
    out.add("attractors.json", json_bytes(&doc)?);
    let mut t = Table::new(["user", "week", "attractor"]);
    for (u, w, l) in run.assignments.iter() {
        t.row([study.user(u).to_owned(), w.to_string(), opt_id(l)]);
    }
    out.add("assignments.csv", t.into_bytes());
    if run.embedding_report.is_none() {
        let rows = run
            .embedding
            .points()
            .iter()
            .map(|p| (study.user(p.user).to_owned(), p.week, p.x, p.y));
        out.add("embedding.csv", io::embedding_csv(rows));
    }
    Ok(())
}

fn landscape(cfg: &RunConfig) -> Result<Outputs> {
    let study = Study::load(cfg)?;
    let run = landscape_run(cfg, &study, params(cfg)?)?;
    let mut out = Outputs::default();
    landscape_files(&mut out, cfg, &study, &run)?;
    Ok(out)
}

pub struct MeasureSet {
    pub table: HomogeneityTable,
    pub ranking: HomogeneityRanking,
    pub beliefs: Vec<BeliefBias>,
    pub profiles: ProfileSet,
    pub bias: AttractorBiasTable,
}

pub fn measure_set(cfg: &RunConfig, study: &Study, run: &LandscapeRun) -> Result<MeasureSet> {
    let wac = WeeklyAttractorCounts::from_assignments(&run.assignments, &study.counts);
    let table = weekly_homogeneity(&wac, cfg.homogeneity());
    let ranking = mean_homogeneity_ranking(&table, cfg.up_to_week);
    let beliefs = belief_bias(&study.counts)?;
    let profiles = attractor_profiles(&run.assignments, &study.counts, study.counts.weeks());
    let bias = attractor_bias(&profiles, &beliefs);
    Ok(MeasureSet {
        table,
        ranking,
        beliefs,
        profiles,
        bias,
    })
}

fn homogeneity_csv(table: &HomogeneityTable) -> Vec<u8> {
    let mut t = Table::new(["attractor", "week", "H"]);
    for r in &table.records {
        t.row([r.attractor.to_string(), r.week.to_string(), num(r.h)]);
    }
    t.into_bytes()
}

fn ranking_csv(ranking: &HomogeneityRanking) -> Vec<u8> {
    let mut t = Table::new(["rank", "attractor", "mean_H"]);
    for (i, (a, h)) in ranking.ranked.iter().enumerate() {
        t.row([(i + 1).to_string(), a.to_string(), num(*h)]);
    }
    for a in &ranking.excluded {
        t.row([String::new(), a.to_string(), String::new()]);
    }
    t.into_bytes()
}

fn attractor_bias_csv(k: u32, bias: &AttractorBiasTable) -> Vec<u8> {
    let mut t = Table::new(["attractor", "bias", "dropped_mass"]);
    for a in 0..k {
        t.row([
            a.to_string(),
            opt(bias.bias.get(&a).copied()),
            num(bias.dropped_mass.get(&a).copied().unwrap_or(0.0)),
        ]);
    }
    t.into_bytes()
}

fn measures(cfg: &RunConfig) -> Result<Outputs> {
    let study = Study::load(cfg)?;
    let run = landscape_run(cfg, &study, params(cfg)?)?;
    let m = measure_set(cfg, &study, &run)?;
    let mut out = Outputs::default();
    out.add("homogeneity.csv", homogeneity_csv(&m.table));
    out.add("homogeneity_ranking.csv", ranking_csv(&m.ranking));
    let mut t = Table::new([
        "belief".to_owned(),
        format!("{}_p", study.name(Community::A)),
        format!("{}_p", study.name(Community::B)),
        "bias".to_owned(),
    ]);
    for b in &m.beliefs {
        t.row([b.belief.to_string(), num(b.p_a), num(b.p_b), num(b.bias)]);
    }
    out.add("belief_bias.csv", t.into_bytes());
    out.add(
        "attractor_bias.csv",
        attractor_bias_csv(run.assignments.k, &m.bias),
    );
    let mut t = Table::new(["attractor", "belief", "frequency"]);
    for p in &m.profiles.profiles {
        for (b, &f) in p.frequency.iter().enumerate().filter(|(_, f)| **f > 0.0) {
            t.row([p.attractor.to_string(), b.to_string(), num(f)]);
        }
    }
    out.add("profiles.csv", t.into_bytes());
    Ok(out)
}

pub fn spike_report(
    cfg: &RunConfig,
    study: &Study,
    run: &LandscapeRun,
    params: SmoothingParams,
) -> SpikeReport {
    let activity = AttractorActivity::from_assignments(&run.assignments, &study.counts);
    detect_spikes(&activity, &spike_config(cfg, params))
}

fn spikes_csv(report: &SpikeReport) -> Vec<u8> {
    let mut t = Table::new([
        "attractor",
        "week",
        "population",
        "p",
        "p_hat",
        "x",
        "x_hat",
        "sigma",
        "z",
        "is_spike",
        "degenerate",
    ]);
    for s in &report.stats {
        t.row([
            s.attractor.to_string(),
            s.week.to_string(),
            s.population.code().to_owned(),
            num(s.p),
            num(s.p_hat),
            s.x.to_string(),
            num(s.x_hat),
            num(s.sigma),
            opt(s.z),
            s.is_spike.to_string(),
            s.degenerate.to_string(),
        ]);
    }
    t.into_bytes()
}

fn events(cfg: &RunConfig) -> Result<Outputs> {
    let study = Study::load(cfg)?;
    let p = params(cfg)?;
    let run = landscape_run(cfg, &study, p)?;
    let report = spike_report(cfg, &study, &run, p);
    let mut out = Outputs::default();
    out.add("spikes.csv", spikes_csv(&report));
    let mut t = Table::new(["attractor", "week", "population", "x_hat", "x"]);
    for s in &report.stats {
        t.row([
            s.attractor.to_string(),
            s.week.to_string(),
            s.population.code().to_owned(),
            num(s.x_hat),
            s.x.to_string(),
        ]);
    }
    out.add("expected_traffic.csv", t.into_bytes());
    Ok(out)
}

fn h1(cfg: &RunConfig) -> Result<Outputs> {
    let study = Study::load(cfg)?;
    let p = params(cfg)?;
    let run = landscape_run(cfg, &study, p)?;
    let wac = WeeklyAttractorCounts::from_assignments(&run.assignments, &study.counts);
    let table = weekly_homogeneity(&wac, cfg.homogeneity());
    let ranking = mean_homogeneity_ranking(&table, cfg.up_to_week);
    let report = spike_report(cfg, &study, &run, p);
    let window = cfg.window_range()?;
    let coordinated = coordinated_spikes(&report, window.clone())?;
    let mut t = Table::new(["attractor", "week", "population", "z"]);
    for s in report.spikes() {
        if coordinated.contains(&s.attractor) && window.contains(&s.week) {
            t.row([
                s.attractor.to_string(),
                s.week.to_string(),
                s.population.code().to_owned(),
                opt(s.z),
            ]);
        }
    }
    let mut out = Outputs::default();
    out.add("homogeneity.csv", homogeneity_csv(&table));
    out.add("homogeneity_ranking.csv", ranking_csv(&ranking));
    out.add("spikes.csv", spikes_csv(&report));
    out.add("coordinated_spikes.csv", t.into_bytes());
    Ok(out)
}

pub fn amplifier_set(cfg: &RunConfig, study: &Study) -> Result<BTreeSet<UserIdx>> {
    match &cfg.amplifiers {
        Some(path) => io::read_amplifiers(path, study.counts.users()),
        None => Ok(study.counts.users().amplifiers()),
    }
}

fn h2(cfg: &RunConfig) -> Result<Outputs> {
    let study = Study::load(cfg)?;
    let p = params(cfg)?;
    let run = landscape_run(cfg, &study, p)?;
    let amplifiers = amplifier_set(cfg, &study)?;
    if amplifiers.is_empty() {
        return Err(CliError::input(
            "no amplifiers: pass --amplifiers or set \"amp\" on events",
        ));
    }
    let periods = cfg.period_spec(DEFAULT_FLOW_PERIODS)?;
    let flows = amplifier_flows(&run.assignments, &study.counts, &amplifiers, &periods)?;
    let m = measure_set(cfg, &study, &run)?;
    let weighted = weighted_bias_by_period(&flows, &m.bias.bias)?;
    let report = spike_report(cfg, &study, &run, p);

    let mut t = Table::new(["period", "attractor", "share", "core"]);
    for f in &flows.periods {
        if let Some(shares) = &f.shares {
            for (a, &s) in shares.iter().enumerate().filter(|(_, s)| **s > 0.0) {
                t.row([
                    f.period.clone(),
                    a.to_string(),
                    num(s),
                    f.coverage.contains(&(a as u32)).to_string(),
                ]);
            }
        }
    }
    let mut totals = Table::new(["period", "first_week", "last_week", "amplifier_events"]);
    for f in &flows.periods {
        totals.row([
            f.period.clone(),
            f.weeks.start.to_string(),
            (f.weeks.end - 1).to_string(),
            f.events.to_string(),
        ]);
    }
    let mut wb = Table::new(["period", "weighted_bias"]);
    for (name, v) in &weighted {
        wb.row([name.clone(), opt(*v)]);
    }
    // Spikes in the last period, with that period's amplifier share.
    let last = flows.periods.last().expect("period spec is non-empty");
    let mut late = Table::new(["attractor", "week", "population", "z", "amplifier_share"]);
    for s in report.spikes().filter(|s| last.weeks.contains(&s.week)) {
        let share = last.shares.as_ref().map(|sh| sh[s.attractor as usize]);
        late.row([
            s.attractor.to_string(),
            s.week.to_string(),
            s.population.code().to_owned(),
            opt(s.z),
            opt(share),
        ]);
    }
    let mut out = Outputs::default();
    out.add("flows.csv", t.into_bytes());
    out.add("flow_periods.csv", totals.into_bytes());
    out.add("weighted_bias.csv", wb.into_bytes());
    out.add(
        "attractor_bias.csv",
        attractor_bias_csv(run.assignments.k, &m.bias),
    );
    out.add("late_spikes.csv", late.into_bytes());
    Ok(out)
}

fn rq2(cfg: &RunConfig) -> Result<Outputs> {
    let study = Study::load(cfg)?;
    let p = params(cfg)?;
    let run = landscape_run(cfg, &study, p)?;
    let activity = AttractorActivity::from_assignments(&run.assignments, &study.counts);
    let periods = cfg
        .period_spec(DEFAULT_PERIODS)?
        .resolve(study.counts.n_weeks())?;
    let rows = correlation_report(&activity, &periods, cfg.confidence)?;

    let mut t = Table::new(["Group", "Period", "r", "ci_low", "ci_high", "n"]);
    for r in &rows {
        let group = match &r.group {
            CorrelationGroup::Within(c) => study.name(*c).to_owned(),
            CorrelationGroup::Between => "between".to_owned(),
        };
        let c = &r.result;
        t.row([
            group,
            r.period.clone(),
            num(c.r),
            num(c.ci_low),
            num(c.ci_high),
            c.n.to_string(),
        ]);
    }
    let between: Vec<_> = rows
        .iter()
        .filter(|r| r.group == CorrelationGroup::Between)
        .collect();
    let mut tests = Table::new(["first", "second", "p"]);
    for i in 0..between.len() {
        for j in (i + 1)..between.len() {
            let pv = compare_correlations(&between[i].result, &between[j].result)?;
            tests.row([
                between[i].period.clone(),
                between[j].period.clone(),
                num(pv),
            ]);
        }
    }
    let mut means = Table::new([
        "period".to_owned(),
        "attractor".to_owned(),
        study.name(Community::A).to_owned(),
        study.name(Community::B).to_owned(),
    ]);
    for (name, weeks) in &periods {
        for row in
            period_activity_matrix(&activity, weeks.clone(), ActivityMode::PerAttractorMean)?.rows
        {
            means.row([
                name.clone(),
                row.attractor.to_string(),
                num(row.values[0]),
                num(row.values[1]),
            ]);
        }
    }
    let mut out = Outputs::default();
    out.add("correlations.csv", t.into_bytes());
    out.add("correlation_tests.csv", tests.into_bytes());
    out.add("activity_means.csv", means.into_bytes());
    Ok(out)
}

pub fn sweep_config(cfg: &RunConfig) -> Result<SweepConfig> {
    Ok(SweepConfig {
        half_lives: cfg.half_lives.clone(),
        reference: cfg.reference,
        cluster: cfg.cluster()?,
        threshold: cfg.z_threshold,
        burn_in: cfg.burn_in,
        window: cfg.window_range()?,
        basis: cfg.jaccard(),
        flag: cfg.flag(),
    })
}

fn sensitivity(cfg: &RunConfig) -> Result<Outputs> {
    let study = Study::load(cfg)?;
    let sweep = sweep_config(cfg)?;
    let rows = embedding_rows(cfg)?;
    let src = source(&rows);
    let runs = sweep
        .half_lives
        .par_iter()
        .map(|&h| run_model(&study.counts, src, h, &sweep))
        .collect::<Result<Vec<_>, _>>()?;
    let result = compare_runs(&runs, &study.counts, &sweep)?;

    let mut header = vec!["half_life".to_owned()];
    header.extend(result.half_lives.iter().map(|h| num(*h)));
    let mut t = Table::new(header);
    for (h, row) in result.half_lives.iter().zip(&result.ari) {
        let mut r = vec![num(*h)];
        r.extend(row.iter().map(|v| num(*v)));
        t.row(r);
    }
    let mut m = Table::new([
        "half_life",
        "reference_attractor",
        "matched",
        "jaccard",
        "spikes_in_window",
    ]);
    for s in &result.matches {
        m.row([
            num(s.half_life),
            s.reference_attractor.to_string(),
            opt_id(s.matched),
            num(s.jaccard),
            s.spikes_in_window.to_string(),
        ]);
    }
    let mut f = Table::new(["reference_attractor"]);
    for a in &result.flagged {
        f.row([a.to_string()]);
    }
    let mut out = Outputs::default();
    out.add("ari_matrix.csv", t.into_bytes());
    out.add("jaccard_matches.csv", m.into_bytes());
    out.add("flagged.csv", f.into_bytes());
    Ok(out)
}

pub fn scenario_config(cfg: &RunConfig) -> Result<ScenarioConfig> {
    let mut scenario = match (&cfg.scenario, &cfg.preset) {
        (Some(_), Some(_)) => {
            return Err(CliError::input(
                "give either --scenario or --preset, not both",
            ))
        }
        (Some(path), None) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
            serde_json::from_str(&text).map_err(|e| CliError::read(path, e))?
        }
        (None, preset) => {
            let name = preset.as_deref().unwrap_or("spike");
            presets::by_name(name, 0).ok_or_else(|| {
                CliError::input(format!(
                    "unknown preset {name}; expected one of {}",
                    presets::NAMES.join(", ")
                ))
            })?
        }
    };
    if let Some(seed) = cfg.seed {
        scenario.seed = seed;
    } else if cfg.scenario.is_none() {
        scenario.seed = 42;
    }
    Ok(scenario)
}

fn synth(cfg: &RunConfig) -> Result<Outputs> {
    let scenario = scenario_config(cfg)?;
    let generated = generate_stream(&scenario)?;
    let header = bld_core::datamodel::StreamHeader {
        n_beliefs: scenario.n_beliefs,
        epoch: scenario.epoch,
        community_names: ["A".into(), "B".into()],
        weeks: Some(scenario.weeks),
    };
    let rows = generated
        .embedding
        .iter()
        .map(|r| (r.user.clone(), r.week, r.x, r.y));
    let mut out = Outputs::default();
    out.add("scenario.json", json_bytes(&scenario)?);
    out.add("events.jsonl", io::events_jsonl(&header, &generated.events));
    out.add("embedding.csv", io::embedding_csv(rows));
    out.add("ground_truth.json", json_bytes(&generated.truth)?);
    Ok(out)
}

/// Planted-vs-measured summary used by tests: attractor id per planted
/// label, by majority vote over the planted user-weeks.
pub fn label_map(
    run: &LandscapeRun,
    counts: &WeeklyCounts,
    truth: &[(String, u32, u32)],
) -> BTreeMap<u32, u32> {
    let mut votes: BTreeMap<(u32, u32), u32> = BTreeMap::new();
    for (user, week, planted) in truth {
        if let Some(u) = counts.users().index_of(user) {
            if let Some(Some(a)) = run.assignments.get(u, *week) {
                *votes.entry((*planted, a)).or_insert(0) += 1;
            }
        }
    }
    let mut best: BTreeMap<u32, (u32, u32)> = BTreeMap::new();
    for ((planted, a), n) in votes {
        let e = best.entry(planted).or_insert((a, 0));
        if n > e.1 {
            *e = (a, n);
        }
    }
    best.into_iter().map(|(p, (a, _))| (p, a)).collect()
}

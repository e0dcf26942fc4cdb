//! Command-line flags, the flat TOML config file and their resolution.
//!
//! Precedence: flags, then the config file, then built-in defaults.

use std::ops::Range;
use std::path::{Path, PathBuf};

use bld_core::comparative::{FlagRule, JaccardBasis, PeriodSpec};
use bld_core::landscape::{ClusterConfig, PeakSelection};
use bld_core::measures::HomogeneityBasis;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Parser, Debug)]
#[command(
    name = "bld",
    version,
    about = "Belief-landscape dynamics over belief-labeled event streams"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Validate an events file and write the validation report.
    Validate(Flags),
    /// Decayed belief vectors and belief lifespans.
    Vectors(Flags),
    /// Density-peak attractors and weekly assignments.
    Landscape(Flags),
    /// Homogeneity and community bias.
    Measures(Flags),
    /// Population-normalized spikes and expected traffic.
    Events(Flags),
    /// Homogeneity ranking and coordinated spikes.
    H1(Flags),
    /// Amplifier flows, weighted bias and late spikes.
    H2(Flags),
    /// Activity correlations within and between communities.
    Rq2(Flags),
    /// Half-life sensitivity sweep.
    Sensitivity(Flags),
    /// Generate a synthetic scenario.
    Synth(Flags),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate(_) => "validate",
            Command::Vectors(_) => "vectors",
            Command::Landscape(_) => "landscape",
            Command::Measures(_) => "measures",
            Command::Events(_) => "events",
            Command::H1(_) => "h1",
            Command::H2(_) => "h2",
            Command::Rq2(_) => "rq2",
            Command::Sensitivity(_) => "sensitivity",
            Command::Synth(_) => "synth",
        }
    }

    pub fn flags(&self) -> &Flags {
        match self {
            Command::Validate(f)
            | Command::Vectors(f)
            | Command::Landscape(f)
            | Command::Measures(f)
            | Command::Events(f)
            | Command::H1(f)
            | Command::H2(f)
            | Command::Rq2(f)
            | Command::Sensitivity(f)
            | Command::Synth(f) => f,
        }
    }
}

#[derive(ValueEnum, Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum JaccardBasisArg {
    MemberUsers,
    BeliefSupport,
}

#[derive(ValueEnum, Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum HomogeneityBasisArg {
    UniqueUsers,
    TweetVolume,
}

#[derive(ValueEnum, Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum FlagRuleArg {
    Coordinated,
    AnySpike,
}

/// Settings shared by every subcommand. Each also has a config-file key
/// (the flag name with `_` for `-`).
#[derive(Args, Deserialize, Debug, Clone, Default)]
#[serde(deny_unknown_fields)]
pub struct Flags {
    /// Flat TOML file with defaults for any of these settings.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Events file (JSONL with a "#!" header line).
    #[arg(long)]
    pub events: Option<PathBuf>,
    /// Precomputed embedding (user,week,x,y); the fallback projection is
    /// used without one.
    #[arg(long)]
    pub embedding: Option<PathBuf>,
    /// Amplifier user ids, one per line; defaults to the events' amp flags.
    #[arg(long)]
    pub amplifiers: Option<PathBuf>,
    /// Scenario JSON for `synth`.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Belief-vector half-life in weeks [default: 5].
    #[arg(long)]
    pub half_life: Option<f64>,
    /// Number of attractors.
    #[arg(long)]
    pub k: Option<usize>,
    /// Select every peak with density*delta above this instead of `k`.
    #[arg(long)]
    pub gamma_threshold: Option<f64>,
    /// Kernel bandwidth [default: bounding-box diagonal / 20].
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Points below this density are noise [default: 0].
    #[arg(long)]
    pub noise_floor: Option<f64>,
    /// Spike threshold on z [default: 2].
    #[arg(long)]
    pub z_threshold: Option<f64>,
    /// Weeks excluded from spike flags [default: ceil(half-life)].
    #[arg(long)]
    pub burn_in: Option<u32>,
    /// Named inclusive week ranges, e.g. pre=0..19,event=20..23,post=24..
    #[arg(long)]
    pub periods: Option<String>,
    /// Homogeneity ranking uses weeks before this one [default: 20].
    #[arg(long)]
    pub up_to_week: Option<u32>,
    /// Inclusive spike window for coordinated spikes and sweep matches
    /// [default: 20..21].
    #[arg(long)]
    pub window: Option<String>,
    /// Comma-separated half-lives for `sensitivity` [default: 4,5,6,7,8].
    #[arg(long, value_delimiter = ',')]
    pub half_lives: Option<Vec<f64>>,
    /// Reference half-life for `sensitivity` [default: 5].
    #[arg(long)]
    pub reference: Option<f64>,
    #[arg(long, value_enum)]
    pub jaccard_basis: Option<JaccardBasisArg>,
    #[arg(long, value_enum)]
    pub homogeneity_basis: Option<HomogeneityBasisArg>,
    /// Which reference attractors `sensitivity` tracks.
    #[arg(long, value_enum)]
    pub flag_rule: Option<FlagRuleArg>,
    /// Confidence level of correlation intervals [default: 0.95].
    #[arg(long)]
    pub confidence: Option<f64>,
    /// Seed for `synth` (overrides the scenario's).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Built-in scenario for `synth`: spike, null, rehearsal, mixtures,
    /// correlated.
    #[arg(long)]
    pub preset: Option<String>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

macro_rules! overlay {
    ($flags:expr, $file:expr, $($field:ident),*) => {
        Flags {
            config: $flags.config.clone(),
            $($field: $flags.$field.clone().or_else(|| $file.$field.clone()),)*
        }
    };
}

impl Flags {
    /// Fills unset flags from the config file, if one was given.
    pub fn with_file(&self) -> Result<Flags> {
        let Some(path) = &self.config else {
            return Ok(self.clone());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
        let mut file: Flags = toml::from_str(&text).map_err(|e| CliError::read(path, e))?;
        // Relative paths in the file are relative to the file.
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut file.events,
            &mut file.embedding,
            &mut file.amplifiers,
            &mut file.scenario,
            &mut file.out,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(overlay!(
            self,
            file,
            events,
            embedding,
            amplifiers,
            scenario,
            out,
            half_life,
            k,
            gamma_threshold,
            bandwidth,
            noise_floor,
            z_threshold,
            burn_in,
            periods,
            up_to_week,
            window,
            half_lives,
            reference,
            jaccard_basis,
            homogeneity_basis,
            flag_rule,
            confidence,
            seed,
            preset,
            threads
        ))
    }
}

/// Fully resolved settings. Serialized into the run manifest.
#[derive(Serialize, Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub events: Option<PathBuf>,
    pub embedding: Option<PathBuf>,
    pub amplifiers: Option<PathBuf>,
    pub scenario: Option<PathBuf>,
    #[serde(skip)]
    pub out: PathBuf,
    pub half_life: f64,
    pub k: Option<usize>,
    pub gamma_threshold: Option<f64>,
    pub bandwidth: Option<f64>,
    pub noise_floor: f64,
    pub z_threshold: f64,
    pub burn_in: Option<u32>,
    pub periods: Option<String>,
    pub up_to_week: u32,
    pub window: String,
    pub half_lives: Vec<f64>,
    pub reference: f64,
    pub jaccard_basis: JaccardBasisArg,
    pub homogeneity_basis: HomogeneityBasisArg,
    pub flag_rule: FlagRuleArg,
    pub confidence: f64,
    pub seed: Option<u64>,
    pub preset: Option<String>,
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn resolve(flags: &Flags) -> Result<Self> {
        let f = flags.with_file()?;
        let cfg = RunConfig {
            events: f.events,
            embedding: f.embedding,
            amplifiers: f.amplifiers,
            scenario: f.scenario,
            out: f.out.unwrap_or_else(|| PathBuf::from("out")),
            half_life: f.half_life.unwrap_or(5.0),
            k: f.k,
            gamma_threshold: f.gamma_threshold,
            bandwidth: f.bandwidth,
            noise_floor: f.noise_floor.unwrap_or(0.0),
            z_threshold: f.z_threshold.unwrap_or(bld_core::events::DEFAULT_THRESHOLD),
            burn_in: f.burn_in,
            periods: f.periods,
            up_to_week: f.up_to_week.unwrap_or(20),
            window: f.window.unwrap_or_else(|| "20..21".into()),
            half_lives: f
                .half_lives
                .unwrap_or_else(|| vec![4.0, 5.0, 6.0, 7.0, 8.0]),
            reference: f.reference.unwrap_or(5.0),
            jaccard_basis: f.jaccard_basis.unwrap_or(JaccardBasisArg::MemberUsers),
            homogeneity_basis: f
                .homogeneity_basis
                .unwrap_or(HomogeneityBasisArg::UniqueUsers),
            flag_rule: f.flag_rule.unwrap_or(FlagRuleArg::Coordinated),
            confidence: f.confidence.unwrap_or(0.95),
            seed: f.seed,
            preset: f.preset,
            threads: f.threads,
        };
        if !(cfg.confidence > 0.0 && cfg.confidence < 1.0) {
            return Err(CliError::input(format!(
                "confidence must be in (0, 1), got {}",
                cfg.confidence
            )));
        }
        if cfg.threads == Some(0) {
            return Err(CliError::input("--threads must be at least 1"));
        }
        Ok(cfg)
    }

    pub fn events_path(&self) -> Result<&Path> {
        self.events
            .as_deref()
            .ok_or_else(|| CliError::input("--events is required"))
    }

    pub fn cluster(&self) -> Result<ClusterConfig> {
        let selection = match (self.k, self.gamma_threshold) {
            (Some(k), None) => PeakSelection::TopK(k),
            (None, Some(g)) => PeakSelection::GammaThreshold(g),
            (Some(_), Some(_)) => {
                return Err(CliError::input(
                    "give either --k or --gamma-threshold, not both",
                ))
            }
            (None, None) => {
                return Err(CliError::input(
                    "attractor selection needs --k or --gamma-threshold",
                ))
            }
        };
        Ok(ClusterConfig {
            bandwidth: self.bandwidth,
            selection,
            noise_floor: self.noise_floor,
        })
    }

    /// The configured periods, or `default` when none were given.
    pub fn period_spec(&self, default: &str) -> Result<PeriodSpec> {
        Ok(PeriodSpec::parse(
            self.periods.as_deref().unwrap_or(default),
        )?)
    }

    /// The inclusive `a..b` window as a half-open range.
    pub fn window_range(&self) -> Result<Range<u32>> {
        parse_inclusive(&self.window)
    }

    pub fn jaccard(&self) -> JaccardBasis {
        match self.jaccard_basis {
            JaccardBasisArg::MemberUsers => JaccardBasis::MemberUsers,
            JaccardBasisArg::BeliefSupport => JaccardBasis::BeliefSupport,
        }
    }

    pub fn homogeneity(&self) -> HomogeneityBasis {
        match self.homogeneity_basis {
            HomogeneityBasisArg::UniqueUsers => HomogeneityBasis::UniqueUsers,
            HomogeneityBasisArg::TweetVolume => HomogeneityBasis::TweetVolume,
        }
    }

    pub fn flag(&self) -> FlagRule {
        match self.flag_rule {
            FlagRuleArg::Coordinated => FlagRule::Coordinated,
            FlagRuleArg::AnySpike => FlagRule::AnySpike,
        }
    }
}

fn parse_inclusive(text: &str) -> Result<Range<u32>> {
    let bad = || CliError::input(format!("bad week window {text:?}; expected a..b"));
    let (a, b) = text.split_once("..").ok_or_else(bad)?;
    let a: u32 = a.trim().parse().map_err(|_| bad())?;
    let b: u32 = b.trim().parse().map_err(|_| bad())?;
    if b < a {
        return Err(bad());
    }
    Ok(a..b + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let cfg = RunConfig::resolve(&Flags::default()).unwrap();
        assert_eq!(cfg.half_life, 5.0);
        assert_eq!(cfg.z_threshold, 2.0);
        assert_eq!(cfg.window_range().unwrap(), 20..22);
        assert!(cfg.cluster().is_err());
    }

    #[test]
    fn flags_beat_file_beat_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            "half_life = 7.0\nk = 4\nz_threshold = 3.0\nevents = \"ev.jsonl\"\n",
        )
        .unwrap();
        let flags = Flags {
            config: Some(path),
            half_life: Some(6.0),
            ..Flags::default()
        };
        let cfg = RunConfig::resolve(&flags).unwrap();
        assert_eq!(cfg.half_life, 6.0);
        assert_eq!(cfg.k, Some(4));
        assert_eq!(cfg.z_threshold, 3.0);
        assert_eq!(cfg.confidence, 0.95);
        assert_eq!(cfg.events.unwrap(), dir.path().join("ev.jsonl"));
    }

    #[test]
    fn unknown_file_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "halflife = 7.0\n").unwrap();
        let flags = Flags {
            config: Some(path),
            ..Flags::default()
        };
        assert!(matches!(
            RunConfig::resolve(&flags),
            Err(CliError::Input(_))
        ));
    }

    #[test]
    fn windows() {
        assert_eq!(parse_inclusive("20..23").unwrap(), 20..24);
        assert!(parse_inclusive("5..3").is_err());
        assert!(parse_inclusive("5").is_err());
    }
}

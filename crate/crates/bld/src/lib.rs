//! File formats, run orchestration and the `bld` command-line front-end
//! for `bld-core`.

pub mod commands;
pub mod config;
pub mod error;
pub mod format;
pub mod io;

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::commands::Outputs;
use crate::config::{Command, RunConfig};
use crate::error::{CliError, Result};

pub const MANIFEST: &str = "run-manifest.json";

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Serialize)]
struct InputHash {
    role: &'static str,
    path: PathBuf,
    sha256: String,
}

#[derive(Serialize)]
struct OutputHash<'a> {
    file: &'a str,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    core_version: &'static str,
    command: &'a str,
    config: &'a RunConfig,
    config_sha256: String,
    inputs: Vec<InputHash>,
    outputs: Vec<OutputHash<'a>>,
}

/// Content hashes of the run's inputs, config and outputs. Thread count
/// and output directory are left out so reruns compare byte for byte.
fn manifest(command: &Command, cfg: &RunConfig, outputs: &Outputs) -> Result<Vec<u8>> {
    let config_json = serde_json::to_vec(cfg).map_err(CliError::internal)?;
    let mut inputs = Vec::new();
    let roles = [
        ("config", command.flags().config.as_ref()),
        ("events", cfg.events.as_ref()),
        ("embedding", cfg.embedding.as_ref()),
        ("amplifiers", cfg.amplifiers.as_ref()),
        ("scenario", cfg.scenario.as_ref()),
    ];
    for (role, path) in roles {
        if let Some(path) = path {
            let bytes = fs::read(path).map_err(|e| CliError::read(path, e))?;
            inputs.push(InputHash {
                role,
                path: path.clone(),
                sha256: sha256_hex(&bytes),
            });
        }
    }
    let doc = Manifest {
        tool: "bld",
        version: env!("CARGO_PKG_VERSION"),
        core_version: bld_core::VERSION,
        command: command.name(),
        config: cfg,
        config_sha256: sha256_hex(&config_json),
        inputs,
        outputs: outputs
            .files
            .iter()
            .map(|(name, bytes)| OutputHash {
                file: name,
                sha256: sha256_hex(bytes),
            })
            .collect(),
    };
    format::json_bytes(&doc)
}

/// Writes every file or, on the first failure, removes what was written.
fn write_all(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<()> {
    let created = !dir.exists();
    fs::create_dir_all(dir).map_err(|e| CliError::internal(format!("{}: {e}", dir.display())))?;
    let mut written = Vec::new();
    for (name, bytes) in files {
        let path = dir.join(name);
        if let Err(e) = fs::write(&path, bytes) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            let _ = fs::remove_file(&path);
            if created {
                let _ = fs::remove_dir(dir);
            }
            return Err(CliError::internal(format!("{}: {e}", path.display())));
        }
        written.push(path);
    }
    Ok(())
}

/// Runs `f` on a pool of `threads` workers, or the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(CliError::internal)?;
            Ok(pool.install(f))
        }
    }
}

/// Produces a subcommand's files and manifest without writing them.
pub fn produce(command: &Command) -> Result<(RunConfig, Outputs)> {
    let cfg = RunConfig::resolve(command.flags())?;
    let mut outputs = with_threads(cfg.threads, || commands::execute(command.name(), &cfg))??;
    let manifest = manifest(command, &cfg, &outputs)?;
    outputs.files.push((MANIFEST.to_owned(), manifest));
    Ok((cfg, outputs))
}

/// Runs a subcommand and writes its outputs.
pub fn run(command: &Command) -> Result<Outputs> {
    let (cfg, outputs) = produce(command)?;
    write_all(&cfg.out, &outputs.files)?;
    Ok(outputs)
}

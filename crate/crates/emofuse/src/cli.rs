//! Command-line front end. Every command resolves and checks its whole
//! configuration and inputs before it writes anything.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};

use crate::config::{Overrides, Preset, RunConfig};
use crate::error::{self, Error, Result};
use crate::formats::manifest::load_manifest;
use crate::formats::scores::load_scores;
use crate::pipeline::{self, Outputs, LABELS_FILE, RESULTS_JSON, RESULTS_TEXT, RUN_LOG};
use crate::synth::{synth_corpus, SynthSpec};

#[derive(Debug, Parser)]
#[command(name = "emofuse", version, about = "Text, acoustic and fused emotion classifiers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus: manifest, feature CSVs and a spec echo.
    SynthData {
        /// Generator spec (TOML).
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the multi-resolution CNN on transcripts, per cross-validation round.
    TrainText(Common),
    /// Train the LSTM on acoustic feature sequences, per round.
    TrainAcoustic(Common),
    /// Fit word-weight tables and score e-vectors, per round.
    TrainEvector(Common),
    /// Late fusion of earlier runs' scores with a linear SVM.
    Fuse {
        #[command(flatten)]
        common: Common,
        /// Comma-separated, systems within a combination joined by `+`,
        /// e.g. `MCNN,LSTM,MCNN+LSTM`.
        #[arg(long, value_delimiter = ',')]
        combinations: Option<Vec<String>>,
    },
    /// Text model accuracy as a function of the number of conv modules.
    SweepModules {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        max_modules: Option<usize>,
    },
    /// Metrics of a score file on its test split.
    Evaluate {
        #[arg(long)]
        scores: PathBuf,
        /// Manifest to take labels and class names from; defaults to the
        /// labels stored with the scores.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Leave WA out of the table.
        #[arg(long)]
        no_wa: bool,
    },
}

fn resolve(common: &Common, combinations: Option<Vec<String>>) -> Result<crate::config::Resolved> {
    let cfg = RunConfig::load(&common.config)?;
    cfg.resolve(&Overrides {
        seed: common.seed,
        out: common.out.clone(),
        preset: common.preset,
        combinations,
    })
}

fn log_line(out: &Path, command: &str, outputs: &Outputs) -> Result<()> {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let path = out.join(RUN_LOG);
    let mut f = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&path)
        .map_err(|e| Error::io(&path, e))?;
    writeln!(f, "unix_time={secs} command={command} status=ok files={}", outputs.files.len())
        .map_err(|e| Error::io(&path, e))
}

fn commit(out: &Path, command: &str, outputs: &Outputs) -> Result<()> {
    outputs.write(out)?;
    log_line(out, command, outputs)
}

pub fn run<I, T>(args: I) -> Result<String>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::Usage(e.to_string()))?;
    execute(cli.command)
}

/// Runs one command; the returned text is what gets printed on success.
pub fn execute(command: Command) -> Result<String> {
    match command {
        Command::SynthData { config, seed, out } => {
            let spec: SynthSpec = toml::from_str(&error::read_to_string(&config)?)
                .map_err(|e| Error::config(format!("{}: {}", config.display(), e.message())))?;
            let corpus = synth_corpus(&spec, seed)?;
            corpus.write(&out)?;
            let mut o = Outputs::default();
            o.add("manifest.jsonl", String::new());
            log_line(&out, "synth-data", &o)?;
            Ok(format!("wrote {} utterances to {}\n", corpus.utterances.len(), out.display()))
        }
        Command::TrainText(common) => train(&common, "train-text", pipeline::train_text),
        Command::TrainAcoustic(common) => train(&common, "train-acoustic", pipeline::train_acoustic_system),
        Command::TrainEvector(common) => train(&common, "train-evector", pipeline::train_evector),
        Command::Fuse { common, combinations } => {
            let cfg = resolve(&common, combinations)?;
            let inputs = pipeline::load_fusion_inputs(&cfg)?;
            let run = pipeline::fuse(&cfg, &inputs)?;
            commit(&cfg.out, "fuse", &run.outputs)?;
            Ok(run.table.render_text())
        }
        Command::SweepModules { common, max_modules } => {
            let mut cfg = resolve(&common, None)?;
            if let Some(n) = max_modules {
                if n == 0 || n > cfg.sweep.kernel_sizes.len() {
                    if n > 0 && RunConfig::load(&common.config)?.sweep.kernel_sizes.is_none() {
                        cfg.sweep.kernel_sizes = crate::config::default_sweep_kernels(n);
                    } else {
                        return Err(Error::config(format!("--max-modules {n} needs that many kernel sizes")));
                    }
                }
                cfg.sweep.max_modules = n;
            }
            let prep = pipeline::prepare(&cfg)?;
            let (_, outputs) = pipeline::sweep(&cfg, &prep)?;
            commit(&cfg.out, "sweep-modules", &outputs)?;
            Ok(outputs.get("sweep.txt").unwrap_or_default().to_string())
        }
        Command::Evaluate {
            scores,
            labels,
            out,
            no_wa,
        } => {
            let lines = load_scores(&scores)?;
            let (names, by_id) = match labels {
                Some(manifest) => {
                    let c = load_manifest(&manifest)?.corpus;
                    let map: BTreeMap<String, usize> =
                        c.utterances.iter().map(|u| (u.id.clone(), u.label)).collect();
                    (c.label_names, Some(map))
                }
                None => {
                    let path = scores.parent().unwrap_or(Path::new("")).join(LABELS_FILE);
                    let names = serde_json::from_str(&error::read_to_string(&path)?)
                        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
                    (names, None)
                }
            };
            let table = pipeline::evaluate(&lines, &names, by_id.as_ref(), !no_wa)?;
            if let Some(out) = out {
                let mut o = Outputs::default();
                o.add(RESULTS_TEXT, table.render_text());
                o.add(RESULTS_JSON, table.render_json());
                commit(&out, "evaluate", &o)?;
            }
            Ok(table.render_text())
        }
    }
}

fn train(
    common: &Common,
    name: &str,
    f: fn(&crate::config::Resolved, &pipeline::Prepared) -> Result<pipeline::SystemRun>,
) -> Result<String> {
    let cfg = resolve(common, None)?;
    let prep = pipeline::prepare(&cfg)?;
    let run = f(&cfg, &prep)?;
    commit(&cfg.out, name, &run.outputs)?;
    Ok(run.table.render_text())
}

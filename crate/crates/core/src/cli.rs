//! The `autolabel` command line.
//!
//! Exit codes: 0 on success, 1 for bad input (flags, configs, documents),
//! 2 for internal failures.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use crate::error::{Error, Result};
use crate::formats::{
    kitti_rows_to_sequence, parse_kitti_calib, parse_kitti_labels, parse_pseudolabels,
    parse_sequence, parse_sparse_labels, recall_table_csv, serialize_coverage,
    serialize_metric_report, serialize_mining_pairs, serialize_pseudolabels, serialize_sequence,
    serialize_sparse_labels, serialize_weight_maps, KittiConversion, MiningPairSet,
};
use crate::losses::run_gradient_checks;
use crate::metrics::{evaluate, MetricReport};
use crate::model::{Pseudolabel, Sequence};
use crate::pipeline::{collect_pseudolabels, coverage_report, emit_fncomp_weights, TrackHypothesis};
use crate::providers::{NoiseConfig, OracleProviders};
use crate::runner::{
    pseudolabel_sequence, run_e2e, sweep_csv, sweep_max_per_track, write_artifacts, Artifacts,
    RunConfig,
};
use crate::sampling::{mine_pairs, sample_sparse, SparseLabelSet};
use crate::simulator::{simulate, IntrinsicsConfig};

/// Environment variable selecting the log level.
pub const LOG_ENV: &str = "LOGLEVEL";

#[derive(Debug, Parser)]
#[command(
    name = "autolabel",
    version,
    about = "Sparse-to-dense 3D track pseudolabeling on simulated or KITTI-format sequences"
)]
pub struct Cli {
    /// TOML run configuration; omitted sections take their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Directory for output documents. Without it the main document goes
    /// to stdout.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Seed for the simulator, the oracle noise and the sampler.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Oracle noise profile: noiseless, default, dropout or heavy.
    #[arg(long, global = true, value_name = "PROFILE")]
    pub noise: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic sequence with full ground truth.
    Simulate,
    /// Select the sparse annotation subset of a sequence.
    Sample(SampleArgs),
    /// Enumerate self, support, cycle and step-support mining pairs.
    MinePairs(MineArgs),
    /// Propagate sparse labels forward and backward and merge the results.
    Pseudolabel(PseudolabelArgs),
    /// Emit false-negative compensation weight maps for pseudolabels.
    FnWeights(LabeledArgs),
    /// Score pseudolabels against a ground-truth sequence.
    Evaluate(EvaluateArgs),
    /// Convert KITTI tracking labels into a sequence document.
    ParseKitti(KittiArgs),
    /// Compare every loss gradient with central finite differences.
    LossesCheck(LossesArgs),
    /// Simulate, sample, propagate both ways, merge, weight and evaluate.
    E2e(E2eArgs),
}

#[derive(Debug, Args)]
pub struct SequenceArg {
    /// Sequence document (falls back to `io.sequence`).
    #[arg(long, value_name = "PATH")]
    pub sequence: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub input: SequenceArg,
    /// Labeled frames per track (falls back to `sampling.max_per_track`).
    #[arg(long)]
    pub max_per_track: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SparseArgs {
    #[command(flatten)]
    pub input: SequenceArg,
    /// Sparse-label document (falls back to `io.sparse`).
    #[arg(long, value_name = "PATH")]
    pub sparse: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MineArgs {
    #[command(flatten)]
    pub inputs: SparseArgs,
    /// Waypoint window around each labeled frame, in frames.
    #[arg(long)]
    pub window: Option<u32>,
}

#[derive(Debug, Args)]
pub struct PseudolabelArgs {
    #[command(flatten)]
    pub inputs: SparseArgs,
}

#[derive(Debug, Args)]
pub struct LabeledArgs {
    #[command(flatten)]
    pub input: SequenceArg,
    /// Pseudolabel document (falls back to `io.pseudolabels`).
    #[arg(long, value_name = "PATH")]
    pub pseudolabels: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub inputs: LabeledArgs,
    /// Center distance gate for a match, meters.
    #[arg(long)]
    pub dist_threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct KittiArgs {
    /// KITTI tracking label file (falls back to `io.kitti_labels`).
    #[arg(long, value_name = "PATH")]
    pub labels: Option<PathBuf>,
    /// KITTI calibration file; without it the simulator intrinsics apply.
    #[arg(long, value_name = "PATH")]
    pub calib: Option<PathBuf>,
    /// Image width in pixels; calibration files do not record it.
    #[arg(long, default_value_t = IntrinsicsConfig::default().width)]
    pub width: u32,
    /// Image height in pixels.
    #[arg(long, default_value_t = IntrinsicsConfig::default().height)]
    pub height: u32,
    /// Identifier written into the sequence document.
    #[arg(long, default_value = "kitti")]
    pub sequence_id: String,
    /// Categories kept as vehicles, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "Car,Van")]
    pub categories: Vec<String>,
}

#[derive(Debug, Args)]
pub struct LossesArgs {
    /// Random evaluation points per loss.
    #[arg(long, default_value_t = 100)]
    pub points: usize,
}

#[derive(Debug, Args)]
pub struct E2eArgs {
    /// Labeled frames per track.
    #[arg(long)]
    pub max_per_track: Option<usize>,
    /// Waypoint window for mining pairs, in frames.
    #[arg(long)]
    pub window: Option<u32>,
    /// Center distance gate for a match, meters.
    #[arg(long)]
    pub dist_threshold: Option<f64>,
    /// Annotation-budget sweep, e.g. `max_per_track=2,4,8,16`.
    #[arg(long, value_name = "KEY=V1,V2,..")]
    pub sweep: Option<String>,
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match run(&cli, stdout) {
        Ok(()) => 0,
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if e.is_user_error() {
                1
            } else {
                2
            }
        }
    }
}

/// Runs a parsed command, writing summaries to `stdout`.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    let cfg = load_config(cli)?;
    init_logging(&cfg.log_level);
    match &cli.command {
        Command::Simulate => {
            let seq = simulate(&cfg.sim)?;
            info!("simulated {} annotations", seq.annotation_count());
            emit(cli, &cfg, stdout, vec![("sequence.txt", serialize_sequence(&seq)?)])
        }
        Command::Sample(a) => {
            let seq = read_sequence(&a.input, &cfg)?;
            let k = a.max_per_track.unwrap_or(cfg.sampling.max_per_track);
            let sparse = sample_sparse(&seq, k, cfg.sampling.seed)?;
            for t in &sparse.omitted {
                warn!("track {t} has no eligible annotation and gets no sparse label");
            }
            emit(cli, &cfg, stdout, vec![("sparse_labels.txt", serialize_sparse_labels(&sparse)?)])
        }
        Command::MinePairs(a) => {
            let (seq, sparse) = read_sparse(&a.inputs, &cfg)?;
            let window = a.window.unwrap_or(cfg.sampling.window);
            let set = MiningPairSet {
                sequence_id: seq.id.clone(),
                window,
                pairs: mine_pairs(&seq, &sparse, window),
            };
            emit(cli, &cfg, stdout, vec![("mining_pairs.txt", serialize_mining_pairs(&set)?)])
        }
        Command::Pseudolabel(a) => {
            let (seq, sparse) = read_sparse(&a.inputs, &cfg)?;
            let (fwd, bwd, merged) = pseudolabel_sequence(&seq, &sparse, &cfg.noise, &cfg.pipeline)?;
            let all: Vec<TrackHypothesis> = fwd.iter().chain(&bwd).cloned().collect();
            let coverage = coverage_report(&seq, &merged, &all);
            emit(
                cli,
                &cfg,
                stdout,
                vec![
                    ("pseudolabels.txt", serialize_pseudolabels(&seq.id, &merged)?),
                    ("pseudolabels_forward.txt", serialize_pseudolabels(&seq.id, &collect_pseudolabels(&fwd))?),
                    ("pseudolabels_backward.txt", serialize_pseudolabels(&seq.id, &collect_pseudolabels(&bwd))?),
                    ("coverage.txt", serialize_coverage(&coverage)?),
                ],
            )
        }
        Command::FnWeights(a) => {
            let (seq, labels) = read_labeled(a, &cfg)?;
            let oracle = OracleProviders::new(&seq, cfg.noise, cfg.pipeline.heatmap_stride)?;
            let maps = emit_fncomp_weights(&seq, &labels, &oracle, &cfg.pipeline)?;
            emit(cli, &cfg, stdout, vec![("weight_maps.txt", serialize_weight_maps(&seq.id, &maps)?)])
        }
        Command::Evaluate(a) => {
            let (seq, labels) = read_labeled(&a.inputs, &cfg)?;
            let mut metrics = cfg.metrics.clone();
            if let Some(d) = a.dist_threshold {
                metrics.dist_threshold = d;
                metrics.validate()?;
            }
            let report = evaluate(&seq, &labels, &metrics)?;
            write_summary(stdout, &report)?;
            emit(
                cli,
                &cfg,
                stdout,
                vec![
                    ("report.txt", serialize_metric_report(&report)?),
                    ("recall.csv", recall_table_csv(&report)?),
                ],
            )
        }
        Command::ParseKitti(a) => {
            let labels_path = a
                .labels
                .as_deref()
                .or(cfg.io.kitti_labels.as_deref())
                .ok_or_else(|| missing("KITTI label file", "--labels", "io.kitti_labels"))?;
            let rows = parse_kitti_labels(&read_text(labels_path)?)?;
            let intrinsics = match a.calib.as_deref().or(cfg.io.kitti_calib.as_deref()) {
                Some(p) => {
                    let calib = parse_kitti_calib(&read_text(p)?, a.width, a.height)?;
                    if calib.translation_ignored {
                        warn!("P2 translation column is non-zero and was dropped");
                    }
                    calib.intrinsics
                }
                None => IntrinsicsConfig {
                    width: a.width,
                    height: a.height,
                    ..IntrinsicsConfig::default()
                }
                .build()?,
            };
            let opts = KittiConversion {
                sequence_id: a.sequence_id.clone(),
                categories: a.categories.clone(),
                ..KittiConversion::default()
            };
            let (seq, stats) = kitti_rows_to_sequence(&rows, intrinsics, &opts)?;
            info!(
                "kept {} of {} rows ({} DontCare, {} other categories)",
                stats.kept, stats.input_rows, stats.dropped_dont_care, stats.dropped_category
            );
            emit(cli, &cfg, stdout, vec![("sequence.txt", serialize_sequence(&seq)?)])
        }
        Command::LossesCheck(a) => {
            let rows = run_gradient_checks(a.points, cfg.sampling.seed)?;
            writeln!(stdout, "{:<16} {:>6} {:>14}  status", "loss", "points", "max_rel_err")?;
            for r in &rows {
                let status = if r.passed { "ok" } else { "FAIL" };
                writeln!(stdout, "{:<16} {:>6} {:>14.3e}  {status}", r.loss, r.points, r.max_relative_error)?;
            }
            match rows.iter().find(|r| !r.passed) {
                Some(r) => Err(Error::Internal(format!(
                    "gradient check failed for {} (relative error {:.3e})",
                    r.loss, r.max_relative_error
                ))),
                None => Ok(()),
            }
        }
        Command::E2e(a) => {
            let mut cfg = cfg;
            if let Some(k) = a.max_per_track {
                cfg.sampling.max_per_track = k;
            }
            if let Some(w) = a.window {
                cfg.sampling.window = w;
            }
            if let Some(d) = a.dist_threshold {
                cfg.metrics.dist_threshold = d;
            }
            cfg.validate()?;
            let sweep = a.sweep.as_deref().map(parse_sweep).transpose()?;
            let out = run_e2e(&cfg)?;
            write_summary(stdout, &out.run.report)?;
            let mut artifacts = out.artifacts;
            if let Some(values) = sweep {
                let csv = sweep_csv(&sweep_max_per_track(&cfg, &values)?)?;
                stdout.write_all(csv.as_bytes())?;
                artifacts.insert("sweep_max_per_track.csv".into(), csv);
            }
            if let Some(dir) = out_dir(cli, &cfg) {
                write_artifacts(dir, &artifacts)?;
                writeln!(stdout, "wrote {} files to {}", artifacts.len(), dir.display())?;
            }
            Ok(())
        }
    }
}

/// Config file, then `--noise`, then `--seed`.
fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(name) = &cli.noise {
        cfg.noise = NoiseConfig::profile(name)?.with_seed(cfg.noise.seed);
    }
    if let Some(seed) = cli.seed {
        cfg.set_seed(seed);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn init_logging(config_level: &str) {
    let env = env_logger::Env::new().filter_or(LOG_ENV, config_level);
    // A second initialization (repeated in-process runs) keeps the first logger.
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

/// Parses `max_per_track=2,4,8`.
pub fn parse_sweep(arg: &str) -> Result<Vec<usize>> {
    let (key, values) = arg
        .split_once('=')
        .ok_or_else(|| Error::invalid(format!("sweep {arg:?} must look like max_per_track=2,4,8")))?;
    if key.trim() != "max_per_track" {
        return Err(Error::invalid(format!("cannot sweep {key:?}; only max_per_track is supported")));
    }
    let values: Vec<usize> = values
        .split(',')
        .map(|v| {
            v.trim()
                .parse()
                .ok()
                .filter(|&n| n >= 1)
                .ok_or_else(|| Error::invalid(format!("sweep value {v:?} is not a positive integer")))
        })
        .collect::<Result<_>>()?;
    Ok(values)
}

fn out_dir<'a>(cli: &'a Cli, cfg: &'a RunConfig) -> Option<&'a Path> {
    cli.out.as_deref().or(cfg.io.out_dir.as_deref())
}

/// Writes documents into the output directory, or the first one to stdout.
fn emit(cli: &Cli, cfg: &RunConfig, stdout: &mut dyn Write, docs: Vec<(&str, String)>) -> Result<()> {
    match out_dir(cli, cfg) {
        Some(dir) => {
            let artifacts: Artifacts = docs.into_iter().map(|(n, body)| (n.to_string(), body)).collect();
            write_artifacts(dir, &artifacts)?;
            for name in artifacts.keys() {
                writeln!(stdout, "wrote {}", dir.join(name).display())?;
            }
        }
        None => {
            if let Some((_, body)) = docs.into_iter().next() {
                stdout.write_all(body.as_bytes())?;
            }
        }
    }
    Ok(())
}

fn write_summary(out: &mut dyn Write, r: &MetricReport) -> Result<()> {
    let c = &r.counts;
    writeln!(
        out,
        "sequence={} MOTA={:.6} MOTP={:.6e} IDF1={:.6} AMOTA={:.6} AMOTP={:.6} tp={} fp={} fn={} idsw={} gt={}",
        r.sequence_id, r.mota, r.motp, r.idf1, r.amota, r.amotp, c.tp, c.fp, c.fn_, c.idsw, c.gt_total
    )?;
    Ok(())
}

fn missing(what: &str, flag: &str, key: &str) -> Error {
    Error::Config(format!("no {what}: pass {flag} or set {key} in the config"))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))
}

/// Reads a document, prefixing parse errors with the file name.
fn read_doc<T>(path: &Path, parse: fn(&str) -> Result<T>) -> Result<T> {
    parse(&read_text(path)?).map_err(|e| match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}

fn read_sequence(arg: &SequenceArg, cfg: &RunConfig) -> Result<Sequence> {
    let path = arg
        .sequence
        .as_deref()
        .or(cfg.io.sequence.as_deref())
        .ok_or_else(|| missing("sequence document", "--sequence", "io.sequence"))?;
    read_doc(path, parse_sequence)
}

fn read_sparse(a: &SparseArgs, cfg: &RunConfig) -> Result<(Sequence, SparseLabelSet)> {
    let seq = read_sequence(&a.input, cfg)?;
    let path = a
        .sparse
        .as_deref()
        .or(cfg.io.sparse.as_deref())
        .ok_or_else(|| missing("sparse-label document", "--sparse", "io.sparse"))?;
    let sparse = read_doc(path, parse_sparse_labels)?;
    check_same_sequence(&seq, &sparse.sequence_id)?;
    Ok((seq, sparse))
}

fn read_labeled(a: &LabeledArgs, cfg: &RunConfig) -> Result<(Sequence, Vec<Pseudolabel>)> {
    let seq = read_sequence(&a.input, cfg)?;
    let path = a
        .pseudolabels
        .as_deref()
        .or(cfg.io.pseudolabels.as_deref())
        .ok_or_else(|| missing("pseudolabel document", "--pseudolabels", "io.pseudolabels"))?;
    let set = read_doc(path, parse_pseudolabels)?;
    check_same_sequence(&seq, &set.sequence_id)?;
    Ok((seq, set.labels))
}

fn check_same_sequence(seq: &Sequence, other: &str) -> Result<()> {
    if seq.id != other {
        return Err(Error::Integrity(format!(
            "document belongs to sequence {other:?}, not {:?}",
            seq.id
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = main_with(
            std::iter::once("autolabel").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn sweep_spec_parsing() {
        assert_eq!(parse_sweep("max_per_track=2,4,8,16").unwrap(), vec![2, 4, 8, 16]);
        assert!(parse_sweep("window=2").is_err());
        assert!(parse_sweep("max_per_track=0").is_err());
        assert!(parse_sweep("max_per_track").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(call(&["--help"]).0, 0);
        let (code, _, err) = call(&["simulate", "--bogus"]);
        assert_eq!(code, 1);
        assert!(err.contains("--bogus"));
        let (code, _, err) = call(&["sample"]);
        assert_eq!(code, 1);
        assert_eq!(err.lines().count(), 1);
        assert!(err.contains("--sequence"), "{err}");
        assert_eq!(call(&["--noise", "loud", "simulate"]).0, 1);
        assert_eq!(call(&["e2e", "--sweep", "depth=1"]).0, 1);
    }

    #[test]
    fn version_mismatch_is_a_user_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("seq.txt");
        std::fs::write(&path, "sparse-autolabel/sequence v9\n").unwrap();
        let (code, _, err) = call(&["sample", "--sequence", path.to_str().unwrap()]);
        assert_eq!(code, 1);
        assert!(err.contains("v9"), "{err}");
    }
}

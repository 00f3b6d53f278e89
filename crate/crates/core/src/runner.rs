//! Run configuration and the end-to-end chain: simulate, sample, propagate
//! both ways, merge, weight maps, evaluate.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::{
    serialize_coverage, serialize_metric_report, serialize_mining_pairs, serialize_pseudolabels,
    serialize_sequence, serialize_sparse_labels, serialize_weight_maps, MiningPairSet,
};
use crate::metrics::{clear_mot, evaluate, MetricConfig, MetricReport};
use crate::model::{PropagationDirection, Pseudolabel, Sequence};
use crate::pipeline::{
    collect_pseudolabels, coverage_report, emit_fncomp_weights, merge_bidirectional, propagate,
    CoverageReport, PipelineConfig, TrackHypothesis, WeightMap,
};
use crate::providers::{NoiseConfig, OracleProviders};
use crate::sampling::{mine_pairs, sample_sparse, SparseLabelSet};
use crate::simulator::{simulate, SimConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub max_per_track: usize,
    pub seed: u64,
    /// Temporal window for mining pairs, frames.
    pub window: u32,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            max_per_track: 4,
            seed: 0,
            window: 8,
        }
    }
}

/// Input files for commands that read documents; command-line flags take
/// precedence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IoConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sequence: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sparse: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pseudolabels: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kitti_labels: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kitti_calib: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// One of error, warn, info, debug. `LOGLEVEL` overrides it.
    pub log_level: String,
    pub sim: SimConfig,
    pub noise: NoiseConfig,
    pub pipeline: PipelineConfig,
    pub sampling: SamplingConfig,
    pub metrics: MetricConfig,
    pub io: IoConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            log_level: "warn".into(),
            sim: SimConfig::default(),
            noise: NoiseConfig::default(),
            pipeline: PipelineConfig::default(),
            sampling: SamplingConfig::default(),
            metrics: MetricConfig::default(),
            io: IoConfig::default(),
        }
    }
}

pub const LOG_LEVELS: [&str; 4] = ["error", "warn", "info", "debug"];

impl RunConfig {
    /// Defaults with every oracle noise source switched off.
    pub fn noiseless() -> Self {
        Self {
            noise: NoiseConfig::noiseless(),
            ..Self::default()
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config is representable in TOML")
    }

    pub fn validate(&self) -> Result<()> {
        if !LOG_LEVELS.contains(&self.log_level.as_str()) {
            return Err(Error::Config(format!(
                "log_level {:?} is not one of {}",
                self.log_level,
                LOG_LEVELS.join(", ")
            )));
        }
        self.sim.validate()?;
        self.noise.validate()?;
        self.pipeline.validate()?;
        self.metrics.validate()?;
        if self.sampling.max_per_track == 0 {
            return Err(Error::Config("sampling.max_per_track must be >= 1".into()));
        }
        Ok(())
    }

    /// Applies one seed to every random source.
    pub fn set_seed(&mut self, seed: u64) {
        self.sim.seed = seed;
        self.noise.seed = seed;
        self.sampling.seed = seed;
    }
}

/// Everything produced by one pass of the pipeline over a sequence.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub sparse: SparseLabelSet,
    pub mining: MiningPairSet,
    pub forward: Vec<TrackHypothesis>,
    pub backward: Vec<TrackHypothesis>,
    pub merged: Vec<Pseudolabel>,
    pub weights: Vec<WeightMap>,
    pub coverage: CoverageReport,
    pub report: MetricReport,
    pub forward_mota: f64,
    pub backward_mota: f64,
}

impl PipelineRun {
    pub fn forward_labels(&self) -> Vec<Pseudolabel> {
        collect_pseudolabels(&self.forward)
    }

    pub fn backward_labels(&self) -> Vec<Pseudolabel> {
        collect_pseudolabels(&self.backward)
    }
}

/// Pseudolabels for `seq` from `sparse` under the oracle providers.
pub fn pseudolabel_sequence(
    seq: &Sequence,
    sparse: &SparseLabelSet,
    noise: &NoiseConfig,
    pipeline: &PipelineConfig,
) -> Result<(Vec<TrackHypothesis>, Vec<TrackHypothesis>, Vec<Pseudolabel>)> {
    let oracle = OracleProviders::new(seq, *noise, pipeline.heatmap_stride)?;
    let forward = propagate(seq, sparse, &oracle, &oracle, pipeline, PropagationDirection::Forward)?;
    let backward = propagate(seq, sparse, &oracle, &oracle, pipeline, PropagationDirection::Backward)?;
    let merged = merge_bidirectional(&forward, &backward, pipeline)?;
    Ok((forward, backward, merged))
}

pub fn run_pipeline(seq: &Sequence, cfg: &RunConfig) -> Result<PipelineRun> {
    cfg.validate()?;
    let sparse = sample_sparse(seq, cfg.sampling.max_per_track, cfg.sampling.seed)?;
    let mining = MiningPairSet {
        sequence_id: seq.id.clone(),
        window: cfg.sampling.window,
        pairs: mine_pairs(seq, &sparse, cfg.sampling.window),
    };
    info!(
        "sampled {} sparse labels over {} tracks ({} omitted)",
        sparse.selected_count(),
        sparse.tracks.len(),
        sparse.omitted.len()
    );
    let (forward, backward, merged) = pseudolabel_sequence(seq, &sparse, &cfg.noise, &cfg.pipeline)?;
    let oracle = OracleProviders::new(seq, cfg.noise, cfg.pipeline.heatmap_stride)?;
    let weights = emit_fncomp_weights(seq, &merged, &oracle, &cfg.pipeline)?;
    let all: Vec<TrackHypothesis> = forward.iter().chain(&backward).cloned().collect();
    let coverage = coverage_report(seq, &merged, &all);
    let report = evaluate(seq, &merged, &cfg.metrics)?;
    let forward_mota = clear_mot(seq, &collect_pseudolabels(&forward), &cfg.metrics)?.mota;
    let backward_mota = clear_mot(seq, &collect_pseudolabels(&backward), &cfg.metrics)?.mota;
    info!(
        "{} pseudolabels; MOTA {:.4} (forward {:.4}, backward {:.4})",
        merged.len(),
        report.mota,
        forward_mota,
        backward_mota
    );
    Ok(PipelineRun {
        sparse,
        mining,
        forward,
        backward,
        merged,
        weights,
        coverage,
        report,
        forward_mota,
        backward_mota,
    })
}

/// Named output documents of an end-to-end run.
pub type Artifacts = BTreeMap<String, String>;

#[derive(Debug, Clone)]
pub struct E2eOutput {
    pub sequence: Sequence,
    pub run: PipelineRun,
    pub artifacts: Artifacts,
}

pub fn run_e2e(cfg: &RunConfig) -> Result<E2eOutput> {
    cfg.validate()?;
    let sequence = simulate(&cfg.sim)?;
    info!(
        "simulated {} frames, {} tracks, {} annotations",
        sequence.frames.len(),
        sequence.track_ids().len(),
        sequence.annotation_count()
    );
    let run = run_pipeline(&sequence, cfg)?;
    let id = &sequence.id;
    let mut artifacts = Artifacts::new();
    artifacts.insert("config.toml".into(), cfg.to_toml());
    artifacts.insert("sequence.txt".into(), serialize_sequence(&sequence)?);
    artifacts.insert("sparse_labels.txt".into(), serialize_sparse_labels(&run.sparse)?);
    artifacts.insert("mining_pairs.txt".into(), serialize_mining_pairs(&run.mining)?);
    artifacts.insert("pseudolabels.txt".into(), serialize_pseudolabels(id, &run.merged)?);
    artifacts.insert(
        "pseudolabels_forward.txt".into(),
        serialize_pseudolabels(id, &run.forward_labels())?,
    );
    artifacts.insert(
        "pseudolabels_backward.txt".into(),
        serialize_pseudolabels(id, &run.backward_labels())?,
    );
    artifacts.insert("weight_maps.txt".into(), serialize_weight_maps(id, &run.weights)?);
    artifacts.insert("coverage.txt".into(), serialize_coverage(&run.coverage)?);
    artifacts.insert("report.txt".into(), serialize_metric_report(&run.report)?);
    artifacts.insert("recall.csv".into(), crate::formats::recall_table_csv(&run.report)?);
    Ok(E2eOutput {
        sequence,
        run,
        artifacts,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub max_per_track: usize,
    pub sparse_labels: usize,
    pub pseudolabels: usize,
    /// Mean over ground-truth tracks of the covered-frame fraction.
    pub mean_coverage: f64,
    pub mota: f64,
    pub motp: f64,
    pub idf1: f64,
    pub amota: f64,
}

/// Re-runs the pipeline on one simulated sequence for each annotation
/// budget.
pub fn sweep_max_per_track(cfg: &RunConfig, values: &[usize]) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let seq = simulate(&cfg.sim)?;
    values
        .iter()
        .map(|&k| {
            let mut c = cfg.clone();
            c.sampling.max_per_track = k;
            let run = run_pipeline(&seq, &c)?;
            let tracks = &run.coverage.tracks;
            let mean_coverage = if tracks.is_empty() {
                0.0
            } else {
                tracks.iter().map(|t| t.fraction).sum::<f64>() / tracks.len() as f64
            };
            Ok(SweepRow {
                max_per_track: k,
                sparse_labels: run.sparse.selected_count(),
                pseudolabels: run.merged.len(),
                mean_coverage,
                mota: run.report.mota,
                motp: run.report.motp,
                idf1: run.report.idf1,
                amota: run.report.amota,
            })
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "max_per_track",
        "sparse_labels",
        "pseudolabels",
        "mean_coverage",
        "mota",
        "motp",
        "idf1",
        "amota",
    ])
    .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.max_per_track.to_string(),
            r.sparse_labels.to_string(),
            r.pseudolabels.to_string(),
            r.mean_coverage.to_string(),
            r.mota.to_string(),
            r.motp.to_string(),
            r.idf1.to_string(),
            r.amota.to_string(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Writes every artifact into `dir`, creating it if needed.
pub fn write_artifacts(dir: &Path, artifacts: &Artifacts) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, body) in artifacts {
        std::fs::write(dir.join(name), body)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips_through_toml() {
        for cfg in [RunConfig::default(), RunConfig::noiseless()] {
            assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        }
    }

    #[test]
    fn config_rejects_unknown_keys_and_bad_values() {
        assert!(matches!(RunConfig::from_toml("[sim]\nbogus = 1\n"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_toml("log_level = \"loud\"\n"), Err(Error::Config(_))));
        assert!(matches!(
            RunConfig::from_toml("[pipeline]\ndiscard_threshold = 0.9\n"),
            Err(Error::Config(_))
        ));
        let partial = RunConfig::from_toml("[sampling]\nmax_per_track = 2\n").unwrap();
        assert_eq!(partial.sampling.max_per_track, 2);
        assert_eq!(partial.sim, SimConfig::default());
    }
}

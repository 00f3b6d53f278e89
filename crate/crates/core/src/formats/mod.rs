//! KITTI ingestion and the crate's own line-delimited document formats.
//!
//! Every internal document starts with a `sparse-autolabel/<kind> v1`
//! header followed by `tag key=value ...` records. Floats carry 17
//! significant digits so documents round-trip bit-exactly.

mod kitti;
mod labels;
mod reports;
mod sequence;
pub(crate) mod text;

pub use kitti::{
    kitti_rows_to_sequence, parse_kitti_calib, parse_kitti_labels, serialize_kitti_labels,
    ConversionStats, KittiCalib, KittiConversion, KittiLabelRow, DONT_CARE,
};
pub use labels::{
    parse_mining_pairs, parse_sparse_labels, serialize_mining_pairs, serialize_sparse_labels,
    MiningPairSet, MINING_KIND, SPARSE_KIND,
};
pub use reports::{
    parse_coverage, parse_metric_report, parse_weight_maps, recall_table_csv, serialize_coverage,
    serialize_metric_report, serialize_weight_maps, WeightMapSet, COVERAGE_KIND, REPORT_KIND,
    WEIGHTS_KIND,
};
pub use sequence::{
    parse_pseudolabels, parse_sequence, serialize_pseudolabels, serialize_sequence,
    PseudolabelSet, PSEUDOLABELS_KIND, SEQUENCE_KIND,
};

/// Schema version understood by every internal reader.
pub const VERSION: &str = "v1";

#[cfg(test)]
mod tests;

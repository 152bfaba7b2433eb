//! Scenario simulation, corpora, batch evaluation, sweeps and dataset I/O.

mod batch;
mod corpus;
mod sim;
mod snapshot;

pub use batch::{
    ablation_sweep, antenna_subset, bandwidth_subset, config_digest, decode_corpus, evaluate_roi,
    percentile_nearest_rank, report_from_decoded, run_batch, BatchRun, DecodedTag, ErrorStats, PipelineConfig,
    RoiRates, RunReport, RunTiming, SweepAxis, SweepRow, SweepTable, TagOutcome,
};
pub use corpus::{gate_corpus, generate_corpus, CorpusConfig, GateConfig};
pub use sim::{simulate_capture, tag_seed, CaptureData, SceneSpec, SimConfig, SimulatedCapture};
pub use snapshot::{
    channel_from_snapshots, export_packets, export_snapshots, group_snapshots, import_packets, import_snapshots,
    parse_jsonl, parse_snapshots, write_jsonl, PacketChannel, PacketRecord, SnapshotGroup, SnapshotRecord,
};

//! Geometry, carrier planning, scenes, channel matrices and the forward model.

mod channel;
mod config;
mod geometry;
mod physics;
mod plan;
mod scene;

pub use channel::{wrap_phase, ChannelMatrix, MAX_QUALITY_DB};
pub use config::ModelConfig;
pub use geometry::{distance, ArrayGeometry, Point3};
pub use physics::{
    distance_resolution, fraunhofer_distance, path_length, synth_channel, theoretical_phase,
    thermal_noise_dbm, validate_emission, EmissionLimits, EmissionReport, ToneCheck,
    SPEED_OF_LIGHT,
};
pub use plan::{
    CarrierPlan, CHANNEL_OUT_RATE_HZ, DESK_CAPTURE_RATE_HZ, FULL_CAPTURE_RATE_HZ,
    PAPER_CARRIERS_MHZ,
};
pub use scene::{Path, PathKind, Scene, SceneTag};

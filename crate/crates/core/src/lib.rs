//! Wideband multisine backscatter RFID: excitation and tag-reply synthesis,
//! digital channelization, packet decoding under clock impairments, and
//! near-field hologram localization.

pub mod channelizer;
pub mod decoder;
pub mod error;
pub mod harness;
pub mod locator;
pub mod model;
pub mod waveform;

pub use error::{Error, Result};

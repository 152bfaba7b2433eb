//! Digital down-conversion of a wideband capture into per-carrier streams,
//! and DC self-interference removal.

mod bank;
mod filter;
mod notch;

pub use bank::{
    channelize, channelize_with, compression_report, read_bank, write_bank, ChannelBank,
    ChannelizerConfig, CompressionReport, WidebandCapture,
};
pub use filter::{design_lowpass, kaiser_beta, LowpassDesign};
pub use notch::{dynamic_range_required, notch_dc, NotchConfig};

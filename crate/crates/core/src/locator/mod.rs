mod aoa;
mod grid;
mod hologram;
mod localize;
mod tof;

pub use aoa::{aoa_from_phases, aoa_from_samples, aoa_spectrum, AoaSpectrum};
pub use grid::{peak_find_2d, GridSpec, Heatmap, Peak};
pub use hologram::{basic_hologram, hologram_with, measured_phase, summation_layer, ExpKernel, Kernel};
pub use localize::{
    classify_roi, enhance_channel, localize, Algorithm, DirectPathMode, EnhancementPolicy, LocationEstimate, LocatorConfig, PriorROI,
    RoiClass,
};
pub use tof::{
    antenna_row, clean_tof, combined_tof_profile, enhance_direct_path, identify_direct_path, identify_direct_path_supported, tof_profile, tof_spectrum,
    tof_spectrum_weighted, CleanComponent, CleanConfig, CleanResult, CombinedTof, DistanceUnits, ThresholdScale, TofAxis, TofDeconvolution, TofProfile, TofWindow,
};

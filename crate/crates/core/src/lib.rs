//! Simulation and analysis of rotated polarization directional couplers
//! (RPDCs): rotated-axis birefringent waveguides, coupled-mode propagation
//! in waveguide pairs, device metrics, and single-qubit polarization
//! tomography with the coupler acting as the analyzer.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod birefringence;
pub mod coupled_mode;
pub mod device;
pub mod error;
pub mod polarization;
pub mod simplex;
pub mod tomography;

pub use birefringence::{
    axis_from_offset, crossed_polarizer_transmission, find_axis, retardance_from_physics,
    retarder_jones, AxisCalibration, RotatedRetarder,
};
pub use coupled_mode::{
    bend_phase_from_shortening, cross_coupling_ratio, pdc_coupling_length, propagate_analytic,
    propagate_numeric, CouplerParams, ModeAmplitudes,
};
pub use device::{
    extinction_ratios, rpdc_transfer, simulate_axis_check, sweep_coupling_length, AxisCheck,
    DeviceFile, ExtinctionRatios, PortOutput, RpdcDevice, SweepRow,
};
pub use error::{Result, RpdcError};
pub use polarization::{
    density_to_stokes, fidelity, jones_to_density, purity, stokes_to_density, Cardinal,
    DensityMatrix, JonesVector, Mat2, PauliBasis, StokesVector, C64,
};
pub use tomography::{
    linear_reconstruct, mle_reconstruct, project_probabilities, run_tomography_experiment, Basis,
    MeasurementRecord, MleConfig, NoiseConfig, TomographyResult, WaveplateSettings,
};

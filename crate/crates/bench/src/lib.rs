//! Fixtures shared by the benchmarks.

use std::f64::consts::PI;

use rpdc_core::tomography::simulate_records;
use rpdc_core::{stokes_to_density, MeasurementRecord, NoiseConfig, RpdcDevice, StokesVector};

/// The 23 mm bend-compensated design at the given axis angle.
pub fn design_device(alpha_deg: f64) -> RpdcDevice {
    RpdcDevice::bend_compensated(alpha_deg, 3.0 * PI / 57.0, 2.0 * PI / 57.0, 28.5, 23.0)
        .expect("design parameters are valid")
}

/// Poisson-noisy records of a fixed mixed state measured through the design device.
pub fn noisy_records(counts: u64, seed: u64) -> [MeasurementRecord; 3] {
    let rho =
        stokes_to_density(&StokesVector::new(1.0, 0.3, -0.5, 0.6)).expect("state is physical");
    let mut dev = design_device(45.0);
    dev.retardance = PI;
    simulate_records(&rho, &dev, &NoiseConfig::poisson(counts, seed)).expect("simulation succeeds")
}

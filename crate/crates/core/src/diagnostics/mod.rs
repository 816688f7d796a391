//! Energy monitors, localized monotonicity quantities and regularity scans.

mod bochner;
mod energy;
mod kernel;
mod monotonicity;
mod regularity;

pub use bochner::{bochner_density, bochner_report, BochnerReport};
pub use energy::{
    dirichlet_energy, energy_record, fit_energy_growth, max_relative_energy_increase, time_derivative_rate,
    MonitorRecord,
};
pub use kernel::{heat_kernel, heat_kernel_euclidean, torus_displacement};
pub use monotonicity::{
    energy_density, fit_monotonicity_constant, localization_cutoff, phi_quantity, psi_quantity, DensityField,
    ParabolicWindow,
};
pub use regularity::{regularity_scan, singular_set_detect, RegularityScan, ScanEntry, ScanLattice, SingularSetEstimate};

//! Asymptotic machinery: partition/composition enumeration, the Faà di
//! Bruno formula, lattice expansion coefficients, assembled sharp-deviation
//! estimates and fluctuation expansions.

pub mod comb;
pub mod fdb;
pub mod fluct;
pub mod lattice;
pub mod sharp;

pub use comb::{for_each_composition, partitions, PartitionSet, MAX_PARTITION_N};
pub use fdb::{faa_di_bruno, psi_derivatives};
pub use fluct::{fluctuation, tilt_derivatives_at_mean, FluctuationEstimate, Regime, Schedule};
pub use lattice::{lattice_coeffs, lattice_point_coeff, lattice_tail_coeff, ExpansionInputs};
pub use sharp::{
    mean_variance_asymptote, sharp_estimate, sharp_point_mass, sharp_tail,
    SharpConfig, SharpDeviationEstimate, SharpKind,
};

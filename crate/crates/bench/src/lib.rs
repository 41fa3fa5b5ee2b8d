//! Shared fixtures for the benchmarks.

use bhreduce::{make_potential, PotentialFamily, PotentialSpec};

pub fn reference_spec() -> PotentialSpec {
    make_potential(&PotentialFamily::Sin2 { v0: 8.0, a: 1.0 }).expect("reference potential")
}

/// The lattice path used from the anticontinuum end down to the weakly localized regime.
pub const ETA_PATH: [f64; 7] = [-50.0, -20.0, -10.0, -5.0, -3.0, -2.5, -2.0];

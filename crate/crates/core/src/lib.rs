//! Semiclassical reduction of the stationary 1D nonlinear Schrödinger equation
//! with a periodic potential to the discrete NLS lattice model.
//!
//! The pipeline runs potential -> bands -> localized basis -> lattice
//! parameters -> lattice solutions -> continuum reconstruction, with `scan`
//! sweeping it over a ladder of `hbar` values.

pub mod bloch;
pub mod config;
pub mod dnls;
pub mod domain;
pub mod error;
pub mod grid;
pub mod nlse;
pub mod numeric;
pub mod potential;
pub mod scan;
pub mod tightbinding;
pub mod verify;
pub mod wannier;

pub use bloch::{band_metrics, bloch_on_grid, solve_bands, solve_bands_on_grid, BandData, BandMetrics, FloquetConfig};
pub use error::{Error, Result};
pub use grid::PeriodicGrid;
pub use potential::{agmon_distance, make_potential, tunneling_action, AgmonData, PotentialFamily, PotentialSpec};
pub use domain::CellDomain;
pub use wannier::{basis_diagnostics, build_orthonormal_basis, fix_gauge, wannier_function, BasisDiagnostics, BasisOptions, WannierBasis};
pub use tightbinding::{band_fourier_oracle, effective_nonlinearity, gamma_for_eta, h_matrix_elements, interaction_constant, residual_coupling_norm, HMatrix, TBParams};
pub use dnls::{decay_rate, dnls_residual, linearization_lplus, participation, solve_anticontinuum, weinstein_threshold, Boundary, Continuation, DnlsProblem, DnlsState};
pub use nlse::{direct_newton_oracle, project_first_band, reconstruct_and_correct, solve_perp_fixed_point, ContinuumState, ReconstructOptions};
pub use config::{RunConfig, CACHE_VERSION};
pub use scan::{fit_exponential_law, run_sweep, write_report, SweepPlan, TransitionReport};

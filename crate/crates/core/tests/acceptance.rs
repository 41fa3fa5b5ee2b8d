//! Acceptance checks on the reference configuration. Each test prints one
//! PASS/FAIL line straight to stderr so the table shows without --nocapture.

use bhreduce::verify::{self, AcceptanceContext, CheckResult};
use bhreduce::{RunConfig, SweepPlan};
use std::io::Write;
use std::sync::OnceLock;

fn ctx() -> &'static AcceptanceContext {
    static CTX: OnceLock<AcceptanceContext> = OnceLock::new();
    CTX.get_or_init(|| {
        let plan = SweepPlan::new(RunConfig::reference(), false).expect("reference config is valid");
        AcceptanceContext::build(plan).expect("reference sweep runs")
    })
}

fn report(r: CheckResult) {
    let _ = writeln!(std::io::stderr(), "\n{}", r.line());
    assert!(r.passed, "{}", r.line());
}

#[test]
fn free_particle_bands() {
    report(verify::free_particle_bands(ctx()));
}

#[test]
fn harmonic_law() {
    report(verify::harmonic_law(ctx()));
}

#[test]
fn gap_scaling() {
    report(verify::gap_scaling(ctx()));
}

#[test]
fn tunneling_rates() {
    report(verify::tunneling_rates(ctx()));
}

#[test]
fn hopping_cross_oracle() {
    report(verify::hopping_cross_oracle(ctx()));
}

#[test]
fn dnls_solver() {
    report(verify::dnls_solver(ctx()));
}

#[test]
fn anticontinuum_regime() {
    report(verify::anticontinuum(ctx()));
}

#[test]
fn off_band_decay() {
    report(verify::perp_decay(ctx(), -2.0));
}

#[test]
fn continuum_reconstruction() {
    report(verify::reconstruction(ctx(), -3.0));
}

#[test]
fn localization_transition() {
    report(verify::transition(ctx(), 0.125));
}

#[test]
fn determinism() {
    let dir = tempfile::tempdir().unwrap();
    report(verify::determinism(ctx(), dir.path()));
}

//! Parameter sweeps over `(hbar, eta)`, exponential-law fits and the
//! localization diagnostics, with deterministic CSV/JSON output.

use crate::bloch::{band_metrics, solve_bands};
use crate::config::RunConfig;
use crate::dnls::{solve_anticontinuum, Boundary, DnlsProblem, DnlsState};
use crate::domain::CellDomain;
use crate::error::{Error, Result};
use crate::nlse::{linear_reference, reconstruct_and_correct, ContinuumState, ReconstructOptions};
use crate::numeric::{line_fit, LineFit};
use crate::potential::{make_potential, tunneling_action, PotentialSpec};
use crate::tightbinding::{band_fourier_oracle, h_matrix_elements, TBParams};
use crate::wannier::{basis_diagnostics, build_orthonormal_basis, BasisOptions, WannierBasis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

/// Participation below which a state counts as single-site for the crossing diagnostic.
pub const CROSSING_PARTICIPATION: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub config: RunConfig,
}

impl SweepPlan {
    pub fn new(config: RunConfig, allow_low_sigma: bool) -> Result<Self> {
        config.validate(allow_low_sigma)?;
        if config.sweep.hbars.len() < 4 {
            log::warn!("fewer than 4 hbar values: slope fits will be unavailable");
        }
        Ok(Self { config })
    }

    pub fn spec(&self) -> Result<PotentialSpec> {
        make_potential(&self.config.potential)
    }

    pub fn basis_options(&self) -> BasisOptions {
        BasisOptions { overlap_band: self.config.numerics.overlap_band, seed_modes: self.config.numerics.seed_modes }
    }

    pub fn reconstruct_options(&self) -> ReconstructOptions {
        ReconstructOptions { delta0: self.config.numerics.delta0, ..Default::default() }
    }
}

/// Everything built for one `hbar` that later stages need.
pub struct HbarBundle {
    pub domain: CellDomain,
    pub basis: WannierBasis,
    pub params: TBParams,
}

pub fn build_bundle(spec: &PotentialSpec, plan: &SweepPlan, hbar: f64) -> Result<HbarBundle> {
    let n = &plan.config.numerics;
    let domain = CellDomain::new(spec, n.cells, n.points_per_cell, hbar)?;
    let basis = build_orthonormal_basis(spec, &domain, &plan.basis_options())?;
    let hm = h_matrix_elements(&basis, &domain)?;
    let params = TBParams::new(&basis, hm, plan.config.sweep.sigma, 0.0)?;
    Ok(HbarBundle { domain, basis, params })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsRow {
    pub hbar: f64,
    pub status: String,
    pub lambda1: f64,
    pub harmonic: f64,
    /// `|lambda1 - harmonic| / hbar^2`.
    pub harmonic_defect: f64,
    pub band_bottom: f64,
    pub band_top: f64,
    pub width: f64,
    pub gap: f64,
    pub beta: f64,
    /// `-mean E_1(kappa) cos(kappa a)` from the plane-wave band solve.
    pub beta_bands: f64,
    pub beta_rel_diff: f64,
    pub a1: f64,
    pub pair_l1: f64,
    pub c0: f64,
    pub d_tilde_norm: f64,
    pub wannier_discrepancy: f64,
    pub overlap_norm: f64,
    pub tau_w: Option<f64>,
}

impl ParamsRow {
    fn failed(hbar: f64, err: &Error) -> Self {
        Self {
            hbar,
            status: format!("error: {err}"),
            lambda1: f64::NAN,
            harmonic: f64::NAN,
            harmonic_defect: f64::NAN,
            band_bottom: f64::NAN,
            band_top: f64::NAN,
            width: f64::NAN,
            gap: f64::NAN,
            beta: f64::NAN,
            beta_bands: f64::NAN,
            beta_rel_diff: f64::NAN,
            a1: f64::NAN,
            pair_l1: f64::NAN,
            c0: f64::NAN,
            d_tilde_norm: f64::NAN,
            wannier_discrepancy: f64::NAN,
            overlap_norm: f64::NAN,
            tau_w: None,
        }
    }

    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderRow {
    pub n_sites: usize,
    pub boundary: String,
    pub eta: f64,
    pub status: String,
    pub e: f64,
    /// `E + eta`, which vanishes when `E = -eta`.
    pub e_plus_eta: f64,
    pub participation: f64,
    pub decay_rate: Option<f64>,
    pub residual: f64,
    pub norm_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuumRow {
    pub hbar: f64,
    pub eta: f64,
    pub status: String,
    pub e: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub resolvent_shift: f64,
    pub perp_h1: f64,
    pub h1_error: f64,
    pub norm_defect: f64,
    pub residual_h: f64,
    pub lattice_residual: f64,
    pub iterations: usize,
    pub peak_cell_mass: f64,
    pub lplus_smin: f64,
}

impl ContinuumRow {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionRow {
    pub hbar: f64,
    pub eta: f64,
    pub participation: f64,
    pub decay_rate: Option<f64>,
    pub e: f64,
    pub h1_error: f64,
    pub peak_cell_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub points: usize,
    pub fit: Option<LineFit>,
    pub note: Option<String>,
}

impl FitSummary {
    fn from(xs: &[f64], ys: &[f64]) -> Self {
        match fit_exponential_law(xs, ys) {
            Ok(f) => Self { points: xs.len(), fit: Some(f), note: None },
            Err(e) => Self { points: xs.len(), fit: None, note: Some(e.to_string()) },
        }
    }

    /// `-slope`, the decay constant of `exp(-s / hbar)`.
    pub fn rate(&self) -> Option<f64> {
        self.fit.as_ref().map(|f| -f.slope)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub quantity: String,
    pub summary: FitSummary,
    /// Fitted rate divided by the quadrature action.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyConvention {
    pub eta: f64,
    pub e: f64,
    pub minus_eta: f64,
    pub two_minus_eta: f64,
    pub closer: String,
}

/// Fits of continuum observables against `1/hbar` at one eta.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaFits {
    pub eta: f64,
    /// `log ||phi_perp||_H1`.
    pub perp: FitSummary,
    /// `log ||phi - sum F_j u_j||_H1`.
    pub h1_error: FitSummary,
    /// `log | ||phi|| - 1 |`.
    pub norm_defect: FitSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fits {
    pub s0: f64,
    pub tunneling: Vec<RateEstimate>,
    /// `log gap` against `log hbar`.
    pub gap_loglog: FitSummary,
    /// max/min of `|lambda1 - harmonic| / hbar^2` over the ladder.
    pub harmonic_spread: f64,
    pub per_eta: Vec<EtaFits>,
    /// Eta at which the lattice participation first drops below the crossing value.
    pub crossing_eta: Option<f64>,
    pub energy_convention: Option<EnergyConvention>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransitionReport {
    pub params: Vec<ParamsRow>,
    pub ladder: Vec<LadderRow>,
    pub continuum: Vec<ContinuumRow>,
    pub transition: Vec<TransitionRow>,
    pub fits: Fits,
    #[serde(skip)]
    pub states: Vec<ContinuumState>,
    /// Lattice states used for reconstruction, `(eta, state)`.
    #[serde(skip)]
    pub domain_lattice: Vec<(f64, DnlsState)>,
}

impl TransitionReport {
    pub fn continuum_at(&self, eta: f64) -> Vec<&ContinuumRow> {
        self.continuum.iter().filter(|r| r.eta == eta).collect()
    }

    pub fn eta_fits(&self, eta: f64) -> Option<&EtaFits> {
        self.fits.per_eta.iter().find(|f| f.eta == eta)
    }

    pub fn state(&self, hbar: f64, eta: f64) -> Option<&ContinuumState> {
        self.states.iter().find(|s| s.hbar == hbar && s.eta == eta)
    }
}

/// Least-squares line through `(1/hbar, log q)`; needs 4 points with spread.
pub fn fit_exponential_law(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() || xs.len() < 4 {
        return Err(Error::Fit(format!("need at least 4 points, have {}", xs.len().min(ys.len()))));
    }
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(Error::Fit("non-finite ordinate".into()));
    }
    let (lo, hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)));
    if hi - lo < 1e-6 {
        return Err(Error::Fit(format!("abscissa spread {} below 1e-6", hi - lo)));
    }
    line_fit(xs, ys)
}

fn linear_lattice_state(prob: &DnlsProblem) -> DnlsState {
    let n = prob.n;
    let (f, e) = match prob.boundary {
        Boundary::Periodic => (vec![1.0 / (n as f64).sqrt(); n], 2.0),
        Boundary::Zero => {
            let k = std::f64::consts::PI / (n + 1) as f64;
            let s = (2.0 / (n + 1) as f64).sqrt();
            ((1..=n).map(|j| s * (k * j as f64).sin()).collect(), 2.0 * k.cos())
        }
    };
    DnlsState::from_solution(prob, f, e)
}

/// A lattice state or the reason it is missing.
pub type LatticePoint = (f64, std::result::Result<DnlsState, String>);

/// Lattice states at every eta of the list, continued from `|eta| = 50` on each side.
pub fn lattice_ladder(n: usize, boundary: Boundary, sigma: f64, etas: &[f64]) -> Result<Vec<LatticePoint>> {
    let template = DnlsProblem::new(0.0, sigma, n, boundary)?;
    let mut found: Vec<LatticePoint> = Vec::new();
    if etas.contains(&0.0) {
        found.push((0.0, Ok(linear_lattice_state(&template))));
    }
    for sign in [-1.0, 1.0] {
        let mut side: Vec<f64> = etas.iter().copied().filter(|e| e * sign > 0.0).collect();
        if side.is_empty() {
            continue;
        }
        side.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
        side.dedup();
        let mut path = side.clone();
        if path[0].abs() < 50.0 {
            path.insert(0, 50.0 * sign);
        }
        match solve_anticontinuum(&template, 0, &path) {
            Ok(cont) => {
                let offset = path.len() - side.len();
                for (k, eta) in side.iter().enumerate() {
                    let st = cont.states.get(k + offset).cloned().ok_or_else(|| {
                        cont.message.clone().unwrap_or_else(|| "continuation stopped".into())
                    });
                    found.push((*eta, st));
                }
            }
            Err(e) => {
                for eta in &side {
                    found.push((*eta, Err(e.to_string())));
                }
            }
        }
    }
    Ok(etas.iter().map(|e| found.iter().find(|(x, _)| x == e).cloned().expect("every eta is covered")).collect())
}

fn ladder_row(n: usize, boundary: Boundary, eta: f64, st: &std::result::Result<DnlsState, String>) -> LadderRow {
    let name = match boundary {
        Boundary::Zero => "zero",
        Boundary::Periodic => "periodic",
    };
    match st {
        Ok(s) => LadderRow {
            n_sites: n,
            boundary: name.into(),
            eta,
            status: "ok".into(),
            e: s.e,
            e_plus_eta: s.e + eta,
            participation: s.participation,
            decay_rate: s.decay_rate,
            residual: s.residual_norm,
            norm_defect: s.norm() - 1.0,
        },
        Err(e) => LadderRow {
            n_sites: n,
            boundary: name.into(),
            eta,
            status: format!("error: {e}"),
            e: f64::NAN,
            e_plus_eta: f64::NAN,
            participation: f64::NAN,
            decay_rate: None,
            residual: f64::NAN,
            norm_defect: f64::NAN,
        },
    }
}

struct HbarOutcome {
    params: ParamsRow,
    continuum: Vec<ContinuumRow>,
    states: Vec<ContinuumState>,
}

/// Band, basis and lattice parameters at one `hbar`.
pub fn params_row(spec: &PotentialSpec, plan: &SweepPlan, hbar: f64, b: &HbarBundle) -> Result<ParamsRow> {
    let bands = solve_bands(spec, &plan.config.floquet(hbar))?;
    let m = band_metrics(&bands, 0)?;
    let (_, beta_bands) = band_fourier_oracle(&bands);
    let p = &b.params;
    let diag = basis_diagnostics(&b.basis);
    let harmonic = spec.harmonic_energy(hbar);
    let bottom = bands.energies[0].iter().copied().fold(f64::INFINITY, f64::min);
    let top = bands.energies[0].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(ParamsRow {
        hbar,
        status: "ok".into(),
        lambda1: p.lambda1,
        harmonic,
        harmonic_defect: (p.lambda1 - harmonic).abs() / (hbar * hbar),
        band_bottom: bottom,
        band_top: top,
        width: m.width,
        gap: m.gap_above,
        beta: p.beta,
        beta_bands,
        beta_rel_diff: (p.beta - beta_bands).abs() / p.beta.abs(),
        a1: b.basis.overlaps[1],
        pair_l1: diag.pair_l1[1],
        c0: p.c0,
        d_tilde_norm: p.d_tilde_norm,
        wannier_discrepancy: b.basis.wannier_discrepancy,
        overlap_norm: b.basis.overlap_norm,
        tau_w: b.basis.tau_w,
    })
}

fn continuum_row(hbar: f64, eta: f64, st: &Result<ContinuumState>, domain: Option<&CellDomain>) -> ContinuumRow {
    match (st, domain) {
        (Ok(s), Some(domain)) => ContinuumRow {
            hbar,
            eta,
            status: "ok".into(),
            e: s.e,
            lambda: s.lambda,
            gamma: s.gamma,
            resolvent_shift: s.resolvent_shift,
            perp_h1: s.phi_perp_h1,
            h1_error: s.h1_error,
            norm_defect: s.norm - 1.0,
            residual_h: s.residual_h,
            lattice_residual: s.lattice_residual,
            iterations: s.iterations,
            peak_cell_mass: s.peak_cell_mass(domain),
            lplus_smin: s.lplus_smin,
        },
        (Ok(_), None) => continuum_row(hbar, eta, &Err(Error::Precondition("no domain".into())), None),
        (Err(e), _) => ContinuumRow {
            hbar,
            eta,
            status: format!("error: {e}"),
            e: f64::NAN,
            lambda: f64::NAN,
            gamma: f64::NAN,
            resolvent_shift: f64::NAN,
            perp_h1: f64::NAN,
            h1_error: f64::NAN,
            norm_defect: f64::NAN,
            residual_h: f64::NAN,
            lattice_residual: f64::NAN,
            iterations: 0,
            peak_cell_mass: f64::NAN,
            lplus_smin: f64::NAN,
        },
    }
}

fn run_hbar(spec: &PotentialSpec, plan: &SweepPlan, hbar: f64, lattice: &[LatticePoint]) -> HbarOutcome {
    let bundle = match build_bundle(spec, plan, hbar) {
        Ok(b) => b,
        Err(e) => {
            let continuum = lattice
                .iter()
                .map(|(eta, _)| continuum_row(hbar, *eta, &Err(Error::Precondition(format!("no basis: {e}"))), None))
                .collect();
            return HbarOutcome { params: ParamsRow::failed(hbar, &e), continuum, states: Vec::new() };
        }
    };
    let params = params_row(spec, plan, hbar, &bundle).unwrap_or_else(|e| ParamsRow::failed(hbar, &e));
    let opts = plan.reconstruct_options();
    let mut continuum = Vec::new();
    let mut states = Vec::new();
    for (eta, st) in lattice {
        let result = if *eta == 0.0 {
            Ok(linear_reference(&bundle.domain, &bundle.basis, &bundle.params))
        } else {
            st.as_ref()
                .map_err(|e| Error::Precondition(format!("no lattice state: {e}")))
                .and_then(|st| {
                    let tb = bundle.params.with_eta(*eta)?;
                    reconstruct_and_correct(&bundle.domain, &bundle.basis, &tb, st, &opts)
                })
        };
        continuum.push(continuum_row(hbar, *eta, &result, Some(&bundle.domain)));
        if let Ok(s) = result {
            states.push(s);
        }
    }
    HbarOutcome { params, continuum, states }
}

pub fn run_sweep(plan: &SweepPlan) -> Result<TransitionReport> {
    let spec = plan.spec()?;
    let n = &plan.config.numerics;
    let s = &plan.config.sweep;
    let standalone = lattice_ladder(n.n_sites, n.boundary, s.sigma, &s.etas)?;
    let domain_lattice = lattice_ladder(n.cells, Boundary::Periodic, s.sigma, &s.etas)?;
    let outcomes: Vec<HbarOutcome> =
        s.hbars.par_iter().map(|&h| run_hbar(&spec, plan, h, &domain_lattice)).collect();

    let mut ladder: Vec<LadderRow> = standalone.iter().map(|(e, st)| ladder_row(n.n_sites, n.boundary, *e, st)).collect();
    ladder.extend(domain_lattice.iter().map(|(e, st)| ladder_row(n.cells, Boundary::Periodic, *e, st)));
    let params: Vec<ParamsRow> = outcomes.iter().map(|o| o.params.clone()).collect();
    let continuum: Vec<ContinuumRow> = outcomes.iter().flat_map(|o| o.continuum.clone()).collect();
    let states: Vec<ContinuumState> = outcomes.into_iter().flat_map(|o| o.states).collect();

    let mut transition = Vec::new();
    for row in &continuum {
        if let Some((_, Ok(st))) = standalone.iter().find(|(e, _)| *e == row.eta) {
            transition.push(TransitionRow {
                hbar: row.hbar,
                eta: row.eta,
                participation: st.participation,
                decay_rate: st.decay_rate,
                e: st.e,
                h1_error: row.h1_error,
                peak_cell_mass: row.peak_cell_mass,
            });
        }
    }

    let s0 = tunneling_action(&spec, &[spec.x0])?.s0;
    let fits = compute_fits(s0, &params, &continuum, &standalone, &s.etas);
    let domain_lattice = domain_lattice.into_iter().filter_map(|(e, st)| st.ok().map(|s| (e, s))).collect();
    Ok(TransitionReport { params, ladder, continuum, transition, fits, states, domain_lattice })
}

fn quantity_fit<F: Fn(&ContinuumRow) -> f64>(rows: &[&ContinuumRow], q: F) -> FitSummary {
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.ok() && q(r).abs() > 0.0 && q(r).is_finite())
        .map(|r| (1.0 / r.hbar, q(r).abs().ln()))
        .unzip();
    FitSummary::from(&xs, &ys)
}

fn compute_fits(
    s0: f64,
    params: &[ParamsRow],
    continuum: &[ContinuumRow],
    standalone: &[LatticePoint],
    etas: &[f64],
) -> Fits {
    let ok: Vec<&ParamsRow> = params.iter().filter(|p| p.ok()).collect();
    let inv: Vec<f64> = ok.iter().map(|p| 1.0 / p.hbar).collect();
    let estimate = |name: &str, f: &dyn Fn(&ParamsRow) -> f64| {
        let ys: Vec<f64> = ok.iter().map(|p| f(p).abs().ln()).collect();
        let summary = FitSummary::from(&inv, &ys);
        let ratio = summary.rate().map(|r| r / s0);
        RateEstimate { quantity: name.into(), summary, ratio }
    };
    let tunneling = vec![
        estimate("beta", &|p| p.beta),
        estimate("width", &|p| p.width),
        estimate("a1", &|p| p.a1),
        estimate("pair_l1", &|p| p.pair_l1),
    ];
    let lx: Vec<f64> = ok.iter().map(|p| p.hbar.ln()).collect();
    let ly: Vec<f64> = ok.iter().map(|p| p.gap.ln()).collect();
    let gap_loglog = match line_fit(&lx, &ly) {
        Ok(f) if ok.len() >= 4 => FitSummary { points: ok.len(), fit: Some(f), note: None },
        Ok(_) => FitSummary { points: ok.len(), fit: None, note: Some("need at least 4 points".into()) },
        Err(e) => FitSummary { points: ok.len(), fit: None, note: Some(e.to_string()) },
    };
    let hd: Vec<f64> = ok.iter().map(|p| p.harmonic_defect).collect();
    let harmonic_spread = hd.iter().copied().fold(f64::NEG_INFINITY, f64::max) / hd.iter().copied().fold(f64::INFINITY, f64::min);

    let per_eta = etas
        .iter()
        .filter(|e| **e != 0.0)
        .map(|eta| {
            let rows: Vec<&ContinuumRow> = continuum.iter().filter(|r| r.eta == *eta).collect();
            EtaFits {
                eta: *eta,
                perp: quantity_fit(&rows, |r| r.perp_h1),
                h1_error: quantity_fit(&rows, |r| r.h1_error),
                norm_defect: quantity_fit(&rows, |r| r.norm_defect),
            }
        })
        .collect();

    let mut focusing: Vec<(f64, f64)> = standalone
        .iter()
        .filter_map(|(e, st)| st.as_ref().ok().filter(|_| *e <= 0.0).map(|s| (*e, s.participation)))
        .collect();
    focusing.sort_by(|a, b| b.0.total_cmp(&a.0));
    let crossing_eta = focusing.windows(2).find_map(|w| {
        let ((e0, p0), (e1, p1)) = (w[0], w[1]);
        (p0 >= CROSSING_PARTICIPATION && p1 < CROSSING_PARTICIPATION)
            .then(|| e0 + (CROSSING_PARTICIPATION - p0) * (e1 - e0) / (p1 - p0))
    });
    let energy_convention = standalone
        .iter()
        .filter_map(|(e, st)| st.as_ref().ok().filter(|_| *e < 0.0).map(|s| (*e, s.e)))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(eta, e)| EnergyConvention {
            eta,
            e,
            minus_eta: -eta,
            two_minus_eta: 2.0 - eta,
            closer: if (e + eta).abs() <= (e - 2.0 + eta).abs() { "-eta".into() } else { "2-eta".into() },
        });

    Fits { s0, tunneling, gap_loglog, harmonic_spread, per_eta, crossing_eta, energy_convention }
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `params.csv`, `dnls_ladder.csv`, `continuum.csv`, `transition.csv`
/// and `fits.json` (plus state bundles if asked) into `dir`.
pub fn write_report(report: &TransitionReport, dir: &Path, write_states: bool) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_csv(&dir.join("params.csv"), &report.params)?;
    write_csv(&dir.join("dnls_ladder.csv"), &report.ladder)?;
    write_csv(&dir.join("continuum.csv"), &report.continuum)?;
    write_csv(&dir.join("transition.csv"), &report.transition)?;
    let fits = serde_json::to_string_pretty(&report.fits)?;
    fs::write(dir.join("fits.json"), fits + "\n")?;
    if write_states {
        let sd = dir.join("states");
        fs::create_dir_all(&sd)?;
        for s in &report.states {
            let name = format!("hbar_{}_eta_{}.json", s.hbar, s.eta);
            fs::write(sd.join(name), serde_json::to_string(s)?)?;
        }
    }
    Ok(())
}

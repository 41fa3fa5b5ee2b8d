use crate::cache::Cache;
use bhreduce::scan::{build_bundle, lattice_ladder, params_row, ParamsRow};
use bhreduce::verify::{format_table, run_all, AcceptanceContext};
use bhreduce::{run_sweep, solve_bands, write_report, BandData, RunConfig, SweepPlan, WannierBasis};
use rayon::prelude::*;
use serde::Serialize;
use std::fs;
use std::io::Write;
use std::path::Path;

fn out_dir(cfg: &RunConfig) -> anyhow::Result<&Path> {
    let d = cfg.io.output_dir.as_path();
    fs::create_dir_all(d)?;
    Ok(d)
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn bands(cfg: &RunConfig, allow_low_sigma: bool) -> anyhow::Result<bool> {
    let plan = SweepPlan::new(cfg.clone(), allow_low_sigma)?;
    let spec = plan.spec()?;
    let cache = Cache::new(cfg);
    let dir = out_dir(cfg)?;
    for &hbar in &cfg.sweep.hbars {
        let key = cfg.cache_key(&format!("bands hbar={hbar}"));
        let bd: BandData = cache.get_or_build("bands", &key, || Ok(solve_bands(&spec, &cfg.floquet(hbar))?))?;
        for w in &bd.warnings {
            eprintln!("hbar {hbar}: {w}");
        }
        let f = fs::File::create(dir.join(format!("bands_hbar_{hbar}.csv")))?;
        bd.write_csv(std::io::BufWriter::new(f))?;
    }
    Ok(true)
}

#[derive(Serialize)]
struct WannierSummary {
    hbar: f64,
    overlaps: Vec<f64>,
    lowdin: Vec<f64>,
    overlap_norm: f64,
    wannier_discrepancy: f64,
    w1_imag_residue: f64,
    tau_w: Option<f64>,
}

pub fn wannier(cfg: &RunConfig, allow_low_sigma: bool) -> anyhow::Result<bool> {
    let plan = SweepPlan::new(cfg.clone(), allow_low_sigma)?;
    let spec = plan.spec()?;
    let cache = Cache::new(cfg);
    let dir = out_dir(cfg)?;
    let mut summary = Vec::new();
    for &hbar in &cfg.sweep.hbars {
        let key = cfg.cache_key(&format!("wannier hbar={hbar}"));
        let wb: WannierBasis = cache.get_or_build("wannier", &key, || Ok(build_bundle(&spec, &plan, hbar)?.basis))?;
        let mut w = csv::Writer::from_path(dir.join(format!("wannier_hbar_{hbar}.csv")))?;
        w.write_record(["x", "w1", "u0", "v0"])?;
        let g = bhreduce::PeriodicGrid::new(wb.a, wb.x0, wb.cells, wb.per_cell)?;
        for i in 0..wb.u0.len() {
            w.serialize((g.x(i), wb.w1[i], wb.u0[i], wb.v0[i]))?;
        }
        w.flush()?;
        summary.push(WannierSummary {
            hbar,
            overlaps: wb.overlaps.clone(),
            lowdin: wb.lowdin.clone(),
            overlap_norm: wb.overlap_norm,
            wannier_discrepancy: wb.wannier_discrepancy,
            w1_imag_residue: wb.w1_imag_residue,
            tau_w: wb.tau_w,
        });
    }
    fs::write(dir.join("wannier.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok(true)
}

pub fn params(cfg: &RunConfig, allow_low_sigma: bool) -> anyhow::Result<bool> {
    let plan = SweepPlan::new(cfg.clone(), allow_low_sigma)?;
    let spec = plan.spec()?;
    let rows: Vec<anyhow::Result<(ParamsRow, Vec<f64>)>> = cfg
        .sweep
        .hbars
        .par_iter()
        .map(|&h| {
            let b = build_bundle(&spec, &plan, h)?;
            let hops = b.params.h_matrix.offsets.clone();
            Ok((params_row(&spec, &plan, h, &b)?, hops))
        })
        .collect();
    let rows: Vec<(ParamsRow, Vec<f64>)> = rows.into_iter().collect::<anyhow::Result<_>>()?;
    let dir = out_dir(cfg)?;
    write_rows(&dir.join("params.csv"), &rows.iter().map(|r| r.0.clone()).collect::<Vec<_>>())?;
    let hops: Vec<_> = rows.iter().map(|(p, h)| serde_json::json!({ "hbar": p.hbar, "h": h })).collect();
    fs::write(dir.join("hopping.json"), serde_json::to_string_pretty(&hops)? + "\n")?;
    Ok(true)
}

#[derive(Serialize)]
struct ProfileRow {
    eta: f64,
    site: usize,
    f: f64,
}

pub fn dnls(cfg: &RunConfig) -> anyhow::Result<bool> {
    let n = &cfg.numerics;
    let ladder = lattice_ladder(n.n_sites, n.boundary, cfg.sweep.sigma, &cfg.sweep.etas)?;
    let dir = out_dir(cfg)?;
    let mut w = csv::Writer::from_path(dir.join("dnls_ladder.csv"))?;
    let mut profiles = Vec::new();
    let mut all_ok = true;
    w.write_record(["eta", "status", "e", "participation", "decay_rate", "residual"])?;
    for (eta, st) in &ladder {
        match st {
            Ok(s) => {
                w.serialize((eta, "ok", s.e, s.participation, s.decay_rate, s.residual_norm))?;
                profiles.extend(s.f.iter().enumerate().map(|(site, f)| ProfileRow { eta: *eta, site, f: *f }));
            }
            Err(e) => {
                all_ok = false;
                eprintln!("eta {eta}: {e}");
                w.serialize((eta, format!("error: {e}"), f64::NAN, f64::NAN, None::<f64>, f64::NAN))?;
            }
        }
    }
    w.flush()?;
    write_rows(&dir.join("dnls_profiles.csv"), &profiles)?;
    if !all_ok {
        eprintln!("some lattice points failed; see dnls_ladder.csv");
    }
    Ok(true)
}

pub fn reconstruct(cfg: &RunConfig, allow_low_sigma: bool) -> anyhow::Result<bool> {
    let plan = SweepPlan::new(cfg.clone(), allow_low_sigma)?;
    let report = run_sweep(&plan)?;
    let dir = out_dir(cfg)?;
    write_rows(&dir.join("continuum.csv"), &report.continuum)?;
    let sd = dir.join("states");
    fs::create_dir_all(&sd)?;
    for s in &report.states {
        fs::write(sd.join(format!("hbar_{}_eta_{}.json", s.hbar, s.eta)), serde_json::to_string(s)?)?;
    }
    let failed = report.continuum.iter().filter(|r| !r.ok()).count();
    if failed > 0 {
        eprintln!("{failed} of {} continuum points failed; see continuum.csv", report.continuum.len());
    }
    Ok(true)
}

pub fn scan(cfg: &RunConfig, allow_low_sigma: bool) -> anyhow::Result<bool> {
    let plan = SweepPlan::new(cfg.clone(), allow_low_sigma)?;
    let report = run_sweep(&plan)?;
    write_report(&report, out_dir(cfg)?, cfg.io.write_states)?;
    Ok(true)
}

pub fn verify(cfg: &RunConfig, allow_low_sigma: bool) -> anyhow::Result<bool> {
    let plan = SweepPlan::new(cfg.clone(), allow_low_sigma)?;
    let ctx = AcceptanceContext::build(plan)?;
    let scratch = out_dir(cfg)?.join("verify");
    let results = run_all(&ctx, &scratch);
    let table = format_table(&results);
    std::io::stdout().write_all(table.as_bytes())?;
    fs::write(out_dir(cfg)?.join("verify.json"), serde_json::to_string_pretty(&results)? + "\n")?;
    Ok(results.iter().all(|r| r.passed))
}

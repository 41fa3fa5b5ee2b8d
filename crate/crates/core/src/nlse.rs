//! Continuum stationary problem `lambda phi = H phi + gamma |phi|^{2 sigma} phi`
//! on the M-cell domain: band splitting, the fixed point for the part off the
//! first band, reconstruction from a lattice solution, and an independent
//! full-grid Newton solver.

use crate::dnls::{linearization_lplus, Boundary, DnlsProblem, DnlsState};
use crate::domain::CellDomain;
use crate::error::{Error, Result};
use crate::tightbinding::TBParams;
use crate::wannier::WannierBasis;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

pub fn nonlinearity(phi: &[f64], sigma: f64) -> Vec<f64> {
    phi.iter().map(|v| v.abs().powf(2.0 * sigma) * v).collect()
}

/// `H phi + gamma |phi|^{2 sigma} phi - lambda phi`.
pub fn continuum_residual(domain: &CellDomain, phi: &[f64], lambda: f64, gamma: f64, sigma: f64) -> Vec<f64> {
    let hphi = domain.apply_h(phi);
    hphi.iter()
        .zip(phi)
        .map(|(h, p)| h + gamma * p.abs().powf(2.0 * sigma) * p - lambda * p)
        .collect()
}

/// Action of the continuum Jacobian `H - lambda + gamma (2 sigma + 1) |phi|^{2 sigma}` on `v`.
pub fn continuum_jacobian_apply(domain: &CellDomain, phi: &[f64], lambda: f64, gamma: f64, sigma: f64, v: &[f64]) -> Vec<f64> {
    let hv = domain.apply_h(v);
    hv.iter()
        .zip(v.iter().zip(phi))
        .map(|(h, (v, p))| h - lambda * v + gamma * (2.0 * sigma + 1.0) * p.abs().powf(2.0 * sigma) * v)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    /// `c[i] = <u_j, phi>` with `j = j_min + i`.
    pub c: Vec<f64>,
    pub phi1: Vec<f64>,
    pub phi_perp: Vec<f64>,
}

pub fn synthesize(wb: &WannierBasis, c: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; wb.u0.len()];
    for (i, ci) in c.iter().enumerate() {
        if *ci == 0.0 {
            continue;
        }
        let u = wb.u(wb.j_min() + i as i64);
        out.iter_mut().zip(u).for_each(|(o, u)| *o += ci * u);
    }
    out
}

pub fn project_first_band(wb: &WannierBasis, phi: &[f64]) -> Projection {
    let h = wb.h();
    let c: Vec<f64> = wb.indices().map(|j| h * wb.u(j).iter().zip(phi).map(|(a, b)| a * b).sum::<f64>()).collect();
    let phi1 = synthesize(wb, &c);
    let phi_perp = phi.iter().zip(&phi1).map(|(a, b)| a - b).collect();
    Projection { c, phi1, phi_perp }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructOptions {
    /// Bound on `||c||_{l1}` under which the fixed point is attempted.
    pub delta0: f64,
    pub max_outer: usize,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        Self { delta0: 2.0, max_outer: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerpSolution {
    pub phi_perp: Vec<f64>,
    pub h1_norm: f64,
    pub iterations: usize,
    /// Last observed ratio of successive Picard increments.
    pub contraction: f64,
}

/// Picard iteration `phi_perp <- -gamma (H - lambda)^{-1} P_perp |phi|^{2 sigma} phi`
/// with `phi = phi1 + phi_perp`, started from zero.
pub fn solve_perp_fixed_point(
    domain: &CellDomain,
    phi1: &[f64],
    c_l1: f64,
    lambda: f64,
    gamma: f64,
    sigma: f64,
    opts: &ReconstructOptions,
) -> Result<PerpSolution> {
    if c_l1 > opts.delta0 {
        return Err(Error::Precondition(format!("||c||_l1 = {c_l1:.4} exceeds delta0 = {}", opts.delta0)));
    }
    let gap = domain.gap();
    let upper = domain.bands.alpha[1];
    if upper - lambda < 0.1 * gap {
        return Err(Error::Precondition(format!(
            "lambda = {lambda} within 0.1 gap of the second band (starts at {upper})"
        )));
    }
    let g = &domain.grid;
    let mut perp = vec![0.0; phi1.len()];
    if gamma == 0.0 {
        return Ok(PerpSolution { phi_perp: perp, h1_norm: 0.0, iterations: 0, contraction: 0.0 });
    }
    let mut prev_diff = f64::INFINITY;
    let mut contraction = 0.0;
    for it in 1..=200 {
        let phi: Vec<f64> = phi1.iter().zip(&perp).map(|(a, b)| a + b).collect();
        let rhs = domain.resolvent_perp(&nonlinearity(&phi, sigma), lambda)?;
        let next: Vec<f64> = rhs.iter().map(|v| -gamma * v).collect();
        let diff = g.h1_norm(&next.iter().zip(&perp).map(|(a, b)| a - b).collect::<Vec<_>>());
        perp = next;
        let norm = g.h1_norm(&perp);
        if it > 1 {
            contraction = diff / prev_diff;
            if contraction >= 1.0 && diff > 1e-12 * norm.max(1e-300) {
                return Err(Error::NonConvergence(format!(
                    "fixed point is not contracting (factor {contraction:.3}); reduce |eta| or hbar"
                )));
            }
        }
        if diff < 1e-12 && (diff <= 1e-12 * norm || diff >= prev_diff) {
            return Ok(PerpSolution { phi_perp: perp, h1_norm: norm, iterations: it, contraction });
        }
        prev_diff = diff;
    }
    Err(Error::NonConvergence("fixed point did not settle in 200 iterations".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuumState {
    pub hbar: f64,
    pub eta: f64,
    pub e: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub sigma: f64,
    pub phi: Vec<f64>,
    pub c: Vec<f64>,
    pub phi1: Vec<f64>,
    pub phi_perp: Vec<f64>,
    pub norm: f64,
    pub phi1_norm: f64,
    pub phi_perp_h1: f64,
    pub residual_h: f64,
    pub lattice_residual: f64,
    /// `||phi - sum F_j u_j||_{H1}` against the input lattice state.
    pub h1_error: f64,
    pub iterations: usize,
    /// Smallest singular value of the lattice `L+` at the input state.
    pub lplus_smin: f64,
    /// Energy at which the off-band resolvent was applied.
    pub resolvent_shift: f64,
}

impl ContinuumState {
    /// Fraction of `||phi||^2` carried by cell 0.
    pub fn peak_cell_mass(&self, domain: &CellDomain) -> f64 {
        let r = domain.grid.cell_range(0);
        let local: f64 = self.phi[r].iter().map(|v| v * v).sum::<f64>() * domain.grid.h;
        local / (self.norm * self.norm)
    }
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// First-band equation `<u_j, (H - lambda) phi + gamma |phi|^{2 sigma} phi> / beta`.
/// `H` commutes with the band projection, so this is `E c_j + (h c)_j / beta
/// + (gamma / beta) <u_j, |phi|^{2 sigma} phi>` with every hopping range included.
fn lattice_residual(domain: &CellDomain, wb: &WannierBasis, tbp: &TBParams, lambda: f64, phi: &[f64]) -> Vec<f64> {
    let r = continuum_residual(domain, phi, lambda, tbp.gamma, tbp.sigma);
    let h = wb.h();
    wb.indices().map(|j| h * wb.u(j).iter().zip(&r).map(|(a, b)| a * b).sum::<f64>() / tbp.beta).collect()
}

/// Continuum state near `sum_j F_j u_j` for a periodic lattice solution on
/// one site per cell; `tbp` must carry the same `eta` as the lattice state.
pub fn reconstruct_and_correct(
    domain: &CellDomain,
    wb: &WannierBasis,
    tbp: &TBParams,
    state: &DnlsState,
    opts: &ReconstructOptions,
) -> Result<ContinuumState> {
    let m = wb.cells;
    if state.f.len() != m {
        return Err(Error::Precondition(format!("lattice has {} sites, domain has {m} cells", state.f.len())));
    }
    if !(state.residual_norm <= 1e-10) {
        return Err(Error::Precondition(format!("lattice residual {:e} above 1e-10", state.residual_norm)));
    }
    if (state.eta - tbp.eta).abs() > 1e-12 * tbp.eta.abs().max(1.0) {
        return Err(Error::Precondition(format!("lattice eta {} differs from parameter eta {}", state.eta, tbp.eta)));
    }
    let prob = DnlsProblem::new(state.eta, tbp.sigma, m, Boundary::Periodic)?;
    let lp = linearization_lplus(&state.f, state.e, &prob);
    let sv = lp.clone().singular_values();
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if smin < 1e-6 {
        return Err(Error::Precondition(format!("L+ is near-singular (smallest singular value {smin:e})")));
    }

    let e = state.e;
    let lambda = tbp.lambda1 - tbp.beta * e;
    let g = &domain.grid;
    let mut c = state.f.clone();
    let mut history = Vec::new();
    let mut iterations = 0;
    let target = 1e-9 * lambda.abs().max(domain.hbar);
    let (phi1, perp, res_norm, residual_h) = loop {
        iterations += 1;
        let phi1 = synthesize(wb, &c);
        let c_l1: f64 = c.iter().map(|v| v.abs()).sum();
        let perp = solve_perp_fixed_point(domain, &phi1, c_l1, lambda, tbp.gamma, tbp.sigma, opts)?.phi_perp;
        let phi: Vec<f64> = phi1.iter().zip(&perp).map(|(a, b)| a + b).collect();
        let res = lattice_residual(domain, wb, tbp, lambda, &phi);
        let res_norm = l2(&res);
        let residual_h = g.norm(&continuum_residual(domain, &phi, lambda, tbp.gamma, tbp.sigma));
        // The lattice residual carries a 1/beta factor, so rounding sets a floor;
        // stop once the continuum residual meets the target and stops improving.
        let stalled = history.last().is_some_and(|&prev: &f64| residual_h > 0.5 * prev && residual_h <= target);
        history.push(residual_h);
        if residual_h <= 1e-4 * target || stalled {
            break (phi1, perp, res_norm, residual_h);
        }
        if iterations >= opts.max_outer {
            return Err(Error::NonConvergence(format!("reconstruction residual history {history:?}")));
        }
        let mut rhs = DVector::from_iterator(m, res.iter().map(|v| -v));
        if !linearization_lplus(&c, e, &prob).lu().solve_mut(&mut rhs) {
            return Err(Error::NonConvergence("singular lattice Jacobian".into()));
        }
        c.iter_mut().zip(rhs.iter()).for_each(|(a, d)| *a += d);
    };
    let phi: Vec<f64> = phi1.iter().zip(&perp).map(|(a, b)| a + b).collect();
    if residual_h > target {
        return Err(Error::NonConvergence(format!("continuum residual {residual_h:e} after {iterations} iterations")));
    }
    let seed = synthesize(wb, &state.f);
    let h1_error = g.h1_norm(&phi.iter().zip(&seed).map(|(a, b)| a - b).collect::<Vec<_>>());
    Ok(ContinuumState {
        hbar: domain.hbar,
        eta: state.eta,
        e,
        lambda,
        gamma: tbp.gamma,
        sigma: tbp.sigma,
        norm: g.norm(&phi),
        phi1_norm: g.norm(&phi1),
        phi_perp_h1: g.h1_norm(&perp),
        phi,
        c,
        phi1,
        phi_perp: perp,
        residual_h,
        lattice_residual: res_norm,
        h1_error,
        iterations,
        lplus_smin: smin,
        resolvent_shift: lambda,
    })
}

/// Linear (`gamma = 0`) state for the uniform lattice vector: `sum_j u_j / sqrt(M)`
/// is the first-band Bloch function at `kappa = 0`, so no correction is needed.
pub fn linear_reference(domain: &CellDomain, wb: &WannierBasis, tbp: &TBParams) -> ContinuumState {
    let m = wb.cells;
    let c = vec![1.0 / (m as f64).sqrt(); m];
    let phi = synthesize(wb, &c);
    let g = &domain.grid;
    let norm = g.norm(&phi);
    let lambda = g.dot(&phi, &domain.apply_h(&phi)) / (norm * norm);
    let residual_h = g.norm(&continuum_residual(domain, &phi, lambda, 0.0, tbp.sigma));
    let linear = TBParams { gamma: 0.0, eta: 0.0, ..tbp.clone() };
    let lattice_residual = l2(&lattice_residual(domain, wb, &linear, lambda, &phi));
    ContinuumState {
        hbar: domain.hbar,
        eta: 0.0,
        e: (tbp.lambda1 - lambda) / tbp.beta,
        lambda,
        gamma: 0.0,
        sigma: tbp.sigma,
        phi1: phi.clone(),
        phi_perp: vec![0.0; phi.len()],
        phi,
        c,
        norm,
        phi1_norm: norm,
        phi_perp_h1: 0.0,
        residual_h,
        lattice_residual,
        h1_error: 0.0,
        iterations: 0,
        lplus_smin: f64::NAN,
        resolvent_shift: lambda,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectSolution {
    pub phi: Vec<f64>,
    pub residual_h: f64,
    pub iterations: usize,
}

/// Right-preconditioned restarted GMRES for `A x = b`.
fn gmres<A, P>(apply: A, precond: P, b: &[f64], tol: f64, restart: usize, max_restarts: usize) -> Vec<f64>
where
    A: Fn(&[f64]) -> Vec<f64>,
    P: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let bnorm = l2(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return x;
    }
    for _ in 0..max_restarts {
        let ax = apply(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(a, c)| a - c).collect();
        let beta = l2(&r);
        if beta <= tol * bnorm {
            break;
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut hess = vec![vec![0.0; restart]; restart + 1];
        let (mut cs, mut sn) = (vec![0.0; restart], vec![0.0; restart]);
        let mut gvec = vec![0.0; restart + 1];
        gvec[0] = beta;
        let mut k_used = 0;
        for k in 0..restart {
            let z = precond(&basis[k]);
            let mut w = apply(&z);
            for (i, q) in basis.iter().enumerate() {
                let hik: f64 = w.iter().zip(q).map(|(a, b)| a * b).sum();
                hess[i][k] = hik;
                w.iter_mut().zip(q).for_each(|(a, b)| *a -= hik * b);
            }
            let wn = l2(&w);
            hess[k + 1][k] = wn;
            for i in 0..k {
                let t = cs[i] * hess[i][k] + sn[i] * hess[i + 1][k];
                hess[i + 1][k] = -sn[i] * hess[i][k] + cs[i] * hess[i + 1][k];
                hess[i][k] = t;
            }
            let d = (hess[k][k].powi(2) + hess[k + 1][k].powi(2)).sqrt();
            cs[k] = hess[k][k] / d;
            sn[k] = hess[k + 1][k] / d;
            hess[k][k] = d;
            hess[k + 1][k] = 0.0;
            gvec[k + 1] = -sn[k] * gvec[k];
            gvec[k] *= cs[k];
            k_used = k + 1;
            if gvec[k + 1].abs() <= tol * bnorm || wn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = (i + 1..k_used).map(|j| hess[i][j] * y[j]).sum();
            y[i] = (gvec[i] - s) / hess[i][i];
        }
        let mut v = vec![0.0; n];
        for (yi, q) in y.iter().zip(&basis) {
            v.iter_mut().zip(q).for_each(|(a, b)| *a += yi * b);
        }
        let dx = precond(&v);
        x.iter_mut().zip(dx).for_each(|(a, b)| *a += b);
        if gvec[k_used].abs() <= tol * bnorm {
            break;
        }
    }
    x
}

/// Newton on the full grid for `H phi + gamma |phi|^{2 sigma} phi = lambda phi`,
/// with linear solves by GMRES preconditioned with `(H - lambda)^{-1}`.
pub fn direct_newton_oracle(domain: &CellDomain, lambda: f64, gamma: f64, sigma: f64, seed: &[f64]) -> Result<DirectSolution> {
    let g = &domain.grid;
    let mut phi = seed.to_vec();
    let mut best = f64::INFINITY;
    let mut stall = 0;
    let mut iterations = 0;
    let scale = lambda.abs().max(1.0);
    loop {
        let r = continuum_residual(domain, &phi, lambda, gamma, sigma);
        let rn = g.norm(&r);
        if !rn.is_finite() || rn > 1e8 {
            return Err(Error::NonConvergence(format!("direct Newton diverged (residual {rn:e})")));
        }
        if rn < 1e-15 || (iterations == 0 && rn <= 1e-12 * scale) {
            best = rn;
            break;
        }
        if rn < 0.5 * best {
            stall = 0;
        } else {
            stall += 1;
        }
        best = best.min(rn);
        if stall >= 3 || iterations >= 40 {
            break;
        }
        let resonant = domain.bands.energies.iter().flatten().any(|e| (e - lambda).abs() < 1e-12 * scale);
        if resonant {
            return Err(Error::Precondition(format!("lambda = {lambda} is resonant with the spectrum of H")));
        }
        iterations += 1;
        let phi_ref = phi.clone();
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let step = gmres(
            |v| continuum_jacobian_apply(domain, &phi_ref, lambda, gamma, sigma, v),
            |v| domain.spectral_map(v, |_, e| 1.0 / (e - lambda)),
            &neg,
            1e-15,
            80,
            6,
        );
        phi.iter_mut().zip(step).for_each(|(a, b)| *a += b);
    }
    if best > 1e-11 {
        return Err(Error::NonConvergence(format!("direct Newton stalled at residual {best:e}")));
    }
    let residual_h = g.norm(&continuum_residual(domain, &phi, lambda, gamma, sigma));
    Ok(DirectSolution { phi, residual_h, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dnls::solve_anticontinuum;
    use crate::potential::{make_potential, tunneling_action, PotentialFamily, PotentialSpec};
    use crate::tightbinding::h_matrix_elements;
    use crate::wannier::{agmon_tail_fit, build_orthonormal_basis, BasisOptions};
    use rand::{Rng, SeedableRng};

    fn spec() -> PotentialSpec {
        make_potential(&PotentialFamily::Sin2 { v0: 8.0, a: 1.0 }).unwrap()
    }

    fn setup(hbar: f64, cells: usize) -> (CellDomain, WannierBasis, TBParams) {
        let d = CellDomain::new(&spec(), cells, 64, hbar).unwrap();
        let wb = build_orthonormal_basis(&spec(), &d, &BasisOptions::default()).unwrap();
        let hm = h_matrix_elements(&wb, &d).unwrap();
        let tbp = TBParams::new(&wb, hm, 1.0, 0.0).unwrap();
        (d, wb, tbp)
    }

    fn lattice(eta: f64, cells: usize) -> DnlsState {
        let p = DnlsProblem::new(0.0, 1.0, cells, Boundary::Periodic).unwrap();
        let mut path: Vec<f64> = [-50.0, -20.0, -10.0, -5.0].into_iter().filter(|e| *e <= eta).collect();
        if eta > -5.0 {
            path.push(eta);
        }
        solve_anticontinuum(&p, 0, &path).unwrap().states.pop().unwrap()
    }

    #[test]
    fn projection_of_basis_and_second_band() {
        let (d, wb, _) = setup(0.2, 16);
        let p = project_first_band(&wb, &wb.u(3));
        for (i, j) in wb.indices().enumerate() {
            assert!((p.c[i] - f64::from(j == 3)).abs() < 1e-8);
        }
        assert!(d.grid.norm(&p.phi_perp) < 1e-8);
        let b2: Vec<f64> = d.bloch_samples(1, 5).iter().map(|c| c.re).collect();
        let p = project_first_band(&wb, &b2);
        assert!(l2(&p.c) <= 1e-6);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let f: Vec<f64> = (0..d.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let p = project_first_band(&wb, &f);
        let total = d.grid.norm(&f).powi(2);
        let split = l2(&p.c).powi(2) + d.grid.norm(&p.phi_perp).powi(2);
        assert!((total - split).abs() < 1e-10 * total);
        assert!((d.grid.norm(&p.phi1) - l2(&p.c)).abs() < 1e-8);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let (d, wb, _) = setup(0.25, 8);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let phi: Vec<f64> = wb.u0.iter().map(|v| v * 1.3).collect();
        for _ in 0..20 {
            let v: Vec<f64> = (0..d.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (lambda, gamma) = (1.7, -0.4);
            let jv = continuum_jacobian_apply(&d, &phi, lambda, gamma, 1.0, &v);
            let h = 1e-6;
            let a: Vec<f64> = phi.iter().zip(&v).map(|(p, v)| p + h * v).collect();
            let b: Vec<f64> = phi.iter().zip(&v).map(|(p, v)| p - h * v).collect();
            let ra = continuum_residual(&d, &a, lambda, gamma, 1.0);
            let rb = continuum_residual(&d, &b, lambda, gamma, 1.0);
            let fd: Vec<f64> = ra.iter().zip(&rb).map(|(x, y)| (x - y) / (2.0 * h)).collect();
            let err = l2(&jv.iter().zip(&fd).map(|(x, y)| x - y).collect::<Vec<_>>()) / l2(&jv);
            assert!(err < 1e-6, "{err}");
        }
    }

    #[test]
    fn fixed_point_basics() {
        let (d, wb, tbp) = setup(0.2, 16);
        let phi1 = wb.u0.clone();
        let lambda = tbp.lambda1 - tbp.beta * 3.0;
        let zero = solve_perp_fixed_point(&d, &phi1, 1.0, lambda, 0.0, 1.0, &ReconstructOptions::default()).unwrap();
        assert!(zero.phi_perp.iter().all(|v| *v == 0.0));
        // First Picard iterate scales like |c|^{2 sigma + 1}.
        let gamma = tbp.with_eta(-2.0).unwrap().gamma;
        let once = |s: f64| {
            let p: Vec<f64> = phi1.iter().map(|v| s * v).collect();
            let r = d.resolvent_perp(&nonlinearity(&p, 1.0), lambda).unwrap();
            d.grid.h1_norm(&r) * gamma.abs()
        };
        let ratio = once(0.8) / once(0.4);
        assert!((ratio / 8.0 - 1.0).abs() < 0.05);
        let big = solve_perp_fixed_point(&d, &phi1, 2.5, lambda, gamma, 1.0, &ReconstructOptions::default());
        assert!(big.is_err());
        let near = solve_perp_fixed_point(&d, &phi1, 1.0, d.bands.alpha[1] - 0.01, gamma, 1.0, &ReconstructOptions::default());
        assert!(near.is_err());
    }

    #[test]
    fn linear_reconstruction_is_a_band_state() {
        let (d, wb, tbp) = setup(0.2, 16);
        // gamma = 0 with E at the band bottom: the uniform lattice vector.
        let n = wb.cells;
        let f = vec![1.0 / (n as f64).sqrt(); n];
        let prob = DnlsProblem::new(0.0, 1.0, n, Boundary::Periodic).unwrap();
        let st = DnlsState::from_solution(&prob, f.clone(), 2.0);
        assert!(st.residual_norm < 1e-14);
        let phi = synthesize(&wb, &f);
        let lambda = tbp.lambda1 - 2.0 * tbp.beta + (2..=4).map(|l| 2.0 * tbp.h_matrix.at(l)).sum::<f64>();
        let res = d.grid.norm(&continuum_residual(&d, &phi, lambda, 0.0, 1.0));
        assert!(res <= 1e-10, "{res}");
        let lin = linear_reference(&d, &wb, &tbp);
        assert_eq!(lin.h1_error, 0.0);
        assert!((lin.lambda - d.bands.energies[0][d.bands.kappa_index(0.0).unwrap()]).abs() < 1e-10);
        assert!(lin.residual_h <= 1e-10 && lin.lattice_residual < 1e-8);
    }

    #[test]
    fn reconstruction_matches_direct_newton() {
        let (d, wb, tbp) = setup(0.15, 16);
        let st = lattice(-3.0, 16);
        let tb = tbp.with_eta(-3.0).unwrap();
        let opts = ReconstructOptions { delta0: 4.0, ..Default::default() };
        assert!(reconstruct_and_correct(&d, &wb, &tb, &st, &ReconstructOptions::default()).is_err());
        let cs = reconstruct_and_correct(&d, &wb, &tb, &st, &opts).unwrap();
        assert!(cs.residual_h <= 1e-9 * cs.lambda.abs());
        let rayleigh = d.grid.dot(&cs.phi, &d.apply_h(&cs.phi))
            + tb.gamma * cs.phi.iter().map(|v| v.powi(4)).sum::<f64>() * d.grid.h;
        assert!((rayleigh / cs.norm.powi(2) - cs.lambda).abs() < 1e-8);
        assert!((cs.norm.powi(2) - cs.phi1_norm.powi(2) - d.grid.norm(&cs.phi_perp).powi(2)).abs() < 1e-10);
        assert!(cs.h1_error < 1e-2);
        let direct = direct_newton_oracle(&d, cs.lambda, tb.gamma, 1.0, &synthesize(&wb, &st.f)).unwrap();
        let diff: Vec<f64> = direct.phi.iter().zip(&cs.phi).map(|(a, b)| a - b).collect();
        assert!(d.grid.h1_norm(&diff) < 1e-7, "{}", d.grid.h1_norm(&diff));
    }

    #[test]
    fn localized_state_has_agmon_tail() {
        let (d, wb, tbp) = setup(0.1, 16);
        let st = lattice(-50.0, 16);
        let tb = tbp.with_eta(-50.0).unwrap();
        let cs = reconstruct_and_correct(&d, &wb, &tb, &st, &ReconstructOptions::default()).unwrap();
        assert!(cs.peak_cell_mass(&d) > 0.95);
        let ad = tunneling_action(&spec(), &d.grid.xs()).unwrap();
        let fit = agmon_tail_fit(&d.grid, &cs.phi, &ad, 0.1, (1e-10, 1e-3)).unwrap();
        assert!((fit.slope + 1.0).abs() <= 0.25, "{}", fit.slope);
    }

    #[test]
    fn newton_keeps_bloch_seed_and_kills_defocusing_seed() {
        let (d, wb, _) = setup(0.25, 8);
        let phi: Vec<f64> = d.bloch_samples(0, 4).iter().map(|c| c.re).collect();
        let e = d.bands.energies[0][4];
        let out = direct_newton_oracle(&d, e, 0.0, 1.0, &phi).unwrap();
        assert!(out.phi.iter().zip(&phi).all(|(a, b)| (a - b).abs() < 1e-11));
        let lambda = d.bands.alpha[0] - 0.5;
        let seed: Vec<f64> = wb.u0.iter().map(|v| 0.5 * v).collect();
        let out = direct_newton_oracle(&d, lambda, 0.3, 1.0, &seed).unwrap();
        assert!(d.grid.norm(&out.phi) < 1e-8);
    }
}

//! Lattice parameters of the reduced model: `lambda1`, `beta`, `C0`, `eta` and
//! the residual couplings beyond nearest neighbours.

use crate::bloch::BandData;
use crate::domain::CellDomain;
use crate::error::{Error, Result};
use crate::wannier::WannierBasis;
use serde::{Deserialize, Serialize};

pub const MAX_RANGE: i64 = 4;

/// Translation-invariant band of `<u_0, H u_l>` for `|l| <= 4`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HMatrix {
    /// `offsets[l + 4] = <u_0, H u_l>`.
    pub offsets: Vec<f64>,
    /// Diagonal `<u_j, H u_j>` for `j = -3..=3`.
    pub diagonal: Vec<f64>,
}

impl HMatrix {
    pub fn at(&self, l: i64) -> f64 {
        if l.abs() > MAX_RANGE {
            return 0.0;
        }
        self.offsets[(l + MAX_RANGE) as usize]
    }

    pub fn lambda1(&self) -> f64 {
        self.at(0)
    }

    pub fn beta(&self) -> f64 {
        -self.at(1)
    }

    pub fn asymmetry(&self) -> f64 {
        (1..=MAX_RANGE).map(|l| (self.at(l) - self.at(-l)).abs()).fold(0.0, f64::max)
    }

    /// Spread of the diagonal entries across the sampled sites.
    pub fn diagonal_spread(&self) -> f64 {
        let lo = self.diagonal.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.diagonal.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    }
}

pub fn h_matrix_elements(wb: &WannierBasis, domain: &CellDomain) -> Result<HMatrix> {
    let g = &domain.grid;
    let hu0 = domain.apply_h(&wb.u0);
    let offsets: Vec<f64> = (-MAX_RANGE..=MAX_RANGE).map(|l| g.dot(&hu0, &wb.u(l))).collect();
    let diagonal: Vec<f64> = (-3..=3)
        .map(|j| {
            let u = wb.u(j);
            g.dot(&u, &domain.apply_h(&u))
        })
        .collect();
    let hm = HMatrix { offsets, diagonal };
    let (lo, hi) = (domain.bands.alpha[0], domain.bands.beta[0]);
    let l1 = hm.lambda1();
    if l1 < lo - 1e-8 || l1 > hi + 1e-8 {
        return Err(Error::BasisLeakage(format!("lambda1 = {l1} outside the first band [{lo}, {hi}]")));
    }
    Ok(hm)
}

/// Band average and first cosine coefficient of `E_1`:
/// `(mean E_1, -mean E_1(kappa) cos(kappa a))`.
pub fn band_fourier_oracle(bd: &BandData) -> (f64, f64) {
    let n = bd.kappas.len() as f64;
    let e = &bd.energies[0];
    let mean = e.iter().sum::<f64>() / n;
    let beta = -e.iter().zip(&bd.kappas).map(|(e, k)| e * (k * bd.a).cos()).sum::<f64>() / n;
    (mean, beta)
}

/// `C0 = int |u_0|^{2 sigma + 2}`.
pub fn interaction_constant(wb: &WannierBasis, sigma: f64) -> Result<f64> {
    if !(sigma >= 0.0) {
        return Err(Error::Precondition(format!("sigma must be non-negative, got {sigma}")));
    }
    Ok(moment(wb, &wb.u0, sigma))
}

/// `int |f|^{2 sigma + 2}` on the basis grid.
pub fn moment(wb: &WannierBasis, f: &[f64], sigma: f64) -> f64 {
    wb.h() * f.iter().map(|v| v.abs().powf(2.0 * sigma + 2.0)).sum::<f64>()
}

/// `eta = C0 gamma / beta`.
pub fn effective_nonlinearity(c0: f64, gamma: f64, beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::NonPositiveHopping(beta));
    }
    Ok(c0 * gamma / beta)
}

/// Inverse map `gamma(eta) = eta beta / C0`.
pub fn gamma_for_eta(c0: f64, eta: f64, beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::NonPositiveHopping(beta));
    }
    Ok(eta * beta / c0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualCoupling {
    pub norm: f64,
    pub ratio: f64,
}

/// Max row sum of couplings beyond nearest neighbours, and its ratio to `beta`.
pub fn residual_coupling_norm(hm: &HMatrix, beta: f64) -> ResidualCoupling {
    let norm: f64 = (2..=MAX_RANGE).map(|l| hm.at(l).abs() + hm.at(-l).abs()).sum();
    ResidualCoupling { norm, ratio: norm / beta }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TBParams {
    pub hbar: f64,
    pub lambda1: f64,
    pub beta: f64,
    pub c0: f64,
    pub gamma: f64,
    pub eta: f64,
    pub sigma: f64,
    pub d_tilde_norm: f64,
    pub h_matrix: HMatrix,
}

impl TBParams {
    pub fn new(wb: &WannierBasis, hm: HMatrix, sigma: f64, gamma: f64) -> Result<Self> {
        let beta = hm.beta();
        let c0 = interaction_constant(wb, sigma)?;
        let eta = effective_nonlinearity(c0, gamma, beta)?;
        let d = residual_coupling_norm(&hm, beta);
        Ok(Self { hbar: wb.hbar, lambda1: hm.lambda1(), beta, c0, gamma, eta, sigma, d_tilde_norm: d.norm, h_matrix: hm })
    }

    /// Same parameters at effective nonlinearity `eta`.
    pub fn with_eta(&self, eta: f64) -> Result<Self> {
        let gamma = gamma_for_eta(self.c0, eta, self.beta)?;
        Ok(Self { gamma, eta, ..self.clone() })
    }
}

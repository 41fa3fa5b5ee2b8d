//! Run configuration read from TOML.

use crate::dnls::Boundary;
use crate::error::{Error, Result};
use crate::potential::PotentialFamily;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::PathBuf;

/// Bumped whenever cached bundles change layout or meaning.
pub const CACHE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    /// Plane waves per quasimomentum for the standalone band solve (odd).
    pub n_pw: usize,
    pub n_kappa: usize,
    pub n_bands: usize,
    /// Cells of the periodic domain used for the basis and the continuum.
    pub cells: usize,
    pub points_per_cell: usize,
    /// Sites of the standalone lattice ladder.
    pub n_sites: usize,
    pub boundary: Boundary,
    pub overlap_band: usize,
    pub seed_modes: usize,
    /// Bound on `||c||_l1` for the off-band fixed point.
    pub delta0: f64,
    /// Amplitude window `[lo, hi]` for exponential tail fits.
    pub tail_window: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub hbars: Vec<f64>,
    pub etas: Vec<f64>,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Io {
    pub output_dir: PathBuf,
    pub cache_dir: PathBuf,
    /// Also write one JSON bundle per continuum state.
    #[serde(default)]
    pub write_states: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub potential: PotentialFamily,
    pub numerics: Numerics,
    pub sweep: Sweep,
    pub io: Io,
}

impl RunConfig {
    pub fn reference() -> Self {
        Self {
            potential: PotentialFamily::Sin2 { v0: 8.0, a: 1.0 },
            numerics: Numerics {
                n_pw: 129,
                n_kappa: 64,
                n_bands: 4,
                cells: 32,
                points_per_cell: 64,
                n_sites: 41,
                boundary: Boundary::Zero,
                overlap_band: 6,
                seed_modes: 128,
                delta0: 4.0,
                tail_window: [1e-10, 1e-3],
            },
            sweep: Sweep {
                hbars: vec![0.25, 0.2, 0.16, 0.125, 0.1],
                etas: vec![
                    0.0, -0.5, -1.0, -1.5, -2.0, -2.5, -3.0, -4.0, -5.0, -7.0, -10.0, -20.0, -50.0, 2.0, 5.0, 20.0, 50.0,
                ],
                sigma: 1.0,
            },
            io: Io { output_dir: "out".into(), cache_dir: ".bhreduce-cache".into(), write_states: false },
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn validate(&self, allow_low_sigma: bool) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        let n = &self.numerics;
        let s = &self.sweep;
        if n.cells < 3 || n.points_per_cell < 8 || n.points_per_cell % 2 != 0 {
            return bad(format!("numerics: need cells >= 3 and even points_per_cell >= 8, got {} and {}", n.cells, n.points_per_cell));
        }
        if n.n_sites < 11 {
            return bad(format!("numerics.n_sites must be at least 11, got {}", n.n_sites));
        }
        if !(n.delta0 > 0.0) {
            return bad(format!("numerics.delta0 must be positive, got {}", n.delta0));
        }
        let [lo, hi] = n.tail_window;
        if !(lo > 0.0 && hi > lo) {
            return bad(format!("numerics.tail_window must satisfy 0 < lo < hi, got [{lo}, {hi}]"));
        }
        if n.overlap_band == 0 || n.seed_modes < 8 {
            return bad("numerics: overlap_band must be positive and seed_modes at least 8".into());
        }
        if s.hbars.is_empty() || s.hbars.iter().any(|h| !(*h > 0.0)) {
            return bad("sweep.hbars must be a nonempty list of positive values".into());
        }
        if s.hbars.windows(2).any(|w| w[1] >= w[0]) {
            return bad("sweep.hbars must be strictly decreasing".into());
        }
        if !s.etas.contains(&0.0) {
            return bad("sweep.etas must include 0".into());
        }
        if s.etas.iter().any(|e| !e.is_finite()) {
            return bad("sweep.etas must be finite".into());
        }
        if !(s.sigma > 0.0) || (s.sigma < 0.5 && !allow_low_sigma) {
            return bad(format!("sweep.sigma = {} below 1/2 (pass --allow-low-sigma to override)", s.sigma));
        }
        for h in &s.hbars {
            self.floquet(*h).validate()?;
        }
        Ok(())
    }

    pub fn floquet(&self, hbar: f64) -> crate::bloch::FloquetConfig {
        crate::bloch::FloquetConfig {
            hbar,
            n_pw: self.numerics.n_pw,
            n_kappa: self.numerics.n_kappa,
            n_bands_kept: self.numerics.n_bands,
        }
    }

    /// Hex digest of the potential and numerics sections plus `extra`.
    pub fn cache_key(&self, extra: &str) -> String {
        let body = serde_json::json!({
            "version": CACHE_VERSION,
            "potential": self.potential,
            "numerics": self.numerics,
            "extra": extra,
        });
        hex::encode(Sha256::digest(body.to_string().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_reference_is_valid() {
        let c = RunConfig::reference();
        c.validate(false).unwrap();
        let text = c.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), c);
        let shipped = include_str!("../../../configs/reference.toml");
        assert_eq!(RunConfig::from_toml(shipped).unwrap(), c);
    }

    #[test]
    fn missing_section_is_named() {
        let text = RunConfig::reference().to_toml().unwrap();
        let cut: String = text.split("[numerics]").nth(1).map(|t| format!("[numerics]{t}")).unwrap();
        let err = RunConfig::from_toml(&cut).unwrap_err().to_string();
        assert!(err.contains("potential"), "{err}");
    }

    #[test]
    fn validation_rules() {
        let mut c = RunConfig::reference();
        c.sweep.sigma = 0.4;
        assert!(c.validate(false).is_err());
        assert!(c.validate(true).is_ok());
        let mut c = RunConfig::reference();
        c.sweep.hbars = vec![0.1, 0.2];
        assert!(c.validate(false).is_err());
        let mut c = RunConfig::reference();
        c.sweep.etas.retain(|e| *e != 0.0);
        assert!(c.validate(false).is_err());
        let mut c = RunConfig::reference();
        c.numerics.tail_window = [1e-3, 1e-10];
        assert!(c.validate(false).is_err());
    }

    #[test]
    fn cache_key_tracks_numerics() {
        let a = RunConfig::reference();
        let mut b = a.clone();
        b.io.output_dir = "elsewhere".into();
        b.sweep.etas.push(-60.0);
        assert_eq!(a.cache_key("x"), b.cache_key("x"));
        b.numerics.points_per_cell = 128;
        assert_ne!(a.cache_key("x"), b.cache_key("x"));
        assert_ne!(a.cache_key("x"), a.cache_key("y"));
    }
}

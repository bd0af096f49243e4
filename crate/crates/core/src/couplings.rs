//! Waveguide-mediated couplings between cavities.
//!
//! Each cavity emits into `n_modes` chiral channels. Integrating out the
//! channels leaves the self-energy
//!
//! ```text
//! Σ_ij = -i Σ_ℓ (Γ_ℓ/2) exp(i k_ℓ (r_i - r_j) - |r_i - r_j| / l_κ) (1 + sign(r_i - r_j))
//! ```
//!
//! with `J_ij = Re Σ_ij` and `Γ_ij = -2 Im Σ_ij`. Only downstream cavities
//! (`r_i > r_j` for right-moving channels) are reached, so the matrices are
//! one-sided.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};

/// Propagation direction of every channel in the waveguide.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chirality {
    #[default]
    Right,
    Left,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveguideSpec {
    /// Decay rate into each channel.
    pub gamma_per_mode: Vec<f64>,
    /// Resonant momentum of each channel, in units of 1/a.
    pub k_res: Vec<f64>,
    /// Propagation length in units of a.
    pub l_kappa: f64,
    #[serde(default)]
    pub chirality: Chirality,
}

impl WaveguideSpec {
    pub fn new(gamma_per_mode: Vec<f64>, k_res: Vec<f64>, l_kappa: f64) -> Result<Self> {
        let wg = Self { gamma_per_mode, k_res, l_kappa, chirality: Chirality::Right };
        wg.validate()?;
        Ok(wg)
    }

    /// `n` channels sharing the total rate `gamma` equally.
    pub fn equal_rates(k_res: Vec<f64>, l_kappa: f64, gamma: f64) -> Result<Self> {
        let n = k_res.len().max(1);
        Self::new(vec![gamma / n as f64; k_res.len()], k_res, l_kappa)
    }

    pub fn with_chirality(mut self, chirality: Chirality) -> Self {
        self.chirality = chirality;
        self
    }

    pub fn n_modes(&self) -> usize {
        self.k_res.len()
    }

    /// Total decay rate Γ.
    pub fn gamma(&self) -> f64 {
        self.gamma_per_mode.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_res.is_empty() {
            return Err(Error::Config("waveguide needs at least one mode".into()));
        }
        if self.gamma_per_mode.len() != self.k_res.len() {
            return Err(Error::Config(format!(
                "gamma_per_mode has {} entries but k_res has {}",
                self.gamma_per_mode.len(),
                self.k_res.len()
            )));
        }
        if self.gamma_per_mode.iter().any(|g| !g.is_finite() || *g < 0.0) {
            return Err(Error::Config("decay rates must be finite and non-negative".into()));
        }
        if self.k_res.iter().any(|k| !k.is_finite()) {
            return Err(Error::Config("resonant momenta must be finite".into()));
        }
        if !(self.gamma() > 0.0) {
            return Err(Error::Config("total decay rate must be positive".into()));
        }
        if !(self.l_kappa.is_finite() && self.l_kappa > 0.0) {
            return Err(Error::Config(format!("l_kappa must be finite and positive, got {}", self.l_kappa)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub positions: Vec<f64>,
}

impl LatticeSpec {
    /// `n` sites at `r_j = j`.
    pub fn uniform(n: usize) -> Self {
        Self { positions: (0..n).map(|j| j as f64).collect() }
    }

    pub fn from_positions(positions: Vec<f64>) -> Result<Self> {
        let lat = Self { positions };
        lat.validate()?;
        Ok(lat)
    }

    pub fn n_sites(&self) -> usize {
        self.positions.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.positions.is_empty() {
            return Err(Error::Config("lattice needs at least one site".into()));
        }
        if self.positions.iter().any(|r| !r.is_finite()) {
            return Err(Error::Config("positions must be finite".into()));
        }
        if self.positions.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("positions must be strictly increasing".into()));
        }
        Ok(())
    }
}

/// Coherent (`j`) and incoherent (`gamma`) coupling matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingMatrices {
    pub j: CMatrix,
    pub gamma: CMatrix,
}

impl CouplingMatrices {
    pub fn n_sites(&self) -> usize {
        self.j.nrows()
    }

    /// `J - iΓ/2`, i.e. the self-energy matrix.
    pub fn sigma(&self) -> CMatrix {
        &self.j - self.gamma.map(|g| g * C64::new(0.0, 0.5))
    }
}

/// Self-energy between cavities at `ri` (response) and `rj` (source).
pub fn self_energy(wg: &WaveguideSpec, ri: f64, rj: f64) -> Result<C64> {
    wg.validate()?;
    Ok(self_energy_unchecked(wg, ri, rj))
}

pub(crate) fn self_energy_unchecked(wg: &WaveguideSpec, ri: f64, rj: f64) -> C64 {
    let d = match wg.chirality {
        Chirality::Right => ri - rj,
        Chirality::Left => rj - ri,
    };
    let factor = if d > 0.0 {
        2.0
    } else if d == 0.0 {
        1.0
    } else {
        return C64::new(0.0, 0.0);
    };
    let decay = (-d.abs() / wg.l_kappa).exp();
    let sum: C64 = wg
        .gamma_per_mode
        .iter()
        .zip(&wg.k_res)
        .map(|(&g, &k)| C64::from_polar(0.5 * g * decay * factor, k * d))
        .sum();
    // -i * sum
    C64::new(sum.im, -sum.re)
}

pub fn coupling_matrices(wg: &WaveguideSpec, lat: &LatticeSpec) -> Result<CouplingMatrices> {
    wg.validate()?;
    lat.validate()?;
    let n = lat.n_sites();
    let sigma = CMatrix::from_fn(n, n, |i, j| self_energy_unchecked(wg, lat.positions[i], lat.positions[j]));
    Ok(CouplingMatrices {
        j: sigma.map(|z| C64::new(z.re, 0.0)),
        gamma: sigma.map(|z| C64::new(-2.0 * z.im, 0.0)),
    })
}

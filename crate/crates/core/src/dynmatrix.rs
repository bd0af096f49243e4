//! The non-Hermitian generator of the coherence dynamics, its doubled
//! Hermitian form, singular decomposition and stability.
//!
//! Coherences obey `d⟨b⟩/dt = -iℍ⟨b⟩ + iΩ` with
//! `ℍ_ij = J_ij - iΓ_ij/2 + i(P/2)δ_ij + Δδ_ij`. A parametric drive couples
//! `⟨b⟩` to `⟨b†⟩`, which doubles the matrix:
//!
//! ```text
//! M = [[ ℍ,      c g_s I ],
//!      [ -c g_s I,  -ℍ*  ]]
//! ```
//!
//! where `c` is the parametric factor (1 by default, 2 if the commutator
//! factor of the two-photon term is kept).

use serde::{Deserialize, Serialize};

use crate::couplings::CouplingMatrices;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, C64};

/// Eigenvalues with imaginary part above this are counted as gain.
pub const TOL_STABILITY: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct DriveSpec {
    /// Incoherent pump rate P.
    pub pump: f64,
    /// Coherent drive amplitude per site. Empty means no drive.
    pub omega: Vec<C64>,
    /// Parametric amplitude g_s.
    pub g_s: f64,
    /// Detuning Δ.
    pub delta: f64,
    /// 1 or 2; multiplies g_s in the Bogoliubov blocks.
    pub parametric_factor: f64,
}

impl Default for DriveSpec {
    fn default() -> Self {
        Self { pump: 0.0, omega: Vec::new(), g_s: 0.0, delta: 0.0, parametric_factor: 1.0 }
    }
}

impl DriveSpec {
    pub fn pump(pump: f64) -> Self {
        Self { pump, ..Self::default() }
    }

    pub fn parametric(g_s: f64, delta: f64) -> Self {
        Self { g_s, delta, ..Self::default() }
    }

    pub fn with_omega(mut self, omega: Vec<C64>) -> Self {
        self.omega = omega;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pump.is_finite() && self.pump >= 0.0) {
            return Err(Error::Config(format!("pump must be finite and non-negative, got {}", self.pump)));
        }
        if !(self.g_s.is_finite() && self.g_s >= 0.0) {
            return Err(Error::Config(format!("g_s must be finite and non-negative, got {}", self.g_s)));
        }
        if !self.delta.is_finite() {
            return Err(Error::Config("delta must be finite".into()));
        }
        if self.parametric_factor != 1.0 && self.parametric_factor != 2.0 {
            return Err(Error::Config(format!("parametric_factor must be 1 or 2, got {}", self.parametric_factor)));
        }
        Ok(())
    }

    /// Pump and parametric drive together go beyond the studied phase
    /// diagrams; allowed, but callers may want to warn.
    pub fn mixes_pump_and_parametric(&self) -> bool {
        self.pump != 0.0 && self.g_s != 0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    Normal,
    Bogoliubov,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DynamicalMatrix {
    pub kind: MatrixKind,
    pub m: CMatrix,
    pub n_sites: usize,
}

impl DynamicalMatrix {
    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    /// Right-hand side of the steady-state equations for the drive `omega`:
    /// `Ω` for the normal form, `(Ω, -Ω*)` for the Bogoliubov form.
    pub fn drive_vector(&self, omega: &[C64]) -> Result<CVector> {
        if omega.len() != self.n_sites {
            return Err(Error::Dimension(format!("drive has {} entries for {} sites", omega.len(), self.n_sites)));
        }
        Ok(match self.kind {
            MatrixKind::Normal => CVector::from_column_slice(omega),
            MatrixKind::Bogoliubov => {
                CVector::from_iterator(2 * self.n_sites, omega.iter().copied().chain(omega.iter().map(|z| -z.conj())))
            }
        })
    }
}

fn normal_block(cm: &CouplingMatrices, pump: f64, delta: f64) -> CMatrix {
    let mut m = cm.sigma();
    let diag = C64::new(delta, 0.5 * pump);
    for i in 0..m.nrows() {
        m[(i, i)] += diag;
    }
    m
}

pub fn build_dynamical_matrix(cm: &CouplingMatrices, drive: &DriveSpec) -> Result<DynamicalMatrix> {
    drive.validate()?;
    if drive.g_s != 0.0 {
        return Err(Error::Config("parametric drive needs the Bogoliubov matrix".into()));
    }
    Ok(DynamicalMatrix { kind: MatrixKind::Normal, m: normal_block(cm, drive.pump, drive.delta), n_sites: cm.n_sites() })
}

pub fn build_bogoliubov_matrix(cm: &CouplingMatrices, drive: &DriveSpec) -> Result<DynamicalMatrix> {
    drive.validate()?;
    let n = cm.n_sites();
    let h = normal_block(cm, drive.pump, drive.delta);
    let g = C64::new(drive.parametric_factor * drive.g_s, 0.0);
    let mut m = CMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(&h);
    m.view_mut((n, n), (n, n)).copy_from(&h.map(|z| -z.conj()));
    for i in 0..n {
        m[(i, i + n)] = g;
        m[(i + n, i)] = -g;
    }
    Ok(DynamicalMatrix { kind: MatrixKind::Bogoliubov, m, n_sites: n })
}

/// Normal form when `g_s = 0`, Bogoliubov form otherwise.
pub fn build(cm: &CouplingMatrices, drive: &DriveSpec) -> Result<DynamicalMatrix> {
    if drive.g_s == 0.0 {
        build_dynamical_matrix(cm, drive)
    } else {
        build_bogoliubov_matrix(cm, drive)
    }
}

/// `[[0, M], [M†, 0]]`.
pub fn doubled_hamiltonian(m: &CMatrix) -> CMatrix {
    let (r, c) = m.shape();
    let mut out = CMatrix::zeros(r + c, r + c);
    out.view_mut((0, r), (r, c)).copy_from(m);
    out.view_mut((r, 0), (c, r)).copy_from(&m.adjoint());
    out
}

#[derive(Clone, Debug)]
pub struct SvdTriple {
    pub u: CMatrix,
    /// Descending singular values.
    pub s: Vec<f64>,
    pub v: CMatrix,
    /// Indices into `s` of the `W` smallest singular values.
    pub edge_set: Vec<usize>,
    /// Largest edge singular value; `None` when `W = 0`.
    pub delta_obc: Option<f64>,
    /// Smallest bulk singular value; `None` when every value is an edge value.
    pub delta_pbc: Option<f64>,
    /// Set when the edge values are not separated from the bulk.
    pub bulk_boundary_broken: bool,
}

pub fn singular_decomposition(dm: &DynamicalMatrix, winding: usize) -> Result<SvdTriple> {
    svd_triple(&dm.m, winding)
}

pub fn svd_triple(m: &CMatrix, winding: usize) -> Result<SvdTriple> {
    let n = m.nrows().min(m.ncols());
    if winding > n {
        return Err(Error::Dimension(format!("winding number {winding} exceeds matrix size {n}")));
    }
    let linalg::Svd { u, s, v } = linalg::svd(m)?;
    let edge_set: Vec<usize> = (n - winding..n).collect();
    let delta_obc = edge_set.first().map(|&i| s[i]);
    let delta_pbc = (winding < n).then(|| s[n - winding - 1]);
    let bulk_boundary_broken = matches!((delta_obc, delta_pbc), (Some(o), Some(p)) if o >= p);
    Ok(SvdTriple { u, s, v, edge_set, delta_obc, delta_pbc, bulk_boundary_broken })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stability {
    pub stable: bool,
    pub max_im: f64,
}

pub fn stability(dm: &DynamicalMatrix) -> Result<Stability> {
    stability_of(&dm.m)
}

pub fn stability_of(m: &CMatrix) -> Result<Stability> {
    let max_im = linalg::eigenvalues(m)?.iter().map(|z| z.im).fold(f64::NEG_INFINITY, f64::max);
    Ok(Stability { stable: max_im <= TOL_STABILITY, max_im })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::couplings::{coupling_matrices, LatticeSpec, WaveguideSpec};

    fn cm(n: usize, k: Vec<f64>, l: f64) -> CouplingMatrices {
        coupling_matrices(&WaveguideSpec::equal_rates(k, l, 1.0).unwrap(), &LatticeSpec::uniform(n)).unwrap()
    }

    #[test]
    fn isolated_cavities_decay() {
        let c = cm(2, vec![0.0], 1e-3);
        let dm = build_dynamical_matrix(&c, &DriveSpec::default()).unwrap();
        for i in 0..2 {
            assert!((dm.m[(i, i)] - C64::new(0.0, -0.5)).norm() < 1e-15);
        }
        assert!(dm.m[(1, 0)].norm() < 1e-200);
    }

    #[test]
    fn balanced_gain_vanishes() {
        let c = cm(1, vec![0.3], 2.0);
        let dm = build_dynamical_matrix(&c, &DriveSpec::pump(1.0)).unwrap();
        assert_eq!(dm.m[(0, 0)], C64::new(0.0, 0.0));
    }

    #[test]
    fn parametric_needs_bogoliubov() {
        let c = cm(3, vec![0.0], 2.0);
        assert!(build_dynamical_matrix(&c, &DriveSpec::parametric(0.2, 0.0)).is_err());
        assert!(build(&c, &DriveSpec::parametric(0.2, 0.0)).unwrap().kind == MatrixKind::Bogoliubov);
    }

    #[test]
    fn single_site_parametric_pair() {
        // [[-i/2, g], [-g, -i/2]] has eigenvalues -i/2 ± i g
        let c = cm(1, vec![0.0], 1.0);
        for &g in &[0.1, 0.4, 0.6, 1.0] {
            let dm = build_bogoliubov_matrix(&c, &DriveSpec::parametric(g, 0.0)).unwrap();
            let st = stability(&dm).unwrap();
            assert!((st.max_im - (g - 0.5)).abs() < 1e-14);
            assert_eq!(st.stable, g <= 0.5);
        }
    }

    #[test]
    fn doubled_is_hermitian_and_pairs() {
        let c = cm(5, vec![0.2, 1.1], 3.0);
        let dm = build_dynamical_matrix(&c, &DriveSpec::pump(0.4)).unwrap();
        let h = doubled_hamiltonian(&dm.m);
        assert!((&h - h.adjoint()).norm() < 1e-14);
        let ev = linalg::hermitian_eigenvalues(&h).unwrap();
        let s = linalg::svd(&dm.m).unwrap().s;
        for (i, sv) in s.iter().enumerate() {
            assert!((ev[ev.len() - 1 - i] - sv).abs() < 1e-12);
            assert!((ev[i] + sv).abs() < 1e-12);
        }
    }

    #[test]
    fn winding_larger_than_size_is_rejected() {
        let c = cm(3, vec![0.0], 2.0);
        let dm = build_dynamical_matrix(&c, &DriveSpec::default()).unwrap();
        assert!(singular_decomposition(&dm, 4).is_err());
        let t = singular_decomposition(&dm, 0).unwrap();
        assert!(t.edge_set.is_empty() && t.delta_obc.is_none());
        assert_eq!(t.delta_pbc, Some(t.s[2]));
    }
}

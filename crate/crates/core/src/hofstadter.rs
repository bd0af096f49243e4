//! Harper-Hofstadter strip and its chiral edge channels.
//!
//! `H = -J Σ (a†_{x+1,y} a_{x,y} + e^{i2πφx} a†_{x,y+1} a_{x,y}) + h.c.` with
//! open boundaries along x and periodic y. After a Fourier transform in y
//! each `k_y` gives an `L×L` chain with on-site energy `-2J cos(2πφx + k_y)`
//! and hopping `-J`. Within the n-th bulk gap (flux 1/q) each edge carries n
//! chiral branches; a cavity resonant at `ω_c` couples to every branch that
//! crosses `ω_c`, which makes the edge a multi-mode chiral waveguide.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::couplings::{Chirality, WaveguideSpec};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};

pub const DEFAULT_ETA_CUT: f64 = -0.9;
pub const DEFAULT_N_KY: usize = 512;
/// (k_x, k_y) samples per direction for the bulk band edges.
const BULK_GRID: usize = 48;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HofstadterSpec {
    pub q: usize,
    /// Flux per plaquette; `1/q` unless overridden.
    pub phi: f64,
    /// Number of sites along the open direction.
    pub width: usize,
    pub j_hop: f64,
    /// Momenta along the periodic direction.
    pub ky_grid: Vec<f64>,
}

impl HofstadterSpec {
    /// Flux `1/q`, width `6q`, `J = 1`, default `k_y` grid.
    pub fn new(q: usize) -> Self {
        Self { q, phi: 1.0 / q as f64, width: 6 * q, j_hop: 1.0, ky_grid: ky_grid(DEFAULT_N_KY) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.q < 2 {
            return Err(Error::Config(format!("q must be at least 2, got {}", self.q)));
        }
        if self.width < 3 * self.q {
            return Err(Error::Config(format!("width {} is below 3q = {}", self.width, 3 * self.q)));
        }
        if !(self.j_hop.is_finite() && self.j_hop > 0.0) || !self.phi.is_finite() {
            return Err(Error::Config("hopping must be positive and flux finite".into()));
        }
        if self.ky_grid.is_empty() {
            return Err(Error::Config("empty k_y grid".into()));
        }
        Ok(())
    }
}

/// `n` momenta uniformly covering [-π, π).
pub fn ky_grid(n: usize) -> Vec<f64> {
    (0..n).map(|j| -PI + 2.0 * PI * j as f64 / n as f64).collect()
}

fn strip_real(spec: &HofstadterSpec, ky: f64) -> DMatrix<f64> {
    let l = spec.width;
    let j = spec.j_hop;
    DMatrix::from_fn(l, l, |r, c| {
        if r == c {
            -2.0 * j * (2.0 * PI * spec.phi * r as f64 + ky).cos()
        } else if r.abs_diff(c) == 1 {
            -j
        } else {
            0.0
        }
    })
}

pub fn strip_hamiltonian(spec: &HofstadterSpec, ky: f64) -> CMatrix {
    strip_real(spec, ky).map(|x| C64::new(x, 0.0))
}

/// `η = Σ_x (2x/(L-1) - 1)|ψ(x)|²`: -1 on the first site, +1 on the last.
pub fn eta(psi: &[f64]) -> f64 {
    let l = psi.len();
    if l < 2 {
        return 0.0;
    }
    let norm: f64 = psi.iter().map(|a| a * a).sum();
    psi.iter()
        .enumerate()
        .map(|(x, a)| (2.0 * x as f64 / (l - 1) as f64 - 1.0) * a * a)
        .sum::<f64>()
        / norm
}

fn strip_eigen(spec: &HofstadterSpec, ky: f64) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(strip_real(spec, ky));
    let mut order: Vec<usize> = (0..spec.width).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(spec.width, spec.width, |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BandStructure {
    pub ky: Vec<f64>,
    /// `energies[i]` ascending at `ky[i]`.
    pub energies: Vec<Vec<f64>>,
    pub eta: Vec<Vec<f64>>,
}

pub fn band_structure(spec: &HofstadterSpec) -> Result<BandStructure> {
    spec.validate()?;
    let rows: Vec<(Vec<f64>, Vec<f64>)> = spec
        .ky_grid
        .par_iter()
        .map(|&ky| {
            let (vals, vecs) = strip_eigen(spec, ky);
            let etas = (0..spec.width).map(|c| eta(vecs.column(c).as_slice())).collect();
            (vals, etas)
        })
        .collect();
    let (energies, eta) = rows.into_iter().unzip();
    Ok(BandStructure { ky: spec.ky_grid.clone(), energies, eta })
}

/// Magnetic Bloch matrix of the infinite lattice (q sites per unit cell).
pub fn bulk_bloch_matrix(spec: &HofstadterSpec, kx: f64, ky: f64) -> CMatrix {
    let q = spec.q;
    let j = spec.j_hop;
    let mut m = CMatrix::zeros(q, q);
    for x in 0..q {
        m[(x, x)] += C64::new(-2.0 * j * (2.0 * PI * spec.phi * x as f64 + ky).cos(), 0.0);
        let y = (x + 1) % q;
        let phase = if y == 0 { C64::from_polar(1.0, kx) } else { C64::new(1.0, 0.0) };
        m[(y, x)] += -j * phase;
        m[(x, y)] += -j * phase.conj();
    }
    m
}

/// `(min, max)` of each of the q bulk bands.
pub fn bulk_band_edges(spec: &HofstadterSpec) -> Result<Vec<(f64, f64)>> {
    spec.validate()?;
    let q = spec.q;
    let ks: Vec<f64> = (0..BULK_GRID).map(|i| 2.0 * PI * i as f64 / BULK_GRID as f64).collect();
    let samples: Vec<Vec<f64>> = ks
        .par_iter()
        .flat_map_iter(|&kx| ks.iter().map(move |&ky| (kx, ky)))
        .map(|(kx, ky)| crate::linalg::hermitian_eigenvalues(&bulk_bloch_matrix(spec, kx, ky)))
        .collect::<Result<_>>()?;
    Ok((0..q)
        .map(|b| {
            samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| (lo.min(e[b]), hi.max(e[b])))
        })
        .collect())
}

/// `(bottom, top)` of the n-th gap counted from the lowest band (n ≥ 1).
pub fn gap_bounds(spec: &HofstadterSpec, n: usize) -> Result<(f64, f64)> {
    let edges = bulk_band_edges(spec)?;
    if n == 0 || n >= edges.len() {
        return Err(Error::Config(format!("gap index {n} out of range 1..{}", edges.len() - 1)));
    }
    Ok((edges[n - 1].1, edges[n].0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub k: f64,
    pub velocity: f64,
    pub eta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeModeTable {
    pub gap: usize,
    pub omega_c: f64,
    pub crossings: Vec<Crossing>,
}

fn count_below(spec: &HofstadterSpec, ky: f64, omega: f64) -> usize {
    let eig = SymmetricEigen::new(strip_real(spec, ky));
    eig.eigenvalues.iter().filter(|&&e| e < omega).count()
}

fn nearest_state(spec: &HofstadterSpec, ky: f64, omega: f64) -> (f64, f64) {
    let (vals, vecs) = strip_eigen(spec, ky);
    let i = (0..vals.len()).min_by(|&a, &b| (vals[a] - omega).abs().total_cmp(&(vals[b] - omega).abs())).unwrap();
    (vals[i], eta(vecs.column(i).as_slice()))
}

/// Branches crossing `omega_c` in the n-th gap, restricted to states with
/// `η < eta_cut`.
///
/// Crossings are bracketed where the number of strip eigenvalues below
/// `omega_c` changes between neighbouring `k_y` samples, then refined by
/// bisection. Velocities are centred differences of the crossing branch.
pub fn edge_modes_in_gap(spec: &HofstadterSpec, n: usize, omega_c: f64, eta_cut: f64) -> Result<EdgeModeTable> {
    let (lo, hi) = gap_bounds(spec, n)?;
    if !(omega_c > lo && omega_c < hi) {
        return Err(Error::NotInGap { gap: n, omega: omega_c, detail: format!("bulk gap spans ({lo}, {hi})") });
    }
    let ky = &spec.ky_grid;
    let m = ky.len();
    let counts: Vec<usize> = ky.par_iter().map(|&k| count_below(spec, k, omega_c)).collect();
    let mut brackets = Vec::new();
    for i in 0..m {
        let j = (i + 1) % m;
        if counts[i] != counts[j] {
            let a = ky[i];
            let b = if j == 0 { ky[0] + 2.0 * PI } else { ky[j] };
            brackets.push((a, b, counts[i]));
        }
    }
    let mut crossings: Vec<Crossing> = brackets
        .par_iter()
        .map(|&(mut a, mut b, ca)| {
            for _ in 0..60 {
                let mid = 0.5 * (a + b);
                if count_below(spec, mid, omega_c) == ca {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            let k = 0.5 * (a + b);
            let (_, eta_k) = nearest_state(spec, k, omega_c);
            let h = 1e-5;
            let (ep, _) = nearest_state(spec, k + h, omega_c);
            let (em, _) = nearest_state(spec, k - h, omega_c);
            let k = (k + PI).rem_euclid(2.0 * PI) - PI;
            Crossing { k, velocity: (ep - em) / (2.0 * h), eta: eta_k }
        })
        .filter(|c| c.eta < eta_cut)
        .collect();
    crossings.sort_by(|a, b| a.k.total_cmp(&b.k));
    Ok(EdgeModeTable { gap: n, omega_c, crossings })
}

/// Waveguide seen by a cavity at `omega_c` coupled with strength `g[ℓ]` to
/// each crossing (a single value is broadcast): `Γ_ℓ = g_ℓ²/|v_ℓ|`,
/// `k_ℓ` the crossing momentum. All velocities must share a sign, which sets
/// the chirality.
pub fn to_waveguide_spec(table: &EdgeModeTable, g: &[f64], l_kappa: f64) -> Result<WaveguideSpec> {
    let n = table.crossings.len();
    if n == 0 {
        return Err(Error::Config("no edge crossings to build a waveguide from".into()));
    }
    if g.len() != 1 && g.len() != n {
        return Err(Error::Config(format!("{} couplings given for {n} crossings", g.len())));
    }
    let right = table.crossings.iter().all(|c| c.velocity > 0.0);
    let left = table.crossings.iter().all(|c| c.velocity < 0.0);
    if !right && !left {
        return Err(Error::Config("crossings propagate in both directions: not a chiral set".into()));
    }
    let rates = table
        .crossings
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let gi = if g.len() == 1 { g[0] } else { g[i] };
            gi * gi / c.velocity.abs()
        })
        .collect();
    let ks = table.crossings.iter().map(|c| c.k).collect();
    let wg = WaveguideSpec::new(rates, ks, l_kappa)?;
    Ok(wg.with_chirality(if right { Chirality::Right } else { Chirality::Left }))
}

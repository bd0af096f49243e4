//! Bloch symbol, winding numbers and phase diagrams.
//!
//! For an infinite translation-invariant chain the normal dynamical matrix
//! acts on plane waves as the scalar
//!
//! ```text
//! h(k) = i(P - Γ)/2 - i Σ_ℓ Γ_ℓ z_ℓ / (1 - z_ℓ),   z_ℓ = exp(i(k_ℓ - k) - 1/l_κ)
//! ```
//!
//! (lattice spacing 1). The winding number counts how often `h` encircles
//! the origin. We orient the Brillouin zone so that
//! `W = -(1/2π) Δ_k arg h(k)` with `k` increasing, which makes `W` the number
//! of zeros of `h` inside the unit disk of `y = e^{-ik}`: always `0 ≤ W ≤ n_modes`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix2, Matrix4, Schur};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::couplings::{coupling_matrices, Chirality, LatticeSpec, WaveguideSpec};
use crate::dynmatrix::{self, DriveSpec};
use crate::error::{Error, Result};
use crate::linalg::C64;

/// Gap-closing tolerance for |h| or the smallest singular value of the
/// off-diagonal block.
pub const TOL_GAP: f64 = 1e-8;
/// Largest accepted distance of the raw winding integral from an integer.
pub const TOL_RESIDUAL: f64 = 1e-3;
pub const DEFAULT_N_GRID: usize = 4096;
pub const MAX_N_GRID: usize = 1 << 18;

#[derive(Clone, Debug, PartialEq)]
pub struct BlochSymbol {
    pub wg: WaveguideSpec,
    pub pump: f64,
}

impl BlochSymbol {
    pub fn new(wg: WaveguideSpec, pump: f64) -> Self {
        Self { wg, pump }
    }

    pub fn h(&self, k: f64) -> C64 {
        h_of_k(self, k)
    }
}

pub fn h_of_k(sym: &BlochSymbol, k: f64) -> C64 {
    let wg = &sym.wg;
    // Left-moving channels reach upstream sites: mirror k.
    let k = match wg.chirality {
        Chirality::Right => k,
        Chirality::Left => -k,
    };
    let decay = (-1.0 / wg.l_kappa).exp();
    let mut acc = C64::new(0.0, 0.0);
    for (&g, &kl) in wg.gamma_per_mode.iter().zip(&wg.k_res) {
        let z = C64::from_polar(decay, kl - k);
        acc += g * z / (C64::new(1.0, 0.0) - z);
    }
    // i(P-Γ)/2 - i acc
    C64::new(acc.im, 0.5 * (sym.pump - wg.gamma()) - acc.re)
}

/// Samples `(k, h(k))` on `n` points spanning (-π, π].
pub fn loop_trace(sym: &BlochSymbol, n: usize) -> Vec<(f64, C64)> {
    k_grid(n).into_iter().map(|k| (k, h_of_k(sym, k))).collect()
}

/// `n` uniformly spaced momenta in (-π, π].
pub fn k_grid(n: usize) -> Vec<f64> {
    (1..=n).map(|j| -PI + 2.0 * PI * j as f64 / n as f64).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindingResult {
    /// Rounded winding number; `None` at a gap closing.
    pub w: Option<i64>,
    pub raw: f64,
    pub residual: f64,
    pub gap_closed: bool,
    /// Grid size actually used after refinement.
    pub n_grid: usize,
    /// Smallest |h| (scalar) or smallest singular value of the off-diagonal
    /// block (matrix) seen on the grid.
    pub min_gap: f64,
    /// Matrix route only: raw winding of det of the off-diagonal block.
    pub det_raw: Option<f64>,
}

struct Sample {
    raw: f64,
    max_step: f64,
    min_gap: f64,
    det_raw: Option<f64>,
}

fn wrap(d: f64) -> f64 {
    let mut d = d % (2.0 * PI);
    if d > PI {
        d -= 2.0 * PI;
    } else if d <= -PI {
        d += 2.0 * PI;
    }
    d
}

/// `-(1/2π) Σ Δarg` over a closed loop, plus the largest single increment.
fn phase_winding(vals: &[C64]) -> (f64, f64) {
    let n = vals.len();
    let mut total = 0.0;
    let mut max_step: f64 = 0.0;
    for j in 0..n {
        let d = wrap(vals[(j + 1) % n].arg() - vals[j].arg());
        max_step = max_step.max(d.abs());
        total += d;
    }
    (-total / (2.0 * PI), max_step)
}

fn refine(n0: usize, mut eval: impl FnMut(usize) -> Sample) -> WindingResult {
    let mut n = n0.max(8);
    loop {
        let s = eval(n);
        let w = s.raw.round();
        let residual = (s.raw - w).abs();
        let resolved = residual <= TOL_RESIDUAL && s.max_step <= PI / 2.0;
        if s.min_gap < TOL_GAP || resolved || n >= MAX_N_GRID {
            let gap_closed = s.min_gap < TOL_GAP || !resolved;
            return WindingResult {
                w: (!gap_closed).then_some(w as i64),
                raw: s.raw,
                residual,
                gap_closed,
                n_grid: n,
                min_gap: s.min_gap,
                det_raw: s.det_raw,
            };
        }
        n *= 2;
    }
}

/// Phase winding of h(k). The grid is doubled (up to 2^18 points) until
/// the raw value is within 1e-3 of an integer and no phase step exceeds π/2.
pub fn winding_scalar(sym: &BlochSymbol, n_grid: usize) -> WindingResult {
    refine(n_grid, |n| {
        let vals: Vec<C64> = k_grid(n).into_iter().map(|k| h_of_k(sym, k)).collect();
        let (raw, max_step) = phase_winding(&vals);
        let min_gap = vals.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
        Sample { raw, max_step, min_gap, det_raw: None }
    })
}

/// Off-diagonal block `A(k)` of the doubled Bloch Hamiltonian with
/// parametric drive, acting on `(b_k, b†_{-k})`.
pub fn nambu_block(sym: &BlochSymbol, delta: f64, g: f64, k: f64) -> Matrix2<C64> {
    let hp = h_of_k(sym, k) + delta;
    let hm = h_of_k(sym, -k) + delta;
    let g = C64::new(g, 0.0);
    Matrix2::new(hp, g, -g, -hm.conj())
}

fn smallest_singular_2x2(a: &Matrix2<C64>) -> f64 {
    let f2: f64 = a.iter().map(|z| z.norm_sqr()).sum();
    let det = (a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)]).norm();
    let big = ((f2 + (f2 * f2 - 4.0 * det * det).max(0.0).sqrt()) / 2.0).sqrt();
    if big == 0.0 {
        0.0
    } else {
        det / big
    }
}

/// `(1/4πi) ∮ Tr(τ_z ℋ⁻¹ ∂_k ℋ) dk` for the doubled Bloch Hamiltonian
/// `ℋ = [[0, A], [A†, 0]]`, `τ_z = +1` on the upper block.
///
/// Without parametric drive `A = h + Δ` is a scalar and the 2×2 form is
/// used. With `g_s > 0`, `A` is the 2×2 particle-hole block, so at
/// `g_s → 0` the 4×4 value is twice the scalar one (both `b_k` and
/// `b†_{-k}` wind). `factor` multiplies `g_s` as in the real-space matrix.
pub fn winding_matrix(sym: &BlochSymbol, delta: f64, g_s: f64, factor: f64, n_grid: usize) -> WindingResult {
    if g_s == 0.0 {
        refine(n_grid, |n| {
            let ks = k_grid(n);
            let dk = 2.0 * PI / n as f64;
            let a: Vec<C64> = ks.iter().map(|&k| h_of_k(sym, k) + delta).collect();
            let hs: Vec<Matrix2<C64>> = a.iter().map(|&q| Matrix2::new(C64::new(0.0, 0.0), q, q.conj(), C64::new(0.0, 0.0))).collect();
            let tz = Matrix2::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(-1.0, 0.0));
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..n {
                let d = (hs[(j + 1) % n] - hs[(j + n - 1) % n]) / C64::new(2.0 * dk, 0.0);
                let inv = hs[j].try_inverse().unwrap_or_else(|| Matrix2::from_element(C64::new(f64::NAN, 0.0)));
                acc += (tz * inv * d).trace() * dk;
            }
            let raw = (acc / C64::new(0.0, 4.0 * PI)).re;
            let (det_raw, max_step) = phase_winding(&a);
            let min_gap = a.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
            Sample { raw, max_step, min_gap, det_raw: Some(det_raw) }
        })
    } else {
        let g = factor * g_s;
        refine(n_grid, |n| {
            let ks = k_grid(n);
            let dk = 2.0 * PI / n as f64;
            let blocks: Vec<Matrix2<C64>> = ks.iter().map(|&k| nambu_block(sym, delta, g, k)).collect();
            let full = |a: &Matrix2<C64>| {
                let mut m = Matrix4::<C64>::zeros();
                m.fixed_view_mut::<2, 2>(0, 2).copy_from(a);
                m.fixed_view_mut::<2, 2>(2, 0).copy_from(&a.adjoint());
                m
            };
            let hs: Vec<Matrix4<C64>> = blocks.iter().map(full).collect();
            let tz = Matrix4::from_diagonal(&nalgebra::Vector4::new(
                C64::new(1.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(-1.0, 0.0),
                C64::new(-1.0, 0.0),
            ));
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..n {
                let d = (hs[(j + 1) % n] - hs[(j + n - 1) % n]) / C64::new(2.0 * dk, 0.0);
                let inv = hs[j].try_inverse().unwrap_or_else(|| Matrix4::from_element(C64::new(f64::NAN, 0.0)));
                acc += (tz * inv * d).trace() * dk;
            }
            let raw = (acc / C64::new(0.0, 4.0 * PI)).re;
            let dets: Vec<C64> = blocks.iter().map(|a| a.determinant()).collect();
            let (det_raw, max_step) = phase_winding(&dets);
            let min_gap = blocks.iter().map(smallest_singular_2x2).fold(f64::INFINITY, f64::min);
            Sample { raw, max_step, min_gap, det_raw: Some(det_raw) }
        })
    }
}

/// Counts zeros of h inside the unit disk of `y = e^{-ik}`.
///
/// Clearing the denominators of h gives the polynomial
/// `F(y) = (P-Γ)/2 Π_m (1 - c_m y) - Σ_ℓ Γ_ℓ c_ℓ y Π_{m≠ℓ} (1 - c_m y)` with
/// `c_ℓ = e^{i k_ℓ - 1/l_κ}`. Its degree is at most `n_modes`, which bounds W.
/// Roots come from companion-matrix eigenvalues.
pub fn winding_roots(sym: &BlochSymbol) -> Result<usize> {
    let wg = &sym.wg;
    let decay = (-1.0 / wg.l_kappa).exp();
    let cs: Vec<C64> = wg
        .k_res
        .iter()
        .map(|&k| {
            let k = if wg.chirality == Chirality::Left { -k } else { k };
            C64::from_polar(decay, k)
        })
        .collect();
    let n = cs.len();
    // coefficient vectors, index = power of y
    let mul = |p: &[C64], c: C64| -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); p.len() + 1];
        for (i, &a) in p.iter().enumerate() {
            out[i] += a;
            out[i + 1] -= a * c;
        }
        out
    };
    let mut poly = vec![C64::new(0.0, 0.0); n + 1];
    let mut all = vec![C64::new(1.0, 0.0)];
    for &c in &cs {
        all = mul(&all, c);
    }
    for (i, a) in all.iter().enumerate() {
        poly[i] += a * (0.5 * (sym.pump - wg.gamma()));
    }
    for l in 0..n {
        let mut p = vec![C64::new(0.0, 0.0), cs[l] * wg.gamma_per_mode[l]];
        for (m, &c) in cs.iter().enumerate() {
            if m != l {
                p = mul(&p, c);
            }
        }
        for (i, a) in p.iter().enumerate() {
            poly[i] -= a;
        }
    }
    let scale = poly.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::Singular("h vanishes identically".into()));
    }
    while poly.len() > 1 && poly.last().unwrap().norm() <= 1e-14 * scale {
        poly.pop();
    }
    let deg = poly.len() - 1;
    if deg == 0 {
        return Ok(0);
    }
    let lead = poly[deg];
    let comp = DMatrix::from_fn(deg, deg, |r, c| {
        if r == 0 {
            -poly[deg - 1 - c] / lead
        } else if r == c + 1 {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let roots = Schur::try_new(comp, 1e-15, 10_000)
        .and_then(|s| s.eigenvalues())
        .ok_or_else(|| Error::Numerical { msg: "companion eigenvalues did not converge".into(), dump: None })?;
    Ok(roots.iter().filter(|z| z.norm() < 1.0).count())
}

/// Parameters a phase-diagram axis can sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    LKappa,
    Pump,
    GS,
    Delta,
    /// Shifts mode ℓ to `k_0 + ℓ·dk`.
    Dk,
}

impl Param {
    pub fn name(self) -> &'static str {
        match self {
            Param::LKappa => "l_kappa",
            Param::Pump => "pump",
            Param::GS => "g_s",
            Param::Delta => "delta",
            Param::Dk => "dk",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub param: Param,
    pub values: Vec<f64>,
}

impl Axis {
    /// `n` evenly spaced values from `min` to `max` inclusive.
    pub fn linspace(param: Param, min: f64, max: f64, n: usize) -> Self {
        let values = match n {
            0 => vec![],
            1 => vec![min],
            _ => (0..n).map(|i| min + (max - min) * i as f64 / (n - 1) as f64).collect(),
        };
        Self { param, values }
    }
}

/// Fixed parameters of a phase diagram; swept axes override them per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSpec {
    pub wg: WaveguideSpec,
    pub pump: f64,
    pub g_s: f64,
    pub delta: f64,
    pub parametric_factor: f64,
}

impl PointSpec {
    pub fn set(&mut self, p: Param, v: f64) {
        match p {
            Param::LKappa => self.wg.l_kappa = v,
            Param::Pump => self.pump = v,
            Param::GS => self.g_s = v,
            Param::Delta => self.delta = v,
            Param::Dk => {
                let k0 = self.wg.k_res[0];
                for (l, k) in self.wg.k_res.iter_mut().enumerate() {
                    *k = k0 + l as f64 * v;
                }
            }
        }
    }

    pub fn drive(&self) -> DriveSpec {
        DriveSpec {
            pump: self.pump,
            omega: Vec::new(),
            g_s: self.g_s,
            delta: self.delta,
            parametric_factor: self.parametric_factor,
        }
    }

    pub fn symbol(&self) -> BlochSymbol {
        BlochSymbol::new(self.wg.clone(), self.pump)
    }

    /// Scalar winding without parametric drive or detuning, matrix winding
    /// otherwise.
    pub fn winding(&self, n_grid: usize) -> WindingResult {
        let sym = self.symbol();
        if self.g_s == 0.0 && self.delta == 0.0 {
            winding_scalar(&sym, n_grid)
        } else {
            winding_matrix(&sym, self.delta, self.g_s, self.parametric_factor, n_grid)
        }
    }

    /// Stability of the open chain with `n_sites` cavities.
    pub fn stability(&self, n_sites: usize) -> Result<dynmatrix::Stability> {
        let cm = coupling_matrices(&self.wg, &LatticeSpec::uniform(n_sites))?;
        let dm = dynmatrix::build(&cm, &self.drive())?;
        dynmatrix::stability(&dm)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    /// Swept parameter values, in axis order.
    pub params: Vec<f64>,
    pub winding: WindingResult,
    pub stable: bool,
    pub max_im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagramGrid {
    pub axes: Vec<Axis>,
    /// Row-major over the axes (last axis fastest).
    pub cells: Vec<Cell>,
}

impl PhaseDiagramGrid {
    /// Distinct defined winding numbers, optionally restricted to stable cells.
    pub fn windings(&self, stable_only: bool) -> Vec<i64> {
        let mut w: Vec<i64> = self
            .cells
            .iter()
            .filter(|c| !stable_only || c.stable)
            .filter_map(|c| c.winding.w)
            .collect();
        w.sort_unstable();
        w.dedup();
        w
    }
}

/// Parameter tuples of the grid spanned by `axes`, last axis fastest. No
/// axes gives a single empty tuple.
pub fn grid_points(axes: &[Axis]) -> Vec<Vec<f64>> {
    let mut pts = vec![vec![]];
    for ax in axes {
        pts = pts
            .into_iter()
            .flat_map(|p| {
                ax.values.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    pts
}

pub fn phase_diagram(template: &PointSpec, axes: &[Axis], n_grid: usize, n_sites: usize) -> Result<PhaseDiagramGrid> {
    let pts = grid_points(axes);
    let cells = pts
        .into_par_iter()
        .map(|params| {
            let mut spec = template.clone();
            for (ax, &v) in axes.iter().zip(&params) {
                spec.set(ax.param, v);
            }
            spec.wg.validate()?;
            spec.drive().validate()?;
            let winding = spec.winding(n_grid);
            let st = spec.stability(n_sites)?;
            Ok(Cell { params, winding, stable: st.stable, max_im: st.max_im })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PhaseDiagramGrid { axes: axes.to_vec(), cells })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(k: Vec<f64>, l: f64, p: f64) -> BlochSymbol {
        BlochSymbol::new(WaveguideSpec::equal_rates(k, l, 1.0).unwrap(), p)
    }

    #[test]
    fn matches_real_space_sum() {
        let s = sym(vec![0.0, PI / 2.0, -PI / 3.0], 3.0, 0.9);
        for &k in &[-2.0, -0.3, 0.0, 1.1, 3.0] {
            let mut direct = C64::new(0.0, 0.5 * (0.9 - 1.0));
            for (g, kl) in s.wg.gamma_per_mode.iter().zip(&s.wg.k_res) {
                for n in 1..400 {
                    let nf = n as f64;
                    direct -= C64::new(0.0, 1.0) * g * C64::from_polar((-nf / 3.0).exp(), (kl - k) * nf);
                }
            }
            assert!((direct - h_of_k(&s, k)).norm() < 1e-13);
        }
    }

    #[test]
    fn single_mode_pumped_winds_once() {
        let w = winding_scalar(&sym(vec![0.0], 10.0, 0.5), DEFAULT_N_GRID);
        assert_eq!(w.w, Some(1));
        let w = winding_scalar(&sym(vec![0.0], 10.0, 0.0), DEFAULT_N_GRID);
        assert_eq!(w.w, Some(0));
    }

    #[test]
    fn matrix_route_agrees_without_parametric_drive() {
        let s = sym(vec![0.0, 0.9 * PI], 3.0, 0.9);
        let a = winding_scalar(&s, DEFAULT_N_GRID);
        let b = winding_matrix(&s, 0.0, 0.0, 1.0, DEFAULT_N_GRID);
        assert_eq!(a.w, Some(2));
        assert_eq!(b.w, Some(2));
        assert_eq!(b.det_raw.unwrap().round(), 2.0);
    }

    #[test]
    fn parametric_phase_has_unit_winding() {
        let s = sym(vec![0.0], 10.0, 0.0);
        let w = winding_matrix(&s, 1.0, 1.1, 1.0, DEFAULT_N_GRID);
        assert_eq!(w.w, Some(1));
        assert_eq!(w.det_raw.unwrap().round(), 1.0);
        let w = winding_matrix(&s, 1.0, 0.5, 1.0, DEFAULT_N_GRID);
        assert_eq!(w.w, Some(0));
    }

    #[test]
    fn root_count_agrees() {
        for (k, l, p) in [(vec![0.0], 10.0, 0.5), (vec![0.0, 0.9 * PI], 3.0, 0.9), (vec![0.0, PI / 2.0], 8.0, 0.9)] {
            let s = sym(k, l, p);
            assert_eq!(winding_roots(&s).unwrap() as i64, winding_scalar(&s, DEFAULT_N_GRID).w.unwrap());
        }
    }

    #[test]
    fn gap_closing_is_flagged() {
        // single mode, P = Γ puts h(k_0 + π) ... search for a closing along P
        let s = sym(vec![0.0], 1e-3, 1.0);
        // a/l_κ = 1000: h ≈ i(P-Γ)/2 = 0 everywhere
        let w = winding_scalar(&s, 64);
        assert!(w.gap_closed);
        assert!(w.w.is_none());
    }

    #[test]
    fn grid_points_order() {
        let axes = [Axis { param: Param::Pump, values: vec![0.0, 1.0] }, Axis { param: Param::LKappa, values: vec![2.0, 3.0, 4.0] }];
        let pts = grid_points(&axes);
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[1], vec![0.0, 3.0]);
        assert_eq!(grid_points(&[]), vec![Vec::<f64>::new()]);
    }
}

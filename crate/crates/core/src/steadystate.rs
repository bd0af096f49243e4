//! Steady states, Green's functions and momentum-space profiles.

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::couplings::Chirality;
use crate::dynmatrix::{self, DynamicalMatrix, SvdTriple};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, C64};

/// Singular values below this (relative to the largest) make the generic
/// LU route refuse to solve.
const TOL_SINGULAR: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// `b = ℍ⁻¹Ω` by a linear solve.
    DirectSolve,
    /// `b = Σ_n v_n (u_n†Ω) / s_n` over all singular triplets.
    SvdSum,
    /// The same sum restricted to the `winding` smallest singular values.
    SvdEdgeOnly { winding: usize },
}

#[derive(Clone, Debug)]
pub struct SteadyState {
    /// Length N (normal) or 2N (Bogoliubov, `(⟨b⟩, ⟨b†⟩)`).
    pub b_ss: CVector,
    pub n_sites: usize,
    pub method: Method,
    /// `‖ℍb - Ω‖ / ‖Ω‖`.
    pub residual: f64,
    /// `‖ℍb - Ω‖ / (‖ℍ‖‖b‖ + ‖Ω‖)`; stays at rounding level even when the
    /// amplification makes `residual` meaningless.
    pub backward_error: f64,
    /// The generator has gain: the steady state exists only formally.
    pub unstable: bool,
}

impl SteadyState {
    /// The `⟨b⟩` part.
    pub fn coherences(&self) -> CVector {
        self.b_ss.rows(0, self.n_sites).into_owned()
    }
}

fn check_generic_conditioning(m: &CMatrix) -> Result<()> {
    if linalg::block_triangular(m).is_some() {
        return Ok(());
    }
    let s = linalg::svd(m)?.s;
    let (max, min) = (s[0], *s.last().unwrap());
    if min < TOL_SINGULAR * max {
        return Err(Error::Singular(format!("at threshold/transition: smallest singular value {min:e}")));
    }
    Ok(())
}

/// Steady state of `d⟨b⟩/dt = -iℍ⟨b⟩ + iΩ` for the site drive `omega`.
pub fn steady_state(dm: &DynamicalMatrix, omega: &[C64], method: Method) -> Result<SteadyState> {
    let rhs = dm.drive_vector(omega)?;
    let b_ss = match method {
        Method::DirectSolve => {
            check_generic_conditioning(&dm.m)?;
            linalg::solve(&dm.m, &rhs)?
        }
        Method::SvdSum => svd_sum(&dynmatrix::singular_decomposition(dm, 0)?, &rhs, None)?,
        Method::SvdEdgeOnly { winding } => {
            let t = dynmatrix::singular_decomposition(dm, winding)?;
            svd_sum(&t, &rhs, Some(&t.edge_set))?
        }
    };
    if b_ss.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Singular("at threshold/transition: non-finite steady state".into()));
    }
    let r = (&dm.m * &b_ss - &rhs).norm();
    let residual = if rhs.norm() > 0.0 { r / rhs.norm() } else { r };
    let backward_error = r / (dm.m.norm() * b_ss.norm() + rhs.norm()).max(f64::MIN_POSITIVE);
    let unstable = !dynmatrix::stability(dm)?.stable;
    Ok(SteadyState { b_ss, n_sites: dm.n_sites, method, residual, backward_error, unstable })
}

/// `Σ_n v_n (u_n† rhs) / s_n`, optionally over a subset of indices.
pub fn svd_sum(t: &SvdTriple, rhs: &CVector, subset: Option<&[usize]>) -> Result<CVector> {
    let all: Vec<usize> = (0..t.s.len()).collect();
    let idx = subset.unwrap_or(&all);
    let mut out = CVector::zeros(t.v.nrows());
    for &n in idx {
        if t.s[n] == 0.0 {
            return Err(Error::Singular("at threshold/transition: zero singular value".into()));
        }
        let coef = t.u.column(n).dotc(rhs) / t.s[n];
        out.axpy(coef, &t.v.column(n), C64::new(1.0, 0.0));
    }
    Ok(out)
}

/// `G(ω) = (iω - iℍ)⁻¹`.
pub fn greens_function(dm: &DynamicalMatrix, omega: f64) -> Result<CMatrix> {
    let n = dm.dim();
    let i = linalg::I;
    let a = CMatrix::identity(n, n) * (i * omega) - dm.m.map(|z| i * z);
    check_generic_conditioning(&a)?;
    if let Some(bt) = linalg::block_triangular(&a) {
        let l = bt.permute(&a);
        let scale = l.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for r0 in (0..n).step_by(bt.block) {
            let d = l.view((r0, r0), (bt.block, bt.block)).determinant();
            if d.norm() <= TOL_SINGULAR * scale.powi(bt.block as i32) {
                return Err(Error::Singular(format!("ω = {omega} hits an eigenvalue of the generator")));
            }
        }
    }
    linalg::inverse(&a)
}

/// Drive of strength `amplitude` on the input (upstream) edge: site 0 for
/// right-moving channels, site N-1 for left-moving ones. Amplified signal
/// accumulates toward the opposite edge.
pub fn edge_drive(n_sites: usize, chirality: Chirality, amplitude: C64) -> Vec<C64> {
    let mut omega = vec![C64::new(0.0, 0.0); n_sites];
    if n_sites > 0 {
        let i = match chirality {
            Chirality::Right => 0,
            Chirality::Left => n_sites - 1,
        };
        omega[i] = amplitude;
    }
    omega
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub k: f64,
    pub height: f64,
    /// Full width at half maximum, in units of 1/a.
    pub width: f64,
}

#[derive(Clone, Debug)]
pub struct MomentumProfile {
    /// Ascending momenta in (-π, π].
    pub k_grid: Vec<f64>,
    pub bk: Vec<C64>,
    pub peaks: Vec<Peak>,
}

impl MomentumProfile {
    pub fn magnitudes(&self) -> Vec<f64> {
        self.bk.iter().map(|z| z.norm()).collect()
    }
}

pub const DEFAULT_PEAK_RATIO: f64 = 0.1;

/// `b_k = N^{-1/2} Σ_r e^{-ikr} b_r` over site indices `r = 0..N-1`.
///
/// `padding` > 1 zero-pads to `padding·N` points for smoother curves; the
/// normalisation stays `N^{-1/2}`, so Parseval holds only for `padding = 1`.
pub fn momentum_profile(b: &[C64], padding: usize, min_height_ratio: f64) -> MomentumProfile {
    let n = b.len();
    let len = n * padding.max(1);
    let mut buf: Vec<C64> = b.to_vec();
    buf.resize(len, C64::new(0.0, 0.0));
    if len > 0 {
        FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    }
    let norm = 1.0 / (n.max(1) as f64).sqrt();
    // reorder so that k ascends over (-π, π]
    let first = len / 2 + 1;
    let mut k_grid = Vec::with_capacity(len);
    let mut bk = Vec::with_capacity(len);
    for j in 0..len {
        let m = (first + j) % len;
        let mm = if m >= first { m as f64 - len as f64 } else { m as f64 };
        k_grid.push(2.0 * std::f64::consts::PI * mm / len as f64);
        bk.push(buf[m] * norm);
    }
    let mags: Vec<f64> = bk.iter().map(|z| z.norm()).collect();
    let peaks = detect_peaks(&k_grid, &mags, min_height_ratio);
    MomentumProfile { k_grid, bk, peaks }
}

/// Momentum profile of the `⟨b⟩` part of a steady state.
pub fn momentum_coherences(ss: &SteadyState) -> MomentumProfile {
    momentum_profile(ss.coherences().as_slice(), 1, DEFAULT_PEAK_RATIO)
}

/// Strict local maxima on the periodic grid that reach
/// `min_height_ratio · max`, with linearly interpolated half-maximum widths.
pub fn detect_peaks(k_grid: &[f64], values: &[f64], min_height_ratio: f64) -> Vec<Peak> {
    let n = values.len();
    if n < 3 {
        return Vec::new();
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let dk = 2.0 * std::f64::consts::PI / n as f64;
    let mut out = Vec::new();
    for i in 0..n {
        let (l, r) = (values[(i + n - 1) % n], values[(i + 1) % n]);
        let v = values[i];
        if !(v > l && v > r && v >= min_height_ratio * max) {
            continue;
        }
        let half = v / 2.0;
        let side = |step: isize| -> f64 {
            let mut prev = v;
            for s in 1..n {
                let j = (i as isize + step * s as isize).rem_euclid(n as isize) as usize;
                let cur = values[j];
                if cur <= half {
                    return (s as f64 - 1.0 + (prev - half) / (prev - cur)) * dk;
                }
                prev = cur;
            }
            std::f64::consts::PI
        };
        out.push(Peak { k: k_grid[i], height: v, width: (side(-1) + side(1)).min(2.0 * std::f64::consts::PI) });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::couplings::{coupling_matrices, LatticeSpec, WaveguideSpec};
    use crate::dynmatrix::{build_dynamical_matrix, DriveSpec};
    use std::f64::consts::PI;

    fn dm(k: Vec<f64>, l: f64, p: f64, n: usize) -> DynamicalMatrix {
        let cm = coupling_matrices(&WaveguideSpec::equal_rates(k, l, 1.0).unwrap(), &LatticeSpec::uniform(n)).unwrap();
        build_dynamical_matrix(&cm, &DriveSpec::pump(p)).unwrap()
    }

    #[test]
    fn decoupled_sites_scale_the_drive() {
        let d = dm(vec![0.0], 1e-3, 0.0, 4);
        let omega = vec![C64::new(0.3, -0.1); 4];
        let ss = steady_state(&d, &omega, Method::DirectSolve).unwrap();
        for z in ss.b_ss.iter() {
            assert!((z - omega[0] * C64::new(0.0, 2.0)).norm() < 1e-14);
        }
        assert!(ss.residual < 1e-12);
    }

    #[test]
    fn threshold_is_singular() {
        let d = dm(vec![0.0], 2.0, 1.0, 5);
        let omega = vec![C64::new(1.0, 0.0); 5];
        assert!(matches!(steady_state(&d, &omega, Method::DirectSolve), Err(Error::Singular(_))));
        assert!(greens_function(&d, 0.0).is_err());
    }

    #[test]
    fn greens_inverts_the_generator() {
        let d = dm(vec![0.0, 1.0], 4.0, 0.3, 12);
        let g = greens_function(&d, 0.0).unwrap();
        let prod = &g * d.m.map(|z| linalg::I * z);
        assert!((prod + CMatrix::identity(12, 12)).norm() < 1e-10);
        for i in 0..12 {
            for j in i + 1..12 {
                assert_eq!(g[(i, j)], C64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn constant_profile_has_no_peaks() {
        let k: Vec<f64> = (0..16).map(|i| i as f64).collect();
        assert!(detect_peaks(&k, &[1.0; 16], 0.1).is_empty());
    }

    #[test]
    fn single_exponential_peaks_at_phase() {
        let n = 64;
        let phi = 2.0 * PI * 5.0 / n as f64;
        let b: Vec<C64> = (0..n).map(|r| C64::from_polar((-(r as f64) / 10.0).exp(), phi * r as f64)).collect();
        let p = momentum_profile(&b, 1, 0.1);
        assert_eq!(p.peaks.len(), 1);
        assert!((p.peaks[0].k - phi).abs() < 1e-12);
        let e_r: f64 = b.iter().map(|z| z.norm_sqr()).sum();
        let e_k: f64 = p.bk.iter().map(|z| z.norm_sqr()).sum();
        assert!((e_r - e_k).abs() < 1e-12 * e_r);
    }

    #[test]
    fn grid_is_ascending_half_open() {
        let p = momentum_profile(&[C64::new(1.0, 0.0); 6], 1, 0.1);
        assert!(p.k_grid.windows(2).all(|w| w[1] > w[0]));
        assert!(p.k_grid[0] > -PI && (p.k_grid[5] - PI).abs() < 1e-15);
        let p = momentum_profile(&[C64::new(1.0, 0.0); 7], 1, 0.1);
        assert!(p.k_grid[0] > -PI && p.k_grid[6] < PI);
    }
}

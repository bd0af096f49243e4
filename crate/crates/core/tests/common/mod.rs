//! Independent reference routines shared by the integration tests. None of
//! them call into the library's linear algebra.
#![allow(dead_code)]

use rand::Rng;
use topamp::{CMatrix, CVector, WaveguideSpec, C64};

/// Singular values by one-sided (Hestenes) Jacobi rotations, descending.
pub fn jacobi_singular_values(a: &CMatrix) -> Vec<f64> {
    let (m, n) = a.shape();
    let mut cols: Vec<Vec<C64>> = (0..n).map(|j| (0..m).map(|i| a[(i, j)]).collect()).collect();
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = cols[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = cols[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma: C64 = cols[p].iter().zip(&cols[q]).map(|(x, y)| x.conj() * y).sum();
                let g = gamma.norm();
                if g <= 1e-15 * (alpha * beta).sqrt() || g == 0.0 {
                    continue;
                }
                rotated = true;
                // rotate column q's phase so that the overlap is real
                let ph = (gamma / g).conj();
                for y in cols[q].iter_mut() {
                    *y *= ph;
                }
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let (x, y) = (cols[p][i], cols[q][i]);
                    cols[p][i] = x * c - y * s;
                    cols[q][i] = x * s + y * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut s: Vec<f64> = cols.iter().map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s.truncate(m.min(n));
    s
}

/// Classical fourth-order Runge-Kutta for `db/dt = -i M b + i rhs`, with a
/// fixed step no larger than `h`, sampled at `times`.
pub fn rk4(m: &CMatrix, rhs: &CVector, b0: &CVector, times: &[f64], h: f64) -> Vec<CVector> {
    let f = |b: &CVector| -> CVector {
        let mut out = CVector::zeros(b.len());
        for i in 0..b.len() {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..b.len() {
                acc += m[(i, j)] * b[j];
            }
            out[i] = C64::new(0.0, -1.0) * acc + C64::new(0.0, 1.0) * rhs[i];
        }
        out
    };
    let mut out = Vec::with_capacity(times.len());
    let mut b = b0.clone();
    let mut t = 0.0;
    for &target in times {
        let span = target - t;
        let steps = (span / h).ceil().max(0.0) as usize;
        if steps > 0 {
            let dt = span / steps as f64;
            let half = C64::new(dt / 2.0, 0.0);
            let full = C64::new(dt, 0.0);
            let sixth = C64::new(dt / 6.0, 0.0);
            for _ in 0..steps {
                let k1 = f(&b);
                let k2 = f(&(&b + &k1 * half));
                let k3 = f(&(&b + &k2 * half));
                let k4 = f(&(&b + &k3 * full));
                b += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * sixth;
            }
        }
        t = target;
        out.push(b.clone());
    }
    out
}

pub fn random_complex_matrix<R: Rng>(rng: &mut R, r: usize, c: usize) -> CMatrix {
    CMatrix::from_fn(r, c, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

pub fn random_complex_vector<R: Rng>(rng: &mut R, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

/// Waveguide with `n` modes, rates drawn from [0.1, 1] and rescaled to a
/// total of 1, momenta in [-π, π), propagation length in `l_range`.
pub fn random_waveguide<R: Rng>(rng: &mut R, n: usize, l_range: (f64, f64)) -> WaveguideSpec {
    let mut g: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = g.iter().sum();
    g.iter_mut().for_each(|x| *x /= total);
    let k = (0..n).map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)).collect();
    WaveguideSpec::new(g, k, rng.random_range(l_range.0..l_range.1)).unwrap()
}

/// Ring of `n_sites` cavities: every pair couples through the downstream
/// distance `d = (i - j) mod N`, summed over `images` windings of the ring.
pub fn circulant_matrix(wg: &WaveguideSpec, pump: f64, n_sites: usize, images: usize) -> CMatrix {
    let coupling = |dist: f64| -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for (g, kl) in wg.gamma_per_mode.iter().zip(&wg.k_res) {
            s += C64::from_polar(*g * (-dist / wg.l_kappa).exp(), kl * dist);
        }
        C64::new(0.0, -1.0) * s
    };
    CMatrix::from_fn(n_sites, n_sites, |i, j| {
        let d = (i + n_sites - j) % n_sites;
        let mut z = if d == 0 { C64::new(0.0, 0.5 * (pump - wg.gamma())) } else { coupling(d as f64) };
        for img in 1..=images {
            z += coupling((d + img * n_sites) as f64);
        }
        z
    })
}

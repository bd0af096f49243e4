//! Dense complex linear algebra used throughout the crate.
//!
//! Most matrices here are non-normal and, with open boundaries, (block)
//! triangular after a fixed permutation. Their smallest singular values can
//! be exponentially small in the system size, far below what a plain SVD
//! resolves relative to the largest one, and their eigenvalues are highly
//! defective. Both problems are handled by detecting the structure and
//! working with exact block substitution instead of generic iterations.

use std::io::Write;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

const EPS: f64 = 1e-15;
const MAX_ITER: usize = 100_000;

/// A permutation `perm` (new index -> old index) and block size such that
/// `m[perm[a], perm[b]]` is block lower triangular.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockTriangular {
    pub perm: Vec<usize>,
    pub block: usize,
}

impl BlockTriangular {
    pub fn permute(&self, m: &CMatrix) -> CMatrix {
        let n = self.perm.len();
        CMatrix::from_fn(n, n, |a, b| m[(self.perm[a], self.perm[b])])
    }

    pub fn unpermute(&self, m: &CMatrix) -> CMatrix {
        let n = self.perm.len();
        let mut out = CMatrix::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                out[(self.perm[a], self.perm[b])] = m[(a, b)];
            }
        }
        out
    }
}

fn is_block_lower(m: &CMatrix, perm: &[usize], block: usize) -> bool {
    let n = perm.len();
    (0..n).all(|a| ((a / block + 1) * block..n).all(|b| m[(perm[a], perm[b])] == C64::new(0.0, 0.0)))
}

/// Detects lower/upper triangular matrices and the interleaved 2x2 block
/// triangular shape of particle-hole doubled matrices. Zeros are tested
/// exactly.
pub fn block_triangular(m: &CMatrix) -> Option<BlockTriangular> {
    let n = m.nrows();
    if n != m.ncols() || n == 0 {
        return None;
    }
    let fwd: Vec<usize> = (0..n).collect();
    let rev: Vec<usize> = (0..n).rev().collect();
    let mut candidates = vec![(fwd, 1), (rev, 1)];
    if n.is_multiple_of(2) {
        let h = n / 2;
        let inter: Vec<usize> = (0..h).flat_map(|i| [i, i + h]).collect();
        let inter_rev: Vec<usize> = (0..h).rev().flat_map(|i| [i, i + h]).collect();
        candidates.push((inter, 2));
        candidates.push((inter_rev, 2));
    }
    candidates
        .into_iter()
        .find(|(p, b)| is_block_lower(m, p, *b))
        .map(|(perm, block)| BlockTriangular { perm, block })
}

fn small_inverse(d: &CMatrix) -> Option<CMatrix> {
    match d.nrows() {
        1 => {
            let x = d[(0, 0)];
            (x.norm() > 0.0).then(|| CMatrix::from_element(1, 1, x.inv()))
        }
        2 => {
            let det = d[(0, 0)] * d[(1, 1)] - d[(0, 1)] * d[(1, 0)];
            if det.norm() == 0.0 {
                return None;
            }
            let r = det.inv();
            Some(CMatrix::from_row_slice(
                2,
                2,
                &[d[(1, 1)] * r, -d[(0, 1)] * r, -d[(1, 0)] * r, d[(0, 0)] * r],
            ))
        }
        _ => d.clone().try_inverse(),
    }
}

/// Solves `l x = rhs` for block lower triangular `l` by block forward
/// substitution.
fn block_forward(l: &CMatrix, block: usize, rhs: &CMatrix) -> Result<CMatrix> {
    let n = l.nrows();
    let nb = n / block;
    let mut x = rhs.clone();
    for bi in 0..nb {
        let r0 = bi * block;
        let d = l.view((r0, r0), (block, block)).into_owned();
        let dinv = small_inverse(&d).ok_or_else(|| Error::Singular(format!("zero pivot block at row {r0}")))?;
        let mut acc = x.rows(r0, block).into_owned();
        if r0 > 0 {
            acc -= l.view((r0, 0), (block, r0)) * x.rows(0, r0);
        }
        x.rows_mut(r0, block).copy_from(&(dinv * acc));
    }
    Ok(x)
}

/// Solves `m x = rhs` (several right-hand sides), using exact structure when
/// available and LU otherwise.
pub fn solve_many(m: &CMatrix, rhs: &CMatrix) -> Result<CMatrix> {
    if m.nrows() != m.ncols() || m.nrows() != rhs.nrows() {
        return Err(Error::Dimension(format!(
            "cannot solve {}x{} system with {} rows on the right",
            m.nrows(),
            m.ncols(),
            rhs.nrows()
        )));
    }
    if let Some(bt) = block_triangular(m) {
        let l = bt.permute(m);
        let n = rhs.nrows();
        let prhs = CMatrix::from_fn(n, rhs.ncols(), |a, c| rhs[(bt.perm[a], c)]);
        let px = block_forward(&l, bt.block, &prhs)?;
        let mut x = CMatrix::zeros(n, rhs.ncols());
        for a in 0..n {
            x.set_row(bt.perm[a], &px.row(a));
        }
        return Ok(x);
    }
    m.clone()
        .lu()
        .solve(rhs)
        .ok_or_else(|| Error::Singular("LU factorisation hit a zero pivot".into()))
}

pub fn solve(m: &CMatrix, b: &CVector) -> Result<CVector> {
    let rhs = CMatrix::from_column_slice(b.len(), 1, b.as_slice());
    Ok(solve_many(m, &rhs)?.column(0).into_owned())
}

pub fn inverse(m: &CMatrix) -> Result<CMatrix> {
    solve_many(m, &CMatrix::identity(m.nrows(), m.ncols()))
}

/// Complex eigenvalues. Block triangular matrices are read off their
/// diagonal blocks; everything else goes through a complex Schur form.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<C64>> {
    if let Some(bt) = block_triangular(m) {
        let l = bt.permute(m);
        let mut out = Vec::with_capacity(m.nrows());
        for r0 in (0..m.nrows()).step_by(bt.block) {
            if bt.block == 1 {
                out.push(l[(r0, r0)]);
            } else {
                let (a, b, c, d) = (l[(r0, r0)], l[(r0, r0 + 1)], l[(r0 + 1, r0)], l[(r0 + 1, r0 + 1)]);
                let half_tr = (a + d) * 0.5;
                let disc = ((a - d) * 0.5 * ((a - d) * 0.5) + b * c).sqrt();
                out.push(half_tr + disc);
                out.push(half_tr - disc);
            }
        }
        return Ok(out);
    }
    Schur::try_new(m.clone(), EPS, MAX_ITER)
        .and_then(|s| s.eigenvalues())
        .map(|v| v.iter().copied().collect())
        .ok_or_else(|| Error::Numerical {
            msg: "complex Schur iteration did not converge".into(),
            dump: dump_matrix(m, "eig").ok(),
        })
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    let (vals, _) = hermitian_eigen(m, false)?;
    Ok(vals)
}

/// Ascending eigenvalues and (optionally) the matching unit eigenvectors as
/// columns.
pub fn hermitian_eigen(m: &CMatrix, vectors: bool) -> Result<(Vec<f64>, Option<CMatrix>)> {
    let eig = SymmetricEigen::try_new(m.clone(), EPS, MAX_ITER).ok_or_else(|| Error::Numerical {
        msg: "Hermitian eigensolver did not converge".into(),
        dump: dump_matrix(m, "heig").ok(),
    })?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = vectors.then(|| {
        let n = m.nrows();
        CMatrix::from_fn(n, order.len(), |r, c| eig.eigenvectors[(r, order[c])])
    });
    Ok((vals, vecs))
}

/// Thin SVD `m = u diag(s) v^H` with `s` descending (ties keep index order).
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v: CMatrix,
}

fn raw_svd(m: &CMatrix) -> Result<Svd> {
    let svd = SVD::try_new_unordered(m.clone(), true, true, EPS, MAX_ITER).ok_or_else(|| Error::Numerical {
        msg: "SVD did not converge".into(),
        dump: dump_matrix(m, "svd").ok(),
    })?;
    let u = svd.u.expect("u requested");
    let v = svd.v_t.expect("v requested").adjoint();
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    Ok(Svd {
        u: CMatrix::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]),
        s: order.iter().map(|&i| svd.singular_values[i]).collect(),
        v: CMatrix::from_fn(v.nrows(), order.len(), |r, c| v[(r, order[c])]),
    })
}

/// Sorted SVD. For square block triangular input the smallest singular
/// triplets are recomputed from the SVD of the exactly substituted inverse,
/// which keeps relative accuracy for values many orders below the largest.
///
/// A direct SVD resolves `s_j` to about `ε s_1 / s_j` relative accuracy, the
/// inverse route to about `ε s_j / s_N`. Each trailing index takes whichever
/// source is more accurate.
pub fn svd(m: &CMatrix) -> Result<Svd> {
    let mut out = raw_svd(m)?;
    let n = out.s.len();
    if n == 0 || m.nrows() != m.ncols() || block_triangular(m).is_none() {
        return Ok(out);
    }
    let inv = match inverse(m) {
        Ok(x) if x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) => x,
        _ => return Ok(out),
    };
    // inv = v diag(1/s) u^H: its leading triplets are the trailing ones of m.
    let isvd = raw_svd(&inv)?;
    let (top, itop) = (out.s[0], isvd.s[0]);
    let mut k = 0;
    while k < n {
        let direct = out.s[n - 1 - k];
        let via_inverse = 1.0 / isvd.s[k];
        let direct_err = if direct > 0.0 { top / direct } else { f64::INFINITY };
        if itop * via_inverse >= direct_err {
            break;
        }
        k += 1;
    }
    for j in 0..k {
        let dst = n - 1 - j;
        out.s[dst] = 1.0 / isvd.s[j];
        out.v.set_column(dst, &isvd.u.column(j));
        out.u.set_column(dst, &isvd.v.column(j));
    }
    Ok(out)
}

/// Matrix exponential (Padé scaling and squaring).
pub fn expm(m: &CMatrix) -> CMatrix {
    m.exp()
}

static DUMP_COUNTER: AtomicUsize = AtomicUsize::new(0);

/// Writes `m` as CSV (row, col, re, im) into the temp directory.
pub fn dump_matrix(m: &CMatrix, tag: &str) -> std::io::Result<PathBuf> {
    let id = DUMP_COUNTER.fetch_add(1, Ordering::Relaxed);
    let path = std::env::temp_dir().join(format!("topamp-{tag}-{}-{id}.csv", std::process::id()));
    let mut f = std::io::BufWriter::new(std::fs::File::create(&path)?);
    writeln!(f, "row,col,re,im")?;
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let z = m[(r, c)];
            writeln!(f, "{r},{c},{:e},{:e}", z.re, z.im)?;
        }
    }
    f.flush()?;
    Ok(path)
}

//! Python bindings: winding numbers, coupling matrices, steady states,
//! singular spectra, photon-number dynamics and Hofstadter edge channels.

use num_complex::Complex64 as C64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use topamp::bloch::{PointSpec, DEFAULT_N_GRID};
use topamp::couplings::coupling_matrices;
use topamp::hofstadter::{self, HofstadterSpec};
use topamp::steadystate::{self, Method};
use topamp::{dynamics, dynmatrix, Chirality, LatticeSpec, WaveguideSpec};

fn py_err(e: topamp::Error) -> PyErr {
    match e {
        topamp::Error::Config(_) | topamp::Error::Dimension(_) | topamp::Error::NotInGap { .. } => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn waveguide(k_res: Vec<f64>, l_kappa: f64, gamma: f64, left: bool) -> PyResult<WaveguideSpec> {
    let wg = WaveguideSpec::equal_rates(k_res, l_kappa, gamma).map_err(py_err)?;
    Ok(if left { wg.with_chirality(Chirality::Left) } else { wg })
}

fn matrix(wg: &WaveguideSpec, n: usize, pump: f64, g_s: f64, delta: f64, factor: f64) -> PyResult<dynmatrix::DynamicalMatrix> {
    let spec = PointSpec { wg: wg.clone(), pump, g_s, delta, parametric_factor: factor };
    let cm = coupling_matrices(wg, &LatticeSpec::uniform(n)).map_err(py_err)?;
    dynmatrix::build(&cm, &spec.drive()).map_err(py_err)
}

type Rows = Vec<Vec<C64>>;

fn rows(m: &topamp::CMatrix) -> Rows {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Winding number of the bulk symbol; `w` is None at a gap closing.
#[pyfunction]
#[pyo3(signature = (k_res, l_kappa, pump=0.0, gamma=1.0, g_s=0.0, delta=0.0, parametric_factor=1.0, n_grid=DEFAULT_N_GRID, left=false))]
#[allow(clippy::too_many_arguments)]
fn winding<'py>(
    py: Python<'py>,
    k_res: Vec<f64>,
    l_kappa: f64,
    pump: f64,
    gamma: f64,
    g_s: f64,
    delta: f64,
    parametric_factor: f64,
    n_grid: usize,
    left: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = PointSpec { wg: waveguide(k_res, l_kappa, gamma, left)?, pump, g_s, delta, parametric_factor };
    let r = spec.winding(n_grid);
    let d = PyDict::new(py);
    d.set_item("w", r.w)?;
    d.set_item("raw", r.raw)?;
    d.set_item("residual", r.residual)?;
    d.set_item("gap_closed", r.gap_closed)?;
    d.set_item("n_grid", r.n_grid)?;
    d.set_item("min_gap", r.min_gap)?;
    Ok(d)
}

/// `(J, Gamma)` for `n` equally spaced cavities, as nested lists.
#[pyfunction]
#[pyo3(signature = (k_res, l_kappa, n, gamma=1.0, left=false))]
fn couplings(k_res: Vec<f64>, l_kappa: f64, n: usize, gamma: f64, left: bool) -> PyResult<(Rows, Rows)> {
    let cm = coupling_matrices(&waveguide(k_res, l_kappa, gamma, left)?, &LatticeSpec::uniform(n)).map_err(py_err)?;
    Ok((rows(&cm.j), rows(&cm.gamma)))
}

/// Coherences `<b_r>` for a drive of `amplitude` on the upstream edge site,
/// or on every site listed in `omega` when given.
#[pyfunction]
#[pyo3(signature = (k_res, l_kappa, n, pump=0.0, gamma=1.0, g_s=0.0, delta=0.0, parametric_factor=1.0, omega=None, amplitude=1.0, method="direct"))]
#[allow(clippy::too_many_arguments)]
fn steady_state(
    k_res: Vec<f64>,
    l_kappa: f64,
    n: usize,
    pump: f64,
    gamma: f64,
    g_s: f64,
    delta: f64,
    parametric_factor: f64,
    omega: Option<Vec<C64>>,
    amplitude: f64,
    method: &str,
) -> PyResult<Vec<C64>> {
    let wg = waveguide(k_res, l_kappa, gamma, false)?;
    let dm = matrix(&wg, n, pump, g_s, delta, parametric_factor)?;
    let method = match method {
        "direct" => Method::DirectSolve,
        "svd" => Method::SvdSum,
        other => return Err(PyValueError::new_err(format!("unknown method {other:?}; use \"direct\" or \"svd\""))),
    };
    let omega = omega.unwrap_or_else(|| steadystate::edge_drive(n, wg.chirality, C64::new(amplitude, 0.0)));
    let ss = steadystate::steady_state(&dm, &omega, method).map_err(py_err)?;
    Ok(ss.coherences().iter().copied().collect())
}

/// Descending singular values of the dynamical matrix.
#[pyfunction]
#[pyo3(signature = (k_res, l_kappa, n, pump=0.0, gamma=1.0, g_s=0.0, delta=0.0, parametric_factor=1.0))]
#[allow(clippy::too_many_arguments)]
fn singular_values(
    k_res: Vec<f64>,
    l_kappa: f64,
    n: usize,
    pump: f64,
    gamma: f64,
    g_s: f64,
    delta: f64,
    parametric_factor: f64,
) -> PyResult<Vec<f64>> {
    let dm = matrix(&waveguide(k_res, l_kappa, gamma, false)?, n, pump, g_s, delta, parametric_factor)?;
    Ok(dynmatrix::singular_decomposition(&dm, 0).map_err(py_err)?.s)
}

/// Photon number at `times` from a uniform initial state, driven on the
/// upstream edge with `amplitude`.
#[pyfunction]
#[pyo3(signature = (k_res, l_kappa, n, times, pump=0.0, gamma=1.0, amplitude=1.0))]
#[allow(clippy::too_many_arguments)]
fn photon_number(k_res: Vec<f64>, l_kappa: f64, n: usize, times: Vec<f64>, pump: f64, gamma: f64, amplitude: f64) -> PyResult<Vec<f64>> {
    let wg = waveguide(k_res, l_kappa, gamma, false)?;
    let dm = matrix(&wg, n, pump, 0.0, 0.0, 1.0)?;
    let omega = steadystate::edge_drive(n, wg.chirality, C64::new(amplitude, 0.0));
    let traj = dynamics::evolve(&dm, &omega, &dynamics::uniform_state(n), &times).map_err(py_err)?;
    Ok(dynamics::photon_number(&traj))
}

/// Edge crossings `(k, velocity, eta)` at mid-gap of the n-th gap of a
/// width-6q strip at flux 1/q.
#[pyfunction]
#[pyo3(signature = (q, gap, eta_cut=hofstadter::DEFAULT_ETA_CUT))]
fn hofstadter_edge_modes(q: usize, gap: usize, eta_cut: f64) -> PyResult<Vec<(f64, f64, f64)>> {
    let spec = HofstadterSpec::new(q);
    let (lo, hi) = hofstadter::gap_bounds(&spec, gap).map_err(py_err)?;
    let t = hofstadter::edge_modes_in_gap(&spec, gap, 0.5 * (lo + hi), eta_cut).map_err(py_err)?;
    Ok(t.crossings.iter().map(|c| (c.k, c.velocity, c.eta)).collect())
}

#[pymodule]
fn topamp_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", topamp::VERSION)?;
    m.add_function(wrap_pyfunction!(winding, m)?)?;
    m.add_function(wrap_pyfunction!(couplings, m)?)?;
    m.add_function(wrap_pyfunction!(steady_state, m)?)?;
    m.add_function(wrap_pyfunction!(singular_values, m)?)?;
    m.add_function(wrap_pyfunction!(photon_number, m)?)?;
    m.add_function(wrap_pyfunction!(hofstadter_edge_modes, m)?)?;
    Ok(())
}

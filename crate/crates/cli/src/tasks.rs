//! Per-cell evaluation of each task kind.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};
use topamp::bloch::{self, PointSpec, DEFAULT_N_GRID};
use topamp::dynamics::{self, evolve, log_times, photon_number, projections};
use topamp::dynmatrix::{self, DynamicalMatrix, MatrixKind};
use topamp::hofstadter::{self, HofstadterSpec};
use topamp::steadystate::{self, Method};
use topamp::couplings::coupling_matrices;
use topamp::{CVector, LatticeSpec};

use crate::config::{apply, DriveProfile, ExperimentConfig, InitialState, SteadyMethod, TaskConfig};
use crate::error::CliError;
use crate::table::{num, opt, CellOutput, RunOutput, Table};

type R<T> = Result<T, CliError>;

struct Cell {
    index: usize,
    point: PointSpec,
    lattice: LatticeSpec,
}

fn cartesian(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![vec![]], |acc, vals| {
        acc.into_iter()
            .flat_map(|p| {
                vals.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect()
    })
}

/// Evaluates the configured task over every sweep cell. Cells run in
/// parallel; results are merged in grid order so the output does not depend
/// on scheduling.
pub fn run_task(cfg: &ExperimentConfig) -> R<RunOutput> {
    let name = cfg.task.name();
    let num_err = move |e: topamp::Error| CliError::Numerical { task: name, source: e };
    if let TaskConfig::Hofstadter { .. } = cfg.task {
        let out = hofstadter_task(cfg).map_err(num_err)?;
        return Ok(RunOutput::merge(&[], vec![(vec![], out)]));
    }
    let axes = cfg.axes()?;
    let names: Vec<&str> = axes.iter().map(|a| a.param.name()).collect();
    let base_point = cfg.point()?;
    let base_lattice = cfg.lattice()?;
    let pts = cartesian(&axes.iter().map(|a| a.values.clone()).collect::<Vec<_>>());
    let results = pts
        .into_par_iter()
        .enumerate()
        .map(|(index, params)| {
            let mut cell = Cell { index, point: base_point.clone(), lattice: base_lattice.clone() };
            apply(&axes, &params, &mut cell.point, &mut cell.lattice);
            let out = eval_cell(cfg, &cell).map_err(num_err)?;
            Ok((params, out))
        })
        .collect::<R<Vec<_>>>()?;
    Ok(RunOutput::merge(&names, results))
}

fn eval_cell(cfg: &ExperimentConfig, cell: &Cell) -> topamp::Result<CellOutput> {
    cell.point.wg.validate()?;
    cell.point.drive().validate()?;
    match &cfg.task {
        TaskConfig::Couplings {} => couplings(cell),
        TaskConfig::Winding { n_grid, loop_points } => winding(cell, *n_grid, *loop_points, "winding"),
        TaskConfig::PhaseDiagram { n_grid } => winding(cell, *n_grid, 0, "phase_diagram"),
        TaskConfig::SteadyState { method, winding, padding, peak_ratio } => {
            steady(cfg, cell, *method, *winding, *padding, *peak_ratio)
        }
        TaskConfig::Greens { frequency } => greens(cell, *frequency),
        TaskConfig::Dynamics { .. } => dynamics_task(cfg, cell),
        TaskConfig::GapScaling { sizes } => gap_scaling(cell, sizes),
        TaskConfig::Hofstadter { .. } => unreachable!("handled before the sweep"),
    }
}

fn matrix(cell: &Cell) -> topamp::Result<DynamicalMatrix> {
    let cm = coupling_matrices(&cell.point.wg, &cell.lattice)?;
    dynmatrix::build(&cm, &cell.point.drive())
}

fn site_drive(cfg: &ExperimentConfig, cell: &Cell) -> topamp::Result<Vec<C64>> {
    let n = cell.lattice.n_sites();
    let a = C64::new(cfg.drive.amplitude, 0.0);
    Ok(match cfg.drive.profile {
        DriveProfile::Edge => steadystate::edge_drive(n, cell.point.wg.chirality, a),
        DriveProfile::Uniform => vec![a; n],
        DriveProfile::None => vec![C64::new(0.0, 0.0); n],
        DriveProfile::Site => {
            let s = cfg.drive.site.unwrap_or(0);
            if s >= n {
                return Err(topamp::Error::Config(format!("drive site {s} outside a lattice of {n} sites")));
            }
            let mut v = vec![C64::new(0.0, 0.0); n];
            v[s] = a;
            v
        }
    })
}

/// Edge-set size: explicit, else the bulk winding number (0 when undefined).
fn edge_count(cell: &Cell, explicit: Option<usize>) -> usize {
    explicit.unwrap_or_else(|| cell.point.winding(DEFAULT_N_GRID).w.unwrap_or(0).max(0) as usize)
}

fn couplings(cell: &Cell) -> topamp::Result<CellOutput> {
    let cm = coupling_matrices(&cell.point.wg, &cell.lattice)?;
    let pos = &cell.lattice.positions;
    let mut t = Table::new(["i", "j", "distance", "j_re", "j_im", "gamma_re", "gamma_im"]);
    let n = cm.n_sites();
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (cm.j[(i, j)], cm.gamma[(i, j)]);
            t.push(vec![i.into(), j.into(), num(pos[i] - pos[j]), num(a.re), num(a.im), num(b.re), num(b.im)]);
        }
    }
    let mut out = CellOutput::default();
    out.table("couplings", t);
    Ok(out)
}

fn winding(cell: &Cell, n_grid: usize, loop_points: usize, name: &'static str) -> topamp::Result<CellOutput> {
    let w = cell.point.winding(n_grid);
    let st = dynmatrix::stability(&matrix(cell)?)?;
    let mut t = Table::new(["w", "raw", "residual", "gap_closed", "n_grid", "min_gap", "det_raw", "stable", "max_im"]);
    t.push(vec![
        w.w.map_or(Value::Null, Value::from),
        num(w.raw),
        num(w.residual),
        w.gap_closed.into(),
        w.n_grid.into(),
        num(w.min_gap),
        opt(w.det_raw),
        st.stable.into(),
        num(st.max_im),
    ]);
    let mut out = CellOutput::default();
    out.table(name, t);
    if loop_points > 0 {
        let mut tr = Table::new(["k", "h_re", "h_im"]);
        for (k, h) in bloch::loop_trace(&cell.point.symbol(), loop_points) {
            tr.push(vec![num(k), num(h.re), num(h.im)]);
        }
        out.table("loop_trace", tr);
    }
    Ok(out)
}

fn steady(
    cfg: &ExperimentConfig,
    cell: &Cell,
    method: SteadyMethod,
    winding: Option<usize>,
    padding: usize,
    peak_ratio: f64,
) -> topamp::Result<CellOutput> {
    let dm = matrix(cell)?;
    let omega = site_drive(cfg, cell)?;
    let w = edge_count(cell, winding);
    let method = match method {
        SteadyMethod::Direct => Method::DirectSolve,
        SteadyMethod::Svd => Method::SvdSum,
        SteadyMethod::SvdEdge => Method::SvdEdgeOnly { winding: w },
    };
    let ss = steadystate::steady_state(&dm, &omega, method)?;
    let b = ss.coherences();
    let mut out = CellOutput::default();

    let mut sites = Table::new(["site", "position", "re", "im", "abs"]);
    for (i, z) in b.iter().enumerate() {
        sites.push(vec![i.into(), num(cell.lattice.positions[i]), num(z.re), num(z.im), num(z.norm())]);
    }
    out.table("steady_state", sites);

    let prof = steadystate::momentum_profile(b.as_slice(), padding, peak_ratio);
    let mut mom = Table::new(["k", "re", "im", "abs"]);
    for (k, z) in prof.k_grid.iter().zip(&prof.bk) {
        mom.push(vec![num(*k), num(z.re), num(z.im), num(z.norm())]);
    }
    out.table("momentum", mom);
    let mut peaks = Table::new(["k", "height", "width"]);
    for p in &prof.peaks {
        peaks.push(vec![num(p.k), num(p.height), num(p.width)]);
    }
    out.table("peaks", peaks);

    let t = dynmatrix::singular_decomposition(&dm, w.min(dm.dim()))?;
    let mut sv = Table::new(["index", "s", "edge"]);
    for (i, s) in t.s.iter().enumerate() {
        sv.push(vec![i.into(), num(*s), t.edge_set.contains(&i).into()]);
    }
    out.table("singular_values", sv);
    out.doc(
        "steady_state",
        json!({
            "residual": num(ss.residual),
            "backward_error": num(ss.backward_error),
            "unstable": ss.unstable,
            "edge_count": w,
            "n_peaks": prof.peaks.len(),
            "delta_obc": opt(t.delta_obc),
            "delta_pbc": opt(t.delta_pbc),
            "bulk_boundary_broken": t.bulk_boundary_broken,
        }),
    );
    Ok(out)
}

fn greens(cell: &Cell, frequency: f64) -> topamp::Result<CellOutput> {
    let g = steadystate::greens_function(&matrix(cell)?, frequency)?;
    let mut t = Table::new(["i", "j", "re", "im", "abs"]);
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let z = g[(i, j)];
            t.push(vec![i.into(), j.into(), num(z.re), num(z.im), num(z.norm())]);
        }
    }
    let mut out = CellOutput::default();
    out.table("greens", t);
    Ok(out)
}

fn initial_state(cfg: &ExperimentConfig, cell: &Cell, dm: &DynamicalMatrix, svd: Option<&dynmatrix::SvdTriple>) -> topamp::Result<CVector> {
    let TaskConfig::Dynamics { initial, initial_vectors, .. } = &cfg.task else { unreachable!() };
    let n = cell.lattice.n_sites();
    let with_conjugate = |b: CVector| match dm.kind {
        MatrixKind::Normal => b,
        MatrixKind::Bogoliubov => CVector::from_iterator(2 * n, b.iter().copied().chain(b.iter().map(|z| z.conj()))),
    };
    Ok(match initial {
        InitialState::Uniform => with_conjugate(dynamics::uniform_state(n)),
        InitialState::Vacuum => CVector::zeros(dm.dim()),
        InitialState::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(cell.index as u64));
            let b = CVector::from_fn(n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let norm = b.norm();
            with_conjugate(b.map(|z| z / norm))
        }
        InitialState::SingularVectors => {
            let t = svd.expect("singular vectors computed for this initial state");
            let d = dm.dim() as i64;
            let mut b = CVector::zeros(dm.dim());
            for vw in initial_vectors {
                let i = if vw.index < 0 { d + vw.index } else { vw.index };
                if !(0..d).contains(&i) {
                    return Err(topamp::Error::Config(format!("singular vector index {} outside 0..{d}", vw.index)));
                }
                b += t.v.column(i as usize) * C64::new(vw.weight, 0.0);
            }
            b
        }
    })
}

fn dynamics_task(cfg: &ExperimentConfig, cell: &Cell) -> topamp::Result<CellOutput> {
    let TaskConfig::Dynamics { t_min, t_max, n_times, initial, profiles, projections: want_proj, winding, padding, peak_ratio, .. } =
        &cfg.task
    else {
        unreachable!()
    };
    let dm = matrix(cell)?;
    let omega = site_drive(cfg, cell)?;
    let need_svd = *want_proj || *initial == InitialState::SingularVectors;
    let svd = if need_svd {
        let w = edge_count(cell, *winding).min(dm.dim());
        Some(dynmatrix::singular_decomposition(&dm, w)?)
    } else {
        None
    };
    let b0 = initial_state(cfg, cell, &dm, svd.as_ref())?;
    let mut times = vec![0.0];
    times.extend(log_times(*n_times, *t_min, *t_max));
    let traj = evolve(&dm, &omega, &b0, &times)?;
    let mut out = CellOutput::default();

    let mut nph = Table::new(["t", "n_ph"]);
    for (t, n) in times.iter().zip(photon_number(&traj)) {
        nph.push(vec![num(*t), num(n)]);
    }
    out.table("photon_number", nph);

    if *profiles {
        let mut prof = Table::new(["t", "k", "abs", "abs_normalized"]);
        let mut counts = Table::new(["t", "n_peaks"]);
        for (t, p) in times.iter().zip(traj.k_profiles(*padding, *peak_ratio)) {
            let mags = p.magnitudes();
            let max = mags.iter().copied().fold(0.0, f64::max);
            for (k, m) in p.k_grid.iter().zip(&mags) {
                prof.push(vec![num(*t), num(*k), num(*m), num(if max > 0.0 { m / max } else { 0.0 })]);
            }
            counts.push(vec![num(*t), p.peaks.len().into()]);
        }
        out.table("profiles", prof);
        out.table("peak_counts", counts);
    }
    if let (true, Some(t)) = (*want_proj, &svd) {
        let p = projections(&traj, t)?;
        let mut tab = Table::new(["t", "index", "p", "edge"]);
        for (ti, t_val) in times.iter().enumerate() {
            for (n, row) in p.p.iter().enumerate() {
                tab.push(vec![num(*t_val), n.into(), num(row[ti]), p.edge_indices.contains(&n).into()]);
            }
        }
        out.table("projections", tab);
    }
    Ok(out)
}

fn gap_scaling(cell: &Cell, sizes: &[usize]) -> topamp::Result<CellOutput> {
    let g = dynamics::gap_scaling(&cell.point, sizes)?;
    let mut t = Table::new(["n_sites", "delta_obc", "delta_pbc", "ln_delta_obc", "bulk_boundary_broken"]);
    for r in &g.rows {
        t.push(vec![
            r.n_sites.into(),
            opt(r.delta_obc),
            opt(r.delta_pbc),
            opt(r.delta_obc.map(f64::ln)),
            r.bulk_boundary_broken.into(),
        ]);
    }
    let mut out = CellOutput::default();
    out.table("gap_scaling", t);
    out.doc(
        "gap_scaling",
        json!({
            "winding": g.winding,
            "fit": g.fit.map(|f| json!({ "slope": num(f.slope), "intercept": num(f.intercept), "r2": num(f.r2) })),
        }),
    );
    Ok(out)
}

fn hofstadter_task(cfg: &ExperimentConfig) -> topamp::Result<CellOutput> {
    let TaskConfig::Hofstadter { q, phi, width, j_hop, n_ky, gaps, eta_cut, coupling_g, l_kappa } = &cfg.task else {
        unreachable!()
    };
    let mut spec = HofstadterSpec::new(*q);
    spec.phi = phi.unwrap_or(spec.phi);
    spec.width = width.unwrap_or(spec.width);
    spec.j_hop = *j_hop;
    spec.ky_grid = hofstadter::ky_grid(*n_ky);
    let bs = hofstadter::band_structure(&spec)?;
    let mut out = CellOutput::default();
    let mut bands = Table::new(["ky", "band", "energy", "eta"]);
    for (i, ky) in bs.ky.iter().enumerate() {
        for (b, (e, eta)) in bs.energies[i].iter().zip(&bs.eta[i]).enumerate() {
            bands.push(vec![num(*ky), b.into(), num(*e), num(*eta)]);
        }
    }
    out.table("bands", bands);

    let mut gap_t = Table::new(["gap", "lower", "upper", "omega_c"]);
    let mut cross = Table::new(["gap", "k", "velocity", "eta"]);
    let mut docs = Vec::new();
    for &n in gaps {
        let (lo, hi) = hofstadter::gap_bounds(&spec, n)?;
        let omega_c = 0.5 * (lo + hi);
        gap_t.push(vec![n.into(), num(lo), num(hi), num(omega_c)]);
        let table = hofstadter::edge_modes_in_gap(&spec, n, omega_c, *eta_cut)?;
        for c in &table.crossings {
            cross.push(vec![n.into(), num(c.k), num(c.velocity), num(c.eta)]);
        }
        let wg = match hofstadter::to_waveguide_spec(&table, coupling_g, *l_kappa) {
            Ok(wg) => json!(wg),
            Err(e) => json!({ "error": e.to_string() }),
        };
        docs.push(json!({ "gap": n, "omega_c": num(omega_c), "crossings": table.crossings, "waveguide": wg }));
    }
    out.table("gaps", gap_t);
    out.table("crossings", cross);
    out.doc("edge_modes", Value::Array(docs));
    Ok(out)
}

//! Acceptance suite. Prints one PASS/FAIL line per criterion, then exits
//! non-zero if any criterion failed. Wall-clock budgets are part of each
//! criterion.

mod common;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use topamp::bloch::{self, Axis, Param, PointSpec, DEFAULT_N_GRID};
use topamp::couplings::{coupling_matrices, LatticeSpec, WaveguideSpec};
use topamp::dynamics::{self, evolve, gap_scaling, linear_fit, photon_number, projections, saturation_time, uniform_state};
use topamp::dynmatrix::{self, build_dynamical_matrix, doubled_hamiltonian, DriveSpec};
use topamp::hofstadter::{self, HofstadterSpec};
use topamp::linalg;
use topamp::steadystate::{edge_drive, momentum_coherences, steady_state, Method, DEFAULT_PEAK_RATIO};
use topamp::{BlochSymbol, CVector, Chirality, DynamicalMatrix, C64};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn eq_wg(k: Vec<f64>, l: f64) -> WaveguideSpec {
    WaveguideSpec::equal_rates(k, l, 1.0).unwrap()
}

fn normal(wg: &WaveguideSpec, pump: f64, n: usize) -> DynamicalMatrix {
    let cm = coupling_matrices(wg, &LatticeSpec::uniform(n)).unwrap();
    build_dynamical_matrix(&cm, &DriveSpec::pump(pump)).unwrap()
}

fn point(wg: WaveguideSpec, pump: f64) -> PointSpec {
    PointSpec { wg, pump, g_s: 0.0, delta: 0.0, parametric_factor: 1.0 }
}

fn fig3_windings() -> Outcome {
    let mut got = Vec::new();
    let mut want = Vec::new();
    for (dk, w) in [(0.0, 1), (PI / 10.0, 1), (9.0 * PI / 10.0, 2)] {
        got.push(bloch::winding_scalar(&BlochSymbol::new(eq_wg(vec![0.0, dk], 3.0), 0.9), DEFAULT_N_GRID).w);
        want.push(Some(w));
    }
    for (l, w) in [(3.0, 1), (8.0, 2), (12.0, 2)] {
        got.push(bloch::winding_scalar(&BlochSymbol::new(eq_wg(vec![0.0, PI / 2.0], l), 0.9), DEFAULT_N_GRID).w);
        want.push(Some(w));
    }
    for (p, w) in [(0.0, 0), (0.9, 3)] {
        got.push(bloch::winding_scalar(&BlochSymbol::new(eq_wg(vec![0.0, PI / 2.0, -PI / 3.0], 3.0), p), DEFAULT_N_GRID).w);
        want.push(Some(w));
    }
    let fmt = |v: &[Option<i64>]| v.iter().map(|w| w.map_or("-".into(), |x| x.to_string())).collect::<Vec<_>>().join(",");
    outcome(got == want, format!("got [{}], expected [{}]", fmt(&got), fmt(&want)))
}

fn winding_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut violations = 0;
    let mut closed = 0;
    let mut max_w = 0;
    for _ in 0..10_000 {
        let n = rng.random_range(1..=4usize);
        let wg = common::random_waveguide(&mut rng, n, (1.0, 100.0));
        let p = rng.random_range(0.0..2.0);
        let r = bloch::winding_scalar(&BlochSymbol::new(wg, p), DEFAULT_N_GRID);
        match r.w {
            Some(w) => {
                max_w = max_w.max(w.abs());
                if w.unsigned_abs() as usize > n {
                    violations += 1;
                }
            }
            None => closed += 1,
        }
    }
    outcome(
        violations == 0,
        format!("10000 draws (modes 1-4, l in [1,100], P in [0,2]): {violations} violations, {closed} gap closings, max |W| = {max_w}"),
    )
}

fn svd_duality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let n = rng.random_range(1..=64usize);
        let m = common::random_complex_matrix(&mut rng, n, n);
        let ev = linalg::hermitian_eigenvalues(&doubled_hamiltonian(&m)).unwrap();
        let s = common::jacobi_singular_values(&m);
        let mut expect: Vec<f64> = s.iter().map(|x| -x).chain(s.iter().copied()).collect();
        expect.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip(&expect) {
            worst = worst.max((a - b).abs());
        }
    }
    outcome(worst < 1e-10, format!("500 matrices up to 64x64, max |eig - (±s)| = {worst:.2e}"))
}

fn steady_state_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(1..=4usize);
        let wg = common::random_waveguide(&mut rng, n, (1.0, 20.0));
        let dm = normal(&wg, rng.random_range(0.0..0.95), 60);
        let omega: Vec<C64> = common::random_complex_vector(&mut rng, 60).iter().copied().collect();
        let a = steady_state(&dm, &omega, Method::DirectSolve).unwrap();
        let b = steady_state(&dm, &omega, Method::SvdSum).unwrap();
        assert!(!a.unstable);
        worst = worst.max((&a.b_ss - &b.b_ss).norm() / a.b_ss.norm());
    }
    outcome(worst < 1e-10, format!("100 stable systems N=60, max relative deviation = {worst:.2e}"))
}

fn phase_diagrams() -> Outcome {
    let l_axis = Axis::linspace(Param::LKappa, 1.0, 100.0, 50);
    let mut ok = true;
    let mut lines = Vec::new();
    let wgs = [vec![0.0], vec![PI / 2.0, PI / 3.0], vec![PI / 2.0, PI / 3.0, PI / 8.0]];
    for (panel, k) in ["a", "b", "c"].iter().zip(&wgs) {
        let spec = point(eq_wg(k.clone(), 10.0), 0.0);
        let grid = bloch::phase_diagram(&spec, &[Axis::linspace(Param::Pump, 0.0, 2.0, 50), l_axis.clone()], DEFAULT_N_GRID, 60).unwrap();
        let all = grid.windings(false);
        let stable = grid.windings(true);
        let n = k.len() as i64;
        let pass = all.iter().max() == Some(&n) && (1..=n).all(|w| stable.contains(&w));
        ok &= pass;
        lines.push(format!("({panel}) W={all:?} stable={stable:?}"));
    }
    for (panel, k) in ["d", "e", "f"].iter().zip(&wgs) {
        let spec = PointSpec { wg: eq_wg(k.clone(), 10.0), pump: 0.0, g_s: 0.0, delta: 1.0, parametric_factor: 1.0 };
        let grid = bloch::phase_diagram(&spec, &[Axis::linspace(Param::GS, 0.0, 2.0, 50), l_axis.clone()], DEFAULT_N_GRID, 60).unwrap();
        let stable = grid.windings(true);
        let nonzero: Vec<i64> = stable.iter().copied().filter(|&w| w != 0).collect();
        let pass = nonzero == vec![1];
        ok &= pass;
        lines.push(format!("({panel}) W={:?} stable={stable:?}", grid.windings(false)));
    }
    outcome(ok, lines.join("; "))
}

fn gap_scaling_fig7() -> Outcome {
    let spec = point(eq_wg(vec![0.0, PI / 2.0, PI / 3.0], 1e3), 0.7);
    let g = gap_scaling(&spec, &[20, 40, 60, 80]).unwrap();
    let fit = g.fit.unwrap();
    let pbc: Vec<f64> = g.rows.iter().map(|r| r.delta_pbc.unwrap()).collect();
    let obc: Vec<f64> = g.rows.iter().map(|r| r.delta_obc.unwrap()).collect();
    let mean = pbc.iter().sum::<f64>() / pbc.len() as f64;
    let spread = (pbc.iter().copied().fold(f64::MIN, f64::max) - pbc.iter().copied().fold(f64::MAX, f64::min)) / mean;
    let pass = g.winding == 3 && fit.slope < 0.0 && fit.r2 > 0.99 && spread < 0.01;
    outcome(
        pass,
        format!(
            "W={}, Δ_OBC=[{}], slope={:.4}, R²={:.5}; Δ_PBC={:.4?}, spread={:.2}%",
            g.winding,
            obc.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", "),
            fit.slope,
            fit.r2,
            pbc,
            100.0 * spread
        ),
    )
}

fn photon_amplification() -> Outcome {
    let wg = eq_wg(vec![0.0, PI / 2.0, PI / 3.0], 1e3);
    let times = dynamics::log_times(400, 1e-2, 1e3);
    let mut ln_n = Vec::new();
    let mut t_sat = Vec::new();
    let sizes = [5usize, 10, 20];
    for &n in &sizes {
        let dm = normal(&wg, 0.7, n);
        let omega = edge_drive(n, Chirality::Right, C64::new(1.0, 0.0));
        let ss = steady_state(&dm, &omega, Method::DirectSolve).unwrap();
        let n_inf = ss.b_ss.norm_squared();
        let traj = evolve(&dm, &omega, &uniform_state(n), &times).unwrap();
        let nph = photon_number(&traj);
        ln_n.push(n_inf.ln());
        t_sat.push(saturation_time(&times, &nph, n_inf, 0.01));
    }
    let x: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
    let fit = linear_fit(&x, &ln_n).unwrap();
    let range = ln_n.iter().copied().fold(f64::MIN, f64::max) - ln_n.iter().copied().fold(f64::MAX, f64::min);
    let resid = x.iter().zip(&ln_n).map(|(a, b)| (b - fit.slope * a - fit.intercept).abs()).fold(0.0, f64::max) / range;
    let increasing = ln_n.windows(2).all(|w| w[1] > w[0]);
    let sat_monotone = t_sat.iter().all(|t| t.is_some()) && t_sat.windows(2).all(|w| w[1].unwrap() > w[0].unwrap());
    outcome(
        increasing && resid < 0.1 && sat_monotone,
        format!("ln N_ph(∞)={ln_n:.3?}, affine residual={resid:.2e}, saturation times={t_sat:.1?}"),
    )
}

fn count_peaks(dm: &DynamicalMatrix, omega: &[C64], b0: &CVector, t: f64) -> usize {
    let tr = evolve(dm, omega, b0, &[t]).unwrap();
    tr.k_profiles(1, DEFAULT_PEAK_RATIO)[0].peaks.len()
}

fn metastability() -> Outcome {
    let n = 100;
    let sets = [(vec![0.0], 1), (vec![0.0, PI / 2.0], 2), (vec![0.0, PI / 2.0, PI / 3.0], 3)];
    let mut ok = true;
    let mut early = Vec::new();
    let mut late = Vec::new();
    let omega = edge_drive(n, Chirality::Right, C64::new(1.0, 0.0));
    for (k, w) in &sets {
        let dm = normal(&eq_wg(k.clone(), 1e3), 0.7, n);
        let e = count_peaks(&dm, &omega, &uniform_state(n), 0.5);
        let l = count_peaks(&dm, &omega, &uniform_state(n), 1000.0);
        ok &= e == *w && l == 1;
        early.push(e);
        late.push(l);
    }
    let dm = normal(&eq_wg(vec![0.0, PI / 2.0, PI / 3.0], 1e3), 0.7, n);
    let svd = dynmatrix::singular_decomposition(&dm, 3).unwrap();
    let v = |i: usize| svd.v.column(i).into_owned();
    let b0 = v(n - 1) * C64::new(0.5f64.sqrt(), 0.0) + v(n - 2) * C64::new(0.5, 0.0) + v(n - 3) * C64::new(0.5, 0.0);
    let times: Vec<f64> = (0..=20).map(|i| i as f64 * 0.05).collect();
    let tr = evolve(&dm, &[], &b0, &times).unwrap();
    let pr = projections(&tr, &svd).unwrap();
    let edge_change = pr
        .edge_indices
        .iter()
        .map(|&e| pr.p[e].iter().map(|p| (p - pr.p[e][0]).abs() / pr.p[e][0]).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    let m = n - 4;
    let tr_bulk = evolve(&dm, &[], &v(m), &times).unwrap();
    let pb = projections(&tr_bulk, &svd).unwrap();
    let bulk_change = pb.p[m].iter().map(|p| (p - pb.p[m][0]).abs() / pb.p[m][0]).fold(0.0, f64::max);
    ok &= edge_change < 0.1 && bulk_change > 0.5;
    outcome(
        ok,
        format!(
            "peaks at t=0.5: {early:?} (want [1,2,3]), at t=1000: {late:?}; over t in [0,1] edge change {:.1}%, bulk change {:.0}%",
            100.0 * edge_change,
            100.0 * bulk_change
        ),
    )
}

fn opposite_modes() -> Outcome {
    let wg2 = eq_wg(vec![0.0, PI], 10.0);
    let cm = coupling_matrices(&wg2, &LatticeSpec::uniform(40)).unwrap();
    let max_j = cm.j.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let max_g1 = (1..40).map(|i| cm.gamma[(i, i - 1)].norm()).fold(0.0, f64::max);
    let n = 100;
    let wg = eq_wg(vec![0.0, PI], 1e3);
    let dm = normal(&wg, 0.2, n);
    let svd = dynmatrix::singular_decomposition(&dm, 2).unwrap();
    let s = &svd.s;
    let split = |a: usize, b: usize| (s[a] - s[b]).abs() / s[b];
    let edge_split = split(n - 2, n - 1);
    let bulk_split = split(n - 4, n - 3);
    let ss = steady_state(&dm, &edge_drive(n, Chirality::Right, C64::new(1.0, 0.0)), Method::DirectSolve).unwrap();
    let peaks = momentum_coherences(&ss).peaks.len();
    outcome(
        max_j <= 1e-12 && max_g1 <= 1e-12 && edge_split < 1e-8 && bulk_split < 1e-8 && peaks == 2,
        format!(
            "max|J|={max_j:.1e}, max|Γ(a)|={max_g1:.1e}, lowest pairs s={:.4e},{:.4e} split {edge_split:.1e}, next pair split {bulk_split:.1e}, peaks={peaks}",
            s[n - 2],
            s[n - 1]
        ),
    )
}

fn hofstadter_channels() -> Outcome {
    let spec = HofstadterSpec::new(9);
    let mut counts = Vec::new();
    let mut detail = Vec::new();
    for gap in [1, 2] {
        let (lo, hi) = hofstadter::gap_bounds(&spec, gap).unwrap();
        let t = hofstadter::edge_modes_in_gap(&spec, gap, 0.5 * (lo + hi), -0.9).unwrap();
        counts.push(t.crossings.len());
        detail.push(format!(
            "gap {gap}: {} crossing(s) η={:?} v={:?}",
            t.crossings.len(),
            t.crossings.iter().map(|c| (c.eta * 1e3).round() / 1e3).collect::<Vec<_>>(),
            t.crossings.iter().map(|c| (c.velocity * 1e3).round() / 1e3).collect::<Vec<_>>()
        ));
    }
    let bands = hofstadter::band_structure(&spec).unwrap();
    let eta_ok = bands.eta.iter().flatten().all(|e| (-1.0 - 1e-12..=1.0 + 1e-12).contains(e));
    outcome(counts == vec![1, 2] && eta_ok, format!("{}; all η in [-1,1]: {eta_ok}", detail.join("; ")))
}

fn dynamics_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    let times = [0.1, 0.5, 1.0, 2.0, 4.0];
    for i in 0..12 {
        let n = [8, 16, 32, 64][i % 4];
        let modes = rng.random_range(1..=3usize);
        let wg = common::random_waveguide(&mut rng, modes, (1.0, 5.0));
        let dm = normal(&wg, rng.random_range(0.0..0.95), n);
        let omega: Vec<C64> = common::random_complex_vector(&mut rng, n).iter().copied().collect();
        let b0 = common::random_complex_vector(&mut rng, n);
        let tr = evolve(&dm, &omega, &b0, &times).unwrap();
        let h = 0.02 / dm.m.norm();
        let reference = common::rk4(&dm.m, &CVector::from_column_slice(&omega), &b0, &times, h);
        for (a, b) in tr.states.iter().zip(&reference) {
            worst = worst.max((a - b).norm() / b.norm());
        }
    }
    outcome(worst < 1e-8, format!("12 stable systems N<=64, max relative deviation vs RK4 = {worst:.2e}"))
}

fn main() {
    type Check = fn() -> Outcome;
    let criteria: [(u32, &str, u64, Check); 11] = [
        (1, "winding-number table", 1, fig3_windings),
        (2, "W <= n_modes", 30, winding_bound),
        (3, "SVD-eigenvalue duality", 30, svd_duality),
        (4, "steady-state equivalence", 30, steady_state_equivalence),
        (5, "phase diagrams", 300, phase_diagrams),
        (6, "gap scaling", 60, gap_scaling_fig7),
        (7, "exponential amplification", 60, photon_amplification),
        (8, "metastability", 120, metastability),
        (9, "opposite-momentum modes", 10, opposite_modes),
        (10, "Hofstadter edge channels", 60, hofstadter_channels),
        (11, "dynamics vs ODE oracle", 60, dynamics_oracle),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (id, name, budget, check) in criteria {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let out = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(budget);
        let pass = out.pass && in_time;
        let timing = format!("{:.2}s of {budget}s{}", elapsed.as_secs_f64(), if in_time { "" } else { " OVER BUDGET" });
        println!("{} criterion {id:>2} {name}: {} [{timing}]", if pass { "PASS" } else { "FAIL" }, out.detail);
        if !pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}

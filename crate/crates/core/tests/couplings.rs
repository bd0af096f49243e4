use std::f64::consts::PI;

use proptest::prelude::*;
use topamp::couplings::{coupling_matrices, self_energy, LatticeSpec, WaveguideSpec};
use topamp::C64;

fn waveguide() -> impl Strategy<Value = WaveguideSpec> {
    (1usize..=4)
        .prop_flat_map(|n| (prop::collection::vec(0.05f64..1.0, n), prop::collection::vec(-PI..PI, n), 0.5f64..50.0))
        .prop_map(|(g, k, l)| WaveguideSpec::new(g, k, l).unwrap())
}

fn lattice() -> impl Strategy<Value = LatticeSpec> {
    prop::collection::vec(0.2f64..2.0, 1..12).prop_map(|steps| {
        let mut r = 0.0;
        LatticeSpec::from_positions(
            steps
                .into_iter()
                .map(|s| {
                    r += s;
                    r
                })
                .collect(),
        )
        .unwrap()
    })
}

proptest! {
    #[test]
    fn one_sided_and_bounded(wg in waveguide(), lat in lattice()) {
        let cm = coupling_matrices(&wg, &lat).unwrap();
        let gamma = wg.gamma();
        for i in 0..lat.n_sites() {
            prop_assert_eq!(cm.j[(i, i)].re, 0.0);
            prop_assert!((cm.gamma[(i, i)].re - gamma).abs() < 1e-14);
            for j in 0..lat.n_sites() {
                let (ri, rj) = (lat.positions[i], lat.positions[j]);
                if ri < rj {
                    prop_assert_eq!(cm.j[(i, j)], C64::new(0.0, 0.0));
                    prop_assert_eq!(cm.gamma[(i, j)], C64::new(0.0, 0.0));
                }
                let s = self_energy(&wg, ri, rj).unwrap();
                prop_assert!(s.norm() <= gamma * (-(ri - rj).abs() / wg.l_kappa).exp() * (1.0 + 1e-12));
                prop_assert_eq!(cm.j[(i, j)].im, 0.0);
            }
        }
    }

    #[test]
    fn single_mode_phase_is_a_gauge(k0 in -PI..PI, k1 in -PI..PI, l in 0.5f64..30.0, lat in lattice()) {
        let a = coupling_matrices(&WaveguideSpec::new(vec![1.0], vec![k0], l).unwrap(), &lat).unwrap().sigma();
        let b = coupling_matrices(&WaveguideSpec::new(vec![1.0], vec![k1], l).unwrap(), &lat).unwrap().sigma();
        for (x, y) in a.iter().zip(b.iter()) {
            prop_assert!((x.norm() - y.norm()).abs() < 1e-14);
        }
    }

    #[test]
    fn equal_momenta_add_rates(k in -PI..PI, g0 in 0.05f64..1.0, g1 in 0.05f64..1.0, l in 0.5f64..30.0, lat in lattice()) {
        let two = coupling_matrices(&WaveguideSpec::new(vec![g0, g1], vec![k, k], l).unwrap(), &lat).unwrap().sigma();
        let one = coupling_matrices(&WaveguideSpec::new(vec![g0 + g1], vec![k], l).unwrap(), &lat).unwrap().sigma();
        prop_assert!((two - one).norm() < 1e-14);
    }
}

#[test]
fn opposite_momenta_cancel_at_one_spacing() {
    let lat = LatticeSpec::uniform(30);
    let cm = coupling_matrices(&WaveguideSpec::equal_rates(vec![0.0, PI], 10.0, 1.0).unwrap(), &lat).unwrap();
    for i in 0..30 {
        for j in 0..30 {
            assert!(cm.j[(i, j)].norm() < 1e-15);
        }
    }
    for i in 1..30 {
        assert!(cm.gamma[(i, i - 1)].norm() < 1e-15);
        if i >= 2 {
            assert!(cm.gamma[(i, i - 2)].re > 0.5);
        }
    }
}

#[test]
fn two_mode_pattern_oscillates_with_phase_difference() {
    // |Σ| at distance a follows |cos(Δk/2)| e^{-1/l}
    let l = 10.0;
    for i in 1..40 {
        let dk = 2.0 * PI * i as f64 / 40.0;
        let wg = WaveguideSpec::equal_rates(vec![0.0, dk], l, 1.0).unwrap();
        let s = self_energy(&wg, 1.0, 0.0).unwrap();
        let expect = (dk / 2.0).cos().abs() * (-1.0 / l).exp();
        assert!((s.norm() - expect).abs() < 1e-14, "dk={dk}");
    }
}

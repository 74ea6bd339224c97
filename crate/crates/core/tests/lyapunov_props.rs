mod common;

use std::collections::BTreeMap;

use domlab::lyapunov::{birkhoff_average, finite_time_exponents, stabilization, Direction};
use domlab::hopf::Observable;
use domlab::rng::{Module, SeedStream};
use domlab::system::catalog::catalog;
use domlab::{estimate_splitting, system, SplittingParams, TorusPoint};
use proptest::prelude::*;

fn params() -> SplittingParams {
    SplittingParams::default()
}

#[test]
fn spectrum_sums_to_zero_on_every_catalog_map() {
    let stream = SeedStream::new(9);
    for entry in catalog() {
        let Some(cu) = entry.default_cu else { continue };
        let map = entry.build(&BTreeMap::new()).unwrap();
        for i in 0..10 {
            let x = stream.uniform_point(Module::Lyapunov, i, map.dim());
            let f = estimate_splitting(&map, &x, cu, &params()).unwrap();
            let e = finite_time_exponents(&map, &f, 1000, &params()).unwrap();
            assert!(e.spectrum_sum().abs() <= 1e-6 * map.dim() as f64, "{}: {:e}", entry.id, e.spectrum_sum());
        }
    }
}

#[test]
fn linear_maps_hit_the_oracle_at_every_horizon() {
    for (id, cu) in [("cat2", 1), ("cat3", 1), ("cat3u2", 2), ("cat2x2", 2)] {
        let map = system(id).unwrap();
        let ev = common::eigen_moduli(&common::linear_part(&map));
        let logs: Vec<f64> = ev.iter().map(|v| v.ln()).collect();
        let f = estimate_splitting(&map, &TorusPoint::new(&vec![0.61; map.dim()]).unwrap(), cu, &params()).unwrap();
        for n in [1, 7, 50, 300] {
            let e = finite_time_exponents(&map, &f, n, &params()).unwrap();
            // lambda_cu is the weakest expansion, lambda_cs the weakest contraction
            assert!((e.lambda_cu - logs[cu - 1]).abs() < 1e-9, "{id} n={n}: {} vs {}", e.lambda_cu, logs[cu - 1]);
            assert!((e.lambda_cs - logs[cu]).abs() < 1e-9, "{id} n={n}: {} vs {}", e.lambda_cs, logs[cu]);
            let restricted = e.cu_spectrum.iter().chain(&e.cs_spectrum);
            for (a, b) in restricted.zip(&logs) {
                assert!((a - b).abs() < 1e-9, "{id} n={n}: {a} vs {b}");
            }
            for (a, b) in e.spectrum.iter().zip(&logs) {
                assert!((a - b).abs() < 1e-8, "{id} n={n}: spectrum {:?} vs {logs:?}", e.spectrum);
            }
            let s = stabilization(&map, &f, n, &params()).unwrap();
            assert!(s.change < 1e-9);
        }
    }
}

#[test]
fn inverse_symmetry_on_linear_maps() {
    for (id, cu) in [("cat2", 1), ("cat3", 1), ("cat3u2", 2)] {
        let map = system(id).unwrap();
        let x = TorusPoint::new(&vec![0.29; map.dim()]).unwrap();
        let f = estimate_splitting(&map, &x, cu, &params()).unwrap();
        let inv = map.inverse();
        let g = estimate_splitting(&inv, &x, map.dim() - cu, &params()).unwrap();
        let a = finite_time_exponents(&map, &f, 200, &params()).unwrap();
        let b = finite_time_exponents(&inv, &g, 200, &params()).unwrap();
        assert!((a.lambda_cu + b.lambda_cs).abs() < 1e-8, "{id}: {} vs {}", a.lambda_cu, b.lambda_cs);
    }
}

#[test]
fn nonlinear_exponents_stabilize() {
    let map = system("da2").unwrap();
    let f = estimate_splitting(&map, &TorusPoint::new(&[0.3, 0.8]).unwrap(), 1, &params()).unwrap();
    let s = stabilization(&map, &f, 2000, &params()).unwrap();
    assert!(s.change < 0.05, "change {}", s.change);
    assert!(s.constant.is_finite());
}

#[test]
fn product_control_has_a_neutral_exponent() {
    let map = system("cat2xid").unwrap();
    let f = estimate_splitting(&map, &TorusPoint::new(&[0.3, 0.8, 0.5]).unwrap(), 1, &params()).unwrap();
    let e = finite_time_exponents(&map, &f, 500, &params()).unwrap();
    assert!(e.lambda_cs.abs() < 1e-12 && e.margin().abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cs_spectrum_top_is_lambda_cs(x in 0.0..1.0f64, y in 0.0..1.0f64, z in 0.0..1.0f64) {
        let map = system("da3").unwrap();
        let f = estimate_splitting(&map, &TorusPoint::new(&[x, y, z]).unwrap(), 2, &params()).unwrap();
        let e = finite_time_exponents(&map, &f, 100, &params()).unwrap();
        prop_assert!((e.cs_spectrum[0] - e.lambda_cs).abs() < 1e-12);
        prop_assert!(e.lambda_cs < 0.0 && e.lambda_cu > 0.0);
        prop_assert!(e.spectrum.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn birkhoff_time_reversal(x in 0.0..1.0f64, y in 0.0..1.0f64, n in 1usize..500) {
        let map = system("da2").unwrap();
        let p = TorusPoint::new(&[x, y]).unwrap();
        let phi = Observable::Cos(0);
        let back = birkhoff_average(&map, &p, &phi, n, Direction::Backward).unwrap();
        let fwd_inv = birkhoff_average(&map.inverse(), &p, &phi, n, Direction::Forward).unwrap();
        prop_assert_eq!(back.to_bits(), fwd_inv.to_bits());
    }
}

mod common;

use domlab::inflatability::{
    check_bi_inflatable, check_inflatable, subadditivity, xi_cap_series, xi_n, InflatabilityParams, Side,
};
use domlab::lyapunov::finite_time_exponents;
use domlab::rng::{Module, SeedStream};
use domlab::{estimate_splitting, system, SplittingParams, TorusPoint};
use proptest::prelude::*;

fn params() -> SplittingParams {
    SplittingParams::default()
}

#[test]
fn cu1_collapse_agrees_with_lyapunov_module() {
    let map = system("da2").unwrap();
    let (n, samples, seed) = (10, 400, 31);
    let r = check_inflatable(&map, Side::Cu, 1, n, &InflatabilityParams { samples, grid_resolution: None }, &params(), seed)
        .unwrap();
    assert_eq!(r.rhs, 0.0);
    let stream = SeedStream::new(seed);
    let mean = (0..samples as u64)
        .map(|i| {
            let x = stream.uniform_point(Module::Inflatability, i, 2);
            let f = estimate_splitting(&map, &x, 1, &params()).unwrap();
            finite_time_exponents(&map, &f, n, &params()).unwrap().cu_spectrum[0]
        })
        .sum::<f64>()
        / samples as f64;
    assert!((r.lhs / n as f64 - mean).abs() < 1e-9, "{} vs {mean}", r.lhs / n as f64);
    assert_eq!(r.inflatable, r.margin > 2.0 * r.standard_error);
}

#[test]
fn cs_side_matches_eigen_oracle() {
    // cs = 2 for this map: lhs uses det of Df^{-n}|cs, rhs the top singular value
    let map = system("cat3").unwrap();
    let ev = common::eigen_moduli(&common::linear_part(&map));
    let n = 6.0;
    let r = check_inflatable(&map, Side::Cs, 1, 6, &InflatabilityParams { samples: 200, grid_resolution: Some(8) }, &params(), 1)
        .unwrap();
    assert!((r.lhs / n + (ev[1] * ev[2]).ln()).abs() < 1e-9);
    assert!((r.rhs / n + ev[2].ln()).abs() < 1e-9);
    assert!(r.inflatable);
}

#[test]
fn bi_inflatability_of_product_cat_map() {
    let map = system("cat2x2").unwrap();
    let p = InflatabilityParams { samples: 200, grid_resolution: Some(6) };
    let b = check_bi_inflatable(&map, 2, 5, 5, &p, &params(), 2).unwrap();
    let lu = common::eigen_moduli(&common::linear_part(&map))[0].ln();
    assert!(b.bi_inflatable);
    assert!((b.cu.margin / 5.0 - lu).abs() < 1e-9 && (b.cs.margin / 5.0 - lu).abs() < 1e-9);
}

#[test]
fn seeded_reports_are_bit_identical() {
    let map = system("da3").unwrap();
    let p = InflatabilityParams { samples: 300, grid_resolution: Some(8) };
    let a = check_inflatable(&map, Side::Cu, 2, 5, &p, &params(), 8).unwrap();
    let b = check_inflatable(&map, Side::Cu, 2, 5, &p, &params(), 8).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let c = check_inflatable(&map, Side::Cu, 2, 5, &p, &params(), 9).unwrap();
    assert_ne!(a.lhs.to_bits(), c.lhs.to_bits());
}

#[test]
fn subadditivity_on_nonlinear_map() {
    let map = system("da3").unwrap();
    let series = xi_cap_series(&map, Side::Cu, 2, 10, 12, &params()).unwrap();
    assert_eq!(series[0].value, 0.0);
    let checks = subadditivity(&series, 5);
    assert_eq!(checks.len(), 25);
    assert!(checks.iter().all(|c| c.holds));
}

#[test]
fn too_few_samples_rejected() {
    let map = system("cat2").unwrap();
    let err = check_inflatable(&map, Side::Cu, 1, 5, &InflatabilityParams { samples: 5, grid_resolution: None }, &params(), 0)
        .unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn xi_is_a_cocycle(x in 0.0..1.0f64, y in 0.0..1.0f64, z in 0.0..1.0f64, n in 1usize..8, m in 1usize..8) {
        let map = system("da3").unwrap();
        let p = TorusPoint::new(&[x, y, z]).unwrap();
        let here = estimate_splitting(&map, &p, 2, &params()).unwrap();
        let there = estimate_splitting(&map, &map.iterate(&p, n as i64).unwrap(), 2, &params()).unwrap();
        let joint = xi_n(&map, &here, n + m, Side::Cu).unwrap();
        let split = xi_n(&map, &here, n, Side::Cu).unwrap() + xi_n(&map, &there, m, Side::Cu).unwrap();
        prop_assert!((joint - split).abs() <= 1e-8, "{} vs {}", joint, split);
    }
}

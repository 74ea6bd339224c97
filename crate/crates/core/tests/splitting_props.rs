mod common;

use std::collections::BTreeMap;

use domlab::linalg::grassmann_distance;
use domlab::rng::{Module, SeedStream};
use domlab::splitting::{domination_ratio, estimate_cs, estimate_cu};
use domlab::system::catalog::catalog;
use domlab::{estimate_splitting, system, SplittingParams, TorusPoint};
use proptest::prelude::*;

fn params() -> SplittingParams {
    SplittingParams::default()
}

#[test]
fn linear_bundles_match_eigenvectors() {
    for id in ["cat2", "cat3", "cat3u2", "cat2x2", "cat2xid"] {
        let map = system(id).unwrap();
        let a = common::linear_part(&map);
        let cu = domlab::system::catalog::lookup(id).unwrap().default_cu.unwrap();
        let x = TorusPoint::new(&vec![0.123; map.dim()]).unwrap();
        let f = estimate_splitting(&map, &x, cu, &params()).unwrap();
        let gap_u = common::subspace_gap(&common::to_na(&f.cu_basis), &common::symmetric_bundle(&a, true));
        let gap_s = common::subspace_gap(&common::to_na(&f.cs_basis), &common::symmetric_bundle(&a, false));
        assert!(gap_u < 1e-9 && gap_s < 1e-9, "{id}: {gap_u:e} {gap_s:e}");
    }
}

#[test]
fn bundles_are_invariant() {
    let stream = SeedStream::new(77);
    for entry in catalog() {
        let Some(cu) = entry.default_cu else { continue };
        let map = entry.build(&BTreeMap::new()).unwrap();
        for i in 0..100 {
            let x = stream.uniform_point(Module::Splitting, i, map.dim());
            let here = estimate_cu(&map, &x, cu, &params()).unwrap();
            let there = estimate_cu(&map, &map.evaluate(&x), cu, &params()).unwrap();
            let pushed = map.differential(&x.lift()).mul(&here.basis).qr().unwrap().0;
            let gap = grassmann_distance(&pushed, &there.basis);
            let residual = here.residual.max(there.residual).max(f64::EPSILON);
            assert!(gap <= 10.0 * residual, "{}: gap {gap:e} residual {residual:e}", entry.id);
        }
    }
}

#[test]
fn angle_is_bounded_below() {
    let map = system("da3").unwrap();
    let stream = SeedStream::new(5);
    let min = (0..200)
        .map(|i| estimate_splitting(&map, &stream.uniform_point(Module::Splitting, i, 3), 2, &params()).unwrap().angle)
        .fold(f64::INFINITY, f64::min);
    assert!(min > 0.1, "min angle {min}");
}

#[test]
fn identity_has_no_splitting() {
    let map = system("id2").unwrap();
    let x = TorusPoint::new(&[0.2, 0.3]).unwrap();
    let err = estimate_cu(&map, &x, 1, &params()).unwrap_err();
    assert!(matches!(err, domlab::LabError::NoConvergence { .. }));
}

#[test]
fn domination_ratio_on_cat_map() {
    let cat = system("cat2").unwrap();
    let ev = common::eigen_moduli(&common::linear_part(&cat));
    let f = estimate_splitting(&cat, &TorusPoint::new(&[0.4, 0.1]).unwrap(), 1, &params()).unwrap();
    for n in 1..8 {
        let r = domination_ratio(&cat, &f, n).unwrap();
        let oracle = (ev[1] / ev[0]).powi(n as i32);
        assert!((r / oracle - 1.0).abs() < 1e-8, "n = {n}: {r} vs {oracle}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exchange_symmetry(x in 0.0..1.0f64, y in 0.0..1.0f64, eps in 0.0..0.05f64) {
        let map = domlab::system::catalog::lookup("da2").unwrap().build(&BTreeMap::from([("eps".to_string(), eps)])).unwrap();
        let p = TorusPoint::new(&[x, y]).unwrap();
        let cs = estimate_cs(&map, &p, 1, &params()).unwrap();
        let cu_inv = estimate_cu(&map.inverse(), &p, 1, &params()).unwrap();
        prop_assert!(grassmann_distance(&cs.basis, &cu_inv.basis) <= 1e-12);
        prop_assert!(cs.residual <= 2.0 * cu_inv.residual.max(f64::EPSILON) && cu_inv.residual <= 2.0 * cs.residual.max(f64::EPSILON));
    }

    #[test]
    fn continuity_proxy(x in 0.0..1.0f64, y in 0.0..1.0f64, dx in -7e-4..7e-4f64, dy in -7e-4..7e-4f64) {
        let map = system("da2").unwrap();
        let p = TorusPoint::new(&[x, y]).unwrap();
        let q = p.translate(&domlab::system::Coords::from_slice(&[dx, dy]));
        let a = estimate_cu(&map, &p, 1, &params()).unwrap();
        let b = estimate_cu(&map, &q, 1, &params()).unwrap();
        prop_assert!(grassmann_distance(&a.basis, &b.basis) <= 0.1);
    }

    #[test]
    fn estimates_are_orthonormal(x in 0.0..1.0f64, y in 0.0..1.0f64, z in 0.0..1.0f64) {
        let map = system("da3").unwrap();
        let f = estimate_splitting(&map, &TorusPoint::new(&[x, y, z]).unwrap(), 2, &params()).unwrap();
        let g = common::to_na(&f.cu_basis);
        let gram = g.transpose() * &g;
        prop_assert!((gram - nalgebra::DMatrix::identity(2, 2)).amax() < 1e-12);
        prop_assert!(f.convergence_residual <= params().tolerance);
    }
}

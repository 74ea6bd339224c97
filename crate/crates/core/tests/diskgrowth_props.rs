mod common;

use std::io::BufReader;

use domlab::diskgrowth::mesh_io::{read_mesh, write_mesh, MeshData};
use domlab::diskgrowth::{
    distance_to_boundary, fubini_check, intrinsic_distances, iterate_disk, seed_disk, theta, Disk,
};
use domlab::inflatability::{check_inflatable, InflatabilityParams, Side};
use domlab::{estimate_splitting, system, SplittingParams, TorusPoint};
use proptest::prelude::*;

fn disk(id: &str, cu: usize, point: &[f64], r0: f64, resolution: f64, h_max: f64) -> Disk {
    let map = system(id).unwrap();
    let frame = estimate_splitting(&map, &TorusPoint::new(point).unwrap(), cu, &SplittingParams::default()).unwrap();
    seed_disk(&frame, r0, resolution).unwrap().with_refinement(h_max, 1_000_000)
}

fn edge_list(d: &Disk) -> Vec<(usize, usize, f64)> {
    d.edges().into_iter().map(|(a, b)| (a, b, d.edge_length(a, b))).collect()
}

#[test]
fn dijkstra_matches_brute_force() {
    let map = system("da3").unwrap();
    let d = iterate_disk(&map, &disk("da3", 2, &[0.1, 0.2, 0.3], 0.01, 0.003, 0.01), 2).unwrap();
    let edges = edge_list(&d);
    for source in [0, d.vertex_count() / 2, d.vertex_count() - 1] {
        let ours = intrinsic_distances(&d, source);
        let brute = common::brute_distances(d.vertex_count(), &edges, source);
        for (a, b) in ours.iter().zip(&brute) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + b), "{a} vs {b}");
        }
    }
}

#[test]
fn polyline_distance_is_arclength() {
    let map = system("da2").unwrap();
    let d = iterate_disk(&map, &disk("da2", 1, &[0.4, 0.4], 1e-3, 1e-3, 0.01), 5).unwrap();
    let brute = common::brute_distances(d.vertex_count(), &edge_list(&d), 0);
    let ours = intrinsic_distances(&d, 0);
    for (a, b) in ours.iter().zip(&brute) {
        assert!((a - b).abs() <= 1e-12 * (1.0 + b));
    }
    let to_boundary = distance_to_boundary(&d);
    assert_eq!(to_boundary[0], 0.0);
    assert_eq!(*to_boundary.last().unwrap(), 0.0);
}

#[test]
fn mesh_centre_is_r0_from_the_boundary() {
    let (r0, h) = (0.02, 0.004);
    let d = disk("cat3u2", 2, &[0.5, 0.5, 0.5], r0, h, 0.01);
    let c = d.basepoint().unwrap();
    let dist = distance_to_boundary(&d)[c];
    assert!(dist >= r0 - 1e-12 && dist <= r0 + 2.0 * h, "{dist}");
}

#[test]
fn geometry_constant_stabilises() {
    let map = system("cat3u2").unwrap();
    let mut d = disk("cat3u2", 2, &[0.2, 0.1, 0.7], 0.03, 0.005, 0.01);
    let mut ks = Vec::new();
    for _ in 0..4 {
        d = iterate_disk(&map, &d, 1).unwrap();
        ks.push(fubini_check(&d, 0.05).k_bound);
    }
    let (lo, hi) = ks.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &k| (lo.min(k), hi.max(k)));
    assert!(hi <= 2.0 * lo, "K per generation {ks:?}");
}

#[test]
fn volume_growth_matches_integrated_xi() {
    let p = InflatabilityParams { samples: 500, grid_resolution: Some(8) };
    for (id, cu, point) in [("cat2", 1, vec![0.3, 0.3]), ("da2", 1, vec![0.3, 0.3]), ("cat3u2", 2, vec![0.3, 0.3, 0.3])] {
        let map = system(id).unwrap();
        let n = 20;
        let r0 = if cu == 1 { 1e-9 } else { 1e-10 };
        let seed = disk(id, cu, &point, r0, r0 / 6.0, 0.02);
        let grown = iterate_disk(&map, &seed, n).unwrap();
        let rate = (grown.volume() / seed.volume()).ln() / n as f64;
        let lhs = check_inflatable(&map, Side::Cu, cu, n, &p, &SplittingParams::default(), 3).unwrap().lhs / n as f64;
        assert!((rate - lhs).abs() <= 0.1 * lhs, "{id}: {rate} vs {lhs}");
    }
}

#[test]
fn refinement_is_sound() {
    for (id, cu, point, r0) in [("da2", 1, vec![0.6, 0.2], 1e-4), ("da3", 2, vec![0.6, 0.2, 0.9], 1e-4)] {
        let map = system(id).unwrap();
        let steps = if cu == 1 { 10 } else { 4 };
        let coarse = iterate_disk(&map, &disk(id, cu, &point, r0, r0 / 4.0, 0.02), steps).unwrap();
        let fine = iterate_disk(&map, &disk(id, cu, &point, r0, r0 / 8.0, 0.01), steps).unwrap();
        let rel = (coarse.volume() / fine.volume() - 1.0).abs();
        assert!(rel < 0.01, "{id}: {} vs {}", coarse.volume(), fine.volume());
    }
}

#[test]
fn mesh_round_trip() {
    let map = system("da3").unwrap();
    let d = iterate_disk(&map, &disk("da3", 2, &[0.1, 0.5, 0.9], 0.01, 0.003, 0.01), 2).unwrap();
    let mesh = MeshData::from_disk(&d);
    let mut buf = Vec::new();
    write_mesh(&mesh, &mut buf).unwrap();
    let back = read_mesh(BufReader::new(&buf[..])).unwrap();
    assert_eq!(back.simplices, mesh.simplices);
    assert_eq!(back.boundary, mesh.boundary);
    for (a, b) in back.vertices.iter().zip(&mesh.vertices) {
        assert_eq!(a, b);
    }
    let broken = String::from_utf8(buf).unwrap().replacen("boundary", "edges", 1);
    assert!(read_mesh(BufReader::new(broken.as_bytes())).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fubini_on_random_polylines(x in 0.0..1.0f64, y in 0.0..1.0f64, steps in 0usize..9, delta in 0.01..0.2f64) {
        let map = system("da2").unwrap();
        let d = iterate_disk(&map, &disk("da2", 1, &[x, y], 1e-3, 1e-3, 0.01), steps).unwrap();
        let f = fubini_check(&d, delta);
        prop_assert!(f.identity_holds && f.bound_holds, "{:?}", f);
        let v = theta(&d, delta, 0.5);
        prop_assert!(v.values.iter().all(|t| *t >= 0.0 && *t <= v.boundary_measure));
    }

    #[test]
    fn fubini_on_random_meshes(x in 0.0..1.0f64, y in 0.0..1.0f64, z in 0.0..1.0f64, steps in 0usize..3, delta in 0.01..0.1f64) {
        let map = system("da3").unwrap();
        let d = iterate_disk(&map, &disk("da3", 2, &[x, y, z], 0.01, 0.003, 0.01), steps).unwrap();
        let f = fubini_check(&d, delta);
        prop_assert!(f.relative_gap <= 1e-3 && f.bound_holds, "{:?}", f);
        let manifold_euler = d.vertex_count() as i64 - d.edges().len() as i64 + d.triangles().len() as i64;
        prop_assert_eq!(manifold_euler, 1);
    }
}

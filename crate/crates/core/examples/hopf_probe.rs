//! Birkhoff profiles as an ergodicity probe: one cluster for the cat map,
//! many for the cat map times a circle. Then the transfer of profiles along
//! stable manifolds.

use domlab::hopf::{cluster_components, profiles, stable_candidates, stable_transfer_check, ObservableBank, TransferParams};
use domlab::rng::{Module, SeedStream};
use domlab::{estimate_splitting, system, SplittingParams, TorusPoint};

fn main() -> domlab::Result<()> {
    let stream = SeedStream::new(3);
    for id in ["cat2", "cat2xid"] {
        let map = system(id)?;
        let points: Vec<TorusPoint> = (0..200).map(|i| stream.uniform_point(Module::Hopf, i, map.dim())).collect();
        let profs = profiles(&map, &points, &ObservableBank::default_for(map.dim()), 20_000)?;
        let c = cluster_components(&profs, 0.1)?;
        println!("{id}: {} components, largest fraction {:.2}", c.component_count, c.fractions[0]);
    }

    let map = system("da2")?;
    let params = TransferParams::default();
    let mut pairs = Vec::new();
    for i in 0..10 {
        let x = stream.uniform_point(Module::Hopf, 1000 + i, 2);
        let frame = estimate_splitting(&map, &x, 1, &SplittingParams::default())?;
        for y in stable_candidates(&map, &x, &frame, 4, 1e-3, &params)? {
            pairs.push((x, y));
        }
    }
    let r = stable_transfer_check(&map, &pairs, &ObservableBank::default_for(2), 20_000, &params)?;
    let gap = r.pairs.iter().filter_map(|p| p.profile_gap).fold(0.0, f64::max);
    println!("da2 stable transfer: {}/{} converging pairs within {} (max gap {gap:.2e})", r.passed, r.converging, r.tolerance);
    Ok(())
}

//! Grow an unstable curve of the cat map and watch the good set fill it,
//! then write the final mesh and the series to disk.

use std::fs::File;
use std::io::BufWriter;

use domlab::diskgrowth::mesh_io::{write_mesh, MeshData};
use domlab::diskgrowth::{disk_series, seed_disk, write_series_csv, SeriesParams};
use domlab::{estimate_splitting, system, SplittingParams, TorusPoint};

fn main() -> domlab::Result<()> {
    let cat = system("cat2")?;
    let frame = estimate_splitting(&cat, &TorusPoint::new(&[0.2, 0.7])?, 1, &SplittingParams::default())?;
    let seed = seed_disk(&frame, 1e-3, 1e-3)?.with_refinement(0.01, 1_000_000);
    let (rows, last) = disk_series(&cat, &seed, &SeriesParams::default())?;

    println!("  n  vertices     length  good    median span");
    for r in &rows {
        println!("{:3} {:9} {:10.4} {:6.4} {:8.4}", r.n, r.vertices, r.volume, r.good_fraction, r.span_q50);
    }

    let dir = std::env::temp_dir().join("domlab-balloon");
    std::fs::create_dir_all(&dir)?;
    write_series_csv(&rows, BufWriter::new(File::create(dir.join("disk_series.csv"))?))?;
    write_mesh(&MeshData::from_disk(&last), BufWriter::new(File::create(dir.join("disk_final.mesh"))?))?;
    println!("wrote {}", dir.display());

    // a 2-dimensional unstable disk
    let map = system("cat3u2")?;
    let frame = estimate_splitting(&map, &TorusPoint::new(&[0.1, 0.2, 0.3])?, 2, &SplittingParams::default())?;
    let seed = seed_disk(&frame, 2e-3, 5e-4)?.with_refinement(0.01, 1_000_000);
    let params = SeriesParams { generations: 4, span_samples: 50, ..SeriesParams::default() };
    let (rows, _) = disk_series(&map, &seed, &params)?;
    for r in &rows {
        println!("cat3u2 n={} vertices {} area {:.5} boundary {:.5} fubini gap {:.1e}", r.n, r.vertices, r.volume, r.boundary_measure, r.fubini_gap);
    }
    Ok(())
}

//! Estimate the splitting of the cat map and of its nonlinear perturbation,
//! and fit the domination rate.

use domlab::rng::{Module, SeedStream};
use domlab::splitting::fit_domination;
use domlab::{estimate_splitting, system, SplittingParams};

fn main() -> domlab::Result<()> {
    let params = SplittingParams::default();
    for id in ["cat2", "da2"] {
        let map = system(id)?;
        let stream = SeedStream::new(1);
        let frames = (0..20)
            .map(|i| estimate_splitting(&map, &stream.uniform_point(Module::Splitting, i, 2), 1, &params))
            .collect::<domlab::Result<Vec<_>>>()?;
        let f = &frames[0];
        println!("{id}: at {:?}", f.point.coords());
        println!("  E^cu = {:?}", &f.cu_basis.column(0)[..2]);
        println!("  E^cs = {:?}", &f.cs_basis.column(0)[..2]);
        println!("  angle {:.4} rad, residual {:.1e}", f.angle, f.convergence_residual);
        let fit = fit_domination(&map, &frames, 10)?;
        println!("  domination: tau = {:.6}, C = {:.4}, dominated = {}", fit.tau, fit.c, fit.dominated);
    }
    Ok(())
}

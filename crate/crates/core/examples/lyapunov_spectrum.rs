//! Finite-time exponents on a few catalog maps, and the hyperbolic fraction
//! of the cat map times a circle (which has a neutral direction).

use domlab::lyapunov::{classify_hyperbolic, finite_time_exponents, DEFAULT_MARGIN_THRESHOLD};
use domlab::rng::{Module, SeedStream};
use domlab::system::catalog::lookup;
use domlab::{estimate_splitting, system, SplittingParams};

fn main() -> domlab::Result<()> {
    let params = SplittingParams::default();
    let stream = SeedStream::new(7);
    for id in ["cat2", "cat3u2", "da3", "cat2xid"] {
        let map = system(id)?;
        let cu = lookup(id)?.default_cu.unwrap();
        let mut estimates = Vec::new();
        for i in 0..50 {
            let frame = estimate_splitting(&map, &stream.uniform_point(Module::Lyapunov, i, map.dim()), cu, &params)?;
            estimates.push(finite_time_exponents(&map, &frame, 1000, &params)?);
        }
        let e = &estimates[0];
        println!(
            "{id:8} lambda_cu {:+.6}  lambda_cs {:+.6}  spectrum {:?}  sum {:+.1e}",
            e.lambda_cu,
            e.lambda_cs,
            e.spectrum.iter().map(|v| format!("{v:+.4}")).collect::<Vec<_>>(),
            e.spectrum_sum()
        );
        let class = classify_hyperbolic(&estimates, DEFAULT_MARGIN_THRESHOLD)?;
        println!("         hyperbolic fraction {:.2}", class.hyperbolic_fraction);
    }
    Ok(())
}

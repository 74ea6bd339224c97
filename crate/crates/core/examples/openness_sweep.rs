//! The inflatability margin of the perturbed cat map family as the shear
//! amplitude grows, using the same samples at every amplitude.

use std::collections::BTreeMap;

use domlab::inflatability::{perturbation_sweep, InflatabilityParams, Side};
use domlab::system::catalog::lookup;
use domlab::SplittingParams;

fn main() -> domlab::Result<()> {
    let entry = lookup("da2")?;
    let eps: Vec<f64> = (0..=10).map(|i| 0.002 * i as f64).collect();
    let params = InflatabilityParams { samples: 2000, grid_resolution: None };
    for side in [Side::Cu, Side::Cs] {
        let s = perturbation_sweep(&entry, &BTreeMap::new(), &eps, side, 1, 10, &params, &SplittingParams::default(), 0)?;
        println!("{side:?} side");
        for p in &s.points {
            println!("  eps {:.3}: margin {:.5} +- {:.1e} {}", p.epsilon, p.report.margin, p.report.standard_error, p.report.inflatable);
        }
        println!("  range {:.4}, slope {:+.3}, verdict stable up to {:?}", s.margin_range, s.margin_slope, s.verdict_stable_up_to);
    }
    Ok(())
}

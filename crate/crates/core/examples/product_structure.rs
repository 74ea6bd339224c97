//! Constant cone fields and the disk intersection test, on a linear map and
//! along the perturbed family until the certificate fails.

use std::collections::BTreeMap;

use domlab::productstructure::{disk_intersection_test, fit_constant_cones, DEFAULT_SAFETY_MARGIN};
use domlab::system::catalog::lookup;
use domlab::SplittingParams;

fn main() -> domlab::Result<()> {
    let splitting = SplittingParams::default();
    let cat = lookup("cat2x2")?.build(&BTreeMap::new())?;
    let c = fit_constant_cones(&cat, 2, 6, DEFAULT_SAFETY_MARGIN, &splitting)?;
    let hits = disk_intersection_test(&cat, 2, 0.3, c.admissible_ratio() * 0.3, 200, 1, &splitting)?;
    println!("cat2x2: valid {}, transversality {:.4}, hit rate {}", c.valid, c.transversality_margin, hits.hit_rate);

    let da2 = lookup("da2")?;
    for eps in [0.0, 0.05, 0.1, 0.15, 0.2] {
        let map = da2.build(&BTreeMap::from([("eps".to_string(), eps)]))?;
        let c = fit_constant_cones(&map, 1, 16, 0.05, &splitting)?;
        print!(
            "da2 eps {eps:.2}: cone half-angles {:.3} / {:.3}, transversality {:+.3}, valid {}",
            c.cs.half_angle, c.cu.half_angle, c.transversality_margin, c.valid
        );
        if c.valid {
            let k = 0.3;
            let s = disk_intersection_test(&map, 1, k, c.admissible_ratio() * k, 200, 2, &splitting)?;
            print!(", hit rate {}", s.hit_rate);
        }
        println!();
    }
    Ok(())
}

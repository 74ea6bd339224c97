//! Both sides of the inflatability condition on maps with one- and
//! two-dimensional unstable bundles, plus the growth cap series.

use domlab::inflatability::{check_bi_inflatable, subadditivity, xi_cap_series, InflatabilityParams, Side};
use domlab::{system, SplittingParams};

fn main() -> domlab::Result<()> {
    let params = InflatabilityParams { samples: 2000, grid_resolution: Some(16) };
    let splitting = SplittingParams::default();
    for (id, cu) in [("cat2", 1), ("cat3u2", 2), ("da3", 2), ("cat2xid", 1)] {
        let map = system(id)?;
        let both = check_bi_inflatable(&map, cu, 10, 10, &params, &splitting, 42)?;
        for r in [&both.cs, &both.cu] {
            println!(
                "{id:8} {:?}: lhs {:9.5}  rhs {:9.5}  margin {:+.5} +- {:.1e}  inflatable {}",
                r.side, r.lhs, r.rhs, r.margin, r.standard_error, r.inflatable
            );
        }
    }

    let da3 = system("da3")?;
    let series = xi_cap_series(&da3, Side::Cu, 2, 8, 16, &splitting)?;
    for x in &series {
        println!("Xi_{} = {:.5} (grid modulus {:.1e})", x.horizon, x.value, x.grid_modulus);
    }
    let worst = subadditivity(&series, 4).into_iter().map(|c| c.xi_sum + c.tolerance - c.xi_joint).fold(f64::INFINITY, f64::min);
    println!("sub-additivity slack >= {worst:.2e}");
    Ok(())
}

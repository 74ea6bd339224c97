//! Drive the command pipelines from code: build a config, run two commands
//! and read back the reports.

use domlab::cli::{run, Command, RunConfig};

fn main() -> domlab::Result<()> {
    let mut cfg = RunConfig::from_json(
        r#"{
            "system": { "id": "da3" },
            "seed": 11,
            "lyapunov": { "horizon": 500, "points": 50 },
            "inflatability": { "horizons": [5, 10], "samples": 1000, "grid_resolution": 12 },
            "hopf": { "points": 50, "horizon": 5000, "pairs": 5 }
        }"#,
    )?;
    cfg.output_dir = std::env::temp_dir().join("domlab-run-config");
    for command in [Command::Analyze, Command::ProductStructure] {
        let report = run(command, &cfg)?;
        println!("{}: {:?}", report.command, report.verdicts);
        println!("  files {:?}", report.files);
    }
    Ok(())
}

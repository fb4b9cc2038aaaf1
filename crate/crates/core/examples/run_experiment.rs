//! Drives an experiment through the library API, as the command-line
//! runner does, and prints its CSV and checks.

use skorohod::experiments::{run, Experiment, ExperimentConfig};

fn main() -> skorohod::Result<()> {
    let mut config = ExperimentConfig::new(Experiment::Martingale);
    config.apply_text("N = 8\nseed = 3\n")?;
    let report = run(&config)?;
    print!("{}", report.csv);
    print!("{}", report.summary());
    Ok(())
}

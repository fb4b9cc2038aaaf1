use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use skorohod::experiments::{run, Experiment, ExperimentConfig};

const SCHEMAS: &str = "CSV schemas (after the `# key=value` config echo):
  geometry    M,t,samples,covered,disjoint,violations
  isometry    n,m,exact,estimate,std_error,z
  martingale  integrand,N,max_defect
  theorem1    depth,vhat,sobolev_bound,max_path_gap
  ducnualart  statistic,t,value
  reversal    N,t,statistic,value,std_error
  stopping    rule,test_variable,n_paths,estimate,std_error,z

Settings are layered: experiment defaults, then --config (key=value lines,
keys are the flag names), then flags. Exit status is 0 only when every
check of the run passes.";

/// Runs one experiment and writes its CSV table.
#[derive(Parser, Debug)]
#[command(name = "skorohod-lab", version, after_long_help = SCHEMAS)]
struct Cli {
    /// geometry | isometry | martingale | theorem1 | ducnualart | reversal | stopping
    experiment: String,
    /// Grid size (power of two, at most 64).
    #[arg(long = "N")]
    n_cells: Option<usize>,
    /// Chaos order cap (at most 4).
    #[arg(long = "L")]
    order_cap: Option<usize>,
    /// Dimension of the region geometry.
    #[arg(long = "M")]
    dim: Option<usize>,
    /// Split time of the region geometry.
    #[arg(long)]
    t: Option<f64>,
    /// Sample points, or the secondary path count.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Dyadic partition depth.
    #[arg(long)]
    depth: Option<usize>,
    /// Hermite order for `reversal`.
    #[arg(long)]
    n: Option<usize>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn configure(cli: &Cli) -> skorohod::Result<ExperimentConfig> {
    let mut c = ExperimentConfig::new(cli.experiment.parse::<Experiment>()?);
    if let Some(path) = &cli.config {
        c.apply_file(path)?;
    }
    let flags = [
        ("N", cli.n_cells.map(|v| v.to_string())),
        ("L", cli.order_cap.map(|v| v.to_string())),
        ("M", cli.dim.map(|v| v.to_string())),
        ("t", cli.t.map(|v| v.to_string())),
        ("samples", cli.samples.map(|v| v.to_string())),
        ("paths", cli.paths.map(|v| v.to_string())),
        ("seed", cli.seed.map(|v| v.to_string())),
        ("depth", cli.depth.map(|v| v.to_string())),
        ("n", cli.n.map(|v| v.to_string())),
        ("workers", cli.workers.map(|v| v.to_string())),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            c.apply(key, &v)?;
        }
    }
    if let Some(out) = &cli.out {
        c.out = Some(out.clone());
    }
    Ok(c)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let report = match configure(&cli).and_then(|c| run(&c).map(|r| (c, r))) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let (config, report) = report;
    if config.out.is_none() {
        print!("{}", report.csv);
    }
    eprint!("{}", report.summary());
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

//! Reproducible experiment runs that emit CSV tables and pass/fail checks.
//!
//! Every table starts with `#`-prefixed `key=value` lines echoing the
//! configuration, then a header row. Floats use 17 significant digits.
//! Results do not depend on the worker count: batches are reduced in path
//! order.

mod runs;

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{contract, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    Geometry,
    Isometry,
    Martingale,
    Theorem1,
    Ducnualart,
    Reversal,
    Stopping,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Geometry,
        Experiment::Isometry,
        Experiment::Martingale,
        Experiment::Theorem1,
        Experiment::Ducnualart,
        Experiment::Reversal,
        Experiment::Stopping,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Geometry => "geometry",
            Experiment::Isometry => "isometry",
            Experiment::Martingale => "martingale",
            Experiment::Theorem1 => "theorem1",
            Experiment::Ducnualart => "ducnualart",
            Experiment::Reversal => "reversal",
            Experiment::Stopping => "stopping",
        }
    }

    /// Column layout of the CSV body.
    pub fn columns(self) -> &'static str {
        match self {
            Experiment::Geometry => "M,t,samples,covered,disjoint,violations",
            Experiment::Isometry => "n,m,exact,estimate,std_error,z",
            Experiment::Martingale => "integrand,N,max_defect",
            Experiment::Theorem1 => "depth,vhat,sobolev_bound,max_path_gap",
            Experiment::Ducnualart => "statistic,t,value",
            Experiment::Reversal => "N,t,statistic,value,std_error",
            Experiment::Stopping => "rule,test_variable,n_paths,estimate,std_error,z",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| contract(format!("unknown experiment `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Grid size `N`.
    pub n_cells: usize,
    /// Chaos order cap `L`.
    pub order_cap: usize,
    /// Dimension `M` of the region geometry.
    pub dim: usize,
    /// Split time of the region geometry.
    pub t: f64,
    /// Sample points (geometry) or secondary path count.
    pub samples: usize,
    pub paths: usize,
    pub seed: u64,
    pub depth: usize,
    /// Hermite order for the reversal run.
    pub n: usize,
    /// Rayon workers; 0 uses the global pool. Not echoed.
    pub workers: usize,
    /// Where to write the CSV. Not echoed.
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    /// The defaults of `experiment`, sized for the acceptance runs.
    pub fn new(experiment: Experiment) -> Self {
        let mut c = ExperimentConfig {
            experiment,
            n_cells: 16,
            order_cap: 2,
            dim: 3,
            t: 0.25,
            samples: 1000,
            paths: 100,
            seed: 1,
            depth: 4,
            n: 3,
            workers: 0,
            out: None,
        };
        match experiment {
            Experiment::Geometry => {}
            Experiment::Isometry => {
                c.n_cells = 8;
                c.order_cap = 3;
                c.paths = 100_000;
            }
            Experiment::Martingale | Experiment::Theorem1 => {}
            Experiment::Ducnualart => {
                c.n_cells = 32;
                c.order_cap = 3;
            }
            Experiment::Reversal => {
                c.n_cells = 8;
                c.samples = 10_000;
            }
            Experiment::Stopping => {
                c.n_cells = 32;
                c.paths = 100_000;
                c.samples = 100;
            }
        }
        c
    }

    /// Sets one `key=value` setting; keys are the long flag names.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value.trim().parse().map_err(|_| contract(format!("bad value `{value}` for `{key}`")))
        }
        match key.trim() {
            "N" => self.n_cells = num(key, value)?,
            "L" => self.order_cap = num(key, value)?,
            "M" => self.dim = num(key, value)?,
            "t" => self.t = num(key, value)?,
            "samples" => self.samples = num(key, value)?,
            "paths" => self.paths = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "depth" => self.depth = num(key, value)?,
            "n" => self.n = num(key, value)?,
            "workers" => self.workers = num(key, value)?,
            "out" => self.out = Some(PathBuf::from(value.trim())),
            other => return Err(contract(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Applies a line-oriented `key=value` file; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| Error::Parse { line: i + 1, msg: format!("expected key=value, got `{line}`") })?;
            self.apply(key, value).map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        self.apply_text(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_cells;
        if !n.is_power_of_two() || !(2..=64).contains(&n) {
            return Err(contract(format!("N must be a power of two in 2..=64, got {n}")));
        }
        if !(1..=4).contains(&self.order_cap) {
            return Err(contract(format!("L must lie in 1..=4, got {}", self.order_cap)));
        }
        if self.paths < 2 || self.samples < 2 {
            return Err(contract("paths and samples must both be at least 2"));
        }
        match self.experiment {
            Experiment::Geometry => {
                if !(1..=8).contains(&self.dim) {
                    return Err(contract(format!("M must lie in 1..=8, got {}", self.dim)));
                }
                if !(self.t > 0.0 && self.t < 1.0) {
                    return Err(contract(format!("t must lie in (0, 1), got {}", self.t)));
                }
            }
            Experiment::Theorem1 if self.depth == 0 || self.depth > n.trailing_zeros() as usize => {
                return Err(contract(format!("theorem1 needs depth in 1..=log2(N), got {}", self.depth)));
            }
            Experiment::Reversal if !(1..=4).contains(&self.n) => {
                return Err(contract(format!("n must lie in 1..=4, got {}", self.n)));
            }
            _ => {}
        }
        Ok(())
    }

    /// The `#` comment block echoed at the top of every table.
    pub fn echo(&self) -> String {
        let e = self.experiment;
        let mut s = format!("# experiment={e}\n");
        let mut line = |k: &str, v: String| {
            let _ = writeln!(s, "# {k}={v}");
        };
        match e {
            Experiment::Geometry => {
                line("M", self.dim.to_string());
                line("t", self.t.to_string());
                line("samples", self.samples.to_string());
            }
            _ => {
                line("N", self.n_cells.to_string());
                line("L", self.order_cap.to_string());
                line("depth", self.depth.to_string());
                line("n", self.n.to_string());
                line("paths", self.paths.to_string());
                line("samples", self.samples.to_string());
            }
        }
        line("seed", self.seed.to_string());
        s
    }
}

/// One named assertion of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub experiment: Experiment,
    pub csv: String,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let _ = writeln!(s, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        s
    }
}

/// Accumulates the CSV body and the checks of a run.
pub(crate) struct Table {
    csv: String,
    checks: Vec<Check>,
}

impl Table {
    fn new(config: &ExperimentConfig) -> Self {
        let mut csv = config.echo();
        csv.push_str(config.experiment.columns());
        csv.push('\n');
        Table { csv, checks: Vec::new() }
    }

    pub(crate) fn row(&mut self, fields: &[String]) {
        self.csv.push_str(&fields.join(","));
        self.csv.push('\n');
    }

    pub(crate) fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check { name: name.into(), passed, detail });
    }
}

/// Fixed 17-significant-digit float field.
pub(crate) fn fl(x: f64) -> String {
    format!("{x:.16e}")
}

/// Runs one experiment on a pool of `config.workers` threads and writes the
/// CSV to `config.out` when set.
pub fn run(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    let body = || -> Result<Report> {
        let mut table = Table::new(config);
        match config.experiment {
            Experiment::Geometry => runs::geometry(config, &mut table)?,
            Experiment::Isometry => runs::isometry(config, &mut table)?,
            Experiment::Martingale => runs::martingale(config, &mut table)?,
            Experiment::Theorem1 => runs::theorem1(config, &mut table)?,
            Experiment::Ducnualart => runs::ducnualart(config, &mut table)?,
            Experiment::Reversal => runs::reversal(config, &mut table)?,
            Experiment::Stopping => runs::stopping(config, &mut table)?,
        }
        Ok(Report { experiment: config.experiment, csv: table.csv, checks: table.checks })
    };
    let report = if config.workers == 0 {
        body()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| contract(format!("cannot build a pool of {} workers: {e}", config.workers)))?
            .install(body)?
    };
    if let Some(path) = &config.out {
        fs::write(path, &report.csv)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_layers() {
        let mut c = ExperimentConfig::new(Experiment::Theorem1);
        c.apply_text("# comment\nN = 8\nseed=5 # trailing\n\n").unwrap();
        assert_eq!((c.n_cells, c.seed), (8, 5));
        assert!(c.apply_text("N 8").is_err());
        assert!(c.apply("bogus", "1").is_err());
        assert!(c.apply("N", "x").is_err());
        c.depth = 4;
        assert!(c.validate().is_err());
        c.depth = 3;
        c.validate().unwrap();
        c.n_cells = 12;
        assert!(c.validate().is_err());
        c.n_cells = 128;
        assert!(c.validate().is_err());
        c.n_cells = 8;
        c.order_cap = 5;
        assert!(c.validate().is_err());
    }

    #[test]
    fn experiment_names_roundtrip() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
        assert!("nope".parse::<Experiment>().is_err());
    }

    #[test]
    fn echo_excludes_execution_settings() {
        let mut c = ExperimentConfig::new(Experiment::Martingale);
        let before = c.echo();
        c.workers = 4;
        c.out = Some("x.csv".into());
        assert_eq!(c.echo(), before);
        assert!(before.starts_with("# experiment=martingale\n"));
    }
}

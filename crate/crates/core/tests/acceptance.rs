//! The acceptance suite: ten criteria at their stated tolerances and time
//! budgets, one PASS/FAIL line each. Run with
//! `cargo test -p skorohod --test acceptance -- --nocapture`.

use std::time::{Duration, Instant};

use skorohod::experiments::{run, Experiment, ExperimentConfig, Report};
use skorohod::reversal::{backward_ito_gap, hermite_projection};
use skorohod::skorohod::{duc_nualart_extract, majoration_check, martingale_defect, skorohod_process, step_approximation};
use skorohod::stopping::{step_values, stopped_integral_with, GridStoppingTime};
use skorohod::{
    grid::verify_partition_properties, reverse_path, sample_paths, sample_uniform_points, ChaosFunctional,
    ChaosProcess, Grid, Partition, StepFunction, SymKernel,
};

struct Outcome {
    passed: bool,
    detail: String,
}

fn criterion(id: usize, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let in_time = elapsed <= budget;
    let passed = out.passed && in_time;
    println!(
        "{} criterion {id} ({name}): {} [{:.2} s of {} s]",
        if passed { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    passed
}

fn report_outcome(r: &Report, names: &[&str]) -> Outcome {
    let chosen: Vec<_> = r.checks.iter().filter(|c| names.iter().any(|n| c.name.starts_with(n))).collect();
    let passed = !chosen.is_empty() && chosen.iter().all(|c| c.passed);
    let detail = chosen
        .iter()
        .map(|c| format!("{}{}: {}", if c.passed { "" } else { "FAILED " }, c.name, c.detail))
        .collect::<Vec<_>>()
        .join("; ");
    Outcome { passed, detail }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn geometry() -> Outcome {
    let mut bad = Vec::new();
    for dim in 1..=4 {
        for t in [0.25, 0.5] {
            let points = sample_uniform_points(dim, 1000, dim as u64);
            let r = verify_partition_properties(dim, t, &points).unwrap();
            if !(r.covered && r.disjoint && r.violations == 0) {
                bad.push(format!("M={dim} t={t}: {r:?}"));
            }
        }
    }
    Outcome { passed: bad.is_empty(), detail: format!("8 configurations x 1000 points, failures {bad:?}") }
}

fn martingale() -> Outcome {
    let g = Grid::new(16).unwrap();
    let x1 = ChaosProcess::terminal_value(g);
    let xa = ChaosProcess::brownian(g);
    let integrands = [ChaosProcess::deterministic(g, 1.0), x1.clone(), xa.clone(), x1.add(&xa).unwrap()];
    let mut worst = 0.0f64;
    for u in &integrands {
        let y = skorohod_process(u).unwrap();
        for s in 0..=16 {
            for t in s + 1..=16 {
                worst = worst.max(martingale_defect(&y, s, t).unwrap().max_abs());
            }
        }
    }
    Outcome { passed: worst <= 1e-12, detail: format!("max defect entry {worst:.3e} over 4 integrands, all s < t") }
}

fn duc_nualart() -> Outcome {
    let g = Grid::new(32).unwrap();
    let mut us = vec![
        ChaosProcess::terminal_value(g),
        ChaosProcess::terminal_value(g).add(&ChaosProcess::brownian(g)).unwrap(),
    ];
    us.extend((1..=2).map(|seed| ChaosProcess::random(g, 2, seed).unwrap()));
    let mut residual = 0.0f64;
    let mut margins = Vec::new();
    for u in &us {
        let kernels = duc_nualart_extract(u).unwrap();
        let y = skorohod_process(u).unwrap();
        for k in 0..=32 {
            residual = residual.max(kernels.resynthesize(k).unwrap().max_abs_diff(y.at(k).unwrap()).unwrap());
        }
        let m = majoration_check(u).unwrap();
        margins.push(m.lhs / m.vhat);
    }
    let worst = margins.iter().copied().fold(0.0, f64::max);
    Outcome {
        passed: residual <= 1e-12 && worst <= 1.05,
        detail: format!("resynthesis residual {residual:.3e}, max lhs/vhat {worst:.4}"),
    }
}

fn reversal_identities() -> Outcome {
    let g = Grid::new(8).unwrap();
    let batch = sample_paths(g, 100, 6).unwrap();
    let f = skorohod::process::random_functional_seeded(g, 3, 6).unwrap();
    let f_rev = f.reverse();
    let mut lemma = 0.0f64;
    let mut herm = 0.0f64;
    let h = StepFunction::constant(g, 1.0);
    for p in batch.paths() {
        lemma = lemma.max((f.eval(p).unwrap() - f_rev.eval(&reverse_path(p)).unwrap()).abs());
        for n in 1..=3 {
            for k in 1..8 {
                let s = hermite_projection(n, &h, k, p).unwrap();
                herm = herm.max((s.lhs - s.rhs.unwrap()).abs());
            }
        }
    }
    let gaps: Vec<f64> = [8, 16, 32]
        .into_iter()
        .map(|n| {
            let g = Grid::new(n).unwrap();
            let square = ChaosFunctional::from_kernel(SymKernel::constant(g, 2, 1.0).unwrap()).unwrap();
            backward_ito_gap(&square, n / 2).unwrap()
        })
        .collect();
    let ratios: Vec<f64> = gaps.windows(2).map(|w| w[0] / w[1]).collect();
    Outcome {
        passed: lemma <= 1e-10 && herm <= 1e-10 && ratios.iter().all(|r| (1.6..=2.6).contains(r)),
        detail: format!("reversal residual {lemma:.3e}, hermite residual {herm:.3e}, gap ratios {ratios:?}"),
    }
}

fn stopped_integral() -> Outcome {
    let g = Grid::new(8).unwrap();
    let paths = sample_paths(g, 100, 9).unwrap();
    let x1 = ChaosProcess::terminal_value(g);
    let xa = ChaosProcess::brownian(g);
    let integrands = [ChaosProcess::deterministic(g, 1.0), x1.clone(), xa.clone(), x1.add(&xa).unwrap()];
    let mut worst = 0.0f64;
    let mut cases = 0;
    for depth in 1..=3 {
        let pi = Partition::dyadic(g, depth).unwrap();
        for u in &integrands {
            let step = step_approximation(u, &pi).unwrap();
            let values = step_values(&step, &pi).unwrap();
            let y = skorohod_process(&step).unwrap();
            for tau in GridStoppingTime::shipped(g).unwrap() {
                cases += 1;
                for p in paths.paths() {
                    worst = worst.max(stopped_integral_with(&values, &pi, &y, &tau, p).unwrap().residual());
                }
            }
        }
    }
    Outcome { passed: worst <= 1e-10, detail: format!("max |lhs - rhs| {worst:.3e} over {cases} rule x integrand cases") }
}

fn config(e: Experiment, workers: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(e);
    c.workers = workers;
    c
}

#[test]
fn acceptance() {
    let mut results = Vec::new();
    results.push(criterion(1, "region geometry", secs(1), geometry));

    let mut isometry = None;
    results.push(criterion(2, "chaos isometry", secs(10), || {
        let r = run(&config(Experiment::Isometry, 0)).unwrap();
        let o = report_outcome(&r, &["isometry"]);
        isometry = Some(r);
        o
    }));

    results.push(criterion(3, "martingale-type property", secs(1), martingale));
    results.push(criterion(4, "Duc-Nualart representation", secs(5), duc_nualart));

    results.push(criterion(5, "forward-backward convergence", secs(30), || {
        report_outcome(&run(&config(Experiment::Theorem1, 0)).unwrap(), &["theorem1"])
    }));

    results.push(criterion(6, "reversal identities", secs(30), reversal_identities));

    let mut reversal = None;
    results.push(criterion(7, "semimartingale decomposition", secs(60), || {
        let r = run(&config(Experiment::Reversal, 0)).unwrap();
        let o = report_outcome(&r, &["decomposition", "bracket"]);
        reversal = Some(r);
        o
    }));

    let mut stopping = None;
    results.push(criterion(8, "optional sampling", secs(30), || {
        let r = run(&config(Experiment::Stopping, 0)).unwrap();
        let o = report_outcome(&r, &["optional sampling"]);
        stopping = Some(r);
        o
    }));

    results.push(criterion(9, "stopped integral", secs(5), stopped_integral));

    results.push(criterion(10, "determinism across workers", secs(600), || {
        let mut differing = Vec::new();
        let baselines = [(Experiment::Isometry, &isometry), (Experiment::Reversal, &reversal), (Experiment::Stopping, &stopping)];
        let mut baseline = true;
        for (e, first) in baselines {
            let one = run(&config(e, 1)).unwrap().csv;
            let four = run(&config(e, 4)).unwrap().csv;
            if one != four {
                differing.push(e.name());
            }
            baseline &= first.as_ref().is_some_and(|r| r.csv == one);
        }
        Outcome {
            passed: differing.is_empty() && baseline,
            detail: format!("1 vs 4 workers differing: {differing:?}; default pool matches: {baseline}"),
        }
    }));

    let failed: Vec<usize> = results.iter().enumerate().filter(|(_, p)| !**p).map(|(i, _)| i + 1).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

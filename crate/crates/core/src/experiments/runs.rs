use crate::bf::{bf_eval, theorem1_construct};
use crate::chaos::{ChaosFunctional, HermiteTable};
use crate::error::{contract, Result};
use crate::grid::{verify_partition_properties, Grid, Partition};
use crate::kernel::SymKernel;
use crate::multiset::factorial;
use crate::paths::{partial_sums, reverse_path, sample_paths, sample_uniform_points, StepFunction};
use crate::process::{random_functional_seeded, ChaosProcess};
use crate::reversal::{
    backward_ito_gap, backward_process, decomposition_batch, hermite_projection, quadratic_covariation,
    reversed_martingale_eval, tail_expectation, DecompositionSpec,
};
use crate::skorohod::{
    convergence_row, duc_nualart_extract, ito_skorohod_process, majoration_check, max_martingale_defect,
    skorohod_process, step_approximation, tudor_representation,
};
use crate::stopping::{
    default_test_variables, optional_sampling_check, step_values, stopped_integral_with,
    uniform_integrability_surrogate, GridStoppingTime, StoppingRule,
};

use super::{fl, ExperimentConfig, Table};

/// Sample mean and its standard error, summed in order.
fn mean_se(xs: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

fn max_of(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(0.0, f64::max)
}

/// The integrands `1, X_1, X_α, X_1 + X_α`.
fn basic_integrands(grid: Grid) -> Result<Vec<(&'static str, ChaosProcess)>> {
    let x1 = ChaosProcess::terminal_value(grid);
    let xa = ChaosProcess::brownian(grid);
    Ok(vec![
        ("1", ChaosProcess::deterministic(grid, 1.0)),
        ("X_1", x1.clone()),
        ("X_alpha", xa.clone()),
        ("X_1+X_alpha", x1.add(&xa)?),
    ])
}

pub(super) fn geometry(c: &ExperimentConfig, table: &mut Table) -> Result<()> {
    let points = sample_uniform_points(c.dim, c.samples, c.seed);
    let r = verify_partition_properties(c.dim, c.t, &points)?;
    table.row(&[
        c.dim.to_string(),
        fl(c.t),
        c.samples.to_string(),
        r.covered.to_string(),
        r.disjoint.to_string(),
        r.violations.to_string(),
    ]);
    table.check(
        "geometry",
        r.covered && r.disjoint && r.violations == 0,
        format!("M={} t={} covered={} disjoint={} violations={}", c.dim, c.t, r.covered, r.disjoint, r.violations),
    );
    Ok(())
}

pub(super) fn isometry(c: &ExperimentConfig, table: &mut Table) -> Result<()> {
    let grid = Grid::new(c.n_cells)?;
    let l = c.order_cap;
    let f = random_functional_seeded(grid, l, c.seed)?;
    let g = random_functional_seeded(grid, l, c.seed.wrapping_add(1))?;
    let batch = sample_paths(grid, c.paths, c.seed)?;
    let per_path = batch
        .map(|path| -> Result<Vec<f64>> {
            let table = HermiteTable::new(grid, path, l)?;
            Ok(f.kernels().iter().chain(g.kernels()).map(|k| table.integral(k)).collect())
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut worst = 0.0f64;
    for n in 1..=l {
        for m in 1..=l {
            let (fk, gk) = (&f.kernels()[n - 1], &g.kernels()[m - 1]);
            let exact = if n == m { factorial(n) * fk.inner(gk)? } else { 0.0 };
            let products: Vec<f64> = per_path.iter().map(|v| v[n - 1] * v[l + m - 1]).collect();
            let (est, se) = mean_se(&products);
            let z = (est - exact) / se;
            worst = worst.max(z.abs());
            table.row(&[n.to_string(), m.to_string(), fl(exact), fl(est), fl(se), fl(z)]);
        }
    }
    table.check("isometry", worst <= 3.0, format!("max |z| = {worst:.3} over {} paths", c.paths));
    Ok(())
}

pub(super) fn martingale(c: &ExperimentConfig, table: &mut Table) -> Result<()> {
    let grid = Grid::new(c.n_cells)?;
    let mut worst = 0.0f64;
    for (name, u) in basic_integrands(grid)? {
        let d = max_martingale_defect(&skorohod_process(&u)?)?;
        worst = worst.max(d);
        table.row(&[name.into(), c.n_cells.to_string(), fl(d)]);
    }
    table.check("martingale", worst <= 1e-12, format!("max defect kernel entry {worst:.3e}"));
    Ok(())
}

pub(super) fn theorem1(c: &ExperimentConfig, table: &mut Table) -> Result<()> {
    let grid = Grid::new(c.n_cells)?;
    let u = ChaosProcess::terminal_value(grid).add(&ChaosProcess::brownian(grid))?;
    if u.order() + 1 > c.order_cap {
        return Err(contract(format!("the integrand gives chaos order {} > L = {}", u.order() + 1, c.order_cap)));
    }
    let v = tudor_representation(&u)?;
    let batch = sample_paths(grid, c.paths, c.seed)?;
    let mut rows = Vec::new();
    let mut gap = 0.0f64;
    for depth in 1..=c.depth {
        let row = convergence_row(&u, depth)?;
        let pi = Partition::dyadic(grid, depth)?;
        let z = theorem1_construct(&u, &pi)?;
        let y_pi = ito_skorohod_process(&step_approximation(&v, &pi)?)?;
        let gaps = batch
            .map(|path| -> Result<f64> {
                let y = y_pi.eval(path)?;
                let mut m = 0.0f64;
                for (k, yk) in y.iter().enumerate() {
                    m = m.max((bf_eval(&z, k, path)? - yk).abs());
                }
                Ok(m)
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let depth_gap = max_of(gaps);
        gap = gap.max(depth_gap);
        table.row(&[depth.to_string(), fl(row.vhat), fl(row.bound), fl(depth_gap)]);
        rows.push(row);
    }
    table.check("theorem1 exact split", gap <= 1e-10, format!("max |Z - Y^pi| = {gap:.3e}"));
    let decreasing = rows.windows(2).all(|w| w[1].vhat < w[0].vhat);
    table.check("theorem1 decreasing", decreasing, format!("vhat by depth {:?}", rows.iter().map(|r| r.vhat).collect::<Vec<_>>()));
    let bounded = rows.iter().all(|r| r.vhat <= r.bound);
    table.check("theorem1 bound", bounded, format!("bound by depth {:?}", rows.iter().map(|r| r.bound).collect::<Vec<_>>()));
    let (first, last) = (rows[0].vhat, rows[rows.len() - 1].vhat);
    table.check("theorem1 reduction", last <= 0.1 * first, format!("final/initial = {:.4}", last / first));
    Ok(())
}

pub(super) fn ducnualart(c: &ExperimentConfig, table: &mut Table) -> Result<()> {
    let grid = Grid::new(c.n_cells)?;
    let u = ChaosProcess::random(grid, c.order_cap - 1, c.seed)?;
    let kernels = duc_nualart_extract(&u)?;
    let y = skorohod_process(&u)?;
    let mut worst = 0.0f64;
    for k in 0..=grid.n_cells() {
        let r = kernels.resynthesize(k)?.max_abs_diff(y.at(k)?)?;
        worst = worst.max(r);
        table.row(&["resynthesis_residual".into(), fl(grid.time(k)), fl(r)]);
    }
    let m = majoration_check(&u)?;
    table.row(&["majoration_lhs".into(), String::new(), fl(m.lhs)]);
    table.row(&["vhat".into(), String::new(), fl(m.vhat)]);
    table.check("ducnualart resynthesis", worst <= 1e-12, format!("max kernel residual {worst:.3e}"));
    table.check("ducnualart majoration", m.lhs <= 1.05 * m.vhat, format!("lhs {:.6} vs vhat {:.6}", m.lhs, m.vhat));
    Ok(())
}

pub(super) fn reversal(c: &ExperimentConfig, table: &mut Table) -> Result<()> {
    let n = c.n_cells;
    let grid = Grid::new(n)?;
    let batch = sample_paths(grid, c.paths, c.seed)?;
    let f = random_functional_seeded(grid, c.order_cap, c.seed)?;
    let exact = |table: &mut Table, name: &str, value: f64| {
        table.row(&[n.to_string(), String::new(), name.into(), fl(value), String::new()]);
    };

    let f_rev = f.reverse();
    let lemma9 = max_of(
        batch
            .map(|p| -> Result<f64> { Ok((f.eval(p)? - f_rev.eval(&reverse_path(p))?).abs()) })
            .into_iter()
            .collect::<Result<Vec<_>>>()?,
    );
    exact(table, "reversal_max_residual", lemma9);
    table.check("reversed expansion", lemma9 <= 1e-10, format!("max residual {lemma9:.3e}"));

    let mut sigma = 0.0f64;
    for k in 0..=n {
        let lhs = tail_expectation(&f, k)?.reverse();
        let rhs = f_rev.retain_cells(|c| c < n - k);
        sigma = sigma.max(lhs.max_abs_diff(&rhs)?);
    }
    exact(table, "sigma_field_max_residual", sigma);
    table.check("tail sigma-field", sigma == 0.0, format!("max kernel residual {sigma:.3e}"));

    let y = backward_process(&f)?;
    let mart = max_of(
        batch
            .map(|p| -> Result<f64> {
                let ys = y.eval(p)?;
                (0..=n).try_fold(0.0f64, |m, k| Ok(m.max((reversed_martingale_eval(&f, k, p)? - ys[k]).abs())))
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?,
    );
    exact(table, "reversed_martingale_max_residual", mart);
    table.check("reversed martingale form", mart <= 1e-10, format!("max residual {mart:.3e}"));

    let ramp_raw = StepFunction::new(grid, (0..n).map(|c| 1.0 + c as f64 / n as f64).collect())?;
    let ramp = ramp_raw.scale(1.0 / ramp_raw.norm());
    for order in 1..=c.n {
        let mut worst = 0.0f64;
        for h in [StepFunction::constant(grid, 1.0), ramp.clone()] {
            let r = batch
                .map(|p| -> Result<f64> {
                    (1..n).try_fold(0.0f64, |m, k| {
                        let s = hermite_projection(order, &h, k, p)?;
                        Ok(m.max((s.lhs - s.rhs.unwrap_or(s.lhs)).abs()))
                    })
                })
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            worst = worst.max(max_of(r));
        }
        exact(table, &format!("hermite_n{order}_max_residual"), worst);
        table.check(&format!("hermite n={order}"), worst <= 1e-10, format!("max residual {worst:.3e}"));
    }

    let mut gaps = Vec::new();
    for scale in [1, 2, 4] {
        let g = Grid::new(n * scale)?;
        let square = ChaosFunctional::from_kernel(SymKernel::constant(g, 2, 1.0)?)?;
        let gap = backward_ito_gap(&square, g.n_cells() / 2)?;
        table.row(&[g.n_cells().to_string(), fl(0.5), "ito_sum_gap".into(), fl(gap), String::new()]);
        gaps.push(gap);
    }
    let ratios: Vec<f64> = gaps.windows(2).map(|w| w[0] / w[1]).collect();
    table.check(
        "backward Ito sum rate",
        ratios.iter().all(|r| (1.6..=2.6).contains(r)),
        format!("halving ratios {ratios:?}"),
    );

    let phi = |_s: f64, x: &[f64]| 2.0 * x[0];
    let mut rms = Vec::new();
    let mut bracket_worst = 0.0f64;
    for (i, scale) in [8, 16, 32].into_iter().enumerate() {
        let g = Grid::new(n * scale)?;
        let ne = g.n_cells();
        let spec = DecompositionSpec {
            f: ChaosFunctional::from_kernel(SymKernel::constant(g, 2, 1.0)?)?,
            phi: &phi,
            g: vec![StepFunction::constant(g, 1.0)],
            c1: true,
        };
        let paths = sample_paths(g, c.samples, c.seed)?;
        let sq: Vec<f64> = decomposition_batch(&spec, &paths, ne / 2)?.iter().map(|d| d.residual.powi(2)).collect();
        let (ms, ms_se) = mean_se(&sq);
        let r = ms.sqrt();
        table.row(&[ne.to_string(), fl(0.5), "decomposition_residual_rms".into(), fl(r), fl(ms_se / (2.0 * r))]);
        rms.push(r);
        if i == 2 {
            let curves = paths
                .map(|p| -> Result<Vec<f64>> {
                    let rev = reverse_path(p);
                    let b = quadratic_covariation(g, &spec.phi_path(&rev)?, &partial_sums(&rev), g.dyadic_depth())?;
                    Ok((1..=8).map(|j| b.finest()[j * ne / 8]).collect())
                })
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            for j in 1..=8 {
                let t = j as f64 / 8.0;
                let (m, se) = mean_se(&curves.iter().map(|v| v[j - 1]).collect::<Vec<_>>());
                bracket_worst = bracket_worst.max((m - 2.0 * t).abs() / se);
                table.row(&[ne.to_string(), fl(t), "bracket_phi_xhat".into(), fl(m), fl(se)]);
            }
        }
    }
    let ratios: Vec<f64> = rms.windows(2).map(|w| w[0] / w[1]).collect();
    table.check(
        "decomposition residual rate",
        ratios.iter().all(|r| (1.2..=1.7).contains(r)),
        format!("successive RMS ratios {ratios:?}"),
    );
    table.check("bracket mean", bracket_worst <= 3.0, format!("max |mean - 2t|/SE = {bracket_worst:.3}"));
    Ok(())
}

pub(super) fn stopping(c: &ExperimentConfig, table: &mut Table) -> Result<()> {
    let n = c.n_cells;
    let grid = Grid::new(n)?;
    let y = skorohod_process(&ChaosProcess::terminal_value(grid))?;
    let s = GridStoppingTime::new(grid, StoppingRule::FirstExit(0.5))?;
    let t = GridStoppingTime::new(grid, StoppingRule::Deterministic(n))?;
    let batch = sample_paths(grid, c.paths, c.seed)?;
    let rule = format!("S={s};T={t}");
    let tests = optional_sampling_check(&y, &s, &t, &default_test_variables(grid), &batch)?;
    for r in &tests {
        table.row(&[rule.clone(), r.variable.clone(), r.n_paths.to_string(), fl(r.estimate), fl(r.std_error), fl(r.z)]);
    }
    let worst = max_of(tests.iter().map(|r| r.z.abs()));
    table.check("optional sampling", worst <= 3.0, format!("max |z| = {worst:.3} over {} variables", tests.len()));

    let (m, v) = uniform_integrability_surrogate(&y)?;
    table.check("second moment below vhat", m <= v + 1e-12, format!("max E[Y_t^2] = {m:.6}, vhat = {v:.6}"));

    let paths = sample_paths(grid, c.samples, c.seed)?;
    let mut worst = 0.0f64;
    for depth in 1..=2.min(grid.dyadic_depth()) {
        let pi = Partition::dyadic(grid, depth)?;
        for (name, u) in basic_integrands(grid)? {
            let step = step_approximation(&u, &pi)?;
            let values = step_values(&step, &pi)?;
            let ys = skorohod_process(&step)?;
            for tau in GridStoppingTime::shipped(grid)? {
                let r = max_of(
                    paths
                        .map(|p| stopped_integral_with(&values, &pi, &ys, &tau, p).map(|s| s.residual()))
                        .into_iter()
                        .collect::<Result<Vec<_>>>()?,
                );
                worst = worst.max(r);
                table.row(&[
                    tau.to_string(),
                    format!("stopped_integral[{name};depth={depth}]"),
                    c.samples.to_string(),
                    fl(r),
                    String::new(),
                    String::new(),
                ]);
            }
        }
    }
    table.check("stopped integral", worst <= 1e-10, format!("max |lhs - rhs| = {worst:.3e}"));
    Ok(())
}

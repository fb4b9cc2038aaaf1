//! Grid-valued stopping times, optional sampling for Skorohod integral
//! processes and the stopped step integral.

use std::fmt;

use crate::chaos::{ChaosFunctional, HermiteTable};
use crate::error::{contract, Result};
use crate::grid::{Grid, Partition};
use crate::paths::{partial_sums, PathBatch};
use crate::process::{ChaosProcess, SkorohodProcess};
use crate::skorohod::{skorohod_process, v_functional_dyadic, Sides};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StoppingRule {
    /// The boundary `k`.
    Deterministic(usize),
    /// First boundary `k ≥ 1` with `X_k` on the far side of the level,
    /// touching included. Level 0 therefore stops at the first boundary.
    LevelHitting(f64),
    /// First boundary `k ≥ 1` with `|X_k| ≥ band`.
    FirstExit(f64),
}

/// A stopping rule on a fixed grid; rules that never fire return `N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridStoppingTime {
    grid: Grid,
    rule: StoppingRule,
}

impl GridStoppingTime {
    pub fn new(grid: Grid, rule: StoppingRule) -> Result<Self> {
        match rule {
            StoppingRule::Deterministic(k) => grid.ensure_boundary(k)?,
            StoppingRule::LevelHitting(level) if !level.is_finite() => {
                return Err(contract("hitting level must be finite"));
            }
            StoppingRule::FirstExit(band) if !(band.is_finite() && band >= 0.0) => {
                return Err(contract("exit band must be finite and nonnegative"));
            }
            _ => {}
        }
        Ok(GridStoppingTime { grid, rule })
    }

    /// Every rule kind: `T ≡ ½`, `T ≡ 1`, hitting `0.3`, `−0.3` and `0`,
    /// and exit from the band `|x| < 0.5`.
    pub fn shipped(grid: Grid) -> Result<Vec<Self>> {
        let n = grid.n_cells();
        [
            StoppingRule::Deterministic(n / 2),
            StoppingRule::Deterministic(n),
            StoppingRule::LevelHitting(0.3),
            StoppingRule::LevelHitting(-0.3),
            StoppingRule::LevelHitting(0.0),
            StoppingRule::FirstExit(0.5),
        ]
        .into_iter()
        .map(|r| GridStoppingTime::new(grid, r))
        .collect()
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn rule(&self) -> StoppingRule {
        self.rule
    }

    /// The stopping boundary for one path; reads increments only up to it.
    pub fn eval(&self, path: &[f64]) -> Result<usize> {
        self.grid.ensure_path(path)?;
        let n = self.grid.n_cells();
        let first = |hit: &dyn Fn(f64) -> bool| {
            let mut x = 0.0;
            for (k, dx) in path.iter().enumerate() {
                x += dx;
                if hit(x) {
                    return k + 1;
                }
            }
            n
        };
        Ok(match self.rule {
            StoppingRule::Deterministic(k) => k,
            StoppingRule::LevelHitting(level) if level >= 0.0 => first(&|x| x >= level),
            StoppingRule::LevelHitting(level) => first(&|x| x <= level),
            StoppingRule::FirstExit(band) => first(&|x| x.abs() >= band),
        })
    }

    pub fn eval_time(&self, path: &[f64]) -> Result<f64> {
        Ok(self.grid.time(self.eval(path)?))
    }
}

impl fmt::Display for GridStoppingTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.rule {
            StoppingRule::Deterministic(k) => write!(f, "const({})", self.grid.time(k)),
            StoppingRule::LevelHitting(level) => write!(f, "hit({level})"),
            StoppingRule::FirstExit(band) => write!(f, "exit({band})"),
        }
    }
}

/// `F_S`-measurable test variables, functions of the path stopped at `S`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestVariable {
    One,
    /// `X_{S∧a}` for the boundary `a`.
    StoppedAt(usize),
    /// `X_S`.
    AtStop,
    /// `tanh(X_{S∧a})`.
    TanhAt(usize),
    /// `1{S ≤ a}`.
    StoppedBy(usize),
    /// `S` itself.
    StopTime,
}

impl TestVariable {
    /// `xs` holds `X` at every boundary, `k_s` is the stopping boundary.
    pub fn eval(&self, grid: Grid, xs: &[f64], k_s: usize) -> f64 {
        match *self {
            TestVariable::One => 1.0,
            TestVariable::StoppedAt(a) => xs[a.min(k_s)],
            TestVariable::AtStop => xs[k_s],
            TestVariable::TanhAt(a) => xs[a.min(k_s)].tanh(),
            TestVariable::StoppedBy(a) => (k_s <= a) as u8 as f64,
            TestVariable::StopTime => grid.time(k_s),
        }
    }

    pub fn name(&self, grid: Grid) -> String {
        match *self {
            TestVariable::One => "1".into(),
            TestVariable::StoppedAt(a) => format!("X(S^{})", grid.time(a)),
            TestVariable::AtStop => "X(S)".into(),
            TestVariable::TanhAt(a) => format!("tanh(X(S^{}))", grid.time(a)),
            TestVariable::StoppedBy(a) => format!("1(S<={})", grid.time(a)),
            TestVariable::StopTime => "S".into(),
        }
    }
}

/// The standard dictionary; times that are not grid boundaries are skipped.
pub fn default_test_variables(grid: Grid) -> Vec<TestVariable> {
    let n = grid.n_cells();
    let quarter = |q: usize| (n * q).is_multiple_of(4).then_some(n * q / 4);
    let mut out = vec![TestVariable::One];
    out.extend([1, 2, 3].into_iter().filter_map(quarter).map(TestVariable::StoppedAt));
    out.push(TestVariable::AtStop);
    out.extend(quarter(2).map(TestVariable::TanhAt));
    out.extend(quarter(2).map(TestVariable::StoppedBy));
    out.push(TestVariable::StopTime);
    out
}

/// One row of the optional sampling table.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingTest {
    pub variable: String,
    pub n_paths: usize,
    /// Sample mean of `G·(Y_T − Y_S)`.
    pub estimate: f64,
    pub std_error: f64,
    pub z: f64,
}

/// Sample means of `G·(Y_T − Y_S)` with their z-scores for every test
/// variable. The reduction runs in path order.
pub fn optional_sampling_check(
    y: &SkorohodProcess,
    s: &GridStoppingTime,
    t: &GridStoppingTime,
    tests: &[TestVariable],
    batch: &PathBatch,
) -> Result<Vec<SamplingTest>> {
    let grid = y.grid();
    grid.ensure_same(&batch.grid())?;
    grid.ensure_same(&s.grid())?;
    grid.ensure_same(&t.grid())?;
    let per_path = batch.map(|path| -> Result<Vec<f64>> {
        let (k_s, k_t) = (s.eval(path)?, t.eval(path)?);
        if k_s > k_t {
            return Err(contract(format!("S = {} exceeds T = {} on a path", grid.time(k_s), grid.time(k_t))));
        }
        let dy = y.eval_at(k_t, path)? - y.eval_at(k_s, path)?;
        let xs = partial_sums(path);
        Ok(tests.iter().map(|g| g.eval(grid, &xs, k_s) * dy).collect())
    });
    let rows = per_path.into_iter().collect::<Result<Vec<_>>>()?;
    let m = rows.len() as f64;
    Ok(tests
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let mean = rows.iter().map(|r| r[i]).sum::<f64>() / m;
            let var = rows.iter().map(|r| (r[i] - mean).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
            let std_error = (var / m).sqrt();
            let z = if std_error > 0.0 { mean / std_error } else if mean == 0.0 { 0.0 } else { f64::INFINITY };
            SamplingTest { variable: g.name(grid), n_paths: rows.len(), estimate: mean, std_error, z }
        })
        .collect())
}

/// Checks that `u` is constant on each interval of `π` with values that
/// ignore the interval's own increments; returns the interval values.
pub fn step_values<'a>(u: &'a ChaosProcess, pi: &Partition) -> Result<Vec<&'a ChaosFunctional>> {
    u.grid().ensure_same(&pi.grid())?;
    pi.intervals()
        .map(|(k0, k1)| {
            let f = u.at(k0);
            for cell in k0 + 1..k1 {
                if u.at(cell) != f {
                    return Err(contract(format!("integrand is not constant on cells {k0}..{k1}")));
                }
            }
            if f.support()[k0..k1].iter().any(|&b| b) {
                return Err(contract(format!("integrand depends on its own interval {k0}..{k1}")));
            }
            Ok(f)
        })
        .collect()
}

/// `lhs = Σ_i F_i·(X_{T∧t_{i+1}} − X_{T∧t_i})` against `rhs = δ(u·1_{[0,t]})`
/// evaluated at `t = T`.
pub fn stopped_integral(u: &ChaosProcess, pi: &Partition, tau: &GridStoppingTime, path: &[f64]) -> Result<Sides> {
    let values = step_values(u, pi)?;
    let y = skorohod_process(u)?;
    stopped_integral_with(&values, pi, &y, tau, path)
}

/// As [`stopped_integral`] with the interval values and `Y` precomputed.
pub fn stopped_integral_with(
    values: &[&ChaosFunctional],
    pi: &Partition,
    y: &SkorohodProcess,
    tau: &GridStoppingTime,
    path: &[f64],
) -> Result<Sides> {
    let k = tau.eval(path)?;
    let xs = partial_sums(path);
    let order = values.iter().map(|f| f.order()).max().unwrap_or(0);
    let table = HermiteTable::new(tau.grid(), path, order)?;
    let lhs: f64 = values
        .iter()
        .zip(pi.intervals())
        .map(|(f, (k0, k1))| f.eval_table(&table) * (xs[k1.min(k)] - xs[k0.min(k)]))
        .sum();
    Ok(Sides { lhs, rhs: y.eval_at(k, path)? })
}

/// `(max_t E[Y_t²], V̂(Y))`; the first never exceeds the second.
pub fn uniform_integrability_surrogate(y: &SkorohodProcess) -> Result<(f64, f64)> {
    let max = y.second_moments().into_iter().fold(0.0, f64::max);
    Ok((max, v_functional_dyadic(y)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::sample_paths;
    use crate::skorohod::step_approximation;
    use approx::assert_relative_eq;

    fn grid(n: usize) -> Grid {
        Grid::new(n).unwrap()
    }

    #[test]
    fn rules() {
        let g = grid(8);
        let path = [0.1, 0.2, -0.5, 0.3, 0.4, -0.1, 0.0, 0.2];
        let at = |r| GridStoppingTime::new(g, r).unwrap().eval(&path).unwrap();
        assert_eq!(at(StoppingRule::Deterministic(4)), 4);
        assert_eq!(at(StoppingRule::LevelHitting(0.0)), 1);
        assert_eq!(at(StoppingRule::LevelHitting(0.3)), 2);
        assert_eq!(at(StoppingRule::LevelHitting(-0.15)), 3);
        assert_eq!(at(StoppingRule::LevelHitting(10.0)), 8);
        assert_eq!(at(StoppingRule::FirstExit(0.45)), 5);
        assert!(GridStoppingTime::new(g, StoppingRule::Deterministic(9)).is_err());
        assert!(GridStoppingTime::new(g, StoppingRule::FirstExit(-1.0)).is_err());
    }

    #[test]
    fn prefix_determinism() {
        let g = grid(16);
        let batch = sample_paths(g, 50, 3).unwrap();
        for rule in [StoppingRule::LevelHitting(0.3), StoppingRule::FirstExit(0.5), StoppingRule::Deterministic(5)] {
            let tau = GridStoppingTime::new(g, rule).unwrap();
            for path in batch.paths() {
                let k = tau.eval(path).unwrap();
                let mut altered = path.to_vec();
                altered[k..].iter_mut().for_each(|x| *x = -3.0 * *x + 0.7);
                assert_eq!(tau.eval(&altered).unwrap(), k);
            }
        }
    }

    #[test]
    fn dictionary() {
        let g = grid(32);
        let tests = default_test_variables(g);
        assert!(tests.len() >= 5);
        assert!(tests.contains(&TestVariable::StoppedAt(8)));
        let xs = [0.0, 1.0, -2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        let g8 = grid(8);
        assert_eq!(TestVariable::StoppedAt(4).eval(g8, &xs, 2), -2.0);
        assert_eq!(TestVariable::StoppedBy(4).eval(g8, &xs, 5), 0.0);
        assert_eq!(TestVariable::StopTime.eval(g8, &xs, 2), 0.25);
    }

    #[test]
    fn sampling_rejects_unordered_times() {
        let g = grid(8);
        let y = skorohod_process(&ChaosProcess::terminal_value(g)).unwrap();
        let s = GridStoppingTime::new(g, StoppingRule::Deterministic(6)).unwrap();
        let t = GridStoppingTime::new(g, StoppingRule::Deterministic(2)).unwrap();
        let batch = sample_paths(g, 4, 1).unwrap();
        assert!(optional_sampling_check(&y, &s, &t, &[TestVariable::One], &batch).is_err());
    }

    #[test]
    fn sampling_deterministic_times() {
        let g = grid(8);
        let y = skorohod_process(&ChaosProcess::terminal_value(g)).unwrap();
        let s = GridStoppingTime::new(g, StoppingRule::Deterministic(2)).unwrap();
        let t = GridStoppingTime::new(g, StoppingRule::Deterministic(6)).unwrap();
        let batch = sample_paths(g, 4000, 2).unwrap();
        let rows = optional_sampling_check(&y, &s, &t, &default_test_variables(g), &batch).unwrap();
        for r in rows {
            assert!(r.z.abs() <= 4.0, "{r:?}");
        }
    }

    #[test]
    fn stopped_integral_examples() {
        let g = grid(8);
        let pi = Partition::dyadic(g, 1).unwrap();
        let one = ChaosProcess::deterministic(g, 1.0);
        let tau = GridStoppingTime::new(g, StoppingRule::LevelHitting(0.3)).unwrap();
        let v = step_approximation(&ChaosProcess::terminal_value(g), &pi).unwrap();
        for path in sample_paths(g, 20, 4).unwrap().paths() {
            let s = stopped_integral(&one, &pi, &tau, path).unwrap();
            let xs = partial_sums(path);
            assert_relative_eq!(s.lhs, xs[tau.eval(path).unwrap()], epsilon = 1e-14);
            assert!(s.residual() <= 1e-12);
            assert!(stopped_integral(&v, &pi, &tau, path).unwrap().residual() <= 1e-12);
        }
        let bad = ChaosProcess::terminal_value(g);
        assert!(stopped_integral(&bad, &pi, &tau, &[0.0; 8]).is_err());
    }

    #[test]
    fn surrogate_holds() {
        let g = grid(8);
        let u = ChaosProcess::random(g, 2, 9).unwrap();
        let y = skorohod_process(&u).unwrap();
        let (m, v) = uniform_integrability_surrogate(&y).unwrap();
        assert!(m <= v + 1e-12);
    }
}

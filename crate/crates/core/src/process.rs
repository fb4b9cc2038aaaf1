//! Time-indexed chaos families: integrands constant on each time cell and
//! integral processes sampled at every grid boundary.

use std::fmt::Write as _;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::chaos::{parse_functional, ChaosFunctional};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::kernel::SymKernel;
use crate::multiset::factorial;
use crate::paths::StepFunction;

/// `∫₀¹ E[v_α²] dα` and the `D^{1,2}` norm `∫₀¹ E[v_α²] + ∫₀¹ E[(D_s v_α)²] ds dα`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessNorms {
    pub l2_sq: f64,
    pub sobolev12_sq: f64,
}

/// A process `α ↦ u_α` whose value is one chaos functional per time cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaosProcess {
    grid: Grid,
    values: Vec<ChaosFunctional>,
}

impl ChaosProcess {
    pub fn new(grid: Grid, values: Vec<ChaosFunctional>) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::GridMismatch { expected: grid.n_cells(), found: values.len() });
        }
        for v in &values {
            grid.ensure_same(&v.grid())?;
        }
        Ok(ChaosProcess { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl FnMut(usize) -> Result<ChaosFunctional>) -> Result<Self> {
        ChaosProcess::new(grid, (0..grid.n_cells()).map(f).collect::<Result<Vec<_>>>()?)
    }

    /// The same functional at every time.
    pub fn constant_in_time(f: &ChaosFunctional) -> Self {
        ChaosProcess { grid: f.grid(), values: vec![f.clone(); f.grid().n_cells()] }
    }

    pub fn deterministic(grid: Grid, c: f64) -> Self {
        ChaosProcess::constant_in_time(&ChaosFunctional::constant(grid, c))
    }

    /// A deterministic step function of time.
    pub fn deterministic_step(h: &StepFunction) -> Self {
        let grid = h.grid();
        ChaosProcess { grid, values: h.values().iter().map(|&c| ChaosFunctional::constant(grid, c)).collect() }
    }

    /// `u_α = X_1`.
    pub fn terminal_value(grid: Grid) -> Self {
        ChaosProcess::constant_in_time(&ChaosFunctional::isonormal(&StepFunction::constant(grid, 1.0)))
    }

    /// `u_α = X_α` averaged over each time cell: on cell `a` the kernel is
    /// `1` left of `a`, `½` on `a` and `0` after it.
    pub fn brownian(grid: Grid) -> Self {
        ChaosProcess::brownian_weighted(grid, 0.5)
    }

    /// `u_α = X_{aΔ}` on cell `a`: the left-point, predictable version.
    pub fn brownian_left(grid: Grid) -> Self {
        ChaosProcess::brownian_weighted(grid, 0.0)
    }

    fn brownian_weighted(grid: Grid, own: f64) -> Self {
        let values = (0..grid.n_cells())
            .map(|a| {
                let w = (0..grid.n_cells())
                    .map(|c| match c.cmp(&a) {
                        std::cmp::Ordering::Less => 1.0,
                        std::cmp::Ordering::Equal => own,
                        std::cmp::Ordering::Greater => 0.0,
                    })
                    .collect();
                ChaosFunctional::isonormal(&StepFunction::new(grid, w).expect("length matches the grid"))
            })
            .collect();
        ChaosProcess { grid, values }
    }

    /// A process with independent uniform `[−1, 1]` kernel values up to `max_order`.
    pub fn random(grid: Grid, max_order: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ChaosProcess::from_fn(grid, |_| random_functional(grid, max_order, &mut rng))
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[ChaosFunctional] {
        &self.values
    }

    /// Value on time cell `cell`.
    pub fn at(&self, cell: usize) -> &ChaosFunctional {
        &self.values[cell]
    }

    /// Largest stored chaos order.
    pub fn order(&self) -> usize {
        self.values.iter().map(ChaosFunctional::order).max().unwrap_or(0)
    }

    pub fn effective_order(&self) -> usize {
        self.values.iter().map(ChaosFunctional::effective_order).max().unwrap_or(0)
    }

    pub fn map(&self, f: impl FnMut(&ChaosFunctional) -> Result<ChaosFunctional>) -> Result<Self> {
        ChaosProcess::new(self.grid, self.values.iter().map(f).collect::<Result<Vec<_>>>()?)
    }

    fn zip_with(
        &self,
        other: &ChaosProcess,
        f: impl Fn(&ChaosFunctional, &ChaosFunctional) -> Result<ChaosFunctional>,
    ) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| f(a, b)).collect::<Result<Vec<_>>>()?;
        ChaosProcess::new(self.grid, values)
    }

    pub fn add(&self, other: &ChaosProcess) -> Result<Self> {
        self.zip_with(other, |a, b| a.add(b))
    }

    pub fn sub(&self, other: &ChaosProcess) -> Result<Self> {
        self.zip_with(other, |a, b| a.sub(b))
    }

    pub fn scale(&self, c: f64) -> Self {
        ChaosProcess { grid: self.grid, values: self.values.iter().map(|v| v.scale(c)).collect() }
    }

    pub fn max_abs_diff(&self, other: &ChaosProcess) -> Result<f64> {
        self.grid.ensure_same(&other.grid)?;
        self.values.iter().zip(&other.values).try_fold(0.0, |m, (a, b)| Ok(f64::max(m, a.max_abs_diff(b)?)))
    }

    /// Every value at time cell `a` is measurable with respect to cells `≤ a`.
    pub fn is_adapted(&self) -> bool {
        self.values.iter().enumerate().all(|(a, v)| v.support().iter().skip(a + 1).all(|used| !used))
    }

    /// Every value at time cell `a` is measurable with respect to cells `< a`.
    pub fn is_predictable(&self) -> bool {
        self.values.iter().enumerate().all(|(a, v)| v.support().iter().skip(a).all(|used| !used))
    }

    /// Norms of the step process, exact by the isometry.
    pub fn kernel_norms(&self) -> ProcessNorms {
        let dt = self.grid.width();
        let (mut l2, mut d) = (0.0, 0.0);
        for v in &self.values {
            l2 += v.second_moment();
            for k in v.kernels() {
                let j = k.order() as f64;
                d += j * factorial(k.order()) * k.norm_sq();
            }
        }
        ProcessNorms { l2_sq: l2 * dt, sobolev12_sq: (l2 + d) * dt }
    }

    /// Pathwise `u_α` on every time cell.
    pub fn eval(&self, path: &[f64]) -> Result<Vec<f64>> {
        let table = crate::chaos::HermiteTable::new(self.grid, path, self.order())?;
        Ok(self.values.iter().map(|v| v.eval_table(&table)).collect())
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("process cells {}\n", self.grid.n_cells());
        for (a, v) in self.values.iter().enumerate() {
            let _ = write!(out, "time-cell {}\n{}", a + 1, v.to_text());
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let lines: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .collect();
        let (line, header) = *lines.first().ok_or(Error::Parse { line: 0, msg: "missing process header".into() })?;
        let n_cells = header
            .strip_prefix("process cells ")
            .and_then(|n| n.trim().parse::<usize>().ok())
            .ok_or(Error::Parse { line, msg: "expected `process cells N`".into() })?;
        let grid = Grid::new(n_cells)?;
        let mut values = Vec::with_capacity(n_cells);
        let mut at = 1;
        while let Some(&(line, l)) = lines.get(at) {
            let expected = format!("time-cell {}", values.len() + 1);
            if l != expected {
                return Err(Error::Parse { line, msg: format!("expected `{expected}`") });
            }
            let (f, used) = parse_functional(&lines[at + 1..])?;
            grid.ensure_same(&f.grid())?;
            values.push(f);
            at += 1 + used;
        }
        ChaosProcess::new(grid, values)
    }
}

fn uniform_pm1(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (-52f64).exp2() - 1.0
}

/// A functional with independent uniform `[−1, 1]` mean and kernel values.
pub fn random_functional(grid: Grid, max_order: usize, rng: &mut ChaCha8Rng) -> Result<ChaosFunctional> {
    let mean = uniform_pm1(rng);
    let kernels = (1..=max_order)
        .map(|n| SymKernel::from_fn(grid, n, |_| uniform_pm1(rng)))
        .collect::<Result<Vec<_>>>()?;
    ChaosFunctional::new(grid, mean, kernels)
}

/// Seeded variant of [`random_functional`].
pub fn random_functional_seeded(grid: Grid, max_order: usize, seed: u64) -> Result<ChaosFunctional> {
    random_functional(grid, max_order, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// How the values of a [`SkorohodProcess`] were produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Kernel action of the divergence on `u·1_{[0,t]}`.
    Direct,
    /// Re-synthesized from the region kernels `f_{l,q}`.
    DucNualart,
    /// `∫₀ᵗ E[v_s | F_{[s,t]^c}] dX_s` at kernel level.
    ItoSkorohod,
    /// Kernel form of a forward × backward martingale sum.
    ForwardBackward,
    /// `F − E[F | F_{t^c}]`.
    Backward,
    /// Difference of two processes.
    Difference,
}

/// `t ↦ Y_t` at every grid boundary `k = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SkorohodProcess {
    grid: Grid,
    values: Vec<ChaosFunctional>,
    provenance: Provenance,
}

impl SkorohodProcess {
    pub fn new(grid: Grid, values: Vec<ChaosFunctional>, provenance: Provenance) -> Result<Self> {
        if values.len() != grid.n_cells() + 1 {
            return Err(Error::GridMismatch { expected: grid.n_cells() + 1, found: values.len() });
        }
        for v in &values {
            grid.ensure_same(&v.grid())?;
        }
        Ok(SkorohodProcess { grid, values, provenance })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn values(&self) -> &[ChaosFunctional] {
        &self.values
    }

    /// `Y_t` at boundary `k`.
    pub fn at(&self, k: usize) -> Result<&ChaosFunctional> {
        self.values.get(k).ok_or(Error::OffGrid { t: self.grid.time(k), n_cells: self.grid.n_cells() })
    }

    pub fn order(&self) -> usize {
        self.values.iter().map(ChaosFunctional::order).max().unwrap_or(0)
    }

    pub fn sub(&self, other: &SkorohodProcess) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a.sub(b)).collect::<Result<Vec<_>>>()?;
        SkorohodProcess::new(self.grid, values, Provenance::Difference)
    }

    pub fn max_abs_diff(&self, other: &SkorohodProcess) -> Result<f64> {
        self.grid.ensure_same(&other.grid)?;
        self.values.iter().zip(&other.values).try_fold(0.0, |m, (a, b)| Ok(f64::max(m, a.max_abs_diff(b)?)))
    }

    /// `E[Y_t²]` at every boundary.
    pub fn second_moments(&self) -> Vec<f64> {
        self.values.iter().map(ChaosFunctional::second_moment).collect()
    }

    /// Pathwise `Y_t` at every boundary.
    pub fn eval(&self, path: &[f64]) -> Result<Vec<f64>> {
        let table = crate::chaos::HermiteTable::new(self.grid, path, self.order())?;
        Ok(self.values.iter().map(|v| v.eval_table(&table)).collect())
    }

    pub fn eval_at(&self, k: usize, path: &[f64]) -> Result<f64> {
        self.at(k)?.eval(path)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("skorohod cells {} provenance {:?}\n", self.grid.n_cells(), self.provenance);
        for (k, v) in self.values.iter().enumerate() {
            let _ = write!(out, "time {}\n{}", k, v.to_text());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn norms_of_simple_processes() {
        let g = Grid::new(8).unwrap();
        let c = ChaosProcess::deterministic(g, 3.0).kernel_norms();
        assert_relative_eq!(c.l2_sq, 9.0, epsilon = 1e-12);
        assert_relative_eq!(c.sobolev12_sq, 9.0, epsilon = 1e-12);
        let x = ChaosProcess::terminal_value(g).kernel_norms();
        assert_relative_eq!(x.l2_sq, 1.0, epsilon = 1e-12);
        assert_relative_eq!(x.sobolev12_sq, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn brownian_integrands() {
        let g = Grid::new(4).unwrap();
        let b = ChaosProcess::brownian(g);
        assert!(b.is_adapted());
        assert!(!b.is_predictable());
        assert!(ChaosProcess::brownian_left(g).is_predictable());
        assert!(!ChaosProcess::terminal_value(g).is_adapted());
        let path = [0.4, -0.2, 0.1, 0.3];
        let v = b.eval(&path).unwrap();
        assert_relative_eq!(v[2], 0.4 - 0.2 + 0.05, epsilon = 1e-14);
    }

    #[test]
    fn text_roundtrip() {
        let g = Grid::new(3).unwrap();
        let p = ChaosProcess::random(g, 2, 5).unwrap();
        assert_eq!(ChaosProcess::from_text(&p.to_text()).unwrap(), p);
        assert!(ChaosProcess::from_text("process cells 3\ntime-cell 2\n").is_err());
    }

    #[test]
    fn skorohod_process_shape() {
        let g = Grid::new(2).unwrap();
        let zero = vec![ChaosFunctional::zero(g); 3];
        let y = SkorohodProcess::new(g, zero.clone(), Provenance::Direct).unwrap();
        assert!(y.at(3).is_err());
        assert!(SkorohodProcess::new(g, zero[..2].to_vec(), Provenance::Direct).is_err());
    }
}

//! Hermite polynomials and finite Wiener chaos functionals
//! `F = E[F] + Σ_n I_n(f_n)` with step kernels.
//!
//! Hermite polynomials use the generating function `exp(tx − t²/2) = Σ tⁿ Hₙ(x)`,
//! so `H_2(x) = (x² − 1)/2` and `I_n(h^{⊗n}) = n!·H_n(X(h))` for `‖h‖ = 1`.
//! The probabilists' `He_n` equals `n!·H_n`.
//!
//! On the grid, with `ξ_c = ΔX_c / √Δ`, a kernel evaluates exactly as
//!
//! ```text
//! I_n(f) = n! Σ_μ f(μ) Π_c Δ^{m_c/2} H_{m_c}(ξ_c)
//! ```
//!
//! where `μ` runs over sorted multisets and `m_c` is the multiplicity of cell `c`.

use std::fmt::Write as _;

use crate::error::{contract, Error, Result};
use crate::grid::{Grid, TimeSet};
use crate::kernel::{parse_kernel_header, SymKernel};
use crate::multiset::{self, factorial, MAX_ORDER};
use crate::paths::StepFunction;

pub fn hermite(n: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (0.0, 1.0);
    for k in 0..n {
        let next = (x * cur - prev) / (k + 1) as f64;
        prev = cur;
        cur = next;
    }
    cur
}

/// Per-cell factors `Δ^{m/2} H_m(ΔX_c / √Δ)` of one path.
#[derive(Debug, Clone)]
pub struct HermiteTable {
    max_order: usize,
    psi: Vec<f64>,
}

impl HermiteTable {
    pub fn new(grid: Grid, path: &[f64], max_order: usize) -> Result<Self> {
        grid.ensure_path(path)?;
        let root = grid.width().sqrt();
        let stride = max_order + 1;
        let mut psi = vec![0.0; grid.n_cells() * stride];
        for (c, &dx) in path.iter().enumerate() {
            let xi = dx / root;
            let (mut prev, mut cur) = (0.0, 1.0);
            let mut scale = 1.0;
            for m in 0..=max_order {
                psi[c * stride + m] = cur * scale;
                let next = (xi * cur - prev) / (m + 1) as f64;
                prev = cur;
                cur = next;
                scale *= root;
            }
        }
        Ok(HermiteTable { max_order, psi })
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    fn factor(&self, cell: usize, m: usize) -> f64 {
        self.psi[cell * (self.max_order + 1) + m]
    }

    /// `I_n(f)` on this path.
    pub fn integral(&self, f: &SymKernel) -> f64 {
        assert!(f.order() <= self.max_order, "Hermite table too shallow for the kernel order");
        let mut acc = 0.0;
        f.for_each(|cells, v| {
            if v != 0.0 {
                acc += v * multiset::runs(cells).map(|(c, m)| self.factor(c, m)).product::<f64>();
            }
        });
        acc * factorial(f.order())
    }
}

/// `I_n(f)` on a path given by its increments.
pub fn eval_multiple_integral(f: &SymKernel, path: &[f64]) -> Result<f64> {
    Ok(HermiteTable::new(f.grid(), path, f.order())?.integral(f))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChaosFunctional {
    grid: Grid,
    mean: f64,
    kernels: Vec<SymKernel>,
}

impl ChaosFunctional {
    pub fn new(grid: Grid, mean: f64, kernels: Vec<SymKernel>) -> Result<Self> {
        for (i, k) in kernels.iter().enumerate() {
            grid.ensure_same(&k.grid())?;
            if k.order() != i + 1 {
                return Err(Error::DimensionMismatch { expected: i + 1, found: k.order() });
            }
        }
        Ok(ChaosFunctional { grid, mean, kernels })
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        ChaosFunctional { grid, mean: c, kernels: Vec::new() }
    }

    pub fn zero(grid: Grid) -> Self {
        ChaosFunctional::constant(grid, 0.0)
    }

    /// `I_n(f)` as a functional.
    pub fn from_kernel(f: SymKernel) -> Result<Self> {
        let grid = f.grid();
        if f.order() == 0 {
            return Ok(ChaosFunctional::constant(grid, f.values()[0]));
        }
        let mut kernels = (1..f.order()).map(|n| SymKernel::zeros(grid, n)).collect::<Result<Vec<_>>>()?;
        kernels.push(f);
        Ok(ChaosFunctional { grid, mean: 0.0, kernels })
    }

    /// `X(h)`.
    pub fn isonormal(h: &StepFunction) -> Self {
        ChaosFunctional { grid: h.grid(), mean: 0.0, kernels: vec![SymKernel::from_step(h)] }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn set_mean(&mut self, mean: f64) {
        self.mean = mean;
    }

    /// Number of stored kernel orders (trailing kernels may be zero).
    pub fn order(&self) -> usize {
        self.kernels.len()
    }

    /// Highest order with a nonzero kernel.
    pub fn effective_order(&self) -> usize {
        self.kernels.iter().rposition(|k| !k.is_zero()).map_or(0, |i| i + 1)
    }

    pub fn kernels(&self) -> &[SymKernel] {
        &self.kernels
    }

    /// Kernel of order `n ≥ 1`, if stored.
    pub fn kernel(&self, n: usize) -> Option<&SymKernel> {
        n.checked_sub(1).and_then(|i| self.kernels.get(i))
    }

    pub(crate) fn kernel_mut(&mut self, n: usize) -> Result<&mut SymKernel> {
        self.pad_to(n)?;
        Ok(&mut self.kernels[n - 1])
    }

    /// Pads with zero kernels up to order `n`.
    pub fn pad_to(&mut self, n: usize) -> Result<()> {
        while self.kernels.len() < n {
            let next = self.kernels.len() + 1;
            self.kernels.push(SymKernel::zeros(self.grid, next)?);
        }
        Ok(())
    }

    /// Drops trailing zero kernels.
    pub fn trimmed(mut self) -> Self {
        self.kernels.truncate(self.effective_order());
        self
    }

    pub fn eval_table(&self, table: &HermiteTable) -> f64 {
        self.mean + self.kernels.iter().map(|k| table.integral(k)).sum::<f64>()
    }

    pub fn hermite_table(&self, path: &[f64]) -> Result<HermiteTable> {
        HermiteTable::new(self.grid, path, self.order())
    }

    pub fn eval(&self, path: &[f64]) -> Result<f64> {
        Ok(self.eval_table(&self.hermite_table(path)?))
    }

    pub fn variance(&self) -> f64 {
        self.kernels.iter().map(|k| factorial(k.order()) * k.norm_sq()).sum()
    }

    pub fn moments(&self) -> Moments {
        Moments { mean: self.mean, variance: self.variance() }
    }

    /// `E[F G]` by the isometry.
    pub fn inner(&self, other: &ChaosFunctional) -> Result<f64> {
        self.grid.ensure_same(&other.grid)?;
        let mut acc = self.mean * other.mean;
        for (f, g) in self.kernels.iter().zip(&other.kernels) {
            acc += factorial(f.order()) * f.inner(g)?;
        }
        Ok(acc)
    }

    /// `E[F²]`.
    pub fn second_moment(&self) -> f64 {
        self.mean * self.mean + self.variance()
    }

    /// `D_s F` for `s` in `cell`: order `n − 1` kernels `n·f_n(·, s)`.
    pub fn derivative(&self, cell: usize) -> Result<Self> {
        if cell >= self.grid.n_cells() {
            return Err(contract(format!("cell {cell} outside a {}-cell grid", self.grid.n_cells())));
        }
        let mut out = ChaosFunctional::zero(self.grid);
        for k in &self.kernels {
            let n = k.order();
            let section = k.section(cell)?.scale(n as f64);
            if n == 1 {
                out.mean = section.values()[0];
            } else {
                out.kernels.push(section);
            }
        }
        Ok(out)
    }

    /// `E[F | F_A]`.
    pub fn conditional_expectation(&self, a: &TimeSet) -> Result<Self> {
        self.grid.ensure_same(&a.grid())?;
        Ok(self.retain_cells(|c| a.contains(c)))
    }

    pub(crate) fn retain_cells(&self, keep: impl Fn(usize) -> bool + Copy) -> Self {
        ChaosFunctional {
            grid: self.grid,
            mean: self.mean,
            kernels: self.kernels.iter().map(|k| k.retain_cells(keep)).collect(),
        }
    }

    /// Applies `f` to every kernel.
    pub fn map_kernels(&self, mean: f64, f: impl Fn(&SymKernel) -> SymKernel) -> Self {
        ChaosFunctional { grid: self.grid, mean, kernels: self.kernels.iter().map(f).collect() }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map_kernels(self.mean * c, |k| k.scale(c))
    }

    /// `self += c · other`.
    pub fn axpy(&mut self, c: f64, other: &ChaosFunctional) -> Result<()> {
        self.grid.ensure_same(&other.grid)?;
        self.pad_to(other.order())?;
        self.mean += c * other.mean;
        for (a, b) in self.kernels.iter_mut().zip(&other.kernels) {
            a.axpy(c, b)?;
        }
        Ok(())
    }

    pub fn add(&self, other: &ChaosFunctional) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(1.0, other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &ChaosFunctional) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    /// Largest absolute difference over the mean and every kernel value.
    pub fn max_abs_diff(&self, other: &ChaosFunctional) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }

    pub fn max_abs(&self) -> f64 {
        self.kernels.iter().map(SymKernel::max_abs).fold(self.mean.abs(), f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.mean == 0.0 && self.kernels.iter().all(SymKernel::is_zero)
    }

    pub fn reverse(&self) -> Self {
        self.map_kernels(self.mean, SymKernel::reverse)
    }

    /// Cells touched by some nonzero kernel value.
    pub fn support(&self) -> Vec<bool> {
        let mut used = vec![false; self.grid.n_cells()];
        for k in &self.kernels {
            k.for_each(|cells, v| {
                if v != 0.0 {
                    cells.iter().for_each(|&c| used[c] = true);
                }
            });
        }
        used
    }

    /// `F·G` for functionals that share no cell; exact by the product
    /// formula, whose contractions all vanish.
    pub fn disjoint_product(&self, other: &ChaosFunctional) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let (a, b) = (self.support(), other.support());
        if a.iter().zip(&b).any(|(x, y)| *x && *y) {
            return Err(contract("disjoint product of functionals sharing a cell"));
        }
        let order = self.effective_order() + other.effective_order();
        if order > MAX_ORDER {
            return Err(Error::OrderOutOfRange { order, min: 0, max: MAX_ORDER });
        }
        let mut out = ChaosFunctional::constant(self.grid, self.mean * other.mean);
        out.pad_to(order)?;
        for f in self.kernels.iter().filter(|k| !k.is_zero()) {
            out.kernels[f.order() - 1].axpy(other.mean, f)?;
            for g in other.kernels.iter().filter(|k| !k.is_zero()) {
                let fg = f.tensor0(g)?;
                out.kernels[fg.order() - 1].axpy(1.0, &fg)?;
            }
        }
        for g in other.kernels.iter().filter(|k| !k.is_zero()) {
            out.kernels[g.order() - 1].axpy(self.mean, g)?;
        }
        Ok(out.trimmed())
    }

    /// Exact `F·G` for arbitrary functionals, by linearizing the per-cell
    /// Hermite products. Fails if the product order exceeds `cap`.
    pub fn product(&self, other: &ChaosFunctional, cap: usize) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let order = self.effective_order() + other.effective_order();
        if order > cap.min(MAX_ORDER) {
            return Err(Error::OrderOutOfRange { order, min: 0, max: cap.min(MAX_ORDER) });
        }
        let dt = self.grid.width();
        let mut out = ChaosFunctional::constant(self.grid, self.mean * other.mean);
        out.pad_to(order)?;
        for f in self.kernels.iter().filter(|k| !k.is_zero()) {
            out.kernels[f.order() - 1].axpy(other.mean, f)?;
        }
        for g in other.kernels.iter().filter(|k| !k.is_zero()) {
            out.kernels[g.order() - 1].axpy(self.mean, g)?;
        }
        let mut coef_mean = 0.0;
        for f in self.kernels.iter().filter(|k| !k.is_zero()) {
            for g in other.kernels.iter().filter(|k| !k.is_zero()) {
                let scale = factorial(f.order()) * factorial(g.order());
                f.for_each(|mu, fv| {
                    if fv == 0.0 {
                        return;
                    }
                    g.for_each(|nu, gv| {
                        if gv == 0.0 {
                            return;
                        }
                        let blocks = merge_runs(mu, nu);
                        let mut rho = Vec::with_capacity(mu.len() + nu.len());
                        linearize(&blocks, 0, scale * fv * gv, dt, &mut rho, &mut |rho, c| {
                            if rho.is_empty() {
                                coef_mean += c;
                            } else {
                                let k = &mut out.kernels[rho.len() - 1];
                                let r = multiset::rank(rho);
                                k.values_mut()[r] += c / factorial(rho.len());
                            }
                        });
                    });
                });
            }
        }
        out.mean += coef_mean;
        Ok(out.trimmed())
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("chaos cells {} orders {}\nmean {}\n", self.grid.n_cells(), self.order(), self.mean);
        for k in &self.kernels {
            let _ = write!(out, "{}", k.to_text());
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
        let (f, used) = parse_functional(&lines)?;
        if let Some(&(line, _)) = lines.get(used) {
            return Err(Error::Parse { line, msg: "trailing content after functional".into() });
        }
        Ok(f)
    }
}

/// Parses one functional block from pre-split lines; returns it and the
/// number of lines consumed.
pub(crate) fn parse_functional(lines: &[(usize, &str)]) -> Result<(ChaosFunctional, usize)> {
    let (line, header) = *lines.first().ok_or(Error::Parse { line: 0, msg: "missing chaos header".into() })?;
    let words: Vec<&str> = header.split_whitespace().collect();
    let (n_cells, orders) = match words.as_slice() {
        ["chaos", "cells", c, "orders", l] => match (c.parse::<usize>(), l.parse::<usize>()) {
            (Ok(c), Ok(l)) => (c, l),
            _ => return Err(Error::Parse { line, msg: "non-numeric chaos header".into() }),
        },
        _ => return Err(Error::Parse { line, msg: format!("expected `chaos cells N orders L`, got `{header}`") }),
    };
    let grid = Grid::new(n_cells)?;
    let (line, mean_line) = *lines.get(1).ok_or(Error::Parse { line, msg: "missing mean line".into() })?;
    let mean = mean_line
        .strip_prefix("mean ")
        .and_then(|v| v.trim().parse::<f64>().ok())
        .ok_or(Error::Parse { line, msg: "expected `mean value`".into() })?;
    let mut f = ChaosFunctional::constant(grid, mean);
    f.pad_to(orders)?;
    let mut at = 2;
    let mut current: Option<usize> = None;
    while let Some(&(line, l)) = lines.get(at) {
        if l.starts_with("order ") {
            let (n, c) = parse_kernel_header(l, line)?;
            if c != n_cells || n == 0 || n > orders {
                return Err(Error::Parse { line, msg: "kernel block does not fit the chaos header".into() });
            }
            current = Some(n);
        } else if l.contains('=') {
            let n = current.ok_or(Error::Parse { line, msg: "entry before any kernel header".into() })?;
            f.kernels[n - 1].parse_entry(l, line)?;
        } else {
            break;
        }
        at += 1;
    }
    Ok((f, at))
}

/// `(cell, a, b)` multiplicities of two sorted multisets on their union.
fn merge_runs(mu: &[usize], nu: &[usize]) -> Vec<(usize, usize, usize)> {
    let mut out: Vec<(usize, usize, usize)> = Vec::new();
    for (c, m) in multiset::runs(mu) {
        out.push((c, m, 0));
    }
    for (c, m) in multiset::runs(nu) {
        match out.iter_mut().find(|e| e.0 == c) {
            Some(e) => e.2 = m,
            None => out.push((c, 0, m)),
        }
    }
    out.sort_unstable_by_key(|e| e.0);
    out
}

/// `κ(a, b, r) = r!·C(a,r)·C(b,r)·(a+b−2r)! / (a!·b!)`, so that
/// `H_a H_b = Σ_r κ(a, b, r) H_{a+b−2r}`.
fn hermite_product_coef(a: usize, b: usize, r: usize) -> f64 {
    factorial(r) * multiset::binomial(a, r) as f64 * multiset::binomial(b, r) as f64 * factorial(a + b - 2 * r)
        / (factorial(a) * factorial(b))
}

fn linearize(
    blocks: &[(usize, usize, usize)],
    at: usize,
    coef: f64,
    dt: f64,
    rho: &mut Vec<usize>,
    emit: &mut impl FnMut(&[usize], f64),
) {
    let Some(&(c, a, b)) = blocks.get(at) else {
        emit(rho, coef);
        return;
    };
    for r in 0..=a.min(b) {
        let k = hermite_product_coef(a, b, r) * dt.powi(r as i32);
        let m = a + b - 2 * r;
        let len = rho.len();
        rho.extend(std::iter::repeat_n(c, m));
        linearize(blocks, at + 1, coef * k, dt, rho, emit);
        rho.truncate(len);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid(n: usize) -> Grid {
        Grid::new(n).unwrap()
    }

    #[test]
    fn hermite_values() {
        assert_eq!(hermite(0, 3.0), 1.0);
        assert_eq!(hermite(2, 0.0), -0.5);
        assert_relative_eq!(hermite(3, 1.0), -1.0 / 3.0, epsilon = 1e-15);
        for x in [-1.3, 0.2, 2.5] {
            assert_eq!(hermite(1, x), x);
            assert_relative_eq!(hermite(3, x), (x * x * x - 3.0 * x) / 6.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn square_of_x1() {
        let f = SymKernel::constant(grid(1), 2, 1.0).unwrap();
        assert_relative_eq!(eval_multiple_integral(&f, &[0.0]).unwrap(), -1.0);
        let g = grid(4);
        let f = SymKernel::constant(g, 2, 1.0).unwrap();
        let path = [0.3, -0.1, 0.7, 0.2];
        let x1: f64 = path.iter().sum();
        assert_relative_eq!(eval_multiple_integral(&f, &path).unwrap(), x1 * x1 - 1.0, epsilon = 1e-13);
    }

    #[test]
    fn tensor_power_is_hermite() {
        let g = grid(4);
        let f = SymKernel::constant(g, 3, 1.0).unwrap();
        let path = [0.3, -0.1, 0.7, 0.2];
        let x1: f64 = path.iter().sum();
        assert_relative_eq!(eval_multiple_integral(&f, &path).unwrap(), 6.0 * hermite(3, x1), epsilon = 1e-13);
    }

    #[test]
    fn brute_force_expansion() {
        // Off-diagonal sum of f·ΔX over distinct cells plus explicit diagonal terms.
        let g = grid(3);
        let f = SymKernel::from_fn(g, 2, |c| 1.0 + c[0] as f64 - 0.5 * c[1] as f64).unwrap();
        let path = [0.4, -0.3, 0.25];
        let dt = g.width();
        let mut expect = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                let v = f.get(&[a, b]).unwrap();
                expect += if a == b { v * (path[a] * path[a] - dt) } else { v * path[a] * path[b] };
            }
        }
        assert_relative_eq!(eval_multiple_integral(&f, &path).unwrap(), expect, epsilon = 1e-13);
    }

    #[test]
    fn moments_examples() {
        let g = grid(4);
        let x1 = ChaosFunctional::isonormal(&StepFunction::constant(g, 1.0));
        assert_eq!(x1.moments(), Moments { mean: 0.0, variance: 1.0 });
        let i2 = ChaosFunctional::from_kernel(SymKernel::constant(g, 2, 1.0).unwrap()).unwrap();
        assert_relative_eq!(i2.variance(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn derivative_examples() {
        let g = grid(4);
        let h = StepFunction::new(g, vec![1.0, 0.0, 2.0, -1.0]).unwrap();
        let x = ChaosFunctional::isonormal(&StepFunction::constant(g, 1.0));
        assert_eq!(x.derivative(2).unwrap(), ChaosFunctional::constant(g, 1.0));
        let f = ChaosFunctional::from_kernel(SymKernel::tensor_power(&h, 2).unwrap()).unwrap();
        let d = f.derivative(2).unwrap();
        let expect = ChaosFunctional::isonormal(&h).scale(4.0);
        assert!(d.max_abs_diff(&expect).unwrap() < 1e-14);
        let a = TimeSet::interval(g, 0, 2).unwrap();
        assert!(f.conditional_expectation(&a).unwrap().derivative(3).unwrap().is_zero());
    }

    #[test]
    fn conditional_expectation_of_x1() {
        let g = grid(4);
        let x1 = ChaosFunctional::isonormal(&StepFunction::constant(g, 1.0));
        let tail = TimeSet::interval(g, 2, 4).unwrap();
        let path = [0.3, -0.1, 0.7, 0.2];
        assert_relative_eq!(x1.conditional_expectation(&tail).unwrap().eval(&path).unwrap(), 0.9, epsilon = 1e-14);
        assert_eq!(x1.conditional_expectation(&TimeSet::full(g)).unwrap(), x1);
    }

    #[test]
    fn product_matches_pathwise() {
        let g = grid(3);
        let f = ChaosFunctional::new(
            g,
            0.5,
            vec![
                SymKernel::from_fn(g, 1, |c| 1.0 - c[0] as f64).unwrap(),
                SymKernel::from_fn(g, 2, |c| 0.3 * (c[0] + c[1]) as f64).unwrap(),
            ],
        )
        .unwrap();
        let h = ChaosFunctional::new(g, -1.0, vec![SymKernel::from_fn(g, 1, |c| 0.5 + c[0] as f64).unwrap()]).unwrap();
        let p = f.product(&h, 4).unwrap();
        for path in [[0.4, -0.3, 0.25], [1.1, 0.0, -0.7]] {
            let lhs = p.eval(&path).unwrap();
            let rhs = f.eval(&path).unwrap() * h.eval(&path).unwrap();
            assert_relative_eq!(lhs, rhs, epsilon = 1e-12);
        }
        assert!(matches!(f.product(&f, 3), Err(Error::OrderOutOfRange { .. })));
    }

    #[test]
    fn disjoint_product_rejects_overlap() {
        let g = grid(4);
        let left = ChaosFunctional::isonormal(&StepFunction::indicator(g, 0, 2).unwrap());
        let right = ChaosFunctional::isonormal(&StepFunction::indicator(g, 2, 4).unwrap());
        let p = left.disjoint_product(&right).unwrap();
        let path = [0.3, -0.1, 0.7, 0.2];
        assert_relative_eq!(p.eval(&path).unwrap(), 0.2 * 0.9, epsilon = 1e-14);
        assert!(left.disjoint_product(&left).is_err());
    }

    #[test]
    fn text_roundtrip() {
        let g = grid(3);
        let f = ChaosFunctional::new(
            g,
            0.25,
            vec![SymKernel::zeros(g, 1).unwrap(), SymKernel::from_fn(g, 2, |c| c[1] as f64).unwrap()],
        )
        .unwrap();
        assert_eq!(ChaosFunctional::from_text(&f.to_text()).unwrap(), f);
    }
}

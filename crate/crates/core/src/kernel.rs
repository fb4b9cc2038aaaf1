//! Symmetric step kernels on `[0, 1]^n`, stored densely by sorted cell
//! multiset. The stored number is the value of the symmetric function on
//! every ordering of the multiset's cell block.

use std::fmt::Write as _;

use crate::error::{contract, Error, Result};
use crate::grid::{Grid, TimeSet};
use crate::multiset::{self, MAX_ORDER, STORAGE_CAP};
use crate::paths::StepFunction;

#[derive(Debug, Clone, PartialEq)]
pub struct SymKernel {
    grid: Grid,
    order: usize,
    values: Vec<f64>,
}

fn check_shape(grid: Grid, order: usize) -> Result<usize> {
    if order > MAX_ORDER {
        return Err(Error::OrderOutOfRange { order, min: 0, max: MAX_ORDER });
    }
    let len = multiset::count(grid.n_cells(), order);
    if len > STORAGE_CAP {
        return Err(Error::CapacityExceeded { len, cap: STORAGE_CAP });
    }
    Ok(len)
}

impl SymKernel {
    pub fn zeros(grid: Grid, order: usize) -> Result<Self> {
        let len = check_shape(grid, order)?;
        Ok(SymKernel { grid, order, values: vec![0.0; len] })
    }

    pub fn constant(grid: Grid, order: usize, value: f64) -> Result<Self> {
        let len = check_shape(grid, order)?;
        Ok(SymKernel { grid, order, values: vec![value; len] })
    }

    pub fn from_fn(grid: Grid, order: usize, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let mut k = SymKernel::zeros(grid, order)?;
        multiset::for_each(grid.n_cells(), order, |r, cells| k.values[r] = f(cells));
        Ok(k)
    }

    /// `h^{⊗n}`.
    pub fn tensor_power(h: &StepFunction, order: usize) -> Result<Self> {
        let v = h.values();
        SymKernel::from_fn(h.grid(), order, |cells| cells.iter().map(|&c| v[c]).product())
    }

    /// The order-1 kernel of `X(h)`.
    pub fn from_step(h: &StepFunction) -> Self {
        SymKernel { grid: h.grid(), order: 1, values: h.values().to_vec() }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Values in rank order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    fn check_cells(&self, cells: &[usize]) -> Result<()> {
        if cells.len() != self.order {
            return Err(Error::DimensionMismatch { expected: self.order, found: cells.len() });
        }
        if let Some(&c) = cells.iter().find(|&&c| c >= self.grid.n_cells()) {
            return Err(contract(format!("cell {c} outside a {}-cell grid", self.grid.n_cells())));
        }
        Ok(())
    }

    /// Value at any ordering of `cells`.
    pub fn get(&self, cells: &[usize]) -> Result<f64> {
        self.check_cells(cells)?;
        let mut sorted = cells.to_vec();
        sorted.sort_unstable();
        Ok(self.values[multiset::rank(&sorted)])
    }

    pub fn set(&mut self, cells: &[usize], value: f64) -> Result<()> {
        self.check_cells(cells)?;
        let mut sorted = cells.to_vec();
        sorted.sort_unstable();
        self.values[multiset::rank(&sorted)] = value;
        Ok(())
    }

    /// Value at an already sorted multiset, no checks.
    pub(crate) fn at(&self, sorted: &[usize]) -> f64 {
        self.values[multiset::rank(sorted)]
    }

    pub fn for_each(&self, mut f: impl FnMut(&[usize], f64)) {
        multiset::for_each(self.grid.n_cells(), self.order, |r, cells| f(cells, self.values[r]));
    }

    /// Rebuilds every value from its multiset and current value.
    pub fn map_cells(&self, mut f: impl FnMut(&[usize], f64) -> f64) -> Self {
        let mut out = self.clone();
        multiset::for_each(self.grid.n_cells(), self.order, |r, cells| {
            out.values[r] = f(cells, self.values[r]);
        });
        out
    }

    fn ensure_compatible(&self, other: &SymKernel) -> Result<()> {
        self.grid.ensure_same(&other.grid)?;
        if self.order != other.order {
            return Err(Error::DimensionMismatch { expected: self.order, found: other.order });
        }
        Ok(())
    }

    /// `⟨f, g⟩ = ∫ f g` over `[0, 1]^n`.
    pub fn inner(&self, other: &SymKernel) -> Result<f64> {
        self.ensure_compatible(other)?;
        let vol = self.grid.width().powi(self.order as i32);
        let mut acc = 0.0;
        multiset::for_each(self.grid.n_cells(), self.order, |r, cells| {
            let (a, b) = (self.values[r], other.values[r]);
            if a != 0.0 && b != 0.0 {
                acc += a * b * multiset::orderings(cells);
            }
        });
        Ok(acc * vol)
    }

    pub fn norm_sq(&self) -> f64 {
        self.inner(self).expect("a kernel is compatible with itself")
    }

    /// `∫ f` over `[0, 1]^n`.
    pub fn integral(&self) -> f64 {
        let vol = self.grid.width().powi(self.order as i32);
        let mut acc = 0.0;
        self.for_each(|cells, v| {
            if v != 0.0 {
                acc += v * multiset::orderings(cells);
            }
        });
        acc * vol
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// `self += c · other`.
    pub fn axpy(&mut self, c: f64, other: &SymKernel) -> Result<()> {
        self.ensure_compatible(other)?;
        self.values.iter_mut().zip(&other.values).for_each(|(a, b)| *a += c * b);
        Ok(())
    }

    pub fn add(&self, other: &SymKernel) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(1.0, other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &SymKernel) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &SymKernel) -> Result<f64> {
        self.ensure_compatible(other)?;
        Ok(self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Keeps the values whose cells all pass `keep`.
    pub(crate) fn retain_cells(&self, keep: impl Fn(usize) -> bool) -> Self {
        self.map_cells(|cells, v| if cells.iter().all(|&c| keep(c)) { v } else { 0.0 })
    }

    /// `f · 1_A^{⊗n}`.
    pub fn project(&self, a: &TimeSet) -> Result<Self> {
        self.grid.ensure_same(&a.grid())?;
        Ok(self.retain_cells(|c| a.contains(c)))
    }

    /// `f · 1_{A_{n,q}(t)}` for the grid time `t = k_t Δ`: keeps the
    /// multisets with exactly `q` cells left of `t`.
    pub fn restrict_a(&self, q: usize, k_t: usize) -> Result<Self> {
        if q > self.order {
            return Err(contract(format!("q = {q} exceeds the order {}", self.order)));
        }
        self.grid.ensure_boundary(k_t)?;
        Ok(self.map_cells(|cells, v| {
            if cells.partition_point(|&c| c < k_t) == q {
                v
            } else {
                0.0
            }
        }))
    }

    /// `f̂(x) = f(1 − x)` coordinatewise.
    pub fn reverse(&self) -> Self {
        let last = self.grid.n_cells() - 1;
        let mut out = self.clone();
        let mut buf = vec![0usize; self.order];
        multiset::for_each(self.grid.n_cells(), self.order, |r, cells| {
            for (b, &c) in buf.iter_mut().zip(cells.iter().rev()) {
                *b = last - c;
            }
            out.values[multiset::rank(&buf)] = self.values[r];
        });
        out
    }

    /// The order `n − 1` kernel `ν ↦ f(ν, s)` with the last variable frozen in `cell`.
    pub fn section(&self, cell: usize) -> Result<Self> {
        if self.order == 0 {
            return Err(contract("an order-0 kernel has no variable to freeze"));
        }
        if cell >= self.grid.n_cells() {
            return Err(contract(format!("cell {cell} outside a {}-cell grid", self.grid.n_cells())));
        }
        SymKernel::from_fn(self.grid, self.order - 1, |nu| self.at(&multiset::with_cell(nu, cell)))
    }

    /// Symmetrized `f ⊗ g`.
    pub fn tensor0(&self, other: &SymKernel) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let (p, q) = (self.order, other.order);
        let norm = multiset::binomial(p + q, p) as f64;
        let f_zero = self.is_zero();
        let g_zero = other.is_zero();
        let mut out = SymKernel::zeros(self.grid, p + q)?;
        if f_zero || g_zero {
            return Ok(out);
        }
        multiset::for_each(self.grid.n_cells(), p + q, |r, cells| {
            let mut acc = 0.0;
            multiset::for_each_split(cells, p, |nu, rest, w| {
                acc += w * self.at(nu) * other.at(rest);
            });
            out.values[r] = acc / norm;
        });
        Ok(out)
    }

    /// Largest and smallest cells carrying a nonzero value.
    pub fn support_bounds(&self) -> Option<(usize, usize)> {
        let mut bounds: Option<(usize, usize)> = None;
        self.for_each(|cells, v| {
            if v != 0.0 {
                if let (Some(&lo), Some(&hi)) = (cells.first(), cells.last()) {
                    bounds = Some(match bounds {
                        Some((a, b)) => (a.min(lo), b.max(hi)),
                        None => (lo, hi),
                    });
                }
            }
        });
        bounds
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("order {} cells {}\n", self.order, self.grid.n_cells());
        self.for_each(|cells, v| {
            if v != 0.0 {
                let idx: Vec<String> = cells.iter().map(|c| (c + 1).to_string()).collect();
                let _ = writeln!(out, "{}={}", idx.join(","), v);
            }
        });
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (line, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "missing header".into() })?;
        let (order, n_cells) = parse_kernel_header(header, line)?;
        let grid = Grid::new(n_cells)?;
        let mut k = SymKernel::zeros(grid, order)?;
        for (line, l) in lines {
            k.parse_entry(l, line)?;
        }
        Ok(k)
    }

    pub(crate) fn parse_entry(&mut self, l: &str, line: usize) -> Result<()> {
        let bad = |msg: &str| Error::Parse { line, msg: msg.to_string() };
        let (lhs, rhs) = l.split_once('=').ok_or_else(|| bad("expected `cells=value`"))?;
        let value: f64 = rhs.trim().parse().map_err(|_| bad("value is not a number"))?;
        let cells = if lhs.trim().is_empty() {
            Vec::new()
        } else {
            lhs.split(',')
                .map(|s| match s.trim().parse::<usize>() {
                    Ok(c) if c >= 1 => Ok(c - 1),
                    _ => Err(bad("cell indices are 1-based integers")),
                })
                .collect::<Result<Vec<_>>>()?
        };
        if cells.windows(2).any(|w| w[0] > w[1]) {
            return Err(bad("cell indices must be sorted"));
        }
        self.set(&cells, value).map_err(|e| bad(&e.to_string()))
    }
}

pub(crate) fn parse_kernel_header(header: &str, line: usize) -> Result<(usize, usize)> {
    let words: Vec<&str> = header.split_whitespace().collect();
    match words.as_slice() {
        ["order", n, "cells", c] => match (n.parse(), c.parse()) {
            (Ok(n), Ok(c)) => Ok((n, c)),
            _ => Err(Error::Parse { line, msg: "non-numeric kernel header".into() }),
        },
        _ => Err(Error::Parse { line, msg: format!("expected `order n cells N`, got `{header}`") }),
    }
}

/// An unsymmetrized step function on ordered `n`-tuples of cells.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTensor {
    grid: Grid,
    order: usize,
    values: Vec<f64>,
}

impl RawTensor {
    pub fn zeros(grid: Grid, order: usize) -> Result<Self> {
        if order > MAX_ORDER {
            return Err(Error::OrderOutOfRange { order, min: 0, max: MAX_ORDER });
        }
        let len = grid.n_cells().checked_pow(order as u32).unwrap_or(usize::MAX);
        if len > STORAGE_CAP {
            return Err(Error::CapacityExceeded { len, cap: STORAGE_CAP });
        }
        Ok(RawTensor { grid, order, values: vec![0.0; len] })
    }

    pub fn from_fn(grid: Grid, order: usize, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let mut t = RawTensor::zeros(grid, order)?;
        let mut tuple = vec![0usize; order];
        for i in 0..t.values.len() {
            t.decode(i, &mut tuple);
            t.values[i] = f(&tuple);
        }
        Ok(t)
    }

    fn decode(&self, mut i: usize, tuple: &mut [usize]) {
        let n = self.grid.n_cells();
        for slot in tuple.iter_mut().rev() {
            *slot = i % n;
            i /= n;
        }
    }

    fn offset(&self, tuple: &[usize]) -> usize {
        tuple.iter().fold(0, |acc, &c| acc * self.grid.n_cells() + c)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, tuple: &[usize]) -> f64 {
        self.values[self.offset(tuple)]
    }

    pub fn set(&mut self, tuple: &[usize], value: f64) {
        let i = self.offset(tuple);
        self.values[i] = value;
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.width().powi(self.order as i32)
    }

    /// Averages over the orderings of each multiset.
    pub fn symmetrize(&self) -> Result<SymKernel> {
        let mut out = SymKernel::zeros(self.grid, self.order)?;
        let mut tuple = vec![0usize; self.order];
        for (i, &v) in self.values.iter().enumerate() {
            self.decode(i, &mut tuple);
            tuple.sort_unstable();
            out.values[multiset::rank(&tuple)] += v;
        }
        multiset::for_each(self.grid.n_cells(), self.order, |r, cells| {
            out.values[r] /= multiset::orderings(cells);
        });
        Ok(out)
    }
}

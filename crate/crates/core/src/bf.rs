//! Sums of forward × backward martingale products
//! `Z_t = Σ E[H_1 | F_t]·E[H_2 | F_{t^c}]`, the exact two-sided splitting of
//! finite-chaos variables, and the partition construction of such sums that
//! reproduces `∫₀ᵗ E[v^π_s | F_{[s,t]^c}] dX_s`.

use crate::chaos::{ChaosFunctional, HermiteTable};
use crate::error::{contract, Result};
use crate::grid::{Grid, Partition};
use crate::kernel::SymKernel;
use crate::multiset::{self, binomial};
use crate::paths::StepFunction;
use crate::process::{ChaosProcess, Provenance, SkorohodProcess};
use crate::skorohod::{conditional_averages, tudor_representation, RegionKernels};

/// Relative pivot threshold of the cross factorization.
pub const SPLIT_TOL: f64 = 1e-12;

/// One product `M_t·N_t` with `M_t = E[H_1 | F_t]` and `N_t = E[H_2 | F_{t^c}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BfSummand {
    forward: ChaosFunctional,
    backward: ChaosFunctional,
}

impl BfSummand {
    /// `H_1` must be centered.
    pub fn new(forward: ChaosFunctional, backward: ChaosFunctional) -> Result<Self> {
        forward.grid().ensure_same(&backward.grid())?;
        if forward.mean() != 0.0 {
            return Err(contract("the forward variable of a summand must be centered"));
        }
        Ok(BfSummand { forward, backward })
    }

    pub fn forward(&self) -> &ChaosFunctional {
        &self.forward
    }

    pub fn backward(&self) -> &ChaosFunctional {
        &self.backward
    }

    /// `M_t`, the forward martingale at boundary `k_t`.
    pub fn forward_at(&self, k_t: usize) -> ChaosFunctional {
        self.forward.retain_cells(|c| c < k_t)
    }

    /// `N_t`, the backward martingale at boundary `k_t`.
    pub fn backward_at(&self, k_t: usize) -> ChaosFunctional {
        self.backward.retain_cells(|c| c >= k_t)
    }

    /// Last cell of the forward support and first cell of the backward
    /// support, when both are nonempty.
    fn support_gap(&self) -> (Option<usize>, Option<usize>) {
        let last = self.forward.support().iter().rposition(|&u| u);
        let first = self.backward.support().iter().position(|&u| u);
        (last, first)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BfProcess {
    grid: Grid,
    summands: Vec<BfSummand>,
}

impl BfProcess {
    pub fn new(grid: Grid, summands: Vec<BfSummand>) -> Result<Self> {
        for s in &summands {
            grid.ensure_same(&s.forward.grid())?;
        }
        Ok(BfProcess { grid, summands })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn summands(&self) -> &[BfSummand] {
        &self.summands
    }

    pub fn len(&self) -> usize {
        self.summands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.summands.is_empty()
    }

    /// `Z_t` as a chaos functional; `M_t` and `N_t` live on disjoint cells,
    /// so each product is exact.
    pub fn functional_at(&self, k_t: usize) -> Result<ChaosFunctional> {
        self.grid.ensure_boundary(k_t)?;
        let mut z = ChaosFunctional::zero(self.grid);
        for s in &self.summands {
            z.axpy(1.0, &s.forward_at(k_t).disjoint_product(&s.backward_at(k_t))?)?;
        }
        Ok(z)
    }

    pub fn to_process(&self) -> Result<SkorohodProcess> {
        let values = (0..=self.grid.n_cells()).map(|k| self.functional_at(k)).collect::<Result<Vec<_>>>()?;
        SkorohodProcess::new(self.grid, values, Provenance::ForwardBackward)
    }
}

/// Pathwise `Z_t = Σ M_t(ω)·N_t(ω)`.
pub fn bf_eval(z: &BfProcess, k_t: usize, path: &[f64]) -> Result<f64> {
    z.grid.ensure_boundary(k_t)?;
    let order = z.summands.iter().map(|s| s.forward.order().max(s.backward.order())).max().unwrap_or(0);
    let table = HermiteTable::new(z.grid, path, order)?;
    Ok(z.summands
        .iter()
        .map(|s| s.forward_at(k_t).eval_table(&table) * s.backward_at(k_t).eval_table(&table))
        .sum())
}

/// Factors `B ≈ Σ_k α_k β_kᵀ` by full-pivot cross approximation: take the
/// largest residual entry (first in row-major order on ties), peel off its
/// row and column, stop once the largest entry is at most `tol·max|B|`.
pub fn cross_factorize(b: &[f64], rows: usize, cols: usize, tol: f64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut r = b.to_vec();
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut factors = Vec::new();
    if scale == 0.0 {
        return factors;
    }
    for _ in 0..rows.min(cols) {
        let (mut pi, mut pj, mut best) = (0, 0, 0.0f64);
        for i in 0..rows {
            for j in 0..cols {
                let v = r[i * cols + j].abs();
                if v > best {
                    (pi, pj, best) = (i, j, v);
                }
            }
        }
        if best <= tol * scale {
            break;
        }
        let pivot = r[pi * cols + pj];
        let alpha: Vec<f64> = (0..rows).map(|i| r[i * cols + pj] / pivot).collect();
        let beta: Vec<f64> = r[pi * cols..(pi + 1) * cols].to_vec();
        for i in 0..rows {
            for j in 0..cols {
                r[i * cols + j] -= alpha[i] * beta[j];
            }
        }
        factors.push((alpha, beta));
    }
    factors
}

/// Writes `F = Σ_k G_1^{(k)}·G_2^{(k)}` with `G_1^{(k)}` measurable on the
/// cells left of `k_a` and `G_2^{(k)}` on the cells from `k_b` on.
///
/// Each order-`n` kernel splits by the number `q` of left cells; the block
/// `B[L, R] = f_n(L ∪ R)` is cross-factorized and every rank-one term
/// `α ⊗ β` becomes the pair `(C(n, q)·I_q(α), I_{n−q}(β))`. Purely left and
/// purely right parts, and the mean, are merged into two pairs.
pub fn split_two_sided(f: &ChaosFunctional, k_a: usize, k_b: usize) -> Result<Vec<(ChaosFunctional, ChaosFunctional)>> {
    let grid = f.grid();
    grid.ensure_boundary(k_b)?;
    if k_a > k_b {
        return Err(contract(format!("split needs a <= a', got {k_a} > {k_b}")));
    }
    let n = grid.n_cells();
    for k in f.kernels() {
        let mut bad = false;
        k.for_each(|cells, v| bad |= v != 0.0 && cells.iter().any(|&c| c >= k_a && c < k_b));
        if bad {
            return Err(contract(format!("order-{} kernel is not supported on [0, a] ∪ [a', 1]", k.order())));
        }
    }
    let mut left_only = ChaosFunctional::constant(grid, f.mean());
    let mut right_only = ChaosFunctional::zero(grid);
    let mut pairs = Vec::new();
    for k in f.kernels().iter().filter(|k| !k.is_zero()) {
        let order = k.order();
        left_only.axpy(1.0, &ChaosFunctional::from_kernel(k.retain_cells(|c| c < k_a))?)?;
        right_only.axpy(1.0, &ChaosFunctional::from_kernel(k.retain_cells(|c| c >= k_b))?)?;
        for q in 1..order {
            let p = order - q;
            let rows = multiset::count(k_a, q);
            let cols = multiset::count(n - k_b, p);
            if rows == 0 || cols == 0 {
                continue;
            }
            let mut block = vec![0.0; rows * cols];
            multiset::for_each(k_a, q, |i, left| {
                multiset::for_each(n - k_b, p, |j, right| {
                    let mut mu = left.to_vec();
                    mu.extend(right.iter().map(|c| c + k_b));
                    block[i * cols + j] = k.at(&mu);
                });
            });
            let weight = binomial(order, q) as f64;
            for (alpha, beta) in cross_factorize(&block, rows, cols, SPLIT_TOL) {
                let mut a = SymKernel::zeros(grid, q)?;
                multiset::for_each(k_a, q, |i, left| a.values_mut()[multiset::rank(left)] = weight * alpha[i]);
                let mut b = SymKernel::zeros(grid, p)?;
                multiset::for_each(n - k_b, p, |j, right| {
                    let shifted: Vec<usize> = right.iter().map(|c| c + k_b).collect();
                    b.values_mut()[multiset::rank(&shifted)] = beta[j];
                });
                pairs.push((ChaosFunctional::from_kernel(a)?, ChaosFunctional::from_kernel(b)?));
            }
        }
    }
    let mut out = Vec::with_capacity(pairs.len() + 2);
    if !left_only.is_zero() {
        out.push((left_only.trimmed(), ChaosFunctional::constant(grid, 1.0)));
    }
    if !right_only.is_zero() {
        out.push((ChaosFunctional::constant(grid, 1.0), right_only.trimmed()));
    }
    out.extend(pairs);
    Ok(out)
}

/// The forward × backward sum built on `π` from `u`: with `v` the
/// representation integrand and `F_i` its conditional interval averages,
/// each split pair `(G_1, G_2)` of `F_i` gives the summand
/// `H_1 = G_1·(X_{t_{i+1}} − X_{t_i})`, `H_2 = G_2`.
pub fn theorem1_construct(u: &ChaosProcess, pi: &Partition) -> Result<BfProcess> {
    let grid = u.grid();
    let v = tudor_representation(u)?;
    let averages = conditional_averages(&v, pi)?;
    let mut summands = Vec::new();
    for ((k0, k1), f) in pi.intervals().zip(&averages) {
        let dx = ChaosFunctional::isonormal(&StepFunction::indicator(grid, k0, k1)?);
        for (g1, g2) in split_two_sided(f, k0, k1)? {
            summands.push(BfSummand::new(g1.disjoint_product(&dx)?, g2)?);
        }
    }
    BfProcess::new(grid, summands)
}

/// The region kernels of `Z`: for sorted `μ`,
/// `f_{l,q}(μ) = C(l,q)^{-1} Σ_u h_q^{(u)}(c_1..c_q)·g_{l−q}^{(u)}(c_{q+1}..c_l)`
/// with `h` the kernels of `H_1`, `g` those of `H_2` and `g_0` its mean.
pub fn lemma7_chaos_form(z: &BfProcess) -> Result<RegionKernels> {
    let grid = z.grid;
    let mut top = 0;
    for s in &z.summands {
        if let (Some(last), Some(first)) = s.support_gap() {
            if last >= first {
                return Err(contract(format!("summand supports overlap: cell {last} >= cell {first}")));
            }
        }
        let (p, q) = (s.forward.effective_order(), s.backward.effective_order());
        if p > 0 {
            top = top.max(p + q);
        }
    }
    let mut kernels = Vec::with_capacity(top);
    for l in 1..=top {
        let mut row = Vec::with_capacity(l);
        for q in 1..=l {
            let norm = binomial(l, q) as f64;
            let f = SymKernel::from_fn(grid, l, |mu| {
                let (left, right) = mu.split_at(q);
                let mut acc = 0.0;
                for s in &z.summands {
                    let Some(h) = s.forward.kernel(q) else { continue };
                    let g = if l == q { s.backward.mean() } else { s.backward.kernel(l - q).map_or(0.0, |g| g.at(right)) };
                    if g != 0.0 {
                        acc += h.at(left) * g;
                    }
                }
                acc / norm
            })?;
            row.push(f);
        }
        kernels.push(row);
    }
    Ok(RegionKernels::new(grid, kernels))
}

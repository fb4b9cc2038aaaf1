//! Skorohod integral processes `Y_t = δ(u·1_{[0,t]})` of finite-chaos step
//! integrands, their Itô–Skorohod form `Y_t = ∫₀ᵗ E[v_s | F_{[s,t]^c}] dX_s`,
//! the conditional step approximation, the partition functional `V̂`, and the
//! region kernels `f_{l,q}` of the finite-chaos representation.
//!
//! Grid times are boundary indices `k ∈ 0..=N`; see [`crate::grid`].

use crate::chaos::{ChaosFunctional, HermiteTable};
use crate::error::{contract, Error, Result};
use crate::grid::{Grid, Partition};
use crate::kernel::SymKernel;
use crate::multiset::{self, factorial, MAX_ORDER};
use crate::process::{ChaosProcess, ProcessNorms, Provenance, SkorohodProcess};

/// Adds the kernels of `δ(F·1_{cell})` to `out`: order `j + 1` gains
/// `m_cell(μ)/(j + 1)·f_j(μ − cell)`, and the mean becomes an order-1 entry.
/// When `F` does not involve `cell` this is exactly `F·ΔX_cell`.
pub(crate) fn push_cell(f: &ChaosFunctional, cell: usize, out: &mut ChaosFunctional) -> Result<()> {
    let top = f.effective_order();
    if top + 1 > MAX_ORDER {
        return Err(Error::OrderOutOfRange { order: top + 1, min: 0, max: MAX_ORDER });
    }
    out.pad_to(top + 1)?;
    let mean = f.mean();
    if mean != 0.0 {
        let k1 = out.kernel_mut(1)?;
        let r = multiset::rank(&[cell]);
        k1.values_mut()[r] += mean;
    }
    for g in f.kernels().iter().take(top) {
        let j = g.order();
        let target = out.kernel_mut(j + 1)?;
        g.for_each(|nu, v| {
            if v == 0.0 {
                return;
            }
            let mu = multiset::with_cell(nu, cell);
            let m = mu.iter().filter(|&&c| c == cell).count();
            let r = multiset::rank(&mu);
            target.values_mut()[r] += m as f64 / (j + 1) as f64 * v;
        });
    }
    Ok(())
}

/// `δ(u·1_{[0,t]})` at the boundary `k_t`.
pub fn skorohod_integral(u: &ChaosProcess, k_t: usize) -> Result<ChaosFunctional> {
    u.grid().ensure_boundary(k_t)?;
    let mut y = ChaosFunctional::zero(u.grid());
    for cell in 0..k_t {
        push_cell(u.at(cell), cell, &mut y)?;
    }
    Ok(y)
}

/// `Y_t = δ(u·1_{[0,t]})` at every boundary.
pub fn skorohod_process(u: &ChaosProcess) -> Result<SkorohodProcess> {
    let grid = u.grid();
    let mut y = ChaosFunctional::zero(grid);
    y.pad_to(u.effective_order() + 1)?;
    let mut values = Vec::with_capacity(grid.n_cells() + 1);
    values.push(y.clone());
    for cell in 0..grid.n_cells() {
        push_cell(u.at(cell), cell, &mut y)?;
        values.push(y.clone());
    }
    SkorohodProcess::new(grid, values, Provenance::Direct)
}

/// `E[Y_t − Y_s | F_{[s,t]^c}]`; identically zero for Skorohod processes.
pub fn martingale_defect(y: &SkorohodProcess, k_s: usize, k_t: usize) -> Result<ChaosFunctional> {
    if k_s >= k_t {
        return Err(contract(format!("martingale defect needs s < t, got {k_s} >= {k_t}")));
    }
    let inc = y.at(k_t)?.sub(y.at(k_s)?)?;
    Ok(inc.retain_cells(|c| c < k_s || c >= k_t))
}

/// Largest absolute defect kernel value over every pair `s < t` of boundaries.
pub fn max_martingale_defect(y: &SkorohodProcess) -> Result<f64> {
    let n = y.grid().n_cells();
    let mut worst = 0.0f64;
    for k_s in 0..n {
        for k_t in k_s + 1..=n {
            worst = worst.max(martingale_defect(y, k_s, k_t)?.max_abs());
        }
    }
    Ok(worst)
}

/// Weight of `1_{x < α}` averaged over `x` in cell `c` and `α` in cell `a`.
fn below_weight(c: usize, a: usize) -> f64 {
    match c.cmp(&a) {
        std::cmp::Ordering::Less => 1.0,
        std::cmp::Ordering::Equal => 0.5,
        std::cmp::Ordering::Greater => 0.0,
    }
}

/// `v_α = u_α + ∫₀^α D_α u_s dX_s`, averaged over each cell block.
///
/// For `α` in cell `a` the order-`j` kernel is
/// `g_j^{(a)}(μ) + Σ_{c ∈ μ} m_c·g_j^{(c)}(μ − c + a)·w(c, a)` with `w` the
/// cell average of `1_{x < α}`. The part lost by the averaging lives inside
/// the diagonal blocks `c = a`; its norm is [`tudor_subcell_norm_sq`].
pub fn tudor_representation(u: &ChaosProcess) -> Result<ChaosProcess> {
    let grid = u.grid();
    ChaosProcess::from_fn(grid, |a| {
        let ua = u.at(a);
        let mut kernels = Vec::with_capacity(ua.order());
        for j in 1..=u.order() {
            let k = SymKernel::from_fn(grid, j, |mu| {
                let mut v = ua.kernel(j).map_or(0.0, |g| g.at(mu));
                for (c, m) in multiset::runs(mu) {
                    let w = below_weight(c, a);
                    if w == 0.0 {
                        continue;
                    }
                    if let Some(g) = u.at(c).kernel(j) {
                        let nu = multiset::without_cell(mu, c).expect("c is in μ");
                        v += m as f64 * w * g.at(&multiset::with_cell(&nu, a));
                    }
                }
                v
            })?;
            kernels.push(k);
        }
        ChaosFunctional::new(grid, ua.mean(), kernels)
    })
}

/// `‖v − Pv‖²_{1,2}` for the exact representation `v` and its cell-block
/// average `Pv` returned by [`tudor_representation`].
///
/// Inside the block `x_i, α ∈ a` the exact kernel carries `1_{x_i < α}`
/// where `Pv` carries `½`. With `K(ν) = g_j^{(a)}(ν + a)` the squared
/// remainder integrates to `j·‖K‖²Δ²/4 + j(j−1)·‖K(· + a)‖²Δ³/12`, weighted
/// by `(1 + j)·j!` for the value and its derivative.
pub fn tudor_subcell_norm_sq(u: &ChaosProcess) -> Result<f64> {
    let grid = u.grid();
    let dt = grid.width();
    let mut acc = 0.0;
    for a in 0..grid.n_cells() {
        for g in u.at(a).kernels() {
            let j = g.order();
            let k = g.section(a)?;
            let mut term = j as f64 * k.norm_sq() * dt * dt / 4.0;
            if j >= 2 {
                let k2 = k.section(a)?;
                term += (j * (j - 1)) as f64 * k2.norm_sq() * dt * dt * dt / 12.0;
            }
            acc += (1 + j) as f64 * factorial(j) * term;
        }
    }
    Ok(acc)
}

/// `∫₀ᵗ E[v_s | F_{[s,t]^c}] dX_s` as a chaos functional: the cell-`k`
/// integrand is projected onto cells left of `k` or right of `t`, then
/// multiplied by `ΔX_k`.
pub fn ito_skorohod_sum(v: &ChaosProcess, k_t: usize) -> Result<ChaosFunctional> {
    v.grid().ensure_boundary(k_t)?;
    let mut y = ChaosFunctional::zero(v.grid());
    for k in 0..k_t {
        let integrand = v.at(k).retain_cells(|c| c < k || c >= k_t);
        push_cell(&integrand, k, &mut y)?;
    }
    Ok(y)
}

/// [`ito_skorohod_sum`] at every boundary.
pub fn ito_skorohod_process(v: &ChaosProcess) -> Result<SkorohodProcess> {
    let grid = v.grid();
    let values = (0..=grid.n_cells()).map(|k| ito_skorohod_sum(v, k)).collect::<Result<Vec<_>>>()?;
    SkorohodProcess::new(grid, values, Provenance::ItoSkorohod)
}

/// Pathwise discrete Itô sum `Σ_{k < k_t} E[v_k | F_{[k,t]^c}](ω)·ΔX_k(ω)`.
pub fn ito_skorohod_eval(v: &ChaosProcess, k_t: usize, path: &[f64]) -> Result<f64> {
    let grid = v.grid();
    grid.ensure_boundary(k_t)?;
    let table = HermiteTable::new(grid, path, v.order())?;
    Ok((0..k_t)
        .map(|k| v.at(k).retain_cells(|c| c < k || c >= k_t).eval_table(&table) * path[k])
        .sum())
}

/// `F_i = (t_{i+1} − t_i)^{-1} ∫_{t_i}^{t_{i+1}} E[v_s | F_{[t_i,t_{i+1}]^c}] ds`
/// for every interval of `π`.
pub fn conditional_averages(v: &ChaosProcess, pi: &Partition) -> Result<Vec<ChaosFunctional>> {
    v.grid().ensure_same(&pi.grid())?;
    pi.intervals()
        .map(|(k0, k1)| {
            let mut f = ChaosFunctional::zero(v.grid());
            let w = 1.0 / (k1 - k0) as f64;
            for cell in k0..k1 {
                f.axpy(w, &v.at(cell).retain_cells(|c| c < k0 || c >= k1))?;
            }
            Ok(f)
        })
        .collect()
}

/// The step process `v^π` equal to `F_i` on `(t_i, t_{i+1})`.
pub fn step_approximation(v: &ChaosProcess, pi: &Partition) -> Result<ChaosProcess> {
    let averages = conditional_averages(v, pi)?;
    ChaosProcess::from_fn(v.grid(), |cell| Ok(averages[pi.interval_of_cell(cell)].clone()))
}

/// Outcome of the partition functional.
#[derive(Debug, Clone, PartialEq)]
pub struct VHat {
    /// Maximum over the family.
    pub value: f64,
    /// `Σ_j E[(Y_{t_{j+1}} − Y_{t_j})²]` for each partition, in family order.
    pub per_partition: Vec<f64>,
}

/// `Σ_j E[(Y_{t_{j+1}} − Y_{t_j})²]` for one partition.
pub fn partition_energy(y: &SkorohodProcess, pi: &Partition) -> Result<f64> {
    y.grid().ensure_same(&pi.grid())?;
    pi.intervals().try_fold(0.0, |acc, (k0, k1)| Ok(acc + y.at(k1)?.sub(y.at(k0)?)?.second_moment()))
}

/// `V̂(Y)`: the largest partition energy over `family`, a lower bound of the
/// supremum over all partitions.
pub fn v_functional(y: &SkorohodProcess, family: &[Partition]) -> Result<VHat> {
    if family.is_empty() {
        return Err(contract("the partition family is empty"));
    }
    let per_partition = family.iter().map(|p| partition_energy(y, p)).collect::<Result<Vec<_>>>()?;
    let value = per_partition.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(VHat { value, per_partition })
}

/// `V̂` over every dyadic coarsening of the grid.
pub fn v_functional_dyadic(y: &SkorohodProcess) -> Result<f64> {
    Ok(v_functional(y, &Partition::dyadic_family(y.grid()))?.value)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sides {
    pub lhs: f64,
    pub rhs: f64,
}

impl Sides {
    pub fn residual(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

/// `δ(F u 1_{[0,t]})` against `F δ(u 1_{[0,t]}) − ∫₀ᵗ D_s F u_s ds`, pathwise.
pub fn integration_by_parts_check(
    f: &ChaosFunctional,
    u: &ChaosProcess,
    k_t: usize,
    path: &[f64],
) -> Result<Sides> {
    let grid = u.grid();
    grid.ensure_same(&f.grid())?;
    grid.ensure_boundary(k_t)?;
    let fu = u.map(|v| f.product(v, MAX_ORDER - 1))?;
    let lhs = skorohod_integral(&fu, k_t)?.eval(path)?;
    let f_val = f.eval(path)?;
    let du = skorohod_integral(u, k_t)?.eval(path)?;
    let u_vals = u.eval(path)?;
    let mut drift = 0.0;
    for (cell, &uc) in u_vals.iter().enumerate().take(k_t) {
        drift += f.derivative(cell)?.eval(path)? * uc;
    }
    Ok(Sides { lhs, rhs: f_val * du - drift * grid.width() })
}

/// Region kernels `f_{l,q}`, `1 ≤ q ≤ l`, such that the order-`l` kernel of
/// a process at time `t` is `Σ_q f_{l,q}·1_{A_{l,q}(t)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionKernels {
    grid: Grid,
    /// `kernels[l − 1][q − 1] = f_{l,q}`.
    kernels: Vec<Vec<SymKernel>>,
}

impl RegionKernels {
    pub(crate) fn new(grid: Grid, kernels: Vec<Vec<SymKernel>>) -> Self {
        RegionKernels { grid, kernels }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Highest order `l`.
    pub fn max_order(&self) -> usize {
        self.kernels.len()
    }

    /// `f_{l,q}`; `None` outside `1 ≤ q ≤ l ≤ max_order`.
    pub fn get(&self, l: usize, q: usize) -> Option<&SymKernel> {
        if q == 0 {
            return None;
        }
        self.kernels.get(l.checked_sub(1)?)?.get(q - 1)
    }

    /// `Σ_l Σ_q I_l(f_{l,q}·1_{A_{l,q}(t)})`.
    pub fn resynthesize(&self, k_t: usize) -> Result<ChaosFunctional> {
        self.grid.ensure_boundary(k_t)?;
        let mut kernels = Vec::with_capacity(self.kernels.len());
        for (i, row) in self.kernels.iter().enumerate() {
            let mut k = SymKernel::zeros(self.grid, i + 1)?;
            for (qi, f) in row.iter().enumerate() {
                k.axpy(1.0, &f.restrict_a(qi + 1, k_t)?)?;
            }
            kernels.push(k);
        }
        ChaosFunctional::new(self.grid, 0.0, kernels)
    }

    pub fn resynthesize_process(&self, provenance: Provenance) -> Result<SkorohodProcess> {
        let values = (0..=self.grid.n_cells()).map(|k| self.resynthesize(k)).collect::<Result<Vec<_>>>()?;
        SkorohodProcess::new(self.grid, values, provenance)
    }

    /// `Σ_l l! Σ_{q=0}^{l−1} ‖f_{l,q} − f_{l,q+1}‖²` with `f_{l,0} = 0`.
    pub fn increment_energy(&self) -> Result<f64> {
        let mut acc = 0.0;
        for (i, row) in self.kernels.iter().enumerate() {
            let l = i + 1;
            let mut prev = SymKernel::zeros(self.grid, l)?;
            let mut sum = 0.0;
            for f in row {
                sum += f.sub(&prev)?.norm_sq();
                prev = f.clone();
            }
            acc += factorial(l) * sum;
        }
        Ok(acc)
    }
}

/// `f_{l,q}(μ) = l^{-1} Σ_{k ≤ q} g_{l−1}^{(c_k)}(μ ∖ c_k)` for sorted `μ`,
/// with `g_0` the mean of `u`.
fn duc_nualart_formula(u: &ChaosProcess, mu: &[usize], q: usize) -> f64 {
    let l = mu.len();
    let mut acc = 0.0;
    for k in 0..q {
        let c = mu[k];
        let rest = multiset::without_cell(mu, c).expect("c is in μ");
        let uc = u.at(c);
        acc += if l == 1 { uc.mean() } else { uc.kernel(l - 1).map_or(0.0, |g| g.at(&rest)) };
    }
    acc / l as f64
}

/// Reads `f_{l,q}` off `Y_t = δ(u 1_{[0,t]})`: on multisets whose `q`-th and
/// `(q+1)`-th cells differ, the value is the order-`l` kernel of `Y_t` for
/// any `t` between them, and every such `t` must agree. Multisets tied at
/// the split never meet a region `A_{l,q}(t)`; they take the closed form.
pub fn duc_nualart_extract(u: &ChaosProcess) -> Result<RegionKernels> {
    let grid = u.grid();
    let n = grid.n_cells();
    let y = skorohod_process(u)?;
    let top = u.effective_order() + 1;
    let mut kernels = Vec::with_capacity(top);
    for l in 1..=top {
        let mut row = Vec::with_capacity(l);
        for q in 1..=l {
            let mut f = SymKernel::zeros(grid, l)?;
            let mut failure: Option<String> = None;
            multiset::for_each(n, l, |r, mu| {
                if failure.is_some() {
                    return;
                }
                let lo = mu[q - 1] + 1;
                let hi = if q < l { mu[q] } else { n };
                if lo > hi {
                    f.values_mut()[r] = duc_nualart_formula(u, mu, q);
                    return;
                }
                let read = |k: usize| y.values()[k].kernel(l).map_or(0.0, |k| k.values()[r]);
                let first = read(lo);
                for k in lo + 1..=hi {
                    let other = read(k);
                    if (other - first).abs() > 1e-12 * (1.0 + first.abs()) {
                        failure = Some(format!("f_({l},{q}) at {mu:?} reads {first} and {other}"));
                        return;
                    }
                }
                f.values_mut()[r] = first;
            });
            if let Some(msg) = failure {
                return Err(Error::Inconsistent(msg));
            }
            row.push(f);
        }
        kernels.push(row);
    }
    Ok(RegionKernels::new(grid, kernels))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Majoration {
    pub lhs: f64,
    pub vhat: f64,
}

/// The region-kernel increment energy against `V̂(Y)` over the dyadic family.
pub fn majoration_check(u: &ChaosProcess) -> Result<Majoration> {
    let lhs = duc_nualart_extract(u)?.increment_energy()?;
    let vhat = v_functional_dyadic(&skorohod_process(u)?)?;
    Ok(Majoration { lhs, vhat })
}

/// One row of the convergence table for `Y − Y^π`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub depth: usize,
    /// `V̂(Y − Y^π)`.
    pub vhat: f64,
    /// `‖v − v^π‖²_{1,2}` with `v` the exact representation.
    pub bound: f64,
    pub norms: ProcessNorms,
}

/// `V̂(Y − Y^π)` and `‖v − v^π‖²_{1,2}` for the dyadic partition of `depth`.
pub fn convergence_row(u: &ChaosProcess, depth: usize) -> Result<ConvergenceRow> {
    let y = skorohod_process(u)?;
    let v = tudor_representation(u)?;
    let pi = Partition::dyadic(u.grid(), depth)?;
    let v_pi = step_approximation(&v, &pi)?;
    let y_pi = ito_skorohod_process(&v_pi)?;
    let vhat = v_functional_dyadic(&y.sub(&y_pi)?)?;
    let norms = v.sub(&v_pi)?.kernel_norms();
    let bound = norms.sobolev12_sq + tudor_subcell_norm_sq(u)?;
    Ok(ConvergenceRow { depth, vhat, bound, norms })
}

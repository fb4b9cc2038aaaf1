//! Backward representations `Y_t = F − E[F | F_{t^c}]` in the reversed
//! Brownian motion `X̂_s = X_1 − X_{1−s}`, their Clark–Ocone integrand, the
//! Hermite closed form, quadratic covariation on dyadic partitions and the
//! semimartingale decomposition of `Y` in its own time.
//!
//! Functionals of `X̂` are stored in reversed coordinates: reversed cell `a`
//! is original cell `N − 1 − a`, and they are evaluated on the reversed path.

use crate::chaos::{hermite, ChaosFunctional, HermiteTable};
use crate::error::{contract, Result};
use crate::grid::{Grid, Partition};
use crate::kernel::SymKernel;
use crate::multiset::factorial;
use crate::paths::{isonormal_eval, partial_sums, reverse_path, PathBatch, StepFunction};
use crate::process::{ChaosProcess, Provenance, SkorohodProcess};
use crate::skorohod::push_cell;

#[derive(Debug, Clone, PartialEq)]
pub struct BackwardRepresentation {
    /// The terminal variable `F`.
    pub f: ChaosFunctional,
    /// `Y_t = F − E[F | F_{t^c}]` at every boundary, original coordinates.
    pub y: SkorohodProcess,
    /// `φ̂` on reversed time cells, reversed coordinates.
    pub phi: ChaosProcess,
}

/// `E[F | F_{t^c}]`, the projection onto the cells right of `k_t`.
pub fn tail_expectation(f: &ChaosFunctional, k_t: usize) -> Result<ChaosFunctional> {
    f.grid().ensure_boundary(k_t)?;
    Ok(f.retain_cells(|c| c >= k_t))
}

/// `Y_t = F − E[F | F_{t^c}]`: each kernel becomes `f_n·(1 − 1_{[t,1]}^{⊗n})`.
pub fn backward_process(f: &ChaosFunctional) -> Result<SkorohodProcess> {
    let grid = f.grid();
    let values = (0..=grid.n_cells())
        .map(|k| f.sub(&tail_expectation(f, k)?))
        .collect::<Result<Vec<_>>>()?;
    SkorohodProcess::new(grid, values, Provenance::Backward)
}

pub fn backward_representation(f: &ChaosFunctional) -> Result<BackwardRepresentation> {
    Ok(BackwardRepresentation { f: f.clone(), y: backward_process(f)?, phi: clark_ocone_integrand(f)? })
}

/// `φ̂_α = E[D_{1−α} F | F̂_α]` in its left-point form: on reversed cell `a`
/// the derivative in original cell `N − 1 − a` is projected onto the
/// original cells from `N − a` on, then written in reversed coordinates.
pub fn clark_ocone_integrand(f: &ChaosFunctional) -> Result<ChaosProcess> {
    let n = f.grid().n_cells();
    ChaosProcess::from_fn(f.grid(), |a| Ok(f.derivative(n - 1 - a)?.retain_cells(|c| c >= n - a).reverse()))
}

fn ensure_predictable(phi: &ChaosProcess) -> Result<()> {
    if !phi.is_predictable() {
        return Err(contract("the integrand is not predictable for the reversed filtration"));
    }
    Ok(())
}

/// Pathwise `Σ φ̂_a(X̂)·ΔX̂_a` over the reversed cells of `(1 − t, 1]`.
pub fn backward_ito_eval(phi: &ChaosProcess, k_t: usize, path: &[f64]) -> Result<f64> {
    let grid = phi.grid();
    grid.ensure_boundary(k_t)?;
    ensure_predictable(phi)?;
    let rev = reverse_path(path);
    let table = HermiteTable::new(grid, &rev, phi.order())?;
    let n = grid.n_cells();
    Ok((n - k_t..n).map(|a| phi.at(a).eval_table(&table) * rev[a]).sum())
}

/// The discrete backward Itô sum as a functional in original coordinates.
pub fn backward_ito_sum(phi: &ChaosProcess, k_t: usize) -> Result<ChaosFunctional> {
    let grid = phi.grid();
    grid.ensure_boundary(k_t)?;
    ensure_predictable(phi)?;
    let n = grid.n_cells();
    let mut sum = ChaosFunctional::zero(grid);
    for a in n - k_t..n {
        push_cell(phi.at(a), a, &mut sum)?;
    }
    Ok(sum.reverse())
}

/// `E[(Σ φ̂ ΔX̂ − Y_t)²]`, exact by the isometry.
pub fn backward_ito_gap(f: &ChaosFunctional, k_t: usize) -> Result<f64> {
    let phi = clark_ocone_integrand(f)?;
    let y = f.sub(&tail_expectation(f, k_t)?)?;
    Ok(backward_ito_sum(&phi, k_t)?.sub(&y)?.second_moment())
}

/// `M̂_1 − M̂_{1−t}` with `M̂_s = E[F | F̂_s]`, evaluated on the original path.
pub fn reversed_martingale_eval(f: &ChaosFunctional, k_t: usize, path: &[f64]) -> Result<f64> {
    let n = f.grid().n_cells();
    let m_hat = |k_s: usize| f.retain_cells(|c| c >= n - k_s);
    Ok(m_hat(n).eval(path)? - m_hat(n - k_t).eval(path)?)
}

/// Both sides of `Y_t = H_n(X(h)) − ‖h_t‖ⁿ·H_n(X(h_t)/‖h_t‖)`, `h_t = h·1_{[t,1]}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermiteSides {
    /// `Y_t` from the kernel projection.
    pub lhs: f64,
    /// The closed form; `None` when `‖h_t‖ = 0`.
    pub rhs: Option<f64>,
}

pub fn hermite_projection(n: usize, h: &StepFunction, k_t: usize, path: &[f64]) -> Result<HermiteSides> {
    let grid = h.grid();
    grid.ensure_boundary(k_t)?;
    if (h.norm_sq() - 1.0).abs() > 1e-12 {
        return Err(contract(format!("h must have unit norm, got ‖h‖² = {}", h.norm_sq())));
    }
    let f = ChaosFunctional::from_kernel(SymKernel::tensor_power(h, n)?.scale(1.0 / factorial(n)))?;
    let lhs = f.sub(&tail_expectation(&f, k_t)?)?.eval(path)?;
    let tail = h.restrict(&crate::grid::TimeSet::interval(grid, k_t, grid.n_cells())?)?;
    let norm = tail.norm();
    let rhs = (norm > 0.0).then(|| -> Result<f64> {
        let x = isonormal_eval(path, h)?;
        let xt = isonormal_eval(path, &tail)?;
        Ok(hermite(n, x) - norm.powi(n as i32) * hermite(n, xt / norm))
    });
    Ok(HermiteSides { lhs, rhs: rhs.transpose()? })
}

/// Quadratic covariation estimates on dyadic partitions.
#[derive(Debug, Clone, PartialEq)]
pub struct Bracket {
    /// `levels[d][i]` is the estimate at boundary `i·N/2^d` on the level-`d` partition.
    pub levels: Vec<Vec<f64>>,
}

impl Bracket {
    /// The curve on the finest level, one value per grid boundary when the
    /// finest level is the grid itself.
    pub fn finest(&self) -> &[f64] {
        self.levels.last().expect("at least one level")
    }
}

/// `U_0V_0 + Σ ΔU·ΔV` cumulated along the dyadic partitions of levels
/// `0..=depth`; `u` and `v` are sampled at the `N + 1` grid boundaries.
pub fn quadratic_covariation(grid: Grid, u: &[f64], v: &[f64], depth: usize) -> Result<Bracket> {
    let n = grid.n_cells();
    if u.len() != n + 1 || v.len() != n + 1 {
        return Err(contract("bracket inputs must be sampled at every grid boundary"));
    }
    let mut levels = Vec::with_capacity(depth + 1);
    for d in 0..=depth {
        let pi = Partition::dyadic(grid, d)?;
        let mut acc = u[0] * v[0];
        let mut curve = vec![acc];
        for (k0, k1) in pi.intervals() {
            acc += (u[k1] - u[k0]) * (v[k1] - v[k0]);
            curve.push(acc);
        }
        levels.push(curve);
    }
    Ok(Bracket { levels })
}

/// The functional form `φ̂_s = Φ(s; X̂(g_1 1_{[0,s]}), …, X̂(g_k 1_{[0,s]}))`
/// together with the terminal variable it represents.
pub struct DecompositionSpec<'a> {
    pub f: ChaosFunctional,
    pub phi: &'a (dyn Fn(f64, &[f64]) -> f64 + Sync),
    pub g: Vec<StepFunction>,
    /// Caller's assertion that `Φ` is continuously differentiable.
    pub c1: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposition {
    pub y: f64,
    /// `Σ_{j < k_t} φ̂_{1 − jΔ}·ΔX_j`.
    pub ito_term: f64,
    /// `[φ̂, X̂]_1`.
    pub bracket_1: f64,
    /// `[φ̂, X̂]_{1−t}`.
    pub bracket_1mt: f64,
    pub residual: f64,
}

impl DecompositionSpec<'_> {
    /// `φ̂_s` at every reversed boundary `s = jΔ`, from the reversed path.
    pub fn phi_path(&self, rev: &[f64]) -> Result<Vec<f64>> {
        let grid = self.f.grid();
        let n = grid.n_cells();
        let mut args = vec![0.0; self.g.len()];
        let mut out = Vec::with_capacity(n + 1);
        let prefix: Vec<Vec<f64>> = self
            .g
            .iter()
            .map(|g| {
                grid.ensure_same(&g.grid())?;
                let weighted: Vec<f64> = g.values().iter().zip(rev).map(|(a, b)| a * b).collect();
                Ok(partial_sums(&weighted))
            })
            .collect::<Result<Vec<_>>>()?;
        for j in 0..=n {
            for (arg, p) in args.iter_mut().zip(&prefix) {
                *arg = p[j];
            }
            out.push((self.phi)(grid.time(j), &args));
        }
        Ok(out)
    }
}

/// Evaluates the three terms of `Y_t = ∫₀ᵗ φ̂_{1−α} dX_α − [φ̂, X̂]_1 + [φ̂, X̂]_{1−t}`
/// on one path at the grid resolution.
pub fn semimartingale_decomposition_check(
    spec: &DecompositionSpec<'_>,
    path: &[f64],
    k_t: usize,
) -> Result<Decomposition> {
    let y_t = decomposition_target(spec, k_t)?;
    decompose(spec, &y_t, path, k_t)
}

/// [`semimartingale_decomposition_check`] over a batch, in path order.
pub fn decomposition_batch(spec: &DecompositionSpec<'_>, batch: &PathBatch, k_t: usize) -> Result<Vec<Decomposition>> {
    let y_t = decomposition_target(spec, k_t)?;
    batch.map(|path| decompose(spec, &y_t, path, k_t)).into_iter().collect()
}

fn decomposition_target(spec: &DecompositionSpec<'_>, k_t: usize) -> Result<ChaosFunctional> {
    spec.f.grid().ensure_boundary(k_t)?;
    if !spec.c1 {
        return Err(contract("the decomposition needs Φ of class C¹ (asserted by the caller)"));
    }
    spec.f.sub(&tail_expectation(&spec.f, k_t)?)
}

fn decompose(spec: &DecompositionSpec<'_>, y_t: &ChaosFunctional, path: &[f64], k_t: usize) -> Result<Decomposition> {
    let grid = spec.f.grid();
    let n = grid.n_cells();
    let y = y_t.eval(path)?;
    let rev = reverse_path(path);
    let phi = spec.phi_path(&rev)?;
    let ito_term: f64 = (0..k_t).map(|j| phi[n - j] * path[j]).sum();
    let x_hat = partial_sums(&rev);
    let bracket = quadratic_covariation(grid, &phi, &x_hat, grid.dyadic_depth())?;
    let step = n >> grid.dyadic_depth();
    let at = |k: usize| -> Result<f64> {
        if !k.is_multiple_of(step) {
            return Err(contract("bracket time is not on the finest dyadic partition"));
        }
        Ok(bracket.finest()[k / step])
    };
    let bracket_1 = at(n)?;
    let bracket_1mt = at(n - k_t)?;
    let residual = y - (ito_term - bracket_1 + bracket_1mt);
    Ok(Decomposition { y, ito_term, bracket_1, bracket_1mt, residual })
}

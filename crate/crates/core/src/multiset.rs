//! Sorted cell multisets and their dense colex ranking.
//!
//! A multiset `c_0 ≤ c_1 ≤ … ≤ c_{n−1}` of cells in `0..n_cells` maps to the
//! strictly increasing `d_i = c_i + i`, ranked by the combinatorial number
//! system `Σ C(d_i, i + 1)`. Ranks run over `0..C(n_cells + n − 1, n)` and the
//! odometer in [`for_each`] visits them in increasing order.

/// Highest chaos order any kernel may carry.
pub const MAX_ORDER: usize = 5;

/// Largest number of stored entries in a single kernel.
pub const STORAGE_CAP: usize = 1 << 22;

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Number of sorted `order`-multisets of `n_cells` cells.
pub fn count(n_cells: usize, order: usize) -> usize {
    if order == 0 {
        return 1;
    }
    binomial(n_cells + order - 1, order)
}

pub fn rank(cells: &[usize]) -> usize {
    cells.iter().enumerate().map(|(i, &c)| binomial(c + i, i + 1)).sum()
}

/// Visits every multiset in rank order as `(rank, cells)`.
pub fn for_each(n_cells: usize, order: usize, mut f: impl FnMut(usize, &[usize])) {
    let mut cells = vec![0usize; order];
    let total = count(n_cells, order);
    for r in 0..total {
        f(r, &cells);
        if r + 1 < total {
            advance(&mut cells, n_cells);
        }
    }
}

fn advance(cells: &mut [usize], n_cells: usize) {
    let n = cells.len();
    for i in 0..n {
        let room = if i + 1 < n { cells[i] < cells[i + 1] } else { cells[i] + 1 < n_cells };
        if room {
            cells[i] += 1;
            cells[..i].fill(0);
            return;
        }
    }
}

/// Runs of equal cells as `(cell, multiplicity)`.
pub fn runs(cells: &[usize]) -> impl Iterator<Item = (usize, usize)> + '_ {
    let mut i = 0;
    std::iter::from_fn(move || {
        let c = *cells.get(i)?;
        let start = i;
        while i < cells.len() && cells[i] == c {
            i += 1;
        }
        Some((c, i - start))
    })
}

/// `n! / Π m_c!`, the number of distinct orderings.
pub fn orderings(cells: &[usize]) -> f64 {
    factorial(cells.len()) / runs(cells).map(|(_, m)| factorial(m)).product::<f64>()
}

/// Inserts `cell` into a sorted multiset.
pub fn with_cell(cells: &[usize], cell: usize) -> Vec<usize> {
    let pos = cells.partition_point(|&c| c <= cell);
    let mut out = Vec::with_capacity(cells.len() + 1);
    out.extend_from_slice(&cells[..pos]);
    out.push(cell);
    out.extend_from_slice(&cells[pos..]);
    out
}

/// Removes one copy of `cell`; `None` if it is absent.
pub fn without_cell(cells: &[usize], cell: usize) -> Option<Vec<usize>> {
    let pos = cells.iter().position(|&c| c == cell)?;
    let mut out = cells.to_vec();
    out.remove(pos);
    Some(out)
}

/// Visits every sub-multiset `ν ⊂ μ` of the given size together with its
/// complement and the count `Π_c C(m_c, ν_c)` of position subsets realizing it.
pub fn for_each_split(cells: &[usize], size: usize, mut f: impl FnMut(&[usize], &[usize], f64)) {
    let blocks: Vec<(usize, usize)> = runs(cells).collect();
    let mut take = vec![0usize; blocks.len()];
    split_rec(&blocks, &mut take, 0, size, &mut f);
}

fn split_rec(
    blocks: &[(usize, usize)],
    take: &mut [usize],
    at: usize,
    left: usize,
    f: &mut impl FnMut(&[usize], &[usize], f64),
) {
    if at == blocks.len() {
        if left != 0 {
            return;
        }
        let mut sub = Vec::new();
        let mut rest = Vec::new();
        let mut weight = 1.0;
        for (&(c, m), &k) in blocks.iter().zip(take.iter()) {
            sub.extend(std::iter::repeat_n(c, k));
            rest.extend(std::iter::repeat_n(c, m - k));
            weight *= binomial(m, k) as f64;
        }
        f(&sub, &rest, weight);
        return;
    }
    let remaining: usize = blocks[at + 1..].iter().map(|b| b.1).sum();
    let m = blocks[at].1;
    for k in left.saturating_sub(remaining)..=m.min(left) {
        take[at] = k;
        split_rec(blocks, take, at + 1, left - k, f);
    }
}

//! The uniform time grid on `[0, 1]`, finite unions of its cells, partitions
//! made of grid boundaries, and the set geometry of the regions
//! `Δ_M^{j(m)}`, `Δ_M^{j(m)}(t)` and `A_{M,m}(t)`.
//!
//! Cells are numbered from zero: cell `c` covers `(cΔ, (c+1)Δ]` with
//! `Δ = 1 / n_cells`. Grid times are addressed by their boundary index
//! `k ∈ 0..=n_cells`, i.e. the time `kΔ`.

use itertools::Itertools;

use crate::error::{contract, Error, Result};

/// Relative tolerance used when snapping a real time onto a grid boundary.
const SNAP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Grid {
    n_cells: usize,
}

impl Grid {
    pub fn new(n_cells: usize) -> Result<Self> {
        if n_cells == 0 {
            return Err(contract("a grid needs at least one cell"));
        }
        Ok(Grid { n_cells })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    /// Cell width `Δ`.
    pub fn width(&self) -> f64 {
        1.0 / self.n_cells as f64
    }

    /// Time of boundary `k`.
    pub fn time(&self, k: usize) -> f64 {
        k as f64 / self.n_cells as f64
    }

    /// Boundary index of `t`, rejecting times that are not grid-aligned.
    pub fn boundary(&self, t: f64) -> Result<usize> {
        if !(-SNAP_TOL..=1.0 + SNAP_TOL).contains(&t) {
            return Err(Error::OffGrid { t, n_cells: self.n_cells });
        }
        let scaled = t * self.n_cells as f64;
        let k = scaled.round();
        if (scaled - k).abs() > SNAP_TOL * self.n_cells as f64 {
            return Err(Error::OffGrid { t, n_cells: self.n_cells });
        }
        Ok(k as usize)
    }

    /// Cell containing `x ∈ (0, 1]`.
    pub fn cell_of(&self, x: f64) -> usize {
        let c = (x * self.n_cells as f64).ceil() as usize;
        c.clamp(1, self.n_cells) - 1
    }

    pub fn is_dyadic(&self) -> bool {
        self.n_cells.is_power_of_two()
    }

    /// Largest `d` with `2^d` dividing the number of cells.
    pub fn dyadic_depth(&self) -> usize {
        self.n_cells.trailing_zeros() as usize
    }

    pub fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch { expected: self.n_cells, found: other.n_cells });
        }
        Ok(())
    }

    pub(crate) fn ensure_path(&self, increments: &[f64]) -> Result<()> {
        if increments.len() != self.n_cells {
            return Err(Error::GridMismatch { expected: self.n_cells, found: increments.len() });
        }
        Ok(())
    }

    pub(crate) fn ensure_boundary(&self, k: usize) -> Result<()> {
        if k > self.n_cells {
            return Err(Error::OffGrid { t: self.time(k), n_cells: self.n_cells });
        }
        Ok(())
    }
}

/// A finite union of grid cells; the index set `A` of a σ-field `F_A`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeSet {
    grid: Grid,
    mask: Vec<bool>,
}

impl TimeSet {
    pub fn empty(grid: Grid) -> Self {
        TimeSet { grid, mask: vec![false; grid.n_cells()] }
    }

    pub fn full(grid: Grid) -> Self {
        TimeSet { grid, mask: vec![true; grid.n_cells()] }
    }

    pub fn from_cells(grid: Grid, cells: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut set = TimeSet::empty(grid);
        for c in cells {
            if c >= grid.n_cells() {
                return Err(contract(format!("cell {c} outside a {}-cell grid", grid.n_cells())));
            }
            set.mask[c] = true;
        }
        Ok(set)
    }

    /// The cells covering `[k0Δ, k1Δ]`.
    pub fn interval(grid: Grid, k0: usize, k1: usize) -> Result<Self> {
        grid.ensure_boundary(k1)?;
        if k0 > k1 {
            return Err(contract(format!("interval [{k0}, {k1}] is reversed")));
        }
        TimeSet::from_cells(grid, k0..k1)
    }

    /// Cells of `[0, k_sΔ] ∪ [k_tΔ, 1]`, the index set of `F_{[s,t]^c}`.
    pub fn two_sided(grid: Grid, k_s: usize, k_t: usize) -> Result<Self> {
        grid.ensure_boundary(k_t)?;
        if k_s > k_t {
            return Err(contract(format!("two-sided set needs s <= t, got {k_s} > {k_t}")));
        }
        TimeSet::from_cells(grid, (0..k_s).chain(k_t..grid.n_cells()))
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn contains(&self, cell: usize) -> bool {
        self.mask.get(cell).copied().unwrap_or(false)
    }

    pub fn cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter(|(_, &m)| m).map(|(c, _)| c)
    }

    pub fn len(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn complement(&self) -> Self {
        TimeSet { grid: self.grid, mask: self.mask.iter().map(|m| !m).collect() }
    }

    pub fn intersection(&self, other: &TimeSet) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let mask = self.mask.iter().zip(&other.mask).map(|(a, b)| *a && *b).collect();
        Ok(TimeSet { grid: self.grid, mask })
    }

    pub fn union(&self, other: &TimeSet) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let mask = self.mask.iter().zip(&other.mask).map(|(a, b)| *a || *b).collect();
        Ok(TimeSet { grid: self.grid, mask })
    }

    /// `Â = {1 − x : x ∈ A}`.
    pub fn reversed(&self) -> Self {
        TimeSet { grid: self.grid, mask: self.mask.iter().rev().copied().collect() }
    }
}

/// A partition `0 = t_0 < … < t_n = 1` made of grid boundaries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    grid: Grid,
    points: Vec<usize>,
}

impl Partition {
    pub fn new(grid: Grid, points: Vec<usize>) -> Result<Self> {
        if points.first() != Some(&0) || points.last() != Some(&grid.n_cells()) {
            return Err(contract("a partition must start at 0 and end at 1"));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(contract("partition points must be strictly increasing"));
        }
        Ok(Partition { grid, points })
    }

    pub fn from_times(grid: Grid, times: &[f64]) -> Result<Self> {
        let points = times.iter().map(|&t| grid.boundary(t)).collect::<Result<Vec<_>>>()?;
        Partition::new(grid, points)
    }

    /// The uniform partition into `2^depth` intervals.
    pub fn dyadic(grid: Grid, depth: usize) -> Result<Self> {
        let pieces = 1usize << depth;
        if !grid.n_cells().is_multiple_of(pieces) {
            return Err(contract(format!(
                "depth {depth} dyadic partition does not fit a {}-cell grid",
                grid.n_cells()
            )));
        }
        let step = grid.n_cells() / pieces;
        Partition::new(grid, (0..=pieces).map(|i| i * step).collect())
    }

    /// All dyadic coarsenings of the grid, from the trivial partition up to
    /// the finest one that fits.
    pub fn dyadic_family(grid: Grid) -> Vec<Partition> {
        (0..=grid.dyadic_depth())
            .map(|d| Partition::dyadic(grid, d).expect("depth fits by construction"))
            .collect()
    }

    /// The grid itself as a partition.
    pub fn finest(grid: Grid) -> Self {
        Partition { grid, points: (0..=grid.n_cells()).collect() }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn n_intervals(&self) -> usize {
        self.points.len() - 1
    }

    /// Boundary indices `(t_i, t_{i+1})` of each interval.
    pub fn intervals(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.points.windows(2).map(|w| (w[0], w[1]))
    }

    /// Index of the interval containing `cell`.
    pub fn interval_of_cell(&self, cell: usize) -> usize {
        self.points.partition_point(|&p| p <= cell) - 1
    }

    /// Mesh `max (t_{i+1} − t_i)` in time units.
    pub fn mesh(&self) -> f64 {
        self.intervals().map(|(a, b)| b - a).max().unwrap_or(0) as f64 * self.grid.width()
    }
}

/// A strictly increasing selection `j_(m)` of coordinate positions out of
/// `0..M` (zero-based); `m = 0` encodes the empty selection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexVector {
    dim: usize,
    selected: Vec<usize>,
}

impl IndexVector {
    pub fn new(dim: usize, selected: Vec<usize>) -> Result<Self> {
        if dim == 0 {
            return Err(contract("index vectors need M >= 1"));
        }
        if selected.windows(2).any(|w| w[0] >= w[1]) {
            return Err(contract("index vector components must be strictly increasing"));
        }
        if selected.last().is_some_and(|&j| j >= dim) {
            return Err(contract(format!("index vector component outside 0..{dim}")));
        }
        Ok(IndexVector { dim, selected })
    }

    pub fn empty(dim: usize) -> Result<Self> {
        IndexVector::new(dim, Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    /// Every index vector of length `m` in dimension `dim`.
    pub fn all(dim: usize, m: usize) -> impl Iterator<Item = IndexVector> {
        (0..dim).combinations(m).map(move |selected| IndexVector { dim, selected })
    }

    /// (max over selected, min over unselected), with max ∅ = 0 and min ∅ = 1.
    fn split_extremes(&self, x: &[f64]) -> (f64, f64) {
        let mut max_sel = 0.0f64;
        let mut min_rest = 1.0f64;
        let mut sel = self.selected.iter().peekable();
        for (i, &xi) in x.iter().enumerate() {
            if sel.peek() == Some(&&i) {
                sel.next();
                max_sel = max_sel.max(xi);
            } else {
                min_rest = min_rest.min(xi);
            }
        }
        (max_sel, min_rest)
    }
}

fn check_point(dim: usize, x: &[f64], t: Option<f64>) -> Result<()> {
    if x.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: x.len() });
    }
    if let Some(bad) = x.iter().find(|&&xi| !(xi > 0.0 && xi < 1.0)) {
        return Err(contract(format!("coordinate {bad} is not inside (0, 1)")));
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::ExceptionalPoint("tied coordinates".into()));
    }
    if let Some(t) = t {
        if x.contains(&t) {
            return Err(Error::ExceptionalPoint(format!("a coordinate equals t = {t}")));
        }
    }
    Ok(())
}

/// Membership in `Δ_M^{j(m)}`: every selected coordinate lies below every
/// unselected one.
pub fn delta_region_contains(j: &IndexVector, x: &[f64]) -> Result<bool> {
    check_point(j.dim, x, None)?;
    let (max_sel, min_rest) = j.split_extremes(x);
    Ok(max_sel < min_rest)
}

/// Membership in `Δ_M^{j(m)}(t)`: selected coordinates below `t`, the rest above.
pub fn delta_region_t_contains(j: &IndexVector, t: f64, x: &[f64]) -> Result<bool> {
    if !(0.0..=1.0).contains(&t) {
        return Err(contract(format!("split time {t} outside [0, 1]")));
    }
    check_point(j.dim, x, Some(t))?;
    let (max_sel, min_rest) = j.split_extremes(x);
    Ok(max_sel < t && t < min_rest)
}

/// Membership in `A_{M,m}(t)`, decided by counting the coordinates below `t`.
pub fn a_set_contains(dim: usize, m: usize, t: f64, x: &[f64]) -> Result<bool> {
    if m > dim {
        return Err(contract(format!("m = {m} exceeds M = {dim}")));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(contract(format!("split time {t} outside [0, 1]")));
    }
    check_point(dim, x, Some(t))?;
    Ok(x.iter().filter(|&&xi| xi < t).count() == m)
}

/// Outcome of the brute-force check of the covering and disjointness
/// properties of the regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartitionReport {
    pub covered: bool,
    pub disjoint: bool,
    /// Number of (sample, property) pairs that failed.
    pub violations: usize,
}

/// Enumerates every index vector for every sample point and checks that
/// the `A_{M,m}(t)` tile the cube, that for each `m` the `Δ_M^{j(m)}` tile
/// the cube, and that the count criterion agrees with the enumeration.
pub fn verify_partition_properties(dim: usize, t: f64, samples: &[Vec<f64>]) -> Result<PartitionReport> {
    let mut covered = true;
    let mut disjoint = true;
    let mut violations = 0;
    for x in samples {
        check_point(dim, x, Some(t))?;
        let mut a_hits = 0;
        for m in 0..=dim {
            let mut delta_hits = 0;
            let mut delta_t_hits = 0;
            for j in IndexVector::all(dim, m) {
                if delta_region_contains(&j, x)? {
                    delta_hits += 1;
                }
                if delta_region_t_contains(&j, t, x)? {
                    delta_t_hits += 1;
                }
            }
            if delta_hits == 0 {
                covered = false;
                violations += 1;
            }
            if delta_hits > 1 {
                disjoint = false;
                violations += 1;
            }
            let in_a = delta_t_hits > 0;
            if in_a != a_set_contains(dim, m, t, x)? {
                covered = false;
                violations += 1;
            }
            if in_a {
                a_hits += 1;
            }
        }
        if a_hits != 1 {
            covered = false;
            violations += 1;
        }
    }
    Ok(PartitionReport { covered, disjoint, violations })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(dim: usize, sel: &[usize]) -> IndexVector {
        IndexVector::new(dim, sel.to_vec()).unwrap()
    }

    #[test]
    fn boundary_snapping() {
        let g = Grid::new(8).unwrap();
        assert_eq!(g.boundary(0.25).unwrap(), 2);
        assert_eq!(g.boundary(1.0).unwrap(), 8);
        assert!(matches!(g.boundary(0.3), Err(Error::OffGrid { .. })));
        assert!(g.boundary(1.5).is_err());
        assert_eq!(g.cell_of(0.125), 0);
        assert_eq!(g.cell_of(0.126), 1);
        assert_eq!(g.cell_of(1.0), 7);
    }

    #[test]
    fn timeset_algebra() {
        let g = Grid::new(4).unwrap();
        let a = TimeSet::from_cells(g, [0, 2]).unwrap();
        assert_eq!(a.complement().complement(), a);
        assert_eq!(a.reversed().cells().collect::<Vec<_>>(), vec![1, 3]);
        let two = TimeSet::two_sided(g, 1, 3).unwrap();
        assert_eq!(two.cells().collect::<Vec<_>>(), vec![0, 3]);
        assert!(TimeSet::from_cells(g, [4]).is_err());
    }

    #[test]
    fn partitions() {
        let g = Grid::new(16).unwrap();
        let p = Partition::dyadic(g, 2).unwrap();
        assert_eq!(p.points(), &[0, 4, 8, 12, 16]);
        assert_eq!(p.interval_of_cell(0), 0);
        assert_eq!(p.interval_of_cell(4), 1);
        assert_eq!(p.interval_of_cell(15), 3);
        assert_eq!(Partition::dyadic_family(g).len(), 5);
        assert!(Partition::new(g, vec![0, 4, 4, 16]).is_err());
        assert!(Partition::from_times(g, &[0.0, 0.3, 1.0]).is_err());
    }

    #[test]
    fn delta_region_examples() {
        assert!(delta_region_contains(&iv(2, &[]), &[0.3, 0.9]).unwrap());
        assert!(!delta_region_contains(&iv(2, &[0]), &[0.7, 0.2]).unwrap());
        assert!(delta_region_contains(&iv(3, &[0, 1]), &[0.1, 0.2, 0.5]).unwrap());
        assert!(matches!(
            delta_region_contains(&iv(2, &[0]), &[0.1, 0.2, 0.3]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn delta_region_t_examples() {
        assert!(delta_region_t_contains(&iv(2, &[0, 1]), 0.5, &[0.1, 0.2]).unwrap());
        assert!(delta_region_t_contains(&iv(2, &[]), 0.5, &[0.6, 0.9]).unwrap());
        assert!(!delta_region_t_contains(&iv(2, &[0]), 0.0, &[0.6, 0.9]).unwrap());
        assert!(!delta_region_t_contains(&iv(2, &[0]), 0.0, &[0.1, 0.9]).unwrap());
    }

    #[test]
    fn a_set_examples() {
        assert!(a_set_contains(3, 2, 0.5, &[0.1, 0.4, 0.9]).unwrap());
        assert!(!a_set_contains(2, 1, 1.0, &[0.3, 0.7]).unwrap());
        assert!(a_set_contains(2, 0, 0.3, &[0.5, 0.6]).unwrap());
        assert!(a_set_contains(2, 3, 0.3, &[0.5, 0.6]).is_err());
        assert!(matches!(
            a_set_contains(2, 1, 0.5, &[0.5, 0.6]),
            Err(Error::ExceptionalPoint(_))
        ));
    }

    #[test]
    fn partition_report_small() {
        let r = verify_partition_properties(1, 0.5, &[vec![0.2], vec![0.8]]).unwrap();
        assert_eq!(r, PartitionReport { covered: true, disjoint: true, violations: 0 });
        assert!(matches!(
            verify_partition_properties(2, 0.5, &[vec![0.2, 0.2]]),
            Err(Error::ExceptionalPoint(_))
        ));
    }
}

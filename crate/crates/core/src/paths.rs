//! Seeded Brownian increments on the grid, step functions, the isonormal
//! evaluation `X(f)` and the reversal `X̂_t = X_1 − X_{1−t}`.
//!
//! Path `i` of a batch draws from the ChaCha8 stream `i` of the seed, so a
//! path never depends on how the batch is split across threads. A uniform
//! `u = (⌊x / 2^12⌋ + ½)·2^{−52}` from each 64-bit word goes through the
//! standard normal quantile and is scaled by `√Δ`.

use std::io::{Read, Write};

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{contract, Error, Result};
use crate::grid::{Grid, TimeSet};

/// Leading field of the binary dump.
pub const MAGIC: u64 = u64::from_le_bytes(*b"SKORPATH");
pub const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl StepFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        grid.ensure_path(&values)?;
        Ok(StepFunction { grid, values })
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        StepFunction { grid, values: vec![c; grid.n_cells()] }
    }

    /// `1_{[k0Δ, k1Δ]}`.
    pub fn indicator(grid: Grid, k0: usize, k1: usize) -> Result<Self> {
        Ok(StepFunction::of_set(&TimeSet::interval(grid, k0, k1)?))
    }

    pub fn of_set(a: &TimeSet) -> Self {
        let grid = a.grid();
        StepFunction { grid, values: (0..grid.n_cells()).map(|c| a.contains(c) as u8 as f64).collect() }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn inner(&self, other: &StepFunction) -> Result<f64> {
        self.grid.ensure_same(&other.grid)?;
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>() * self.grid.width())
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.width()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scale(&self, c: f64) -> Self {
        StepFunction { grid: self.grid, values: self.values.iter().map(|v| v * c).collect() }
    }

    /// Pointwise product with `1_A`.
    pub fn restrict(&self, a: &TimeSet) -> Result<Self> {
        self.grid.ensure_same(&a.grid())?;
        let values = self.values.iter().enumerate().map(|(c, v)| if a.contains(c) { *v } else { 0.0 }).collect();
        Ok(StepFunction { grid: self.grid, values })
    }

    /// `f̂(x) = f(1 − x)`.
    pub fn reversed(&self) -> Self {
        StepFunction { grid: self.grid, values: self.values.iter().rev().copied().collect() }
    }
}

/// Pathwise `X(f) = Σ_c f_c ΔX_c`.
pub fn isonormal_eval(path: &[f64], f: &StepFunction) -> Result<f64> {
    f.grid.ensure_path(path)?;
    Ok(path.iter().zip(&f.values).map(|(x, v)| x * v).sum())
}

/// Increments of `X̂`: cell `c` of the reversed path is cell `N − 1 − c` of the original.
pub fn reverse_path(path: &[f64]) -> Vec<f64> {
    path.iter().rev().copied().collect()
}

/// `X` at every boundary `0..=N`, accumulated left to right.
pub fn partial_sums(path: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(path.len() + 1);
    let mut acc = 0.0;
    out.push(acc);
    for x in path {
        acc += x;
        out.push(acc);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathBatch {
    grid: Grid,
    count: usize,
    seed: u64,
    increments: Vec<f64>,
}

fn unit_uniform(word: u64) -> f64 {
    ((word >> 12) as f64 + 0.5) * (-52f64).exp2()
}

/// `count` points of `(0,1)^dim` with independent uniform coordinates.
pub fn sample_uniform_points(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| (0..dim).map(|_| unit_uniform(rng.next_u64())).collect()).collect()
}

/// Increments of path `index` for `seed`.
pub fn sample_path(grid: Grid, seed: u64, index: u64) -> Vec<f64> {
    let normal = Normal::standard();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let scale = grid.width().sqrt();
    (0..grid.n_cells()).map(|_| normal.inverse_cdf(unit_uniform(rng.next_u64())) * scale).collect()
}

/// Draws `count` paths; parallel over paths on the current rayon pool.
pub fn sample_paths(grid: Grid, count: usize, seed: u64) -> Result<PathBatch> {
    if count == 0 {
        return Err(contract("a path batch needs at least one path"));
    }
    let n = grid.n_cells();
    let mut increments = vec![0.0; count * n];
    increments.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        row.copy_from_slice(&sample_path(grid, seed, i as u64));
    });
    Ok(PathBatch { grid, count, seed, increments })
}

impl PathBatch {
    pub fn from_increments(grid: Grid, seed: u64, increments: Vec<f64>) -> Result<Self> {
        let n = grid.n_cells();
        if increments.is_empty() || !increments.len().is_multiple_of(n) {
            return Err(Error::DimensionMismatch { expected: n, found: increments.len() });
        }
        Ok(PathBatch { grid, count: increments.len() / n, seed, increments })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path(&self, i: usize) -> &[f64] {
        let n = self.grid.n_cells();
        &self.increments[i * n..(i + 1) * n]
    }

    pub fn paths(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.increments.chunks(self.grid.n_cells())
    }

    pub fn par_paths(&self) -> rayon::slice::Chunks<'_, f64> {
        self.increments.par_chunks(self.grid.n_cells())
    }

    /// Every path reversed.
    pub fn reversed(&self) -> PathBatch {
        let increments = self.paths().flat_map(|p| p.iter().rev().copied()).collect();
        PathBatch { increments, ..*self }
    }

    /// Applies `f` to every path in parallel; results come back in path order.
    pub fn map<T: Send>(&self, f: impl Fn(&[f64]) -> T + Sync + Send) -> Vec<T> {
        self.par_paths().map(f).collect()
    }

    pub fn write_binary(&self, mut w: impl Write) -> Result<()> {
        for field in [MAGIC, FORMAT_VERSION, self.grid.n_cells() as u64, self.count as u64, self.seed] {
            w.write_all(&field.to_le_bytes())?;
        }
        for x in &self.increments {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary(mut r: impl Read) -> Result<Self> {
        let mut word = [0u8; 8];
        let mut header = [0u64; 5];
        for field in header.iter_mut() {
            r.read_exact(&mut word)?;
            *field = u64::from_le_bytes(word);
        }
        let [magic, version, n_cells, count, seed] = header;
        if magic != MAGIC {
            return Err(Error::Parse { line: 0, msg: "bad magic in path dump".into() });
        }
        if version != FORMAT_VERSION {
            return Err(Error::Parse { line: 0, msg: format!("unsupported path dump version {version}") });
        }
        let grid = Grid::new(n_cells as usize)?;
        let mut increments = vec![0.0; n_cells as usize * count as usize];
        for x in increments.iter_mut() {
            r.read_exact(&mut word)?;
            *x = f64::from_le_bytes(word);
        }
        PathBatch::from_increments(grid, seed, increments)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn deterministic_batches() {
        let g = Grid::new(4).unwrap();
        let a = sample_paths(g, 2, 7).unwrap();
        let b = sample_paths(g, 2, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.path(0), a.path(1));
        assert_eq!(a.path(1), sample_path(g, 7, 1).as_slice());
        assert!(sample_paths(g, 0, 7).is_err());
    }

    #[test]
    fn uniform_is_open_interval() {
        assert!(unit_uniform(0) > 0.0);
        assert!(unit_uniform(u64::MAX) < 1.0);
    }

    #[test]
    fn isonormal_examples() {
        let g = Grid::new(4).unwrap();
        let path = [0.1, -0.2, 0.3, 0.05];
        assert_relative_eq!(isonormal_eval(&path, &StepFunction::constant(g, 1.0)).unwrap(), 0.25);
        assert_eq!(isonormal_eval(&path, &StepFunction::constant(g, 0.0)).unwrap(), 0.0);
        assert!(isonormal_eval(&path[..3], &StepFunction::constant(g, 1.0)).is_err());
    }

    #[test]
    fn reversal_identities() {
        let g = Grid::new(4).unwrap();
        let path = [0.1, -0.2, 0.3, 0.05];
        let rev = reverse_path(&path);
        assert_eq!(reverse_path(&rev), path.to_vec());
        assert_relative_eq!(partial_sums(&rev)[4], partial_sums(&path)[4]);
        let f = StepFunction::indicator(g, 0, 1).unwrap();
        assert_relative_eq!(
            isonormal_eval(&rev, &f).unwrap(),
            isonormal_eval(&path, &f.reversed()).unwrap()
        );
    }

    #[test]
    fn binary_roundtrip() {
        let g = Grid::new(8).unwrap();
        let batch = sample_paths(g, 3, 11).unwrap();
        let mut bytes = Vec::new();
        batch.write_binary(&mut bytes).unwrap();
        assert_eq!(bytes.len(), 40 + 8 * 24);
        assert_eq!(&bytes[..8], b"SKORPATH");
        assert_eq!(PathBatch::read_binary(bytes.as_slice()).unwrap(), batch);
        bytes[0] = b'X';
        assert!(PathBatch::read_binary(bytes.as_slice()).is_err());
    }
}

//! Seeded Brownian paths: sampling, the isonormal map, reversal and the
//! binary dump format.

use skorohod::paths::partial_sums;
use skorohod::{isonormal_eval, reverse_path, sample_paths, Grid, PathBatch, StepFunction};

fn main() -> skorohod::Result<()> {
    let grid = Grid::new(8)?;
    let batch = sample_paths(grid, 20_000, 3)?;
    let path = batch.path(0);
    println!("X at the boundaries: {:?}", partial_sums(path));

    let f = StepFunction::indicator(grid, 0, 4)?;
    let g = StepFunction::new(grid, vec![1.0, -1.0, 2.0, 0.0, 0.5, 0.5, 0.0, 1.0])?;
    let xs: Vec<(f64, f64)> = batch.paths().map(|p| (isonormal_eval(p, &f).unwrap(), isonormal_eval(p, &g).unwrap())).collect();
    let cov = xs.iter().map(|(a, b)| a * b).sum::<f64>() / xs.len() as f64;
    println!("sample E[X(f)X(g)] = {cov:.4}, exact <f, g> = {:.4}", f.inner(&g)?);

    let rev = reverse_path(path);
    println!("X^(f) = {:.6}, X(f^) = {:.6}", isonormal_eval(&rev, &f)?, isonormal_eval(path, &f.reversed())?);

    let mut bytes = Vec::new();
    batch.write_binary(&mut bytes)?;
    let back = PathBatch::read_binary(bytes.as_slice())?;
    println!("binary dump of {} bytes round-trips: {}", bytes.len(), back == batch);
    Ok(())
}

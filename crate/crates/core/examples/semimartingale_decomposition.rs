//! The decomposition of `Y_t = F − E[F | F_{t^c}]` for `F = X_1² − 1` into a
//! forward integral and quadratic covariation terms, at growing resolution.

use skorohod::paths::partial_sums;
use skorohod::reversal::{decomposition_batch, quadratic_covariation, DecompositionSpec};
use skorohod::{reverse_path, sample_paths, ChaosFunctional, Grid, StepFunction, SymKernel};

fn main() -> skorohod::Result<()> {
    let phi = |_s: f64, x: &[f64]| 2.0 * x[0];
    for n in [64, 128, 256] {
        let grid = Grid::new(n)?;
        let spec = DecompositionSpec {
            f: ChaosFunctional::from_kernel(SymKernel::constant(grid, 2, 1.0)?)?,
            phi: &phi,
            g: vec![StepFunction::constant(grid, 1.0)],
            c1: true,
        };
        let batch = sample_paths(grid, 2000, 1)?;
        let d = decomposition_batch(&spec, &batch, n / 2)?;
        let rms = (d.iter().map(|d| d.residual.powi(2)).sum::<f64>() / d.len() as f64).sqrt();
        println!("N = {n}: residual RMS {rms:.5}");
        if n == 256 {
            let rev = reverse_path(batch.path(0));
            let b = quadratic_covariation(grid, &spec.phi_path(&rev)?, &partial_sums(&rev), 8)?;
            for j in [64, 128, 192, 256] {
                println!("  [2X^, X^] at {:.2}: {:.4}", grid.time(j), b.finest()[j]);
            }
        }
    }
    Ok(())
}

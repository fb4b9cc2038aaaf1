//! Finite chaos functionals: pathwise multiple integrals, Monte Carlo
//! moments against the isometry, products, derivatives and conditioning.

use skorohod::process::random_functional_seeded;
use skorohod::{sample_paths, ChaosFunctional, Grid, StepFunction, SymKernel, TimeSet};

fn main() -> skorohod::Result<()> {
    let grid = Grid::new(8)?;
    let f = random_functional_seeded(grid, 3, 11)?;
    let batch = sample_paths(grid, 50_000, 2)?;
    let values: Vec<f64> = batch.map(|p| f.eval(p).unwrap());
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
    let m = f.moments();
    println!("mean {mean:.4} (exact {:.4}), variance {var:.4} (exact {:.4})", m.mean, m.variance);

    let x1 = ChaosFunctional::isonormal(&StepFunction::constant(grid, 1.0));
    let square = x1.product(&x1, 4)?;
    let i2 = ChaosFunctional::from_kernel(SymKernel::constant(grid, 2, 1.0)?)?;
    let expected = i2.add(&ChaosFunctional::constant(grid, 1.0))?;
    println!("X_1 * X_1 = I_2(1) + 1: max kernel gap {:.2e}", square.sub(&expected)?.max_abs());

    let d = square.derivative(3)?;
    println!("D_s X_1^2 = 2 X_1: max gap {:.2e}", d.sub(&x1.scale(2.0))?.max_abs());

    let left = TimeSet::interval(grid, 0, 4)?;
    let cond = square.conditional_expectation(&left)?;
    println!("E[X_1^2 | F_1/2] has mean {} and variance {:.4}", cond.mean(), cond.variance());
    Ok(())
}

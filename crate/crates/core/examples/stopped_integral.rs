//! The stopped step integral: the sum `Σ F_i (X_{T∧t_{i+1}} − X_{T∧t_i})`
//! against the integral process frozen at `T`.

use skorohod::skorohod::step_approximation;
use skorohod::stopping::{stopped_integral, GridStoppingTime};
use skorohod::{sample_paths, ChaosProcess, Grid, Partition};

fn main() -> skorohod::Result<()> {
    let grid = Grid::new(8)?;
    let pi = Partition::dyadic(grid, 1)?;
    let u = step_approximation(&ChaosProcess::terminal_value(grid), &pi)?;
    let batch = sample_paths(grid, 5, 3)?;
    for tau in GridStoppingTime::shipped(grid)? {
        for path in batch.paths().take(2) {
            let s = stopped_integral(&u, &pi, &tau, path)?;
            println!("{tau:<10} T = {:.3}: sum {:+.12}, frozen {:+.12}", tau.eval_time(path)?, s.lhs, s.rhs);
        }
    }
    Ok(())
}

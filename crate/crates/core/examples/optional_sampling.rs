//! Optional sampling for `Y_t = X_1 X_t − t` between the exit time of the
//! band `|x| < 0.5` and `T ≡ 1`.

use skorohod::skorohod::skorohod_process;
use skorohod::stopping::{default_test_variables, optional_sampling_check, GridStoppingTime, StoppingRule};
use skorohod::{sample_paths, ChaosProcess, Grid};

fn main() -> skorohod::Result<()> {
    let grid = Grid::new(32)?;
    let y = skorohod_process(&ChaosProcess::terminal_value(grid))?;
    let s = GridStoppingTime::new(grid, StoppingRule::FirstExit(0.5))?;
    let t = GridStoppingTime::new(grid, StoppingRule::Deterministic(32))?;
    let batch = sample_paths(grid, 50_000, 1)?;
    for row in optional_sampling_check(&y, &s, &t, &default_test_variables(grid), &batch)? {
        println!("{:<16} mean {:+.5} se {:.5} z {:+.3}", row.variable, row.estimate, row.std_error, row.z);
    }
    Ok(())
}

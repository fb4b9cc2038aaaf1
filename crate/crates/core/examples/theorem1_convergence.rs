//! Convergence of the forward × backward approximations of `Y = δ(u·1_{[0,t]})`
//! for `u_α = X_1 + X_α` along dyadic partitions.

use skorohod::bf::{bf_eval, theorem1_construct};
use skorohod::skorohod::{convergence_row, ito_skorohod_process, step_approximation, tudor_representation};
use skorohod::{sample_paths, ChaosProcess, Grid, Partition};

fn main() -> skorohod::Result<()> {
    let grid = Grid::new(16)?;
    let u = ChaosProcess::terminal_value(grid).add(&ChaosProcess::brownian(grid))?;
    let v = tudor_representation(&u)?;
    let paths = sample_paths(grid, 100, 1)?;
    println!("depth  vhat(Y - Z)            bound                  max |Z - Y^pi|");
    for depth in 1..=4 {
        let row = convergence_row(&u, depth)?;
        let pi = Partition::dyadic(grid, depth)?;
        let z = theorem1_construct(&u, &pi)?;
        let y_pi = ito_skorohod_process(&step_approximation(&v, &pi)?)?;
        let mut gap = 0.0f64;
        for path in paths.paths() {
            let y = y_pi.eval(path)?;
            for (k, yk) in y.iter().enumerate() {
                gap = gap.max((bf_eval(&z, k, path)? - yk).abs());
            }
        }
        println!("{depth:<6} {:<22.15e} {:<22.15e} {gap:.3e}", row.vhat, row.bound);
    }
    Ok(())
}

//! The region-kernel representation of a Skorohod integral process: extract
//! `f_{l,q}`, rebuild every `Y_t` from it and compare the increment energy
//! with the partition functional.

use skorohod::skorohod::{duc_nualart_extract, majoration_check, skorohod_process};
use skorohod::{ChaosProcess, Grid};

fn main() -> skorohod::Result<()> {
    let grid = Grid::new(16)?;
    let u = ChaosProcess::terminal_value(grid);
    let kernels = duc_nualart_extract(&u)?;
    let f21 = kernels.get(2, 1).expect("order 2");
    let f22 = kernels.get(2, 2).expect("order 2");
    println!("u = X_1: f_21 = {}, f_22 = {}", f21.get(&[3, 9])?, f22.get(&[3, 9])?);

    let u = ChaosProcess::random(grid, 2, 4)?;
    let kernels = duc_nualart_extract(&u)?;
    let y = skorohod_process(&u)?;
    let worst = (0..=16)
        .map(|k| kernels.resynthesize(k).and_then(|r| r.max_abs_diff(y.at(k)?)))
        .collect::<skorohod::Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    println!("random u of order 2: resynthesis residual {worst:.2e}");
    let m = majoration_check(&u)?;
    println!("increment energy {:.6} vs V {:.6}", m.lhs, m.vhat);
    Ok(())
}

//! Skorohod integral processes `Y_t = δ(u·1_{[0,t]})`: kernels, pathwise
//! values, the martingale-type defect and the Itô–Skorohod representation.

use skorohod::paths::partial_sums;
use skorohod::skorohod::{
    ito_skorohod_process, martingale_defect, max_martingale_defect, skorohod_process, tudor_representation,
    v_functional_dyadic,
};
use skorohod::{sample_paths, ChaosFunctional, ChaosProcess, Grid, StepFunction};

fn main() -> skorohod::Result<()> {
    let grid = Grid::new(8)?;
    let u = ChaosProcess::terminal_value(grid);
    let y = skorohod_process(&u)?;
    let path = sample_paths(grid, 1, 5)?.path(0).to_vec();
    let xs = partial_sums(&path);
    for (k, v) in y.eval(&path)?.iter().enumerate() {
        let t = grid.time(k);
        println!("t = {t:.3}: Y_t = {v:+.6}, X_1 X_t - t = {:+.6}", xs[8] * xs[k] - t);
    }
    println!("max martingale defect: {:.2e}", max_martingale_defect(&y)?);

    let not_skorohod = (0..=8)
        .map(|k| ChaosFunctional::isonormal(&StepFunction::constant(grid, grid.time(k))))
        .collect();
    let z = skorohod::SkorohodProcess::new(grid, not_skorohod, skorohod::Provenance::Direct)?;
    println!("t X_1 is not of this kind: max defect entry {:.4} on [1/4, 3/4]", martingale_defect(&z, 2, 6)?.max_abs());

    let v = tudor_representation(&u)?;
    let y2 = ito_skorohod_process(&v)?;
    let gap = y2.at(8)?.sub(y.at(8)?)?.second_moment();
    println!("Ito-Skorohod sum of the representation at t = 1: mean-square gap {gap:.4} (diagonal cells)");
    println!("V over dyadic partitions: {:.6}", v_functional_dyadic(&y)?);
    Ok(())
}

//! Backward representations `Y_t = F − E[F | F_{t^c}]` in the reversed
//! Brownian motion, the Clark–Ocone integrand and the Hermite closed form.

use skorohod::reversal::{backward_ito_eval, backward_ito_gap, backward_representation, hermite_projection};
use skorohod::{sample_paths, ChaosFunctional, Grid, StepFunction, SymKernel};

fn main() -> skorohod::Result<()> {
    let grid = Grid::new(8)?;
    let f = ChaosFunctional::from_kernel(SymKernel::constant(grid, 2, 1.0)?)?;
    let rep = backward_representation(&f)?;
    let path = sample_paths(grid, 1, 8)?.path(0).to_vec();
    for k in [2, 4, 8] {
        println!(
            "t = {:.3}: Y_t = {:+.6}, backward Ito sum = {:+.6}",
            grid.time(k),
            rep.y.eval_at(k, &path)?,
            backward_ito_eval(&rep.phi, k, &path)?
        );
    }
    for n in [8, 16, 32] {
        let g = Grid::new(n)?;
        let f = ChaosFunctional::from_kernel(SymKernel::constant(g, 2, 1.0)?)?;
        println!("N = {n}: mean-square gap of the backward sum at t = 1/2: {:.6}", backward_ito_gap(&f, n / 2)?);
    }
    let h = StepFunction::constant(grid, 1.0);
    for n in 1..=3 {
        let s = hermite_projection(n, &h, 2, &path)?;
        println!("H_{n}: kernel side {:+.10}, closed form {:+.10}", s.lhs, s.rhs.unwrap_or(f64::NAN));
    }
    Ok(())
}

//! Forward × backward products: split a two-sided measurable functional
//! into left and right factors, and read the region kernels off a sum of
//! such products.

use skorohod::bf::{bf_eval, lemma7_chaos_form, split_two_sided, BfProcess, BfSummand};
use skorohod::process::random_functional_seeded;
use skorohod::{sample_paths, ChaosFunctional, Grid, StepFunction, TimeSet};

fn main() -> skorohod::Result<()> {
    let grid = Grid::new(8)?;
    let (k_a, k_b) = (3, 5);
    let outside = TimeSet::two_sided(grid, k_a, k_b)?;
    let f = random_functional_seeded(grid, 3, 1)?.conditional_expectation(&outside)?;
    let pairs = split_two_sided(&f, k_a, k_b)?;
    let path = sample_paths(grid, 1, 2)?.path(0).to_vec();
    let sum: f64 = pairs.iter().map(|(l, r)| l.eval(&path).unwrap() * r.eval(&path).unwrap()).sum();
    println!("{} pairs; F = {:.10}, sum of products = {:.10}", pairs.len(), f.eval(&path)?, sum);

    let left = ChaosFunctional::isonormal(&StepFunction::indicator(grid, 0, 4)?);
    let right = ChaosFunctional::isonormal(&StepFunction::indicator(grid, 4, 8)?);
    let z = BfProcess::new(grid, vec![BfSummand::new(left, right)?])?;
    for k in [0, 2, 4, 6, 8] {
        println!("Z at t = {:.3}: {:+.6}", grid.time(k), bf_eval(&z, k, &path)?);
    }
    let kernels = lemma7_chaos_form(&z)?;
    println!("f_21 at (1, 6) = {}", kernels.get(2, 1).expect("order 2").get(&[1, 6])?);
    Ok(())
}

//! Symmetric step kernels: multiset storage, symmetrized tensor products,
//! region restrictions and the text format.

use skorohod::{Grid, RawTensor, StepFunction, SymKernel, TimeSet};

fn main() -> skorohod::Result<()> {
    let grid = Grid::new(4)?;
    let raw = RawTensor::from_fn(grid, 2, |c| if c[0] < c[1] { 1.0 } else { 0.0 })?;
    let f = raw.symmetrize()?;
    println!("f(0,1) = {}, f(1,0) = {}, f(2,2) = {}", f.get(&[0, 1])?, f.get(&[1, 0])?, f.get(&[2, 2])?);
    println!("stored entries: {} instead of {}", f.len(), 4 * 4);

    let h = SymKernel::tensor_power(&StepFunction::constant(grid, 1.0), 1)?;
    let g = f.tensor0(&h)?;
    println!("order {} tensor product, squared norm {:.6}", g.order(), g.norm_sq());

    let k_t = 2;
    for q in 0..=2 {
        let part = f.restrict_a(q, k_t)?;
        println!("q = {q} coordinates left of t: squared norm {:.6}", part.norm_sq());
    }
    let left = TimeSet::interval(grid, 0, 2)?;
    println!("projection on the left half:\n{}", f.project(&left)?.to_text());
    Ok(())
}

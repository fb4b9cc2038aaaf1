//! Checks that the regions `A_{M,m}(t)` and `Δ_M^{j(m)}` tile the unit cube
//! on random sample points, and classifies one point by hand.

use skorohod::grid::{a_set_contains, delta_region_t_contains, verify_partition_properties};
use skorohod::{sample_uniform_points, IndexVector};

fn main() -> skorohod::Result<()> {
    let x = [0.1, 0.7, 0.3];
    let t = 0.5;
    for m in 0..=3 {
        println!("x in A_(3,{m})({t}): {}", a_set_contains(3, m, t, &x)?);
    }
    for j in IndexVector::all(3, 2) {
        if delta_region_t_contains(&j, t, &x)? {
            println!("x lies in the region of index vector {:?}", j.selected());
        }
    }

    for dim in 1..=4 {
        for t in [0.25, 0.5] {
            let points = sample_uniform_points(dim, 1000, 7);
            let r = verify_partition_properties(dim, t, &points)?;
            println!("M={dim} t={t}: covered={} disjoint={} violations={}", r.covered, r.disjoint, r.violations);
        }
    }
    Ok(())
}

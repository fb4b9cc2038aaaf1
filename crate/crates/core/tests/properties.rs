//! Randomized invariants across the modules.

use proptest::prelude::*;

use skorohod::bf::{bf_eval, theorem1_construct};
use skorohod::grid::{a_set_contains, delta_region_contains, IndexVector};
use skorohod::paths::sample_path;
use skorohod::process::random_functional_seeded;
use skorohod::reversal::{backward_process, clark_ocone_integrand, reversed_martingale_eval};
use skorohod::skorohod::{
    convergence_row, duc_nualart_extract, ito_skorohod_process, max_martingale_defect, skorohod_integral,
    skorohod_process, step_approximation, tudor_representation,
};
use skorohod::stopping::{uniform_integrability_surrogate, GridStoppingTime, StoppingRule};
use skorohod::{
    eval_multiple_integral, isonormal_eval, reverse_path, ChaosFunctional, ChaosProcess, Grid, Partition,
    StepFunction, SymKernel, TimeSet,
};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

/// Distinct coordinates in `(0, 1)`, none within `1e-9` of `t`.
fn generic_point(dim: usize, t: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.001f64..0.999, dim).prop_filter("generic", move |x| {
        x.iter().all(|v| (v - t).abs() > 1e-9)
            && x.iter().enumerate().all(|(i, a)| x[i + 1..].iter().all(|b| (a - b).abs() > 1e-9))
    })
}

fn point_and_time() -> impl Strategy<Value = (usize, f64, Vec<f64>)> {
    (1usize..=4, prop::sample::select(vec![0.25, 0.5, 0.75]))
        .prop_flat_map(|(dim, t)| generic_point(dim, t).prop_map(move |x| (dim, t, x)))
}

/// Expectation over one Gaussian increment of variance `var` by three-point
/// Gauss–Hermite quadrature, exact for polynomials of degree ≤ 5.
fn gauss_average(var: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let s = (3.0 * var).sqrt();
    (2.0 / 3.0) * f(0.0) + (f(s) + f(-s)) / 6.0
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn regions_tile_the_cube((dim, t, x) in point_and_time()) {
        let hits = (0..=dim).filter(|&m| a_set_contains(dim, m, t, &x).unwrap()).count();
        prop_assert_eq!(hits, 1);
        for m in 0..=dim {
            let js = IndexVector::all(dim, m).filter(|j| delta_region_contains(j, &x).unwrap()).count();
            prop_assert_eq!(js, 1);
        }
        prop_assert_eq!(a_set_contains(dim, dim, t, &x).unwrap(), x.iter().all(|&v| v < t));
        prop_assert_eq!(a_set_contains(dim, 0, t, &x).unwrap(), x.iter().all(|&v| v > t));
    }

    #[test]
    fn reversed_isonormal(seed in any::<u64>(), values in prop::collection::vec(-2.0f64..2.0, 8)) {
        let g = Grid::new(8).unwrap();
        let path = sample_path(g, seed, 0);
        let f = StepFunction::new(g, values).unwrap();
        let lhs = isonormal_eval(&reverse_path(&path), &f).unwrap();
        let rhs = isonormal_eval(&path, &f.reversed()).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12);
    }

    #[test]
    fn kernel_storage_and_splits(seed in any::<u64>(), order in 1usize..=3, k_t in 0usize..=6, cells in prop::collection::vec(0usize..6, 3)) {
        let g = Grid::new(6).unwrap();
        let f = random_functional_seeded(g, order, seed).unwrap().kernels()[order - 1].clone();
        let idx = &cells[..order];
        let mut rev = idx.to_vec();
        rev.reverse();
        prop_assert_eq!(f.get(idx).unwrap(), f.get(&rev).unwrap());

        let mut total = SymKernel::zeros(g, order).unwrap();
        let mut norm = 0.0;
        for q in 0..=order {
            let part = f.restrict_a(q, k_t).unwrap();
            norm += part.norm_sq();
            total = total.add(&part).unwrap();
        }
        prop_assert!(total.max_abs_diff(&f).unwrap() <= 1e-15);
        prop_assert!((norm - f.norm_sq()).abs() <= 1e-12 * (1.0 + f.norm_sq()));

        let a = TimeSet::from_cells(g, cells.iter().copied()).unwrap();
        let lhs = f.project(&a).unwrap().reverse();
        let rhs = f.reverse().project(&a.reversed()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }
}

proptest! {
    #![proptest_config(config(32))]

    #[test]
    fn integral_is_linear(seed in any::<u64>(), c in -3.0f64..3.0) {
        let g = Grid::new(6).unwrap();
        let f = random_functional_seeded(g, 3, seed).unwrap();
        let h = random_functional_seeded(g, 3, seed ^ 1).unwrap();
        let path = sample_path(g, seed, 1);
        for n in 1..=3 {
            let (a, b) = (&f.kernels()[n - 1], &h.kernels()[n - 1]);
            let lhs = eval_multiple_integral(&a.add(&b.scale(c)).unwrap(), &path).unwrap();
            let rhs = eval_multiple_integral(a, &path).unwrap() + c * eval_multiple_integral(b, &path).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn disjoint_product_rule(seed in any::<u64>(), p in 1usize..=2, q in 1usize..=2, split in 1usize..6) {
        let g = Grid::new(6).unwrap();
        let left = TimeSet::interval(g, 0, split).unwrap();
        let f = random_functional_seeded(g, p, seed).unwrap().kernels()[p - 1].project(&left).unwrap();
        let h = random_functional_seeded(g, q, seed ^ 7).unwrap().kernels()[q - 1].project(&left.complement()).unwrap();
        let path = sample_path(g, seed, 2);
        let lhs = eval_multiple_integral(&f, &path).unwrap() * eval_multiple_integral(&h, &path).unwrap();
        let rhs = eval_multiple_integral(&f.tensor0(&h).unwrap(), &path).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn conditioning_ignores_outside_increments(seed in any::<u64>(), cells in prop::collection::vec(0usize..6, 0..6)) {
        let g = Grid::new(6).unwrap();
        let f = random_functional_seeded(g, 3, seed).unwrap();
        let a = TimeSet::from_cells(g, cells).unwrap();
        let cond = f.conditional_expectation(&a).unwrap();
        let path = sample_path(g, seed, 3);
        let zeroed: Vec<f64> = path.iter().enumerate().map(|(c, x)| if a.contains(c) { *x } else { 0.0 }).collect();
        let (x, y) = (cond.eval(&path).unwrap(), cond.eval(&zeroed).unwrap());
        prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
    }

    #[test]
    fn derivative_matches_finite_difference(seed in any::<u64>(), h in prop::collection::vec(-1.0f64..1.0, 6)) {
        let g = Grid::new(6).unwrap();
        let f = random_functional_seeded(g, 3, seed).unwrap();
        let h = StepFunction::new(g, h).unwrap();
        let path = sample_path(g, seed, 4);
        let eps = 1e-4;
        let shifted = |s: f64| -> Vec<f64> {
            path.iter().zip(h.values()).map(|(x, v)| x + s * v * g.width()).collect()
        };
        let fd = (f.eval(&shifted(eps)).unwrap() - f.eval(&shifted(-eps)).unwrap()) / (2.0 * eps);
        let mut exact = 0.0;
        for c in 0..6 {
            exact += h.values()[c] * g.width() * f.derivative(c).unwrap().eval(&path).unwrap();
        }
        prop_assert!((fd - exact).abs() <= 1e-6 * (1.0 + exact.abs()), "fd {} exact {}", fd, exact);
    }

    #[test]
    fn clark_ocone_matches_finite_difference(seed in any::<u64>(), a in 0usize..6) {
        let g = Grid::new(6).unwrap();
        let n = 6;
        let f = random_functional_seeded(g, 3, seed).unwrap();
        let phi = clark_ocone_integrand(&f).unwrap();
        let path = sample_path(g, seed, 5);
        let c = n - 1 - a;
        // E[D_c F | cells ≥ c + 1]: difference quotient in cell c of the
        // projection onto cells ≥ c, averaged over the increment in cell c.
        let g_c = f.conditional_expectation(&TimeSet::interval(g, c, n).unwrap()).unwrap();
        let eps = 1e-4;
        let expected = gauss_average(g.width(), |x| {
            let mut p = path.clone();
            p[c] = x + eps / 2.0;
            let up = g_c.eval(&p).unwrap();
            p[c] = x - eps / 2.0;
            (up - g_c.eval(&p).unwrap()) / eps
        });
        let got = phi.at(a).eval(&reverse_path(&path)).unwrap();
        prop_assert!((got - expected).abs() <= 1e-6 * (1.0 + got.abs()), "got {} expected {}", got, expected);
    }

    #[test]
    fn reversal_identities(seed in any::<u64>(), k in 0usize..=6) {
        let g = Grid::new(6).unwrap();
        let f = random_functional_seeded(g, 3, seed).unwrap();
        let path = sample_path(g, seed, 6);
        let a = f.eval(&path).unwrap();
        let b = f.reverse().eval(&reverse_path(&path)).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));

        let tail = TimeSet::interval(g, k, 6).unwrap();
        let lhs = f.conditional_expectation(&tail).unwrap().reverse();
        let rhs = f.reverse().conditional_expectation(&TimeSet::interval(g, 0, 6 - k).unwrap()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() == 0.0);

        let y = backward_process(&f).unwrap().eval_at(k, &path).unwrap();
        let m = reversed_martingale_eval(&f, k, &path).unwrap();
        prop_assert!((y - m).abs() <= 1e-10 * (1.0 + y.abs()));
    }
}

proptest! {
    #![proptest_config(config(12))]

    #[test]
    fn skorohod_representations(seed in any::<u64>(), order in 0usize..=2) {
        let g = Grid::new(8).unwrap();
        let u = ChaosProcess::random(g, order, seed).unwrap();
        let y = skorohod_process(&u).unwrap();
        prop_assert!(max_martingale_defect(&y).unwrap() <= 1e-12);
        let kernels = duc_nualart_extract(&u).unwrap();
        for k in 0..=8 {
            prop_assert!(kernels.resynthesize(k).unwrap().max_abs_diff(y.at(k).unwrap()).unwrap() <= 1e-12);
        }
        let (m, v) = uniform_integrability_surrogate(&y).unwrap();
        prop_assert!(m <= v + 1e-12);
        for depth in 1..=3 {
            let row = convergence_row(&u, depth).unwrap();
            prop_assert!(row.vhat <= row.bound + 1e-12);
        }
    }

    #[test]
    fn predictable_integrals_are_ito_sums(seed in any::<u64>()) {
        let g = Grid::new(8).unwrap();
        let raw = ChaosProcess::random(g, 2, seed).unwrap();
        let u = ChaosProcess::from_fn(g, |a| raw.at(a).conditional_expectation(&TimeSet::interval(g, 0, a).unwrap())).unwrap();
        prop_assert!(u.is_predictable());
        let path = sample_path(g, seed, 7);
        let y = skorohod_integral(&u, 8).unwrap().eval(&path).unwrap();
        let sum: f64 = (0..8).map(|a| u.at(a).eval(&path).unwrap() * path[a]).sum();
        prop_assert!((y - sum).abs() <= 1e-10 * (1.0 + y.abs()));
    }

    #[test]
    fn bf_construction_is_exact(seed in any::<u64>(), depth in 1usize..=3) {
        let g = Grid::new(8).unwrap();
        let u = ChaosProcess::random(g, 2, seed).unwrap();
        let pi = Partition::dyadic(g, depth).unwrap();
        let z = theorem1_construct(&u, &pi).unwrap();
        let v = tudor_representation(&u).unwrap();
        let y_pi = ito_skorohod_process(&step_approximation(&v, &pi).unwrap()).unwrap();
        let path = sample_path(g, seed, 8);
        let ys = y_pi.eval(&path).unwrap();
        for (k, yk) in ys.iter().enumerate() {
            prop_assert!((bf_eval(&z, k, &path).unwrap() - yk).abs() <= 1e-10 * (1.0 + yk.abs()));
        }
        for s in z.summands() {
            for k in 0..=8 {
                prop_assert!(s.forward_at(k).support()[k..].iter().all(|&b| !b));
                let earlier = s.backward_at(k);
                for t in k..=8 {
                    let cond = earlier.conditional_expectation(&TimeSet::interval(g, t, 8).unwrap()).unwrap();
                    prop_assert!(cond.max_abs_diff(&s.backward_at(t)).unwrap() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn stopping_rules_read_only_their_prefix(seed in any::<u64>(), level in -1.0f64..1.0, noise in prop::collection::vec(-1.0f64..1.0, 16)) {
        let g = Grid::new(16).unwrap();
        let path = sample_path(g, seed, 9);
        for rule in [StoppingRule::LevelHitting(level), StoppingRule::FirstExit(level.abs()), StoppingRule::Deterministic(7)] {
            let tau = GridStoppingTime::new(g, rule).unwrap();
            let k = tau.eval(&path).unwrap();
            let mut altered = path.clone();
            for (x, e) in altered[k..].iter_mut().zip(&noise) {
                *x += e;
            }
            prop_assert_eq!(tau.eval(&altered).unwrap(), k);
        }
    }
}

#[test]
fn chaos_functional_text_roundtrip() {
    let g = Grid::new(5).unwrap();
    let f = random_functional_seeded(g, 3, 42).unwrap();
    let back = ChaosFunctional::from_text(&f.to_text()).unwrap();
    assert!(back.max_abs_diff(&f).unwrap() == 0.0);
}

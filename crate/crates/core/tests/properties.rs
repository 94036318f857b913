//! Property tests for the geometric and contract invariants.

use nalgebra::DVector;
use proptest::prelude::*;

use grasswalk::geometry::{
    sample_conditioned, sample_uniform, CONTAINMENT_TOL, ORTHONORMALITY_TOL,
};
use grasswalk::objectives::{clip, LossFunction, Rastrigin, RestrictedLoss};
use grasswalk::rng::RngStream;
use grasswalk::solvers::{
    InnerSolver, NelderMead, NelderMeadConfig, ShrinkDescent, ShrinkDescentConfig,
};

fn gram_deviation(basis: &nalgebra::DMatrix<f64>) -> f64 {
    let k = basis.ncols();
    let gram = basis.transpose() * basis;
    let mut worst: f64 = 0.0;
    for i in 0..k {
        for j in 0..k {
            let expect = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - expect).abs());
        }
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sampled_planes_are_orthonormal(d in 1usize..30, k_off in 0usize..30, seed in any::<u64>()) {
        let k = 1 + k_off % d;
        let plane = sample_uniform(d, k, &mut RngStream::from_seed(seed)).unwrap();
        prop_assert!(gram_deviation(plane.basis()) <= ORTHONORMALITY_TOL);
    }

    #[test]
    fn anchored_planes_contain_their_anchor(
        d in 2usize..20,
        k_off in 0usize..20,
        seed in any::<u64>(),
        coords in prop::collection::vec(-100.0f64..100.0, 20),
        scale_exp in -6i32..6,
    ) {
        let k = 1 + k_off % d;
        let scale = 10f64.powi(scale_exp);
        let x = DVector::from_fn(d, |i, _| coords[i] * scale + if i == 0 { 1e-3 * scale } else { 0.0 });
        prop_assume!(x.norm() > 0.0);
        let plane = sample_conditioned(&x, k, &mut RngStream::from_seed(seed)).unwrap();
        prop_assert!(plane.containment_error(&x).unwrap() <= CONTAINMENT_TOL);
        prop_assert!(gram_deviation(plane.basis()) <= ORTHONORMALITY_TOL);
    }

    #[test]
    fn embedding_is_isometric(d in 1usize..20, k_off in 0usize..20, seed in any::<u64>(),
                              coords in prop::collection::vec(-10.0f64..10.0, 20)) {
        let k = 1 + k_off % d;
        let plane = sample_uniform(d, k, &mut RngStream::from_seed(seed)).unwrap();
        let u = DVector::from_fn(k, |i, _| coords[i]);
        let y = plane.embed(&u).unwrap();
        prop_assert!((y.norm() - u.norm()).abs() <= 1e-10 * (1.0 + u.norm()));
    }

    #[test]
    fn clipping_floors_without_touching_the_rest(
        alpha in -50.0f64..50.0,
        coords in prop::collection::vec(-5.0f64..5.0, 6),
    ) {
        let base = Rastrigin::new(6);
        let clipped = clip(&base, alpha);
        let x = DVector::from_vec(coords);
        let raw = base.eval(&x);
        let v = clipped.eval(&x);
        prop_assert!(v >= alpha);
        if raw >= alpha {
            prop_assert_eq!(v, raw);
        } else {
            prop_assert_eq!(v, alpha);
        }
    }

    #[test]
    fn solvers_never_worsen_the_start(
        d in 2usize..8,
        k_off in 0usize..8,
        seed in any::<u64>(),
        start in prop::collection::vec(-3.0f64..3.0, 8),
    ) {
        let k = 1 + k_off % d;
        let base = Rastrigin::new(d);
        let plane = sample_uniform(d, k, &mut RngStream::from_seed(seed)).unwrap();
        let f = RestrictedLoss::new(&base, &plane).unwrap();
        let u0 = DVector::from_fn(k, |i, _| start[i]);
        let f0 = f.eval_restricted(&u0);
        let shrink = ShrinkDescent::new(ShrinkDescentConfig {
            num_scales: 8,
            proposals_per_scale: 2,
            initial_scale: 1.0,
        }).unwrap();
        let nm = NelderMead::new(NelderMeadConfig { max_iters: 60, ..NelderMeadConfig::default() }).unwrap();
        for solver in [&shrink as &dyn InnerSolver, &nm] {
            let out = solver.solve(&f, &u0, &mut RngStream::from_seed(seed ^ 0xABCD)).unwrap();
            prop_assert!(f.eval_restricted(&out.point) <= f0);
        }
    }
}

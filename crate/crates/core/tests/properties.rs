//! Property tests over seeded random parameters.

use std::collections::HashSet;

use proptest::prelude::*;
use twisted_xxx::bethe::{fd_jacobian, y_jacobian, y_system};
use twisted_xxx::izergin::{k_mod, k_mod_via, Form};
use twisted_xxx::linalg::lagrange_eval;
use twisted_xxx::oracle::gauge_independence;
use twisted_xxx::params::random_gauge;
use twisted_xxx::rational::{enumerate_partitions, PartitionCaps};
use twisted_xxx::sampling::{separated, stream, SeededRng};
use twisted_xxx::scalar::{c64, rel_err, scaled_err};
use twisted_xxx::{decompose_twist, Chain, Kernels, Model, ModelParams, TwistMatrix, C64};

fn complex(lo: f64, hi: f64) -> impl Strategy<Value = C64> {
    (lo..hi, lo..hi).prop_map(|(re, im)| c64(re, im))
}

fn twist() -> impl Strategy<Value = TwistMatrix<f64>> {
    (
        complex(-3.0, 3.0),
        complex(-3.0, 3.0),
        complex(-3.0, 3.0),
        complex(-3.0, 3.0),
    )
        .prop_filter("entries away from zero", |(a, b, p, m)| {
            [a, b, p, m].iter().all(|x| x.norm() > 0.3)
        })
        .prop_map(|(a, b, p, m)| TwistMatrix::new(a, b, p, m))
}

fn points(rng: &mut SeededRng, count: usize, avoid: &[C64]) -> Vec<C64> {
    separated(rng, count, 1.5, 0.25, &[c64(1.0, 0.0), c64(-1.0, 0.0)], avoid)
}

fn model(n: usize, seed: u64) -> Model<f64> {
    let mut rng = stream(seed, &[0x70]);
    let theta = points(&mut rng, n, &[]);
    let tw = TwistMatrix::new(c64(2.0, 0.1), c64(1.0, -0.2), c64(1.0, 0.3), c64(3.0, -0.1));
    let rho1 = random_gauge(&tw, &mut rng).unwrap();
    Model::new(ModelParams::new(c64(1.0, 0.0), theta, tw, rho1).unwrap()).unwrap()
}

fn shuffled<T: Clone>(xs: &[T], rng: &mut SeededRng) -> Vec<T> {
    use rand::seq::SliceRandom;
    let mut out = xs.to_vec();
    out.shuffle(rng);
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn twist_decomposition_satisfies_its_relations(tw in twist(), rho1 in complex(-2.0, 2.0)) {
        let d = decompose_twist(&tw, rho1);
        prop_assume!(d.is_ok());
        let d = d.unwrap();
        let one = c64(1.0, 0.0);
        prop_assume!((rho1 - tw.kappa_tilde).norm() > 0.1 && d.rho2.norm() > 0.1 && rho1.norm() > 0.1);
        prop_assume!((tw.kappa - d.rho2).norm() > 0.1 && (d.mu - one).norm() > 1e-3 && d.mu.norm() < 1e3);
        for (name, err) in d.invariant_residuals(&tw) {
            prop_assert!(err <= 1e-12, "{name}: {err:e}");
        }
    }

    #[test]
    fn kernels_reflect_and_shift(u in complex(-3.0, 3.0), v in complex(-3.0, 3.0), c in complex(0.3, 2.0)) {
        prop_assume!((u - v).norm() > 0.05 && (u - v + c).norm() > 0.05);
        let k = Kernels::new(c);
        prop_assert!(rel_err(k.g(-u, -v).unwrap(), k.g(v, u).unwrap()) <= 1e-12);
        prop_assert!(rel_err(k.f(-u, -v).unwrap(), k.f(v, u).unwrap()) <= 1e-12);
        prop_assert!(rel_err(k.h(-u, -v), k.h(v, u)) <= 1e-12);
        prop_assert!(rel_err(k.g(u - c, v).unwrap(), k.g(u, v + c).unwrap()) <= 1e-12);
        prop_assert!(rel_err(k.f(u - c, v).unwrap(), k.f(u, v + c).unwrap()) <= 1e-12);
        prop_assert!(rel_err(k.h(u - c, v), k.h(u, v + c)) <= 1e-12);
        prop_assert!(rel_err(k.f(u, v).unwrap(), k.h(u, v) * k.g(u, v).unwrap()) <= 1e-12);
    }

    #[test]
    fn kernel_products_ignore_evaluation_order(seed in any::<u64>(), a in 1usize..5, b in 1usize..5) {
        let mut rng = stream(seed, &[]);
        let left = points(&mut rng, a, &[]);
        let right = points(&mut rng, b, &left);
        let k = Kernels::new(c64(1.0, 0.0));
        let mut folded = c64(1.0, 0.0);
        for &x in right.iter().rev() {
            for &y in left.iter().rev() {
                folded *= k.f(y, x).unwrap();
            }
        }
        let direct = k.prod_f(&left, &right).unwrap();
        let reordered = k.prod_f(&shuffled(&left, &mut rng), &shuffled(&right, &mut rng)).unwrap();
        prop_assert!(rel_err(direct, folded) <= 1e-12);
        prop_assert!(rel_err(direct, reordered) <= 1e-12);
        let g = k.prod_g(&left, &right).unwrap() * k.prod_h(&left, &right);
        prop_assert!(rel_err(direct, g) <= 1e-12);
    }

    #[test]
    fn partitions_are_complete_and_distinct(n in 0usize..8, parts in 1usize..5) {
        let all: Vec<_> = enumerate_partitions(n, parts, &[], &PartitionCaps::default()).unwrap().collect();
        prop_assert_eq!(all.len(), parts.pow(n as u32));
        let codes: HashSet<u64> = all.iter().map(|p| p.code).collect();
        prop_assert_eq!(codes.len(), all.len());
        let memberships: HashSet<Vec<Vec<usize>>> = all.iter().map(|p| p.parts.clone()).collect();
        prop_assert_eq!(memberships.len(), all.len());
        for p in &all {
            let mut seen: Vec<usize> = p.parts.iter().flatten().copied().collect();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
        }
    }

    #[test]
    fn izergin_forms_agree_and_are_symmetric(
        seed in any::<u64>(), n in 0usize..5, m in 0usize..5, z in complex(-2.0, 2.0),
    ) {
        prop_assume!((z - c64(1.0, 0.0)).norm() > 0.5 && z.norm() > 0.2);
        let mut rng = stream(seed, &[]);
        let u = points(&mut rng, n, &[]);
        let v = points(&mut rng, m, &u);
        let k = Kernels::new(c64(1.0, 0.0));
        let base = k_mod(&k, z, &u, &v).unwrap();
        let permuted = k_mod(&k, z, &shuffled(&u, &mut rng), &shuffled(&v, &mut rng)).unwrap();
        prop_assert!(scaled_err(base, permuted) <= 1e-11);
        let other = k_mod_via(&k, z, &u, &v, Form::U).unwrap();
        prop_assert!(scaled_err(base, other) <= 1e-9, "{base} vs {other}");
    }

    #[test]
    fn izergin_is_polynomial_in_z(
        seed in any::<u64>(), n in 0usize..4, m in 1usize..5, probe in complex(-1.5, 1.5),
    ) {
        let mut rng = stream(seed, &[]);
        let u = points(&mut rng, n, &[]);
        let v = points(&mut rng, m, &u);
        let k = Kernels::new(c64(1.0, 0.0));
        let nodes: Vec<C64> = (0..=m)
            .map(|i| C64::from_polar(1.0, std::f64::consts::TAU * i as f64 / (m + 1) as f64))
            .collect();
        let values: Vec<C64> = nodes.iter().map(|&z| k_mod(&k, z, &u, &v).unwrap()).collect();
        let direct = k_mod(&k, probe, &u, &v).unwrap();
        let interpolated = lagrange_eval(&nodes, &values, probe);
        let scale = values.iter().fold(direct.norm(), |a, x| a.max(x.norm())).max(1.0);
        prop_assert!((direct - interpolated).norm() / scale <= 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transfer_matrix_does_not_depend_on_gauge(seed in any::<u64>(), n in 1usize..4, u in complex(-2.0, 2.0)) {
        let m = model(n, seed);
        let other = random_gauge(m.twist(), &mut stream(seed, &[0x71])).unwrap();
        prop_assume!((other - m.params().rho1).norm() > 0.1);
        prop_assert!(gauge_independence(&m, other, u).unwrap() <= 1e-10);
    }

    #[test]
    fn oracle_scalar_product_is_symmetric_in_each_set(seed in any::<u64>(), n in 1usize..4, k in 1usize..4) {
        let m = model(n, seed);
        let chain = Chain::new(&m).unwrap();
        let mut rng = stream(seed, &[0x72]);
        let u = points(&mut rng, k, m.theta());
        let v = points(&mut rng, k, m.theta());
        let s = chain.scalar_product(&v, &u);
        let t = chain.scalar_product(&shuffled(&v, &mut rng), &shuffled(&u, &mut rng));
        prop_assert!(scaled_err(s, t) <= 1e-12);
    }

    #[test]
    fn bethe_jacobian_matches_finite_differences(seed in any::<u64>(), n in 1usize..5) {
        let m = model(n, seed);
        let mut rng = stream(seed, &[0x73]);
        let u = points(&mut rng, n, m.theta());
        let exact = y_jacobian(&m, &u).unwrap();
        let step = 1e-6 * m.length_scale();
        let approx = fd_jacobian(&u, step, |x| y_system(&m, x)).unwrap();
        let scale = exact.max_abs().max(1.0);
        for (a, b) in exact.as_slice().iter().zip(approx.as_slice()) {
            prop_assert!((a - b).norm() / scale <= 1e-5);
        }
    }
}

//! End-to-end: solve the Bethe equations, then compare every scalar-product
//! representation with the dense chain.

use twisted_xxx::bethe::{eigenvalue_lambda, find_all_solutions, FindOptions};
use twisted_xxx::params::random_gauge;
use twisted_xxx::sampling::stream;
use twisted_xxx::scalar::{c64, cplx, scaled_err};
use twisted_xxx::scalar_products::{
    generic_points, negative_control, norm_squared, orthogonality_check, sp_det_izergin, sp_det_jacobian,
    sp_partition_sum, OnShellRoots,
};
use twisted_xxx::{Chain, Model, Model32, ModelParams, TwistMatrix, C32};

fn model(n: usize) -> Model<f64> {
    let theta = [c64(0.3, 0.1), c64(-0.4, 0.2), c64(0.9, -0.3)];
    let tw = TwistMatrix::new(c64(2.0, 0.1), c64(1.0, -0.2), c64(1.0, 0.3), c64(3.0, -0.1));
    let rho1 = random_gauge(&tw, &mut stream(11, &[])).unwrap();
    Model::new(ModelParams::new(c64(1.0, 0.0), theta[..n].to_vec(), tw, rho1).unwrap()).unwrap()
}

#[test]
fn every_representation_agrees_on_shell() {
    for n in [2, 3] {
        let m = model(n);
        let chain = Chain::new(&m).unwrap();
        let set = find_all_solutions(
            &m,
            &FindOptions {
                seed: 3,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(set.solutions.len(), 1 << n, "N={n} coverage");
        let mut rng = stream(5, &[n as u64]);
        for sol in &set.solutions {
            let u = OnShellRoots::from_solution(&m, sol, 1e-9).unwrap();
            let v = generic_points(&m, &mut rng, n, u.roots());
            let truth = chain.scalar_product(&v, u.roots());
            let values = [
                sp_partition_sum(&m, &v, u.roots()).unwrap(),
                sp_det_jacobian(&m, &v, &u).unwrap(),
                sp_det_izergin(&m, &v, &u).unwrap(),
            ];
            for x in values {
                assert!(scaled_err(x, truth) <= 1e-7, "N={n}: {x} vs {truth}");
            }
        }
    }
}

#[test]
fn on_shell_vectors_are_orthogonal_with_the_predicted_norms() {
    let m = model(2);
    let chain = Chain::new(&m).unwrap();
    let set = find_all_solutions(
        &m,
        &FindOptions {
            seed: 1,
            ..Default::default()
        },
    )
    .unwrap();
    let roots: Vec<_> = set
        .solutions
        .iter()
        .map(|s| OnShellRoots::from_solution(&m, s, 1e-9).unwrap())
        .collect();
    assert!(roots.len() >= 4);
    let gram = orthogonality_check(&m, &chain, &roots).unwrap();
    assert!(gram.max_off_diagonal <= 1e-7, "{}", gram.max_off_diagonal);
    assert!(gram.max_norm_error <= 1e-7, "{}", gram.max_norm_error);
    for r in &roots {
        assert!(norm_squared(&m, r).unwrap().norm() > 0.0);
    }
}

#[test]
fn eigenvalues_are_in_the_dense_spectrum() {
    let m = model(3);
    let chain = Chain::new(&m).unwrap();
    let set = find_all_solutions(
        &m,
        &FindOptions {
            seed: 2,
            ..Default::default()
        },
    )
    .unwrap();
    let z = c64(0.37, -0.81);
    let spectrum: Vec<_> = chain.spectrum(z).unwrap().into_iter().map(|(e, _)| e).collect();
    for sol in &set.solutions {
        let lambda = eigenvalue_lambda(&m, z, sol.roots.values()).unwrap();
        let best = spectrum
            .iter()
            .map(|&e| scaled_err(e, lambda))
            .fold(f64::INFINITY, f64::min);
        assert!(best <= 1e-8, "{lambda} missing, nearest at {best:e}");
    }
}

#[test]
fn off_shell_roots_break_the_determinant_formulas() {
    let m = model(3);
    let chain = Chain::new(&m).unwrap();
    let (detected, draws) = negative_control(&m, &chain, 9, 10, 1e-3).unwrap();
    assert!(detected >= 9, "{detected}/{draws}");
}

#[test]
fn single_precision_model_matches_double() {
    let tw = TwistMatrix::new(cplx(2.0, 0.1), cplx(1.0, -0.2), cplx(1.0, 0.3), cplx(3.0, -0.1));
    let theta: Vec<C32> = vec![cplx(0.3, 0.1), cplx(-0.4, 0.2)];
    let m32 = Model32::new(ModelParams::new(cplx(1.0, 0.0), theta, tw, cplx(0.7, 0.4)).unwrap()).unwrap();
    let m64 = model(2).with_rho1(c64(0.7, 0.4)).unwrap();
    let u32: Vec<C32> = vec![cplx(0.1, 0.5), cplx(-0.6, -0.2)];
    let v32: Vec<C32> = vec![cplx(1.1, 0.3), cplx(0.2, -0.9)];
    let widen = |x: &[C32]| x.iter().map(|z| c64(z.re as f64, z.im as f64)).collect::<Vec<_>>();
    let s32 = sp_partition_sum(&m32, &v32, &u32).unwrap();
    let s64 = sp_partition_sum(&m64, &widen(&v32), &widen(&u32)).unwrap();
    assert!(scaled_err(c64(s32.re as f64, s32.im as f64), s64) <= 1e-4);
}

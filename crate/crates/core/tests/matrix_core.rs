mod common;

use indexlab_core::linalg::{
    c, dot, frame_projector, hermitian_eig, hermitian_eig_window, hermitian_eigenvalues, inverse, matrix_sign, pauli,
    singular_values, spectral_norm_estimate, upper_half_projector, upper_half_projector_oracle, CMat, C64, I, ONE,
    ZERO,
};
use indexlab_core::linalg::{orthonormal_frame, DEFAULT_SIGN_MAX_ITER as MAX_ITER, DEFAULT_SIGN_TOL as TOL};
use indexlab_core::Error;
use proptest::prelude::*;

use common::*;

fn unitarity_defect(v: &CMat) -> f64 {
    (&(&v.adjoint() * v) - &CMat::identity(v.cols())).max_abs()
}

#[test]
fn diagonal_eigenproblem_is_sorted() {
    let h = CMat::diag_real(&[3.0, -1.0, 2.0]);
    let e = hermitian_eig(&h, 1e-12).unwrap();
    assert_eq!(e.eigenvalues, vec![-1.0, 2.0, 3.0]);
    for (k, axis) in [1, 2, 0].into_iter().enumerate() {
        assert!((e.eigenvectors[(axis, k)].norm() - 1.0).abs() < 1e-14);
    }
}

#[test]
fn pauli_x_eigenpairs() {
    let [s1, _, _] = pauli();
    let e = hermitian_eig(&s1, 1e-12).unwrap();
    assert!((e.eigenvalues[0] + 1.0).abs() < 1e-14 && (e.eigenvalues[1] - 1.0).abs() < 1e-14);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let expect = [[c(r, 0.0), c(-r, 0.0)], [c(r, 0.0), c(r, 0.0)]];
    for (k, want) in expect.iter().enumerate() {
        let overlap = dot(&e.vector(k), want).norm();
        assert!((overlap - 1.0).abs() < 1e-14);
    }
}

#[test]
fn random_hermitian_reconstructs() {
    let mut rng = rng(11);
    let v = random_unitary(&mut rng, 8);
    let lam: Vec<f64> = (0..8).map(|k| k as f64 - 3.3).collect();
    let h = CMat::diag_real(&lam).conjugate_by(&v);
    let e = hermitian_eig(&h, 1e-12).unwrap();
    let rebuilt = CMat::diag_real(&e.eigenvalues).conjugate_by(&e.eigenvectors);
    assert!(rebuilt.dist(&h) <= 1e-10 * h.frobenius());
    for (a, b) in e.eigenvalues.iter().zip(&lam) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn non_hermitian_input_is_rejected() {
    let m = CMat::from_real(2, 2, &[1.0, 2.0, 0.0, 1.0]);
    assert!(matches!(hermitian_eig(&m, 1e-10), Err(Error::NotHermitian { .. })));
}

#[test]
fn windowed_eigenvalues_match_full_spectrum() {
    let mut rng = rng(12);
    let h = random_hermitian(&mut rng, 20);
    let full = hermitian_eigenvalues(&h, 1e-12).unwrap();
    let win = hermitian_eig_window(&h, -0.5, 0.5, 1e-12).unwrap();
    let expect: Vec<f64> = full.iter().copied().filter(|x| x.abs() <= 0.5).collect();
    assert_eq!(win.len(), expect.len());
    for (a, b) in win.eigenvalues.iter().zip(&expect) {
        assert!((a - b).abs() < 1e-12);
    }
    assert!(win.max_residual(&h) < 1e-12);
}

#[test]
fn projector_of_diagonal_matrices() {
    let b = CMat::diag(&[c(0.0, 2.0), c(0.0, -3.0)]);
    let p = upper_half_projector(&b, TOL, MAX_ITER).unwrap();
    assert!(p.dist(&CMat::diag_real(&[1.0, 0.0])) < 1e-12);
    let [_, _, s3] = pauli();
    let p = upper_half_projector(&s3.scale(I), TOL, MAX_ITER).unwrap();
    assert!(p.dist(&CMat::diag_real(&[1.0, 0.0])) < 1e-12);
}

#[test]
fn projector_matches_eigendecomposition_oracle() {
    let mut rng = rng(13);
    let v = random_invertible(&mut rng, 8, 20.0);
    let lam: Vec<C64> = (0..8)
        .map(|k| {
            let im = if k < 3 { 0.5 + k as f64 } else { -0.3 - k as f64 * 0.2 };
            c(k as f64 * 0.7 - 2.0, im)
        })
        .collect();
    let b = &(&v * &CMat::diag(&lam)) * &inverse(&v).unwrap();
    let p = upper_half_projector(&b, TOL, MAX_ITER).unwrap();
    let oracle = upper_half_projector_oracle(&b).unwrap();
    assert!(p.dist(&oracle) < 1e-8 * oracle.frobenius());
    let rank = p.trace().re.round() as usize;
    assert_eq!(rank, 3);
}

#[test]
fn real_eigenvalue_is_rejected() {
    let b = CMat::diag(&[ONE, I]);
    assert!(matches!(upper_half_projector(&b, TOL, MAX_ITER), Err(Error::SingularIterate { .. })));
}

#[test]
fn gram_schmidt_examples() {
    let f = orthonormal_frame(&[vec![ONE, ZERO], vec![ONE, ONE]], 1e-12).unwrap();
    assert!((f[0][0] - ONE).norm() < 1e-15 && f[0][1].norm() < 1e-15);
    assert!(f[1][0].norm() < 1e-15 && (f[1][1] - ONE).norm() < 1e-15);
    let mut rng = rng(14);
    let q = random_unitary(&mut rng, 5).columns();
    let again = orthonormal_frame(&q, 1e-12).unwrap();
    for (a, b) in q.iter().zip(&again) {
        assert!(a.iter().zip(b).all(|(x, y)| (x - y).norm() < 1e-12));
    }
    let dup = vec![vec![ONE, ONE], vec![c(2.0, 0.0), c(2.0, 0.0)]];
    assert!(matches!(orthonormal_frame(&dup, 1e-12), Err(Error::RankDeficient { index: 1 })));
}

#[test]
fn frame_projector_matches_least_squares_oracle() {
    let mut rng = rng(15);
    let a = random_matrix(&mut rng, 6, 4);
    let f = orthonormal_frame(&a.columns(), 1e-12).unwrap();
    for (i, u) in f.iter().enumerate() {
        for (j, v) in f.iter().enumerate() {
            let target = if i == j { ONE } else { ZERO };
            assert!((dot(u, v) - target).norm() < 1e-12);
        }
    }
    let oracle = &(&a * &inverse(&(&a.adjoint() * &a)).unwrap()) * &a.adjoint();
    assert!(frame_projector(6, &f).dist(&oracle) < 1e-10);
}

#[test]
fn singular_values_resolve_tiny_values() {
    let m = CMat::diag_real(&[1.0, 1e-13]);
    let s = singular_values(&m).unwrap();
    assert!((s[1] - 1e-13).abs() < 1e-20);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigen_result_contract(seed in any::<u64>(), n in 1usize..12) {
        let mut rng = rng(seed);
        let h = random_hermitian(&mut rng, n);
        let e = hermitian_eig(&h, 1e-12).unwrap();
        let scale = spectral_norm_estimate(&h, 200).max(1e-300);
        prop_assert!(e.max_residual(&h) <= 1e-10 * scale);
        prop_assert!(unitarity_defect(&e.eigenvectors) <= 1e-10);
        prop_assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        let top = e.eigenvalues.iter().map(|x| x.abs()).fold(0.0, f64::max);
        prop_assert!(top <= h.frobenius() * (1.0 + 1e-12));
        prop_assert!(scale <= top * (1.0 + 1e-10));
    }

    #[test]
    fn projectors_are_complementary(seed in any::<u64>(), n in 1usize..9) {
        let mut rng = rng(seed);
        let v = random_invertible(&mut rng, n, 10.0);
        let lam: Vec<C64> = (0..n).map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            c(rng_real(&mut rng), sign * (0.3 + rng_real(&mut rng).abs()))
        }).collect();
        let b = &(&v * &CMat::diag(&lam)) * &inverse(&v).unwrap();
        let p = upper_half_projector(&b, TOL, MAX_ITER).unwrap();
        let q = &CMat::identity(n) - &p;
        let nb = b.frobenius();
        prop_assert!((&(&p * &p) - &p).frobenius() <= 1e-8 * p.frobenius().max(1.0));
        prop_assert!((&(&p * &b) - &(&b * &p)).frobenius() <= 1e-8 * nb * p.frobenius().max(1.0));
        prop_assert!((&(&q * &b) - &(&b * &q)).frobenius() <= 1e-8 * nb * q.frobenius().max(1.0));
        prop_assert_eq!(p.trace().re.round() as usize, n.div_ceil(2));
        let s = matrix_sign(&b.scale(-I), TOL, MAX_ITER).unwrap();
        prop_assert!((&(&s * &s) - &CMat::identity(n)).frobenius() <= 1e-8 * s.frobenius().powi(2));
    }
}

fn rng_real(rng: &mut rand_chacha::ChaCha8Rng) -> f64 {
    use rand::Rng;
    rng.random_range(-2.0..2.0)
}

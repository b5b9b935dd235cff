mod common;

use indexlab_core::linalg::{c, frame_projector, pauli, upper_half_projector_oracle, CMat, I, ONE, ZERO};
use indexlab_core::symbol::{
    check_lagrangian, dirac_boundary_sample, dirac_sample_2, isotropy_defect, real_axis_margin, split,
    symplectic_form, unit_vector, BoundarySymbolSample, SymbolConvention, GEOMETRIC_TOL,
};
use indexlab_core::Error;
use proptest::prelude::*;

use common::*;

#[test]
fn dirac_sample_splits_along_axes() {
    let s = dirac_sample_2();
    let b = s.b().unwrap();
    assert!(b.dist(&CMat::diag(&[I, -I])) < 1e-15);
    let sp = split(&s).unwrap();
    assert!(sp.p_plus.dist(&CMat::diag_real(&[1.0, 0.0])) < 1e-12);
    assert!(sp.p_minus.dist(&CMat::diag_real(&[0.0, 1.0])) < 1e-12);
    assert!(sp.is_orthogonal(1e-12));
}

#[test]
fn split_of_block_sum_is_block_sum() {
    let mut rng = rng(21);
    let (a, b) = (random_sample(&mut rng, 1), random_sample(&mut rng, 2));
    let sum = split(&a.direct_sum(&b)).unwrap();
    let (sa, sb) = (split(&a).unwrap(), split(&b).unwrap());
    let expect = CMat::block_diag(&[&sa.p_plus, &sb.p_plus]);
    assert!(sum.p_plus.dist(&expect) < 1e-10);
}

#[test]
fn random_four_dimensional_sample() {
    let mut rng = rng(22);
    let s = random_sample(&mut rng, 2);
    let sp = split(&s).unwrap();
    assert_eq!(sp.frame_plus.len(), 2);
    assert_eq!(sp.rank(), 2);
    let oracle = upper_half_projector_oracle(&s.b().unwrap()).unwrap();
    assert!(sp.p_plus.dist(&oracle) < 1e-8);
    assert!(check_lagrangian(&s.sigma_n, &sp.frame_minus, GEOMETRIC_TOL).unwrap());
    assert!(check_lagrangian(&s.sigma_n, &sp.frame_plus, GEOMETRIC_TOL).unwrap());
}

#[test]
fn symplectic_form_examples() {
    let [s1, _, _] = pauli();
    let u = vec![ONE, I];
    assert!(symplectic_form(&s1, &u, &u).unwrap().norm() < 1e-15);
    assert_eq!(symplectic_form(&s1, &[ZERO, ZERO], &u).unwrap(), ZERO);
    assert!(matches!(symplectic_form(&s1, &[ONE], &u), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn lagrangian_examples() {
    let [s1, _, _] = pauli();
    assert!(check_lagrangian(&s1, &[unit_vector(2, 0)], GEOMETRIC_TOL).unwrap());
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let tilted = vec![c(r, 0.0), c(r * 0.8, r * 0.6)];
    assert!(isotropy_defect(&s1, std::slice::from_ref(&tilted)).unwrap() > 0.5);
    assert!(!check_lagrangian(&s1, &[tilted], GEOMETRIC_TOL).unwrap());
    assert!(!check_lagrangian(&s1, &[], GEOMETRIC_TOL).unwrap());
}

#[test]
fn invalid_samples_are_rejected() {
    let [s1, s2, _] = pauli();
    let bad = CMat::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]);
    assert!(matches!(BoundarySymbolSample::new(bad, s2.clone()), Err(Error::NotSelfAdjoint { .. })));
    let degenerate = BoundarySymbolSample { sigma_n: s1.clone(), sigma_tau: s1 };
    assert!(matches!(split(&degenerate), Err(Error::NotElliptic(_))));
    assert_eq!(real_axis_margin(&degenerate).unwrap(), 0.0);
}

#[test]
fn dirac_boundary_symbols() {
    for comp in 0..2 {
        let s = dirac_boundary_sample(comp, 2, SymbolConvention::MinusI);
        let flipped = dirac_boundary_sample(comp, 2, SymbolConvention::PlusI);
        assert!(s.sigma_n.dist(&flipped.sigma_n.scale_real(-1.0)) == 0.0);
        let sp = split(&s).unwrap();
        assert!(sp.is_orthogonal(1e-12));
        assert!(s.min_symbol_gap(-10.0, 10.0, 1001).unwrap() > 0.9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn splitting_invariants(seed in any::<u64>(), r in 1usize..4) {
        let mut rng = rng(seed);
        let s = random_sample(&mut rng, r);
        let sp = split(&s).unwrap();
        let n = 2 * r;
        prop_assert!((&sp.p_plus + &sp.p_minus).dist(&CMat::identity(n)) <= 1e-10);
        prop_assert!((&sp.p_plus * &sp.p_plus).dist(&sp.p_plus) <= 1e-10 * sp.p_plus.frobenius());
        let b = s.b().unwrap();
        prop_assert!((&b * &sp.p_plus).dist(&(&sp.p_plus * &b)) <= 1e-9 * b.frobenius() * sp.p_plus.frobenius());
        prop_assert_eq!(sp.frame_plus.len(), r);
        prop_assert_eq!(sp.frame_minus.len(), r);
        prop_assert!(check_lagrangian(&s.sigma_n, &sp.frame_minus, GEOMETRIC_TOL).unwrap());
        prop_assert!(check_lagrangian(&s.sigma_n, &sp.frame_plus, GEOMETRIC_TOL).unwrap());
    }

    #[test]
    fn split_is_conjugation_equivariant(seed in any::<u64>(), r in 1usize..4) {
        let mut rng = rng(seed);
        let s = random_sample(&mut rng, r);
        let g = random_unitary(&mut rng, 2 * r);
        let moved = BoundarySymbolSample { sigma_n: s.sigma_n.conjugate_by(&g), sigma_tau: s.sigma_tau.conjugate_by(&g) };
        let p = split(&s).unwrap().p_plus.conjugate_by(&g);
        prop_assert!(split(&moved).unwrap().p_plus.dist(&p) <= 1e-8);
    }

    #[test]
    fn symbol_has_no_real_characteristic_root(seed in any::<u64>(), r in 1usize..4) {
        let mut rng = rng(seed);
        let s = random_sample(&mut rng, r);
        prop_assert!(s.min_symbol_gap(-10.0, 10.0, 1001).unwrap() > 0.0);
        prop_assert!(s.sigma_n.rows().is_multiple_of(2));
        prop_assert!(indexlab_core::linalg::singular_values(&s.sigma_n).unwrap().last().copied().unwrap() > 1e-8);
        prop_assert!(real_axis_margin(&s).unwrap() > 0.0);
    }

    #[test]
    fn symplectic_form_is_skew_hermitian(seed in any::<u64>(), n in 1usize..7) {
        let mut rng = rng(seed);
        let sn = random_hermitian(&mut rng, 2 * n);
        let (u, v) = (random_vector(&mut rng, 2 * n), random_vector(&mut rng, 2 * n));
        let a = symplectic_form(&sn, &u, &v).unwrap();
        let b = symplectic_form(&sn, &v, &u).unwrap();
        prop_assert!((a + b.conj()).norm() <= 1e-12 * (1.0 + a.norm()));
        let k = random_c64(&mut rng);
        let ku: Vec<_> = u.iter().map(|z| z * k).collect();
        prop_assert!((symplectic_form(&sn, &ku, &v).unwrap() - a * k).norm() <= 1e-12 * (1.0 + a.norm()));
    }

    #[test]
    fn direct_sum_splits_blockwise(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let (a, b) = (random_sample(&mut rng, 1), random_sample(&mut rng, 2));
        let sp = split(&a.direct_sum(&b)).unwrap();
        let expect = CMat::block_diag(&[&split(&a).unwrap().p_plus, &split(&b).unwrap().p_plus]);
        prop_assert!(sp.p_plus.dist(&expect) <= 1e-10 * expect.frobenius());
        let proj = frame_projector(6, &sp.frame_minus);
        prop_assert!(proj.block(0, 2, 2, 4).max_abs() <= 1e-10);
    }
}

use indexlab_core::ktheory::{
    binomial, coinvariant_basis, complete_homogeneous, elementary_symmetric, factorial, permutations, pi_star_b,
    pi_star_beta, q_poly, reduce_mod_jn, vandermonde, vandermonde_det, verify_dn, verify_nun, CoinvariantElement,
    IntPoly, SymbolicUnitaryClass, DN_CAP, PI_STAR_B_CAP,
};
use indexlab_core::Error;
use num_bigint::BigInt;
use proptest::prelude::*;

fn x(n: usize, i: usize) -> IntPoly {
    IntPoly::var(n, i)
}

#[test]
fn reduction_examples() {
    assert!(reduce_mod_jn(&x(2, 0).add(&x(2, 1)), 2).is_zero());
    let d2 = reduce_mod_jn(&x(2, 1).sub(&x(2, 0)), 2);
    assert_eq!(d2, CoinvariantElement::top(2, 2));
    for n in 1..=5 {
        assert!(reduce_mod_jn(&x(n, n - 1).pow(n as u32), n).is_zero());
        for k in 1..=n {
            assert!(reduce_mod_jn(&elementary_symmetric(n, k), n).is_zero());
        }
    }
    let c = reduce_mod_jn(&IntPoly::constant(3, 7), 3);
    assert_eq!(c.coefficient(&[0, 0]), BigInt::from(7));
}

#[test]
fn groebner_generators_reduce_to_zero() {
    for n in 1..=5 {
        for k in 1..=n {
            let g = complete_homogeneous(n, k - 1, k as u32);
            assert!(reduce_mod_jn(&g, n).is_zero(), "n={n} k={k}");
        }
    }
}

#[test]
fn basis_has_factorial_size() {
    for n in 1..=6 {
        let b = coinvariant_basis(n);
        assert_eq!(BigInt::from(b.len()), factorial(n));
        assert!(b.iter().all(|e| e.len() == n - 1 && e.iter().enumerate().all(|(k, &j)| j as usize <= k + 1)));
    }
}

#[test]
fn vandermonde_routes_agree() {
    assert_eq!(vandermonde(2), x(2, 1).sub(&x(2, 0)));
    for (n, terms) in [(3, 6), (4, 24), (5, 120)] {
        let v = vandermonde(n);
        assert_eq!(v, vandermonde_det(n));
        assert_eq!(v.n_terms(), terms);
        assert_eq!(v.degree(), Some((n * (n - 1) / 2) as u32));
    }
    assert_eq!(permutations(4).len(), 24);
    assert_eq!(permutations(4).iter().map(|p| p.1).sum::<i32>(), 0);
}

#[test]
fn vandermonde_is_antisymmetric() {
    for n in 2..=5 {
        let v = vandermonde(n);
        for i in 0..n - 1 {
            assert_eq!(v.swap_vars(i, i + 1), v.neg());
        }
    }
}

#[test]
fn dn_and_nun_identities() {
    for n in 2..=5 {
        let w = verify_dn(n).unwrap();
        assert!(w.passed && w.routes_agree);
        assert_eq!(w.expected_coefficient, factorial(n).to_string());
        assert!(verify_nun(n).unwrap().passed);
    }
    let top: Vec<u32> = vec![1, 2];
    assert_eq!(reduce_mod_jn(&vandermonde(3), 3).coefficient(&top), BigInt::from(6));
    assert_eq!(reduce_mod_jn(&vandermonde(4), 4).coefficient(&[1, 2, 3]), BigInt::from(24));
    assert!(matches!(verify_dn(1), Err(Error::TooLarge(_))));
    assert!(matches!(verify_dn(DN_CAP + 1), Err(Error::TooLarge(_))));
    assert!(matches!(verify_nun(DN_CAP + 1), Err(Error::TooLarge(_))));
}

#[test]
fn q_polynomials() {
    assert_eq!(q_poly(0, 4).unwrap(), IntPoly::one(1));
    for n in 1..=6usize {
        let q1 = q_poly(1, n).unwrap();
        assert_eq!(q1, IntPoly::constant(1, n).sub(&x(1, 0)));
        for k in 1..=n {
            let lhs = q_poly(k, n).unwrap().add(&x(1, 0).mul(&q_poly(k - 1, n).unwrap()));
            assert_eq!(lhs, IntPoly::constant(1, binomial(n, k)));
        }
    }
    assert!(matches!(q_poly(5, 4), Err(Error::IndexOutOfRange { index: 5, max: 4 })));
}

#[test]
fn pi_star_b_signs() {
    for (n, coef) in [(1, 1), (2, -2), (3, -6), (4, 24)] {
        let (_, w) = pi_star_b(n).unwrap();
        assert!(w.passed, "n={n}");
        assert_eq!(w.coefficient, coef.to_string());
        assert_eq!(w.reduced, CoinvariantElement::top(n, coef));
    }
    assert!(matches!(pi_star_b(PI_STAR_B_CAP + 1), Err(Error::TooLarge(_))));
    assert!(matches!(pi_star_b(0), Err(Error::TooLarge(_))));
}

#[test]
fn pi_star_b_matches_determinant_formula() {
    // top coefficient of a wedge of degree-one classes is det(c_{k,i})
    for n in 2..=4 {
        let (b, _) = pi_star_b(n).unwrap();
        let rows: Vec<Vec<IntPoly>> = (1..=n)
            .map(|k| {
                let beta = pi_star_beta(k, n).unwrap();
                (0..n).map(|i| beta.terms.get(&(1 << i)).cloned().unwrap_or_else(|| IntPoly::zero(n))).collect()
            })
            .collect();
        let mut det = IntPoly::zero(n);
        for (perm, sign) in permutations(n) {
            let mut t = IntPoly::constant(n, sign);
            for (k, &i) in perm.iter().enumerate() {
                t = t.mul(&rows[k][i]);
            }
            det = det.add(&t);
        }
        assert_eq!(b.top_coefficient(), det);
    }
}

#[test]
fn wedge_is_graded_commutative() {
    let n = 3;
    let a = SymbolicUnitaryClass::degree_one(&[x(n, 0), IntPoly::zero(n), IntPoly::one(n)]);
    let b = SymbolicUnitaryClass::degree_one(&[IntPoly::one(n), x(n, 2), IntPoly::zero(n)]);
    let ab = a.wedge(&b);
    let ba = b.wedge(&a);
    assert_eq!(ab.terms.len(), ba.terms.len());
    for (m, p) in &ab.terms {
        assert_eq!(&ba.terms[m].neg(), p);
    }
    assert!(a.wedge(&a).terms.is_empty());
    assert_eq!(SymbolicUnitaryClass::one(n).wedge(&a), a);
}

fn small_poly(n: usize, terms: Vec<(Vec<u32>, i64)>) -> IntPoly {
    let mut p = IntPoly::zero(n);
    for (e, c) in terms {
        p.add_term(e.into_iter().take(n).collect(), BigInt::from(c));
    }
    p
}

fn poly_strategy(n: usize) -> impl Strategy<Value = IntPoly> {
    prop::collection::vec((prop::collection::vec(0u32..4, n), -5i64..6), 0..5).prop_map(move |t| small_poly(n, t))
}

fn case() -> impl Strategy<Value = (usize, IntPoly, IntPoly, usize)> {
    (2usize..5).prop_flat_map(|n| (Just(n), poly_strategy(n), poly_strategy(n), 0..n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reduction_is_a_ring_map((n, p, q, k) in case()) {
        let rp = reduce_mod_jn(&p, n);
        let rq = reduce_mod_jn(&q, n);
        prop_assert_eq!(reduce_mod_jn(&p.mul(&q), n), reduce_mod_jn(&rp.lift().mul(&rq.lift()), n));
        prop_assert_eq!(reduce_mod_jn(&p.add(&q), n), reduce_mod_jn(&rp.lift().add(&rq.lift()), n));
        prop_assert_eq!(reduce_mod_jn(&rp.lift(), n), rp.clone());
        let shifted = p.add(&elementary_symmetric(n, k + 1).mul(&q));
        prop_assert_eq!(reduce_mod_jn(&shifted, n), rp);
    }

    #[test]
    fn reduction_respects_symmetrization((n, p, _q, k) in case()) {
        let i = k % (n - 1);
        let sym = p.add(&p.swap_vars(i, i + 1));
        prop_assert_eq!(reduce_mod_jn(&sym, n), reduce_mod_jn(&sym.swap_vars(i, i + 1), n));
    }
}

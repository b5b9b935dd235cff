//! Exact integer polynomials and the coinvariant algebra ℤ[x₁..xₙ]/Jₙ, where Jₙ is generated by the
//! elementary symmetric polynomials.
//!
//! Reduction uses the Gröbner basis g_k = h_k(x_k, …, xₙ), k = 1..n, of Jₙ under lex
//! x₁ > … > xₙ, with leading terms x_k^k. Normal forms are integer combinations of the monomials
//! ∏ x_{k+1}^{j_k} with 0 ≤ j_k ≤ k.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

/// Largest n accepted by `pi_star_b`.
pub const PI_STAR_B_CAP: usize = 4;
/// Largest n accepted by `verify_dn` and `verify_nun`.
pub const DN_CAP: usize = 6;

/// Exponent vector ordered graded-lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Sparse polynomial with arbitrary-precision integer coefficients; zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntPoly {
    nvars: usize,
    terms: BTreeMap<Monomial, BigInt>,
}

impl IntPoly {
    pub fn zero(nvars: usize) -> Self {
        IntPoly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: impl Into<BigInt>) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c.into());
        p
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, 1)
    }

    /// The variable x_{i+1} (0-based index i).
    pub fn var(nvars: usize, i: usize) -> Self {
        Self::monomial(nvars, &unit(nvars, i, 1), 1)
    }

    pub fn monomial(nvars: usize, exps: &[u32], c: impl Into<BigInt>) -> Self {
        assert_eq!(exps.len(), nvars);
        let mut p = Self::zero(nvars);
        p.add_term(exps.to_vec(), c.into());
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.degree()).max()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], &BigInt)> {
        self.terms.iter().map(|(m, c)| (m.0.as_slice(), c))
    }

    pub fn coefficient(&self, exps: &[u32]) -> BigInt {
        self.terms.get(&Monomial(exps.to_vec())).cloned().unwrap_or_default()
    }

    pub fn add_term(&mut self, exps: Vec<u32>, c: BigInt) {
        if c.is_zero() {
            return;
        }
        let key = Monomial(exps);
        let entry = self.terms.entry(key.clone()).or_default();
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn add(&self, other: &IntPoly) -> IntPoly {
        assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.0.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> IntPoly {
        IntPoly { nvars: self.nvars, terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }

    pub fn sub(&self, other: &IntPoly) -> IntPoly {
        self.add(&other.neg())
    }

    pub fn scale(&self, k: &BigInt) -> IntPoly {
        if k.is_zero() {
            return Self::zero(self.nvars);
        }
        IntPoly { nvars: self.nvars, terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect() }
    }

    pub fn mul(&self, other: &IntPoly) -> IntPoly {
        assert_eq!(self.nvars, other.nvars);
        let mut out = Self::zero(self.nvars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let e = ma.0.iter().zip(&mb.0).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> IntPoly {
        let mut out = Self::one(self.nvars);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// Exchanges two variables.
    pub fn swap_vars(&self, i: usize, j: usize) -> IntPoly {
        let mut out = Self::zero(self.nvars);
        for (m, c) in &self.terms {
            let mut e = m.0.clone();
            e.swap(i, j);
            out.add_term(e, c.clone());
        }
        out
    }

    /// Embeds a univariate polynomial as a polynomial in variable `i` of `nvars` variables.
    pub fn embed_univariate(&self, nvars: usize, i: usize) -> IntPoly {
        assert_eq!(self.nvars, 1);
        let mut out = Self::zero(nvars);
        for (m, c) in &self.terms {
            out.add_term(unit(nvars, i, m.0[0]), c.clone());
        }
        out
    }

    /// Substitutes each variable x_i ↦ images[i] (a ring homomorphism).
    pub fn substitute(&self, images: &[IntPoly]) -> IntPoly {
        assert_eq!(images.len(), self.nvars);
        let nv = images.first().map_or(0, |p| p.nvars);
        let mut out = Self::zero(nv);
        for (m, c) in &self.terms {
            let mut t = Self::constant(nv, c.clone());
            for (i, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    t = t.mul(&images[i].pow(e));
                }
            }
            out = out.add(&t);
        }
        out
    }
}

impl fmt::Display for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in self.terms.iter().rev() {
            let neg = c.is_negative();
            let a = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            first = false;
            let vars: Vec<String> = m
                .0
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(i, &e)| if e == 1 { format!("x{}", i + 1) } else { format!("x{}^{}", i + 1, e) })
                .collect();
            if vars.is_empty() {
                write!(f, "{a}")?;
            } else if a.is_one() {
                write!(f, "{}", vars.join("*"))?;
            } else {
                write!(f, "{a}*{}", vars.join("*"))?;
            }
        }
        Ok(())
    }
}

fn unit(n: usize, i: usize, e: u32) -> Vec<u32> {
    let mut v = vec![0; n];
    v[i] = e;
    v
}

/// All exponent vectors of total degree d in `nvars` variables.
fn monomials_of_degree(nvars: usize, d: u32) -> Vec<Vec<u32>> {
    if nvars == 0 {
        return if d == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in (0..=d).rev() {
        for mut rest in monomials_of_degree(nvars - 1, d - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Complete homogeneous symmetric polynomial h_d in the variables x_from..x_n (0-based `from`).
pub fn complete_homogeneous(n: usize, from: usize, d: u32) -> IntPoly {
    let mut p = IntPoly::zero(n);
    for tail in monomials_of_degree(n - from, d) {
        let mut e = vec![0; from];
        e.extend(tail);
        p.add_term(e, BigInt::one());
    }
    p
}

/// Elementary symmetric polynomial σ_k in n variables.
pub fn elementary_symmetric(n: usize, k: usize) -> IntPoly {
    let mut p = IntPoly::zero(n);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize == k {
            p.add_term((0..n).map(|i| (mask >> i) & 1).collect(), BigInt::one());
        }
    }
    p
}

/// Element of ℤ[x₁..xₙ]/Jₙ in the basis ∏_{k=1}^{n−1} x_{k+1}^{j_k}, 0 ≤ j_k ≤ k; keys are (j_1, …, j_{n−1}).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoinvariantElement {
    pub n: usize,
    #[serde(serialize_with = "coords_as_list")]
    pub coords: BTreeMap<Vec<u32>, BigInt>,
}

#[derive(Serialize)]
struct Coordinate<'a> {
    exponents: &'a [u32],
    coefficient: String,
}

fn coords_as_list<S: serde::Serializer>(coords: &BTreeMap<Vec<u32>, BigInt>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(coords.iter().map(|(e, c)| Coordinate { exponents: e, coefficient: c.to_string() }))
}

impl CoinvariantElement {
    pub fn is_zero(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coefficient(&self, j: &[u32]) -> BigInt {
        self.coords.get(j).cloned().unwrap_or_default()
    }

    /// The polynomial ∑ c_j ∏ x_{k+1}^{j_k}.
    pub fn lift(&self) -> IntPoly {
        let mut p = IntPoly::zero(self.n);
        for (j, c) in &self.coords {
            let mut e = vec![0];
            e.extend(j.iter().copied());
            p.add_term(e, c.clone());
        }
        p
    }

    /// The top basis monomial ∏ x_{k+1}^k scaled by c.
    pub fn top(n: usize, c: impl Into<BigInt>) -> Self {
        let mut coords = BTreeMap::new();
        let c = c.into();
        if !c.is_zero() {
            coords.insert((1..n as u32).collect(), c);
        }
        CoinvariantElement { n, coords }
    }
}

impl fmt::Display for CoinvariantElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.lift())
    }
}

/// Exponent vectors of the basis of ℤ[x₁..xₙ]/Jₙ; there are n! of them.
pub fn coinvariant_basis(n: usize) -> Vec<Vec<u32>> {
    let mut out: Vec<Vec<u32>> = vec![vec![]];
    for k in 1..n as u32 {
        out = out.into_iter().flat_map(|v| (0..=k).map(move |j| [v.clone(), vec![j]].concat())).collect();
    }
    out
}

/// Lex order x₁ > x₂ > … used by the rewriting worklist.
#[derive(Clone, PartialEq, Eq)]
struct Lex(Vec<u32>);

impl Ord for Lex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.cmp(&other.0)
    }
}

impl PartialOrd for Lex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Normal form modulo Jₙ.
pub fn reduce_mod_jn(p: &IntPoly, n: usize) -> CoinvariantElement {
    assert_eq!(p.nvars(), n, "polynomial must have n variables");
    // x_k^k ≡ −(h_k(x_k..x_n) − x_k^k)
    let tails: Vec<Vec<Vec<u32>>> = (0..n)
        .map(|k| {
            let lead = unit(n, k, k as u32 + 1);
            complete_homogeneous(n, k, k as u32 + 1).terms().map(|(e, _)| e.to_vec()).filter(|e| *e != lead).collect()
        })
        .collect();
    let mut work: BTreeMap<Lex, BigInt> = p.terms().map(|(e, c)| (Lex(e.to_vec()), c.clone())).collect();
    let mut coords = BTreeMap::new();
    while let Some((Lex(e), c)) = work.pop_last() {
        if c.is_zero() {
            continue;
        }
        match (0..n).find(|&k| e[k] > k as u32) {
            None => {
                coords.insert(e[1..].to_vec(), c);
            }
            Some(k) => {
                let mut base = e.clone();
                base[k] -= k as u32 + 1;
                for t in &tails[k] {
                    let ne: Vec<u32> = base.iter().zip(t).map(|(a, b)| a + b).collect();
                    let entry = work.entry(Lex(ne)).or_default();
                    *entry -= &c;
                }
            }
        }
    }
    coords.retain(|_, c| !c.is_zero());
    CoinvariantElement { n, coords }
}

/// ∏_{i>j} (x_i − x_j) by direct expansion.
pub fn vandermonde(n: usize) -> IntPoly {
    let mut p = IntPoly::one(n);
    for i in 0..n {
        for j in 0..i {
            p = p.mul(&IntPoly::var(n, i).sub(&IntPoly::var(n, j)));
        }
    }
    p
}

/// Permutations of 0..n with their signs, in lexicographic order.
pub fn permutations(n: usize) -> Vec<(Vec<usize>, i32)> {
    fn rec(cur: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<(Vec<usize>, i32)>) {
        let n = used.len();
        if cur.len() == n {
            let mut inv = 0;
            for a in 0..n {
                for b in a + 1..n {
                    if cur[a] > cur[b] {
                        inv += 1;
                    }
                }
            }
            out.push((cur.clone(), if inv % 2 == 0 { 1 } else { -1 }));
            return;
        }
        for v in 0..n {
            if !used[v] {
                used[v] = true;
                cur.push(v);
                rec(cur, used, out);
                cur.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// det(x_i^{k−1}) by the Leibniz expansion.
pub fn vandermonde_det(n: usize) -> IntPoly {
    let mut p = IntPoly::zero(n);
    for (perm, sign) in permutations(n) {
        p.add_term(perm.iter().map(|&k| k as u32).collect(), BigInt::from(sign));
    }
    p
}

pub fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let mut b = BigInt::one();
    for i in 0..k {
        b = b * (n - i) / (i + 1);
    }
    b
}

pub fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * k)
}

/// q_k(x) = Σ_{j=0}^{k} (−1)^j C(n, k−j) x^j, univariate.
pub fn q_poly(k: usize, n: usize) -> Result<IntPoly> {
    if k > n {
        return Err(Error::IndexOutOfRange { index: k, max: n });
    }
    let mut p = IntPoly::zero(1);
    for j in 0..=k {
        let c = binomial(n, k - j);
        p.add_term(vec![j as u32], if j % 2 == 0 { c } else { -c });
    }
    Ok(p)
}

#[derive(Clone, Debug, Serialize)]
pub struct DnWitness {
    pub n: usize,
    pub passed: bool,
    /// n! as a decimal string.
    pub expected_coefficient: String,
    pub reduced: String,
    pub vandermonde_terms: usize,
    pub routes_agree: bool,
}

/// Checks that dₙ ≡ n!·∏ x_{k+1}^k modulo Jₙ.
pub fn verify_dn(n: usize) -> Result<DnWitness> {
    if !(2..=DN_CAP).contains(&n) {
        return Err(Error::TooLarge(format!("verify_dn supports 2 <= n <= {DN_CAP}, got {n}")));
    }
    let v = vandermonde(n);
    let routes_agree = v == vandermonde_det(n);
    let red = reduce_mod_jn(&v, n);
    let expected = CoinvariantElement::top(n, factorial(n));
    Ok(DnWitness {
        n,
        passed: routes_agree && red == expected,
        expected_coefficient: factorial(n).to_string(),
        reduced: red.to_string(),
        vandermonde_terms: v.n_terms(),
        routes_agree,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct NunWitness {
    pub n: usize,
    pub passed: bool,
    pub reduced_difference: String,
}

/// Checks ∏_{j<n}(xₙ − x_j) ≡ n·xₙ^{n−1} modulo Jₙ.
pub fn verify_nun(n: usize) -> Result<NunWitness> {
    if !(2..=DN_CAP).contains(&n) {
        return Err(Error::TooLarge(format!("verify_nun supports 2 <= n <= {DN_CAP}, got {n}")));
    }
    let xn = IntPoly::var(n, n - 1);
    let mut prod = IntPoly::one(n);
    for j in 0..n - 1 {
        prod = prod.mul(&xn.sub(&IntPoly::var(n, j)));
    }
    let diff = prod.sub(&xn.pow(n as u32 - 1).scale(&BigInt::from(n)));
    let red = reduce_mod_jn(&diff, n);
    Ok(NunWitness { n, passed: red.is_zero(), reduced_difference: red.to_string() })
}

/// Element of Λ(α₁..αₙ) ⊗ ℤ[u₁..uₙ]: keys are bit masks of α's in increasing order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolicUnitaryClass {
    pub n: usize,
    pub terms: BTreeMap<u32, IntPoly>,
}

impl SymbolicUnitaryClass {
    pub fn zero(n: usize) -> Self {
        SymbolicUnitaryClass { n, terms: BTreeMap::new() }
    }

    pub fn one(n: usize) -> Self {
        let mut t = BTreeMap::new();
        t.insert(0, IntPoly::one(n));
        SymbolicUnitaryClass { n, terms: t }
    }

    /// Σ_i α_i·c_i.
    pub fn degree_one(coeffs: &[IntPoly]) -> Self {
        let n = coeffs.len();
        let mut s = Self::zero(n);
        for (i, c) in coeffs.iter().enumerate() {
            if !c.is_zero() {
                s.terms.insert(1 << i, c.clone());
            }
        }
        s
    }

    /// Exterior product with the sign of merging the two ordered index sets.
    pub fn wedge(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.n);
        for (&ma, ca) in &self.terms {
            for (&mb, cb) in &other.terms {
                if ma & mb != 0 {
                    continue;
                }
                let mut swaps = 0;
                for i in 0..self.n {
                    if mb >> i & 1 == 1 {
                        swaps += (ma >> (i + 1)).count_ones();
                    }
                }
                let prod = ca.mul(cb);
                let prod = if swaps % 2 == 1 { prod.neg() } else { prod };
                let e = out.terms.entry(ma | mb).or_insert_with(|| IntPoly::zero(self.n));
                *e = e.add(&prod);
                if e.is_zero() {
                    out.terms.remove(&(ma | mb));
                }
            }
        }
        out
    }

    pub fn top_coefficient(&self) -> IntPoly {
        self.terms.get(&((1u32 << self.n) - 1)).cloned().unwrap_or_else(|| IntPoly::zero(self.n))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PiStarB {
    pub n: usize,
    pub passed: bool,
    /// (−1)^{n(n−1)/2}·n!.
    pub expected_coefficient: String,
    pub coefficient: String,
    pub reduced: CoinvariantElement,
}

/// π*β_k = Σ_i α_i·l_i·q_{k−1}(l_i) with l_i = 1 + u_i.
pub fn pi_star_beta(k: usize, n: usize) -> Result<SymbolicUnitaryClass> {
    let q = q_poly(k - 1, n)?;
    let coeffs: Vec<IntPoly> = (0..n)
        .map(|i| {
            let l = IntPoly::one(n).add(&IntPoly::var(n, i));
            l.mul(&q.substitute(std::slice::from_ref(&l)))
        })
        .collect();
    Ok(SymbolicUnitaryClass::degree_one(&coeffs))
}

/// ∏_{k=1}^n π*β_k and the coinvariant coordinates of its α₁…αₙ coefficient.
pub fn pi_star_b(n: usize) -> Result<(SymbolicUnitaryClass, PiStarB)> {
    if n == 0 || n > PI_STAR_B_CAP {
        return Err(Error::TooLarge(format!("pi_star_b supports 1 <= n <= {PI_STAR_B_CAP}, got {n}")));
    }
    let mut b = SymbolicUnitaryClass::one(n);
    for k in 1..=n {
        b = b.wedge(&pi_star_beta(k, n)?);
    }
    let reduced = reduce_mod_jn(&b.top_coefficient(), n);
    let sign = if (n * (n - 1) / 2).is_multiple_of(2) { 1 } else { -1 };
    let expected: BigInt = factorial(n) * sign;
    let top = CoinvariantElement::top(n, expected.clone());
    let witness = PiStarB {
        n,
        passed: reduced == top && !reduced.is_zero(),
        expected_coefficient: expected.to_string(),
        coefficient: reduced.coefficient(&(1..n as u32).collect::<Vec<_>>()).to_string(),
        reduced,
    };
    Ok((b, witness))
}

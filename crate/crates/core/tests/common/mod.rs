#![allow(dead_code)]

use std::f64::consts::PI;

use indexlab_core::linalg::{c, orthonormal_frame, singular_values, CMat, C64};
use indexlab_core::symbol::{dirac_boundary_sample, BoundarySymbolSample, SymbolConvention};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_c64(rng: &mut ChaCha8Rng) -> C64 {
    c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n).map(|_| random_c64(rng)).collect()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| random_c64(rng))
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    random_matrix(rng, n, n).hermitian_part()
}

pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    loop {
        let cols = random_matrix(rng, n, n).columns();
        if let Ok(q) = orthonormal_frame(&cols, 1e-6) {
            if q.len() == n {
                return CMat::from_columns(n, &q);
            }
        }
    }
}

/// Random matrix with condition number below `cond`.
pub fn random_invertible(rng: &mut ChaCha8Rng, n: usize, cond: f64) -> CMat {
    loop {
        let m = random_matrix(rng, n, n);
        let sv = singular_values(&m).unwrap();
        if sv[n - 1] * cond > sv[0] {
            return m;
        }
    }
}

/// Random Hermitian matrix whose eigenvalues have modulus at least `floor`.
pub fn random_invertible_hermitian(rng: &mut ChaCha8Rng, n: usize, floor: f64) -> CMat {
    let u = random_unitary(rng, n);
    let d: Vec<f64> = (0..n)
        .map(|_| {
            let x = rng.random_range(floor..2.0);
            if rng.random_bool(0.5) { x } else { -x }
        })
        .collect();
    CMat::diag_real(&d).conjugate_by(&u.adjoint())
}

/// Odd Dirac boundary symbol transported by a random congruence, so that E⁺ and E⁻ are oblique.
pub fn random_sample(rng: &mut ChaCha8Rng, r: usize) -> BoundarySymbolSample {
    let base = dirac_boundary_sample(rng.random_range(0..2), r, SymbolConvention::MinusI);
    let g = &CMat::identity(2 * r) + &random_matrix(rng, 2 * r, 2 * r).scale_real(0.3);
    base.conjugate_by(&g)
}

/// d(θ, φ) = (sin kθ, sin k_s φ, m + cos kθ + cos k_s φ) and its partial derivatives.
fn model(k_theta: f64, k_s: f64, mass: f64, theta: f64, phi: f64) -> ([f64; 3], [f64; 3], [f64; 3]) {
    let (a, b) = (k_theta * theta, k_s * phi);
    (
        [a.sin(), b.sin(), mass + a.cos() + b.cos()],
        [k_theta * a.cos(), 0.0, -k_theta * a.sin()],
        [0.0, k_s * b.cos(), -k_s * b.sin()],
    )
}

/// Chern number of the lower band of d̂·σ from the Berry curvature −d·(∂θd × ∂φd)/(2|d|³),
/// integrated by the midpoint rule on an n × n grid.
pub fn berry_chern(k_theta: i32, k_s: i32, mass: f64, n: usize) -> f64 {
    let h = 2.0 * PI / n as f64;
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let (theta, phi) = ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
            let (d, dt, dp) = model(k_theta as f64, k_s as f64, mass, theta, phi);
            let cross = [dt[1] * dp[2] - dt[2] * dp[1], dt[2] * dp[0] - dt[0] * dp[2], dt[0] * dp[1] - dt[1] * dp[0]];
            let norm = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            let triple = d[0] * cross[0] + d[1] * cross[1] + d[2] * cross[2];
            total += -0.5 * triple / norm.powi(3) * h * h;
        }
    }
    total / (2.0 * PI)
}

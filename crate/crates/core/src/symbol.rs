//! Boundary principal-symbol data and the E⁺ ⊕ E⁻ splitting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    self, c, column_space, dot, hermitian_eigenvalues, inverse, CMat, C64, I, ZERO,
};

pub const STRUCTURAL_TOL: f64 = 1e-10;
pub const GEOMETRIC_TOL: f64 = 1e-8;

/// How a partial derivative ∂_v is turned into a symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymbolConvention {
    /// ∂_v ↦ −i ξ(v). This is the convention under which the Green formula
    /// ⟨Au, v⟩ − ⟨u, Av⟩ = ∫ ⟨iσ(n)u, v⟩ holds with the outward conormal.
    MinusI,
    /// ∂_v ↦ +i ξ(v); flips every symbol. Kept only as a negative control.
    PlusI,
}

impl SymbolConvention {
    pub fn sign(self) -> f64 {
        match self {
            SymbolConvention::MinusI => 1.0,
            SymbolConvention::PlusI => -1.0,
        }
    }
}

/// (σ(n), σ(τ)) at a boundary point, with (n, τ) positively oriented.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundarySymbolSample {
    pub sigma_n: CMat,
    pub sigma_tau: CMat,
}

impl BoundarySymbolSample {
    pub fn new(sigma_n: CMat, sigma_tau: CMat) -> Result<Self> {
        let s = BoundarySymbolSample { sigma_n, sigma_tau };
        s.validate()?;
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.sigma_n.rows()
    }

    pub fn half_dim(&self) -> usize {
        self.dim() / 2
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.sigma_n.rows();
        for m in [&self.sigma_n, &self.sigma_tau] {
            if !m.is_square() || m.rows() != n {
                return Err(Error::DimensionMismatch { expected: n, found: m.cols() });
            }
            if !m.is_finite() {
                return Err(Error::InvalidInput("non-finite symbol entry".into()));
            }
            let d = m.hermitian_defect();
            if d > STRUCTURAL_TOL {
                return Err(Error::NotSelfAdjoint { defect: d });
            }
        }
        if !n.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!("symbol size {n} is odd")));
        }
        Ok(())
    }

    /// b = σ(n)⁻¹ σ(τ).
    pub fn b(&self) -> Result<CMat> {
        let inv = inverse(&self.sigma_n).map_err(|_| Error::NotElliptic("sigma_n is singular".into()))?;
        Ok(&inv * &self.sigma_tau)
    }

    /// Smallest |eigenvalue| of t·σ(n) + σ(τ) over a uniform grid of t ∈ [lo, hi].
    pub fn min_symbol_gap(&self, lo: f64, hi: f64, points: usize) -> Result<f64> {
        let mut worst = f64::INFINITY;
        for k in 0..points {
            let t = lo + (hi - lo) * k as f64 / (points - 1).max(1) as f64;
            let m = &self.sigma_n.scale_real(t) + &self.sigma_tau;
            let w = hermitian_eigenvalues(&m, STRUCTURAL_TOL)?;
            worst = worst.min(w.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min));
        }
        Ok(worst)
    }

    pub fn direct_sum(&self, other: &BoundarySymbolSample) -> BoundarySymbolSample {
        BoundarySymbolSample {
            sigma_n: CMat::block_diag(&[&self.sigma_n, &other.sigma_n]),
            sigma_tau: CMat::block_diag(&[&self.sigma_tau, &other.sigma_tau]),
        }
    }

    pub fn conjugate_by(&self, g: &CMat) -> BoundarySymbolSample {
        BoundarySymbolSample { sigma_n: self.sigma_n.conjugate_by(g), sigma_tau: self.sigma_tau.conjugate_by(g) }
    }
}

/// E⁺ ⊕ E⁻ with the (possibly oblique) projectors along each other.
#[derive(Clone, Debug)]
pub struct Splitting {
    pub p_plus: CMat,
    pub p_minus: CMat,
    pub frame_plus: Vec<Vec<C64>>,
    pub frame_minus: Vec<Vec<C64>>,
}

impl Splitting {
    pub fn dim(&self) -> usize {
        self.p_plus.rows()
    }

    pub fn rank(&self) -> usize {
        self.frame_minus.len()
    }

    pub fn frame_plus_mat(&self) -> CMat {
        CMat::from_columns(self.dim(), &self.frame_plus)
    }

    pub fn frame_minus_mat(&self) -> CMat {
        CMat::from_columns(self.dim(), &self.frame_minus)
    }

    /// Coordinates of P⁻u in the E⁻ frame.
    pub fn minus_coords(&self, u: &[C64]) -> Vec<C64> {
        let pu = self.p_minus.mul_vec(u);
        self.frame_minus.iter().map(|q| dot(&pu, q)).collect()
    }

    pub fn is_orthogonal(&self, tol: f64) -> bool {
        self.frame_plus.iter().all(|p| self.frame_minus.iter().all(|m| dot(p, m).norm() <= tol))
    }
}

/// Splits the fibre into the b-invariant subspaces with Im λ > 0 (E⁺) and Im λ < 0 (E⁻).
pub fn split(sample: &BoundarySymbolSample) -> Result<Splitting> {
    sample.validate()?;
    let b = sample.b()?;
    let p_plus = linalg::upper_half_projector(&b, linalg::DEFAULT_SIGN_TOL, linalg::DEFAULT_SIGN_MAX_ITER)
        .map_err(|e| match e {
            Error::SingularIterate { .. } => Error::NotElliptic("b has an eigenvalue on the real axis".into()),
            other => other,
        })?;
    let n = sample.dim();
    let p_minus = &CMat::identity(n) - &p_plus;
    let frame_plus = column_space(&p_plus, 1e-8);
    let frame_minus = column_space(&p_minus, 1e-8);
    if frame_plus.len() != n / 2 || frame_minus.len() != n / 2 {
        return Err(Error::NotElliptic(format!(
            "rank(P+) = {}, rank(P-) = {}, expected {}",
            frame_plus.len(),
            frame_minus.len(),
            n / 2
        )));
    }
    Ok(Splitting { p_plus, p_minus, frame_plus, frame_minus })
}

/// ω(u, v) = ⟨iσ(n)u, v⟩.
pub fn symplectic_form(sigma_n: &CMat, u: &[C64], v: &[C64]) -> Result<C64> {
    let n = sigma_n.rows();
    for w in [u, v] {
        if w.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: w.len() });
        }
    }
    let su: Vec<C64> = sigma_n.mul_vec(u).into_iter().map(|z| z * I).collect();
    Ok(dot(&su, v))
}

/// Largest |ω(u, v)| over pairs from the frame.
pub fn isotropy_defect(sigma_n: &CMat, frame: &[Vec<C64>]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for u in frame {
        for v in frame {
            worst = worst.max(symplectic_form(sigma_n, u, v)?.norm());
        }
    }
    Ok(worst)
}

/// True iff the frame spans an isotropic subspace of half the fibre dimension.
pub fn check_lagrangian(sigma_n: &CMat, frame: &[Vec<C64>], tol: f64) -> Result<bool> {
    let n = sigma_n.rows();
    if frame.len() != n / 2 {
        for v in frame {
            if v.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: v.len() });
            }
        }
        return Ok(false);
    }
    Ok(isotropy_defect(sigma_n, frame)? <= tol)
}

/// The two-dimensional Dirac sample σ(n) = σ₁, σ(τ) = σ₂.
pub fn dirac_sample_2() -> BoundarySymbolSample {
    let [s1, s2, _] = linalg::pauli();
    BoundarySymbolSample { sigma_n: s1, sigma_tau: s2 }
}

/// Boundary symbol of the odd Dirac operator A = [[0, Dᵗ], [D, 0]], D = −i∂_t + ∂_θ, acting on
/// (f, g) ∈ ℂʳ ⊕ ℂʳ, at the boundary circle t = 0 (`component` 0) or t = 1 (`component` 1).
///
/// Under ∂ ↦ −iξ the symbol is σ(ξ) = −(σ₁⊗I)ξ_t − (σ₂⊗I)ξ_θ. The outward conormal is −dt at
/// t = 0 and +dt at t = 1; the positive tangent covector is −dθ and +dθ respectively.
pub fn dirac_boundary_sample(component: usize, r: usize, conv: SymbolConvention) -> BoundarySymbolSample {
    let [s1, s2, _] = linalg::pauli();
    let id = CMat::identity(r);
    let side = if component == 0 { -1.0 } else { 1.0 };
    let k = -side * conv.sign();
    BoundarySymbolSample { sigma_n: s1.kron(&id).scale_real(k), sigma_tau: s2.kron(&id).scale_real(k) }
}

/// Distance of the spectrum of b = σ(n)⁻¹σ(τ) from the real axis; zero means not elliptic.
pub fn real_axis_margin(sample: &BoundarySymbolSample) -> Result<f64> {
    let (w, _) = linalg::general_eig(&sample.b()?)?;
    Ok(w.iter().map(|z| z.im.abs()).fold(f64::INFINITY, f64::min))
}

pub fn unit_vector(n: usize, k: usize) -> Vec<C64> {
    let mut v = vec![ZERO; n];
    v[k] = c(1.0, 0.0);
    v
}

//! Dense complex linear algebra: Hermitian eigensolver, matrix sign function,
//! spectral projectors and orthonormal frames.

pub mod lapack;
mod mat;

pub use lapack::{inertia, Lu};
pub use mat::{c, dot, norm, pauli, CMat, C64, I, ONE, ZERO};

use crate::error::{Error, Result};

pub const DEFAULT_SIGN_TOL: f64 = 1e-12;
pub const DEFAULT_SIGN_MAX_ITER: usize = 100;

#[derive(Clone, Debug)]
pub struct HermitianEigenResult {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMat,
}

impl HermitianEigenResult {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.eigenvectors.column(k)
    }

    /// max_k ‖H v_k − λ_k v_k‖.
    pub fn max_residual(&self, h: &CMat) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            let v = self.eigenvectors.column_slice(k);
            let hv = h.mul_vec(v);
            let r = hv.iter().zip(v).map(|(a, b)| (a - b * lam).norm_sqr()).sum::<f64>().sqrt();
            worst = worst.max(r);
        }
        worst
    }
}

fn check_hermitian(h: &CMat, tol: f64) -> Result<()> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch { expected: h.rows(), found: h.cols() });
    }
    let d = h.hermitian_defect();
    if d > tol {
        return Err(Error::NotHermitian { defect: d });
    }
    Ok(())
}

/// Full eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eig(h: &CMat, tol: f64) -> Result<HermitianEigenResult> {
    check_hermitian(h, tol)?;
    let (w, v) = lapack::zheevr(&h.hermitian_part(), lapack::EigRange::All, true)?;
    Ok(HermitianEigenResult { eigenvalues: w, eigenvectors: v.expect("vectors requested") })
}

/// Eigenpairs with eigenvalue in the half-open interval (lo, hi].
pub fn hermitian_eig_window(h: &CMat, lo: f64, hi: f64, tol: f64) -> Result<HermitianEigenResult> {
    check_hermitian(h, tol)?;
    let (w, v) = lapack::zheevr(&h.hermitian_part(), lapack::EigRange::Values(lo, hi), true)?;
    Ok(HermitianEigenResult { eigenvalues: w, eigenvectors: v.expect("vectors requested") })
}

/// All eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(h: &CMat, tol: f64) -> Result<Vec<f64>> {
    check_hermitian(h, tol)?;
    Ok(lapack::zheevr(&h.hermitian_part(), lapack::EigRange::All, false)?.0)
}

/// Power-iteration estimate of the spectral norm ‖A‖₂.
pub fn spectral_norm_estimate(a: &CMat, iters: usize) -> f64 {
    let n = a.cols();
    if n == 0 {
        return 0.0;
    }
    let ah = a.adjoint();
    let mut v: Vec<C64> = (0..n).map(|k| c(1.0 + 0.37 * k as f64, 0.11 * (k % 7) as f64)).collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|z| *z /= nv);
    let mut est = 0.0;
    for _ in 0..iters {
        let w = ah.mul_vec(&a.mul_vec(&v));
        let nw = norm(&w);
        if nw == 0.0 {
            return 0.0;
        }
        est = nw.sqrt();
        v = w.into_iter().map(|z| z / nw).collect();
    }
    est
}

pub fn inverse(a: &CMat) -> Result<CMat> {
    let (lu, ok) = Lu::new(a)?;
    if !ok {
        return Err(Error::SingularIterate { rcond: 0.0 });
    }
    lu.inverse()
}

/// Matrix sign function by the determinant-scaled Newton iteration S ← (μS + (μS)⁻¹)/2.
pub fn matrix_sign(a: &CMat, tol: f64, max_iter: usize) -> Result<CMat> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch { expected: a.rows(), found: a.cols() });
    }
    let n = a.rows();
    if n == 0 {
        return Ok(a.clone());
    }
    let mut s = a.clone();
    let mut scaling = true;
    for _ in 0..max_iter {
        let (lu, ok) = Lu::new(&s)?;
        let rc = if ok { lu.rcond(lapack::norm1(&s)) } else { 0.0 };
        if rc < 1e-14 {
            return Err(Error::SingularIterate { rcond: rc });
        }
        let inv = lu.inverse()?;
        let mu = if scaling { (-lu.log_abs_det().0 / n as f64).exp() } else { 1.0 };
        let next = (&s.scale_real(mu) + &inv.scale_real(1.0 / mu)).scale_real(0.5);
        let change = (&next - &s).frobenius() / next.frobenius();
        s = next;
        if change < 1e-2 {
            scaling = false;
        }
        if change <= tol {
            return Ok(s);
        }
    }
    Err(Error::NoConvergence { what: "Newton sign iteration" })
}

/// Spectral projector onto the generalized eigenspaces of B with positive imaginary part.
pub fn upper_half_projector(b: &CMat, tol: f64, max_iter: usize) -> Result<CMat> {
    let s = matrix_sign(&b.scale(-I), tol, max_iter)?;
    Ok((&CMat::identity(b.rows()) + &s).scale_real(0.5))
}

/// Modified Gram–Schmidt with one full re-orthogonalization pass.
pub fn orthonormal_frame(vectors: &[Vec<C64>], tol: f64) -> Result<Vec<Vec<C64>>> {
    let mut out: Vec<Vec<C64>> = Vec::with_capacity(vectors.len());
    let dim = vectors.first().map_or(0, |v| v.len());
    for (k, v) in vectors.iter().enumerate() {
        if v.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
        }
        let n0 = norm(v);
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &out {
                let p = dot(&w, q);
                w.iter_mut().zip(q).for_each(|(a, b)| *a -= b * p);
            }
        }
        let nw = norm(&w);
        if n0 == 0.0 || nw <= tol * n0 {
            return Err(Error::RankDeficient { index: k });
        }
        w.iter_mut().for_each(|z| *z /= nw);
        out.push(w);
    }
    Ok(out)
}

/// Orthogonal projector Q Q* onto the span of an orthonormal frame.
pub fn frame_projector(dim: usize, frame: &[Vec<C64>]) -> CMat {
    let q = CMat::from_columns(dim, frame);
    &q * &q.adjoint()
}

/// Orthonormal basis for the column space of a matrix, dropping directions below `tol`.
pub fn column_space(a: &CMat, tol: f64) -> Vec<Vec<C64>> {
    let scale = a.frobenius().max(f64::MIN_POSITIVE);
    let mut out: Vec<Vec<C64>> = Vec::new();
    for j in 0..a.cols() {
        let mut w = a.column(j);
        for _ in 0..2 {
            for q in &out {
                let p = dot(&w, q);
                w.iter_mut().zip(q).for_each(|(x, y)| *x -= y * p);
            }
        }
        let nw = norm(&w);
        if nw > tol * scale {
            w.iter_mut().for_each(|z| *z /= nw);
            out.push(w);
        }
    }
    out
}

/// Singular values of A, descending.
pub fn singular_values(a: &CMat) -> Result<Vec<f64>> {
    lapack::zgesvd(a)
}

/// Eigenvalues and right eigenvectors of a general square matrix (test oracle).
pub fn general_eig(b: &CMat) -> Result<(Vec<C64>, CMat)> {
    lapack::zgeev(b)
}

/// Reference projector onto eigenvectors with Im λ > 0 built from a full eigendecomposition.
pub fn upper_half_projector_oracle(b: &CMat) -> Result<CMat> {
    let (w, v) = general_eig(b)?;
    let d: Vec<C64> = w.iter().map(|z| if z.im > 0.0 { ONE } else { ZERO }).collect();
    Ok(&(&v * &CMat::diag(&d)) * &inverse(&v)?)
}

//! Local boundary conditions: the L ⟷ T correspondence, ellipticity and the subspace F.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    self, frame_projector, hermitian_eig, orthonormal_frame, singular_values, CMat, C64, I,
};
use crate::symbol::{BoundarySymbolSample, Splitting, STRUCTURAL_TOL};

pub const DEFAULT_ANGLE_THRESHOLD: f64 = 1e-6;
pub const INVERTIBILITY_TOL: f64 = 1e-10;

/// Orthonormal frame of a subspace L of the boundary fibre.
#[derive(Clone, Debug)]
pub struct BoundaryConditionL {
    pub frame: Vec<Vec<C64>>,
}

impl BoundaryConditionL {
    pub fn from_vectors(vectors: &[Vec<C64>]) -> Result<Self> {
        Ok(BoundaryConditionL { frame: orthonormal_frame(vectors, 1e-12)? })
    }

    pub fn dim(&self) -> usize {
        self.frame.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.frame.first().map_or(0, |v| v.len())
    }

    pub fn projector(&self, n: usize) -> CMat {
        frame_projector(n, &self.frame)
    }

    pub fn matrix(&self, n: usize) -> CMat {
        CMat::from_columns(n, &self.frame)
    }

    /// Projector distance ‖Π_L − Π_L'‖_F.
    pub fn distance(&self, other: &BoundaryConditionL, n: usize) -> f64 {
        self.projector(n).dist(&other.projector(n))
    }
}

/// Automorphism of E⁻ written in the coordinates of the E⁻ frame.
#[derive(Clone, Debug, PartialEq)]
pub struct AutomorphismT {
    pub matrix: CMat,
}

impl AutomorphismT {
    pub fn new(matrix: CMat) -> Self {
        AutomorphismT { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn smallest_singular_value(&self) -> Result<f64> {
        Ok(singular_values(&self.matrix)?.last().copied().unwrap_or(f64::INFINITY))
    }

    pub fn is_self_adjoint(&self, tol: f64) -> bool {
        self.matrix.hermitian_defect() <= tol
    }

    fn check_invertible(&self) -> Result<()> {
        let sv = singular_values(&self.matrix)?;
        let smax = sv.first().copied().unwrap_or(0.0);
        let smin = sv.last().copied().unwrap_or(0.0);
        if smin <= INVERTIBILITY_TOL * smax.max(1.0) {
            return Err(Error::NotInvertible { smin });
        }
        Ok(())
    }
}

fn sigma_n_inv(sample: &BoundarySymbolSample) -> Result<CMat> {
    linalg::inverse(&sample.sigma_n).map_err(|_| Error::NotElliptic("sigma_n is singular".into()))
}

/// P_T = P⁺(1 + iσ(n)⁻¹ T P⁻), with T acting on E⁻ through its frame.
pub fn p_t(sample: &BoundarySymbolSample, split: &Splitting, t: &AutomorphismT) -> Result<CMat> {
    let n = sample.dim();
    let fm = split.frame_minus_mat();
    let t_full = &(&fm * &t.matrix) * &fm.adjoint();
    let inner = &(&sigma_n_inv(sample)?.scale(I) * &t_full) * &split.p_minus;
    Ok(&split.p_plus * &(&CMat::identity(n) + &inner))
}

/// L = ker P_T, returned as an orthonormal frame.
pub fn t_to_l(sample: &BoundarySymbolSample, split: &Splitting, t: &AutomorphismT) -> Result<BoundaryConditionL> {
    let m = split.rank();
    if t.dim() != m || !t.matrix.is_square() {
        return Err(Error::DimensionMismatch { expected: m, found: t.dim() });
    }
    t.check_invertible()?;
    let fm = split.frame_minus_mat();
    // u = q_j − P⁺ iσ(n)⁻¹ F⁻ T e_j spans ker P_T.
    let shift = &(&(&split.p_plus * &sigma_n_inv(sample)?.scale(I)) * &fm) * &t.matrix;
    let vectors: Vec<Vec<C64>> = (0..m)
        .map(|j| split.frame_minus[j].iter().zip(shift.column_slice(j)).map(|(q, s)| q - s).collect())
        .collect();
    BoundaryConditionL::from_vectors(&vectors)
}

/// Inverse of `t_to_l`: reads T off the graph of L over E⁻.
pub fn l_to_t(sample: &BoundarySymbolSample, split: &Splitting, l: &BoundaryConditionL) -> Result<AutomorphismT> {
    let diag = check_elliptic_bc(split, l, DEFAULT_ANGLE_THRESHOLD)?;
    if !diag.elliptic {
        return Err(Error::NotElliptic(format!("boundary condition not transversal: {diag:?}")));
    }
    let n = split.dim();
    let lm = l.matrix(n);
    let fp = split.frame_plus_mat();
    let fm = split.frame_minus_mat();
    let a = &(&fm.adjoint() * &split.p_minus) * &lm;
    let b = &(&fp.adjoint() * &split.p_plus) * &lm;
    let y = &(&(&fp.adjoint() * &split.p_plus) * &sigma_n_inv(sample)?.scale(I)) * &fm;
    let t = &(&linalg::inverse(&y)? * &b) * &linalg::inverse(&a)?;
    Ok(AutomorphismT { matrix: t.scale_real(-1.0) })
}

#[derive(Clone, Debug, Serialize)]
pub struct EllipticDiagnostics {
    pub elliptic: bool,
    /// Smallest principal angles for L ∩ E⁺, L ∩ E⁻, L + E⁺, L + E⁻ (radians).
    pub angle_l_cap_plus: f64,
    pub angle_l_cap_minus: f64,
    pub angle_l_sum_plus: f64,
    pub angle_l_sum_minus: f64,
}

/// Smallest principal angle between span(qa) and span(qb).
fn min_angle(n: usize, qa: &[Vec<C64>], qb: &[Vec<C64>]) -> Result<f64> {
    if qa.is_empty() || qb.is_empty() {
        return Ok(std::f64::consts::FRAC_PI_2);
    }
    let resid = &(&CMat::identity(n) - &frame_projector(n, qb)) * &CMat::from_columns(n, qa);
    let s = singular_values(&resid)?;
    Ok(s.last().copied().unwrap_or(1.0).min(1.0).asin())
}

fn complement(n: usize, frame: &[Vec<C64>]) -> Vec<Vec<C64>> {
    linalg::column_space(&(&CMat::identity(n) - &frame_projector(n, frame)), 1e-8)
}

/// The transversality conditions L ∩ E± = 0 and L + E± = E, with diagnostic angles.
pub fn check_elliptic_bc(split: &Splitting, l: &BoundaryConditionL, threshold: f64) -> Result<EllipticDiagnostics> {
    let n = split.dim();
    for v in &l.frame {
        if v.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: v.len() });
        }
    }
    let lc = complement(n, &l.frame);
    let pc = complement(n, &split.frame_plus);
    let mc = complement(n, &split.frame_minus);
    let a1 = min_angle(n, &l.frame, &split.frame_plus)?;
    let a2 = min_angle(n, &l.frame, &split.frame_minus)?;
    let a3 = min_angle(n, &lc, &pc)?;
    let a4 = min_angle(n, &lc, &mc)?;
    let dims_ok = l.dim() == split.rank();
    Ok(EllipticDiagnostics {
        elliptic: dims_ok && [a1, a2, a3, a4].iter().all(|&a| a > threshold),
        angle_l_cap_plus: a1,
        angle_l_cap_minus: a2,
        angle_l_sum_plus: a3,
        angle_l_sum_minus: a4,
    })
}

fn check_self_adjoint(t: &AutomorphismT) -> Result<()> {
    let d = t.matrix.hermitian_defect();
    if d > STRUCTURAL_TOL {
        return Err(Error::NotSelfAdjoint { defect: d });
    }
    Ok(())
}

/// Orthonormal frame (E⁻ coordinates) of the negative spectral subspace of a self-adjoint T.
pub fn f_subspace(t: &AutomorphismT) -> Result<Vec<Vec<C64>>> {
    check_self_adjoint(t)?;
    let e = hermitian_eig(&t.matrix, STRUCTURAL_TOL)?;
    let scale = e.eigenvalues.iter().map(|x| x.abs()).fold(1.0, f64::max);
    if let Some(z) = e.eigenvalues.iter().find(|x| x.abs() <= INVERTIBILITY_TOL * scale) {
        return Err(Error::NotInvertible { smin: z.abs() });
    }
    Ok((0..e.len()).filter(|&k| e.eigenvalues[k] < 0.0).map(|k| e.vector(k)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Definiteness {
    PositiveDefinite,
    NegativeDefinite,
    Indefinite,
}

pub fn classify(t: &AutomorphismT) -> Result<Definiteness> {
    check_self_adjoint(t)?;
    let w = linalg::hermitian_eigenvalues(&t.matrix, STRUCTURAL_TOL)?;
    let scale = w.iter().map(|x| x.abs()).fold(1.0, f64::max);
    if let Some(z) = w.iter().find(|x| x.abs() <= INVERTIBILITY_TOL * scale) {
        return Err(Error::ZeroEigenvalue { value: z.abs() });
    }
    Ok(if w.iter().all(|&x| x > 0.0) {
        Definiteness::PositiveDefinite
    } else if w.iter().all(|&x| x < 0.0) {
        Definiteness::NegativeDefinite
    } else {
        Definiteness::Indefinite
    })
}

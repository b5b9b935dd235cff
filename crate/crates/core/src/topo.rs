//! Topological side: the subbundle F over each boundary torus (θ, s), its lattice Chern number, and
//! the sum over boundary components.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::boundary::{f_subspace, AutomorphismT};
use crate::error::{Error, Result};
use crate::linalg::{self, c, dot, pauli, CMat, C64};
use crate::symbol::{dirac_boundary_sample, split, BoundarySymbolSample, SymbolConvention, STRUCTURAL_TOL};

/// Orientation sign of each boundary circle relative to the lattice order (θ, s).
///
/// Component 0 (t = 0) is traversed in the −θ direction by the induced boundary orientation and
/// component 1 (t = 1) in the +θ direction, so the two signs are opposite. The overall sign is
/// pinned by matching the spectral flow of the winding family on component 1.
pub const COMPONENT_ORIENTATION: [i32; 2] = [1, -1];

/// Smallest admissible |det| of a link overlap.
pub const LINK_FLOOR: f64 = 0.1;

/// Tail energy fraction used to estimate the angular band limit of sampled fields.
pub const BAND_TAIL: f64 = 1e-3;

fn loop_angle(s: f64) -> f64 {
    2.0 * PI * s.rem_euclid(1.0)
}

/// d̂·σ for d = (d1, d2, d3).
pub fn d_hat_sigma(d: [f64; 3]) -> CMat {
    let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    let [s1, s2, s3] = pauli();
    let m = &(&s1.scale_real(d[0]) + &s2.scale_real(d[1])) + &s3.scale_real(d[2]);
    m.scale_real(1.0 / n)
}

/// d(θ, φ) = (sin kθ·θ, sin k_s·φ, mass + cos kθ·θ + cos k_s·φ).
pub fn winding_vector(k_theta: i32, k_s: i32, mass: f64, theta: f64, phi: f64) -> [f64; 3] {
    let (a, b) = (k_theta as f64 * theta, k_s as f64 * phi);
    [a.sin(), b.sin(), mass + a.cos() + b.cos()]
}

/// Matrices sampled on the half-open lattice θ_i = 2πi/n_theta, s_j = j/n_s, stored at `i + n_theta·j`.
#[derive(Clone, Debug)]
pub struct LatticeSamples {
    pub n_theta: usize,
    pub n_s: usize,
    pub values: Vec<CMat>,
}

impl LatticeSamples {
    pub fn new(n_theta: usize, n_s: usize, values: Vec<CMat>) -> Result<Self> {
        if n_theta == 0 || n_s == 0 {
            return Err(Error::InvalidInput("empty lattice".into()));
        }
        if values.len() != n_theta * n_s {
            return Err(Error::DimensionMismatch { expected: n_theta * n_s, found: values.len() });
        }
        let d = values[0].rows();
        if let Some(v) = values.iter().find(|v| v.rows() != d || !v.is_square()) {
            return Err(Error::DimensionMismatch { expected: d, found: v.rows() });
        }
        Ok(LatticeSamples { n_theta, n_s, values })
    }

    pub fn at(&self, i: usize, j: usize) -> &CMat {
        &self.values[i % self.n_theta + self.n_theta * (j % self.n_s)]
    }

    pub fn dim(&self) -> usize {
        self.values[0].rows()
    }

    /// Periodic bilinear interpolation.
    pub fn interpolate(&self, theta: f64, s: f64) -> CMat {
        let x = theta.rem_euclid(2.0 * PI) / (2.0 * PI) * self.n_theta as f64;
        let y = s.rem_euclid(1.0) * self.n_s as f64;
        let (i0, j0) = (x.floor() as usize, y.floor() as usize);
        let (fx, fy) = (x - i0 as f64, y - j0 as f64);
        let mut out = self.at(i0, j0).scale_real((1.0 - fx) * (1.0 - fy));
        for (di, dj, w) in [(1, 0, fx * (1.0 - fy)), (0, 1, (1.0 - fx) * fy), (1, 1, fx * fy)] {
            if w != 0.0 {
                out = &out + &self.at(i0 + di, j0 + dj).scale_real(w);
            }
        }
        out
    }

    /// Smallest K such that the θ-Fourier energy beyond |k| = K is at most `BAND_TAIL` of the total.
    pub fn theta_band_limit(&self) -> usize {
        let n = self.n_theta;
        let mut energy = vec![0.0; n / 2 + 1];
        let d = self.dim();
        for j in 0..self.n_s {
            for a in 0..d {
                for b in 0..d {
                    for k in 0..n {
                        let mut acc = C64::new(0.0, 0.0);
                        for i in 0..n {
                            let ang = -2.0 * PI * (k * i) as f64 / n as f64;
                            acc += self.at(i, j)[(a, b)] * c(ang.cos(), ang.sin());
                        }
                        energy[k.min(n - k)] += acc.norm_sqr();
                    }
                }
            }
        }
        let total: f64 = energy.iter().sum();
        if total == 0.0 {
            return 0;
        }
        let mut tail = 0.0;
        for k in (0..energy.len()).rev() {
            tail += energy[k];
            if tail > BAND_TAIL * total {
                return k;
            }
        }
        0
    }
}

/// Sampled self-adjoint automorphism T(θ, s) of E⁻ over one boundary torus. s is the loop
/// parameter in [0, 1); every variant is 1-periodic in s.
#[derive(Clone)]
pub enum AutomorphismField {
    Constant(CMat),
    /// T = d̂·σ with d from `winding_vector`.
    Winding { k_theta: i32, k_s: i32, mass: f64 },
    /// s-independent T = d̂·σ with d = (cos kθ·θ, sin kθ·θ, mass).
    ThetaWinding { k_theta: i32, mass: f64 },
    /// Inline T data, interpolated bilinearly.
    Sampled(LatticeSamples),
    /// T = I − 2Π with Π the rank-`rank` projector nearest to the interpolated projector field.
    Prescribed { projectors: LatticeSamples, rank: usize },
    DirectSum(Vec<AutomorphismField>),
    /// s ↦ −s.
    Reversed(Box<AutomorphismField>),
    Custom { dim: usize, frequency: Option<usize>, f: Arc<dyn Fn(f64, f64) -> CMat + Send + Sync> },
}

impl std::fmt::Debug for AutomorphismField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AutomorphismField::Constant(m) => write!(f, "Constant({}x{})", m.rows(), m.cols()),
            AutomorphismField::Winding { k_theta, k_s, mass } => write!(f, "Winding({k_theta}, {k_s}, {mass})"),
            AutomorphismField::ThetaWinding { k_theta, mass } => write!(f, "ThetaWinding({k_theta}, {mass})"),
            AutomorphismField::Sampled(l) => write!(f, "Sampled({}x{})", l.n_theta, l.n_s),
            AutomorphismField::Prescribed { projectors, rank } => {
                write!(f, "Prescribed({}x{}, rank {rank})", projectors.n_theta, projectors.n_s)
            }
            AutomorphismField::DirectSum(v) => f.debug_list().entries(v).finish(),
            AutomorphismField::Reversed(b) => write!(f, "Reversed({b:?})"),
            AutomorphismField::Custom { dim, .. } => write!(f, "Custom(dim {dim})"),
        }
    }
}

impl AutomorphismField {
    pub fn dim(&self) -> usize {
        match self {
            AutomorphismField::Constant(m) => m.rows(),
            AutomorphismField::Winding { .. } | AutomorphismField::ThetaWinding { .. } => 2,
            AutomorphismField::Sampled(l) => l.dim(),
            AutomorphismField::Prescribed { projectors, .. } => projectors.dim(),
            AutomorphismField::DirectSum(v) => v.iter().map(|f| f.dim()).sum(),
            AutomorphismField::Reversed(b) => b.dim(),
            AutomorphismField::Custom { dim, .. } => *dim,
        }
    }

    pub fn eval(&self, theta: f64, s: f64) -> CMat {
        let s = s.rem_euclid(1.0);
        match self {
            AutomorphismField::Constant(m) => m.clone(),
            AutomorphismField::Winding { k_theta, k_s, mass } => {
                d_hat_sigma(winding_vector(*k_theta, *k_s, *mass, theta, loop_angle(s)))
            }
            AutomorphismField::ThetaWinding { k_theta, mass } => {
                let a = *k_theta as f64 * theta;
                d_hat_sigma([a.cos(), a.sin(), *mass])
            }
            AutomorphismField::Sampled(l) => l.interpolate(theta, s).hermitian_part(),
            AutomorphismField::Prescribed { projectors, rank } => {
                let m = projectors.dim();
                let p = projectors.interpolate(theta, s).hermitian_part();
                let mut pi = CMat::zeros(m, m);
                if *rank > 0 {
                    let e = linalg::hermitian_eig(&p, 1e-8).expect("interpolated projector is Hermitian");
                    let top: Vec<Vec<C64>> = (m - rank..m).map(|k| e.vector(k)).collect();
                    pi = linalg::frame_projector(m, &top);
                }
                &CMat::identity(m) - &pi.scale_real(2.0)
            }
            AutomorphismField::DirectSum(v) => {
                let blocks: Vec<CMat> = v.iter().map(|f| f.eval(theta, s)).collect();
                CMat::block_diag(&blocks.iter().collect::<Vec<_>>())
            }
            AutomorphismField::Reversed(b) => b.eval(theta, (1.0 - s).rem_euclid(1.0)),
            AutomorphismField::Custom { f, .. } => f(theta, s),
        }
    }

    /// Highest angular frequency carried by the field; None when unknown.
    pub fn theta_frequency(&self) -> Option<usize> {
        match self {
            AutomorphismField::Constant(_) => Some(0),
            AutomorphismField::Winding { k_theta, .. } | AutomorphismField::ThetaWinding { k_theta, .. } => {
                Some(k_theta.unsigned_abs() as usize)
            }
            AutomorphismField::Sampled(l) => Some(l.theta_band_limit()),
            AutomorphismField::Prescribed { projectors, .. } => Some(projectors.theta_band_limit()),
            AutomorphismField::DirectSum(v) => {
                v.iter().map(|f| f.theta_frequency()).try_fold(0, |acc, k| k.map(|k| acc.max(k)))
            }
            AutomorphismField::Reversed(b) => b.theta_frequency(),
            AutomorphismField::Custom { frequency, .. } => *frequency,
        }
    }

    pub fn is_s_independent(&self) -> bool {
        match self {
            AutomorphismField::Constant(_) | AutomorphismField::ThetaWinding { .. } => true,
            AutomorphismField::Winding { k_s, .. } => *k_s == 0,
            AutomorphismField::Sampled(l) => l.n_s == 1,
            AutomorphismField::Prescribed { projectors, .. } => projectors.n_s == 1,
            AutomorphismField::DirectSum(v) => v.iter().all(|f| f.is_s_independent()),
            AutomorphismField::Reversed(b) => b.is_s_independent(),
            AutomorphismField::Custom { .. } => false,
        }
    }
}

/// Boundary data on one boundary circle.
#[derive(Clone, Debug)]
pub struct ComponentData {
    pub symbol: BoundarySymbolSample,
    pub t: AutomorphismField,
    pub orientation: i32,
}

/// A loop of boundary problems for the odd Dirac operator, given by its boundary symbols and the
/// automorphism fields T on the two boundary circles t = 0 and t = 1.
#[derive(Clone, Debug)]
pub struct LoopFamilySpec {
    pub name: String,
    pub components: Vec<ComponentData>,
}

impl LoopFamilySpec {
    /// Odd Dirac family with fibre ℂʳ ⊕ ℂʳ, T0 on t = 0 and T1 on t = 1.
    pub fn dirac(name: &str, r: usize, t0: AutomorphismField, t1: AutomorphismField) -> Result<Self> {
        let spec = LoopFamilySpec {
            name: name.to_string(),
            components: [t0, t1]
                .into_iter()
                .enumerate()
                .map(|(c, t)| ComponentData {
                    symbol: dirac_boundary_sample(c, r, SymbolConvention::MinusI),
                    t,
                    orientation: COMPONENT_ORIENTATION[c],
                })
                .collect(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn winding(k_theta: i32, k_s: i32, mass: f64) -> Result<Self> {
        Self::dirac(
            "winding",
            2,
            AutomorphismField::Constant(CMat::identity(2)),
            AutomorphismField::Winding { k_theta, k_s, mass },
        )
    }

    pub fn dir_plus() -> Result<Self> {
        let id = AutomorphismField::Constant(CMat::identity(2));
        Self::dirac("dir-plus", 2, id.clone(), id)
    }

    pub fn dir_minus() -> Result<Self> {
        let m = AutomorphismField::Constant(CMat::identity(2).scale_real(-1.0));
        Self::dirac("dir-minus", 2, m.clone(), m)
    }

    pub fn locally_constant(k_theta: i32, mass: f64) -> Result<Self> {
        Self::dirac(
            "locally-constant",
            2,
            AutomorphismField::Constant(CMat::identity(2)),
            AutomorphismField::ThetaWinding { k_theta, mass },
        )
    }

    /// Fibre rank r of the Dirac operator (E = ℂʳ ⊕ ℂʳ), if every component uses the built-in symbol.
    pub fn dirac_rank(&self) -> Option<usize> {
        let r = self.components.first()?.symbol.half_dim();
        let ok = self.components.len() == 2
            && self.components.iter().enumerate().all(|(c, d)| {
                d.symbol == dirac_boundary_sample(c, r, SymbolConvention::MinusI)
            });
        ok.then_some(r)
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.len() != 2 {
            return Err(Error::InvalidInput(format!(
                "the cylinder has two boundary circles, got {} components",
                self.components.len()
            )));
        }
        for d in &self.components {
            d.symbol.validate()?;
            let m = d.symbol.half_dim();
            if d.t.dim() != m {
                return Err(Error::DimensionMismatch { expected: m, found: d.t.dim() });
            }
            if d.orientation.abs() != 1 {
                return Err(Error::InvalidInput("orientation must be +1 or -1".into()));
            }
        }
        Ok(())
    }

    /// Blockwise direct sum of symbols and automorphism fields.
    pub fn direct_sum(&self, other: &LoopFamilySpec) -> Result<Self> {
        if self.components.len() != other.components.len() {
            return Err(Error::ParamMismatch);
        }
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| {
                if a.orientation != b.orientation {
                    return Err(Error::ParamMismatch);
                }
                Ok(ComponentData {
                    symbol: a.symbol.direct_sum(&b.symbol),
                    t: AutomorphismField::DirectSum(vec![a.t.clone(), b.t.clone()]),
                    orientation: a.orientation,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LoopFamilySpec { name: format!("{}+{}", self.name, other.name), components })
    }

    /// The same family traversed backwards in s.
    pub fn reversed(&self) -> Self {
        let mut out = self.clone();
        for d in &mut out.components {
            d.t = AutomorphismField::Reversed(Box::new(d.t.clone()));
        }
        out.name = format!("{}-reversed", self.name);
        out
    }

    pub fn t_at(&self, component: usize, theta: f64, s: f64) -> AutomorphismT {
        AutomorphismT::new(self.components[component].t.eval(theta, s))
    }
}

/// Orthonormal frames of F over the (θ, s) lattice of one boundary torus, in E⁻ coordinates.
#[derive(Clone, Debug)]
pub struct TorusSubbundleField {
    pub n_theta: usize,
    pub n_s: usize,
    /// Dimension m of E⁻.
    pub fibre_dim: usize,
    pub rank: usize,
    /// Frame at (θ_i, s_j) stored at `i + n_theta·j`.
    pub frames: Vec<Vec<Vec<C64>>>,
    pub component_id: usize,
    pub orientation: i32,
}

impl TorusSubbundleField {
    pub fn frame(&self, i: usize, j: usize) -> &[Vec<C64>] {
        &self.frames[i % self.n_theta + self.n_theta * (j % self.n_s)]
    }

    pub fn projector(&self, i: usize, j: usize) -> CMat {
        linalg::frame_projector(self.fibre_dim, self.frame(i, j))
    }

    /// Builds a field from frames, checking orthonormality and constant rank.
    pub fn from_frames(
        n_theta: usize,
        n_s: usize,
        fibre_dim: usize,
        frames: Vec<Vec<Vec<C64>>>,
        component_id: usize,
        orientation: i32,
    ) -> Result<Self> {
        if frames.len() != n_theta * n_s || frames.is_empty() {
            return Err(Error::DimensionMismatch { expected: n_theta * n_s, found: frames.len() });
        }
        let rank = frames[0].len();
        for (k, f) in frames.iter().enumerate() {
            if f.len() != rank {
                return Err(Error::RankJump {
                    component: component_id,
                    i: k % n_theta,
                    j: k / n_theta,
                    expected: rank,
                    found: f.len(),
                });
            }
            for (a, u) in f.iter().enumerate() {
                if u.len() != fibre_dim {
                    return Err(Error::DimensionMismatch { expected: fibre_dim, found: u.len() });
                }
                for (b, v) in f.iter().enumerate() {
                    let target = if a == b { 1.0 } else { 0.0 };
                    if (dot(u, v) - target).norm() > STRUCTURAL_TOL {
                        return Err(Error::InvalidInput(format!("frame at node {k} is not orthonormal")));
                    }
                }
            }
        }
        Ok(TorusSubbundleField { n_theta, n_s, fibre_dim, rank, frames, component_id, orientation })
    }

    /// The same field with each node frame rotated by a unitary gauge.
    pub fn regauged(&self, gauges: &[CMat]) -> Self {
        let mut out = self.clone();
        for (f, g) in out.frames.iter_mut().zip(gauges) {
            let m = CMat::from_columns(self.fibre_dim, f);
            *f = (&m * g).columns();
        }
        out
    }

    /// Concatenates frames of two fields on the same lattice into the block sum.
    pub fn direct_sum(&self, other: &TorusSubbundleField) -> Result<Self> {
        if (self.n_theta, self.n_s) != (other.n_theta, other.n_s) {
            return Err(Error::ParamMismatch);
        }
        let m = self.fibre_dim + other.fibre_dim;
        let frames = self
            .frames
            .iter()
            .zip(&other.frames)
            .map(|(a, b)| {
                let mut f: Vec<Vec<C64>> = a
                    .iter()
                    .map(|u| u.iter().copied().chain(std::iter::repeat_n(C64::new(0.0, 0.0), other.fibre_dim)).collect())
                    .collect();
                f.extend(b.iter().map(|u| {
                    std::iter::repeat_n(C64::new(0.0, 0.0), self.fibre_dim).chain(u.iter().copied()).collect()
                }));
                f
            })
            .collect();
        Ok(TorusSubbundleField {
            n_theta: self.n_theta,
            n_s: self.n_s,
            fibre_dim: m,
            rank: self.rank + other.rank,
            frames,
            component_id: self.component_id,
            orientation: self.orientation,
        })
    }
}

fn lattice_point(n_theta: usize, n_s: usize, k: usize) -> (usize, usize, f64, f64) {
    let (i, j) = (k % n_theta, k / n_theta);
    (i, j, 2.0 * PI * i as f64 / n_theta as f64, j as f64 / n_s as f64)
}

/// F = negative spectral subspace of T at every lattice node, one field per boundary component.
pub fn build_f_field(spec: &LoopFamilySpec, n_theta: usize, n_s: usize) -> Result<Vec<TorusSubbundleField>> {
    spec.validate()?;
    if n_theta == 0 || n_s == 0 {
        return Err(Error::InvalidInput("empty lattice".into()));
    }
    spec.components
        .iter()
        .enumerate()
        .map(|(cid, comp)| {
            let m = split(&comp.symbol)?.rank();
            let frames = (0..n_theta * n_s)
                .into_par_iter()
                .map(|k| {
                    let (_, _, theta, s) = lattice_point(n_theta, n_s, k);
                    f_subspace(&AutomorphismT::new(comp.t.eval(theta, s))).map_err(|e| match e {
                        Error::NotInvertible { smin } => Error::ZeroEigenvalue { value: smin },
                        other => other,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            TorusSubbundleField::from_frames(n_theta, n_s, m, frames, cid, comp.orientation)
        })
        .collect()
}

/// Plaquette data of one field.
#[derive(Clone, Debug, Serialize)]
pub struct ChernResult {
    /// Chern number of F in lattice order (θ, s), before the orientation sign.
    pub raw: i64,
    /// raw × orientation.
    pub chern: i64,
    pub min_link: f64,
    pub residue: f64,
    /// Plaquette phases stored at `i + n_theta·j`.
    pub flux: Vec<f64>,
}

fn link(a: &[Vec<C64>], b: &[Vec<C64>]) -> C64 {
    let r = a.len();
    let m = CMat::from_fn(r, r, |p, q| dot(&b[q], &a[p]));
    if r == 1 {
        return m[(0, 0)];
    }
    let (lu, _) = linalg::Lu::new(&m).expect("square overlap");
    let (la, ph) = lu.log_abs_det();
    ph * la.exp()
}

/// Gauge-invariant plaquette computation of the first Chern number.
pub fn chern_plaquettes(field: &TorusSubbundleField) -> Result<ChernResult> {
    let (nt, ns) = (field.n_theta, field.n_s);
    if field.rank == 0 {
        return Ok(ChernResult { raw: 0, chern: 0, min_link: 1.0, residue: 0.0, flux: vec![0.0; nt * ns] });
    }
    let links: Vec<(C64, C64)> = (0..nt * ns)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % nt, k / nt);
            (link(field.frame(i, j), field.frame(i + 1, j)), link(field.frame(i, j), field.frame(i, j + 1)))
        })
        .collect();
    let mut min_link = f64::INFINITY;
    for (k, (u1, u2)) in links.iter().enumerate() {
        let m = u1.norm().min(u2.norm());
        min_link = min_link.min(m);
        if m <= LINK_FLOOR {
            return Err(Error::GridTooCoarse(format!(
                "link overlap {m:.3e} at node ({}, {}) on component {}",
                k % nt,
                k / nt,
                field.component_id
            )));
        }
    }
    let lt = |i: usize, j: usize| links[i % nt + nt * (j % ns)].0;
    let ls = |i: usize, j: usize| links[i % nt + nt * (j % ns)].1;
    let mut flux = Vec::with_capacity(nt * ns);
    let mut total = 0.0;
    for j in 0..ns {
        for i in 0..nt {
            let w = lt(i, j) * ls(i + 1, j) / (lt(i, j + 1) * ls(i, j));
            let f = w.arg();
            flux.push(f);
            total += f;
        }
    }
    let x = total / (2.0 * PI);
    let raw = x.round();
    let residue = (x - raw).abs();
    if residue > 1e-3 {
        return Err(Error::GridTooCoarse(format!("plaquette sum {x} is not integral")));
    }
    let raw = raw as i64;
    Ok(ChernResult { raw, chern: raw * field.orientation as i64, min_link, residue, flux })
}

pub fn chern_number(field: &TorusSubbundleField) -> Result<i64> {
    Ok(chern_plaquettes(field)?.chern)
}

#[derive(Clone, Debug, Serialize)]
pub struct TopologicalIndex {
    pub per_component: Vec<i64>,
    pub total: i64,
}

/// ind_t for a loop: Σ over boundary components of orientation × c₁(F).
pub fn topological_index(spec: &LoopFamilySpec, n_theta: usize, n_s: usize) -> Result<TopologicalIndex> {
    let fields = build_f_field(spec, n_theta, n_s)?;
    index_from_fields(&fields)
}

pub fn index_from_fields(fields: &[TorusSubbundleField]) -> Result<TopologicalIndex> {
    let per_component = fields.iter().map(chern_number).collect::<Result<Vec<_>>>()?;
    Ok(TopologicalIndex { total: per_component.iter().sum(), per_component })
}

/// Odd Dirac family whose F reproduces the prescribed fields: T = I − 2·(frame·frame*).
///
/// `prescribed` lists the fields for components 0 and 1; between lattice nodes the projector is
/// interpolated bilinearly and replaced by the nearest projector of the prescribed rank.
pub fn realize_family(prescribed: &[TorusSubbundleField]) -> Result<LoopFamilySpec> {
    if prescribed.len() != 2 {
        return Err(Error::InvalidInput(format!("expected two prescribed fields, got {}", prescribed.len())));
    }
    let m = prescribed[0].fibre_dim;
    let mut fields = Vec::new();
    for f in prescribed {
        if f.fibre_dim != m {
            return Err(Error::DimensionMismatch { expected: m, found: f.fibre_dim });
        }
        if f.rank > m {
            return Err(Error::RankTooLarge { rank: f.rank, max: m });
        }
        let projectors = (0..f.n_theta * f.n_s).map(|k| linalg::frame_projector(m, &f.frames[k])).collect();
        fields.push(AutomorphismField::Prescribed {
            projectors: LatticeSamples::new(f.n_theta, f.n_s, projectors)?,
            rank: f.rank,
        });
    }
    let t1 = fields.pop().expect("two fields");
    let t0 = fields.pop().expect("two fields");
    let mut spec = LoopFamilySpec::dirac("realized", m, t0, t1)?;
    for (d, f) in spec.components.iter_mut().zip(prescribed) {
        d.orientation = f.orientation;
    }
    Ok(spec)
}

/// Lower band of d̂·σ for the winding vector, sampled on a lattice: the standard prescription.
pub fn winding_prescription(
    k_theta: i32,
    k_s: i32,
    mass: f64,
    n_theta: usize,
    n_s: usize,
    component_id: usize,
) -> Result<TorusSubbundleField> {
    let frames = (0..n_theta * n_s)
        .map(|k| {
            let (_, _, theta, s) = lattice_point(n_theta, n_s, k);
            let t = d_hat_sigma(winding_vector(k_theta, k_s, mass, theta, loop_angle(s)));
            f_subspace(&AutomorphismT::new(t))
        })
        .collect::<Result<Vec<_>>>()?;
    TorusSubbundleField::from_frames(n_theta, n_s, 2, frames, component_id, COMPONENT_ORIENTATION[component_id])
}

/// Rank-0 field over a lattice.
pub fn empty_field(n_theta: usize, n_s: usize, fibre_dim: usize, component_id: usize) -> TorusSubbundleField {
    TorusSubbundleField {
        n_theta,
        n_s,
        fibre_dim,
        rank: 0,
        frames: vec![vec![]; n_theta * n_s],
        component_id,
        orientation: COMPONENT_ORIENTATION[component_id],
    }
}

/// CSV with columns component, i, j, flux.
pub fn flux_csv(results: &[(usize, usize, &ChernResult)]) -> String {
    let mut out = String::from("component,i,j,flux\n");
    for (component, n_theta, r) in results {
        for (k, f) in r.flux.iter().enumerate() {
            let _ = writeln!(out, "{component},{},{},{f:.12e}", k % n_theta, k / n_theta);
        }
    }
    out
}

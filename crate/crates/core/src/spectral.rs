//! Analytical side: discretized odd Dirac boundary problems on the cylinder and spectral flow of
//! loops of them.
//!
//! # Trusted-window spectral flow
//!
//! A closed loop of finite Hermitian matrices always has total signed zero-crossing count 0. The
//! continuum spectral flow shows up only among eigenvalues that approximate the continuum operator:
//! those inside the energy window [−Λ, Λ] whose eigenvectors are resolved by the angular grid. Its
//! compensation happens in modes the grid cannot resolve, at the angular cutoff, which cross zero in
//! the opposite direction. `analyze` reports both parts; the public integer is the resolved one.
//!
//! # Discretization
//!
//! The axial direction uses Legendre–Gauss–Lobatto collocation (a diagonal-norm summation-by-parts
//! pair of order n_t − 1), the angular direction the Fourier derivative with wavenumbers
//! −n_θ/2..n_θ/2 − 1. Boundary conditions enter weakly through a penalty that cancels the Green
//! boundary term for every L and is consistent exactly when L is Lagrangian; the strong compression
//! P*ÃP onto grid functions with boundary values in L is available as `Closure::Compressed`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::Serialize;

use crate::boundary::t_to_l;
use crate::error::{Error, Result};
use crate::linalg::{self, c, dot, inertia, pauli, CMat, Lu, C64, I, ONE, ZERO};
use crate::symbol::{
    dirac_boundary_sample, isotropy_defect, split, BoundarySymbolSample, SymbolConvention, GEOMETRIC_TOL,
};
use crate::topo::LoopFamilySpec;

pub const DEFAULT_WINDOW: f64 = 1.0;
pub const PENALTY_ALPHA: f64 = 0.75;
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Legendre P_N(x) and P_N'(x).
fn legendre(n: usize, x: f64) -> (f64, f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0, 0.0);
    }
    for k in 1..n {
        let p2 = ((2 * k + 1) as f64 * x * p1 - k as f64 * p0) / (k + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = if (x * x - 1.0).abs() > 1e-14 {
        n as f64 * (x * p1 - p0) / (x * x - 1.0)
    } else {
        x.signum().powi(n as i32 + 1) * (n * (n + 1)) as f64 / 2.0
    };
    (p1, dp, p0)
}

/// LGL nodes on [−1, 1], quadrature weights and the collocation derivative (row-major).
pub fn lgl(n_nodes: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = n_nodes - 1;
    let nf = n as f64;
    let mut x = vec![0.0; n_nodes];
    x[0] = -1.0;
    x[n] = 1.0;
    for (j, xj) in x.iter_mut().enumerate().take(n).skip(1) {
        let mut z = -(PI * j as f64 / nf).cos();
        for _ in 0..100 {
            let (p, dp, _) = legendre(n, z);
            let d2p = (2.0 * z * dp - nf * (nf + 1.0) * p) / (1.0 - z * z);
            let delta = dp / d2p;
            z -= delta;
            if delta.abs() < 1e-16 {
                break;
            }
        }
        *xj = z;
    }
    for j in 0..n_nodes / 2 {
        let v = 0.5 * (x[n - j] - x[j]);
        x[j] = -v;
        x[n - j] = v;
    }
    if n_nodes % 2 == 1 {
        x[n / 2] = 0.0;
    }
    let pn: Vec<f64> = x.iter().map(|&z| legendre(n, z).0).collect();
    let w: Vec<f64> = pn.iter().map(|p| 2.0 / (nf * (nf + 1.0) * p * p)).collect();
    let mut d = vec![0.0; n_nodes * n_nodes];
    for i in 0..n_nodes {
        for j in 0..n_nodes {
            if i != j {
                d[i * n_nodes + j] = pn[i] / pn[j] / (x[i] - x[j]);
            }
        }
    }
    d[0] = -nf * (nf + 1.0) / 4.0;
    d[n_nodes * n_nodes - 1] = nf * (nf + 1.0) / 4.0;
    (x, w, d)
}

/// Tensor grid on [0, 1] × S¹.
#[derive(Clone, Debug, Serialize)]
pub struct CylinderGrid {
    pub n_t: usize,
    pub n_theta: usize,
    pub t_nodes: Vec<f64>,
    /// Diagonal norm H of the axial operator pair.
    pub t_weights: Vec<f64>,
    /// Axial derivative, row-major n_t × n_t.
    pub d_t: Vec<f64>,
    pub h_theta: f64,
    pub wavenumbers: Vec<i64>,
    #[serde(skip)]
    pub d_theta: CMat,
}

impl CylinderGrid {
    pub fn new(n_t: usize, n_theta: usize) -> Result<Self> {
        if n_t < 2 || n_theta < 2 {
            return Err(Error::InvalidInput(format!("grid {n_t}x{n_theta} too small")));
        }
        let (x, w, d) = lgl(n_t);
        let t_nodes = x.iter().map(|z| 0.5 * (z + 1.0)).collect();
        let t_weights = w.iter().map(|z| 0.5 * z).collect();
        let d_t = d.iter().map(|z| 2.0 * z).collect();
        let half = n_theta as i64 / 2;
        let wavenumbers: Vec<i64> =
            (0..n_theta as i64).map(|k| if k >= (n_theta as i64 + 1) / 2 { k - n_theta as i64 } else { k }).collect();
        debug_assert!(wavenumbers.iter().all(|k| (-half..=half).contains(k)));
        let nth = n_theta as f64;
        let d_theta = CMat::from_fn(n_theta, n_theta, |j, l| {
            let mut acc = ZERO;
            for &k in &wavenumbers {
                let ang = 2.0 * PI * (k as f64) * (j as f64 - l as f64) / nth;
                acc += c(0.0, k as f64) * c(ang.cos(), ang.sin());
            }
            acc / nth
        });
        Ok(CylinderGrid { n_t, n_theta, t_nodes, t_weights, d_t, h_theta: 2.0 * PI / nth, wavenumbers, d_theta })
    }

    /// Mean axial spacing.
    pub fn h_t(&self) -> f64 {
        1.0 / (self.n_t - 1) as f64
    }

    /// Polynomial degree differentiated exactly by the axial operator.
    pub fn sbp_order(&self) -> usize {
        self.n_t - 1
    }

    pub fn theta(&self, i: usize) -> f64 {
        self.h_theta * i as f64
    }

    pub fn d_t_at(&self, i: usize, j: usize) -> f64 {
        self.d_t[i * self.n_t + j]
    }

    /// uᵀH(Dv) + (Du)ᵀHv − (u_N v_N − u_0 v_0) for real axial grid functions.
    pub fn sbp_defect(&self, u: &[f64], v: &[f64]) -> f64 {
        let n = self.n_t;
        let apply = |f: &[f64]| -> Vec<f64> { (0..n).map(|i| (0..n).map(|j| self.d_t_at(i, j) * f[j]).sum()).collect() };
        let (du, dv) = (apply(u), apply(v));
        let mut s = 0.0;
        for i in 0..n {
            s += self.t_weights[i] * (u[i] * dv[i] + du[i] * v[i]);
        }
        s - (u[n - 1] * v[n - 1] - u[0] * v[0])
    }

    pub fn dim(&self, fibre: usize) -> usize {
        self.n_t * self.n_theta * fibre
    }
}

/// How boundary conditions are imposed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Closure {
    /// Weak penalty K = −½(JΠ⊥ + Π_L J) + αΠ⊥ with J = iσ(n), added at boundary nodes.
    Penalty,
    /// Compression P*ÃP onto grid functions with boundary values in L.
    Compressed,
}

/// The unpenalized odd Dirac stencil Ã on a grid, with fibre ℂʳ ⊕ ℂʳ.
#[derive(Clone, Debug)]
pub struct DiracStencil {
    pub grid: CylinderGrid,
    pub r: usize,
}

impl DiracStencil {
    pub fn fibre(&self) -> usize {
        2 * self.r
    }

    pub fn dim(&self) -> usize {
        self.grid.dim(self.fibre())
    }

    pub fn index(&self, j: usize, i: usize, a: usize) -> usize {
        (j * self.grid.n_theta + i) * self.fibre() + a
    }

    /// H-weight of every unknown.
    pub fn weights(&self) -> Vec<f64> {
        let n = self.fibre();
        let mut w = Vec::with_capacity(self.dim());
        for j in 0..self.grid.n_t {
            for _ in 0..self.grid.n_theta * n {
                w.push(self.grid.t_weights[j] * self.grid.h_theta);
            }
        }
        w
    }

    fn s_mats(&self) -> (CMat, CMat) {
        let [s1, s2, _] = pauli();
        let id = CMat::identity(self.r);
        (s1.kron(&id), s2.kron(&id))
    }

    /// Ã = −i(D_t ⊗ I ⊗ S1) − i(I ⊗ D_θ ⊗ S2) in grid coordinates.
    pub fn operator(&self) -> CMat {
        let (nt, nth, n) = (self.grid.n_t, self.grid.n_theta, self.fibre());
        let (s1, s2) = self.s_mats();
        let mut a = CMat::zeros(self.dim(), self.dim());
        for j in 0..nt {
            for i in 0..nth {
                for al in 0..n {
                    let row = self.index(j, i, al);
                    for be in 0..n {
                        let c1 = s1[(al, be)];
                        if c1 != ZERO {
                            for jp in 0..nt {
                                a[(row, self.index(jp, i, be))] += -I * c1 * self.grid.d_t_at(j, jp);
                            }
                        }
                        let c2 = s2[(al, be)];
                        if c2 != ZERO {
                            for ip in 0..nth {
                                a[(row, self.index(j, ip, be))] += -I * c2 * self.grid.d_theta[(i, ip)];
                            }
                        }
                    }
                }
            }
        }
        a
    }

    pub fn apply(&self, u: &[C64]) -> Vec<C64> {
        self.operator().mul_vec(u)
    }

    /// Axial row of boundary component c.
    pub fn boundary_row(&self, component: usize) -> usize {
        if component == 0 {
            0
        } else {
            self.grid.n_t - 1
        }
    }
}

/// ⟨u, v⟩_H = Σ w u conj(v).
pub fn h_inner(w: &[f64], u: &[C64], v: &[C64]) -> C64 {
    w.iter().zip(u.iter().zip(v)).map(|(w, (a, b))| a * b.conj() * *w).sum()
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GreenDefect {
    pub defect: C64,
    /// |⟨Ãu, v⟩_H| + |⟨u, Ãv⟩_H| + |boundary sum|.
    pub scale: f64,
}

/// ⟨Ãu, v⟩_H − ⟨u, Ãv⟩_H − Σ_boundary h_θ⟨iσ(n)u, v⟩, with σ built under `conv`.
pub fn green_defect(stencil: &DiracStencil, conv: SymbolConvention, u: &[C64], v: &[C64]) -> Result<GreenDefect> {
    let dim = stencil.dim();
    for x in [u, v] {
        if x.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: x.len() });
        }
    }
    let a = stencil.operator();
    let w = stencil.weights();
    let (au, av) = (a.mul_vec(u), a.mul_vec(v));
    let (t1, t2) = (h_inner(&w, &au, v), h_inner(&w, u, &av));
    let n = stencil.fibre();
    let mut bnd = ZERO;
    for comp in 0..2 {
        let sample = dirac_boundary_sample(comp, stencil.r, conv);
        let j = stencil.boundary_row(comp);
        for i in 0..stencil.grid.n_theta {
            let b = stencil.index(j, i, 0);
            let ju: Vec<C64> = sample.sigma_n.mul_vec(&u[b..b + n]).into_iter().map(|z| z * I).collect();
            let term = dot(&ju, &v[b..b + n]) * stencil.grid.h_theta;
            bnd += term;
        }
    }
    Ok(GreenDefect { defect: t1 - t2 - bnd, scale: t1.norm() + t2.norm() + bnd.norm() })
}

/// Per-vector (high-frequency weight, total weight) bookkeeping for a sample.
#[derive(Clone, Debug)]
enum Resolver {
    All(usize),
    Mask(Vec<bool>),
    Grid { nt: usize, nth: usize, n: usize, lift: Option<Vec<CMat>> },
    Sum(Box<Resolver>, Box<Resolver>),
    Conj(Box<Resolver>, CMat),
}

impl Resolver {
    fn dim(&self) -> usize {
        match self {
            Resolver::All(d) => *d,
            Resolver::Mask(m) => m.len(),
            Resolver::Grid { nt, nth, n, lift } => match lift {
                None => nt * nth * n,
                Some(frames) => {
                    let r = frames[0].cols();
                    (nt - 2) * nth * n + 2 * nth * r
                }
            },
            Resolver::Sum(a, b) => a.dim() + b.dim(),
            Resolver::Conj(a, _) => a.dim(),
        }
    }

    fn weights(&self, v: &[C64]) -> (f64, f64) {
        match self {
            Resolver::All(_) => (0.0, linalg::norm(v).powi(2)),
            Resolver::Mask(m) => {
                let hi = v.iter().zip(m).filter(|(_, &u)| u).map(|(z, _)| z.norm_sqr()).sum();
                (hi, linalg::norm(v).powi(2))
            }
            Resolver::Grid { nt, nth, n, lift } => {
                let full;
                let v = match lift {
                    None => v,
                    Some(frames) => {
                        full = lift_compressed(*nt, *nth, *n, frames, v);
                        &full[..]
                    }
                };
                theta_high_weight(*nt, *nth, *n, v)
            }
            Resolver::Sum(a, b) => {
                let k = a.dim();
                let (h1, t1) = a.weights(&v[..k]);
                let (h2, t2) = b.weights(&v[k..]);
                (h1 + h2, t1 + t2)
            }
            Resolver::Conj(a, u) => a.weights(&u.adjoint().mul_vec(v)),
        }
    }
}

/// Weight of θ-wavenumbers |k| > n_θ/4 and total weight of a scaled grid vector.
fn theta_high_weight(nt: usize, nth: usize, n: usize, v: &[C64]) -> (f64, f64) {
    let mut hi = 0.0;
    let mut tot = 0.0;
    let tw: Vec<C64> = (0..nth)
        .map(|m| {
            let ang = -2.0 * PI * m as f64 / nth as f64;
            c(ang.cos(), ang.sin())
        })
        .collect();
    for j in 0..nt {
        for a in 0..n {
            for k in 0..nth {
                let kk = if k >= nth.div_ceil(2) { k as i64 - nth as i64 } else { k as i64 };
                let mut acc = ZERO;
                for i in 0..nth {
                    acc += v[(j * nth + i) * n + a] * tw[(k * i) % nth];
                }
                let e = acc.norm_sqr();
                tot += e;
                if 4 * kk.unsigned_abs() as usize > nth {
                    hi += e;
                }
            }
        }
    }
    (hi, tot)
}

/// Expands a compressed vector to scaled grid coordinates; boundary blocks use their L frames.
fn lift_compressed(nt: usize, nth: usize, n: usize, frames: &[CMat], v: &[C64]) -> Vec<C64> {
    let mut out = vec![ZERO; nt * nth * n];
    let mut p = 0;
    for j in 0..nt {
        for i in 0..nth {
            let b = (j * nth + i) * n;
            if j == 0 || j == nt - 1 {
                let q = &frames[if j == 0 { i } else { nth + i }];
                let r = q.cols();
                for a in 0..n {
                    out[b + a] = (0..r).map(|k| q[(a, k)] * v[p + k]).sum();
                }
                p += r;
            } else {
                out[b..b + n].copy_from_slice(&v[p..p + n]);
                p += n;
            }
        }
    }
    out
}

/// One built sample: the Hermitian matrix, its measured defect, and resolution data.
struct Built {
    h: CMat,
    defect: f64,
    resolver: Resolver,
}

type ToyFn = Arc<dyn Fn(f64) -> CMat + Send + Sync>;

#[derive(Clone)]
enum Source {
    Assembled { spec: Arc<LoopFamilySpec>, stencil: Arc<DiracStencil>, closure: Closure, alpha: f64 },
    Toy { dim: usize, f: ToyFn, unresolved: Vec<bool> },
    Sum(Box<Source>, Box<Source>),
    Conjugated(Box<Source>, Arc<CMat>),
}

impl Source {
    fn dim(&self) -> usize {
        match self {
            Source::Assembled { stencil, closure, .. } => match closure {
                Closure::Penalty => stencil.dim(),
                Closure::Compressed => {
                    let g = &stencil.grid;
                    (g.n_t - 2) * g.n_theta * stencil.fibre() + 2 * g.n_theta * stencil.r
                }
            },
            Source::Toy { dim, .. } => *dim,
            Source::Sum(a, b) => a.dim() + b.dim(),
            Source::Conjugated(a, _) => a.dim(),
        }
    }

    fn build(&self, s: f64) -> Result<Built> {
        match self {
            Source::Assembled { spec, stencil, closure, alpha } => assemble_at(spec, stencil, *closure, *alpha, s),
            Source::Toy { dim, f, unresolved } => {
                let h = f(s);
                if h.rows() != *dim || !h.is_square() {
                    return Err(Error::DimensionMismatch { expected: *dim, found: h.rows() });
                }
                let defect = h.hermitian_defect();
                if defect > HERMITIAN_TOL {
                    return Err(Error::NotHermitian { defect });
                }
                let resolver =
                    if unresolved.iter().any(|&u| u) { Resolver::Mask(unresolved.clone()) } else { Resolver::All(*dim) };
                Ok(Built { h: h.hermitian_part(), defect, resolver })
            }
            Source::Sum(a, b) => {
                let (x, y) = (a.build(s)?, b.build(s)?);
                Ok(Built {
                    h: CMat::block_diag(&[&x.h, &y.h]),
                    defect: x.defect.max(y.defect),
                    resolver: Resolver::Sum(Box::new(x.resolver), Box::new(y.resolver)),
                })
            }
            Source::Conjugated(a, u) => {
                let x = a.build(s)?;
                Ok(Built {
                    h: x.h.conjugate_by(u).hermitian_part(),
                    defect: x.defect,
                    resolver: Resolver::Conj(Box::new(x.resolver), (**u).clone()),
                })
            }
        }
    }
}

/// Orthonormal L frame and penalty matrix at one boundary node.
fn boundary_frame(sample: &BoundarySymbolSample, t: &CMat) -> Result<CMat> {
    let sp = split(sample)?;
    let l = t_to_l(sample, &sp, &crate::boundary::AutomorphismT::new(t.clone()))?;
    let d = isotropy_defect(&sample.sigma_n, &l.frame)?;
    if d > GEOMETRIC_TOL {
        return Err(Error::NotLagrangian { defect: d });
    }
    Ok(l.matrix(sample.dim()))
}

fn penalty(sample: &BoundarySymbolSample, q: &CMat, alpha: f64) -> CMat {
    let n = sample.dim();
    let pl = q * &q.adjoint();
    let pp = &CMat::identity(n) - &pl;
    let j = sample.sigma_n.scale(I);
    let sym = (&(&j * &pp) + &(&pl * &j)).scale_real(-0.5);
    &sym + &pp.scale_real(alpha)
}

fn assemble_at(spec: &LoopFamilySpec, st: &DiracStencil, closure: Closure, alpha: f64, s: f64) -> Result<Built> {
    let g = &st.grid;
    let (nt, nth, n) = (g.n_t, g.n_theta, st.fibre());
    let frames: Vec<CMat> = (0..2 * nth)
        .map(|k| {
            let (comp, i) = (k / nth, k % nth);
            let t = spec.components[comp].t.eval(g.theta(i), s);
            boundary_frame(&spec.components[comp].symbol, &t)
        })
        .collect::<Result<_>>()?;
    let mut a = st.operator();
    let w = st.weights();
    let sc: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
    match closure {
        Closure::Penalty => {
            for comp in 0..2 {
                let j = st.boundary_row(comp);
                let sample = &spec.components[comp].symbol;
                for i in 0..nth {
                    let k = penalty(sample, &frames[comp * nth + i], alpha).scale_real(1.0 / g.t_weights[j]);
                    let b = st.index(j, i, 0);
                    for p in 0..n {
                        for q in 0..n {
                            a[(b + p, b + q)] += k[(p, q)];
                        }
                    }
                }
            }
            let m = CMat::from_fn(a.rows(), a.cols(), |p, q| a[(p, q)] * (sc[p] / sc[q]));
            let defect = m.hermitian_defect();
            if defect > HERMITIAN_TOL {
                return Err(Error::NotHermitian { defect });
            }
            Ok(Built { h: m.hermitian_part(), defect, resolver: Resolver::Grid { nt, nth, n, lift: None } })
        }
        Closure::Compressed => {
            let m = CMat::from_fn(a.rows(), a.cols(), |p, q| a[(p, q)] * (sc[p] / sc[q]));
            let cols = compress_columns(nt, nth, n, &frames, &m);
            let rows = compress_columns(nt, nth, n, &frames, &cols.adjoint()).adjoint();
            let defect = rows.hermitian_defect();
            if defect > GEOMETRIC_TOL {
                return Err(Error::NotLagrangian { defect });
            }
            Ok(Built { h: rows.hermitian_part(), defect, resolver: Resolver::Grid { nt, nth, n, lift: Some(frames) } })
        }
    }
}

/// M·B where B embeds compressed coordinates into scaled grid coordinates.
fn compress_columns(nt: usize, nth: usize, n: usize, frames: &[CMat], m: &CMat) -> CMat {
    let mut cols: Vec<Vec<C64>> = Vec::new();
    for j in 0..nt {
        for i in 0..nth {
            let b = (j * nth + i) * n;
            if j == 0 || j == nt - 1 {
                let q = &frames[if j == 0 { i } else { nth + i }];
                for k in 0..q.cols() {
                    let mut col = vec![ZERO; m.rows()];
                    for a in 0..n {
                        let coef = q[(a, k)];
                        if coef != ZERO {
                            col.iter_mut().zip(m.column_slice(b + a)).for_each(|(x, y)| *x += y * coef);
                        }
                    }
                    cols.push(col);
                }
            } else {
                for a in 0..n {
                    cols.push(m.column(b + a));
                }
            }
        }
    }
    CMat::from_columns(m.rows(), &cols)
}

/// Eigen data of one sample, computed in a buffered window and shared between windows.
#[derive(Debug)]
struct RawSample {
    s: f64,
    half_width: f64,
    eigenvalues: Vec<f64>,
    vectors: CMat,
    high_fraction: Vec<f64>,
    phases: Option<Vec<f64>>,
    n_neg: usize,
    defect: f64,
}

/// A loop (or, for tests, an open path) of Hermitian matrices parameterized by s ∈ [0, 1].
#[derive(Clone)]
pub struct DiscreteFamily {
    source: Source,
    pub window: f64,
    pub n_params: usize,
    pub closed: bool,
    pub closure: Option<Closure>,
    pub grid: Option<(usize, usize)>,
    pub name: String,
    cache: Arc<Mutex<HashMap<u64, Arc<RawSample>>>>,
}

impl std::fmt::Debug for DiscreteFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiscreteFamily")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("window", &self.window)
            .field("n_params", &self.n_params)
            .field("closed", &self.closed)
            .finish()
    }
}

pub struct AssembleOptions {
    pub closure: Closure,
    pub alpha: f64,
    pub window: f64,
    pub n_params: usize,
}

impl Default for AssembleOptions {
    fn default() -> Self {
        AssembleOptions { closure: Closure::Penalty, alpha: PENALTY_ALPHA, window: DEFAULT_WINDOW, n_params: 24 }
    }
}

/// Discretizes the loop of boundary problems on the grid with the default options.
pub fn assemble(spec: &LoopFamilySpec, grid: &CylinderGrid) -> Result<DiscreteFamily> {
    assemble_with(spec, grid, &AssembleOptions::default())
}

pub fn assemble_with(spec: &LoopFamilySpec, grid: &CylinderGrid, opts: &AssembleOptions) -> Result<DiscreteFamily> {
    spec.validate()?;
    let r = spec
        .dirac_rank()
        .ok_or_else(|| Error::SymbolMismatch("boundary symbols differ from the odd Dirac operator".into()))?;
    for comp in &spec.components {
        if let Some(k) = comp.t.theta_frequency() {
            if 2 * k >= grid.n_theta {
                return Err(Error::NyquistViolation { n_theta: grid.n_theta, frequency: k });
            }
        }
    }
    if opts.window <= 0.0 || opts.n_params < 2 {
        return Err(Error::InvalidInput("window must be positive and n_params at least 2".into()));
    }
    let source = Source::Assembled {
        spec: Arc::new(spec.clone()),
        stencil: Arc::new(DiracStencil { grid: grid.clone(), r }),
        closure: opts.closure,
        alpha: opts.alpha,
    };
    source.build(0.0)?;
    Ok(DiscreteFamily {
        source,
        window: opts.window,
        n_params: opts.n_params,
        closed: true,
        closure: Some(opts.closure),
        grid: Some((grid.n_t, grid.n_theta)),
        name: spec.name.clone(),
        cache: Default::default(),
    })
}

impl DiscreteFamily {
    fn from_source(source: Source, name: &str, closed: bool) -> Self {
        DiscreteFamily {
            source,
            window: DEFAULT_WINDOW,
            n_params: 24,
            closed,
            closure: None,
            grid: None,
            name: name.into(),
            cache: Default::default(),
        }
    }

    /// Loop s ↦ f(s) of Hermitian matrices; `unresolved` flags coordinates treated as unresolved.
    pub fn toy_loop(name: &str, dim: usize, unresolved: Vec<bool>, f: impl Fn(f64) -> CMat + Send + Sync + 'static) -> Self {
        let unresolved = if unresolved.is_empty() { vec![false; dim] } else { unresolved };
        let f: ToyFn = Arc::new(move |s: f64| f(s.rem_euclid(1.0)));
        Self::from_source(Source::Toy { dim, f, unresolved }, name, true)
    }

    /// Open path on s ∈ [0, 1]; only `path_spectral_flow` accepts it.
    pub fn toy_path(name: &str, dim: usize, f: impl Fn(f64) -> CMat + Send + Sync + 'static) -> Self {
        let f: ToyFn = Arc::new(f);
        Self::from_source(Source::Toy { dim, f, unresolved: vec![false; dim] }, name, false)
    }

    /// The family with another trusted window; eigen data is shared with `self`.
    pub fn with_window(&self, window: f64) -> Self {
        let mut out = self.clone();
        out.window = window;
        out
    }

    pub fn with_n_params(&self, n_params: usize) -> Self {
        let mut out = self.clone();
        out.n_params = n_params;
        out
    }

    pub fn dim(&self) -> usize {
        self.source.dim()
    }

    /// Hermitian matrix at s and its measured relative Hermitian defect before symmetrization.
    pub fn matrix(&self, s: f64) -> Result<(CMat, f64)> {
        let s = if self.closed { s.rem_euclid(1.0) } else { s };
        let b = self.source.build(s)?;
        Ok((b.h, b.defect))
    }

    /// Conjugates every matrix by a fixed unitary.
    pub fn conjugated(&self, u: &CMat) -> Result<Self> {
        if u.rows() != self.dim() || !u.is_square() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: u.rows() });
        }
        let mut out = Self::from_source(
            Source::Conjugated(Box::new(self.source.clone()), Arc::new(u.clone())),
            &format!("{}-conjugated", self.name),
            self.closed,
        );
        out.window = self.window;
        out.n_params = self.n_params;
        Ok(out)
    }

    fn raw_sample(&self, s: f64, half_width: f64, cayley: bool) -> Result<Arc<RawSample>> {
        let key = s.to_bits();
        if let Some(r) = self.cache.lock().expect("cache lock").get(&key) {
            if r.half_width >= half_width && (!cayley || r.phases.is_some()) {
                return Ok(r.clone());
            }
        }
        let b = self.source.build(s)?;
        let e = linalg::hermitian_eig_window(&b.h, -half_width, half_width, HERMITIAN_TOL)?;
        let (n_neg, _, _) = inertia(&b.h)?;
        let high_fraction = (0..e.len())
            .map(|k| {
                let (hi, tot) = b.resolver.weights(e.eigenvectors.column_slice(k));
                if tot > 0.0 { hi / tot } else { 0.0 }
            })
            .collect();
        let phases = if cayley { Some(cayley_phases(&b.h, &e.eigenvectors)?) } else { None };
        let raw = Arc::new(RawSample {
            s,
            half_width,
            eigenvalues: e.eigenvalues,
            vectors: e.eigenvectors,
            high_fraction,
            phases,
            n_neg,
            defect: b.defect,
        });
        self.cache.lock().expect("cache lock").insert(key, raw.clone());
        Ok(raw)
    }
}

/// Phases of the Rayleigh quotients ⟨κ(H)v, v⟩ for the columns v of `vectors`.
fn cayley_phases(h: &CMat, vectors: &CMat) -> Result<Vec<f64>> {
    if vectors.cols() == 0 {
        return Ok(vec![]);
    }
    let shifted = &h.clone() + &CMat::identity(h.rows()).scale(I);
    let (lu, ok) = Lu::new(&shifted)?;
    if !ok {
        return Err(Error::SingularIterate { rcond: 0.0 });
    }
    let x = lu.solve(vectors)?;
    Ok((0..vectors.cols())
        .map(|k| (ONE - c(0.0, 2.0) * dot(x.column_slice(k), vectors.column_slice(k))).arg())
        .collect())
}

/// κ(H) = (H − i)(H + i)⁻¹.
pub fn cayley(h: &CMat) -> Result<CMat> {
    let n = h.rows();
    let defect = h.hermitian_defect();
    if defect > HERMITIAN_TOL {
        return Err(Error::NotHermitian { defect });
    }
    let id = CMat::identity(n).scale(I);
    let plus = h + &id;
    let minus = h - &id;
    let inv = linalg::inverse(&plus)?;
    Ok(&minus * &inv)
}

/// Eigenvalues with |λ| ≤ Λ at s, with multiplicities of numerically equal values.
pub fn eigen_window(family: &DiscreteFamily, s: f64) -> Result<Vec<(f64, usize)>> {
    let (h, _) = family.matrix(s)?;
    let lam = family.window;
    let w = linalg::hermitian_eigenvalues(&h, HERMITIAN_TOL)?;
    let mut out: Vec<(f64, usize)> = Vec::new();
    for x in w.into_iter().filter(|x| x.abs() <= lam) {
        match out.last_mut() {
            Some((y, m)) if (x - *y).abs() <= 1e-9 * x.abs().max(1.0) => *m += 1,
            _ => out.push((x, 1)),
        }
    }
    Ok(out)
}

/// Tuning of the crossing tracker.
#[derive(Clone, Debug, Serialize)]
pub struct FlowOptions {
    /// Eigenpairs are computed in ±buffer·Λ so window entry and exit stay unambiguous.
    pub buffer: f64,
    pub max_samples: usize,
    pub min_step: f64,
    /// Samples with an eigenvalue this close to 0 are nudged, then rejected.
    pub eps0: f64,
    /// A vector is unresolved when this fraction of its weight sits at |k| > n_θ/4.
    pub resolution_cut: f64,
    pub overlap_edge: f64,
    pub match_weight: f64,
    pub cayley: bool,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            buffer: 1.25,
            max_samples: 400,
            min_step: 1e-6,
            eps0: 1e-9,
            resolution_cut: 0.5,
            overlap_edge: 0.1,
            match_weight: 0.5,
            cayley: true,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SampleSummary {
    pub s: f64,
    /// Eigenvalues with |λ| ≤ Λ.
    pub eigenvalues: Vec<f64>,
    pub resolved: Vec<bool>,
    pub n_negative: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Crossing {
    pub s_from: f64,
    pub s_to: f64,
    pub flow: i64,
    pub resolved: bool,
}

/// Everything measured while tracking a family around its loop.
#[derive(Clone, Debug, Serialize)]
pub struct FlowReport {
    pub name: String,
    pub window: f64,
    pub grid: Option<(usize, usize)>,
    pub closed: bool,
    /// Net crossings of 0 by resolved eigenvalue paths inside [−Λ, Λ].
    pub spectral_flow: i64,
    /// The same count read from phases of κ through −1.
    pub cayley_flow: Option<i64>,
    /// Net crossings by unresolved paths inside the window.
    pub unresolved_flow: i64,
    /// Net change of the negative count over the whole spectrum; 0 for a closed loop.
    pub whole_spectrum_flow: i64,
    /// Crossings not seen by any tracked window path (whole − resolved − unresolved).
    pub outside_flow: i64,
    pub n_samples: usize,
    pub defect_max: f64,
    pub min_abs_eigenvalue: f64,
    pub samples: Vec<SampleSummary>,
    pub crossings: Vec<Crossing>,
}

struct Step {
    flow: i64,
    cayley: i64,
    unresolved: i64,
    refine: bool,
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let n = self.0[y];
            self.0[y] = r;
            y = n;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

fn analyze_step(a: &RawSample, b: &RawSample, lam: f64, opts: &FlowOptions) -> Step {
    let (na, nb) = (a.eigenvalues.len(), b.eigenvalues.len());
    let mut step = Step { flow: 0, cayley: 0, unresolved: 0, refine: false };
    let ov = if na > 0 && nb > 0 { &a.vectors.adjoint() * &b.vectors } else { CMat::zeros(na, nb) };
    let o = |i: usize, j: usize| ov[(i, j)].norm_sqr();
    let mut dsu = Dsu((0..na + nb).collect());
    for i in 0..na {
        for j in 0..nb {
            if o(i, j) >= opts.overlap_edge {
                dsu.union(i, na + j);
            }
        }
    }
    let mut groups: HashMap<usize, (Vec<usize>, Vec<usize>)> = HashMap::new();
    for i in 0..na {
        groups.entry(dsu.find(i)).or_default().0.push(i);
    }
    for j in 0..nb {
        groups.entry(dsu.find(na + j)).or_default().1.push(j);
    }
    let res_a = |i: usize| a.high_fraction[i] <= opts.resolution_cut;
    let res_b = |j: usize| b.high_fraction[j] <= opts.resolution_cut;
    let mut keys: Vec<usize> = groups.keys().copied().collect();
    keys.sort_unstable();
    for key in keys {
        let (ga, gb) = &groups[&key];
        let in_window =
            ga.iter().any(|&i| a.eigenvalues[i].abs() < lam) || gb.iter().any(|&j| b.eigenvalues[j].abs() < lam);
        if !in_window {
            continue;
        }
        let matched = ga.len() == gb.len()
            && ga.iter().all(|&i| gb.iter().map(|&j| o(i, j)).sum::<f64>() >= opts.match_weight)
            && gb.iter().all(|&j| ga.iter().map(|&i| o(i, j)).sum::<f64>() >= opts.match_weight);
        let n_res = ga.iter().filter(|&&i| res_a(i)).count() + gb.iter().filter(|&&j| res_b(j)).count();
        let all_res = n_res == ga.len() + gb.len();
        if !matched {
            let live = ga.iter().any(|&i| res_a(i) && a.eigenvalues[i].abs() < lam)
                || gb.iter().any(|&j| res_b(j) && b.eigenvalues[j].abs() < lam);
            if live {
                step.refine = true;
            }
            continue;
        }
        let neg = |ev: &[f64], g: &[usize]| g.iter().filter(|&&k| ev[k] < 0.0).count() as i64;
        let flow = neg(&a.eigenvalues, ga) - neg(&b.eigenvalues, gb);
        if all_res {
            let mut la: Vec<f64> = ga.iter().map(|&i| a.eigenvalues[i]).collect();
            let mut lb: Vec<f64> = gb.iter().map(|&j| b.eigenvalues[j]).collect();
            la.sort_by(f64::total_cmp);
            lb.sort_by(f64::total_cmp);
            if la.iter().zip(&lb).any(|(x, y)| (x - y).abs() > lam / 4.0) {
                step.refine = true;
            }
            step.flow += flow;
            if let (Some(pa), Some(pb)) = (&a.phases, &b.phases) {
                let lower = |p: &[f64], g: &[usize]| g.iter().filter(|&&k| p[k] < 0.0 && p[k] > -PI).count() as i64;
                step.cayley += lower(pb, gb) - lower(pa, ga);
            }
        } else if n_res == 0 {
            step.unresolved += flow;
        } else if flow != 0 {
            step.refine = true;
        }
    }
    step
}

fn analyze_inner(family: &DiscreteFamily, opts: &FlowOptions) -> Result<FlowReport> {
    let lam = family.window;
    if lam <= 0.0 || !lam.is_finite() {
        return Err(Error::InvalidInput("window must be positive and finite".into()));
    }
    let hw = opts.buffer * lam;
    let n0 = family.n_params.max(2);
    let init: Vec<f64> = if family.closed {
        (0..n0).map(|j| (j as f64 + 0.5) / n0 as f64).collect()
    } else {
        (0..n0).map(|j| j as f64 / (n0 - 1) as f64).collect()
    };
    let eval = |s: f64| -> Result<Arc<RawSample>> {
        for attempt in 0..4 {
            let nudge = attempt as f64 * 1e-6;
            let sp = if family.closed {
                (s + nudge).rem_euclid(1.0)
            } else if s + nudge > 1.0 {
                s - nudge
            } else {
                s + nudge
            };
            let raw = family.raw_sample(sp, hw, opts.cayley)?;
            if raw.eigenvalues.iter().all(|x| x.abs() >= opts.eps0) {
                return Ok(raw);
            }
        }
        Err(Error::AmbiguousCrossing { s, eps: opts.eps0 })
    };
    let mut samples: Vec<Arc<RawSample>> = init.par_iter().map(|&s| eval(s)).collect::<Result<_>>()?;
    loop {
        let n = samples.len();
        let pairs: Vec<(usize, usize)> =
            if family.closed { (0..n).map(|k| (k, (k + 1) % n)).collect() } else { (0..n - 1).map(|k| (k, k + 1)).collect() };
        let steps: Vec<Step> = pairs.par_iter().map(|&(p, q)| analyze_step(&samples[p], &samples[q], lam, opts)).collect();
        let mut mids = Vec::new();
        for (&(p, q), st) in pairs.iter().zip(&steps) {
            if st.refine {
                let (sa, mut sb) = (samples[p].s, samples[q].s);
                if sb <= sa {
                    sb += 1.0;
                }
                if sb - sa < opts.min_step {
                    return Err(Error::StepTooCoarse { s: sa });
                }
                mids.push((0.5 * (sa + sb)).rem_euclid(1.0));
            }
        }
        if mids.is_empty() {
            let mut report = FlowReport {
                name: family.name.clone(),
                window: lam,
                grid: family.grid,
                closed: family.closed,
                spectral_flow: 0,
                cayley_flow: opts.cayley.then_some(0),
                unresolved_flow: 0,
                whole_spectrum_flow: 0,
                outside_flow: 0,
                n_samples: n,
                defect_max: samples.iter().map(|r| r.defect).fold(0.0, f64::max),
                min_abs_eigenvalue: samples
                    .iter()
                    .flat_map(|r| r.eigenvalues.iter().map(|x| x.abs()))
                    .fold(f64::INFINITY, f64::min),
                samples: samples
                    .iter()
                    .map(|r| {
                        let keep: Vec<usize> = (0..r.eigenvalues.len()).filter(|&k| r.eigenvalues[k].abs() <= lam).collect();
                        SampleSummary {
                            s: r.s,
                            eigenvalues: keep.iter().map(|&k| r.eigenvalues[k]).collect(),
                            resolved: keep.iter().map(|&k| r.high_fraction[k] <= opts.resolution_cut).collect(),
                            n_negative: r.n_neg,
                        }
                    })
                    .collect(),
                crossings: vec![],
            };
            for (&(p, q), st) in pairs.iter().zip(&steps) {
                report.spectral_flow += st.flow;
                if let Some(cf) = report.cayley_flow.as_mut() {
                    *cf += st.cayley;
                }
                report.unresolved_flow += st.unresolved;
                report.whole_spectrum_flow += samples[p].n_neg as i64 - samples[q].n_neg as i64;
                for (f, resolved) in [(st.flow, true), (st.unresolved, false)] {
                    if f != 0 {
                        report.crossings.push(Crossing { s_from: samples[p].s, s_to: samples[q].s, flow: f, resolved });
                    }
                }
            }
            report.outside_flow = report.whole_spectrum_flow - report.spectral_flow - report.unresolved_flow;
            return Ok(report);
        }
        if n + mids.len() > opts.max_samples {
            return Err(Error::StepTooCoarse { s: mids[0] });
        }
        let fresh: Vec<Arc<RawSample>> = mids.par_iter().map(|&s| eval(s)).collect::<Result<_>>()?;
        samples.extend(fresh);
        samples.sort_by(|x, y| x.s.total_cmp(&y.s));
        samples.dedup_by(|x, y| x.s == y.s);
    }
}

/// Tracks the family around its loop and reports resolved, unresolved and whole-spectrum flow.
pub fn analyze(family: &DiscreteFamily, opts: &FlowOptions) -> Result<FlowReport> {
    if !family.closed {
        return Err(Error::InvalidInput("spectral flow is defined here for closed loops only".into()));
    }
    analyze_inner(family, opts)
}

/// Spectral flow of a closed loop inside its trusted window.
pub fn spectral_flow(family: &DiscreteFamily) -> Result<i64> {
    Ok(analyze(family, &FlowOptions { cayley: false, ..Default::default() })?.spectral_flow)
}

/// Winding of κ-eigenvalue phases through −1 for the tracked window paths.
pub fn cayley_flow(family: &DiscreteFamily) -> Result<i64> {
    Ok(analyze(family, &FlowOptions::default())?.cayley_flow.unwrap_or(0))
}

/// Spectral flow of an open path on [0, 1]. Endpoint eigenvalues must be nonzero.
pub fn path_spectral_flow(family: &DiscreteFamily) -> Result<i64> {
    if family.closed {
        return Err(Error::InvalidInput("expected an open path".into()));
    }
    Ok(analyze_inner(family, &FlowOptions { cayley: false, ..Default::default() })?.spectral_flow)
}

/// Blockwise direct sum of two families on the same loop parameterization.
pub fn direct_sum(f: &DiscreteFamily, g: &DiscreteFamily) -> Result<DiscreteFamily> {
    if f.closed != g.closed || f.n_params != g.n_params {
        return Err(Error::ParamMismatch);
    }
    let mut out = DiscreteFamily::from_source(
        Source::Sum(Box::new(f.source.clone()), Box::new(g.source.clone())),
        &format!("{}+{}", f.name, g.name),
        f.closed,
    );
    out.window = f.window;
    out.n_params = f.n_params;
    out.grid = f.grid.or(g.grid);
    Ok(out)
}

/// The zero-dimensional family.
pub fn empty_family(n_params: usize) -> DiscreteFamily {
    let mut f = DiscreteFamily::toy_loop("empty", 0, vec![], |_| CMat::zeros(0, 0));
    f.n_params = n_params;
    f
}

/// min |λ| over the family samples.
pub fn gap_probe(spec: &LoopFamilySpec, grid: &CylinderGrid) -> Result<f64> {
    let family = assemble(spec, grid)?;
    let constant = spec.components.iter().all(|c| c.t.is_s_independent());
    let ss: Vec<f64> = if constant {
        vec![0.0]
    } else {
        (0..family.n_params).map(|j| (j as f64 + 0.5) / family.n_params as f64).collect()
    };
    let gaps = ss
        .par_iter()
        .map(|&s| {
            let (h, _) = family.matrix(s)?;
            let w = linalg::hermitian_eigenvalues(&h, HERMITIAN_TOL)?;
            Ok(w.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(gaps.into_iter().fold(f64::INFINITY, f64::min))
}

/// 1×1 path diag(s − ½).
pub fn toy_linear_path() -> DiscreteFamily {
    DiscreteFamily::toy_path("linear", 1, |s| CMat::diag_real(&[s - 0.5]))
}

fn smoothstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * (3.0 - 2.0 * x)
}

/// Parameters of a 2×2 toy loop whose eigenvalues ∓a·cos 2πs' trade places by rotating the
/// eigenvectors between a resolved and an unresolved coordinate while outside the window.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RotorBlock {
    pub amplitude: f64,
    pub offset: f64,
    /// +1 or −1: direction of travel around the loop.
    pub direction: i32,
    /// Which of the two coordinates is unresolved.
    pub unresolved: usize,
}

impl RotorBlock {
    /// Resolved spectral flow of the block inside a window Λ < 0.58·amplitude.
    pub fn expected_flow(&self) -> i64 {
        let base = if self.unresolved == 1 { 2 } else { -2 };
        base * self.direction as i64
    }

    pub fn matrix(&self, s: f64) -> CMat {
        let sp = (self.offset + self.direction as f64 * s).rem_euclid(1.0);
        let f = |x: f64| -self.amplitude * (2.0 * PI * x).cos();
        let phi = if sp < 0.85 {
            0.5 * PI * smoothstep((sp - 0.4) / 0.2)
        } else {
            0.5 * PI + 0.5 * PI * smoothstep((sp - 0.85) / 0.15)
        };
        let (cs, sn) = (phi.cos(), phi.sin());
        let r = CMat::from_real(2, 2, &[cs, -sn, sn, cs]);
        let d = CMat::diag_real(&[f(sp), f(sp + 0.5)]);
        (&(&r * &d) * &r.transpose()).hermitian_part()
    }
}

/// Toy loop: rotor blocks followed by constant resolved diagonal entries.
pub fn toy_rotor_family(name: &str, blocks: &[RotorBlock], spectators: &[f64]) -> DiscreteFamily {
    let dim = 2 * blocks.len() + spectators.len();
    let mut mask = vec![false; dim];
    for (k, b) in blocks.iter().enumerate() {
        mask[2 * k + b.unresolved] = true;
    }
    let blocks = blocks.to_vec();
    let spectators = spectators.to_vec();
    DiscreteFamily::toy_loop(name, dim, mask, move |s| {
        let mut parts: Vec<CMat> = blocks.iter().map(|b| b.matrix(s)).collect();
        if !spectators.is_empty() {
            parts.push(CMat::diag_real(&spectators));
        }
        CMat::block_diag(&parts.iter().collect::<Vec<_>>())
    })
}

/// Constant loop at a fixed Hermitian matrix.
pub fn constant_family(h: CMat) -> DiscreteFamily {
    let dim = h.rows();
    DiscreteFamily::toy_loop("constant", dim, vec![], move |_| h.clone())
}

//! Randomized invariant suites behind the `properties` verb.

use indexlab_core::boundary::{check_elliptic_bc, l_to_t, t_to_l, AutomorphismT, DEFAULT_ANGLE_THRESHOLD};
use indexlab_core::ktheory::{reduce_mod_jn, IntPoly};
use indexlab_core::linalg::{c, orthonormal_frame, CMat, C64};
use indexlab_core::spectral::{
    direct_sum, green_defect, spectral_flow, toy_rotor_family, CylinderGrid, DiracStencil, RotorBlock,
};
use indexlab_core::symbol::{check_lagrangian, dirac_boundary_sample, split, BoundarySymbolSample, SymbolConvention, GEOMETRIC_TOL};
use indexlab_core::topo::{build_f_field, chern_plaquettes, AutomorphismField, LoopFamilySpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    pub first_failure: Option<String>,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

type Case = fn(&mut ChaCha8Rng) -> Result<(), String>;

const SUITES: [(&str, Case, usize); 6] = [
    ("boundary-round-trip", round_trip, 1),
    ("splitting", splitting, 1),
    ("green-identity", green, 1),
    ("chern-gauge-invariance", chern_gauge, 10),
    ("flow-additivity", flow_additivity, 2),
    ("coinvariant-ring-map", ring_map, 2),
];

/// Runs every suite; expensive suites run `cases / divisor` cases (at least one).
pub fn run(seed: u64, cases: usize) -> Vec<SuiteResult> {
    SUITES
        .iter()
        .enumerate()
        .map(|(k, (name, case, divisor))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
            let n = (cases / divisor).max(1);
            let mut failures = 0;
            let mut first_failure = None;
            for i in 0..n {
                if let Err(e) = case(&mut rng) {
                    failures += 1;
                    first_failure.get_or_insert_with(|| format!("case {i}: {e}"));
                }
            }
            SuiteResult { name, cases: n, failures, first_failure }
        })
        .collect()
}

fn check(ok: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

fn random_c64(rng: &mut ChaCha8Rng) -> C64 {
    c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    CMat::from_fn(n, n, |_, _| random_c64(rng))
}

fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    loop {
        if let Ok(q) = orthonormal_frame(&random_matrix(rng, n).columns(), 1e-6) {
            return CMat::from_columns(n, &q);
        }
    }
}

fn random_sample(rng: &mut ChaCha8Rng, r: usize) -> BoundarySymbolSample {
    let base = dirac_boundary_sample(rng.random_range(0..2), r, SymbolConvention::MinusI);
    base.conjugate_by(&(&CMat::identity(2 * r) + &random_matrix(rng, 2 * r).scale_real(0.3)))
}

fn random_t(rng: &mut ChaCha8Rng, r: usize, hermitian: bool) -> CMat {
    let u = random_unitary(rng, r);
    let d: Vec<f64> = (0..r)
        .map(|_| {
            let x = rng.random_range(0.2..2.0);
            if rng.random_bool(0.5) { x } else { -x }
        })
        .collect();
    let h = CMat::diag_real(&d).conjugate_by(&u);
    if hermitian {
        h
    } else {
        &h + &random_matrix(rng, r).scale(c(0.0, 0.3))
    }
}

fn round_trip(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let r = rng.random_range(1..4);
    let hermitian = rng.random_bool(0.5);
    let s = random_sample(rng, r);
    let sp = split(&s).map_err(|e| e.to_string())?;
    let t = random_t(rng, r, hermitian);
    let tt = AutomorphismT::new(t.clone());
    if tt.smallest_singular_value().map_err(|e| e.to_string())? < 1e-3 {
        return Ok(());
    }
    let l = t_to_l(&s, &sp, &tt).map_err(|e| e.to_string())?;
    let diag = check_elliptic_bc(&sp, &l, DEFAULT_ANGLE_THRESHOLD).map_err(|e| e.to_string())?;
    check(diag.elliptic, || "graph of T is not elliptic".into())?;
    let back = l_to_t(&s, &sp, &l).map_err(|e| e.to_string())?;
    let l2 = t_to_l(&s, &sp, &back).map_err(|e| e.to_string())?;
    let d = l.distance(&l2, 2 * r);
    check(d <= 1e-8, || format!("round trip distance {d:.3e}"))?;
    let lag = check_lagrangian(&s.sigma_n, &l.frame, GEOMETRIC_TOL).map_err(|e| e.to_string())?;
    check(lag == tt.is_self_adjoint(1e-10), || "Lagrangian and self-adjoint disagree".into())
}

fn splitting(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let r = rng.random_range(1..4);
    let s = random_sample(rng, r);
    let sp = split(&s).map_err(|e| e.to_string())?;
    let sum = (&sp.p_plus + &sp.p_minus).dist(&CMat::identity(2 * r));
    check(sum <= 1e-10, || format!("P+ + P- defect {sum:.3e}"))?;
    let idem = (&sp.p_plus * &sp.p_plus).dist(&sp.p_plus);
    check(idem <= 1e-10 * sp.p_plus.frobenius(), || format!("idempotence defect {idem:.3e}"))?;
    check(sp.frame_plus.len() == r && sp.frame_minus.len() == r, || "half ranks differ".into())
}

fn green(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let grid = CylinderGrid::new(rng.random_range(3..9), rng.random_range(3..10)).map_err(|e| e.to_string())?;
    let st = DiracStencil { grid, r: rng.random_range(1..3) };
    let u: Vec<C64> = (0..st.dim()).map(|_| random_c64(rng)).collect();
    let v: Vec<C64> = (0..st.dim()).map(|_| random_c64(rng)).collect();
    let g = green_defect(&st, SymbolConvention::MinusI, &u, &v).map_err(|e| e.to_string())?;
    check(g.defect.norm() <= 1e-12 * g.scale, || format!("defect {:.3e} at scale {:.3e}", g.defect.norm(), g.scale))
}

fn chern_gauge(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let mass = [-3.0, -1.0, 1.0, 3.0][rng.random_range(0..4)];
    let w = AutomorphismField::Winding { k_theta: rng.random_range(-2..=2), k_s: rng.random_range(-2..=2), mass };
    let spec = LoopFamilySpec::dirac("p", 2, AutomorphismField::Constant(CMat::identity(2)), w).map_err(|e| e.to_string())?;
    for field in build_f_field(&spec, 24, 24).map_err(|e| e.to_string())? {
        if field.rank == 0 {
            continue;
        }
        let base = chern_plaquettes(&field).map_err(|e| e.to_string())?;
        let gauges: Vec<CMat> = (0..24 * 24).map(|_| random_unitary(rng, field.rank)).collect();
        let moved = chern_plaquettes(&field.regauged(&gauges)).map_err(|e| e.to_string())?;
        check(moved.raw == base.raw, || format!("gauge changed {} to {}", base.raw, moved.raw))?;
    }
    Ok(())
}

fn random_toy(rng: &mut ChaCha8Rng) -> (indexlab_core::spectral::DiscreteFamily, i64) {
    let blocks: Vec<RotorBlock> = (0..rng.random_range(0..3))
        .map(|_| RotorBlock {
            amplitude: rng.random_range(1.8..2.4),
            offset: rng.random_range(0.0..1.0),
            direction: if rng.random_bool(0.5) { 1 } else { -1 },
            unresolved: rng.random_range(0..2),
        })
        .collect();
    let expected = blocks.iter().map(|b| b.expected_flow()).sum();
    (toy_rotor_family("toy", &blocks, &[0.7, -1.3]), expected)
}

fn flow_additivity(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let (f, ef) = random_toy(rng);
    let (g, eg) = random_toy(rng);
    let a = spectral_flow(&f).map_err(|e| e.to_string())?;
    let b = spectral_flow(&g).map_err(|e| e.to_string())?;
    check(a == ef && b == eg, || format!("toy flows {a}, {b}, expected {ef}, {eg}"))?;
    let sum = direct_sum(&f, &g).and_then(|h| spectral_flow(&h)).map_err(|e| e.to_string())?;
    check(sum == a + b, || format!("sf(f+g) = {sum}, sf(f) + sf(g) = {}", a + b))
}

fn random_poly(rng: &mut ChaCha8Rng, n: usize) -> IntPoly {
    let mut p = IntPoly::zero(n);
    for _ in 0..rng.random_range(0..5) {
        let e: Vec<u32> = (0..n).map(|_| rng.random_range(0..4)).collect();
        p.add_term(e, rng.random_range(-5i64..6).into());
    }
    p
}

fn ring_map(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let n = rng.random_range(2..5);
    let (p, q) = (random_poly(rng, n), random_poly(rng, n));
    let (rp, rq) = (reduce_mod_jn(&p, n), reduce_mod_jn(&q, n));
    let lhs = reduce_mod_jn(&p.mul(&q), n);
    let rhs = reduce_mod_jn(&rp.lift().mul(&rq.lift()), n);
    check(lhs == rhs, || format!("reduce(pq) != reduce(reduce(p) reduce(q)) for n = {n}"))
}

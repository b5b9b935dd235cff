mod common;

use indexlab_core::linalg::{frame_projector, CMat};
use indexlab_core::topo::{
    build_f_field, chern_number, chern_plaquettes, empty_field, flux_csv, index_from_fields, realize_family,
    topological_index, winding_prescription, winding_vector, AutomorphismField, LoopFamilySpec, TorusSubbundleField,
    COMPONENT_ORIENTATION,
};
use indexlab_core::Error;
use proptest::prelude::*;

use common::*;

const N: usize = 24;

fn constant(m: CMat) -> AutomorphismField {
    AutomorphismField::Constant(m)
}

#[test]
fn plus_and_minus_identity_fields() {
    let plus = build_f_field(&LoopFamilySpec::dir_plus().unwrap(), 6, 5).unwrap();
    assert!(plus.iter().all(|f| f.rank == 0));
    let minus = build_f_field(&LoopFamilySpec::dir_minus().unwrap(), 6, 5).unwrap();
    for f in &minus {
        assert_eq!(f.rank, 2);
        for k in 0..30 {
            assert!(frame_projector(2, &f.frames[k]).dist(&CMat::identity(2)) < 1e-12);
        }
    }
}

#[test]
fn winding_field_has_rank_one_and_nonvanishing_d() {
    let fields = build_f_field(&LoopFamilySpec::winding(1, 1, 1.0).unwrap(), N, N).unwrap();
    assert_eq!(fields[0].rank, 0);
    assert_eq!(fields[1].rank, 1);
    let mut smallest = f64::INFINITY;
    for i in 0..N {
        for j in 0..N {
            let d = winding_vector(1, 1, 1.0, 2.0 * std::f64::consts::PI * i as f64 / N as f64, 2.0 * std::f64::consts::PI * j as f64 / N as f64);
            smallest = smallest.min((d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt());
        }
    }
    assert!(smallest > 0.5);
}

#[test]
fn chern_number_examples() {
    assert_eq!(chern_number(&empty_field(N, N, 2, 1)).unwrap(), 0);
    let e = vec![vec![indexlab_core::linalg::ONE, indexlab_core::linalg::ZERO]];
    let flat = TorusSubbundleField::from_frames(N, N, 2, vec![e; N * N], 0, 1).unwrap();
    let r = chern_plaquettes(&flat).unwrap();
    assert_eq!(r.raw, 0);
    assert!(r.flux.iter().all(|f| *f == 0.0));
    let raw = |m: f64| chern_plaquettes(&winding_prescription(1, 1, m, N, N, 1).unwrap()).unwrap().raw;
    assert_eq!(raw(3.0), 0);
    assert_eq!(raw(1.0).abs(), 1);
    assert_eq!(raw(-1.0), -raw(1.0));
    assert_eq!(raw(1.0), berry_chern(1, 1, 1.0, 128).round() as i64);
}

#[test]
fn index_examples() {
    let id = CMat::identity(2);
    for (a, b) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
        let spec = LoopFamilySpec::dirac("pm", 2, constant(id.scale_real(a)), constant(id.scale_real(b))).unwrap();
        assert_eq!(topological_index(&spec, 8, 8).unwrap().total, 0);
    }
    let lc = LoopFamilySpec::locally_constant(2, 0.3).unwrap();
    assert_eq!(topological_index(&lc, N, N).unwrap().total, 0);
    let w = topological_index(&LoopFamilySpec::winding(1, 1, 1.0).unwrap(), N, N).unwrap();
    assert_eq!(w.per_component, vec![0, COMPONENT_ORIENTATION[1] as i64]);
}

#[test]
fn coarse_lattice_is_reported() {
    let field = winding_prescription(6, 1, 1.0, 4, 4, 1).unwrap();
    assert!(matches!(chern_plaquettes(&field), Err(Error::GridTooCoarse(_))));
}

#[test]
fn rank_jump_is_reported() {
    let e = vec![indexlab_core::linalg::ONE, indexlab_core::linalg::ZERO];
    let frames = vec![vec![e.clone()], vec![]];
    assert!(matches!(
        TorusSubbundleField::from_frames(2, 1, 2, frames, 0, 1),
        Err(Error::RankJump { i: 1, j: 0, expected: 1, found: 0, .. })
    ));
    let t = AutomorphismField::Custom {
        dim: 2,
        frequency: Some(1),
        f: std::sync::Arc::new(|theta: f64, _| CMat::diag_real(&[1.0, theta.cos()])),
    };
    let spec = LoopFamilySpec::dirac("jump", 2, constant(CMat::identity(2)), t).unwrap();
    assert!(build_f_field(&spec, 3, 2).is_err());
}

#[test]
fn realize_round_trips_and_trivial_prescriptions() {
    let empty = [empty_field(8, 8, 2, 0), empty_field(8, 8, 2, 1)];
    let spec = realize_family(&empty).unwrap();
    for c in 0..2 {
        assert!(spec.components[c].t.eval(0.3, 0.7).dist(&CMat::identity(2)) < 1e-12);
    }
    let full_frames = vec![CMat::identity(2).columns(); 64];
    let full = [
        TorusSubbundleField::from_frames(8, 8, 2, full_frames.clone(), 0, 1).unwrap(),
        TorusSubbundleField::from_frames(8, 8, 2, full_frames, 1, -1).unwrap(),
    ];
    let spec = realize_family(&full).unwrap();
    assert!(spec.components[1].t.eval(1.1, 0.2).dist(&CMat::identity(2).scale_real(-1.0)) < 1e-12);

    let presc = [empty_field(N, N, 2, 0), winding_prescription(2, 1, 1.0, N, N, 1).unwrap()];
    let spec = realize_family(&presc).unwrap();
    let rebuilt = build_f_field(&spec, N, N).unwrap();
    for k in 0..N * N {
        assert!(frame_projector(2, &rebuilt[1].frames[k]).dist(&frame_projector(2, &presc[1].frames[k])) <= 1e-10);
    }
    assert_eq!(index_from_fields(&rebuilt).unwrap().total, index_from_fields(&presc).unwrap().total);

    let mut too_big = empty_field(4, 4, 2, 0);
    too_big.rank = 3;
    assert!(matches!(realize_family(&[too_big, empty_field(4, 4, 2, 1)]), Err(Error::RankTooLarge { .. })));
}

#[test]
fn flux_csv_layout() {
    let r = chern_plaquettes(&winding_prescription(1, 1, 1.0, 4, 3, 1).unwrap()).unwrap();
    let csv = flux_csv(&[(1, 4, &r)]);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "component,i,j,flux");
    assert_eq!(lines.len(), 13);
    assert!(lines[6].starts_with("1,1,1,"));
}

fn random_spec(rng: &mut rand_chacha::ChaCha8Rng) -> LoopFamilySpec {
    use rand::Rng;
    let kt = rng.random_range(-2..=2);
    let ks = rng.random_range(-2..=2);
    let mass = [-3.0, -1.0, 1.0, 3.0][rng.random_range(0..4)];
    let w = AutomorphismField::Winding { k_theta: kt, k_s: ks, mass };
    let other = constant(CMat::identity(2).scale_real(if rng.random_bool(0.5) { 1.0 } else { -1.0 }));
    if rng.random_bool(0.5) {
        LoopFamilySpec::dirac("r", 2, w, other).unwrap()
    } else {
        LoopFamilySpec::dirac("r", 2, other, w).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn plaquette_sum_is_integral_and_gauge_invariant(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let spec = random_spec(&mut rng);
        for field in build_f_field(&spec, N, N).unwrap() {
            let base = chern_plaquettes(&field).unwrap();
            prop_assert!(base.residue < 1e-6);
            let gauges: Vec<CMat> = (0..N * N).map(|_| random_unitary(&mut rng, field.rank.max(1))).collect();
            let gauged = if field.rank == 0 { field.clone() } else { field.regauged(&gauges) };
            let g = chern_plaquettes(&gauged).unwrap();
            prop_assert_eq!(g.raw, base.raw);
            prop_assert_eq!(g.chern, base.chern);
        }
    }

    #[test]
    fn lattice_doubling_is_stable(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let spec = random_spec(&mut rng);
        let coarse = topological_index(&spec, N, N).unwrap();
        let fine = topological_index(&spec, 2 * N, 2 * N).unwrap();
        prop_assert_eq!(coarse.per_component, fine.per_component);
    }

    #[test]
    fn index_is_additive(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let (a, b) = (random_spec(&mut rng), random_spec(&mut rng));
        let ia = topological_index(&a, N, N).unwrap().total;
        let ib = topological_index(&b, N, N).unwrap().total;
        prop_assert_eq!(topological_index(&a.direct_sum(&b).unwrap(), N, N).unwrap().total, ia + ib);
        let fa = build_f_field(&a, N, N).unwrap();
        let fb = build_f_field(&b, N, N).unwrap();
        let sum: Vec<_> = fa.iter().zip(&fb).map(|(x, y)| x.direct_sum(y).unwrap()).collect();
        prop_assert_eq!(index_from_fields(&sum).unwrap().total, ia + ib);
    }

    #[test]
    fn reversal_and_orientation_negate(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let spec = random_spec(&mut rng);
        let base = topological_index(&spec, N, N).unwrap();
        prop_assert_eq!(topological_index(&spec.reversed(), N, N).unwrap().total, -base.total);
        let mut flipped = spec.clone();
        flipped.components[1].orientation *= -1;
        let f = topological_index(&flipped, N, N).unwrap();
        prop_assert_eq!(f.per_component[0], base.per_component[0]);
        prop_assert_eq!(f.per_component[1], -base.per_component[1]);
    }
}

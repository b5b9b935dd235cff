//! Scenario files: JSON documents naming a loop of boundary problems and the discretization used
//! to evaluate it. See `scenarios/` for examples and README.md for the schema.

use indexlab_core::linalg::{c, CMat, C64};
use indexlab_core::topo::{
    empty_field, realize_family, winding_prescription, AutomorphismField, LatticeSamples, LoopFamilySpec,
    TorusSubbundleField, COMPONENT_ORIENTATION,
};
use serde::{Deserialize, Serialize};

use crate::Failure;

pub const SCHEMA_VERSION: u32 = 1;

const MAX_FREQUENCY: i32 = 8;
const CRITICAL_MASSES: [f64; 3] = [-2.0, 0.0, 2.0];
const MASS_MARGIN: f64 = 0.05;

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct GridDef {
    pub n_t: usize,
    pub n_theta: usize,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct LatticeDef {
    pub n_theta: usize,
    pub n_s: usize,
}

/// A complex entry, written either as a bare real number or as `[re, im]`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl Entry {
    fn value(self) -> C64 {
        match self {
            Entry::Real(x) => c(x, 0.0),
            Entry::Complex([re, im]) => c(re, im),
        }
    }
}

/// Row-major matrix.
pub type MatrixDef = Vec<Vec<Entry>>;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldDef {
    Constant { matrix: MatrixDef },
    Winding { k_theta: i32, k_s: i32, mass: f64 },
    ThetaWinding { k_theta: i32, mass: f64 },
    /// Node values on θ_i = 2πi/n_theta, s_j = j/n_s, listed with i fastest.
    Sampled { n_theta: usize, n_s: usize, values: Vec<MatrixDef> },
    DirectSum { blocks: Vec<FieldDef> },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PrescribedDef {
    Empty,
    Full,
    Winding { k_theta: i32, k_s: i32, mass: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FamilyDef {
    Winding { k_theta: i32, k_s: i32, mass: f64 },
    DirPlus,
    DirMinus,
    LocallyConstant { k_theta: i32, mass: f64 },
    /// Odd Dirac operator on ℂʳ ⊕ ℂʳ with explicit T fields on t = 0 and t = 1.
    Inline { r: usize, t0: FieldDef, t1: FieldDef },
    /// Subbundles F of E⁻ over both boundary tori, realized by T = I − 2Π_F.
    Prescription { n_theta: usize, n_s: usize, components: [PrescribedDef; 2] },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    pub family: FamilyDef,
    #[serde(default = "default_grid")]
    pub grid: GridDef,
    #[serde(default = "default_lattice")]
    pub lattice: LatticeDef,
    #[serde(default = "default_window")]
    pub window: f64,
    #[serde(default = "default_n_params")]
    pub n_params: usize,
    /// Extra grids on which the spectral flow is recomputed.
    #[serde(default)]
    pub ladder: Vec<GridDef>,
    /// Extra windows on which the spectral flow is recomputed.
    #[serde(default)]
    pub windows: Vec<f64>,
    #[serde(default)]
    pub seeds: Vec<u64>,
}

fn default_grid() -> GridDef {
    GridDef { n_t: 16, n_theta: 16 }
}

fn default_lattice() -> LatticeDef {
    LatticeDef { n_theta: 32, n_s: 32 }
}

fn default_window() -> f64 {
    1.0
}

fn default_n_params() -> usize {
    24
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::invalid(msg)
}

impl Scenario {
    pub fn builtin(name: &str) -> Result<Self, Failure> {
        let family = match name {
            "winding" => FamilyDef::Winding { k_theta: 1, k_s: 1, mass: 1.0 },
            "dir-plus" => FamilyDef::DirPlus,
            "dir-minus" => FamilyDef::DirMinus,
            "locally-constant" => FamilyDef::LocallyConstant { k_theta: 2, mass: 0.3 },
            other => return Err(invalid(format!("unknown builtin '{other}'"))),
        };
        Ok(Scenario {
            schema_version: SCHEMA_VERSION,
            name: name.to_string(),
            family,
            grid: default_grid(),
            lattice: default_lattice(),
            window: default_window(),
            n_params: default_n_params(),
            ladder: vec![],
            windows: vec![],
            seeds: vec![],
        })
    }

    /// Reads a scenario from a path, or a builtin from `builtin:<name>`.
    pub fn load(path: &str) -> Result<Self, Failure> {
        let s = match path.strip_prefix("builtin:") {
            Some(name) => Self::builtin(name)?,
            None => {
                let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{path}: {e}")))?;
                Self::parse(&text)?
            }
        };
        s.validate()?;
        Ok(s)
    }

    pub fn parse(text: &str) -> Result<Self, Failure> {
        let v: serde_json::Value = serde_json::from_str(text).map_err(|e| invalid(format!("malformed JSON: {e}")))?;
        match v.get("schema_version").and_then(|x| x.as_u64()) {
            Some(x) if x == SCHEMA_VERSION as u64 => {}
            Some(x) => return Err(invalid(format!("unsupported schema_version {x}, expected {SCHEMA_VERSION}"))),
            None => return Err(invalid("missing schema_version")),
        }
        serde_json::from_value(v).map_err(|e| invalid(format!("scenario: {e}")))
    }

    pub fn validate(&self) -> Result<(), Failure> {
        if self.name.is_empty() {
            return Err(invalid("empty scenario name"));
        }
        for g in std::iter::once(&self.grid).chain(&self.ladder) {
            if !(3..=64).contains(&g.n_t) || !(3..=64).contains(&g.n_theta) {
                return Err(invalid(format!("grid {}x{} outside 3..=64", g.n_t, g.n_theta)));
            }
        }
        if !(4..=512).contains(&self.lattice.n_theta) || !(4..=512).contains(&self.lattice.n_s) {
            return Err(invalid("lattice dimensions must lie in 4..=512"));
        }
        for w in std::iter::once(&self.window).chain(&self.windows) {
            if !(w.is_finite() && *w > 0.0) {
                return Err(invalid(format!("window {w} must be positive")));
            }
        }
        if !(4..=4096).contains(&self.n_params) {
            return Err(invalid("n_params must lie in 4..=4096"));
        }
        match &self.family {
            FamilyDef::Winding { k_theta, k_s, mass } => {
                check_frequency(*k_theta)?;
                check_frequency(*k_s)?;
                check_mass(*mass)?;
            }
            FamilyDef::LocallyConstant { k_theta, mass } => {
                check_frequency(*k_theta)?;
                if !mass.is_finite() {
                    return Err(invalid("mass must be finite"));
                }
            }
            FamilyDef::DirPlus | FamilyDef::DirMinus => {}
            FamilyDef::Inline { r, t0, t1 } => {
                if *r == 0 || *r > 8 {
                    return Err(invalid("inline rank r must lie in 1..=8"));
                }
                for t in [t0, t1] {
                    check_field(t)?;
                }
            }
            FamilyDef::Prescription { n_theta, n_s, components } => {
                if *n_theta < 4 || *n_s < 4 {
                    return Err(invalid("prescription lattice must be at least 4x4"));
                }
                for p in components {
                    if let PrescribedDef::Winding { k_theta, k_s, mass } = p {
                        check_frequency(*k_theta)?;
                        check_frequency(*k_s)?;
                        check_mass(*mass)?;
                    }
                }
            }
        }
        // surfaces dimension and Hermiticity problems at load time
        self.to_spec()?;
        Ok(())
    }

    pub fn to_spec(&self) -> Result<LoopFamilySpec, Failure> {
        let spec = match &self.family {
            FamilyDef::Winding { k_theta, k_s, mass } => LoopFamilySpec::winding(*k_theta, *k_s, *mass)?,
            FamilyDef::DirPlus => LoopFamilySpec::dir_plus()?,
            FamilyDef::DirMinus => LoopFamilySpec::dir_minus()?,
            FamilyDef::LocallyConstant { k_theta, mass } => LoopFamilySpec::locally_constant(*k_theta, *mass)?,
            FamilyDef::Inline { r, t0, t1 } => LoopFamilySpec::dirac(&self.name, *r, field(t0)?, field(t1)?)?,
            FamilyDef::Prescription { n_theta, n_s, components } => {
                let fields = components
                    .iter()
                    .enumerate()
                    .map(|(k, p)| prescribed(p, *n_theta, *n_s, k))
                    .collect::<Result<Vec<_>, Failure>>()?;
                realize_family(&fields)?
            }
        };
        Ok(spec)
    }

    /// Canonical JSON used for hashing.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("scenario serializes")
    }
}

fn check_frequency(k: i32) -> Result<(), Failure> {
    if k.abs() > MAX_FREQUENCY {
        return Err(invalid(format!("frequency {k} exceeds {MAX_FREQUENCY}")));
    }
    Ok(())
}

fn check_mass(m: f64) -> Result<(), Failure> {
    if !m.is_finite() || CRITICAL_MASSES.iter().any(|c| (m - c).abs() < MASS_MARGIN) {
        return Err(invalid(format!("mass {m} is not finite or lies within {MASS_MARGIN} of a gap closing")));
    }
    Ok(())
}

fn check_field(f: &FieldDef) -> Result<(), Failure> {
    match f {
        FieldDef::Winding { k_theta, k_s, mass } => {
            check_frequency(*k_theta)?;
            check_frequency(*k_s)?;
            check_mass(*mass)
        }
        FieldDef::ThetaWinding { k_theta, .. } => check_frequency(*k_theta),
        FieldDef::DirectSum { blocks } => blocks.iter().try_for_each(check_field),
        _ => Ok(()),
    }
}

fn matrix(m: &MatrixDef) -> Result<CMat, Failure> {
    let rows = m.len();
    let entries: Vec<C64> = m.iter().flatten().map(|e| e.value()).collect();
    if rows == 0 || m.iter().any(|r| r.len() != rows) {
        return Err(invalid("matrices must be square and nonempty"));
    }
    let a = CMat::from_row_major(rows, rows, &entries)?;
    if a.hermitian_defect() > 1e-12 {
        return Err(invalid("boundary automorphisms must be Hermitian"));
    }
    Ok(a)
}

fn field(f: &FieldDef) -> Result<AutomorphismField, Failure> {
    Ok(match f {
        FieldDef::Constant { matrix: m } => AutomorphismField::Constant(matrix(m)?),
        FieldDef::Winding { k_theta, k_s, mass } => {
            AutomorphismField::Winding { k_theta: *k_theta, k_s: *k_s, mass: *mass }
        }
        FieldDef::ThetaWinding { k_theta, mass } => AutomorphismField::ThetaWinding { k_theta: *k_theta, mass: *mass },
        FieldDef::Sampled { n_theta, n_s, values } => {
            let values = values.iter().map(matrix).collect::<Result<Vec<_>, _>>()?;
            AutomorphismField::Sampled(LatticeSamples::new(*n_theta, *n_s, values)?)
        }
        FieldDef::DirectSum { blocks } => {
            AutomorphismField::DirectSum(blocks.iter().map(field).collect::<Result<Vec<_>, _>>()?)
        }
    })
}

fn prescribed(p: &PrescribedDef, n_theta: usize, n_s: usize, component: usize) -> Result<TorusSubbundleField, Failure> {
    Ok(match p {
        PrescribedDef::Empty => empty_field(n_theta, n_s, 2, component),
        PrescribedDef::Full => TorusSubbundleField::from_frames(
            n_theta,
            n_s,
            2,
            vec![CMat::identity(2).columns(); n_theta * n_s],
            component,
            COMPONENT_ORIENTATION[component],
        )?,
        PrescribedDef::Winding { k_theta, k_s, mass } => {
            winding_prescription(*k_theta, *k_s, *mass, n_theta, n_s, component)?
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_round_trip_through_json() {
        for name in ["winding", "dir-plus", "dir-minus", "locally-constant"] {
            let s = Scenario::builtin(name).unwrap();
            s.validate().unwrap();
            assert_eq!(Scenario::parse(&s.canonical()).unwrap(), s);
        }
        assert!(Scenario::builtin("torus").is_err());
    }

    #[test]
    fn schema_version_is_required() {
        let e = Scenario::parse(r#"{"name": "x", "family": {"kind": "dir-plus"}}"#).unwrap_err();
        assert_eq!(e.code, 3);
        let e = Scenario::parse(r#"{"schema_version": 9, "name": "x", "family": {"kind": "dir-plus"}}"#).unwrap_err();
        assert!(e.message.contains("schema_version"));
    }

    #[test]
    fn builtin_ranges_are_checked() {
        let mut s = Scenario::builtin("winding").unwrap();
        s.family = FamilyDef::Winding { k_theta: 1, k_s: 1, mass: 2.0 };
        assert!(s.validate().is_err());
        s.family = FamilyDef::Winding { k_theta: 20, k_s: 1, mass: 1.0 };
        assert!(s.validate().is_err());
        s.family = FamilyDef::Winding { k_theta: 1, k_s: 1, mass: 1.0 };
        s.window = -1.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn inline_fields_are_parsed() {
        let text = r#"{
            "schema_version": 1,
            "name": "inline",
            "family": {"kind": "inline", "r": 1,
                "t0": {"kind": "constant", "matrix": [[1.0]]},
                "t1": {"kind": "constant", "matrix": [[[-2.0, 0.0]]]}}
        }"#;
        let s = Scenario::parse(text).unwrap();
        s.validate().unwrap();
        let spec = s.to_spec().unwrap();
        assert_eq!(spec.components[1].t.eval(0.0, 0.0)[(0, 0)], c(-2.0, 0.0));
        let bad = text.replace("[[1.0]]", "[[1.0, 2.0], [0.0, 1.0]]").replace("\"r\": 1", "\"r\": 2");
        assert!(Scenario::parse(&bad).unwrap().validate().is_err());
    }
}

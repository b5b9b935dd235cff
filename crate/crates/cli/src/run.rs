use std::fmt::Write as _;

use indexlab_core::ktheory::{pi_star_b, verify_dn, verify_nun, DN_CAP, PI_STAR_B_CAP};
use indexlab_core::spectral::{analyze, assemble_with, gap_probe, AssembleOptions, CylinderGrid, FlowOptions, FlowReport};
use indexlab_core::topo::{build_f_field, chern_plaquettes, flux_csv, LoopFamilySpec};
use serde_json::{json, Value};

use crate::plot;
use crate::record::{
    AnalyticalSection, Cache, LadderEntry, RunOutput, RunRecord, TopologicalSection, Verdict, EIGEN_CSV, FLUX_CSV,
};
use crate::scenario::{GridDef, LatticeDef, Scenario};
use crate::{Failure, EXIT_INVALID, EXIT_MISMATCH, EXIT_OK};

/// Largest n accepted by the `ktheory` verb without reporting an error.
pub const KTHEORY_N_MAX: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verb {
    Verify,
    Sf,
    Chern,
    Gap,
}

impl Verb {
    pub fn name(self) -> &'static str {
        match self {
            Verb::Verify => "verify",
            Verb::Sf => "sf",
            Verb::Chern => "chern",
            Verb::Gap => "gap",
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub grid: Option<(usize, usize)>,
    pub lattice: Option<(usize, usize)>,
    pub window: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, s: &Scenario) -> Result<Scenario, Failure> {
        let mut s = s.clone();
        if let Some((n_t, n_theta)) = self.grid {
            s.grid = GridDef { n_t, n_theta };
        }
        if let Some((n_theta, n_s)) = self.lattice {
            s.lattice = LatticeDef { n_theta, n_s };
        }
        if let Some(w) = self.window {
            s.window = w;
        }
        s.validate()?;
        Ok(s)
    }
}

pub fn topological(spec: &LoopFamilySpec, lattice: LatticeDef) -> Result<(TopologicalSection, String), Failure> {
    let fields = build_f_field(spec, lattice.n_theta, lattice.n_s)?;
    let results = fields.iter().map(chern_plaquettes).collect::<Result<Vec<_>, _>>()?;
    let per_component: Vec<i64> = results.iter().map(|r| r.chern).collect();
    let section = TopologicalSection {
        total: per_component.iter().sum(),
        per_component,
        min_link: results.iter().map(|r| r.min_link).reduce(f64::min),
        max_residue: results.iter().map(|r| r.residue).fold(0.0, f64::max),
    };
    let rows: Vec<(usize, usize, &_)> = results.iter().enumerate().map(|(c, r)| (c, lattice.n_theta, r)).collect();
    Ok((section, flux_csv(&rows)))
}

pub fn flow(spec: &LoopFamilySpec, s: &Scenario, grid: GridDef, window: f64, cayley: bool) -> Result<FlowReport, Failure> {
    let g = CylinderGrid::new(grid.n_t, grid.n_theta)?;
    let opts = AssembleOptions { window, n_params: s.n_params, ..Default::default() };
    let family = assemble_with(spec, &g, &opts)?;
    Ok(analyze(&family, &FlowOptions { cayley, ..Default::default() })?)
}

fn section(r: &FlowReport) -> AnalyticalSection {
    AnalyticalSection {
        spectral_flow: r.spectral_flow,
        cayley_flow: r.cayley_flow,
        unresolved_flow: r.unresolved_flow,
        whole_spectrum_flow: r.whole_spectrum_flow,
        outside_flow: r.outside_flow,
        n_samples: r.n_samples,
        defect_max: r.defect_max,
        min_abs_eigenvalue: r.min_abs_eigenvalue.is_finite().then_some(r.min_abs_eigenvalue),
    }
}

/// Window eigenvalues at every accepted sample: columns s, index, eigenvalue, resolved.
pub fn eigen_csv(r: &FlowReport) -> String {
    let mut out = String::from("s,index,eigenvalue,resolved\n");
    for sample in &r.samples {
        for (k, (lam, res)) in sample.eigenvalues.iter().zip(&sample.resolved).enumerate() {
            let _ = writeln!(out, "{:.12},{k},{lam:.12e},{}", sample.s, u8::from(*res));
        }
    }
    out
}

fn ladder(spec: &LoopFamilySpec, s: &Scenario) -> Result<Vec<LadderEntry>, Failure> {
    let mut out = Vec::new();
    for g in &s.ladder {
        let r = flow(spec, s, *g, s.window, false)?;
        out.push(LadderEntry { n_t: g.n_t, n_theta: g.n_theta, window: s.window, spectral_flow: r.spectral_flow });
    }
    for &w in &s.windows {
        let r = flow(spec, s, s.grid, w, false)?;
        out.push(LadderEntry { n_t: s.grid.n_t, n_theta: s.grid.n_theta, window: w, spectral_flow: r.spectral_flow });
    }
    Ok(out)
}

fn gap(spec: &LoopFamilySpec, s: &Scenario) -> Result<f64, Failure> {
    Ok(gap_probe(spec, &CylinderGrid::new(s.grid.n_t, s.grid.n_theta)?)?)
}

/// Runs a verb on a validated scenario.
pub fn compute(verb: Verb, s: &Scenario) -> Result<RunOutput, Failure> {
    let spec = s.to_spec()?;
    let mut record = RunRecord::new(verb.name(), s);
    let mut artifacts = Vec::new();
    let mut eigen = None;
    match verb {
        Verb::Verify => {
            let (topo, flux) = topological(&spec, s.lattice)?;
            let report = flow(&spec, s, s.grid, s.window, true)?;
            let a = section(&report);
            let matched = topo.total == a.spectral_flow && a.cayley_flow == Some(a.spectral_flow);
            if topo.total == 0 && a.spectral_flow == 0 {
                record.gap = Some(gap(&spec, s)?);
            }
            record.ladder = ladder(&spec, s)?;
            let stable = record.ladder.iter().all(|l| l.spectral_flow == a.spectral_flow);
            record.verdict = Some(if matched && stable { Verdict::Match } else { Verdict::Mismatch });
            record.topological = Some(topo);
            record.analytical = Some(a);
            eigen = Some(eigen_csv(&report));
            artifacts.push((FLUX_CSV.to_string(), flux));
        }
        Verb::Sf => {
            let report = flow(&spec, s, s.grid, s.window, true)?;
            record.analytical = Some(section(&report));
            eigen = Some(eigen_csv(&report));
        }
        Verb::Chern => {
            let (topo, flux) = topological(&spec, s.lattice)?;
            record.topological = Some(topo);
            artifacts.push((FLUX_CSV.to_string(), flux));
        }
        Verb::Gap => record.gap = Some(gap(&spec, s)?),
    }
    if let Some(csv) = eigen {
        artifacts.push((plot::SF_SVG.to_string(), plot::spectral_flow_svg(&csv, s.window)?));
        artifacts.insert(0, (EIGEN_CSV.to_string(), csv));
    }
    if let Some((_, flux)) = artifacts.iter().find(|(n, _)| n == FLUX_CSV) {
        let svg = plot::flux_svg(flux)?;
        artifacts.push((plot::FLUX_SVG.to_string(), svg));
    }
    Ok(RunOutput { record, artifacts })
}

/// Output of a scenario verb: the files to write, the parsed record and whether it came from cache.
pub struct Executed {
    pub files: Vec<(String, Vec<u8>)>,
    pub record: RunRecord,
    pub cached: bool,
}

pub fn execute(verb: Verb, s: &Scenario, cache: Option<&Cache>) -> Result<Executed, Failure> {
    let hash = crate::record::run_hash(verb.name(), s);
    if let Some(cache) = cache {
        if let Some(files) = cache.load(&hash)? {
            let text = files
                .iter()
                .find(|(n, _)| n == crate::record::RECORD_FILE)
                .map(|(_, b)| String::from_utf8_lossy(b).into_owned())
                .ok_or_else(|| Failure::internal("cache entry without record"))?;
            let record: RunRecord =
                serde_json::from_str(&text).map_err(|e| Failure::internal(format!("corrupt cache entry {hash}: {e}")))?;
            return Ok(Executed { files, record, cached: true });
        }
    }
    let out = compute(verb, s)?;
    if let Some(cache) = cache {
        cache.store(&out)?;
    }
    let files = out.files().into_iter().map(|(n, t)| (n, t.into_bytes())).collect();
    Ok(Executed { files, record: out.record, cached: false })
}

pub fn exit_code(record: &RunRecord) -> u8 {
    match record.verdict {
        Some(Verdict::Mismatch) => EXIT_MISMATCH,
        _ => EXIT_OK,
    }
}

/// Exact coinvariant-algebra checks for n = 2..=n_max, as a JSON report and exit code.
pub fn ktheory(n_max: usize) -> (Value, u8) {
    let mut errors = Vec::new();
    let mut dn = Vec::new();
    let mut nun = Vec::new();
    let mut pib = Vec::new();
    let mut all = true;
    if n_max < 2 {
        errors.push(format!("n_max must be at least 2, got {n_max}"));
    }
    if n_max > KTHEORY_N_MAX {
        errors.push(format!("n_max {n_max} exceeds {KTHEORY_N_MAX}"));
    }
    for n in 2..=n_max {
        if n <= DN_CAP {
            match (verify_dn(n), verify_nun(n)) {
                (Ok(d), Ok(u)) => {
                    all &= d.passed && u.passed;
                    dn.push(json!(d));
                    nun.push(json!(u));
                }
                (Err(e), _) | (_, Err(e)) => errors.push(e.to_string()),
            }
        } else {
            errors.push(format!("verify_dn: input too large for n = {n}"));
        }
        if n <= PI_STAR_B_CAP {
            match pi_star_b(n) {
                Ok((_, w)) => {
                    all &= w.passed;
                    pib.push(json!(w));
                }
                Err(e) => errors.push(e.to_string()),
            }
        } else if n_max > KTHEORY_N_MAX {
            if let Err(e) = pi_star_b(n) {
                errors.push(e.to_string());
            }
        }
    }
    let code = if !all {
        EXIT_MISMATCH
    } else if !errors.is_empty() {
        EXIT_INVALID
    } else {
        EXIT_OK
    };
    let report = json!({
        "n_max": n_max,
        "all_passed": all && errors.is_empty(),
        "verify_dn": dn,
        "verify_nun": nun,
        "pi_star_b": pib,
        "errors": errors,
    });
    (report, code)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ktheory_small_report_is_green() {
        let (r, code) = ktheory(2);
        assert_eq!(code, EXIT_OK);
        assert_eq!(r["verify_dn"].as_array().unwrap().len(), 1);
        assert_eq!(r["pi_star_b"][0]["coefficient"], "-2");
    }

    #[test]
    fn ktheory_reports_oversized_requests() {
        let (r, code) = ktheory(6);
        assert_eq!(code, EXIT_INVALID);
        assert_eq!(r["verify_dn"].as_array().unwrap().len(), 5);
        assert_eq!(r["pi_star_b"].as_array().unwrap().len(), 3);
        assert!(r["errors"].as_array().unwrap().iter().any(|e| e.as_str().unwrap().contains("pi_star_b")));
    }

    #[test]
    fn dir_plus_chern_is_zero() {
        let mut s = Scenario::builtin("dir-plus").unwrap();
        s.lattice = LatticeDef { n_theta: 8, n_s: 8 };
        let out = compute(Verb::Chern, &s).unwrap();
        assert_eq!(out.record.topological.unwrap().total, 0);
        assert!(out.artifacts.iter().any(|(n, _)| n == FLUX_CSV));
    }
}

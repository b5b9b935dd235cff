use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use indexlab_cli::record::{self, write_files, Cache};
use indexlab_cli::run::{self, Overrides, Verb};
use indexlab_cli::scenario::Scenario;
use indexlab_cli::{parse_pair, plot, properties, Failure, EXIT_MISMATCH, EXIT_OK};

#[derive(Parser)]
#[command(name = "indexlab", version, about = "Compare topological and analytical indices of loops of boundary problems")]
struct Cli {
    #[command(subcommand)]
    verb: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Scenario JSON file, or builtin:<winding|dir-plus|dir-minus|locally-constant>.
    #[arg(long)]
    scenario: String,
    /// Operator grid as NtxNθ.
    #[arg(long, value_parser = parse_pair)]
    grid: Option<(usize, usize)>,
    /// Chern lattice as NθxNs.
    #[arg(long, value_parser = parse_pair)]
    lattice: Option<(usize, usize)>,
    /// Energy window Λ.
    #[arg(long)]
    window: Option<f64>,
    /// Output directory; defaults to indexlab-out/<scenario name>.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Recompute even when a cached record exists, and do not store the result.
    #[arg(long)]
    no_cache: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Topological index against spectral flow, with gap and ladder data.
    Verify(RunArgs),
    /// Spectral flow and Cayley flow only.
    Sf(RunArgs),
    /// Plaquette Chern numbers of F on both boundary tori.
    Chern(RunArgs),
    /// Smallest |eigenvalue| over the loop.
    Gap(RunArgs),
    /// Exact coinvariant-algebra identities.
    Ktheory {
        #[arg(long, default_value_t = run::KTHEORY_N_MAX)]
        n_max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regenerates SVG plots from a run directory.
    Plot {
        #[arg(long)]
        out: PathBuf,
    },
    /// Randomized invariant suites.
    Properties {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 100)]
        cases: usize,
        /// Takes the seeds listed in a scenario file.
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn scenario_verb(verb: Verb, args: &RunArgs) -> Result<u8, Failure> {
    let base = Scenario::load(&args.scenario)?;
    let overrides = Overrides { grid: args.grid, lattice: args.lattice, window: args.window };
    let s = overrides.apply(&base)?;
    let cache = (!args.no_cache).then(|| Cache::new(record::cache_dir()));
    let done = run::execute(verb, &s, cache.as_ref())?;
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from("indexlab-out").join(&s.name));
    write_files(&out, &done.files)?;
    let r = &done.record;
    println!("scenario {} ({}){}", s.name, &r.scenario_hash[..12], if done.cached { " [cached]" } else { "" });
    if let Some(t) = &r.topological {
        println!("ind_t = {} per component {:?}", t.total, t.per_component);
    }
    if let Some(a) = &r.analytical {
        let cayley = a.cayley_flow.map_or("-".to_string(), |c| c.to_string());
        println!(
            "ind_a = {} (cayley {cayley}, unresolved {}, whole spectrum {}, samples {})",
            a.spectral_flow, a.unresolved_flow, a.whole_spectrum_flow, a.n_samples
        );
    }
    if let Some(g) = r.gap {
        println!("gap = {g:.6}");
    }
    for l in &r.ladder {
        println!("ladder {}x{} window {}: sf = {}", l.n_t, l.n_theta, l.window, l.spectral_flow);
    }
    if let Some(v) = r.verdict {
        println!("{}", serde_json::to_string(&v).unwrap_or_default().trim_matches('"'));
    }
    println!("wrote {}", out.display());
    Ok(run::exit_code(r))
}

fn dispatch(cli: Cli) -> Result<u8, Failure> {
    match cli.verb {
        Command::Verify(a) => scenario_verb(Verb::Verify, &a),
        Command::Sf(a) => scenario_verb(Verb::Sf, &a),
        Command::Chern(a) => scenario_verb(Verb::Chern, &a),
        Command::Gap(a) => scenario_verb(Verb::Gap, &a),
        Command::Ktheory { n_max, out } => {
            let (report, code) = run::ktheory(n_max);
            let text = serde_json::to_string_pretty(&report).map_err(|e| Failure::internal(e.to_string()))? + "\n";
            if let Some(dir) = out {
                write_files(&dir, &[("ktheory.json".to_string(), text.clone().into_bytes())])?;
            }
            print!("{text}");
            Ok(code)
        }
        Command::Plot { out } => {
            for f in plot::emit(&out)? {
                println!("wrote {}", out.join(f).display());
            }
            Ok(EXIT_OK)
        }
        Command::Properties { seed, cases, scenario, out } => {
            let mut seeds: Vec<u64> = seed.into_iter().collect();
            if let Some(path) = scenario {
                seeds.extend(Scenario::load(&path)?.seeds);
            }
            if seeds.is_empty() {
                seeds.push(0);
            }
            let mut all = Vec::new();
            for s in seeds {
                for r in properties::run(s, cases) {
                    let status = if r.passed() { "PASS" } else { "FAIL" };
                    println!("seed {s} {:<24} {status} {}/{}", r.name, r.cases - r.failures, r.cases);
                    if let Some(f) = &r.first_failure {
                        println!("    {f}");
                    }
                    all.push((s, r));
                }
            }
            if let Some(dir) = out {
                let json = serde_json::to_string_pretty(&all).map_err(|e| Failure::internal(e.to_string()))? + "\n";
                write_files(&dir, &[("properties.json".to_string(), json.into_bytes())])?;
            }
            Ok(if all.iter().all(|(_, r)| r.passed()) { EXIT_OK } else { EXIT_MISMATCH })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}

//! Command-line front end. Exit codes: 0 all checks pass, 1 a check failed,
//! 2 the scenario or the command line is invalid.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use confsub::ambient::PRESET_NAMES;
use confsub::catalog::{CHART_NAMES, IMMERSION_NAMES};

use crate::config::{ConfigError, ScenarioConfig, Task};
use crate::tasks::run;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "confsub", version, about = "Conformal submanifold invariants: verification scenarios and reports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Pointwise identities on an immersion, or curvature identities on a chart.
    Verify(RunArgs),
    /// Gauss–Bonnet–Chern identity, compact or renormalized.
    Gbc(RunArgs),
    /// Renormalized integral of one integrand along an ε-ladder.
    Renorm(RunArgs),
    /// Formal minimal-graph expansion from boundary data.
    Expand(RunArgs),
    /// Rigidity integrals, their reductions and gaps.
    Rigidity(RunArgs),
    /// List builtin charts, immersions and invariant presets.
    Catalog,
    /// Print the JSON schema of scenario files.
    Schema,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Scenario file (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Report path; overrides `output` in the scenario.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Worker threads for quadrature.
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    /// Overrides `grid` in the scenario.
    #[arg(long, value_name = "N")]
    grid: Option<usize>,
    /// Overrides `seed` in the scenario.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
}

fn catalog_listing() -> String {
    let mut s = String::new();
    s.push_str("immersions:\n");
    let params = [
        ("affine_plane", "k, n"),
        ("equator_sphere", "k, n, radius"),
        ("clifford_torus", ""),
        ("generalized_clifford", "p, q"),
        ("totally_geodesic_hyperbolic", "k, n"),
        ("hyperbolic_cusp", ""),
        ("round_sphere_euclidean", "radius"),
        ("hyperbolic_graph", "profile | amplitude"),
    ];
    for name in IMMERSION_NAMES {
        let p = params.iter().find(|(n, _)| *n == name).map_or("", |(_, p)| p);
        s.push_str(&format!("  {name}({p})\n"));
    }
    s.push_str("  custom(coords, bounds, periodic, map; needs [target])\n");
    s.push_str("charts:\n");
    for name in CHART_NAMES {
        s.push_str(&format!("  {name}\n"));
    }
    s.push_str("  custom(coords, bounds, periodic, metric | diagonal)\n");
    s.push_str("invariant presets:\n");
    for name in PRESET_NAMES {
        s.push_str(&format!("  {name}\n"));
    }
    s.push_str("renorm integrands:\n  one\n  lo_norm2\n  mean_norm2\n  pfaffian\n  gbc(r)\n  expression\n  divergence(potential)\n");
    s
}

fn load(args: &RunArgs, task: Task) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| ConfigError::new("", format!("cannot read {}: {e}", args.config.display())))?;
    let mut config = ScenarioConfig::from_toml(&text)?;
    match config.task {
        Some(t) if t != task => {
            return Err(ConfigError::new("task", format!("scenario is for `{}` but `{}` was requested", t.name(), task.name())));
        }
        _ => config.task = Some(task),
    }
    if let Some(g) = args.grid {
        config.grid = Some(g);
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(o) = &args.out {
        config.output = Some(o.clone());
    }
    Ok(config)
}

fn execute(args: RunArgs, task: Task) -> i32 {
    if let Some(n) = args.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return EXIT_USAGE;
        }
        // A second call only fails when a pool exists already, which is harmless here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let config = match load(&args, task) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let report = match run(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let json = report.to_json();
    match &config.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, json + "\n") {
                eprintln!("error: cannot write {}: {e}", path.display());
                return EXIT_USAGE;
            }
        }
        None => println!("{json}"),
    }
    for c in &report.checks {
        let detail = match (c.residual, c.tolerance) {
            (Some(r), Some(t)) => format!(" residual {r:.3e} (tol {t:.1e})"),
            (Some(r), None) => format!(" residual {r:.3e}"),
            _ => String::new(),
        };
        eprintln!("{} {}{detail}", if c.pass { "PASS" } else { "FAIL" }, c.name);
    }
    if report.passed {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

pub fn main<I: IntoIterator<Item = OsString>>(args: I) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Verify(a) => execute(a, Task::Verify),
        Command::Gbc(a) => execute(a, Task::Gbc),
        Command::Renorm(a) => execute(a, Task::Renorm),
        Command::Expand(a) => execute(a, Task::Expand),
        Command::Rigidity(a) => execute(a, Task::Rigidity),
        Command::Catalog => {
            print!("{}", catalog_listing());
            EXIT_PASS
        }
        Command::Schema => {
            println!("{}", serde_json::to_string_pretty(&ScenarioConfig::schema()).expect("schema serializes"));
            EXIT_PASS
        }
    }
}

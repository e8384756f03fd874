use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use polycycle_core::graph::{classify_limit, export_dot, export_polylines_csv, trace_separatrices};
use polycycle_core::io::{parse_field_file, read_json, to_canonical_json, write_text};
use polycycle_core::morse_smale::check_weak_morse_smale;
use polycycle_core::pipeline::{reduce, Reduction};
use polycycle_core::rational;
use polycycle_core::secant::{estimate_accumulation, export_secant_csv, integrate_orbit, secant_samples};
use polycycle_core::weights::{detect_infinitesimal_connections, symmetric_connection_fixture};
use polycycle_core::{run_pipeline, AnalysisConfig, Error, Prediction, SeparatrixGraph};

const EXIT_INPUT: u8 = 2;
const EXIT_UNREDUCED: u8 = 3;

/// Blow-up analysis of an isolated singularity of a polynomial vector
/// field in R^3.
#[derive(Parser)]
#[command(name = "polycycle", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Full pipeline: blow-ups, equilibria, separatrix graph, verdict,
    /// prediction and secant checks at each seed.
    Analyze(AnalyzeArgs),
    /// Blow up until every divisor equilibrium is hyperbolic and write the
    /// atlas with its equilibria.
    Blowup(BlowupArgs),
    /// Integrate one orbit towards the origin and classify its secants.
    Trace(TraceArgs),
    /// Trace the separatrix graph and export it.
    Graph(GraphArgs),
    /// Weighted chains and infinitesimal saddle connections of a graph.
    Weights(WeightsArgs),
}

/// Flags overriding the TOML configuration.
#[derive(Args)]
struct Overrides {
    /// TOML configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Largest number of blown-up points, the polar blow-up included
    #[arg(long)]
    depth_cap: Option<usize>,
    /// Equilibrium seeds per direction on each chart face
    #[arg(long)]
    grid: Option<usize>,
    /// Hyperbolicity threshold for floating-point eigenvalues
    #[arg(long)]
    eps_hyp: Option<f64>,
    /// Landing ball radius for separatrix tracing
    #[arg(long)]
    r_land: Option<f64>,
    /// Launch offset along eigendirections
    #[arg(long)]
    eps_launch: Option<f64>,
}

impl Overrides {
    fn load(&self) -> Result<AnalysisConfig, Error> {
        let mut c = match &self.config {
            Some(p) => AnalysisConfig::from_file(p)?,
            None => AnalysisConfig::default(),
        };
        if let Some(v) = self.depth_cap {
            c.depth_cap = v;
        }
        if let Some(v) = self.grid {
            c.equilibria.grid = v;
        }
        if let Some(v) = self.eps_hyp {
            c.equilibria.eps_hyp_float = v;
        }
        if let Some(v) = self.r_land {
            c.trace.r_land = v;
        }
        if let Some(v) = self.eps_launch {
            c.trace.eps_launch = v;
        }
        Ok(c)
    }
}

#[derive(Args)]
struct SecantOverrides {
    /// Integration time limit for secant orbits
    #[arg(long)]
    t_max: Option<f64>,
    /// Relative tolerance of the orbit integrator
    #[arg(long)]
    tol: Option<f64>,
    /// Radius at which integration stops
    #[arg(long)]
    r_min: Option<f64>,
    /// Radius below which samples count towards the accumulation set
    #[arg(long)]
    transient_radius: Option<f64>,
}

impl SecantOverrides {
    fn apply(&self, c: &mut AnalysisConfig) {
        if let Some(v) = self.t_max {
            c.secant.t_max = v;
        }
        if let Some(v) = self.tol {
            c.secant.rtol = v;
            c.trace.tol.rtol = v;
        }
        if let Some(v) = self.r_min {
            c.secant.r_min = v;
        }
        if let Some(v) = self.transient_radius {
            c.secant.transient_radius = v;
        }
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Field file (JSON)
    #[arg(long)]
    field: PathBuf,
    /// Report output; printed to stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    /// Separatrix graph in DOT format
    #[arg(long)]
    dot: Option<PathBuf>,
    /// Secant samples of the first seed
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Separatrix polylines
    #[arg(long)]
    polylines: Option<PathBuf>,
    /// Seed point x,y,z; repeat for several. Replaces the configured seeds
    #[arg(long, value_parser = parse_seed)]
    seed: Vec<[f64; 3]>,
    /// Leave the timestamp out of the report
    #[arg(long)]
    no_timestamp: bool,
    #[command(flatten)]
    cfg: Overrides,
    #[command(flatten)]
    secant: SecantOverrides,
}

#[derive(Args)]
struct BlowupArgs {
    #[arg(long)]
    field: PathBuf,
    /// Atlas and equilibria (JSON); printed to stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    cfg: Overrides,
}

#[derive(Args)]
struct TraceArgs {
    #[arg(long)]
    field: PathBuf,
    /// Initial point x,y,z
    #[arg(long, value_parser = parse_seed)]
    seed: [f64; 3],
    /// Secant samples as t,sx,sy,sz,r
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Integrate in original coordinates only, without blow-up charts
    #[arg(long)]
    direct: bool,
    #[command(flatten)]
    secant: SecantOverrides,
    #[command(flatten)]
    cfg: Overrides,
}

#[derive(Args)]
struct GraphArgs {
    /// Field file; reduced first
    #[arg(long, required_unless_present = "atlas", conflicts_with = "atlas")]
    field: Option<PathBuf>,
    /// Output of `blowup`
    #[arg(long)]
    atlas: Option<PathBuf>,
    #[arg(long)]
    dot: Option<PathBuf>,
    /// Full graph (JSON), readable by `weights`
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    polylines: Option<PathBuf>,
    #[command(flatten)]
    cfg: Overrides,
}

#[derive(Args)]
struct WeightsArgs {
    /// Output of `graph --json`
    #[arg(long, required_unless_present = "fixture", conflicts_with = "fixture")]
    graph: Option<PathBuf>,
    /// Built-in symmetric connection fixture
    #[arg(long)]
    fixture: bool,
    /// Rational shift of the second corner's mu in the fixture
    #[arg(long, default_value = "0", requires = "fixture")]
    shift: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_seed(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> =
        s.split(',').map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"))).collect::<Result<_, _>>()?;
    <[f64; 3]>::try_from(v).map_err(|v| format!("expected x,y,z, got {} values", v.len()))
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(if *e == Error::ReductionNotReached { EXIT_UNREDUCED } else { EXIT_INPUT })
}

fn unreduced(errors: &[String]) -> ExitCode {
    for e in errors {
        eprintln!("warning: {e}");
    }
    eprintln!("{}", Error::ReductionNotReached);
    ExitCode::from(EXIT_UNREDUCED)
}

fn analyze(a: &AnalyzeArgs) -> Result<ExitCode, Error> {
    let field = parse_field_file(&a.field)?;
    let mut cfg = a.cfg.load()?;
    a.secant.apply(&mut cfg);
    if !a.seed.is_empty() {
        cfg.seeds = a.seed.clone();
    }
    let out = a.out.clone().or(cfg.output.report.clone());
    let dot = a.dot.clone().or(cfg.output.dot.clone());
    let csv = a.csv.clone().or(cfg.output.csv.clone());
    let polylines = a.polylines.clone().or(cfg.output.polylines.clone());
    let mut an = run_pipeline(&field, &cfg)?;
    if !a.no_timestamp {
        an.report.timestamp = SystemTime::now().duration_since(UNIX_EPOCH).ok().map(|d| d.as_secs());
    }
    emit(out.as_deref(), &to_canonical_json(&an.report)?)?;
    if let (Some(p), Some(g)) = (&dot, &an.graph) {
        write_text(p, &export_dot(g, an.cycle.as_ref()))?;
    }
    if let (Some(p), Some(g)) = (&polylines, &an.graph) {
        write_text(p, &export_polylines_csv(g))?;
    }
    if let (Some(p), Some(Some(c))) = (&csv, an.clouds.first()) {
        write_text(p, &export_secant_csv(c))?;
    }

    let r = &an.report;
    let pred = match (&r.prediction.prediction, &r.prediction.error) {
        (Some(p), _) => p.name().to_string(),
        (None, Some(e)) => format!("none ({e})"),
        (None, None) => "none".into(),
    };
    eprintln!("equilibria: {}, weak Morse-Smale: {}, prediction: {pred}", r.equilibria.len(), r.ms_verdict.ok);
    for s in &r.seeds {
        let what = match (&s.comparison, &s.accumulation, &s.error) {
            (Some(c), _, _) => format!("{:?}: {}", c.verdict, c.detail),
            (None, Some(acc), _) => acc.class.name().to_string(),
            (_, _, Some(e)) => e.clone(),
            _ => "no result".into(),
        };
        eprintln!("seed {:?}: {what}", s.seed);
    }
    Ok(if r.reduction_reached { ExitCode::SUCCESS } else { unreduced(&r.errors) })
}

fn blowup(a: &BlowupArgs) -> Result<ExitCode, Error> {
    let field = parse_field_file(&a.field)?;
    let cfg = a.cfg.load()?;
    let red = reduce(&field, &cfg)?;
    emit(a.out.as_deref(), &to_canonical_json(&red)?)?;
    eprintln!("depth {}, {} charts, {} equilibria", red.atlas.depth(), red.atlas.charts.len(), red.equilibria.len());
    for e in &red.equilibria {
        eprintln!("  {:>3} {:<16} chart {:<3} {:?}", e.id, e.kind.name(), e.chart, e.position);
    }
    Ok(if red.reduction_reached { ExitCode::SUCCESS } else { unreduced(&red.errors) })
}

fn trace(a: &TraceArgs) -> Result<ExitCode, Error> {
    let field = parse_field_file(&a.field)?;
    let mut cfg = a.cfg.load()?;
    a.secant.apply(&mut cfg);
    cfg.validate()?;
    if a.direct {
        cfg.secant.lifted = false;
    }
    let atlas = polycycle_core::BlowupAtlas::polar_blowup(&field)?;
    let report = match integrate_orbit(&atlas, a.seed, &cfg.secant).and_then(|tr| {
        let c = secant_samples(&tr, cfg.secant.transient_radius)?;
        Ok((tr, c))
    }) {
        Ok((tr, cloud)) => {
            if let Some(p) = &a.csv {
                write_text(p, &export_secant_csv(&cloud))?;
            }
            let acc = estimate_accumulation(&cloud, &cfg.secant);
            serde_json::json!({
                "seed": a.seed,
                "termination": tr.termination,
                "stats": tr.stats,
                "samples": cloud.vectors.len(),
                "accumulation": acc.as_ref().ok(),
                "error": acc.as_ref().err().map(|e| e.to_string()),
            })
        }
        // A non-attracting orbit is a result, not an input failure.
        Err(e) => serde_json::json!({ "seed": a.seed, "error": e.to_string() }),
    };
    print!("{}", to_canonical_json(&report)?);
    Ok(ExitCode::SUCCESS)
}

fn graph(a: &GraphArgs) -> Result<ExitCode, Error> {
    let cfg = a.cfg.load()?;
    let red: Reduction = match (&a.field, &a.atlas) {
        (Some(f), _) => reduce(&parse_field_file(f)?, &cfg)?,
        (None, Some(p)) => read_json(p)?,
        (None, None) => unreachable!("clap requires one input"),
    };
    if !red.reduction_reached {
        return Ok(unreduced(&red.errors));
    }
    let g = trace_separatrices(&red.atlas, &red.equilibria, &cfg.trace)?;
    let ms = check_weak_morse_smale(&red.equilibria, Some(&g), cfg.trace.r_land);
    let cycle = match classify_limit(&g, ms.ok) {
        Ok(Prediction::PolyCycle { cycle }) => Some(cycle),
        _ => None,
    };
    let dot = export_dot(&g, cycle.as_ref());
    match &a.dot {
        Some(p) => write_text(p, &dot)?,
        None if a.json.is_none() && a.polylines.is_none() => print!("{dot}"),
        None => {}
    }
    if let Some(p) = &a.json {
        write_text(p, &to_canonical_json(&g)?)?;
    }
    if let Some(p) = &a.polylines {
        write_text(p, &export_polylines_csv(&g))?;
    }
    eprintln!("{} vertices, {} edges, cyclic: {}", g.vertices.len(), g.edges.len(), g.is_cyclic());
    Ok(ExitCode::SUCCESS)
}

fn weights(a: &WeightsArgs) -> Result<ExitCode, Error> {
    let g: SeparatrixGraph = if a.fixture {
        let shift = rational::parse(&a.shift)
            .ok_or_else(|| Error::Invalid(format!("shift {:?} is not a rational", a.shift)))?;
        symmetric_connection_fixture(shift)
    } else {
        read_json(a.graph.as_deref().expect("clap requires a graph"))?
    };
    let rep = detect_infinitesimal_connections(&g);
    emit(a.out.as_deref(), &to_canonical_json(&rep)?)?;
    eprintln!("{} chains, {} infinitesimal connections", rep.chains.len(), rep.connections.len());
    Ok(ExitCode::SUCCESS)
}

fn num(x: f64) -> String {
    if x != 0.0 && !(1e-3..1e6).contains(&x.abs()) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

/// Appends each flag's default to its help line and the default TOML to
/// each subcommand's long help.
fn command_with_defaults() -> clap::Command {
    let d = AnalysisConfig::default();
    let defaults: Vec<(&str, String)> = vec![
        ("depth_cap", d.depth_cap.to_string()),
        ("grid", d.equilibria.grid.to_string()),
        ("eps_hyp", num(d.equilibria.eps_hyp_float)),
        ("r_land", num(d.trace.r_land)),
        ("eps_launch", num(d.trace.eps_launch)),
        ("t_max", num(d.secant.t_max)),
        ("tol", num(d.secant.rtol)),
        ("r_min", num(d.secant.r_min)),
        ("transient_radius", num(d.secant.transient_radius)),
    ];
    let toml = format!("Default configuration (TOML):\n\n{}", d.to_toml());
    let mut cmd = Cli::command();
    for name in ["analyze", "blowup", "trace", "graph", "weights"] {
        cmd = cmd.mut_subcommand(name, |mut sc| {
            for (id, val) in &defaults {
                if sc.get_arguments().any(|a| a.get_id() == *id) {
                    sc = sc.mut_arg(*id, |arg| {
                        let help = arg.get_help().map(|h| h.to_string()).unwrap_or_default();
                        arg.help(format!("{help} [default: {val}]"))
                    });
                }
            }
            if name == "weights" {
                sc
            } else {
                sc.after_long_help(toml.clone())
            }
        });
    }
    cmd
}

fn main() -> ExitCode {
    let cli = match Cli::from_arg_matches(&command_with_defaults().get_matches()) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let res = match &cli.cmd {
        Cmd::Analyze(a) => analyze(a),
        Cmd::Blowup(a) => blowup(a),
        Cmd::Trace(a) => trace(a),
        Cmd::Graph(a) => graph(a),
        Cmd::Weights(a) => weights(a),
    };
    res.unwrap_or_else(|e| fail(&e))
}

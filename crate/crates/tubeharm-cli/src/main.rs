//! `tubeharm`: batch front end for cone inspection, test-function
//! generation, transforms, operators and the verification registry.
//!
//! Exit codes: 0 on success, 1 when a verdict fails, 2 on configuration or
//! input errors. Every output file lands in the output directory (`--out`,
//! else `$TUBEHARM_OUT`, else `./tubeharm_out`).

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use tubeharm::cone::PolyhedralCone;
use tubeharm::grid::{tgf, GridFunction, GridSpec};
use tubeharm::harness::{
    self, default_bump, ExperimentConfig, Verdict, CSV_HEADER, DEFAULT_SEED, REGISTRY,
};
use tubeharm::operators::{
    area_function, full_energy, g_function, iterated_max, nontangential_max, twisted_max,
    OperatorConfig, OperatorSummary, DEFAULT_BETA,
};
use tubeharm::poisson::{
    build_field, iterated_poisson, mixed_gradient, GradientSelector, OperatorField, TLattice,
};
use tubeharm::spectral::{make_bump_psi_with, DEFAULT_NODES_PER_AXIS};
use tubeharm::Error;

/// Environment variable overriding the default output directory.
const OUT_ENV: &str = "TUBEHARM_OUT";
const DEFAULT_OUT: &str = "tubeharm_out";
const DEFAULT_GRID_SIZE: usize = 128;
const DEFAULT_BOX_HALF: f64 = 8.0;
const DEFAULT_T_LEVELS: usize = 6;
/// Spectral magnitude of the default generated bump.
const DEFAULT_MAGNITUDE: f64 = 2.0 * std::f64::consts::SQRT_2;

#[derive(Parser, Debug)]
#[command(
    name = "tubeharm",
    version,
    about = "Harmonic analysis on tube domains over polyhedral cones"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Cone: `cone_b`, `axis` / `axis:N`, or a JSON file `{"n","m","generators"}`.
    #[arg(long, global = true, default_value = "cone_b")]
    cone: String,
    /// Seed of the test families.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Samples per axis.
    #[arg(long, global = true)]
    grid_size: Option<usize>,
    /// Box half-width L.
    #[arg(long, global = true)]
    box_half: Option<f64>,
    /// Lattice levels per parameter.
    #[arg(long, global = true)]
    t_levels: Option<usize>,
    /// Aperture of region operators.
    #[arg(long, global = true)]
    beta: Option<f64>,
    /// Worker threads (a hint; results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Cone inspection.
    Cone {
        #[command(subcommand)]
        action: ConeAction,
    },
    /// Writes a spectral bump test function and its boundary grid.
    Gen(GenArgs),
    /// Poisson transform or mixed gradient of a grid function.
    Transform(TransformArgs),
    /// Maximal and square functions.
    Operator(OperatorArgs),
    /// Runs registry experiments.
    Verify(VerifyArgs),
    /// Aggregates verdict JSON lines into CSV.
    Report(ReportArgs),
}

#[derive(Subcommand, Debug)]
enum ConeAction {
    /// Prints n, m, 𝒜, γ̃₀, γ₀, dual rays and sample volumes.
    Info,
}

#[derive(Args, Debug)]
struct GenArgs {
    /// Bump center in frequency space (comma separated); defaults to the mean dual-ray direction.
    #[arg(long, value_delimiter = ',')]
    center: Option<Vec<f64>>,
    /// Bump radius (default: 0.75 · min_j e_j·center).
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    amplitude: f64,
    /// Gauss–Legendre nodes per axis.
    #[arg(long, default_value_t = DEFAULT_NODES_PER_AXIS)]
    nodes: usize,
}

#[derive(Args, Debug)]
struct TransformArgs {
    /// Input TGF1 grid function.
    #[arg(long)]
    input: PathBuf,
    /// Poisson parameter t (m values); omitted: the whole lattice, saved as a field directory.
    #[arg(long, value_delimiter = ',')]
    t: Option<Vec<f64>>,
    /// Mixed-gradient selector, one of `X`, `T`, `-` per parameter.
    #[arg(long)]
    selector: Option<String>,
    /// Output name (file stem or directory name).
    #[arg(long, default_value = "transform")]
    name: String,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Op {
    /// Non-tangential maximal function N^β.
    Nontangential,
    /// Lusin area function S.
    Area,
    /// Littlewood–Paley g-function.
    G,
    /// Iterated maximal function M_it.
    IteratedMax,
    /// Twisted maximal function M_t.
    TwistedMax,
}

impl Op {
    fn name(self) -> &'static str {
        match self {
            Op::Nontangential => "nontangential",
            Op::Area => "area",
            Op::G => "g",
            Op::IteratedMax => "iterated_max",
            Op::TwistedMax => "twisted_max",
        }
    }
}

#[derive(Args, Debug)]
struct OperatorArgs {
    #[arg(value_enum)]
    op: Op,
    /// Input TGF1 grid function.
    #[arg(long, required_unless_present = "field")]
    input: Option<PathBuf>,
    /// Precomputed field directory (written by `transform` without `--t`); nontangential only.
    #[arg(long, conflicts_with = "input")]
    field: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Run every registry experiment.
    #[arg(long, conflicts_with = "id")]
    all: bool,
    /// Experiment ids.
    #[arg(long, num_args = 1.., required_unless_present_any = ["all", "list"])]
    id: Vec<String>,
    /// Lists the registry and exits.
    #[arg(long)]
    list: bool,
    /// Doubles every test-function box this many times (same spacing).
    #[arg(long, default_value_t = 0)]
    box_doublings: u32,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Verdict JSON-lines files (default: `<out>/verdicts.jsonl`).
    inputs: Vec<PathBuf>,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Verdict,
    Config(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// `println!` that ignores a closed stdout (e.g. piping into `head`).
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verdict) => ExitCode::from(1),
        Err(Failure::Config(msg)) => {
            let _ = writeln!(std::io::stderr(), "error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let g = &cli.global;
    let threads = match g.threads {
        Some(0) => return Err(Failure::Config("--threads must be at least 1".into())),
        Some(t) => t,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::Config(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(&cli))
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    let g = &cli.global;
    let cone = load_cone(&g.cone)?;
    match &cli.command {
        Command::Cone {
            action: ConeAction::Info,
        } => cone_info(&cone),
        Command::Gen(a) => gen(g, &cone, a),
        Command::Transform(a) => transform(g, &cone, a),
        Command::Operator(a) => operator(g, &cone, a),
        Command::Verify(a) => verify(g, cone, a),
        Command::Report(a) => report(g, a),
    }
}

fn load_cone(arg: &str) -> CliResult<PolyhedralCone> {
    match arg {
        "cone_b" => Ok(PolyhedralCone::cone_b()),
        "axis" => Ok(PolyhedralCone::axis(2)),
        _ => {
            if let Some(n) = arg.strip_prefix("axis:") {
                let n: usize = n
                    .parse()
                    .map_err(|_| Failure::Config(format!("bad axis dimension in {arg:?}")))?;
                if !(1..=8).contains(&n) {
                    return Err(Failure::Config(format!(
                        "axis dimension must be in 1..=8, got {n}"
                    )));
                }
                return Ok(PolyhedralCone::axis(n));
            }
            let text = fs::read_to_string(arg)
                .map_err(|e| Failure::Config(format!("cannot read cone file {arg}: {e}")))?;
            Ok(PolyhedralCone::from_json_str(&text)?)
        }
    }
}

fn out_dir(g: &Global) -> CliResult<PathBuf> {
    let dir = g
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    fs::create_dir_all(&dir).map_err(|e| {
        Failure::Config(format!(
            "cannot create output directory {}: {e}",
            dir.display()
        ))
    })?;
    Ok(dir)
}

fn grid_spec(g: &Global, cone: &PolyhedralCone) -> CliResult<GridSpec> {
    Ok(GridSpec::cube(
        cone.n,
        g.grid_size.unwrap_or(DEFAULT_GRID_SIZE),
        g.box_half.unwrap_or(DEFAULT_BOX_HALF),
    )?)
}

fn lattice(g: &Global, cone: &PolyhedralCone, spec: &GridSpec) -> CliResult<TLattice> {
    Ok(TLattice::for_grid(
        spec,
        cone.m,
        g.t_levels.unwrap_or(DEFAULT_T_LEVELS),
    )?)
}

fn read_grid(path: &Path) -> CliResult<GridFunction> {
    let file = File::open(path)
        .map_err(|e| Failure::Config(format!("cannot open {}: {e}", path.display())))?;
    Ok(tgf::read_tgf(&mut BufReader::new(file))?)
}

fn write_grid(path: &Path, f: &GridFunction) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    tgf::write_tgf(&mut w, f)?;
    w.flush()?;
    Ok(())
}

fn cone_info(cone: &PolyhedralCone) -> CliResult<()> {
    let c = cone.constants();
    let dual = cone.dual()?;
    say!("n = {}", cone.n);
    say!("m = {}", cone.m);
    for (k, e) in cone.generators.iter().enumerate() {
        say!("e_{} = {:?}", k + 1, e);
    }
    say!("A = {:.12}", c.a_const);
    say!("gamma_tilde0 = {:.12}", c.gamma_tilde0);
    say!("gamma0 = {:.12}", c.gamma0);
    for r in &dual.rays {
        // `+ 0.0` turns negative zeros into zeros.
        let r: Vec<f64> = r.iter().map(|v| v + 0.0).collect();
        say!("dual ray = {r:?}");
    }
    for s in [0.5, 1.0, 2.0] {
        say!(
            "volume R(0, {s}·1) = {:.12}",
            cone.zonotope_volume(&vec![s; cone.m])
        );
    }
    Ok(())
}

fn gen(g: &Global, cone: &PolyhedralCone, a: &GenArgs) -> CliResult<()> {
    let dual = cone.dual()?;
    let default = default_bump(cone, DEFAULT_MAGNITUDE)?;
    let center = a.center.clone().unwrap_or(default.center);
    let radius = match a.radius {
        Some(r) => r,
        None => {
            let min_c = cone
                .generators
                .iter()
                .map(|e| e.iter().zip(&center).map(|(x, y)| x * y).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            0.75 * min_c
        }
    };
    let stf = make_bump_psi_with(&dual, &center, radius, a.amplitude, a.nodes)?;
    let spec = grid_spec(g, cone)?;
    let dir = out_dir(g)?;
    fs::write(dir.join("spectral.json"), stf.to_json_string()?)?;
    write_grid(&dir.join("boundary.tgf"), &stf.boundary_grid(&spec)?)?;
    say!(
        "wrote {} and {}",
        dir.join("spectral.json").display(),
        dir.join("boundary.tgf").display()
    );
    Ok(())
}

fn transform(g: &Global, cone: &PolyhedralCone, a: &TransformArgs) -> CliResult<()> {
    let f = read_grid(&a.input)?;
    if f.spec.n() != cone.n {
        return Err(Failure::Config(format!(
            "input is {}-D but the cone is {}-D",
            f.spec.n(),
            cone.n
        )));
    }
    let selector = a
        .selector
        .as_deref()
        .map(GradientSelector::parse)
        .transpose()?;
    let dir = out_dir(g)?;
    match &a.t {
        Some(t) => {
            let out = match &selector {
                Some(sel) => mixed_gradient(&f, cone, t, sel)?,
                None => iterated_poisson(&f, cone, t)?,
            };
            let path = dir.join(format!("{}.tgf", a.name));
            write_grid(&path, &out)?;
            say!("wrote {}", path.display());
        }
        None => {
            let lat = lattice(g, cone, &f.spec)?;
            let cfg = OperatorConfig::new(DEFAULT_BETA, lat)?;
            let field = build_field(&f, cone, &cfg.lattice, selector.as_ref(), cfg.budget)?;
            let path = dir.join(&a.name);
            field.save(&path)?;
            say!("wrote {} ({} nodes)", path.display(), field.lattice.len());
        }
    }
    Ok(())
}

fn operator(g: &Global, cone: &PolyhedralCone, a: &OperatorArgs) -> CliResult<()> {
    let beta = g.beta.unwrap_or(DEFAULT_BETA);
    let dir = out_dir(g)?;
    let (out, params) = if let Some(field_dir) = &a.field {
        if a.op != Op::Nontangential {
            return Err(Failure::Config(
                "--field is only accepted by the nontangential operator".into(),
            ));
        }
        let field = OperatorField::load(field_dir)?;
        let cfg = OperatorConfig::new(beta, field.lattice.clone())?;
        let out = nontangential_max(&field, cone, &cfg)?;
        (
            out,
            serde_json::json!({ "beta": beta, "field": field_dir.display().to_string() }),
        )
    } else {
        let input = a
            .input
            .as_ref()
            .ok_or_else(|| Failure::Config("--input is required".into()))?;
        let f = read_grid(input)?;
        if f.spec.n() != cone.n {
            return Err(Failure::Config(format!(
                "input is {}-D but the cone is {}-D",
                f.spec.n(),
                cone.n
            )));
        }
        let lat = lattice(g, cone, &f.spec)?;
        let levels = lat.levels;
        let cfg = OperatorConfig::new(beta, lat)?;
        let out = match a.op {
            Op::Nontangential => nontangential_max(
                &build_field(&f, cone, &cfg.lattice, None, cfg.budget)?,
                cone,
                &cfg,
            )?,
            Op::Area => area_function(&full_energy(&f, cone, &cfg)?, cone, &cfg)?,
            Op::G => g_function(&full_energy(&f, cone, &cfg)?)?,
            Op::IteratedMax => iterated_max(&f, cone)?,
            Op::TwistedMax => twisted_max(&f, cone)?,
        };
        (
            out,
            serde_json::json!({ "beta": beta, "t_levels": levels, "input": input.display().to_string() }),
        )
    };
    let name = a.op.name();
    let path = dir.join(format!("{name}.tgf"));
    write_grid(&path, &out)?;
    let summary = OperatorSummary::new(name, params, &out);
    fs::write(
        dir.join(format!("{name}.json")),
        serde_json::to_string_pretty(&summary).map_err(Error::from)?,
    )?;
    say!(
        "{name}: l1 = {:e}, l2 = {:e}, sup = {:e}",
        summary.l1,
        summary.l2,
        summary.sup
    );
    Ok(())
}

fn verify(g: &Global, cone: PolyhedralCone, a: &VerifyArgs) -> CliResult<()> {
    if a.list {
        for e in REGISTRY {
            say!("{}: {}", e.id, e.target);
        }
        return Ok(());
    }
    let ids: Vec<String> = if a.all {
        REGISTRY.iter().map(|e| e.id.to_string()).collect()
    } else {
        a.id.clone()
    };
    for id in &ids {
        harness::find(id)?;
    }
    let cfg = ExperimentConfig {
        cone,
        seed: g.seed,
        grid_size: g.grid_size,
        box_half: g.box_half,
        t_levels: g.t_levels,
        beta: g.beta,
        box_doublings: a.box_doublings,
    };
    let dir = out_dir(g)?;
    let mut verdicts: Vec<Verdict> = Vec::new();
    let mut lines = BufWriter::new(File::create(dir.join("verdicts.jsonl"))?);
    for id in &ids {
        let v = harness::run(id, &cfg)?;
        say!(
            "{} {} ({:.1}s)",
            if v.pass { "PASS" } else { "FAIL" },
            v.id,
            v.runtime_s
        );
        for c in &v.checks {
            say!(
                "    {} = {:e} (tolerance {:e}) {}",
                c.quantity,
                c.value,
                c.tolerance,
                if c.pass { "ok" } else { "FAILED" }
            );
        }
        writeln!(lines, "{}", v.to_json_line()?)?;
        verdicts.push(v);
    }
    lines.flush()?;
    let mut csv = BufWriter::new(File::create(dir.join("report.csv"))?);
    harness::write_csv(&mut csv, &verdicts)?;
    csv.flush()?;
    if verdicts.iter().all(|v| v.pass) {
        Ok(())
    } else {
        Err(Failure::Verdict)
    }
}

fn report(g: &Global, a: &ReportArgs) -> CliResult<()> {
    let dir = out_dir(g)?;
    let inputs = if a.inputs.is_empty() {
        vec![dir.join("verdicts.jsonl")]
    } else {
        a.inputs.clone()
    };
    let mut rows = Vec::new();
    for path in &inputs {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
        rows.extend(harness::csv_from_json_lines(&text)?);
    }
    let mut body = String::from(CSV_HEADER);
    body.push('\n');
    for r in &rows {
        body.push_str(r);
        body.push('\n');
    }
    fs::write(dir.join("report.csv"), &body)?;
    say!("{}", body.trim_end());
    if rows.iter().all(|r| r.ends_with(",true")) {
        Ok(())
    } else {
        Err(Failure::Verdict)
    }
}

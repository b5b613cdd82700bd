//! Command-line front end.
//!
//! Every command reads JSON inputs, prints its result (JSON, or a bare
//! number for the graph parameters) and can write a run report with the
//! SHA-256 digests of its inputs, the named checks it performed and a
//! verdict. Exit codes: 0 all checks pass, 2 invalid input, 3 a
//! verification failed, 4 a budget was exceeded.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Category, Error, Result};
use crate::games::{
    check_game_algebra_relations_par, find_deterministic_perfect_with, SearchBudget,
    SearchOutcome, SyncGame,
};
use crate::gf2::BinaryLinearSystem;
use crate::graphs::{
    self, complement_colouring_ga0, graph_from_system, iso_strategy_from_bcs,
    rep_from_independence, reverse_iso, transport_independence, Graph, IndependenceCertificate,
    SolverLimits,
};
use crate::matops::{self, CMatrix};
use crate::rounding::{orthogonalize_family, RoundingOptions};
use crate::solutiongroup::{
    magic_square_pauli_rep, normalize_j, presentation, rep_from_strategy, strategy_from_rep,
    verify_rep, GroupRep,
};
use crate::strategies::{
    correlation_from_bipartite, correlation_from_tracial, decompose_qs, losing_mass,
    synchronicity_defect, BipartiteStrategy, Correlation, OperatorStrategy, QsOptions,
};

#[derive(Parser, Debug)]
#[command(name = "syncgames", version, about = "Synchronous nonlocal games toolkit")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Debug, Clone)]
struct GlobalArgs {
    /// Tolerance for operator identities.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,

    /// Largest allowed probability of a losing tuple.
    #[arg(long, global = true, default_value_t = 1e-9)]
    eps: f64,

    /// Refuse matrices larger than this.
    #[arg(long, global = true, default_value_t = matops::DEFAULT_MAX_DIM)]
    max_dim: usize,

    /// Write a JSON run report here.
    #[arg(long, global = true)]
    report: Option<PathBuf>,

    /// Threads for relation checks.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    /// Print the JSON formats and exit.
    #[arg(long)]
    schema: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// GF(2) systems.
    #[command(subcommand)]
    System(SystemCmd),
    /// Synchronous games.
    #[command(subcommand)]
    Game(GameCmd),
    /// Operator strategies and correlations.
    #[command(subcommand)]
    Strategy(StrategyCmd),
    /// Round near-projections to an exact orthogonal family.
    Round(RoundArgs),
    /// Solution groups and representations.
    #[command(subcommand)]
    Group(GroupCmd),
    /// Graphs, exact parameters and certificates.
    #[command(subcommand)]
    Graph(GraphCmd),
    /// End-to-end pipelines.
    #[command(subcommand)]
    Demo(DemoCmd),
}

#[derive(Subcommand, Debug)]
enum SystemCmd {
    /// Decide solvability by elimination.
    Solve {
        #[arg(long)]
        system: PathBuf,
    },
    /// List the local solutions of one equation.
    Si {
        #[arg(long)]
        system: PathBuf,
        /// 1-based equation index.
        #[arg(long)]
        equation: usize,
    },
}

#[derive(Subcommand, Debug)]
enum GameCmd {
    /// Write a generated game.
    Build {
        /// synbcs, hom or iso.
        #[arg(long)]
        kind: String,
        #[arg(long)]
        system: Option<PathBuf>,
        #[arg(long)]
        g: Option<PathBuf>,
        #[arg(long)]
        h: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search for a deterministic perfect strategy.
    SolveClassical {
        #[arg(long)]
        game: PathBuf,
        #[arg(long, default_value_t = 5_000_000)]
        max_nodes: u64,
        #[arg(long, default_value_t = 200.0)]
        max_bits: f64,
    },
    /// Check the game-algebra relations of a strategy.
    CheckStrategy {
        #[arg(long)]
        game: PathBuf,
        #[arg(long)]
        strategy: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum StrategyCmd {
    /// Correlation of a tracial or bipartite strategy.
    Correlation {
        #[arg(long)]
        strategy: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synchronicity and perfectness of a strategy's correlation.
    Check {
        #[arg(long)]
        strategy: PathBuf,
        #[arg(long)]
        game: PathBuf,
    },
    /// Split a synchronous bipartite strategy into tracial blocks.
    DecomposeQs {
        #[arg(long)]
        strategy: PathBuf,
        #[arg(long, default_value_t = crate::strategies::SCHMIDT_CLUSTER_TOL)]
        cluster_tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct RoundArgs {
    /// A strategy (each input rounded) or {"matrices": [...]}.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Make each rounded family sum to the identity.
    #[arg(long)]
    sum_one: bool,
    /// Round eigenvalues near 1/2 instead of failing.
    #[arg(long)]
    allow_boundary: bool,
}

#[derive(Subcommand, Debug)]
enum GroupCmd {
    /// Print the solution-group presentation.
    Present {
        #[arg(long)]
        system: PathBuf,
    },
    /// Check a representation against the relators.
    Verify {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        rep: PathBuf,
    },
    /// synBCS strategy from a representation with J = -I.
    ToStrategy {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        rep: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Representation from a perfect synBCS strategy.
    FromStrategy {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        strategy: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compress to the -1 eigenspace of J.
    NormalizeJ {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        rep: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct GraphInput {
    #[arg(long)]
    graph: PathBuf,
    /// Raise the exact solvers' vertex cap.
    #[arg(long)]
    max_vertices: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum GraphCmd {
    /// Independence number.
    Alpha(GraphInput),
    /// Clique number.
    Omega(GraphInput),
    /// Chromatic number.
    Chi(GraphInput),
    /// The local-solution graph of a system.
    FromSystem {
        #[arg(long)]
        system: PathBuf,
        /// Use b = 0.
        #[arg(long)]
        homogeneous: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify an independence certificate.
    Certify {
        #[arg(long)]
        cert: PathBuf,
    },
    /// Move a certificate along an isomorphism strategy.
    Transport {
        #[arg(long)]
        cert: PathBuf,
        /// Strategy for the isomorphism game (certificate graph first).
        #[arg(long)]
        iso: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Equation colouring of the complement of the homogeneous graph.
    ColourGa0 {
        #[arg(long)]
        system: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum DemoCmd {
    /// Magic square: classical failure, quantum strategy, certificates.
    MagicSquare {
        /// Also write every intermediate object here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Serialize)]
struct CheckRecord {
    name: String,
    residual: f64,
    threshold: f64,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct RunReport {
    command: String,
    inputs: BTreeMap<String, String>,
    checks: Vec<CheckRecord>,
    verdict: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    result: Value,
    /// Kept apart from the payload; not covered by any digest.
    wall_time_ms: u128,
}

struct Run {
    global: GlobalArgs,
    inputs: BTreeMap<String, String>,
    checks: Vec<CheckRecord>,
}

/// What a command prints on success.
enum Output {
    Json(Value),
    Text(String),
}

impl Run {
    fn read(&mut self, path: &Path) -> Result<String> {
        let bytes = std::fs::read(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let digest = Sha256::digest(&bytes);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.inputs.insert(path.display().to_string(), hex);
        String::from_utf8(bytes)
            .map_err(|_| Error::Validation(format!("{} is not UTF-8", path.display())))
    }

    fn check(&mut self, name: impl Into<String>, residual: f64, threshold: f64) {
        self.checks.push(CheckRecord {
            name: name.into(),
            residual,
            threshold,
            pass: residual <= threshold,
        });
    }

    /// A yes/no check, recorded with residual 0 or 1.
    fn flag(&mut self, name: impl Into<String>, ok: bool) {
        self.check(name, if ok { 0.0 } else { 1.0 }, 0.0);
    }

    fn system(&mut self, path: &Path) -> Result<BinaryLinearSystem> {
        BinaryLinearSystem::from_json(&self.read(path)?)
    }

    fn graph(&mut self, path: &Path) -> Result<Graph> {
        Graph::from_json(&self.read(path)?)
    }

    fn game(&mut self, path: &Path) -> Result<SyncGame> {
        SyncGame::from_json(&self.read(path)?)
    }

    fn dim_cap(&self, d: usize) -> Result<()> {
        if d > self.global.max_dim {
            Err(Error::Budget(format!(
                "dimension {d} exceeds --max-dim {}",
                self.global.max_dim
            )))
        } else {
            Ok(())
        }
    }

    fn strategy(&mut self, path: &Path) -> Result<OperatorStrategy> {
        let s = OperatorStrategy::from_json(&self.read(path)?)?;
        self.dim_cap(s.dim())?;
        Ok(s)
    }

    fn rep(&mut self, path: &Path) -> Result<GroupRep> {
        let r = GroupRep::from_json(&self.read(path)?)?;
        self.dim_cap(r.dim)?;
        Ok(r)
    }
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(v)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Writes `v` to `out` when given and returns a short pointer, otherwise
/// returns `v` for printing.
fn emit(out: &Option<PathBuf>, v: Value) -> Result<Value> {
    match out {
        Some(p) => {
            write_json(p, &v)?;
            Ok(json!({ "written": p.display().to_string() }))
        }
        None => Ok(v),
    }
}

fn limits(max_vertices: Option<usize>) -> SolverLimits {
    let mut l = SolverLimits::default();
    if let Some(m) = max_vertices {
        l.clique_vertices = m;
        l.chromatic_vertices = m;
    }
    l
}

fn command_name(c: &Command) -> String {
    let s = format!("{c:?}");
    // "Graph(Alpha(GraphInput { .. }))" -> "graph alpha"
    s.split(|ch: char| !ch.is_alphanumeric())
        .take_while(|w| !w.is_empty())
        .take(2)
        .map(|w| {
            let mut out = String::new();
            for (i, ch) in w.chars().enumerate() {
                if ch.is_uppercase() && i > 0 {
                    out.push('-');
                }
                out.push(ch.to_ascii_lowercase());
            }
            out
        })
        .filter(|w| w != "graph-input" && w != "round-args")
        .collect::<Vec<_>>()
        .join(" ")
}

/// Parses `argv` (including the program name), runs the command and
/// returns the exit code. Results go to `stdout`, diagnostics to `stderr`.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            if code == 0 {
                let _ = write!(stdout, "{}", e.render());
            } else {
                let _ = write!(stderr, "{}", e.render());
            }
            return code;
        }
    };
    if cli.global.schema {
        let _ = writeln!(
            stdout,
            "{}",
            serde_json::to_string_pretty(&schema()).expect("schema serializes")
        );
        return 0;
    }
    let Some(command) = cli.command else {
        let _ = writeln!(stderr, "error: a subcommand is required (see --help)");
        return 2;
    };
    let started = Instant::now();
    let name = command_name(&command);
    let mut ctx = Run {
        global: cli.global.clone(),
        inputs: BTreeMap::new(),
        checks: Vec::new(),
    };
    let outcome = dispatch(command, &mut ctx);
    let all_pass = ctx.checks.iter().all(|c| c.pass);
    let (code, result, error) = match outcome {
        Ok(out) => {
            let printed = match &out {
                Output::Json(v) => serde_json::to_string_pretty(v).expect("result serializes"),
                Output::Text(t) => t.trim_end().to_string(),
            };
            let _ = writeln!(stdout, "{printed}");
            let value = match out {
                Output::Json(v) => v,
                Output::Text(t) => Value::String(t),
            };
            (if all_pass { 0 } else { 3 }, value, None)
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            let code = match e.category() {
                Category::Validation => 2,
                Category::Verification => 3,
                Category::Budget => 4,
            };
            (code, Value::Null, Some(e.to_string()))
        }
    };
    if code == 3 && error.is_none() {
        for c in ctx.checks.iter().filter(|c| !c.pass) {
            let _ = writeln!(
                stderr,
                "check failed: {} residual {:.3e} exceeds {:.3e}",
                c.name, c.residual, c.threshold
            );
        }
    }
    if let Some(path) = &cli.global.report {
        let report = RunReport {
            command: name,
            inputs: ctx.inputs,
            checks: ctx.checks,
            verdict: if code == 0 { "pass" } else { "fail" },
            error,
            result,
            wall_time_ms: started.elapsed().as_millis(),
        };
        let v = serde_json::to_value(report).expect("report serializes");
        if let Err(e) = write_json(path, &v) {
            let _ = writeln!(stderr, "error: {e}");
            return if code == 0 { 2 } else { code };
        }
    }
    code
}

fn dispatch(command: Command, ctx: &mut Run) -> Result<Output> {
    let tol = ctx.global.tol;
    let eps = ctx.global.eps;
    match command {
        Command::System(SystemCmd::Solve { system }) => {
            let sys = ctx.system(&system)?;
            let sol = sys.solve();
            if let Some(x) = &sol {
                ctx.flag("solution satisfies every equation", sys.is_global_solution(x));
            }
            Ok(Output::Json(json!({
                "solvable": sol.is_some(),
                "solution": sol.map(|x| x.entries().to_vec()),
            })))
        }
        Command::System(SystemCmd::Si { system, equation }) => {
            let sys = ctx.system(&system)?;
            if equation == 0 || equation > sys.m() {
                return Err(Error::Validation(format!(
                    "--equation must be in 1..={}",
                    sys.m()
                )));
            }
            let sols = sys.local_solutions(equation - 1)?;
            Ok(Output::Json(json!({
                "equation": equation,
                "support": sys.support(equation - 1).iter().map(|j| j + 1).collect::<Vec<_>>(),
                "solutions": sols.iter().map(|x| x.entries().to_vec()).collect::<Vec<_>>(),
            })))
        }
        Command::Game(GameCmd::Build {
            kind,
            system,
            g,
            h,
            out,
        }) => {
            let need = |p: Option<PathBuf>, flag: &str| {
                p.ok_or_else(|| Error::Validation(format!("--kind {kind} needs --{flag}")))
            };
            let game = match kind.as_str() {
                "synbcs" => {
                    let path = need(system, "system")?;
                    SyncGame::synbcs(&ctx.system(&path)?)?
                }
                "hom" | "iso" => {
                    let (gp, hp) = (need(g, "g")?, need(h, "h")?);
                    let (g, h) = (ctx.graph(&gp)?, ctx.graph(&hp)?);
                    if kind == "hom" {
                        SyncGame::hom(&g, &h)
                    } else {
                        SyncGame::iso(&g, &h)
                    }
                }
                other => {
                    return Err(Error::Validation(format!(
                        "unknown game kind \"{other}\" (expected synbcs, hom or iso)"
                    )))
                }
            };
            Ok(Output::Json(emit(&out, game.to_json_value())?))
        }
        Command::Game(GameCmd::SolveClassical {
            game,
            max_nodes,
            max_bits,
        }) => {
            let g = ctx.game(&game)?;
            let outcome = find_deterministic_perfect_with(&g, SearchBudget { max_bits, max_nodes });
            match outcome {
                SearchOutcome::Found(s) => {
                    ctx.flag("assignment wins every input pair", s.is_perfect_for(&g));
                    Ok(Output::Json(json!({
                        "status": "found",
                        "assignment": s.assignment,
                        "labels": s.assignment.iter().map(|&a| g.output_label(a)).collect::<Vec<_>>(),
                    })))
                }
                SearchOutcome::NoneExists => Ok(Output::Json(json!({ "status": "none" }))),
                SearchOutcome::Undecided(why) => Err(Error::Budget(format!("undecided: {why}"))),
            }
        }
        Command::Game(GameCmd::CheckStrategy { game, strategy }) => {
            let g = ctx.game(&game)?;
            let s = ctx.strategy(&strategy)?;
            let r = check_game_algebra_relations_par(&g, &s, tol, ctx.global.jobs)?;
            ctx.check("projection idempotence", r.idempotence_defect, tol);
            ctx.check("projection self-adjointness", r.hermitian_defect, tol);
            ctx.check("completeness", r.completeness_defect, tol);
            ctx.check("losing products vanish", r.losing_product, tol);
            Ok(Output::Json(serde_json::to_value(r)?))
        }
        Command::Strategy(StrategyCmd::Correlation { strategy, out }) => {
            let text = ctx.read(&strategy)?;
            let c = correlation_any(&text, tol, ctx)?;
            Ok(Output::Json(emit(&out, c.to_json_value())?))
        }
        Command::Strategy(StrategyCmd::Check { strategy, game }) => {
            let text = ctx.read(&strategy)?;
            let c = correlation_any(&text, tol, ctx)?;
            let g = ctx.game(&game)?;
            let sync = synchronicity_defect(&c);
            let lose = losing_mass(&c, &g)?;
            ctx.check("synchronous", sync, tol);
            ctx.check("perfect", lose, eps);
            Ok(Output::Json(json!({
                "synchronicity_defect": sync,
                "max_losing_probability": lose,
                "synchronous": sync <= tol,
                "perfect": lose <= eps,
            })))
        }
        Command::Strategy(StrategyCmd::DecomposeQs {
            strategy,
            cluster_tol,
            out,
        }) => {
            let s = BipartiteStrategy::from_json(&ctx.read(&strategy)?)?;
            ctx.dim_cap(s.dim_a().max(s.dim_b()))?;
            let dec = decompose_qs(&s, QsOptions { tol, cluster_tol })?;
            ctx.check("synchronous state", dec.sync_defect, tol);
            ctx.check("convex recombination", dec.recombination_error, 10.0 * tol);
            ctx.check("blocks synchronous", dec.block_sync_defect, 10.0 * tol);
            let blocks: Vec<Value> = dec
                .blocks
                .iter()
                .map(|b| {
                    json!({
                        "weight": b.weight,
                        "schmidt_coefficient": b.schmidt_coefficient,
                        "dim": b.strategy.dim(),
                        "reduction_residual": b.reduction_residual.max(b.bob_reduction_residual),
                        "strategy": b.strategy.to_json_value(),
                        "correlation": b.correlation.to_json_value(),
                    })
                })
                .collect();
            Ok(Output::Json(emit(&out, json!({ "blocks": blocks }))?))
        }
        Command::Round(args) => round(args, ctx),
        Command::Group(cmd) => group(cmd, ctx),
        Command::Graph(cmd) => graph(cmd, ctx),
        Command::Demo(DemoCmd::MagicSquare { out_dir }) => demo_magic_square(out_dir, ctx),
    }
}

fn correlation_any(text: &str, tol: f64, ctx: &mut Run) -> Result<Correlation> {
    let v: Value = serde_json::from_str(text)?;
    if v.get("state").is_some() {
        let s = BipartiteStrategy::from_json(text)?;
        ctx.dim_cap(s.dim_a().max(s.dim_b()))?;
        correlation_from_bipartite(&s, tol)
    } else {
        let s = OperatorStrategy::from_json(text)?;
        ctx.dim_cap(s.dim())?;
        correlation_from_tracial(&s, tol)
    }
}

fn round(args: RoundArgs, ctx: &mut Run) -> Result<Output> {
    let text = ctx.read(&args.input)?;
    let v: Value = serde_json::from_str(&text)?;
    let opts = RoundingOptions {
        tol: ctx.global.tol,
        allow_boundary: args.allow_boundary,
        ..Default::default()
    };
    let (rounded, reports) = if v.get("pvms").is_some() {
        let s = OperatorStrategy::from_json(&text)?;
        ctx.dim_cap(s.dim())?;
        let mut out = OperatorStrategy::new(s.dim(), s.n_inputs(), s.n_outputs());
        let mut reports = Vec::new();
        for x in 0..s.n_inputs() {
            let (outputs, family): (Vec<usize>, Vec<CMatrix>) =
                s.row(x).map(|(a, e)| (a, e.clone())).unzip();
            let (qs, report) = crate::rounding::orthogonalize_family_in(s.dim(), &family, args.sum_one, opts)?;
            for (a, q) in outputs.into_iter().zip(qs) {
                out.set(x, a, q);
            }
            reports.push(report);
        }
        (out.to_json_value(), reports)
    } else {
        #[derive(serde::Deserialize)]
        struct Family {
            matrices: Vec<CMatrix>,
        }
        let fam: Family = serde_json::from_value(v)?;
        if let Some(m) = fam.matrices.first() {
            ctx.dim_cap(m.dim())?;
        }
        let (qs, report) = orthogonalize_family(&fam.matrices, args.sum_one, opts)?;
        (json!({ "matrices": qs }), vec![report])
    };
    for (k, r) in reports.iter().enumerate() {
        ctx.check(format!("family {} exact", k + 1), r.exactness_residual, crate::rounding::EXACT_TOL);
        ctx.check(format!("family {} within (40m+3) budget", k + 1), r.max_distance(), r.distance_budget + crate::rounding::EXACT_TOL);
    }
    let written = emit(&args.out, rounded)?;
    Ok(Output::Json(json!({ "output": written, "reports": reports })))
}

fn group(cmd: GroupCmd, ctx: &mut Run) -> Result<Output> {
    let tol = ctx.global.tol;
    match cmd {
        GroupCmd::Present { system } => {
            let sys = ctx.system(&system)?;
            Ok(Output::Text(presentation(&sys).to_text()))
        }
        GroupCmd::Verify { system, rep } => {
            let sys = ctx.system(&system)?;
            let r = ctx.rep(&rep)?;
            let report = verify_rep(&r, &sys, tol)?;
            ctx.check("unitarity", report.unitarity, tol);
            for rel in &report.relators {
                ctx.check(format!("relator {}", rel.relator), rel.residual, tol);
            }
            Ok(Output::Json(serde_json::to_value(report)?))
        }
        GroupCmd::ToStrategy { system, rep, out } => {
            let sys = ctx.system(&system)?;
            let r = ctx.rep(&rep)?;
            let s = strategy_from_rep(&r, &sys, tol)?;
            record_synbcs_checks(ctx, &s, &sys)?;
            Ok(Output::Json(emit(&out, s.to_json_value())?))
        }
        GroupCmd::FromStrategy {
            system,
            strategy,
            out,
        } => {
            let sys = ctx.system(&system)?;
            let s = ctx.strategy(&strategy)?;
            let r = rep_from_strategy(&s, &sys, tol)?;
            let report = verify_rep(&r, &sys, 10.0 * tol)?;
            ctx.check("recovered representation relators", report.max_residual(), 10.0 * tol);
            Ok(Output::Json(emit(&out, r.to_json_value())?))
        }
        GroupCmd::NormalizeJ { system, rep, out } => {
            let sys = ctx.system(&system)?;
            let r = ctx.rep(&rep)?;
            let n = normalize_j(&r, &sys, tol)?;
            let report = verify_rep(&n, &sys, 10.0 * tol)?;
            ctx.check("compressed representation relators", report.max_residual(), 10.0 * tol);
            Ok(Output::Json(emit(&out, n.to_json_value())?))
        }
    }
}

fn record_synbcs_checks(ctx: &mut Run, s: &OperatorStrategy, sys: &BinaryLinearSystem) -> Result<()> {
    let game = SyncGame::synbcs(sys)?;
    let c = correlation_from_tracial(s, 10.0 * ctx.global.tol)?;
    ctx.check("correlation synchronous", synchronicity_defect(&c), ctx.global.tol);
    ctx.check("correlation perfect", losing_mass(&c, &game)?, ctx.global.eps);
    Ok(())
}

fn graph(cmd: GraphCmd, ctx: &mut Run) -> Result<Output> {
    let tol = ctx.global.tol;
    match cmd {
        GraphCmd::Alpha(GraphInput { graph, max_vertices }) => {
            let g = ctx.graph(&graph)?;
            let set = graphs::max_independent_set(&g, limits(max_vertices))?;
            ctx.flag("witness is independent", g.is_independent(&set));
            Ok(Output::Text(set.len().to_string()))
        }
        GraphCmd::Omega(GraphInput { graph, max_vertices }) => {
            let g = ctx.graph(&graph)?;
            let clique = graphs::max_clique(&g, limits(max_vertices))?;
            ctx.flag("witness is a clique", g.is_clique(&clique));
            Ok(Output::Text(clique.len().to_string()))
        }
        GraphCmd::Chi(GraphInput { graph, max_vertices }) => {
            let g = ctx.graph(&graph)?;
            let colouring = graphs::optimal_colouring(&g, limits(max_vertices))?;
            ctx.flag("witness is a proper colouring", g.is_proper_colouring(&colouring));
            let k = colouring.iter().map(|c| c + 1).max().unwrap_or(0);
            Ok(Output::Text(k.to_string()))
        }
        GraphCmd::FromSystem {
            system,
            homogeneous,
            out,
        } => {
            let sys = ctx.system(&system)?;
            let sg = graph_from_system(&sys, !homogeneous)?;
            Ok(Output::Json(emit(&out, sg.graph.to_json_value())?))
        }
        GraphCmd::Certify { cert } => {
            let c = IndependenceCertificate::from_json(&ctx.read(&cert)?)?;
            ctx.dim_cap(c.strategy.dim())?;
            let r = c.check(tol)?;
            ctx.check("certificate relations", r.max_residual(), tol);
            Ok(Output::Json(json!({ "c": c.c, "relations": r })))
        }
        GraphCmd::Transport {
            cert,
            iso,
            target,
            out,
        } => {
            let c = IndependenceCertificate::from_json(&ctx.read(&cert)?)?;
            let iso = ctx.strategy(&iso)?;
            let h = ctx.graph(&target)?;
            ctx.dim_cap(c.strategy.dim() * iso.dim())?;
            let t = transport_independence(&c, &iso, &h, tol)?;
            let r = t.check(tol)?;
            ctx.check("transported certificate relations", r.max_residual(), tol);
            Ok(Output::Json(emit(&out, t.to_json_value())?))
        }
        GraphCmd::ColourGa0 { system } => {
            let sys = ctx.system(&system)?;
            let certs = complement_colouring_ga0(&sys)?;
            ctx.flag("colouring proper and set independent", true);
            Ok(Output::Json(serde_json::to_value(certs)?))
        }
    }
}

fn demo_magic_square(out_dir: Option<PathBuf>, ctx: &mut Run) -> Result<Output> {
    let (tol, eps) = (ctx.global.tol, ctx.global.eps);
    let sys = BinaryLinearSystem::magic_square();
    let save = |name: &str, v: &Value| -> Result<()> {
        if let Some(dir) = &out_dir {
            std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
            write_json(&dir.join(name), v)?;
        }
        Ok(())
    };
    save("system.json", &sys.to_json_value())?;

    let classical = sys.solve();
    ctx.flag("system has no classical solution", classical.is_none());
    let game = SyncGame::synbcs(&sys)?;
    save("game.json", &game.to_json_value())?;
    let search = find_deterministic_perfect_with(&game, SearchBudget::default());
    ctx.flag(
        "search certifies no deterministic perfect strategy",
        search == SearchOutcome::NoneExists,
    );

    let rep = magic_square_pauli_rep();
    save("pauli_rep.json", &rep.to_json_value())?;
    let rep_report = verify_rep(&rep, &sys, 1e-12)?;
    ctx.check("Pauli representation relators", rep_report.max_residual(), 1e-12);
    ctx.flag("Pauli representation has J != I", rep_report.j_nontrivial);

    let strategy = strategy_from_rep(&rep, &sys, tol)?;
    save("strategy.json", &strategy.to_json_value())?;
    let corr = correlation_from_tracial(&strategy, tol)?;
    let lose = losing_mass(&corr, &game)?;
    ctx.check("quantum correlation synchronous", synchronicity_defect(&corr), tol);
    ctx.check("quantum correlation perfect", lose, eps);

    let back = rep_from_strategy(&strategy, &sys, tol)?;
    let back_report = verify_rep(&back, &sys, 1e-8)?;
    ctx.check("recovered representation relators", back_report.max_residual(), 1e-8);

    let (iso, gb, g0) = iso_strategy_from_bcs(&strategy, &sys, tol)?;
    save("iso.json", &iso.to_json_value())?;
    save("g_ab.json", &gb.graph.to_json_value())?;
    save("g_a0.json", &g0.graph.to_json_value())?;
    let iso_report = crate::games::check_game_algebra_relations(
        &SyncGame::iso(&gb.graph, &g0.graph),
        &iso,
        tol,
    )?;
    ctx.check("isomorphism certificate relations", iso_report.max_residual(), tol);

    let homog = complement_colouring_ga0(&sys)?;
    let cert0 = IndependenceCertificate::from_independent_set(&g0.graph, &homog.independent_set)?;
    let cert = transport_independence(&cert0, &reverse_iso(&iso, gb.vertices.len()), &gb.graph, tol)?;
    save("independence_cert.json", &cert.to_json_value())?;
    let cert_report = cert.check(tol)?;
    ctx.check("quantum independence certificate relations", cert_report.max_residual(), tol);

    let alpha = graphs::alpha(&gb.graph)?;
    ctx.flag("classical alpha(G_Ab) = m - 1", alpha + 1 == sys.m());

    let recovered = rep_from_independence(&cert, &sys, tol)?;
    let rec_report = verify_rep(&recovered, &sys, 1e-8)?;
    ctx.check("representation from certificate relators", rec_report.max_residual(), 1e-8);

    Ok(Output::Json(json!({
        "classically_solvable": classical.is_some(),
        "deterministic_perfect_strategy": search.found().is_some(),
        "quantum_strategy_dim": strategy.dim(),
        "quantum_max_losing_probability": lose,
        "graph_vertices": gb.vertices.len(),
        "alpha": alpha,
        "quantum_independence_value": cert.c,
        "quantum_independence_dim": cert.strategy.dim(),
        "recovered_rep_dim": recovered.dim,
    })))
}

fn schema() -> Value {
    let matrix = json!({
        "dim": "int",
        "entries": "[[[re, im], ...], ...] row-major, dim x dim"
    });
    json!({
        "system": {
            "m": "int", "n": "int",
            "rows": "[[j, ...], ...] 1-based variable indices per equation",
            "b": "[0|1, ...] one per equation"
        },
        "matrix": matrix,
        "strategy": {
            "dim": "int", "inputs": "int", "outputs": "int",
            "pvms": "[{\"input\": x, \"output\": a, \"matrix\": matrix}, ...] 0-based, absent entries are zero",
            "outputs_note": "synBCS outputs are sign-vector masks: bit j set iff x_{j+1} = -1; output a maps to spectral value exp(2 pi i (a+1)/m)"
        },
        "bipartite_strategy": {
            "alice": "strategy", "bob": "strategy",
            "state": "[[re, im], ...] of length dimA*dimB, index a*dimB + b"
        },
        "correlation": {
            "n": "int", "m": "int",
            "p": "[x][y][a][b] dense, or",
            "sparse": "[[x, y, a, b, p], ...]"
        },
        "game": {
            "explicit": {"inputs": "[label]", "outputs": "[label]", "losing": "[[x, y, a, b], ...]"},
            "synbcs": {"kind": "synbcs", "system": "system"},
            "hom": {"kind": "hom", "g": "graph", "h": "graph"},
            "iso": {"kind": "iso", "g": "graph", "h": "graph", "note": "vertices V(G) then V(H)"}
        },
        "graph": {"n": "int", "edges": "[[u, v], ...] 0-based", "labels": "optional [label]"},
        "representation": {"dim": "int", "generators": "[matrix] images of u1..un", "J": "matrix"},
        "independence_certificate": {"graph": "graph", "c": "int", "strategy": "strategy for hom(K_c, complement(graph))"},
        "matrix_family": {"matrices": "[matrix]"},
        "run_report": {
            "command": "string",
            "inputs": "{path: sha256 hex}",
            "checks": "[{\"name\", \"residual\", \"threshold\", \"pass\"}]",
            "verdict": "pass | fail",
            "error": "optional string",
            "result": "command output",
            "wall_time_ms": "int"
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv: Vec<&str> = std::iter::once("syncgames").chain(args.iter().copied()).collect();
        let code = run(argv, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn command_names() {
        let cli = Cli::try_parse_from(["x", "graph", "alpha", "--graph", "g.json"]).unwrap();
        assert_eq!(command_name(&cli.command.unwrap()), "graph alpha");
        let cli = Cli::try_parse_from(["x", "round", "--in", "p.json"]).unwrap();
        assert_eq!(command_name(&cli.command.unwrap()), "round");
        let cli = Cli::try_parse_from(["x", "group", "normalize-j", "--system", "s", "--rep", "r"]).unwrap();
        assert_eq!(command_name(&cli.command.unwrap()), "group normalize-j");
    }

    #[test]
    fn unknown_flag_is_validation() {
        let (code, _, err) = run_args(&["graph", "alpha", "--nope"]);
        assert_eq!(code, 2);
        assert!(err.contains("--nope"));
    }

    #[test]
    fn missing_file_is_validation() {
        let (code, _, err) = run_args(&["graph", "alpha", "--graph", "/nonexistent/g.json"]);
        assert_eq!(code, 2);
        assert!(err.contains("nonexistent"));
    }

    #[test]
    fn schema_dump() {
        let (code, out, _) = run_args(&["--schema"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert!(v.get("run_report").is_some());
    }
}

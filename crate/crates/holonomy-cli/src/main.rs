//! Command-line driver: compile gate schedules, run evolutions, scan
//! slowdowns, inject faults, run the analysis formulas, and export
//! schedules. Batch use only; outputs are JSON/CSV files or stdout.

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use holonomy::codes::{bacon_shor, grid_qubit, GroupState};
use holonomy::engine::inject::{
    logical_cnot_parts, logical_x_parts, logical_z_parts, BlockLayout, ErrorEvent, InjectRunner,
};
use holonomy::engine::lemma1::{lemma1_demo, Lemma1Target};
use holonomy::engine::transport::parallel_transport;
use holonomy::engine::{evolve, extract_holonomy, DtPolicy};
use holonomy::pauli::Factor;
use holonomy::schedule::{
    compile_cnot, compile_single_qubit, EnvelopeKind, GateKind, Schedule,
};

#[derive(Debug)]
struct CliError(String);

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for CliError {}

type Result<T> = std::result::Result<T, Box<dyn std::error::Error>>;

fn err(msg: impl Into<String>) -> Box<dyn std::error::Error> {
    Box::new(CliError(msg.into()))
}

#[derive(Parser)]
#[command(
    name = "holonomy",
    about = "Holonomic gate schedules on stabilizer codes: compile, evolve, scan, inject",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the compiled gate library with segment counts and weights.
    Gates,
    /// Evolve one gate schedule and write a holonomy report (JSON).
    Run(RunArgs),
    /// Scan holonomy infidelity over slowdown values and write CSV.
    Scan(ScanArgs),
    /// Inject a Pauli error mid-schedule, decode, and report the verdict.
    Inject(InjectArgs),
    /// Closed-form and ODE error analysis.
    #[command(subcommand)]
    Analysis(AnalysisCmd),
    /// Constructive demonstrations.
    #[command(subcommand)]
    Demo(DemoCmd),
    /// Compile a schedule and write it as JSON without evolving it.
    ExportSchedule(ExportArgs),
}

#[derive(Args)]
struct GateSelection {
    /// Gate name: x, y, z, p, pdg, w, t, tdg, or cnot.
    #[arg(long)]
    gate: String,
    /// Code label.
    #[arg(long, default_value = "bacon-shor")]
    code: String,
    /// Grid position row,col of the addressed qubit (1-based).
    #[arg(long, default_value = "1,1")]
    qubit: String,
    /// Envelope family: linear or bump.
    #[arg(long, default_value = "linear")]
    envelope: String,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    gate: GateSelection,
    /// Slowdown factor (total time = slowdown × base duration).
    #[arg(long, default_value_t = 70.0)]
    slowdown: f64,
    /// RNG seed (falls back to HOLONOMY_SEED, then 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    gate: GateSelection,
    /// Slowdown values: comma list (5,10,20) or linspace start:end:count.
    #[arg(long)]
    slowdowns: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InjectArgs {
    /// Logical gate under test: x, z, or cnot.
    #[arg(long)]
    gate: String,
    /// Error event spec P@t:qubit,fraction (e.g. Z@t:9,0.5).
    #[arg(long)]
    error: String,
    #[arg(long, default_value = "bump")]
    envelope: String,
    #[arg(long, default_value_t = 17.0)]
    slowdown: f64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum AnalysisCmd {
    /// Slowdown needed for a target averaged infidelity.
    Slowdown {
        #[arg(long)]
        delta: f64,
    },
    /// Two-level rotating-frame integration of one segment.
    Ode {
        #[arg(long, default_value = "bump")]
        envelope: String,
        #[arg(long)]
        slowdown: f64,
    },
    /// Closed-form linear-ramp ground fidelity at inverse slowdown ε.
    ClosedForm {
        #[arg(long)]
        epsilon: f64,
    },
    /// Worst-case adiabatic condition of a compiled schedule.
    Condition {
        #[command(flatten)]
        gate: GateSelection,
        #[arg(long)]
        slowdown: f64,
    },
}

#[derive(Subcommand)]
enum DemoCmd {
    /// Composed-loop holonomy with an arbitrary excited dimension.
    Lemma1 {
        /// Excited-space dimension.
        #[arg(long)]
        d2: usize,
        /// Ground-space target: x or hadamard.
        #[arg(long, default_value = "x")]
        target: String,
    },
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    gate: GateSelection,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.or_else(|| {
        std::env::var("HOLONOMY_SEED")
            .ok()
            .and_then(|s| s.parse().ok())
    })
    .unwrap_or(0)
}

fn parse_grid(s: &str) -> Result<(usize, usize)> {
    let (r, c) = s
        .split_once(',')
        .ok_or_else(|| err(format!("qubit must be row,col: {s:?}")))?;
    let row: usize = r.trim().parse().map_err(|_| err(format!("bad row {r:?}")))?;
    let col: usize = c.trim().parse().map_err(|_| err(format!("bad col {c:?}")))?;
    if !(1..=3).contains(&row) || !(1..=3).contains(&col) {
        return Err(err(format!("grid position out of range: {row},{col}")));
    }
    Ok((row, col))
}

fn parse_slowdowns(s: &str) -> Result<Vec<f64>> {
    if let Some((a, rest)) = s.split_once(':') {
        let (b, n) = rest
            .split_once(':')
            .ok_or_else(|| err(format!("linspace must be start:end:count: {s:?}")))?;
        let start: f64 = a.parse().map_err(|_| err(format!("bad start {a:?}")))?;
        let end: f64 = b.parse().map_err(|_| err(format!("bad end {b:?}")))?;
        let count: usize = n.parse().map_err(|_| err(format!("bad count {n:?}")))?;
        if count < 2 || start <= 0.0 || end <= start {
            return Err(err(format!("bad linspace {s:?}")));
        }
        Ok((0..count)
            .map(|k| start + (end - start) * k as f64 / (count - 1) as f64)
            .collect())
    } else {
        s.split(',')
            .map(|v| {
                let x: f64 = v.trim().parse().map_err(|_| err(format!("bad value {v:?}")))?;
                if x <= 0.0 {
                    return Err(err(format!("slowdown must be positive: {x}")));
                }
                Ok(x)
            })
            .collect()
    }
}

/// Parse `P@t:qubit,fraction`.
fn parse_error_event(s: &str) -> Result<ErrorEvent> {
    let (p, rest) = s
        .split_once("@t:")
        .ok_or_else(|| err(format!("error spec must be P@t:qubit,fraction: {s:?}")))?;
    let factor = match p.trim() {
        "X" | "x" => Factor::X,
        "Y" | "y" => Factor::Y,
        "Z" | "z" => Factor::Z,
        other => return Err(err(format!("unknown Pauli {other:?}"))),
    };
    let (q, f) = rest
        .split_once(',')
        .ok_or_else(|| err(format!("error spec must be P@t:qubit,fraction: {s:?}")))?;
    let qubit: usize = q.trim().parse().map_err(|_| err(format!("bad qubit {q:?}")))?;
    let fraction: f64 = f.trim().parse().map_err(|_| err(format!("bad fraction {f:?}")))?;
    if !(0.0..=1.0).contains(&fraction) {
        return Err(err(format!("fraction must be in [0, 1]: {fraction}")));
    }
    Ok(ErrorEvent { factor, qubit, fraction })
}

fn check_code(label: &str) -> Result<()> {
    if label != "bacon-shor" {
        return Err(err(format!("unknown code {label:?}")));
    }
    Ok(())
}

/// Compile the selected gate: single-qubit gates on one block, CNOT between
/// two blocks at the same grid position.
fn build_schedule(sel: &GateSelection) -> Result<Schedule> {
    check_code(&sel.code)?;
    let envelope: EnvelopeKind = sel.envelope.parse()?;
    let code = bacon_shor();
    let (row, col) = parse_grid(&sel.qubit)?;
    let schedule = if sel.gate.eq_ignore_ascii_case("cnot") {
        let mut gs = GroupState::new(18);
        gs.add_code_block(&code, 0)?;
        gs.add_code_block(&code, 9)?;
        let q = grid_qubit(row, col);
        compile_cnot(&mut gs, q, 9 + q)?
    } else {
        let gate: GateKind = sel.gate.parse()?;
        let mut gs = GroupState::new(9);
        gs.add_code_block(&code, 0)?;
        compile_single_qubit(&mut gs, gate, grid_qubit(row, col))?
    };
    Ok(schedule.with_envelope(envelope))
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

fn cmd_gates() -> Result<ExitCode> {
    println!("{:<6} {:>9} {:>6} {:>11}  target", "gate", "segments", "loops", "max weight");
    for gate in ["x", "y", "z", "p", "pdg", "w", "t", "tdg", "cnot"] {
        let sel = GateSelection {
            gate: gate.into(),
            code: "bacon-shor".into(),
            qubit: "1,1".into(),
            envelope: "linear".into(),
        };
        let s = build_schedule(&sel)?;
        println!(
            "{:<6} {:>9} {:>6} {:>11}  {}",
            gate,
            s.segments.len(),
            s.loop_starts.len(),
            s.max_weight(),
            s.gate
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_run(args: RunArgs) -> Result<ExitCode> {
    if args.slowdown <= 0.0 {
        return Err(err("slowdown must be positive"));
    }
    let schedule = build_schedule(&args.gate)?;
    let seed = resolve_seed(args.seed);
    let u = evolve(&schedule, args.slowdown, &DtPolicy::default())?;
    let report = extract_holonomy(&schedule, &u, args.slowdown, Some(seed))?;
    let json = format!("{}\n", serde_json::to_string_pretty(&report)?);
    emit(&args.out, &json)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_scan(args: ScanArgs) -> Result<ExitCode> {
    let schedule = build_schedule(&args.gate)?;
    let slowdowns = parse_slowdowns(&args.slowdowns)?;
    let rows = holonomy::analysis::slowdown_scan(&schedule, &slowdowns, &DtPolicy::default())?;
    let mut buf = Vec::new();
    holonomy::analysis::write_scan_csv(&rows, &mut buf)?;
    emit(&args.out, std::str::from_utf8(&buf).expect("CSV is UTF-8"))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_inject(args: InjectArgs) -> Result<ExitCode> {
    let event = parse_error_event(&args.error)?;
    let envelope: EnvelopeKind = args.envelope.parse()?;
    let seed = resolve_seed(args.seed);
    let code = bacon_shor();
    let mut runner = match args.gate.to_ascii_lowercase().as_str() {
        "cnot" => {
            if event.qubit >= 18 {
                return Err(err(format!("qubit {} outside the two blocks", event.qubit)));
            }
            InjectRunner::new(
                logical_cnot_parts(envelope)?,
                "CNOT",
                vec![
                    BlockLayout { code: code.clone(), offset: 0 },
                    BlockLayout { code, offset: 9 },
                ],
                args.slowdown,
                vec![true, false],
            )
        }
        "x" | "z" => {
            if event.qubit >= 9 {
                return Err(err(format!("qubit {} outside the block", event.qubit)));
            }
            let (parts, name, plus) = if args.gate.eq_ignore_ascii_case("x") {
                (logical_x_parts(envelope)?, "X", false)
            } else {
                (logical_z_parts(envelope)?, "Z", true)
            };
            InjectRunner::new(
                parts,
                name,
                vec![BlockLayout { code, offset: 0 }],
                args.slowdown,
                vec![plus],
            )
        }
        other => {
            return Err(err(format!(
                "inject supports the logical gates x, z, cnot (got {other:?})"
            )));
        }
    };
    let verdict = runner.run(event, seed)?;
    let json = format!("{}\n", serde_json::to_string_pretty(&verdict)?);
    emit(&args.out, &json)?;
    if verdict.pass {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(2))
    }
}

fn cmd_analysis(cmd: AnalysisCmd) -> Result<ExitCode> {
    match cmd {
        AnalysisCmd::Slowdown { delta } => {
            let s = holonomy::analysis::required_slowdown(delta)?;
            println!("required slowdown for averaged infidelity {delta:e}: {s:.6}");
        }
        AnalysisCmd::Ode { envelope, slowdown } => {
            let kind: EnvelopeKind = envelope.parse()?;
            let sol = holonomy::analysis::two_level_ode(kind, slowdown);
            println!("envelope {kind}, slowdown {slowdown}:");
            println!("  leakage          {:.6e}", sol.leakage);
            println!("  gate infidelity  {:.6e}", sol.gate_infidelity);
        }
        AnalysisCmd::ClosedForm { epsilon } => {
            if epsilon <= 0.0 {
                return Err(err("epsilon must be positive"));
            }
            let p = holonomy::analysis::ground_fidelity_closed_form(epsilon);
            let avg = holonomy::analysis::averaged_ground_infidelity(epsilon);
            println!("ground fidelity   {p:.12}");
            println!("averaged infid.   {avg:.6e}");
        }
        AnalysisCmd::Condition { gate, slowdown } => {
            let s = build_schedule(&gate)?;
            let a = holonomy::analysis::adiabatic_condition(&s, slowdown);
            println!("drive {:.6e}  gap {:.3}  ratio {:.6e}", a.drive, a.gap, a.ratio);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_demo(cmd: DemoCmd) -> Result<ExitCode> {
    match cmd {
        DemoCmd::Lemma1 { d2, target } => {
            let target = match target.to_ascii_lowercase().as_str() {
                "x" => Lemma1Target::X,
                "h" | "hadamard" | "w" => Lemma1Target::Hadamard,
                other => return Err(err(format!("unknown target {other:?}"))),
            };
            if d2 == 0 {
                return Err(err("d2 must be at least 1"));
            }
            let out = lemma1_demo(d2, target)?;
            println!("d2 {}  target {:?}", out.d2, target);
            println!("  ground residual   {:.3e}", out.ground_residual);
            println!("  excited residual  {:.3e}", out.excited_residual);
            println!("  cross residual    {:.3e}", out.cross_residual);
            println!("  steps/sub-loop    {}", out.steps);
            let ok = out.ground_residual <= 1e-8
                && out.excited_residual <= 1e-8
                && out.cross_residual <= 1e-8;
            if !ok {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_export(args: ExportArgs) -> Result<ExitCode> {
    let schedule = build_schedule(&args.gate)?;
    // Quick independent sanity pass before exporting.
    let t = parallel_transport(&schedule)?;
    drop(t);
    let json = format!("{}\n", serde_json::to_string_pretty(&schedule)?);
    emit(&args.out, &json)?;
    Ok(ExitCode::SUCCESS)
}

fn run_cli(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Gates => cmd_gates(),
        Command::Run(a) => cmd_run(a),
        Command::Scan(a) => cmd_scan(a),
        Command::Inject(a) => cmd_inject(a),
        Command::Analysis(c) => cmd_analysis(c),
        Command::Demo(c) => cmd_demo(c),
        Command::ExportSchedule(a) => cmd_export(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run_cli(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

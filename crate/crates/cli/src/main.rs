use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use workcost::capacity::{self, CapacityReport, CaseStudy};
use workcost::emulator::neural::{self, NeuralNet, NeuralOptions};
use workcost::emulator::utm;
use workcost::game::{self, GameTranscript, PlayOptions, Script};
use workcost::machine::{RunLimits, RunSummary};
use workcost::search::{self, FamilyLimits, SearchOptions};
use workcost::{
    tradeoff, Configuration, CostLedger, CostMeter, CostModel, MachineDoc, MachineSpec, Status, Symbol, TableSizeMode,
    FORMAT_VERSION,
};

const EXIT_ERROR: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_BUDGET: u8 = 3;

#[derive(Parser)]
#[command(
    name = "workcost",
    version,
    about = "Cost-metered Turing machines, emulators and capacity models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a machine and report its cost.
    Run(RunArgs),
    /// Play a System machine against an Environment script.
    Game(GameArgs),
    /// Build the dual-tape emulator for a machine and verify its cost bound.
    Emulate(EmulateArgs),
    /// Simulate a discrete neural net, directly or on the machine ensemble.
    Nnsim(NnsimArgs),
    /// Search for the cheapest accepted program or machine/program pair.
    Search(SearchArgs),
    /// Evaluate the processor-width trade-off.
    Tradeoff(TradeoffArgs),
    /// Capacity reports for the bundled case studies.
    Capacity(CapacityArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum TableMode {
    Formula,
    Packed,
}

impl From<TableMode> for TableSizeMode {
    fn from(m: TableMode) -> Self {
        match m {
            TableMode::Formula => TableSizeMode::Formula,
            TableMode::Packed => TableSizeMode::Packed,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Args)]
struct Output {
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, value_enum)]
    table_size: Option<TableMode>,
    /// Charge head-position counters every step.
    #[arg(long)]
    head_cost: bool,
}

impl ModelArgs {
    fn model(&self, default: TableMode) -> CostModel {
        CostModel {
            table_mode: self.table_size.unwrap_or(default).into(),
            include_head_cost: self.head_cost,
            device_bits: 0.0,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    machine: PathBuf,
    /// Initial tape 0 contents as symbol names, separated by commas or spaces.
    #[arg(long, default_value = "")]
    input: String,
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long, default_value_t = 1_000_000)]
    max_steps: u64,
    #[command(flatten)]
    model: ModelArgs,
    /// Per-step cost trace; CSV when the path ends in .csv, JSON lines otherwise.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct GameArgs {
    /// `titfortat` or a machine document.
    #[arg(long)]
    system: String,
    #[arg(long, conflicts_with = "seed")]
    script: Option<PathBuf>,
    /// Seed for a random Environment script.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 10)]
    turns: usize,
    #[arg(long)]
    budget: Option<f64>,
    #[command(flatten)]
    model: ModelArgs,
    /// Per-turn records as JSON lines.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct EmulateArgs {
    #[arg(long)]
    machine: PathBuf,
    #[arg(long, default_value = "")]
    input: String,
    #[arg(long, default_value_t = 100_000)]
    max_steps: u64,
    /// Also write the emulator's machine document.
    #[arg(long)]
    emit_emulator: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum NetMode {
    Direct,
    Plain,
    Accumulator,
}

#[derive(Args)]
struct NnsimArgs {
    #[arg(long, conflicts_with = "seed")]
    net: Option<PathBuf>,
    /// Seed for a random net.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 6)]
    nodes: usize,
    #[arg(long, default_value_t = 4)]
    k: usize,
    #[arg(long, default_value_t = 8)]
    width: u32,
    #[arg(long)]
    ticks: u64,
    #[arg(long, value_enum, default_value = "accumulator")]
    mode: NetMode,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SearchArgs {
    /// Program search on this machine.
    #[arg(long, required_unless_present = "pair")]
    machine: Option<PathBuf>,
    /// A program known to be accepted.
    #[arg(long, default_value = "")]
    reference: String,
    /// Accept runs that leave these symbols on tape 0 from position 0.
    #[arg(long)]
    target: String,
    #[arg(long, default_value_t = 8)]
    max_len: usize,
    #[arg(long, default_value_t = 1_000_000)]
    cap: u64,
    /// Search machine/program pairs instead.
    #[arg(long)]
    pair: bool,
    #[arg(long, default_value_t = 2)]
    max_states: u32,
    #[arg(long, value_delimiter = ',', default_value = "2")]
    symbols: Vec<u32>,
    #[arg(long, default_value_t = 1)]
    max_skip: u32,
    /// Cost bound for pair search.
    #[arg(long)]
    bound: Option<f64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct TradeoffArgs {
    #[arg(long)]
    m: f64,
    #[arg(long)]
    n: f64,
    /// Ratio of effective tape bits to table bits.
    #[arg(long)]
    omega: f64,
    #[arg(long, default_value_t = 0.25)]
    delta_min: f64,
    #[arg(long, default_value_t = 2.0)]
    delta_max: f64,
    #[arg(long, default_value_t = 8)]
    points: usize,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct CapacityArgs {
    /// Bundled case study name or JSON file.
    #[arg(long, required_unless_present = "all")]
    fixture: Option<String>,
    #[arg(long)]
    all: bool,
    /// Use the rounded descriptor sizes of the published arithmetic.
    #[arg(long)]
    published_rounding: bool,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug)]
struct Failure {
    kind: &'static str,
    message: String,
    code: u8,
}

impl Failure {
    fn usage(message: impl ToString) -> Self {
        Failure {
            kind: "usage",
            message: message.to_string(),
            code: EXIT_USAGE,
        }
    }
    fn schema(message: impl ToString) -> Self {
        Failure {
            kind: "schema",
            message: message.to_string(),
            code: EXIT_USAGE,
        }
    }
    fn io(path: &Path, e: std::io::Error) -> Self {
        Failure {
            kind: "io",
            message: format!("{}: {e}", path.display()),
            code: EXIT_ERROR,
        }
    }
    fn runtime(message: impl ToString) -> Self {
        Failure {
            kind: "runtime",
            message: message.to_string(),
            code: EXIT_ERROR,
        }
    }
}

type Outcome = Result<u8, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

/// Writes through a temporary file in the target directory and renames it.
fn write_atomic(path: &Path, contents: &str) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Failure::io(path, e))?;
    tmp.write_all(contents.as_bytes()).map_err(|e| Failure::io(path, e))?;
    tmp.persist(path).map_err(|e| Failure::io(path, e.error))?;
    Ok(())
}

fn emit(output: &Output, contents: &str) -> Result<(), Failure> {
    match &output.out {
        Some(p) => write_atomic(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn load_machine(path: &Path) -> Result<MachineSpec, Failure> {
    let doc = MachineDoc::from_json(&read(path)?).map_err(Failure::schema)?;
    doc.build().map_err(Failure::schema)
}

fn parse_symbols(spec: &MachineSpec, text: &str) -> Result<Vec<Symbol>, Failure> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            spec.symbol_id(t)
                .ok_or_else(|| Failure::usage(format!("unknown symbol {t:?}")))
        })
        .collect()
}

#[derive(Serialize)]
struct TapeReport {
    head: i64,
    cells: Vec<(i64, String)>,
}

fn tape_reports(config: &Configuration) -> Vec<TapeReport> {
    let spec = config.spec();
    config
        .tapes()
        .iter()
        .map(|t| TapeReport {
            head: t.head(),
            cells: t
                .contents()
                .into_iter()
                .map(|(p, s)| (p, spec.symbol_name(s).to_string()))
                .collect(),
        })
        .collect()
}

fn cmd_run(a: RunArgs) -> Outcome {
    let spec = Arc::new(load_machine(&a.machine)?);
    let input = parse_symbols(&spec, &a.input)?;
    let meter = CostMeter::new(&spec, a.model.model(TableMode::Formula)).map_err(Failure::runtime)?;
    let mut config = Configuration::new(Arc::clone(&spec)).with_tape(0, &input);
    let mut ledger = if a.trace.is_some() {
        CostLedger::new()
    } else {
        CostLedger::totals_only()
    };
    let limits = RunLimits {
        budget_bits: a.budget.unwrap_or(f64::INFINITY),
        max_steps: Some(a.max_steps),
    };
    let summary: RunSummary = config.run(&meter, limits, &mut ledger).map_err(Failure::runtime)?;
    if let Some(path) = &a.trace {
        let text = if path.extension().is_some_and(|e| e == "csv") {
            ledger.to_csv(0)
        } else {
            ledger.to_jsonl(0)
        };
        write_atomic(path, &text)?;
    }
    let report = json!({
        "format_version": FORMAT_VERSION,
        "fsm_bits": meter.fsm_bits(),
        "steps": summary.steps,
        "cost_bits": summary.cost_bits,
        "status": summary.status,
        "step_cap_hit": summary.step_cap_hit,
        "final_state": spec.state_name(config.state()),
        "tapes": tape_reports(&config),
    });
    emit(&a.output, &to_json(&report))?;
    Ok(if summary.status == Status::BudgetExceeded {
        EXIT_BUDGET
    } else {
        0
    })
}

fn cmd_game(a: GameArgs) -> Outcome {
    let system = if a.system == "titfortat" {
        game::tit_for_tat_machine()
    } else {
        load_machine(Path::new(&a.system))?
    };
    let script = match (&a.script, a.seed) {
        (Some(p), _) => Script::from_json(&read(p)?).map_err(Failure::schema)?,
        (None, Some(seed)) => Script::random(seed, a.turns),
        (None, None) => return Err(Failure::usage("either --script or --seed is required")),
    };
    let opts = PlayOptions {
        budget_bits: a.budget.unwrap_or(f64::INFINITY),
        model: a.model.model(TableMode::Packed),
        ..PlayOptions::default()
    };
    let t: GameTranscript = game::play(Arc::new(system), &script, &opts).map_err(Failure::runtime)?;
    if let Some(path) = &a.trace {
        let mut text = String::new();
        for turn in &t.turns {
            text.push_str(&serde_json::to_string(turn).expect("turn serializes"));
            text.push('\n');
        }
        write_atomic(path, &text)?;
    }
    emit(&a.output, &t.to_json())?;
    Ok(if t.budget_exhausted { EXIT_BUDGET } else { 0 })
}

fn cmd_emulate(a: EmulateArgs) -> Outcome {
    let spec = load_machine(&a.machine)?;
    let input = parse_symbols(&spec, &a.input)?;
    let bundle = utm::build_utm_emulator(&spec).map_err(Failure::runtime)?;
    if let Some(p) = &a.emit_emulator {
        write_atomic(p, &bundle.emulator_doc().to_json())?;
    }
    let v = utm::verify(&bundle, &input, a.max_steps)
        .map_err(Failure::runtime)?
        .ok_or_else(|| Failure::runtime(format!("machine did not halt within {} steps", a.max_steps)))?;
    let report = json!({
        "format_version": FORMAT_VERSION,
        "emulator_states": bundle.emulator.state_count(),
        "emulator_symbols": bundle.emulator.tape_alphabets(),
        "verification": v,
        "ok": v.ok(),
    });
    emit(&a.output, &to_json(&report))?;
    Ok(if v.ok() { 0 } else { EXIT_ERROR })
}

fn cmd_nnsim(a: NnsimArgs) -> Outcome {
    let net = match (&a.net, a.seed) {
        (Some(p), _) => NeuralNet::from_json(&read(p)?).map_err(Failure::schema)?,
        (None, Some(seed)) => neural::random_net_from_seed(seed, a.nodes, a.k, a.width),
        (None, None) => return Err(Failure::usage("either --net or --seed is required")),
    };
    net.validate().map_err(Failure::schema)?;
    let report = if a.mode == NetMode::Direct {
        json!({
            "format_version": FORMAT_VERSION,
            "ticks": a.ticks,
            "trajectory": neural::simulate(&net, a.ticks),
        })
    } else {
        let opts = NeuralOptions {
            n_max: net.nodes.len(),
            k_max: net.max_in_degree().max(1),
            accumulator: a.mode == NetMode::Accumulator,
        };
        let v = neural::verify_neural(&net, opts, a.ticks).map_err(Failure::runtime)?;
        json!({
            "format_version": FORMAT_VERSION,
            "trajectory": neural::simulate(&net, a.ticks),
            "verification": v,
        })
    };
    emit(&a.output, &to_json(&report))?;
    Ok(0)
}

fn cmd_search(a: SearchArgs) -> Outcome {
    let opts = SearchOptions {
        max_len: a.max_len,
        candidate_cap: a.cap,
        ..SearchOptions::default()
    };
    if a.pair {
        let bound = a.bound.ok_or_else(|| Failure::usage("--pair needs --bound"))?;
        let target: Vec<Symbol> = a
            .target
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse().map_err(|_| Failure::usage(format!("bad symbol {t:?}"))))
            .collect::<Result<_, _>>()?;
        let family = FamilyLimits {
            max_states: a.max_states,
            symbols: a.symbols,
            max_skip: a.max_skip,
        };
        let oracle = move |c: &Configuration| c.tape(0).window(0, target.len()) == target;
        let r = search::least_cost_pair(&family, bound, &oracle, &opts).map_err(Failure::runtime)?;
        emit(
            &a.output,
            &to_json(&json!({ "format_version": FORMAT_VERSION, "result": r })),
        )?;
        return Ok(0);
    }
    let path = a
        .machine
        .as_ref()
        .ok_or_else(|| Failure::usage("--machine is required"))?;
    let spec = Arc::new(load_machine(path)?);
    let reference = parse_symbols(&spec, &a.reference)?;
    let target = parse_symbols(&spec, &a.target)?;
    let oracle = move |c: &Configuration| c.tape(0).window(0, target.len()) == target;
    let r = search::least_cost_program(&spec, &reference, &oracle, &opts).map_err(Failure::runtime)?;
    let program: Vec<&str> = r.best.program.iter().map(|&s| spec.symbol_name(s)).collect();
    emit(
        &a.output,
        &to_json(&json!({ "format_version": FORMAT_VERSION, "program": program, "result": r })),
    )?;
    Ok(0)
}

fn cmd_tradeoff(a: TradeoffArgs) -> Outcome {
    let grid = tradeoff::delta_grid(a.delta_min, a.delta_max, a.points);
    let r = tradeoff::report(a.omega, a.m, a.n, &grid).map_err(Failure::usage)?;
    let text = match a.format {
        Format::Json => to_json(&json!({ "format_version": FORMAT_VERSION, "report": r })),
        Format::Csv => r.to_csv(),
        Format::Text => {
            let mut s = format!(
                "m = {} n = {} omega = {}\ndelta* = {:.6}\nderivative root = {:.6}\n",
                r.m, r.n, r.omega, r.optimal_delta, r.exact_optimal_delta
            );
            for row in &r.rows {
                s.push_str(&format!(
                    "  delta {:>8.4}  cost ratio {:.6e}\n",
                    row.delta, row.cost_ratio
                ));
            }
            s
        }
    };
    emit(&a.output, &text)?;
    Ok(0)
}

fn load_case(name: &str) -> Result<CaseStudy, Failure> {
    let path = Path::new(name);
    if path.is_file() {
        return CaseStudy::from_json(&read(path)?).map_err(Failure::schema);
    }
    let stem = name.strip_suffix(".json").unwrap_or(name);
    capacity::case_study(stem).map_err(Failure::usage)
}

fn cmd_capacity(a: CapacityArgs) -> Outcome {
    let cases = if a.all {
        capacity::case_studies()
    } else {
        vec![load_case(a.fixture.as_deref().expect("clap requires fixture"))?]
    };
    let reports: Vec<CapacityReport> = cases
        .iter()
        .map(|c| c.report(a.published_rounding).map_err(Failure::schema))
        .collect::<Result<_, _>>()?;
    let text = match a.format {
        Format::Json => to_json(&json!({ "format_version": FORMAT_VERSION, "reports": reports })),
        Format::Csv => {
            let mut s = CapacityReport::csv_header().to_string();
            reports.iter().for_each(|r| s.push_str(&r.to_csv_rows()));
            s
        }
        Format::Text => reports.iter().map(CapacityReport::to_text).collect(),
    };
    emit(&a.output, &text)?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            report_failure(&Failure::usage(e.to_string().trim_end()));
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Game(a) => cmd_game(a),
        Command::Emulate(a) => cmd_emulate(a),
        Command::Nnsim(a) => cmd_nnsim(a),
        Command::Search(a) => cmd_search(a),
        Command::Tradeoff(a) => cmd_tradeoff(a),
        Command::Capacity(a) => cmd_capacity(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            report_failure(&f);
            ExitCode::from(f.code)
        }
    }
}

fn report_failure(f: &Failure) {
    let record = json!({
        "format_version": FORMAT_VERSION,
        "error": { "kind": f.kind, "message": f.message, "exit_code": f.code },
    });
    eprintln!("{record}");
}

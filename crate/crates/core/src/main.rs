use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use placevalue::api::{self, ClockMode, ServeConfig};
use placevalue::clock::{Clock, SystemClock};
use placevalue::sim::{simulate, SimulationModel, Spread};
use placevalue::stats::report::TABLE_IDS;
use placevalue::stats::{ReportOptions, TableFormat, Tails, TotalSdMethod};
use placevalue::store::{
    load_dir, parse_traditional_csv, read_log, replay, Command, Datastore, LOG_FILE, SNAPSHOT_FILE,
};

#[derive(Debug, Parser)]
#[command(name = "placevalue", version, about = "Place-value tutor service, cohort simulator and study analysis")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Run the HTTP service.
    Serve(ServeArgs),
    /// Drive a synthetic cohort through the whole protocol.
    Simulate(SimulateArgs),
    /// Build every table that the data supports and write them to a directory.
    Analyze(AnalyzeArgs),
    /// Rebuild state from the event log and check it against the snapshot.
    Replay(DataDir),
    /// Import traditional-cohort scores from a CSV file.
    ImportTraditional(ImportArgs),
    /// Print or write a single table.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
struct DataDir {
    #[arg(long, env = "PLACEVALUE_DATA_DIR", default_value = "data")]
    data_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ClockArg {
    Real,
    Simulated,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TailsArg {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TotalSdArg {
    RespondentMean,
    ItemMean,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OutputFormats {
    Text,
    Csv,
    Both,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long, value_enum, default_value = "one")]
    tails: TailsArg,
    /// How the S.D. of a rating table's total row is computed.
    #[arg(long, value_enum, default_value = "respondent-mean")]
    total_sd: TotalSdArg,
}

impl ReportArgs {
    fn options(&self) -> ReportOptions {
        ReportOptions {
            tails: match self.tails {
                TailsArg::One => Tails::One,
                TailsArg::Two => Tails::Two,
            },
            total_sd: match self.total_sd {
                TotalSdArg::RespondentMean => TotalSdMethod::RespondentMean,
                TotalSdArg::ItemMean => TotalSdMethod::ItemMean,
            },
        }
    }
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, env = "PLACEVALUE_HOST", default_value = "127.0.0.1")]
    host: std::net::IpAddr,
    /// 0 picks a free port; the bound port is printed on startup.
    #[arg(long, env = "PLACEVALUE_PORT", default_value_t = 8080)]
    port: u16,
    #[command(flatten)]
    dir: DataDir,
    /// Seed base for session papers.
    #[arg(long, env = "PLACEVALUE_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, env = "PLACEVALUE_CLOCK", default_value = "real")]
    clock: ClockArg,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 400)]
    students: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[command(flatten)]
    dir: DataDir,
    /// Replace an existing log in the data directory.
    #[arg(long)]
    force: bool,
    #[arg(long, default_value_t = 0.53)]
    pre_mean: f64,
    #[arg(long, default_value_t = 0.17)]
    pre_sd: f64,
    #[arg(long, default_value_t = 0.42)]
    gain_mean: f64,
    #[arg(long, default_value_t = 0.10)]
    gain_sd: f64,
    #[arg(long, default_value_t = 0.0)]
    decay_mean: f64,
    #[arg(long, default_value_t = 0.02)]
    decay_sd: f64,
    #[arg(long, default_value_t = 0.16)]
    traditional_gain_mean: f64,
    #[arg(long, default_value_t = 0.08)]
    traditional_gain_sd: f64,
    /// Skip the traditional-cohort import.
    #[arg(long)]
    no_traditional: bool,
    #[arg(long, default_value_t = 5)]
    experts: usize,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    dir: DataDir,
    #[arg(long, default_value = "report")]
    out_dir: PathBuf,
    #[arg(long, value_enum, default_value = "both")]
    format: OutputFormats,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Debug, Args)]
struct ImportArgs {
    #[command(flatten)]
    dir: DataDir,
    /// CSV with header student_id,pretest,during,posttest,retention.
    file: PathBuf,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[command(flatten)]
    dir: DataDir,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=6))]
    table: u8,
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
    /// Write here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    report: ReportArgs,
}

type CliResult = Result<(), Box<dyn std::error::Error>>;

fn require_log(dir: &Path) -> CliResult {
    if !dir.join(LOG_FILE).exists() {
        return Err(format!("no event log in {}; run simulate or serve first", dir.display()).into());
    }
    Ok(())
}

fn cmd_serve(args: ServeArgs) -> CliResult {
    let config = ServeConfig {
        host: args.host,
        port: args.port,
        data_dir: args.dir.data_dir,
        seed: args.seed,
        clock: match args.clock {
            ClockArg::Real => ClockMode::Real,
            ClockArg::Simulated => ClockMode::Simulated,
        },
    };
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(api::serve(
        config,
        async {
            let _ = tokio::signal::ctrl_c().await;
        },
        |addr| {
            println!("listening on http://{addr}");
            println!("port {}", addr.port());
            let _ = std::io::stdout().flush();
        },
    ))?;
    println!("shut down; log flushed");
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> CliResult {
    let model = SimulationModel {
        n_students: args.students,
        seed: args.seed,
        pre_accuracy: Spread::new(args.pre_mean, args.pre_sd),
        gain: Spread::new(args.gain_mean, args.gain_sd),
        retention_decay: Spread::new(args.decay_mean, args.decay_sd),
        traditional_gain: (!args.no_traditional).then(|| Spread::new(args.traditional_gain_mean, args.traditional_gain_sd)),
        n_experts: args.experts,
        ..SimulationModel::default()
    };
    let summary = simulate(&model, &args.dir.data_dir, args.force)?;
    println!(
        "simulated {} students ({} traditional rows, {} expert ratings): {} events in {}",
        summary.students,
        summary.traditional_rows,
        summary.experts,
        summary.events,
        args.dir.data_dir.join(LOG_FILE).display()
    );
    Ok(())
}

fn cmd_analyze(args: AnalyzeArgs) -> CliResult {
    require_log(&args.dir.data_dir)?;
    let store = load_dir(&args.dir.data_dir, 0)?;
    let report = store.report(&args.report.options())?;
    fs::create_dir_all(&args.out_dir)?;
    let formats: &[TableFormat] = match args.format {
        OutputFormats::Text => &[TableFormat::Text],
        OutputFormats::Csv => &[TableFormat::Csv],
        OutputFormats::Both => &[TableFormat::Text, TableFormat::Csv],
    };
    for table in &report.tables {
        for &format in formats {
            let path = args.out_dir.join(format!("table{}.{}", table.id, format.extension()));
            fs::write(&path, table.render(format))?;
        }
    }
    fs::write(args.out_dir.join("notes.txt"), report.notes_text())?;
    println!("wrote {} of {} tables to {}", report.tables.len(), TABLE_IDS.len(), args.out_dir.display());
    for notice in report.omission_notices() {
        println!("{notice}");
    }
    Ok(())
}

fn cmd_replay(args: DataDir) -> CliResult {
    require_log(&args.data_dir)?;
    let records = read_log(&args.data_dir.join(LOG_FILE))?;
    let store = replay(&records, 0)?;
    println!("replayed {} events", records.len());
    let snapshot = args.data_dir.join(SNAPSHOT_FILE);
    if snapshot.exists() {
        if fs::read_to_string(&snapshot)? != store.snapshot_json() {
            return Err(format!("replayed state differs from {}", snapshot.display()).into());
        }
        println!("state matches {}", snapshot.display());
    }
    Ok(())
}

fn cmd_import(args: ImportArgs) -> CliResult {
    let text = fs::read_to_string(&args.file)?;
    let parsed = parse_traditional_csv(&text).map_err(placevalue::store::StoreError::Import)?;
    for w in &parsed.warnings {
        eprintln!("warning: {w}");
    }
    if parsed.rows.is_empty() {
        println!("imported 0 rows");
        return Ok(());
    }
    let clock: Arc<dyn Clock> = Arc::new(SystemClock);
    let mut store = Datastore::open(&args.dir.data_dir, 0, clock)?;
    let applied = store.execute(None, Command::ImportTraditional { rows: parsed.rows })?;
    if let placevalue::store::Applied::Imported { count } = applied {
        println!("imported {count} rows");
    }
    Ok(())
}

fn cmd_export(args: ExportArgs) -> CliResult {
    require_log(&args.dir.data_dir)?;
    let store = load_dir(&args.dir.data_dir, 0)?;
    let format = match args.format {
        FormatArg::Text => TableFormat::Text,
        FormatArg::Csv => TableFormat::Csv,
    };
    let body = store.export_table(args.table, format, &args.report.options())?;
    match args.out {
        Some(path) => fs::write(path, body)?,
        None => print!("{body}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Serve(a) => cmd_serve(a),
        Cmd::Simulate(a) => cmd_simulate(a),
        Cmd::Analyze(a) => cmd_analyze(a),
        Cmd::Replay(a) => cmd_replay(a),
        Cmd::ImportTraditional(a) => cmd_import(a),
        Cmd::Export(a) => cmd_export(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

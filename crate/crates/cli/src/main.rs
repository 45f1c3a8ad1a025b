mod load;
mod script;
mod session;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use ontotrader_config::codegen::{generate, write, GenerateError, WriteError};
use ontotrader_config::dsl::Diagnostic;
use ontotrader_core::model::{
    validate_configuration, validate_repository, validate_system, ValidationReport,
};
use ontotrader_core::ontomsg::Mode;
use ontotrader_core::routing::{check_conformance, RuntimeConfig, System, Transport};
use ontotrader_core::store::load_dir;

use load::{load, LoadError, Loaded};
use session::{Session, Status};

const OK: u8 = 0;
const DIAGNOSTICS: u8 = 1;
const RUNTIME: u8 = 2;

#[derive(Parser)]
#[command(
    name = "ontotrader",
    version,
    about = "Validate, generate and run ontological trader deployments"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse, link and validate configuration files.
    Validate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Write the deployment script and per-node scaffolds.
    Generate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
        /// Replace existing files.
        #[arg(long)]
        force: bool,
    },
    /// Start every module of the architecture and run commands against it.
    Run(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum RunMode {
    Inproc,
    Tcp,
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(required = true)]
    files: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "inproc")]
    mode: RunMode,
    /// `<processing module>=<dir>`: register every JSON document of `dir`.
    #[arg(long = "seed-dir", value_name = "MODULE=DIR")]
    seed_dirs: Vec<String>,
    /// `<processing module>=<path,path>`: fields projected to the trader.
    #[arg(long, value_name = "MODULE=PATHS")]
    indexed: Vec<String>,
    #[arg(long = "trace-out")]
    trace_out: Option<PathBuf>,
    /// Command file; without it commands are read from standard input.
    #[arg(long)]
    script: Option<PathBuf>,
    #[arg(long = "timeout-ms", default_value_t = 5000)]
    timeout_ms: u64,
    /// In TCP mode, bind free loopback ports instead of the modelled ones.
    #[arg(long = "ephemeral-ports")]
    ephemeral_ports: bool,
    /// Forward queries to federated traders even when answered locally.
    #[arg(long = "federate-always")]
    federate_always: bool,
    /// Hold traders to the response tables without the lenient additions.
    #[arg(long)]
    strict: bool,
    /// Run the architecture without requiring a deployable configuration.
    #[arg(long = "arch-only")]
    arch_only: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ONTOTRADER_LOG", "warn"))
        .init();
    let code = match Cli::parse().command {
        Cmd::Validate { files } => validate(&files),
        Cmd::Generate { files, out, force } => generate_cmd(&files, &out, force),
        Cmd::Run(args) => run(args),
    };
    ExitCode::from(code)
}

fn print_diagnostics(diags: &[Diagnostic]) {
    for d in diags {
        eprintln!("{d}");
    }
}

/// Loads and links, printing diagnostics. `Err` carries the exit code.
fn load_or_report(files: &[PathBuf]) -> Result<Loaded, u8> {
    match load(files) {
        Ok(l) => {
            print_diagnostics(&l.linked.warnings);
            Ok(l)
        }
        Err(LoadError::Io(e)) => {
            eprintln!("error: {e}");
            Err(RUNTIME)
        }
        Err(LoadError::Diagnostics(d)) => {
            print_diagnostics(&d);
            Err(DIAGNOSTICS)
        }
    }
}

fn report_violations(loaded: &Loaded, report: &ValidationReport) {
    for v in report.violations() {
        let (file, span) = loaded.locate(v);
        eprintln!(
            "{}:{}:{}: {v}",
            file.unwrap_or("<input>"),
            span.line,
            span.column
        );
    }
}

fn all_violations(loaded: &Loaded) -> ValidationReport {
    let l = &loaded.linked;
    let mut report = ValidationReport::default();
    if let Some(sys) = &l.system {
        report = report.merge(validate_system(sys));
    }
    if !l.repository.platforms.is_empty() {
        report = report.merge(validate_repository(&l.repository));
    }
    if let (Some(sys), false) = (&l.system, l.configuration.statements.is_empty()) {
        report = report.merge(validate_configuration(&l.configuration, sys, &l.repository).report);
    }
    report
}

fn validate(files: &[PathBuf]) -> u8 {
    let loaded = match load_or_report(files) {
        Ok(l) => l,
        Err(code) => return code,
    };
    let report = all_violations(&loaded);
    report_violations(&loaded, &report);
    if !report.is_clean() {
        eprintln!("{} violation(s)", report.violations().len());
        return DIAGNOSTICS;
    }
    let l = &loaded.linked;
    println!(
        "ok: {} package(s), {} node(s), {} platform(s), {} statement(s)",
        l.packages.len(),
        l.system.as_ref().map_or(0, |s| s.nodes.len()),
        l.repository.platforms.len(),
        l.configuration.statements.len()
    );
    OK
}

fn generate_cmd(files: &[PathBuf], out: &Path, force: bool) -> u8 {
    let loaded = match load_or_report(files) {
        Ok(l) => l,
        Err(code) => return code,
    };
    let set = match generate(&loaded.linked) {
        Ok(s) => s,
        Err(GenerateError::NotDeployable(report)) => {
            report_violations(&loaded, &report);
            eprintln!("configuration is not deployable");
            return DIAGNOSTICS;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return DIAGNOSTICS;
        }
    };
    if set.is_empty() {
        println!("nothing to generate");
        return OK;
    }
    match write(&set, out, force) {
        Ok(report) => {
            for p in &report.written {
                println!("wrote {}", p.display());
            }
            OK
        }
        Err(e @ WriteError::Exists(_)) => {
            eprintln!("error: {e}");
            DIAGNOSTICS
        }
        Err(e @ WriteError::Io { .. }) => {
            eprintln!("error: {e}");
            RUNTIME
        }
    }
}

fn pairs(flag: &str, items: &[String]) -> Result<Vec<(String, String)>, String> {
    items
        .iter()
        .map(|s| {
            s.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| format!("--{flag} expects MODULE=VALUE, found `{s}`"))
        })
        .collect()
}

fn run(args: RunArgs) -> u8 {
    let loaded = match load_or_report(&args.files) {
        Ok(l) => l,
        Err(code) => return code,
    };
    let Some(model) = loaded.linked.system.clone() else {
        eprintln!("error: no TKRS among the input files");
        return DIAGNOSTICS;
    };
    let mut report = validate_system(&model);
    if !args.arch_only {
        if loaded.linked.configuration.statements.is_empty() {
            eprintln!(
                "error: no statements bind the architecture; pass --arch-only to run it unbound"
            );
            return DIAGNOSTICS;
        }
        report = all_violations(&loaded);
    }
    report_violations(&loaded, &report);
    if !report.is_clean() {
        return DIAGNOSTICS;
    }

    let (indexed, seeds) = match (
        pairs("indexed", &args.indexed),
        pairs("seed-dir", &args.seed_dirs),
    ) {
        (Ok(i), Ok(s)) => (i, s),
        (Err(e), _) | (_, Err(e)) => {
            eprintln!("error: {e}");
            return DIAGNOSTICS;
        }
    };
    let config = RuntimeConfig {
        transport: match args.mode {
            RunMode::Inproc => Transport::InProcess,
            RunMode::Tcp => Transport::Tcp {
                ephemeral_ports: args.ephemeral_ports,
            },
        },
        timeout: Duration::from_millis(args.timeout_ms),
        indexed: indexed
            .into_iter()
            .map(|(m, paths)| {
                (
                    m,
                    paths
                        .split(',')
                        .filter(|p| !p.is_empty())
                        .map(str::to_string)
                        .collect(),
                )
            })
            .collect::<BTreeMap<_, _>>(),
        federate_always: args.federate_always,
        trader_mode: if args.strict {
            Mode::Strict
        } else {
            Mode::Default
        },
    };
    let system = match System::start(&model, config) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return RUNTIME;
        }
    };
    for (module, dir) in seeds {
        let docs = match load_dir(Path::new(&dir)) {
            Ok(d) => d,
            Err(e) => {
                eprintln!("error: {e}");
                return RUNTIME;
            }
        };
        match system.seed(&module, docs) {
            Ok(ids) => log::info!("seeded {} document(s) at {module}", ids.len()),
            Err(e) => {
                eprintln!("error: seeding {module}: {e}");
                return RUNTIME;
            }
        }
    }
    println!("ready: {} modules", system.modules().len());

    let worst = match &args.script {
        Some(path) => match File::open(path) {
            Ok(f) => {
                let base = path.parent().unwrap_or(Path::new("."));
                replay(&system, io::BufReader::new(f), base, false)
            }
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                Status::Failed
            }
        },
        None => replay(&system, io::stdin().lock(), Path::new("."), true),
    };

    let steps = system.trace().steps();
    let conformance = check_conformance(&model, &steps);
    for v in &conformance.violations {
        eprintln!("usage matrix violation: {} ({})", v.step, v.reason);
    }
    if let Some(path) = &args.trace_out {
        let written = File::create(path).and_then(|f| {
            let mut w = BufWriter::new(f);
            system.trace().dump(&mut w)?;
            w.flush()
        });
        if let Err(e) = written {
            eprintln!("error: {}: {e}", path.display());
            return RUNTIME;
        }
    }
    system.shutdown();
    match worst {
        Status::Ok if conformance.is_clean() => OK,
        Status::Ok | Status::Refused => DIAGNOSTICS,
        Status::Failed => RUNTIME,
    }
}

/// Runs every command of `input`, echoing each before its result. Returns
/// the worst status seen.
fn replay(system: &System, input: impl BufRead, base: &Path, prompt: bool) -> Status {
    let mut session = Session::new(system);
    let mut worst = Status::Ok;
    let stdout = io::stdout();
    let show_prompt = || {
        if prompt {
            print!("> ");
            let _ = stdout.lock().flush();
        }
    };
    show_prompt();
    for (n, line) in input.lines().enumerate() {
        let line = match line {
            Ok(l) => l,
            Err(e) => {
                eprintln!("error: reading commands: {e}");
                return Status::Failed;
            }
        };
        match script::parse_line(&line, base) {
            Ok(None) => {}
            Ok(Some(cmd)) => {
                if !prompt {
                    println!("> {}", line.trim());
                }
                let (status, text) = session.run(cmd);
                print!("{text}");
                if !text.ends_with('\n') {
                    println!();
                }
                worst = worst.max(status);
            }
            Err(e) => {
                eprintln!("line {}: {e}", n + 1);
                worst = worst.max(Status::Refused);
            }
        }
        show_prompt();
    }
    worst
}

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use pts_core::corpus::{self, ParadoxId};
use pts_core::dev::{self, Development};
use pts_core::print::Printer;
use pts_core::reduce::{self, ErasureMode, Strategy};
use pts_core::PresetId;

#[derive(Parser)]
#[command(name = "pts", version, about = "Check developments and trace head reduction in pure type systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum System {
    LambdaHol,
    LambdaUMinus,
}

impl From<System> for PresetId {
    fn from(s: System) -> PresetId {
        match s {
            System::LambdaHol => PresetId::LambdaHol,
            System::LambdaUMinus => PresetId::LambdaUMinus,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    HeadDef,
    HeadLinear,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Strategy {
        match s {
            StrategyArg::HeadDef => Strategy::HeadDef,
            StrategyArg::HeadLinear => Strategy::HeadLinear,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EraseArg {
    Annotations,
    Poly,
}

impl From<EraseArg> for ErasureMode {
    fn from(e: EraseArg) -> ErasureMode {
        match e {
            EraseArg::Annotations => ErasureMode::AnnotationsOnly,
            EraseArg::Poly => ErasureMode::DropPolymorphism,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Structured,
}

#[derive(clap::Args)]
struct Source {
    /// Development file, or `corpus:NAME` for a built-in entry.
    file: String,
    /// Check under this signature instead of the one in the file.
    #[arg(long, value_enum)]
    system: Option<System>,
}

#[derive(Subcommand)]
enum Command {
    /// Type-check a development and report every judgment.
    Check {
        #[command(flatten)]
        source: Source,
        /// Show failing terms fully unfolded.
        #[arg(long)]
        raw: bool,
    },
    /// Print a head-reduction trace of a named `trace` term.
    Trace {
        #[command(flatten)]
        source: Source,
        /// Name given in a `trace` directive.
        #[arg(default_value = "bottomProof")]
        name: String,
        #[arg(long, value_enum, default_value = "head-def")]
        strategy: StrategyArg,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Print the erasure of a named `trace` term.
    Erase {
        #[command(flatten)]
        source: Source,
        #[arg(default_value = "bottomProof")]
        name: String,
        #[arg(long, value_enum, default_value = "annotations")]
        mode: EraseArg,
    },
    /// Look for a repeated state in the reduction of a named term.
    Loop {
        #[command(flatten)]
        source: Source,
        #[arg(default_value = "bottomProof")]
        name: String,
        #[arg(long, value_enum, default_value = "head-def")]
        strategy: StrategyArg,
        /// Erase before reducing.
        #[arg(long, value_enum)]
        erase: Option<EraseArg>,
        #[arg(long, default_value_t = 1000)]
        bound: usize,
    },
    /// List the built-in corpus.
    List,
    /// Write the corpus files and golden traces into a directory.
    Export { dir: PathBuf },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn read_source(file: &str) -> Result<String, String> {
    match file.strip_prefix("corpus:") {
        Some(name) => Ok(name.parse::<ParadoxId>()?.source()),
        None => fs::read_to_string(file).map_err(|e| format!("{file}: {e}")),
    }
}

fn load(source: &Source) -> Result<Development, String> {
    let text = read_source(&source.file)?;
    dev::load(&text, source.system.map(Into::into)).map_err(|e| format!("{}: {e}", source.file))
}

/// Loads and insists on a clean check before reducing anything.
fn load_checked(source: &Source) -> Result<Development, String> {
    let d = load(source)?;
    if !d.ok() {
        return Err(format!("{} does not check:\n{}", source.file, d.report(false)));
    }
    Ok(d)
}

fn named<'d>(d: &'d Development, name: &str) -> Result<&'d pts_core::Term, String> {
    d.trace(name).ok_or_else(|| format!("UnknownTerm: no trace directive named `{name}`"))
}

fn run(cli: Cli) -> Result<bool, String> {
    match cli.command {
        Command::Check { source, raw } => {
            let d = load(&source)?;
            print!("{}", d.report(raw));
            Ok(d.ok())
        }
        Command::Trace { source, name, strategy, steps, format } => {
            let d = load_checked(&source)?;
            let t = named(&d, &name)?;
            let tr = reduce::trace(&d.env, t, strategy.into(), steps);
            eprintln!("stopped: {}", tr.stop);
            match format {
                Format::Text => print!("{}", tr.to_text()),
                Format::Structured => print!("{}", tr.to_json_lines(&d.env)),
            }
            Ok(!matches!(tr.stop, reduce::StopReason::Error(_)))
        }
        Command::Erase { source, name, mode } => {
            let d = load_checked(&source)?;
            let t = named(&d, &name)?;
            let mode = mode.into();
            let erased = reduce::erase(&d.env, t, mode).map_err(|e| e.to_string())?;
            let env = reduce::erase_env(&d.env, mode).map_err(|e| e.to_string())?;
            let p = Printer::plain(Some(&env));
            for e in env.entries() {
                if let pts_core::EnvEntry::Def { name, body, .. } = e {
                    if *body != pts_core::Term::Erased {
                        println!("{name} := {}", p.show(body));
                    }
                }
            }
            println!("{name} := {}", p.show(&erased));
            Ok(true)
        }
        Command::Loop { source, name, strategy, erase, bound } => {
            let d = load_checked(&source)?;
            let t = named(&d, &name)?;
            let r = reduce::detect_loop(&d.env, t, strategy.into(), erase.map(Into::into), bound)
                .map_err(|e| e.to_string())?;
            let mode = r.erasure.map_or("none", ErasureMode::name);
            match r.found {
                Some((entry, period)) => {
                    println!("loop: strategy {} erasure {mode} entry {entry} period {period}", r.strategy)
                }
                None => println!(
                    "no loop: strategy {} erasure {mode} after {} steps ({})",
                    r.strategy, r.steps, r.stop
                ),
            }
            Ok(true)
        }
        Command::List => {
            for id in ParadoxId::ALL {
                println!("{:<20} {:<16} {}", id.name(), id.system(), id.description());
            }
            Ok(true)
        }
        Command::Export { dir } => {
            fs::create_dir_all(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;
            for id in ParadoxId::ALL {
                let b = corpus::build(id).map_err(|e| e.to_string())?;
                let write = |file: String, text: String| {
                    let path = dir.join(file);
                    fs::write(&path, text).map_err(|e| format!("{}: {e}", path.display()))
                };
                write(format!("{id}.pts"), corpus::render_source(&b.dev))?;
                let steps = id.golden_head_def().len() - 1;
                let tr = reduce::trace(b.env(), b.bottom_proof(), Strategy::HeadDef, steps);
                write(format!("{id}.head-def.trace"), tr.to_text())?;
            }
            Ok(true)
        }
    }
}

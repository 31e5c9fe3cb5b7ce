use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use peqlib_cli::commands::{self, BuildArgs, BuildKind, Context, Example, Suite};
use peqlib_cli::{CliError, Format};

#[derive(Parser)]
#[command(name = "peqlib", version, about = "Finite partial equivalences, S-actions and Fell bundles")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Directory for emitted fixtures.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "text")]
    format: Format,
    /// Bound on bibundle sizes in enumerations.
    #[arg(long, global = true, default_value_t = 6)]
    max_size: usize,
    /// Seed for randomly generated fixtures.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Verify fixture files (or built-in fixture names).
    Validate { paths: Vec<String> },
    /// Run a construction and emit its result.
    Build {
        #[arg(value_enum)]
        kind: BuildKind,
        #[arg(long)]
        action: Option<String>,
        #[arg(long)]
        space: Option<String>,
        /// Open cover, e.g. `a,b;b,c`.
        #[arg(long)]
        cover: Option<String>,
        #[arg(long)]
        map: Option<String>,
        #[arg(long)]
        peq: Option<String>,
        #[arg(long)]
        left: Option<String>,
        #[arg(long)]
        right: Option<String>,
        #[arg(long)]
        grading: Option<String>,
        #[arg(long)]
        bundle: Option<String>,
    },
    /// Emit a built-in example.
    Example {
        #[arg(value_enum)]
        name: Example,
    },
    /// Run invariant suites, optionally validating extra fixture files.
    Report {
        #[arg(value_enum, default_value = "all")]
        suite: Suite,
        files: Vec<String>,
        /// Number of random gradings in the action suite.
        #[arg(long, default_value_t = 25)]
        random: usize,
    },
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
    let mut ctx = Context { out: cli.out, max_size: cli.max_size, seed: cli.seed, ..Context::default() };
    let res = match cli.cmd {
        Cmd::Validate { paths } => commands::validate(&paths),
        Cmd::Build { kind, action, space, cover, map, peq, left, right, grading, bundle } => {
            let args = BuildArgs { action, space, cover, map, peq, left, right, grading, bundle };
            commands::build(kind, &args, &ctx)
        }
        Cmd::Example { name } => commands::example(name, &ctx),
        Cmd::Report { suite, files, random } => {
            ctx.random = random;
            commands::report(suite, &files, &ctx)
        }
    };
    match res {
        Ok(o) => {
            print!("{}", o.render(cli.format));
            ExitCode::from(o.exit_code() as u8)
        }
        Err(e) => {
            report_error(&e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn report_error(e: &CliError) {
    eprintln!("peqlib: {e}");
}

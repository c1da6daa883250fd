use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hamreg::cli::{
    analyze_json, analyze_text, has_branch_errors, iteration_json, iteration_text, parse_input, round_report_json,
    round_text, write_svgs, InputSpec,
};
use hamreg::regularize::{assign_labels, iterate, run_round, tree_dot, Config};

const EX_USAGE: u8 = 64;
const EX_IOERR: u8 = 74;

#[derive(Parser)]
#[command(name = "hamreg", version, about = "Regularise polynomial Hamiltonian systems by blow-ups")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Coefficient matrix and Newton polygon of the input Hamiltonian.
    Analyze(Common),
    /// One regularisation round.
    Regularize(Common),
    /// Several rounds, with identifications and minimality ranking.
    Iterate(Common),
    /// Writes the cascade tree as DOT.
    Tree(Common),
}

#[derive(Args)]
struct Common {
    /// Input file.
    input: PathBuf,
    #[arg(long, default_value_t = 1)]
    rounds: usize,
    #[arg(long, default_value_t = hamreg::blowup::MAX_BLOWUPS)]
    max_blowups: u32,
    #[arg(long)]
    include_constant_term: bool,
    #[arg(long)]
    explore_alternates: bool,
    #[arg(long)]
    json: bool,
    #[arg(long)]
    svg_dir: Option<PathBuf>,
    #[arg(long)]
    dot: Option<PathBuf>,
    /// Greek letters in reports.
    #[arg(long)]
    pretty: bool,
    /// Check chart overlaps and pullbacks at every blow-up.
    #[arg(long)]
    verify: bool,
}

enum Failure {
    Usage(String),
    Io(String),
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn json_text(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).unwrap_or_default()
}

fn run(cmd: Cmd) -> Result<bool, Failure> {
    let (kind, o) = match cmd {
        Cmd::Analyze(o) => ("analyze", o),
        Cmd::Regularize(o) => ("regularize", o),
        Cmd::Iterate(o) => ("iterate", o),
        Cmd::Tree(o) => ("tree", o),
    };
    let text = std::fs::read_to_string(&o.input).map_err(|e| Failure::Io(format!("{}: {e}", o.input.display())))?;
    let spec: InputSpec = parse_input(&text).map_err(|e| Failure::Usage(format!("{}:{e}", o.input.display())))?;
    if o.rounds == 0 {
        return Err(Failure::Usage("--rounds must be at least 1".into()));
    }
    let cfg = Config {
        max_blowups: o.max_blowups,
        explore_alternates: o.explore_alternates,
        include_constant: o.include_constant_term,
        verify: o.verify,
    };
    let svg_err = |e: hamreg::newton::NewtonError| Failure::Io(e.to_string());
    if kind == "analyze" {
        if o.json {
            let v = analyze_json(&spec, cfg.include_constant, o.pretty).map_err(|e| Failure::Usage(e.to_string()))?;
            println!("{}", json_text(&v));
        } else {
            print!("{}", analyze_text(&spec, cfg.include_constant, o.pretty).map_err(|e| Failure::Usage(e.to_string()))?);
        }
        if let Some(dir) = &o.svg_dir {
            write_svgs(dir, &spec.hamiltonian, &[], cfg.include_constant).map_err(svg_err)?;
        }
        return Ok(true);
    }
    if spec.omega.is_some_and(|(l, k)| l != 1 || k != 1) {
        return Err(Failure::Usage("regularisation needs the canonical form (omega = 1, 1)".into()));
    }
    let rounds = if kind == "regularize" { 1 } else { o.rounds };
    let (rounds_out, report) = if kind == "regularize" {
        let mut r = run_round(&spec.hamiltonian, &spec.symbols, &cfg).map_err(|e| Failure::Usage(e.to_string()))?;
        r.input_label = "H".into();
        assign_labels(&mut r, &[]);
        let report = if o.json { json_text(&round_report_json(&r, o.pretty)) + "\n" } else { round_text(&r, o.pretty) };
        (vec![r], report)
    } else {
        let it = iterate(&spec.hamiltonian, &spec.symbols, rounds, &cfg).map_err(|e| Failure::Usage(e.to_string()))?;
        if let Some(dot) = &o.dot {
            write_file(dot, &tree_dot(&it))?;
        }
        let report = if kind == "tree" {
            if o.dot.is_none() {
                print!("{}", tree_dot(&it));
            }
            String::new()
        } else if o.json {
            json_text(&iteration_json(&it, o.pretty)) + "\n"
        } else {
            iteration_text(&it, o.pretty)
        };
        (it.rounds, report)
    };
    print!("{report}");
    if let Some(dir) = &o.svg_dir {
        write_svgs(dir, &spec.hamiltonian, &rounds_out, cfg.include_constant).map_err(svg_err)?;
    }
    Ok(!has_branch_errors(&rounds_out))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EX_USAGE),
            };
        }
    };
    match run(cli.cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EX_USAGE)
        }
        Err(Failure::Io(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EX_IOERR)
        }
    }
}

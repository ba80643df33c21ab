mod emit;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use plancherel_core::gln::LeviSpec;
use plancherel_core::rank2::{Group, LeviLabel};

#[derive(Parser, Debug)]
#[command(name = "plancherel", version, about = "Exact Plancherel integrals by iterated residues")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CommandKind {
    Eval,
    Check,
    Report,
    Oracle,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate one target and print its values.
    Eval(RunArgs),
    /// Run divisibility, singularity, closed-form and oracle checks; exit 1 on failure.
    Check(RunArgs),
    /// Write per-cell tables for a whole family.
    Report(RunArgs),
    /// Compare exact values against trapezoidal quadrature.
    Oracle(RunArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum GroupArg {
    Gln,
    Sp4,
    G2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    #[arg(long, value_enum)]
    group: Option<GroupArg>,
    /// Block sizes of a GL_n Levi, e.g. `2,1,1`.
    #[arg(long)]
    partition: Option<String>,
    /// Every partition of N.
    #[arg(long, value_name = "N")]
    all_partitions: Option<u32>,
    /// Rank n for `report`.
    #[arg(short = 'n', value_name = "N")]
    n: Option<u32>,
    /// Levi label for sp4 (Mh, Ms) or g2 (M1, M2).
    #[arg(long)]
    levi: Option<String>,
    /// Exponents e of the trace z^e.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    trace_exp: Vec<i64>,
    /// Multiplies f_d(1) by this rank instead of 1.
    #[arg(long)]
    rank: Option<u32>,
    /// Values of q for the numeric oracle.
    #[arg(long, value_delimiter = ',')]
    oracle_q: Vec<f64>,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Quadrature points per circle (power of two, at least 64).
    #[arg(long, default_value_t = 1024)]
    grid: usize,
    /// Output format; defaults to the extension of `-o`, else json.
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(short = 'o', long)]
    output: Option<PathBuf>,
    /// Include the residue branches of the bookkeeping tree.
    #[arg(long, alias = "trace")]
    trace_branches: bool,
    #[arg(long)]
    disable_shortcut: bool,
    /// Let the engine pick the variable with the mildest pole at 0.
    #[arg(long)]
    reorder: bool,
    /// Work on the shipped formal-degree catalog.
    #[arg(long)]
    formal_degrees: bool,
}

/// A target resolved from the flags.
#[derive(Debug, Clone)]
pub enum Target {
    Gln(Vec<LeviSpec>),
    Rank2(Group, Vec<LeviLabel>),
    FormalDegrees,
}

/// Validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub target: Target,
    pub trace_exps: Vec<i64>,
    pub rank: u32,
    pub oracle_q: Vec<f64>,
    pub tol: f64,
    pub grid: usize,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub trace_branches: bool,
    pub disable_shortcut: bool,
    pub reorder: bool,
}

/// Failure classes, each with its own exit code.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Contour(String),
    Io(String),
    Engine(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Contour(_) => 3,
            Failure::Io(_) => 4,
            Failure::Engine(_) => 1,
        }
    }
}

impl From<plancherel_core::Error> for Failure {
    fn from(e: plancherel_core::Error) -> Self {
        use plancherel_core::Error as E;
        match e {
            E::PoleOnContour { .. } => Failure::Contour(e.to_string()),
            E::ContractViolation(_) | E::Parse(_) | E::UnknownLabel(_) => Failure::Config(e.to_string()),
            other => Failure::Engine(other.to_string()),
        }
    }
}

fn resolve(cmd: CommandKind, a: RunArgs) -> Result<RunConfig, Failure> {
    let cfg = |m: &str| Failure::Config(m.to_string());
    let target = if a.formal_degrees {
        if a.group.is_some() || a.partition.is_some() || a.levi.is_some() {
            return Err(cfg("--formal-degrees takes no group, partition or levi"));
        }
        Target::FormalDegrees
    } else {
        match a.group.ok_or_else(|| cfg("--group is required"))? {
            GroupArg::Gln => {
                if a.levi.is_some() {
                    return Err(cfg("--levi applies to sp4 and g2 only"));
                }
                let given = [a.partition.is_some(), a.all_partitions.is_some(), a.n.is_some()];
                if given.iter().filter(|&&g| g).count() != 1 {
                    return Err(cfg("gln needs exactly one of --partition, --all-partitions, -n"));
                }
                let levis = if let Some(p) = &a.partition {
                    vec![p.parse::<LeviSpec>()?]
                } else {
                    let n = a.all_partitions.or(a.n).unwrap();
                    if n == 0 {
                        return Err(cfg("n must be positive"));
                    }
                    plancherel_core::gln::partitions(n)
                };
                Target::Gln(levis)
            }
            g @ (GroupArg::Sp4 | GroupArg::G2) => {
                if a.partition.is_some() || a.all_partitions.is_some() || a.n.is_some() {
                    return Err(cfg("partitions apply to gln only"));
                }
                let group = if g == GroupArg::Sp4 { Group::Sp4 } else { Group::G2 };
                let levis = match &a.levi {
                    Some(l) => {
                        let l: LeviLabel = l.parse()?;
                        if l.group() != group {
                            return Err(Failure::Config(format!("levi {} does not belong to {}", l, group)));
                        }
                        vec![l]
                    }
                    None if cmd == CommandKind::Eval || cmd == CommandKind::Oracle => {
                        return Err(cfg("--levi is required"));
                    }
                    None => group.levis().to_vec(),
                };
                Target::Rank2(group, levis)
            }
        }
    };
    if a.rank == Some(0) {
        return Err(cfg("--rank must be positive"));
    }
    if a.rank.is_some() && !matches!(target, Target::Gln(_)) {
        return Err(cfg("--rank applies to gln only"));
    }
    if !(a.tol > 0.0) {
        return Err(cfg("--tol must be positive"));
    }
    if a.oracle_q.iter().any(|&q| !(q > 1.0)) {
        return Err(cfg("oracle q values must exceed 1"));
    }
    if a.grid < 64 || !a.grid.is_power_of_two() {
        return Err(cfg("--grid must be a power of two, at least 64"));
    }
    let trace_exps = if a.trace_exp.is_empty() {
        match (&target, cmd) {
            (Target::Rank2(_, _), CommandKind::Report | CommandKind::Check) => (-2..=2).collect(),
            _ => vec![0],
        }
    } else {
        a.trace_exp.clone()
    };
    let format = a.format.unwrap_or_else(|| {
        match a.output.as_ref().and_then(|p| p.extension()).and_then(|e| e.to_str()) {
            Some("csv") => Format::Csv,
            Some("txt") => Format::Text,
            _ => Format::Json,
        }
    });
    let oracle_q = if a.oracle_q.is_empty() && cmd == CommandKind::Oracle {
        vec![2.0, 3.0, 5.0]
    } else {
        a.oracle_q
    };
    Ok(RunConfig {
        target,
        trace_exps,
        rank: a.rank.unwrap_or(1),
        oracle_q,
        tol: a.tol,
        grid: a.grid,
        format,
        output: a.output,
        trace_branches: a.trace_branches,
        disable_shortcut: a.disable_shortcut,
        reorder: a.reorder,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Eval(a) => (CommandKind::Eval, a),
        Command::Check(a) => (CommandKind::Check, a),
        Command::Report(a) => (CommandKind::Report, a),
        Command::Oracle(a) => (CommandKind::Oracle, a),
    };
    let result = resolve(kind, args).and_then(|cfg| {
        let out = match kind {
            CommandKind::Eval => run::eval(&cfg)?,
            CommandKind::Check => run::check(&cfg)?,
            CommandKind::Report => run::report(&cfg)?,
            CommandKind::Oracle => run::oracle(&cfg)?,
        };
        emit::write(&cfg, &out)?;
        Ok(out.ok)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            let msg = match &f {
                Failure::Config(m) | Failure::Contour(m) | Failure::Io(m) | Failure::Engine(m) => m,
            };
            eprintln!("error: {}", msg);
            ExitCode::from(f.code())
        }
    }
}

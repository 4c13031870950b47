use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use sigprop::bench::{gen_etcs_data, gen_sum_text, run_matrix, write_etcs_csv, Cell, Manifest, Source};
use sigprop::formula::{parse_system_with, restructure_affine_sums, ConstraintSystem, EncodingMode, SumShape};
use sigprop::interval::IntervalBox;
use sigprop::props::EtcsParams;
use sigprop::solver::{solve, BranchOrder, Outcome, SolverConfig, SplitHeuristic};

/// Exit status for unreadable or malformed input.
const INPUT_ERROR: u8 = 4;

#[derive(Parser)]
#[command(name = "sigprop", version, about = "Interval constraint propagation for sigmoid networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide a constraint system written in the constraint language
    Solve {
        file: PathBuf,
        /// Encoding used for sigmoid calls in the file
        #[arg(long, default_value = "dedicated")]
        encoding: String,
        /// Rewrite sums with more than two terms into balanced binary trees
        #[arg(long, conflicts_with = "chain")]
        balanced: bool,
        /// Rewrite sums with more than two terms into left-leaning chains
        #[arg(long)]
        chain: bool,
        #[command(flatten)]
        approx: ApproxArgs,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Check a safety or robustness property of a network
    Verify {
        /// Network in the JSON format
        #[arg(long)]
        net: PathBuf,
        /// etcs:A|B|C|D|severe or mnist:<csv>:<sample-idx>:<rival>
        #[arg(long)]
        property: String,
        #[arg(long, default_value = "dedicated")]
        encoding: String,
        #[command(flatten)]
        approx: ApproxArgs,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Run a benchmark matrix and write one CSV row per cell
    Bench {
        /// Manifest in TOML or JSON
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; overrides the manifest
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Generate benchmark inputs on stdout
    #[command(subcommand)]
    Gen(Gen),
}

#[derive(Subcommand)]
enum Gen {
    /// Summation system y = (1/n)·(x0 + ... + xn)
    Sum { n: usize },
    /// Labelled ETCS braking situations as CSV
    EtcsData {
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct ApproxArgs {
    /// Cell width of the approximating encoding
    #[arg(long, default_value_t = 0.5)]
    approx_width: f64,
    /// Range lo:hi covered by approximating cells
    #[arg(long, default_value = "-8:8", allow_hyphen_values = true)]
    approx_range: String,
}

impl ApproxArgs {
    fn mode(&self, encoding: &str) -> Result<EncodingMode, String> {
        let (lo, hi) = self
            .approx_range
            .split_once(':')
            .and_then(|(a, b)| Some((a.trim().parse::<f64>().ok()?, b.trim().parse::<f64>().ok()?)))
            .ok_or_else(|| format!("--approx-range expects lo:hi, got `{}`", self.approx_range))?;
        EncodingMode::from_name(encoding, self.approx_width, lo, hi)
    }
}

#[derive(Args)]
struct SearchArgs {
    /// Minimum splitting width
    #[arg(long)]
    msw: Option<f64>,
    /// Wall-clock limit in seconds
    #[arg(long, default_value_t = 60.0)]
    timeout: f64,
    /// round-robin or widest-first
    #[arg(long, default_value = "round-robin")]
    split: SplitHeuristic,
    /// lower-first or upper-first
    #[arg(long, default_value = "lower-first")]
    branch: BranchOrder,
}

impl SearchArgs {
    fn config(&self) -> Result<SolverConfig, String> {
        if !(self.timeout > 0.0 && self.timeout.is_finite()) {
            return Err(format!("--timeout must be positive, got {}", self.timeout));
        }
        let mut cfg = SolverConfig {
            timeout: Duration::from_secs_f64(self.timeout),
            split_heuristic: self.split,
            branch_order: self.branch,
            ..SolverConfig::default()
        };
        if let Some(msw) = self.msw {
            if !(msw > 0.0 && msw.is_finite()) {
                return Err(format!("--msw must be positive, got {msw}"));
            }
            cfg.msw = msw;
        }
        Ok(cfg)
    }
}

/// Prints the verdict, the statistics and, for a candidate, the intervals of
/// the variables selected by `show`.
fn report(system: &ConstraintSystem, config: &SolverConfig, show: impl Fn(&str) -> bool) -> ExitCode {
    let v = solve(system, config);
    let mut out = io::stdout().lock();
    let _ = writeln!(out, "{v}");
    if let Outcome::Candidate(bx) = &v.outcome {
        let _ = print_box(&mut out, system, bx, show);
    }
    ExitCode::from(v.outcome.exit_code() as u8)
}

fn print_box(out: &mut impl Write, system: &ConstraintSystem, bx: &IntervalBox, show: impl Fn(&str) -> bool) -> io::Result<()> {
    for (id, iv) in bx.iter() {
        let name = system.name(id);
        if show(name) {
            writeln!(out, "  {name} in {iv}")?;
        }
    }
    Ok(())
}

fn input_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("sigprop: {msg}");
    ExitCode::from(INPUT_ERROR)
}

fn solve_file(path: &Path, encoding: &str, shape: Option<SumShape>, approx: &ApproxArgs, search: &SearchArgs) -> ExitCode {
    let (mode, config) = match (approx.mode(encoding), search.config()) {
        (Ok(m), Ok(c)) => (m, c),
        (Err(e), _) | (_, Err(e)) => return input_error(e),
    };
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return input_error(format!("{}: {e}", path.display())),
    };
    let mut system = match parse_system_with(&text, mode) {
        Ok(s) => s,
        Err(e) => return input_error(format!("{}:{e}", path.display())),
    };
    if let Some(shape) = shape {
        system = restructure_affine_sums(&system, shape);
    }
    report(&system, &config, |name| !name.starts_with('_'))
}

fn verify(net: &Path, property: &str, encoding: &str, approx: &ApproxArgs, search: &SearchArgs) -> ExitCode {
    let (mode, config) = match (approx.mode(encoding), search.config()) {
        (Ok(m), Ok(c)) => (m, c),
        (Err(e), _) | (_, Err(e)) => return input_error(e),
    };
    let cell = Cell {
        instance: property.to_string(),
        encoding: mode,
        source: Source::Network {
            path: net.to_path_buf(),
            property: property.to_string(),
        },
    };
    let system = match cell.build() {
        Ok(s) => s,
        Err(e) => return input_error(e),
    };
    let is_io = |name: &str| {
        let numbered = |p: &str| name.strip_prefix(p).is_some_and(|r| !r.is_empty() && r.bytes().all(|b| b.is_ascii_digit()));
        numbered("in") || numbered("out") || matches!(name, "v" | "x_h" | "x_r")
    };
    report(&system, &config, is_io)
}

fn bench(matrix: &Path, out: &Path, jobs: Option<usize>) -> ExitCode {
    let manifest = match Manifest::load(matrix) {
        Ok(m) => m,
        Err(e) => return input_error(format!("{}: {e}", matrix.display())),
    };
    let (cells, config) = match (manifest.matrix(), manifest.solver_config()) {
        (Ok(m), Ok(c)) => (m.cells(), c),
        (Err(e), _) | (_, Err(e)) => return input_error(format!("{}: {e}", matrix.display())),
    };
    let file = match File::create(out) {
        Ok(f) => f,
        Err(e) => return input_error(format!("{}: {e}", out.display())),
    };
    match run_matrix(&cells, &config, jobs.unwrap_or(manifest.jobs), BufWriter::new(file)) {
        Ok(rows) => {
            let errors = rows.iter().filter(|r| r.verdict == "error").count();
            eprintln!("{} rows written to {} ({errors} errors)", rows.len(), out.display());
            ExitCode::SUCCESS
        }
        Err(e) => input_error(format!("{}: {e}", out.display())),
    }
}

fn generate(g: Gen) -> ExitCode {
    let mut out = io::stdout().lock();
    let written = match g {
        Gen::Sum { n } => match gen_sum_text(n) {
            Ok(text) => out.write_all(text.as_bytes()).map_err(|e| e.to_string()),
            Err(e) => return input_error(e),
        },
        Gen::EtcsData { count, seed } => {
            let records = gen_etcs_data(count, seed, &EtcsParams::default());
            write_etcs_csv(&records, &mut out).map_err(|e| e.to_string())
        }
    };
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => input_error(e),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(INPUT_ERROR),
            };
        }
    };
    match cli.command {
        Command::Solve {
            file,
            encoding,
            balanced,
            chain,
            approx,
            search,
        } => {
            let shape = match (balanced, chain) {
                (true, _) => Some(SumShape::Balanced),
                (_, true) => Some(SumShape::Chain),
                _ => None,
            };
            solve_file(&file, &encoding, shape, &approx, &search)
        }
        Command::Verify {
            net,
            property,
            encoding,
            approx,
            search,
        } => verify(&net, &property, &encoding, &approx, &search),
        Command::Bench { matrix, out, jobs } => bench(&matrix, &out, jobs),
        Command::Gen(g) => generate(g),
    }
}

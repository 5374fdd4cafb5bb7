use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use circlab::circle::DEFAULT_DEPTH_CAP;
use circlab::experiment::DEPTH_CAP_ENV;
use circlab::{run, Command, Error, ErrorClass, ExperimentConfig, Format};

#[derive(Parser)]
#[command(name = "circlab", version, about = "Exact experiments on characterized subgroups of the circle")]
struct Cli {
    /// Run the experiment stored in a TOML config instead of a subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the effective config as TOML before running.
    #[arg(long, global = true)]
    save_config: Option<PathBuf>,
    /// Also write the CSV table (undecided rows, certification rows, ...).
    #[arg(long, global = true)]
    csv_out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<OutFormat>,
    /// Largest refinement depth for enclosures.
    #[arg(long, global = true, env = DEPTH_CAP_ENV)]
    depth_cap: Option<u64>,
    #[command(subcommand)]
    command: Option<Cmd>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
    Table,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Json => Format::Json,
            OutFormat::Csv => Format::Csv,
            OutFormat::Table => Format::Table,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Terms of b, a, d or n.
    Seq {
        #[arg(long)]
        spec: String,
        #[arg(long, default_value = "d")]
        kind: String,
        #[arg(long, default_value_t = 10)]
        count: u64,
        #[arg(long)]
        start: Option<u64>,
    },
    /// The lifted set L(S).
    Lift {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        set: String,
        /// Also report the prefix density up to this index.
        #[arg(long)]
        horizon: Option<u64>,
    },
    /// Prefix densities of a set expression.
    Density {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        set: String,
        #[arg(long, value_delimiter = ',', required = true)]
        horizons: Vec<u64>,
    },
    /// Enclosure of {d_i x}.
    Frac {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        x: String,
        #[arg(long)]
        index: u64,
        #[arg(long, default_value_t = 0)]
        depth: u64,
    },
    /// Density bounds of {i <= N : ||d_i x|| >= eps}.
    Scan {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        x: String,
        #[arg(long)]
        eps: String,
        #[arg(long, value_delimiter = ',', required = true)]
        horizons: Vec<u64>,
        #[arg(long, default_value_t = 0)]
        depth: u64,
    },
    /// Finite-horizon check of a sequence property.
    Classify {
        #[arg(long)]
        spec: String,
        #[arg(long, value_parser = ["bbounded", "snd", "wdli"])]
        property: String,
        #[arg(long)]
        horizon: u64,
        #[arg(long)]
        alpha: Option<String>,
        #[arg(long)]
        bound: Option<u64>,
        /// Index set for `bbounded`; defaults to all of N.
        #[arg(long)]
        set: Option<String>,
    },
    /// Build and certify an explicit point.
    Witness(WitnessArgs),
    /// Write u = a_k v with b_{k+1} not dividing v.
    Factor {
        #[arg(long)]
        spec: String,
        /// Comma separated integers.
        #[arg(long)]
        u: String,
    },
    /// Run a property suite.
    Verify {
        #[arg(value_parser = ["lift-algebra", "tail-bound", "recursion", "snd-density", "wdli-shrink", "coincidence", "arbault", "all"])]
        tag: String,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args)]
struct WitnessArgs {
    #[arg(long, value_parser = ["continuum", "nonmember", "arbault"])]
    kind: String,
    #[arg(long)]
    spec: String,
    #[arg(long)]
    x: Option<String>,
    /// `small` or `large` digits (nonmember).
    #[arg(long)]
    case: Option<String>,
    #[arg(long)]
    m0: Option<u64>,
    #[arg(long)]
    n0: Option<u64>,
    #[arg(long)]
    depth: Option<u64>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    jmax: Option<u64>,
    /// 0/1 string selecting the continuum point.
    #[arg(long)]
    zeta: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long, value_delimiter = ',')]
    horizons: Option<Vec<u64>>,
    #[arg(long)]
    rows: Option<u64>,
    /// Number of u terms generated for `--u consecutive-sum`.
    #[arg(long)]
    count: Option<u64>,
    /// `consecutive-sum` or a comma separated list.
    #[arg(long)]
    u: Option<String>,
    /// Keep indices where b_{k+1} is a multiple of m (they fail the existence check).
    #[arg(long)]
    keep_degenerate: bool,
}

fn config_from(cmd: Cmd, cap: u64) -> ExperimentConfig {
    use Cmd::*;
    match cmd {
        Seq { spec, kind, count, start } => {
            let mut c = ExperimentConfig::new(Command::Seq).with_spec(&spec);
            c.kind = Some(kind);
            c.count = Some(count);
            c.start = start;
            c
        }
        Lift { spec, set, horizon } => {
            let mut c = ExperimentConfig::new(Command::Lift).with_spec(&spec);
            c.set = Some(set);
            c.horizon = horizon;
            c
        }
        Density { spec, set, horizons } => {
            let mut c = ExperimentConfig::new(Command::Density).with_spec(&spec);
            c.set = Some(set);
            c.horizons = Some(horizons);
            c
        }
        Frac { spec, x, index, depth } => {
            let mut c = ExperimentConfig::new(Command::Frac).with_spec(&spec);
            c.x = Some(x);
            c.index = Some(index);
            c.depth = Some(depth);
            c.depth_cap = Some(cap);
            c
        }
        Scan { spec, x, eps, horizons, depth } => {
            let mut c = ExperimentConfig::new(Command::Scan).with_spec(&spec);
            c.x = Some(x);
            c.eps = Some(eps);
            c.horizons = Some(horizons);
            c.depth = Some(depth);
            c.depth_cap = Some(cap);
            c
        }
        Classify { spec, property, horizon, alpha, bound, set } => {
            let mut c = ExperimentConfig::new(Command::Classify).with_spec(&spec);
            c.property = Some(property);
            c.horizon = Some(horizon);
            c.alpha = alpha;
            c.bound = bound;
            c.set = set;
            c
        }
        Witness(w) => {
            let mut c = ExperimentConfig::new(Command::Witness).with_spec(&w.spec);
            c.kind = Some(w.kind);
            c.x = w.x;
            c.case = w.case;
            c.m0 = w.m0;
            c.n0 = w.n0;
            c.depth = w.depth;
            c.horizon = w.horizon;
            c.jmax = w.jmax;
            c.zeta = w.zeta;
            c.eps = w.eps;
            c.horizons = w.horizons;
            c.rows = w.rows;
            c.count = w.count;
            c.u = w.u;
            c.skip_degenerate = w.keep_degenerate.then_some(false);
            c.depth_cap = Some(cap);
            c
        }
        Factor { spec, u } => {
            let mut c = ExperimentConfig::new(Command::Factor).with_spec(&spec);
            c.u = Some(u);
            c
        }
        Verify { tag, seed } => {
            let mut c = ExperimentConfig::new(Command::Verify);
            c.tag = Some(tag);
            c.seed = seed;
            c
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Parse => 2,
        ErrorClass::Precondition => 3,
        ErrorClass::Horizon => 4,
        ErrorClass::Certification => 5,
    }
}

fn write_file(path: &PathBuf, text: &str) -> Result<(), Error> {
    std::fs::write(path, text).map_err(|e| Error::Parse(format!("cannot write {}: {e}", path.display())))
}

fn main_inner(cli: Cli) -> Result<ExitCode, Error> {
    let mut config = match (&cli.config, cli.command) {
        (Some(path), None) => ExperimentConfig::load(path)?,
        (None, Some(cmd)) => config_from(cmd, cli.depth_cap.unwrap_or(DEFAULT_DEPTH_CAP)),
        (Some(_), Some(_)) => return Err(Error::Parse("give either --config or a subcommand, not both".into())),
        (None, None) => return Err(Error::Parse("no subcommand given (try --help)".into())),
    };
    if let Some(f) = cli.format {
        config.format = Some(f.into());
    }
    if let Some(path) = &cli.save_config {
        write_file(path, &config.to_toml()?)?;
    }
    let out = run(&config)?;
    print!("{}", out.rendered());
    if let Some(path) = &cli.csv_out {
        write_file(path, &out.csv)?;
    }
    match out.failure {
        Some(msg) => {
            eprintln!("circlab: certification failed: {msg}");
            Ok(ExitCode::from(5))
        }
        None => Ok(ExitCode::SUCCESS),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("circlab: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

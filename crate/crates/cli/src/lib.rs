//! Command-line front end: argument parsing, input loading, dispatch and
//! structured output.
//!
//! Exit codes: 0 success, 1 solver did not converge (result still written),
//! 2 usage error, 65 invalid input data, 66 missing input file.
//!
//! The environment variable [`NUMERIC_CONFIG_ENV`] may name a JSON file whose
//! fields override the default numeric tolerances.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use fqavc::channels::{CQChannelTable, ChannelJson, LoadedChannel};
use fqavc::config::{self, NumericConfig};
use fqavc::entropy::{self, DivergenceResult};
use fqavc::game::{self, DoubleOracleOptions, GameResult, RoundTrace, SeeSawOptions};
use fqavc::json::ExtendedReal;
use fqavc::qstate::DensityMatrix;
use fqavc::saddle::{self, QqOptions, SaddleOptions};

/// Names a JSON file overriding [`NumericConfig`] fields.
pub const NUMERIC_CONFIG_ENV: &str = "FQAVC_NUMERIC_CONFIG";

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_CONVERGED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 65;
pub const EXIT_NO_INPUT: i32 = 66;

#[derive(Debug, Error)]
pub enum CliError {
    /// Help or version text requested; not a failure.
    #[error("{0}")]
    Info(String),
    #[error("{0}")]
    Usage(String),
    #[error("input file not found: {}", .0.display())]
    MissingFile(PathBuf),
    #[error("invalid input in {}: {message}", .path.display())]
    Data { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] fqavc::Error),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Info(_) => EXIT_OK,
            CliError::Usage(_) => EXIT_USAGE,
            CliError::MissingFile(_) => EXIT_NO_INPUT,
            CliError::Data { .. } | CliError::Core(_) => EXIT_DATA,
            CliError::Io(_) => EXIT_DATA,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    CapacityEa,
    CapacitySrCq,
    CapacitySrQq,
    DivergenceDh,
    Divergence,
    GameVerify,
    GameClassical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Validated settings for one invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub channel: Option<PathBuf>,
    pub rho: Option<PathBuf>,
    pub sigma: Option<PathBuf>,
    pub eps: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub n: usize,
    pub messages: usize,
    pub max_rounds: usize,
    pub restarts: usize,
    pub assistance_dim: Option<usize>,
    pub output: Option<PathBuf>,
    pub format: Format,
}

#[derive(Debug, Parser)]
#[command(name = "fqavc", version, about = "Adversarial quantum channel coding quantities")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Args)]
struct Common {
    /// Convergence tolerance.
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    /// Iteration cap of the saddle solvers.
    #[arg(long, default_value_t = 5000)]
    max_iter: usize,
    /// Seed for every randomized step.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (stdout when absent).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Output format; CSV is available for game round traces only.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Args)]
struct ChannelArgs {
    /// Channel JSON file.
    #[arg(long)]
    channel: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct BlockArgs {
    #[command(flatten)]
    chan: ChannelArgs,
    /// Number of channel uses.
    #[arg(long, default_value_t = 1)]
    n: usize,
}

#[derive(Debug, Args)]
struct GameArgs {
    #[command(flatten)]
    block: BlockArgs,
    /// Number of messages.
    #[arg(long, default_value_t = 2)]
    messages: usize,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    game: GameArgs,
    /// Round cap of the double oracle.
    #[arg(long, default_value_t = 20)]
    max_rounds: usize,
    /// Random restarts of each see-saw code search.
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    /// Use codes assisted by a maximally entangled resource of this dimension.
    #[arg(long)]
    assistance_dim: Option<usize>,
}

#[derive(Debug, Args)]
struct StateArgs {
    /// First state JSON file.
    #[arg(long)]
    rho: PathBuf,
    /// Second state JSON file.
    #[arg(long)]
    sigma: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct DhArgs {
    #[command(flatten)]
    states: StateArgs,
    /// Type-one error allowance in (0, 1).
    #[arg(long)]
    eps: f64,
}

#[derive(Debug, Args)]
struct DivergenceArgs {
    #[command(flatten)]
    states: StateArgs,
    /// Also report the hypothesis-testing divergence at this allowance.
    #[arg(long)]
    eps: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Entanglement-assisted saddle value of a channel.
    CapacityEa(ChannelArgs),
    /// Shared-randomness capacity with classical inputs.
    CapacitySrCq(ChannelArgs),
    /// Shared-randomness rate of `n` uses with quantum inputs.
    CapacitySrQq(BlockArgs),
    /// Hypothesis-testing divergence.
    DivergenceDh(DhArgs),
    /// Relative entropy, max-divergence and optionally the hypothesis-testing divergence.
    Divergence(DivergenceArgs),
    /// Double-oracle solution of the code-versus-jammer game.
    GameVerify(VerifyArgs),
    /// Exact game value for a classical channel table.
    GameClassical(GameArgs),
}

fn base_config(command: Command, common: Common) -> RunConfig {
    RunConfig {
        command,
        channel: None,
        rho: None,
        sigma: None,
        eps: None,
        tol: common.tol,
        max_iter: common.max_iter,
        seed: common.seed,
        n: 1,
        messages: 2,
        max_rounds: 20,
        restarts: 8,
        assistance_dim: None,
        output: common.output,
        format: common.format,
    }
}

fn from_block(command: Command, b: BlockArgs) -> RunConfig {
    RunConfig { channel: Some(b.chan.channel), n: b.n, ..base_config(command, b.chan.common) }
}

fn from_game(command: Command, g: GameArgs) -> RunConfig {
    RunConfig { messages: g.messages, ..from_block(command, g.block) }
}

fn from_states(command: Command, s: StateArgs, eps: Option<f64>) -> RunConfig {
    RunConfig { rho: Some(s.rho), sigma: Some(s.sigma), eps, ..base_config(command, s.common) }
}

impl RunConfig {
    fn validate(&self) -> Result<(), CliError> {
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(CliError::Usage(format!("--tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 || self.max_rounds == 0 || self.restarts == 0 {
            return Err(CliError::Usage("iteration, round and restart counts must be positive".into()));
        }
        if self.messages < 2 {
            return Err(CliError::Usage(format!("--messages must be at least 2, got {}", self.messages)));
        }
        if self.n == 0 {
            return Err(CliError::Usage("--n must be at least 1".into()));
        }
        if let Some(eps) = self.eps {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(CliError::Usage(format!("--eps must lie in (0, 1), got {eps}")));
            }
        }
        let traced = matches!(self.command, Command::GameVerify | Command::GameClassical);
        if self.format == Format::Csv && !traced {
            return Err(CliError::Usage("--format csv is only available for game round traces".into()));
        }
        for path in [&self.channel, &self.rho, &self.sigma].into_iter().flatten() {
            if !path.is_file() {
                return Err(CliError::MissingFile(path.clone()));
            }
        }
        Ok(())
    }
}

/// Parses `argv` (including the program name) into a validated config.
/// `--help` and `--version` come back as [`CliError::Info`] with their text.
pub fn parse_args<I, T>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => CliError::Info(e.to_string()),
        _ => CliError::Usage(e.to_string()),
    })?;
    let config = match cli.command {
        Sub::CapacityEa(a) => RunConfig { channel: Some(a.channel), ..base_config(Command::CapacityEa, a.common) },
        Sub::CapacitySrCq(a) => RunConfig { channel: Some(a.channel), ..base_config(Command::CapacitySrCq, a.common) },
        Sub::CapacitySrQq(b) => from_block(Command::CapacitySrQq, b),
        Sub::DivergenceDh(d) => from_states(Command::DivergenceDh, d.states, Some(d.eps)),
        Sub::Divergence(d) => from_states(Command::Divergence, d.states, d.eps),
        Sub::GameVerify(v) => RunConfig {
            max_rounds: v.max_rounds,
            restarts: v.restarts,
            assistance_dim: v.assistance_dim,
            ..from_game(Command::GameVerify, v.game)
        },
        Sub::GameClassical(g) => from_game(Command::GameClassical, g),
    };
    config.validate()?;
    Ok(config)
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CliError::MissingFile(path.to_path_buf()),
        _ => CliError::Data { path: path.to_path_buf(), message: e.to_string() },
    })
}

fn data_error(path: &Path, message: impl ToString) -> CliError {
    CliError::Data { path: path.to_path_buf(), message: message.to_string() }
}

/// Loads and validates a channel file; the `kind` field selects the format.
pub fn load_channel(path: &Path) -> Result<LoadedChannel, CliError> {
    let text = read_file(path)?;
    let parsed: ChannelJson = serde_json::from_str(&text).map_err(|e| data_error(path, e))?;
    parsed.validate().map_err(|e| data_error(path, e))
}

/// Loads and validates a state file.
pub fn load_state(path: &Path) -> Result<DensityMatrix, CliError> {
    let text = read_file(path)?;
    serde_json::from_str(&text).map_err(|e| data_error(path, e))
}

/// Installs numeric overrides from [`NUMERIC_CONFIG_ENV`] if it is set.
pub fn install_numeric_config() -> Result<(), CliError> {
    let Some(path) = std::env::var_os(NUMERIC_CONFIG_ENV) else {
        return Ok(());
    };
    let path = PathBuf::from(path);
    let text = read_file(&path)?;
    let cfg: NumericConfig = serde_json::from_str(&text).map_err(|e| data_error(&path, e))?;
    if !config::install(cfg.clone()) && config::get() != &cfg {
        return Err(data_error(&path, "numeric configuration was already fixed"));
    }
    Ok(())
}

/// Result of [`run`]: the rendered output and whether the solver converged.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub text: String,
    pub converged: bool,
}

impl RunOutput {
    pub fn exit_code(&self) -> i32 {
        if self.converged {
            EXIT_OK
        } else {
            EXIT_NOT_CONVERGED
        }
    }
}

fn check_state(state: &DensityMatrix) -> Result<(), CliError> {
    DensityMatrix::validate(state.matrix())?;
    Ok(())
}

fn check_distribution(p: &[f64], what: &str) -> Result<(), CliError> {
    let sum: f64 = p.iter().sum();
    if p.iter().any(|&x| x.is_nan() || x < -1e-12) || (sum - 1.0).abs() > 1e-9 {
        return Err(CliError::Core(fqavc::Error::InvalidArgument(format!("{what} is not a distribution"))));
    }
    Ok(())
}

fn check_game(res: &GameResult) -> Result<(), CliError> {
    check_distribution(&res.code_mixture, "code mixture")?;
    check_distribution(&res.jammer_mixture, "jammer mixture")?;
    res.jammer_pool.iter().try_for_each(check_state)
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("results serialize")
}

fn dispatch(config: &RunConfig) -> Result<(Value, bool, Option<Vec<RoundTrace>>), CliError> {
    let channel = || -> Result<LoadedChannel, CliError> { load_channel(config.channel.as_ref().expect("validated")) };
    let states = || -> Result<(DensityMatrix, DensityMatrix), CliError> {
        Ok((
            load_state(config.rho.as_ref().expect("validated"))?,
            load_state(config.sigma.as_ref().expect("validated"))?,
        ))
    };
    match config.command {
        Command::CapacityEa => {
            let opts = SaddleOptions { tol: config.tol, max_iter: config.max_iter, ..SaddleOptions::default() };
            let res = saddle::solve_ea_saddle_with(&channel()?.quantum(), &opts)?;
            check_state(&res.rho_star)?;
            check_state(&res.sigma_star)?;
            Ok((to_value(&res), res.converged, None))
        }
        Command::CapacitySrCq => {
            let table = match channel()? {
                LoadedChannel::Classical(t) => t.to_cq(),
                LoadedChannel::Quantum(q) => CQChannelTable::from_channel(&q),
            };
            let res = saddle::solve_cq_sr(&table, config.tol, config.max_iter)?;
            check_distribution(&res.p_star, "input distribution")?;
            check_state(&res.sigma_star)?;
            Ok((to_value(&res), res.converged, None))
        }
        Command::CapacitySrQq => {
            let opts = QqOptions { tol: config.tol, seed: config.seed, ..QqOptions::default() };
            let res = saddle::regularized_qq_sr_with(&channel()?.quantum(), config.n, &opts)?;
            check_distribution(&res.ensemble.probabilities, "ensemble")?;
            check_state(&res.sigma_star)?;
            Ok((to_value(&res), res.converged, None))
        }
        Command::DivergenceDh => {
            let (rho, sigma) = states()?;
            let res: DivergenceResult = entropy::dh(&rho, &sigma, config.eps.expect("required"))?;
            Ok((to_value(&res), true, None))
        }
        Command::Divergence => {
            let (rho, sigma) = states()?;
            let mut out = json!({
                "relative_entropy": to_value(&ExtendedReal(entropy::relative_entropy(&rho, &sigma)?)),
                "dmax": to_value(&ExtendedReal(entropy::dmax(&rho, &sigma)?)),
            });
            if let Some(eps) = config.eps {
                out["dh"] = to_value(&entropy::dh(&rho, &sigma, eps)?);
            }
            Ok((out, true, None))
        }
        Command::GameVerify => {
            let opts = DoubleOracleOptions {
                tol: config.tol,
                max_rounds: config.max_rounds,
                see_saw: SeeSawOptions { restarts: config.restarts, seed: config.seed, ..SeeSawOptions::default() },
                assistance_dim: config.assistance_dim,
            };
            let res = game::double_oracle_with(&channel()?.quantum(), config.messages, config.n, &opts)?;
            check_game(&res)?;
            Ok((to_value(&res), res.converged, Some(res.rounds)))
        }
        Command::GameClassical => {
            let path = config.channel.as_ref().expect("validated");
            let LoadedChannel::Classical(table) = channel()? else {
                return Err(data_error(path, "game-classical needs a channel of kind \"classical\""));
            };
            let res = game::classical_game_value(&table, config.messages, config.n)?;
            check_game(&res)?;
            Ok((to_value(&res), res.converged, Some(res.rounds)))
        }
    }
}

fn render_csv(rounds: &[RoundTrace]) -> String {
    let mut out = String::from("round,inf_sup,sup_inf,gap,pool_value,code_pool_size,jammer_pool_size\n");
    for r in rounds {
        let _ = writeln!(
            out,
            "{},{:e},{:e},{:e},{:e},{},{}",
            r.round, r.inf_sup, r.sup_inf, r.gap, r.pool_value, r.code_pool_size, r.jammer_pool_size
        );
    }
    out
}

/// Runs the configured command and renders its output. JSON output echoes
/// the config, seed, numeric tolerances and wall time next to the result.
pub fn run(config: &RunConfig) -> Result<RunOutput, CliError> {
    let started = Instant::now();
    let (result, converged, rounds) = dispatch(config)?;
    let text = match config.format {
        Format::Csv => render_csv(rounds.as_deref().unwrap_or_default()),
        Format::Json => {
            let doc = json!({
                "command": to_value(&config.command),
                "config": to_value(config),
                "seed": config.seed,
                "tolerances": to_value(config::get()),
                "converged": converged,
                "result": result,
                "wall_time_seconds": started.elapsed().as_secs_f64(),
            });
            let mut s = serde_json::to_string_pretty(&doc).expect("values serialize");
            s.push('\n');
            s
        }
    };
    Ok(RunOutput { text, converged })
}

/// Full command-line entry point; returns the process exit code.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let outcome = (|| -> Result<RunOutput, CliError> {
        let config = parse_args(argv)?;
        install_numeric_config()?;
        let output = run(&config)?;
        match &config.output {
            Some(path) => std::fs::write(path, &output.text)?,
            None => print!("{}", output.text),
        }
        Ok(output)
    })();
    match outcome {
        Ok(output) => output.exit_code(),
        Err(CliError::Info(text)) => {
            print!("{text}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("fqavc: {e}");
            e.exit_code()
        }
    }
}

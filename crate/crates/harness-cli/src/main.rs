//! `lane-dqn`: train, evaluate, and trace the highway lane-change agent.

use std::path::PathBuf;
use std::process::ExitCode;

use baselines::PolicyKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use harness_cli::{cmd_demo, cmd_eval, cmd_train, policy_spec, CliError, RunConfig};

#[derive(Parser)]
#[command(name = "lane-dqn", about = "Highway lane-change decision stack: DQN training and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the shielded DQN agent and write CSV metrics + a checkpoint.
    Train(CommonArgs),
    /// Evaluate one policy (or all four) over seeded episodes.
    Eval(EvalArgs),
    /// Run one episode and write a JSONL transition log.
    Demo(DemoArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    episodes: Option<u32>,
    #[arg(long)]
    npc_count: Option<usize>,
    /// Output directory for logs and artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Which policy to evaluate.
    #[arg(long, value_enum)]
    policy: PolicyArg,
    /// Checkpoint for the DQN-backed policies.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Override the policy's default shield setting.
    #[arg(long, value_enum)]
    shield: Option<ShieldArg>,
}

#[derive(Args)]
struct DemoArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_enum)]
    policy: PolicyArg,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long, value_enum)]
    shield: Option<ShieldArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Random,
    Rule,
    Dqn,
    #[value(name = "rule-dqn")]
    RuleDqn,
    /// All four policies in one comparison table (eval only).
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum ShieldArg {
    On,
    Off,
}

impl From<ShieldArg> for bool {
    fn from(v: ShieldArg) -> bool {
        matches!(v, ShieldArg::On)
    }
}

fn load_config(common: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut config = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(episodes) = common.episodes {
        config.episodes = episodes;
    }
    if let Some(npc_count) = common.npc_count {
        config.npc_count = npc_count;
    }
    if let Some(out) = &common.out {
        config.log_dir = out.clone();
    }
    Ok(config)
}

fn run() -> Result<(), CliError> {
    match Cli::parse().command {
        Command::Train(common) => {
            let config = load_config(&common)?;
            let outcome = cmd_train(&config)?;
            println!(
                "trained {} episodes -> {} and {}",
                outcome.episodes.len(),
                outcome.metrics_csv.display(),
                outcome.checkpoint.display()
            );
            Ok(())
        }
        Command::Eval(args) => {
            let config = load_config(&args.common)?;
            let shield = args.shield.map(bool::from);
            let kinds: Vec<PolicyKind> = match args.policy {
                PolicyArg::Random => vec![PolicyKind::Random],
                PolicyArg::Rule => vec![PolicyKind::RuleBased],
                PolicyArg::Dqn => vec![PolicyKind::Dqn],
                PolicyArg::RuleDqn => vec![PolicyKind::RuleBasedDqn],
                PolicyArg::All => vec![
                    PolicyKind::Random,
                    PolicyKind::RuleBased,
                    PolicyKind::Dqn,
                    PolicyKind::RuleBasedDqn,
                ],
            };
            let specs: Vec<_> = kinds
                .into_iter()
                .map(|kind| policy_spec(kind, args.checkpoint.as_deref(), shield))
                .collect();
            // Eval defaults to the 10-episode protocol unless overridden.
            let n = args.common.episodes.unwrap_or(10);
            cmd_eval(&config, &specs, n)?;
            Ok(())
        }
        Command::Demo(args) => {
            let config = load_config(&args.common)?;
            let kind = match args.policy {
                PolicyArg::Random => PolicyKind::Random,
                PolicyArg::Rule => PolicyKind::RuleBased,
                PolicyArg::Dqn => PolicyKind::Dqn,
                PolicyArg::RuleDqn => PolicyKind::RuleBasedDqn,
                PolicyArg::All => {
                    return Err(CliError::Config("demo runs one policy at a time".into()))
                }
            };
            let spec = policy_spec(kind, args.checkpoint.as_deref(), args.shield.map(bool::from));
            let path = cmd_demo(&config, &spec)?;
            println!("wrote {}", path.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

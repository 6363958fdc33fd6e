use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod output;

#[derive(Debug, Parser)]
#[command(name = "arrange", version, about = "Plan household object arrangements from preference weights")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Planner RNG seed.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Search iterations per committed placement.
    #[arg(long, global = true, default_value_t = 10_000)]
    pub iterations: u64,
    /// UCB exploration constant.
    #[arg(long = "exploration-c", global = true, default_value_t = std::f64::consts::FRAC_1_SQRT_2)]
    pub exploration_c: f64,
    /// Refuse anything that would reach the network.
    #[arg(long, global = true)]
    pub offline: bool,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RenderFormat {
    Svg,
    Ascii,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate spatial priors, affinities, accessibility and weights from demonstrations.
    EstimatePriors {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        demos: PathBuf,
        /// Commonsense table produced by `fetch-commonsense`.
        #[arg(long)]
        commonsense: PathBuf,
        /// Twelve-item Likert response.
        #[arg(long, conflicts_with = "weights")]
        likert: Option<PathBuf>,
        /// Explicit weights, e.g. `0.25,0.25,0.25,0.25`.
        #[arg(long, value_delimiter = ',', num_args = 4)]
        weights: Option<Vec<f64>>,
    },
    /// Build the commonsense table from the language-model oracle or a stub fixture.
    FetchCommonsense {
        #[arg(long)]
        scene: PathBuf,
        /// Serve scores from this table instead of querying a model.
        #[arg(long)]
        stub: Option<PathBuf>,
        /// JSON oracle config (endpoint, model, optional api_key; chmod 600 if it holds a key).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Response cache; defaults to `<out>/commonsense_cache.json`.
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Plan an arrangement with tree search.
    Plan {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        bundle: PathBuf,
        /// Override the bundle's weights.
        #[arg(long, value_delimiter = ',', num_args = 4)]
        weights: Option<Vec<f64>>,
        /// Solve exactly by enumeration instead of searching.
        #[arg(long)]
        oracle: bool,
        /// Independent search trees merged at the root.
        #[arg(long, default_value_t = 1)]
        parallel: usize,
        #[arg(long, value_enum)]
        render: Option<RenderFormat>,
    },
    /// Compare predictions with ground truth; pass `--pred`/`--gt` once per case.
    Eval {
        #[arg(long, required = true)]
        pred: Vec<PathBuf>,
        #[arg(long, required = true)]
        gt: Vec<PathBuf>,
        /// Case labels, in order; defaults to the prediction file names.
        #[arg(long)]
        label: Vec<String>,
    },
    /// Exhaustively solve a small instance.
    Oracle {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long, value_delimiter = ',', num_args = 4)]
        weights: Option<Vec<f64>>,
    },
    /// Draw an arrangement (or plan result) from above.
    Render {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        arrangement: PathBuf,
        #[arg(long, value_enum, default_value = "ascii")]
        format: RenderFormat,
    },
}

fn run(cli: Cli) -> arrange_core::Result<()> {
    let g = &cli.global;
    match cli.command {
        Command::EstimatePriors {
            scene,
            demos,
            commonsense,
            likert,
            weights,
        } => commands::estimate_priors(g, &scene, &demos, &commonsense, likert.as_deref(), weights),
        Command::FetchCommonsense {
            scene,
            stub,
            config,
            cache,
        } => commands::fetch_commonsense(g, &scene, stub.as_deref(), config.as_deref(), cache),
        Command::Plan {
            scene,
            bundle,
            weights,
            oracle,
            parallel,
            render,
        } => {
            if oracle {
                commands::oracle(g, &scene, &bundle, weights, "plan --oracle")
            } else {
                commands::plan(g, &scene, &bundle, weights, parallel, render)
            }
        }
        Command::Eval { pred, gt, label } => commands::eval(g, &pred, &gt, &label),
        Command::Oracle { scene, bundle, weights } => commands::oracle(g, &scene, &bundle, weights, "oracle"),
        Command::Render {
            scene,
            arrangement,
            format,
        } => commands::render(g, &scene, &arrangement, format),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::FAILURE
        }
    }
}

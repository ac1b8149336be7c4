use std::path::PathBuf;
use std::process::ExitCode;

use cachenet::analysis::{policy_bound_with, BoundPolicy, BoundReport};
use cachenet::experiment::{run_plan, validate, ExperimentPlan};
use cachenet::topology::load_graphml;
use cachenet::{distance_model, make_catalog, CutRounding, DistanceMode, Error};
use clap::{Parser, Subcommand, ValueEnum};

/// Cache-network delay experiments.
#[derive(Debug, Parser)]
#[command(name = "cachenet", version)]
struct Cli {
    /// Worker threads for sweeps and seeds (defaults to all cores).
    #[arg(long, env = "CACHENET_WORKERS", global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Execute an experiment plan and write its CSV files.
    Run { plan: PathBuf },
    /// Check a plan without running it.
    Validate { plan: PathBuf },
    /// Inspect topologies.
    Topo {
        #[command(subcommand)]
        command: TopoCommand,
    },
    /// Evaluate one policy's closed-form delay expression.
    Bounds(BoundsArgs),
}

#[derive(Debug, Subcommand)]
enum TopoCommand {
    /// Print node and edge counts and the mean routing distance.
    Info {
        file: PathBuf,
        /// Number of sampled pairs for the sampled estimate (defaults to 100 per node).
        #[arg(long)]
        pairs: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, clap::Args)]
struct BoundsArgs {
    /// URP, PPP, TPP, TPPC or LBND.
    #[arg(long)]
    policy: BoundPolicy,
    #[arg(long)]
    alpha: f64,
    /// Catalog size |C|.
    #[arg(long = "contents", short = 'C')]
    content_count: usize,
    /// Per-node cache budget.
    #[arg(short)]
    s: usize,
    /// Routing distance.
    #[arg(short)]
    d: f64,
    /// Average distance used to place the TPP-C cut.
    #[arg(long)]
    d_bar: Option<f64>,
    #[arg(long, value_enum, default_value_t = Rounding::Ceil)]
    rounding: Rounding,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Rounding {
    Ceil,
    Round,
    Floor,
}

impl From<Rounding> for CutRounding {
    fn from(r: Rounding) -> Self {
        match r {
            Rounding::Ceil => CutRounding::Ceil,
            Rounding::Round => CutRounding::Round,
            Rounding::Floor => CutRounding::Floor,
        }
    }
}

const EXIT_CONFIG: u8 = 1;
const EXIT_INVARIANT: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot configure {n} workers: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Invariant(_) => EXIT_INVARIANT,
                _ => EXIT_CONFIG,
            })
        }
    }
}

fn dispatch(command: Command) -> cachenet::Result<ExitCode> {
    match command {
        Command::Run { plan } => {
            let plan = ExperimentPlan::load(&plan)?;
            let out = run_plan(&plan)?;
            println!("wrote {} rows to {}", out.rows.len(), out.output.display());
            if let Some(p) = &out.summary_path {
                println!(
                    "wrote {} summary rows to {}",
                    out.summary.len(),
                    p.display()
                );
            }
            println!("manifest {}", out.manifest_path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { plan } => {
            let plan = ExperimentPlan::load(&plan)?;
            let diags = validate(&plan);
            if diags.is_empty() {
                println!(
                    "ok: {} ({} sweep points, {} seeds)",
                    plan.id,
                    plan.points().len(),
                    plan.seeds().len()
                );
                Ok(ExitCode::SUCCESS)
            } else {
                for d in &diags {
                    println!("{d}");
                }
                Ok(ExitCode::from(EXIT_CONFIG))
            }
        }
        Command::Topo {
            command: TopoCommand::Info { file, pairs, seed },
        } => {
            let t = load_graphml(&file)?;
            let n = t.node_count();
            println!("nodes: {n}");
            println!("edges: {}", t.edge_count());
            println!("average_degree: {:.4}", t.average_degree());
            let count = pairs.unwrap_or(100 * n);
            let sampled = distance_model::<f64>(&t, DistanceMode::SampledPairs { count, seed })?;
            if n <= 20_000 {
                let exact = distance_model::<f64>(&t, DistanceMode::ExactAllPairs)?;
                println!("d_bar_exact: {:.6}", exact.mean());
                println!("diameter: {}", exact.max_distance());
            } else {
                println!("d_bar_exact: skipped (n > 20000)");
            }
            println!(
                "d_bar_sampled: {:.6} ({count} pairs, seed {seed})",
                sampled.mean()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Bounds(args) => {
            let cat = make_catalog(args.content_count, args.alpha)?;
            let report = policy_bound_with(
                &cat,
                args.policy,
                args.s,
                args.d,
                args.d_bar,
                args.rounding.into(),
            )?;
            print_report(&report, args.json)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn print_report(r: &BoundReport<f64>, json: bool) -> cachenet::Result<()> {
    if json {
        println!("{}", serde_json::to_string_pretty(r)?);
        return Ok(());
    }
    println!("policy: {}", r.policy);
    println!("alpha: {} ({})", r.alpha, r.alpha_regime.name());
    println!("contents: {}", r.content_count);
    println!("s: {}", r.s);
    println!("d: {}", r.d);
    if let Some(d_bar) = r.d_bar {
        println!("d_bar: {d_bar}");
    }
    println!("value: {:.9}", r.exact_value);
    println!("kind: {:?}", r.kind);
    if let Some(i) = r.cut_index {
        println!("cut_index: {i}");
    }
    println!("order: {}", r.order_expr);
    Ok(())
}

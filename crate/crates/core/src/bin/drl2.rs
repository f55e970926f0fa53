use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use drl2::automata::{cross_validate, library};
use drl2::baselines::Method;
use drl2::environments::{Difficulty, Rect};
use drl2::harness::checks::{criteria, Budget};
use drl2::harness::{
    aggregate, read_run_csv, run_experiment, write_aggregate_csv, write_manifest, write_run_csv, AggregateCsvRow,
    ExperimentConfig, HarnessError, Overrides, RunResult,
};
use drl2::learning::Learner;
use drl2::ltl::parse;
use drl2::rng::{stream, Stream};

#[derive(Parser)]
#[command(name = "drl2", version, about = "Reinforcement learning from LTL with automaton-guided exploration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one configuration over its seeds.
    Run(RunArgs),
    /// Train a grid of prior strengths, intrinsic scales and methods.
    Sweep(SweepArgs),
    /// Merge per-seed CSVs into an aggregate CSV.
    Aggregate(AggregateArgs),
    /// Check every bundled automaton against its formula.
    Validate(ValidateArgs),
    /// Run the acceptance criteria.
    Reproduce(ReproduceArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML experiment configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    task: Option<String>,
    #[arg(long)]
    difficulty: Option<Difficulty>,
    /// Seeds, repeated or comma separated.
    #[arg(long = "seed", value_delimiter = ',')]
    seeds: Vec<u64>,
    #[arg(long)]
    method: Option<Method>,
    #[arg(long)]
    learner: Option<Learner>,
    /// Environment steps per seed.
    #[arg(long)]
    steps: Option<usize>,
    /// Dirichlet prior strength.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    intrinsic_scale: Option<f64>,
    #[arg(long)]
    posterior_samples: Option<usize>,
    /// Probability of repeating the previous action.
    #[arg(long)]
    sticky: Option<f64>,
    /// Random start rectangle `x0,y0,x1,y1`.
    #[arg(long, value_parser = parse_rect)]
    random_start: Option<Rect>,
    /// Output directory.
    #[arg(long, env = "DRL2_OUT", default_value = "results")]
    out: PathBuf,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig, HarnessError> {
        let mut cfg = match &self.config {
            Some(p) => {
                let text = fs::read_to_string(p)
                    .map_err(|source| HarnessError::Io { path: p.display().to_string(), source })?;
                ExperimentConfig::from_toml(&text)?
            }
            None => ExperimentConfig::default(),
        };
        Overrides {
            task: self.task.clone(),
            difficulty: self.difficulty,
            seeds: (!self.seeds.is_empty()).then(|| self.seeds.clone()),
            method: self.method,
            learner: self.learner,
            steps: self.steps,
            alpha: self.alpha,
            intrinsic_scale: self.intrinsic_scale,
            posterior_samples: self.posterior_samples,
            sticky: self.sticky,
            random_start: self.random_start,
        }
        .apply(&mut cfg);
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_rect(text: &str) -> Result<Rect, String> {
    let v: Vec<i32> =
        text.split(',').map(|x| x.trim().parse::<i32>().map_err(|e| e.to_string())).collect::<Result<_, _>>()?;
    match v[..] {
        [x0, y0, x1, y1] => Ok(Rect::new(x0, y0, x1, y1)),
        _ => Err(format!("expected x0,y0,x1,y1, got {text}")),
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 10.0, 100.0, 1000.0, 10000.0])]
    alphas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.1])]
    scales: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [Method::Drl2])]
    methods: Vec<Method>,
}

#[derive(Args)]
struct AggregateArgs {
    /// Per-seed CSV files.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    method: Method,
    #[arg(long)]
    task: String,
    #[arg(long)]
    difficulty: Difficulty,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ReproduceArgs {
    #[arg(long, default_value_t = 10)]
    seeds: usize,
    #[arg(long, default_value_t = 200_000)]
    steps: usize,
}

fn write_outputs(out: &Path, cfg: &ExperimentConfig, runs: &[RunResult]) -> Result<PathBuf, HarnessError> {
    let dir = out.join(cfg.label());
    for r in runs {
        write_run_csv(&dir.join(format!("seed-{}.csv", r.seed)), r)?;
        write_manifest(&dir.join(format!("manifest-seed-{}.toml", r.seed)), cfg, r.seed)?;
    }
    if runs.len() >= 2 {
        let series: Vec<_> = runs.iter().map(|r| &r.metrics).collect();
        let rows: Vec<AggregateCsvRow> = aggregate(&series)?.iter().map(|r| AggregateCsvRow::new(r, cfg)).collect();
        write_aggregate_csv(&dir.join("aggregate.csv"), &rows)?;
    }
    Ok(dir)
}

fn report(cfg: &ExperimentConfig, runs: &[RunResult], dir: &Path) {
    println!("{}", cfg.label());
    for r in runs {
        let last = r.metrics.records().last().map(|e| e.edr).unwrap_or(0.0);
        let violations = r.violation_rate().map(|v| format!("{v:.3}")).unwrap_or_else(|| "n/a".into());
        println!(
            "  seed {}: final return {last:.4}, training violation rate {violations}, {:.1}s",
            r.seed,
            r.duration.as_secs_f64()
        );
    }
    println!("  wrote {}", dir.display());
}

fn run(args: &RunArgs) -> Result<(), HarnessError> {
    let cfg = args.config.resolve()?;
    let runs = run_experiment(&cfg)?;
    let dir = write_outputs(&args.config.out, &cfg, &runs)?;
    report(&cfg, &runs, &dir);
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<(), HarnessError> {
    let base = args.config.resolve()?;
    for &method in &args.methods {
        for &alpha in &args.alphas {
            for &scale in &args.scales {
                let mut cfg = base.clone();
                cfg.train.method = method;
                cfg.train.alpha = alpha;
                cfg.train.intrinsic_scale = scale;
                let runs = run_experiment(&cfg)?;
                let dir = write_outputs(&args.config.out, &cfg, &runs)?;
                report(&cfg, &runs, &dir);
            }
        }
    }
    Ok(())
}

fn merge(args: &AggregateArgs) -> Result<(), HarnessError> {
    let mut loaded = Vec::new();
    for p in &args.inputs {
        loaded.push(read_run_csv(p)?);
    }
    let series: Vec<_> = loaded.iter().map(|(_, s)| s).collect();
    let cfg = ExperimentConfig {
        task: args.task.clone(),
        difficulty: args.difficulty,
        train: drl2::learning::TrainConfig { method: args.method, ..Default::default() },
        ..Default::default()
    };
    let rows: Vec<AggregateCsvRow> = aggregate(&series)?.iter().map(|r| AggregateCsvRow::new(r, &cfg)).collect();
    write_aggregate_csv(&args.output, &rows)?;
    println!("aggregated {} seeds into {}", loaded.len(), args.output.display());
    Ok(())
}

fn validate(args: &ValidateArgs) -> Result<bool, HarnessError> {
    let mut rng = stream(args.seed, Stream::Validation);
    let mut ok = true;
    for name in library::names() {
        let l = library::load(name).map_err(|e| HarnessError::Config(e.to_string()))?;
        let text = library::formula(name).expect("bundled automata carry a formula");
        let f = parse(text, l.alphabet()).map_err(|e| HarnessError::Config(e.to_string()))?;
        let cv = cross_validate(&l, &f, args.samples, &mut rng).map_err(|e| HarnessError::Config(e.to_string()))?;
        println!("{name} ({text}): {} words, {} disagreements", cv.samples, cv.disagreements.len());
        if let Some(d) = cv.disagreements.first() {
            println!("  e.g. {:?}: automaton {}, formula {}", d.word, d.automaton, d.formula);
        }
        ok &= cv.agrees();
    }
    Ok(ok)
}

fn reproduce(args: &ReproduceArgs) -> bool {
    let budget = Budget { seeds: args.seeds, steps: args.steps };
    let mut ok = true;
    for c in criteria() {
        match (c.check)(&budget) {
            Ok(v) => {
                println!("{} {} {}: {}", if v.passed { "PASS" } else { "FAIL" }, c.id, c.title, v.detail);
                ok &= v.passed;
            }
            Err(e) => {
                println!("FAIL {} {}: error: {e}", c.id, c.title);
                ok = false;
            }
        }
    }
    ok
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => run(a).map(|_| true),
        Command::Sweep(a) => sweep(a).map(|_| true),
        Command::Aggregate(a) => merge(a).map(|_| true),
        Command::Validate(a) => validate(a),
        Command::Reproduce(a) => Ok(reproduce(a)),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

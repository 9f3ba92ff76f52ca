use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use evcop::levy::{distribution_round_trip, levy_from_distribution, measure_round_trip, psi_from_distribution, stdf_via_levy};
use evcop::statlab::{bench_scaling, Sampler};
use evcop::{sample_definetti, sample_pickands, CopulaModel, Method, SampleBatch, StdfValue};

#[derive(Debug, Parser)]
#[command(name = "evcop", version, about = "Extreme-value copulas from unit-mean laws: sampling and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a batch and write it as CSV.
    Sample(SampleArgs),
    /// Bivariate sample preset for scatter plots (n = 5000 unless given).
    Scatter(SampleArgs),
    /// Evaluate the stable tail dependence function and the copula.
    StdfEval(EvalArgs),
    /// Report distribution/Lévy-measure round-trip errors per margin.
    LevyRoundtrip(RoundTripArgs),
    /// Time both samplers on the exchangeable uniform_half model.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct ModelArg {
    /// Margins as a JSON list of {"family", "theta"} objects, or @path to a file holding one.
    #[arg(long)]
    model: String,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[command(flatten)]
    model: ModelArg,
    /// Number of rows.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, env = "EVCOP_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = SampleMethod::Auto)]
    method: SampleMethod,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SampleMethod {
    /// definetti when every margin is continuous with bounded support, else pickands.
    Auto,
    Definetti,
    Pickands,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    model: ModelArg,
    /// Point t in [0, ∞)^d, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    t: Option<Vec<f64>>,
    /// Point u in [0, 1]^d, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    u: Option<Vec<f64>>,
    #[arg(long = "eval", value_enum, default_value_t = EvalMethod::Auto)]
    eval: EvalMethod,
    /// Monte Carlo sample count.
    #[arg(long, default_value_t = 1_000_000)]
    samples: usize,
    #[arg(long, env = "EVCOP_SEED", default_value_t = 0)]
    seed: u64,
    /// Print JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EvalMethod {
    /// Closed form when available, else inclusion–exclusion.
    Auto,
    ClosedForm,
    InclusionExclusion,
    Levy,
    MonteCarlo,
}

#[derive(Debug, Args)]
struct RoundTripArgs {
    #[command(flatten)]
    model: ModelArg,
    #[arg(long, default_value_t = 200)]
    points: usize,
    /// Exit with an error when any reported error exceeds this.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "2,5,10,25,50,100")]
    dims: Vec<usize>,
    #[arg(long, default_value_t = 5000)]
    n: usize,
    #[arg(long, value_delimiter = ',', default_value = "definetti,pickands")]
    methods: Vec<BenchMethod>,
    #[arg(long, env = "EVCOP_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Also write the report as JSON to this file.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BenchMethod {
    Definetti,
    Pickands,
}

impl From<BenchMethod> for Sampler {
    fn from(m: BenchMethod) -> Self {
        match m {
            BenchMethod::Definetti => Sampler::Definetti,
            BenchMethod::Pickands => Sampler::Pickands,
        }
    }
}

fn load_model(arg: &ModelArg) -> anyhow::Result<CopulaModel> {
    let text = match arg.model.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path).with_context(|| format!("reading model file {path}"))?,
        None => arg.model.clone(),
    };
    Ok(CopulaModel::from_json(&text)?)
}

fn sample(args: &SampleArgs, default_n: Option<usize>, need_d: Option<usize>) -> anyhow::Result<()> {
    let model = load_model(&args.model)?;
    if let Some(d) = need_d {
        if model.dim() != d {
            bail!("scatter needs exactly {d} margins, got {}", model.dim());
        }
    }
    let n = match args.n.or(default_n) {
        Some(n) if n >= 1 => n,
        Some(_) => bail!("--n must be at least 1"),
        None => bail!("--n is required"),
    };
    if args.threads == 0 {
        bail!("--threads must be at least 1");
    }
    let method = match args.method {
        SampleMethod::Auto if model.all_bounded_continuous() => SampleMethod::Definetti,
        SampleMethod::Auto => SampleMethod::Pickands,
        m => m,
    };
    let batch: SampleBatch = match method {
        SampleMethod::Definetti => sample_definetti(&model, n, args.seed, args.threads)?,
        _ => sample_pickands(&model, n, args.seed, args.threads)?,
    };
    match &args.out {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut w = BufWriter::new(file);
            batch.write_csv(&mut w)?;
            w.flush()?;
        }
        None => {
            let mut w = BufWriter::new(io::stdout().lock());
            batch.write_csv(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn eval_stdf(model: &CopulaModel, t: &[f64], args: &EvalArgs) -> anyhow::Result<StdfValue> {
    let value = match args.eval {
        EvalMethod::Auto => match evcop::stdf::stdf_closed_form(model, t) {
            Ok(v) => v,
            Err(evcop::Error::Unsupported(_)) | Err(evcop::Error::TooLarge(_)) => {
                evcop::stdf::stdf_inclusion_exclusion(model, t)?
            }
            Err(e) => return Err(e.into()),
        },
        EvalMethod::ClosedForm => evcop::stdf::stdf_closed_form(model, t)?,
        EvalMethod::InclusionExclusion => evcop::stdf::stdf_inclusion_exclusion(model, t)?,
        EvalMethod::Levy => stdf_via_levy(model, t)?,
        EvalMethod::MonteCarlo => {
            evcop::stdf::stdf(model, t, Method::MonteCarlo { samples: args.samples, seed: args.seed })?
        }
    };
    Ok(value)
}

fn stdf_eval(args: &EvalArgs) -> anyhow::Result<()> {
    let model = load_model(&args.model)?;
    let (t, u) = match (&args.t, &args.u) {
        (Some(t), None) => (t.clone(), t.iter().map(|x| (-x).exp()).collect::<Vec<f64>>()),
        (None, Some(u)) => {
            if let Some(x) = u.iter().find(|x| !(**x >= 0.0 && **x <= 1.0)) {
                bail!("--u coordinates must lie in [0, 1], got {x}");
            }
            (u.iter().map(|x| -x.ln()).collect(), u.clone())
        }
        (Some(_), Some(_)) => bail!("give either --t or --u, not both"),
        (None, None) => bail!("one of --t or --u is required"),
    };
    if t.len() != model.dim() {
        bail!("the point has {} coordinates but the model has {} margins", t.len(), model.dim());
    }
    let ell = eval_stdf(&model, &t, args)?;
    let c = if u.contains(&0.0) { 0.0 } else { (-ell.value).exp() };
    if args.json {
        let out = serde_json::json!({ "t": t, "u": u, "stdf": ell, "copula": c });
        println!("{out}");
    } else {
        println!("t      = {}", join(&t));
        println!("u      = {}", join(&u));
        println!("l(t)   = {:.15} (stderr {:.3e})", ell.value, ell.stderr);
        println!("C(u)   = {c:.15}");
    }
    Ok(())
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn levy_roundtrip(args: &RoundTripArgs) -> anyhow::Result<()> {
    let model = load_model(&args.model)?;
    let mut seen: Vec<String> = Vec::new();
    let mut worst: f64 = 0.0;
    println!(
        "{:<28} {:>12} {:>12} {:>12} {:>12} {:>12}",
        "margin", "F->nu->F", "nu->F->nu", "|k - b_F|", "|m - u_F|", "|Psi(1)-1|"
    );
    for (i, margin) in model.margins().iter().enumerate() {
        let label = margin.spec().map(|s| s.to_string()).unwrap_or_else(|| format!("margin {}", i + 1));
        if seen.contains(&label) {
            continue;
        }
        seen.push(label.clone());
        let cdf_err = distribution_round_trip(Arc::clone(margin), args.points)?;
        let nu = levy_from_distribution(Arc::clone(margin));
        let survival_err = measure_round_trip(&nu, args.points)?;
        let kill_err = gap(nu.killing_rate(), margin.lower_support());
        let mass_err = gap(nu.total_mass(), margin.upper_support());
        let mean_err = (psi_from_distribution(margin.as_ref(), 1.0)? - 1.0).abs();
        println!(
            "{label:<28} {cdf_err:>12.3e} {survival_err:>12.3e} {kill_err:>12.3e} {mass_err:>12.3e} {mean_err:>12.3e}"
        );
        worst = worst.max(cdf_err).max(survival_err).max(kill_err).max(mass_err).max(mean_err);
    }
    println!("max error {worst:.3e}");
    if !(worst <= args.tol) {
        bail!("round-trip error {worst:.3e} exceeds tolerance {:.3e}", args.tol);
    }
    Ok(())
}

// Equal infinities count as no error.
fn gap(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs()
    }
}

fn bench(args: &BenchArgs) -> anyhow::Result<()> {
    if args.n == 0 {
        bail!("--n must be at least 1");
    }
    if args.threads == 0 {
        bail!("--threads must be at least 1");
    }
    let samplers: Vec<Sampler> = args.methods.iter().map(|&m| m.into()).collect();
    let report = bench_scaling(&args.dims, args.n, &samplers, args.seed, args.threads)?;
    print!("{}", report.to_table());
    if let Some(path) = &args.json {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        serde_json::to_writer_pretty(BufWriter::new(file), &report)?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Sample(args) => sample(args, None, None),
        Command::Scatter(args) => sample(args, Some(5000), Some(2)),
        Command::StdfEval(args) => stdf_eval(args),
        Command::LevyRoundtrip(args) => levy_roundtrip(args),
        Command::Bench(args) => bench(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

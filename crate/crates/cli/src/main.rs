use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use tensense::bounds::{
    bound_nuclear, bound_rpp_dual, bound_rpp_recovery, covering_bound, expected_opnorm_bound, mc_expected_opnorm,
    mean_width_nuclear_mc, net::build_net, CoveringSpec, DudleyForm, NuclearVariant,
};
use tensense::harness::{emit_csv, run_experiment, summarize, ExperimentConfig};
use tensense::norms::{nuclear_avg, nuclear_bracket_with, operator_norm_with, AlsOptions};
use tensense::rng::derive_seed;
use tensense::sensing::make_ensemble;
use tensense::solvers::{recover, SolverConfig, SolverKind};
use tensense::tensor::io;
use tensense::{hosvd, random_tucker, Shape};

#[derive(Parser)]
#[command(name = "tensense", version, about = "Low-Tucker-rank tensor recovery and bound evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mode spectra and HOSVD property residuals of a tensor file.
    Hosvd { tensor: PathBuf },
    /// Frobenius, operator, averaged nuclear norm and a nuclear norm bracket.
    Norms {
        tensor: PathBuf,
        #[arg(long, default_value_t = tensense::norms::DEFAULT_RESTARTS)]
        restarts: usize,
        /// Number of CP fits and random dual probes in the bracket.
        #[arg(long, default_value_t = 8)]
        effort: usize,
        #[arg(long, default_value_t = AlsOptions::default().seed)]
        seed: u64,
    },
    /// Recover a tensor from Gaussian measurements.
    Recover(RecoverArgs),
    /// Evaluate a bound.
    Bounds {
        #[command(subcommand)]
        which: BoundCommand,
    },
    /// Run a seeded sweep and write CSV; exits nonzero unless every row converged.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RecoverArgs {
    /// Ground truth tensor file.
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    tensor: Option<PathBuf>,
    /// Random Tucker ground truth, e.g. `--synthetic dims=4,4,4 ranks=1,1,1`.
    #[arg(long, num_args = 1..=2)]
    synthetic: Option<Vec<String>>,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value = "sumnuc")]
    solver: SolverKind,
    /// RPP radius; defaults to twice the ground truth Frobenius norm.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Diagnostics JSON path; the estimate goes next to it with a `.tnsr` extension.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum BoundCommand {
    /// Recovery bound for sum-of-nuclear-norms.
    Errnuc {
        #[arg(long, value_delimiter = ',')]
        dims: Vec<usize>,
        #[arg(long)]
        m: usize,
        /// `‖X♯‖_*` value (e.g. nuclear_avg).
        #[arg(long)]
        nuc: f64,
        #[arg(long, default_value = "proof")]
        variant: NuclearVariant,
    },
    /// `E‖G‖ ≤ Σ√n_d`, optionally with a Monte Carlo estimate.
    #[command(name = "lemmaA")]
    LemmaA {
        #[arg(long, value_delimiter = ',')]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Log covering count of rank-sum-`r` tensors of norm `α`, optionally building a net.
    Covering {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        r: usize,
        #[arg(long, value_delimiter = ',')]
        dims: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        partition: Option<Vec<usize>>,
        /// Construct a net for `partition` and report its size.
        #[arg(long)]
        build: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Dudley bound on `E ω*_α(σ(G))`.
    #[command(name = "lemmaB")]
    LemmaB {
        #[command(flatten)]
        dudley: DudleyArgs,
    },
    /// Recovery bound for the `ω**_α ∘ σ` program.
    Errrpp {
        #[command(flatten)]
        dudley: DudleyArgs,
        #[arg(long)]
        m: usize,
        /// `ω**_α(σ(X♯))`.
        #[arg(long)]
        omega: f64,
    },
    /// Monte Carlo mean width of the nuclear ball of radius `t`.
    Meanwidth {
        #[arg(long, value_delimiter = ',')]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 500)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct DudleyArgs {
    /// Spectrum length `N`.
    #[arg(long)]
    n: usize,
    /// Tensor order `D`.
    #[arg(long)]
    order: usize,
    /// Largest mode dimension `n*`.
    #[arg(long)]
    n_star: usize,
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value = "summed")]
    form: DudleyForm,
    #[arg(long)]
    r_param: Option<usize>,
}

fn print_json(v: &impl serde::Serialize) -> anyhow::Result<()> {
    use std::io::Write;
    let text = serde_json::to_string_pretty(v)?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn parse_list(s: &str) -> anyhow::Result<Vec<usize>> {
    s.split([',', 'x']).map(|t| t.trim().parse::<usize>().with_context(|| format!("bad integer in {s:?}"))).collect()
}

fn synthetic_truth(spec: &[String], seed: u64) -> anyhow::Result<tensense::DenseTensor> {
    let mut dims = None;
    let mut ranks = None;
    for item in spec {
        match item.split_once('=') {
            Some(("dims", v)) => dims = Some(parse_list(v)?),
            Some(("ranks", v)) => ranks = Some(parse_list(v)?),
            _ => bail!("expected dims=.. or ranks=.., got {item:?}"),
        }
    }
    let dims = dims.context("--synthetic needs dims=..")?;
    let ranks = ranks.unwrap_or_else(|| dims.clone());
    Ok(random_tucker(&Shape::new(dims)?, &ranks, derive_seed(seed, &[0]))?)
}

fn run_recover(a: RecoverArgs) -> anyhow::Result<ExitCode> {
    let truth = match (&a.tensor, &a.synthetic) {
        (Some(p), _) => io::load(p).with_context(|| format!("reading {}", p.display()))?,
        (None, Some(spec)) => synthetic_truth(spec, a.seed)?,
        (None, None) => bail!("one of --tensor or --synthetic is required"),
    };
    let ensemble = make_ensemble(truth.shape(), a.m, derive_seed(a.seed, &[1]))?;
    let y = ensemble.forward(&truth)?;
    let mut cfg = SolverConfig { seed: a.seed, ..Default::default() };
    if let Some(n) = a.max_iters {
        cfg.max_iters = n;
    }
    if a.solver == SolverKind::Rpp {
        cfg.alpha = Some(a.alpha.unwrap_or(2.0 * truth.frobenius()));
    }
    let result = recover(&ensemble, &y, &a.solver, &cfg)?;

    let mut report = json!({
        "solver": a.solver.to_string(),
        "dims": truth.dims(),
        "m": a.m,
        "seed": a.seed,
        "alpha": cfg.alpha,
        "ensemble": ensemble.descriptor(),
        "rel_error": result.relative_error(&truth)?,
        "diagnostics": result.diagnostics(),
    });
    if let Some(out) = &a.out {
        let estimate = out.with_extension("tnsr");
        io::save_text(&result.estimate, &estimate)?;
        report["estimate_file"] = Value::String(estimate.display().to_string());
        std::fs::write(out, serde_json::to_string_pretty(&report)?)?;
    }
    print_json(&report)?;
    Ok(if result.converged { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn run_bounds(b: BoundCommand) -> anyhow::Result<()> {
    let report = match b {
        BoundCommand::Errnuc { dims, m, nuc, variant } => serde_json::to_value(bound_nuclear(&dims, m, nuc, variant)?)?,
        BoundCommand::LemmaA { dims, trials, seed } => {
            Shape::new(dims.clone())?;
            let mut v = json!({
                "name": "lemma_a",
                "inputs": { "dims": dims },
                "value": expected_opnorm_bound(&dims),
            });
            if trials > 0 {
                v["monte_carlo"] = serde_json::to_value(mc_expected_opnorm(&dims, trials, seed)?)?;
            }
            v
        }
        BoundCommand::Covering { alpha, epsilon, r, dims, partition, build, seed } => {
            let spec = CoveringSpec { alpha, epsilon, r, dims: dims.clone(), partition: partition.clone() };
            let mut v = serde_json::to_value(covering_bound(&spec)?)?;
            if build {
                let nu = partition.context("--build needs --partition")?;
                v["net"] = serde_json::to_value(build_net(&nu, &dims, alpha, epsilon, seed)?.summary())?;
            }
            v
        }
        BoundCommand::LemmaB { dudley: d } => {
            serde_json::to_value(bound_rpp_dual(d.n, d.order, d.n_star, d.alpha, d.form, d.r_param)?)?
        }
        BoundCommand::Errrpp { dudley: d, m, omega } => {
            serde_json::to_value(bound_rpp_recovery(d.n, d.order, d.n_star, d.alpha, m, d.r_param, d.form, omega)?)?
        }
        BoundCommand::Meanwidth { dims, t, trials, seed } => {
            let mc = mean_width_nuclear_mc(&dims, t, trials, seed)?;
            json!({
                "name": "mean_width_nuclear",
                "inputs": { "dims": dims, "t": t, "trials": trials, "seed": seed },
                "value": mc.mean,
                "intermediates": { "stderr": mc.stderr, "analytic_bound": 2.0 * t * expected_opnorm_bound(&dims) },
            })
        }
    };
    print_json(&report)
}

fn run_experiment_cmd(config: &Path, out: Option<PathBuf>) -> anyhow::Result<ExitCode> {
    let text = std::fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
    let cfg: ExperimentConfig = serde_json::from_str(&text).context("parsing experiment config")?;
    let out = out.or_else(|| cfg.output.clone().map(PathBuf::from)).context("no output path: pass --out or set output")?;
    let rows = run_experiment(&cfg)?;
    emit_csv(&rows, &out)?;
    let all_converged = rows.iter().all(|r| r.converged);
    print_json(&json!({
        "rows": rows.len(),
        "all_converged": all_converged,
        "output": out.display().to_string(),
        "summary": summarize(&rows),
    }))?;
    Ok(if all_converged { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Hosvd { tensor } => {
            let x = io::load(&tensor).with_context(|| format!("reading {}", tensor.display()))?;
            let h = hosvd(&x);
            print_json(&json!({
                "dims": x.dims(),
                "frobenius": x.frobenius(),
                "mode_spectra": h.mode_spectra,
                "residuals": h.residuals(&x),
            }))?;
        }
        Command::Norms { tensor, restarts, effort, seed } => {
            let x = io::load(&tensor).with_context(|| format!("reading {}", tensor.display()))?;
            let opts = AlsOptions { restarts, seed, ..Default::default() };
            print_json(&json!({
                "dims": x.dims(),
                "frobenius": x.frobenius(),
                "operator": operator_norm_with(&x, &opts),
                "restarts": restarts,
                "nuclear_avg": nuclear_avg(&x),
                "nuclear_bracket": nuclear_bracket_with(&x, effort, &opts),
            }))?;
        }
        Command::Recover(a) => return run_recover(a),
        Command::Bounds { which } => run_bounds(which)?,
        Command::Experiment { config, out } => return run_experiment_cmd(&config, out),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};

use magvlasov::bounds::{
    dobrushin_bound, efield_condition_check, j_series, loglinear_stability, magnetized_bound,
    magnetized_gain, sqrtlog_stability, TimeSeries, DEFAULT_SMALLNESS,
};
use magvlasov::ensemble::{csv_dimension, PhaseEnsemble};
use magvlasov::harness::{run_and_write, run_selftest, simulate_and_write, ExperimentConfig};
use magvlasov::transport::{
    kinetic_q_fixed_point, wasserstein_entropic, wasserstein_exact, KineticQ, PhaseMetric,
};
use magvlasov::Error;

#[derive(Parser)]
#[command(
    name = "magvlasov",
    version,
    about = "Stability experiments for magnetized Vlasov particle systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Advance one ensemble and write its trajectory.
    Simulate(RunArgs),
    /// Run a two-solution experiment and evaluate the configured bounds.
    Stability(RunArgs),
    /// Wasserstein distance between two ensemble files.
    Transport(TransportArgs),
    /// Evaluate bound formulas.
    Bounds(BoundsArgs),
    /// Run the built-in invariant checks.
    Selftest,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the one in the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TransportArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long, default_value_t = 1)]
    p: u32,
    /// Use entropic regularization with this epsilon instead of the exact solver.
    #[arg(long)]
    entropic: Option<f64>,
    #[arg(long, default_value_t = 20_000)]
    iters: usize,
    /// Write the optimal coupling as CSV (exact solver only).
    #[arg(long)]
    coupling_out: Option<PathBuf>,
}

#[derive(Args)]
#[command(group(ArgGroup::new("formula").required(true).args([
    "dobrushin", "magnetized", "gain", "kinetic_q", "loglinear", "sqrtlog", "series"
])))]
struct BoundsArgs {
    /// `e^{(1+2H)t} W1(0)`.
    #[arg(long)]
    dobrushin: bool,
    /// Magnetized bound for a uniform field.
    #[arg(long)]
    magnetized: bool,
    /// Prefactor of the magnetized bound.
    #[arg(long)]
    gain: bool,
    /// Kinetic fixed point from the moments `--a`, `--b`.
    #[arg(long)]
    kinetic_q: bool,
    /// Double-exponential W2 estimate at `--w2sq`, `--jint`.
    #[arg(long)]
    loglinear: bool,
    /// Square-root-log W2 estimate at `--w2sq`, `--jint`.
    #[arg(long)]
    sqrtlog: bool,
    /// CSV with columns `t,a,rho2_sup`; prints `J` and its running integral.
    #[arg(long)]
    series: Option<PathBuf>,
    #[arg(long = "H", default_value_t = 0.0)]
    h: f64,
    #[arg(long, default_value_t = 0.0)]
    t: f64,
    #[arg(long, default_value_t = 0.0)]
    w1: f64,
    #[arg(long, default_value_t = 0.0)]
    omega: f64,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 0.0)]
    a: f64,
    #[arg(long, default_value_t = 0.0)]
    b: f64,
    #[arg(long, default_value_t = 0.0)]
    w2sq: f64,
    #[arg(long, default_value_t = 0.0)]
    jint: f64,
    #[arg(long = "c-d", default_value_t = 1.0)]
    c_d: f64,
    #[arg(long = "C-d", default_value_t = 1.0)]
    c_upper: f64,
    #[arg(long, default_value_t = DEFAULT_SMALLNESS)]
    c0: f64,
    #[arg(long, default_value_t = 0.0)]
    bsup: f64,
    #[arg(long, default_value_t = 0.0)]
    bhol: f64,
}

enum Outcome {
    Pass,
    Fail,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> magvlasov::Result<Outcome> {
    match command {
        Command::Simulate(args) => {
            let cfg = ExperimentConfig::load(&args.config)?;
            let path = simulate_and_write(&cfg, args.out.as_deref())?;
            println!("wrote {}", path.display());
            Ok(Outcome::Pass)
        }
        Command::Stability(args) => {
            let cfg = ExperimentConfig::load(&args.config)?;
            let summary = run_and_write(&cfg, args.out.as_deref())?;
            for line in &summary.lines {
                println!("{line}");
            }
            println!("artifacts in {}", summary.output_dir.display());
            Ok(if summary.passed {
                Outcome::Pass
            } else {
                Outcome::Fail
            })
        }
        Command::Transport(args) => transport(&args),
        Command::Bounds(args) => bounds(&args),
        Command::Selftest => {
            let results = run_selftest();
            for r in &results {
                println!(
                    "{} {}: {}",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.name,
                    r.detail
                );
            }
            Ok(if results.iter().all(|r| r.passed) {
                Outcome::Pass
            } else {
                Outcome::Fail
            })
        }
    }
}

fn transport(args: &TransportArgs) -> magvlasov::Result<Outcome> {
    let metric = PhaseMetric::from_order(args.p).map_err(|e| Error::Config(e.to_string()))?;
    let (da, db) = (csv_dimension(&args.a)?, csv_dimension(&args.b)?);
    if da != db {
        return Err(Error::Config(format!(
            "ensembles live in different dimensions ({da} and {db})"
        )));
    }
    match da {
        2 => transport_in::<2>(args, metric),
        3 => transport_in::<3>(args, metric),
        d => Err(Error::Config(format!("unsupported dimension {d}"))),
    }
}

fn transport_in<const D: usize>(
    args: &TransportArgs,
    metric: PhaseMetric,
) -> magvlasov::Result<Outcome> {
    let a = PhaseEnsemble::<D>::load(&args.a)?;
    let b = PhaseEnsemble::<D>::load(&args.b)?;
    match args.entropic {
        Some(eps) => {
            let r = wasserstein_entropic(&a, &b, metric, eps, args.iters)?;
            println!("{}", r.distance);
            eprintln!(
                "entropic estimate: epsilon = {}, iterations = {}, converged = {}",
                r.epsilon, r.iterations, r.converged
            );
            if !r.converged {
                eprintln!(
                    "warning: marginals did not converge (error {:e})",
                    r.marginal_error
                );
            }
        }
        None => {
            let r = wasserstein_exact(&a, &b, metric)?;
            println!("{}", r.distance);
            if let Some(path) = &args.coupling_out {
                write_file(path, |out| r.coupling.write_csv(out))?;
            }
        }
    }
    Ok(Outcome::Pass)
}

fn write_file(
    path: &Path,
    f: impl FnOnce(&mut std::fs::File) -> magvlasov::Result<()>,
) -> magvlasov::Result<()> {
    let mut file = std::fs::File::create(path)?;
    f(&mut file)
}

fn bounds(args: &BoundsArgs) -> magvlasov::Result<Outcome> {
    let cfg_err = |e: Error| Error::Config(e.to_string());
    if args.dobrushin {
        println!("{}", dobrushin_bound(args.h, args.t, args.w1));
    } else if args.magnetized {
        println!(
            "{}",
            magnetized_bound(args.d, args.h, args.omega, args.t, args.w1).map_err(cfg_err)?
        );
    } else if args.gain {
        println!(
            "{}",
            magnetized_gain(args.d, args.omega, args.t).map_err(cfg_err)?
        );
    } else if args.kinetic_q {
        match kinetic_q_fixed_point(args.a, args.b).map_err(cfg_err)? {
            KineticQ::Root(q) => println!("{q}"),
            KineticQ::OutsideRegime { endpoint_value } => {
                println!("outside regime (g at the right end = {endpoint_value})");
                return Ok(Outcome::Fail);
            }
        }
    } else if args.loglinear {
        let c = loglinear_stability(args.w2sq, args.jint, args.c_d).map_err(cfg_err)?;
        println!("admissible = {}", c.admissible);
        println!("rhs = {}", c.rhs(args.jint));
        return Ok(if c.admissible {
            Outcome::Pass
        } else {
            Outcome::Fail
        });
    } else if args.sqrtlog {
        let c = sqrtlog_stability(args.w2sq, args.jint, args.c_upper, args.c0).map_err(cfg_err)?;
        println!("admissible = {}", c.admissible);
        println!("rhs = {}", c.rhs(args.jint));
        return Ok(if c.admissible {
            Outcome::Pass
        } else {
            Outcome::Fail
        });
    } else if let Some(path) = &args.series {
        let (a, rho2) = read_series(path)?;
        let verdict = efield_condition_check(&a);
        let j = j_series(&a, &rho2, args.bsup, args.bhol).map_err(cfg_err)?;
        println!("t,j,j_integral");
        for k in 0..j.j.len() {
            println!("{},{},{}", j.j.times()[k], j.j.values()[k], j.integral[k]);
        }
        eprintln!(
            "integral of a = {} ({})",
            verdict.integral,
            if verdict.passed {
                "finite"
            } else {
                "not finite"
            }
        );
        return Ok(if verdict.passed {
            Outcome::Pass
        } else {
            Outcome::Fail
        });
    }
    Ok(Outcome::Pass)
}

fn read_series(path: &Path) -> magvlasov::Result<(TimeSeries, TimeSeries)> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("{} has no column {name:?}", path.display())))
    };
    let (ct, ca, cr) = (col("t")?, col("a")?, col("rho2_sup")?);
    let (mut t, mut a, mut r) = (Vec::new(), Vec::new(), Vec::new());
    for row in reader.records() {
        let row = row?;
        let num = |k: usize| {
            row[k]
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("bad number {:?}: {e}", &row[k])))
        };
        t.push(num(ct)?);
        a.push(num(ca)?);
        r.push(num(cr)?);
    }
    let cfg_err = |e: Error| Error::Config(e.to_string());
    Ok((
        TimeSeries::new(t.clone(), a).map_err(cfg_err)?,
        TimeSeries::new(t, r).map_err(cfg_err)?,
    ))
}

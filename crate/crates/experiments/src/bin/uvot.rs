use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use uvot_core::io::{read_field, write_csv, write_field};
use uvot_core::lift::lift_lorentz;
use uvot_core::oracles::{TwoDeltaInstance, Variant};
use uvot_core::sdmm::scale_lambda;
use uvot_core::{solve, LiftKind, PoissonPlan, Power, SolverConfig, TransportProblem};
use uvot_experiments::fwi_run::{run_fwi_demo, FwiDemoFile};
use uvot_experiments::output::write_solution;
use uvot_experiments::seismo::{load_seismogram, save_seismogram_csv, seismo_transport, SeismogramSpec};
use uvot_experiments::shift::{shift_scan, sine_pair_scan, ShiftMisfit, ShiftScanSpec};
use uvot_experiments::synth::{normalize, SynthSpec};

#[derive(Parser)]
#[command(name = "uvot", version, about = "Unbalanced L1 optimal transport between vector-valued measures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a transport problem between two field files.
    Solve(SolveArgs),
    /// Solve (-Δ + c) u = rhs with Neumann boundary conditions.
    Poisson {
        #[arg(long)]
        rhs: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        shift: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Closed-form cost between two Dirac masses, printed as JSON.
    Oracle(OracleArgs),
    /// Misfit between a pulse and its shifted copy.
    ShiftScan(ShiftArgs),
    /// Scalar T11 between one sine period and its delayed copy.
    SineScan {
        #[arg(long, default_value_t = 10.0)]
        lambda: f64,
        #[arg(long, default_value_t = 0.02)]
        h: f64,
        #[arg(long, value_delimiter = ',', default_value = "6.2831853071795862,7,8,9,10")]
        shifts: Vec<f64>,
        #[arg(long, default_value_t = 1e-4)]
        eps: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Transport between two lifted seismograms.
    Seismo(SeismoArgs),
    /// Lift a two-component signal into a Lorentz-cone field.
    Lift {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "pauli")]
        lift: LiftKind,
        #[arg(long)]
        out: PathBuf,
    },
    /// Two-layer inversion configured by a JSON file.
    FwiDemo {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// λ after rescaling lengths by `length` and masses by `mass`.
    ScaleLambda {
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        length: f64,
        #[arg(long, default_value_t = 1.0)]
        mass: f64,
        #[arg(long, default_value_t = 1)]
        q: u8,
    },
    /// Synthetic seismograms of two layered models.
    Synth {
        #[arg(long, default_value_t = 6)]
        offset: usize,
        #[arg(long, default_value_t = 300.0)]
        contrast: f64,
        /// Divide both records by their common peak amplitude.
        #[arg(long)]
        normalize: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 1e-4)]
    eps: f64,
    #[arg(long, default_value_t = 20_000)]
    max_iter: usize,
    #[arg(long, default_value_t = 10)]
    check_every: usize,
    /// Fixed step size; the default picks one from the data.
    #[arg(long)]
    tau: Option<f64>,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            tau: self.tau.unwrap_or(SolverConfig::default().tau),
            eps: self.eps,
            max_iter: self.max_iter,
            check_every: self.check_every,
            auto_tau: self.tau.is_none(),
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    mu: PathBuf,
    #[arg(long)]
    nu: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 1)]
    p: u8,
    #[arg(long, default_value_t = 1)]
    q: u8,
    /// Balanced transport; λ, p and q are ignored.
    #[arg(long)]
    balanced: bool,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    variant: Variant,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    m1: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    m2: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,0")]
    x1: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x2: Vec<f64>,
    #[arg(long)]
    lambda: f64,
}

#[derive(Args)]
struct ShiftArgs {
    /// `l2`, `kr`, or `tPQ` such as `t11`, `t12`, `t22`.
    #[arg(long)]
    misfit: String,
    /// One curve per value; ignored by `l2`.
    #[arg(long, value_delimiter = ',', default_value = "10")]
    lambda: Vec<f64>,
    #[arg(long, default_value_t = 4.0 / 3.0)]
    alpha: f64,
    #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
    t_min: f64,
    #[arg(long, default_value_t = 10.0)]
    t_max: f64,
    #[arg(long, default_value_t = 2048)]
    samples: usize,
    #[arg(long, default_value_t = -6.0, allow_hyphen_values = true)]
    t0_min: f64,
    #[arg(long, default_value_t = 6.0)]
    t0_max: f64,
    #[arg(long, default_value_t = 25)]
    t0_count: usize,
    #[arg(long, default_value = "pauli")]
    lift: LiftKind,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SeismoArgs {
    #[arg(long)]
    mu: PathBuf,
    #[arg(long)]
    nu: PathBuf,
    #[arg(long, default_value = "pauli")]
    lift: LiftKind,
    /// λ as a multiple of the domain side ℓ = N_r - 1; repeat for a sweep.
    #[arg(long, value_delimiter = ',', default_value = "0.01")]
    lambda: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    p: u8,
    #[arg(long, default_value_t = 2)]
    q: u8,
    /// Recording time in s (metadata).
    #[arg(long, default_value_t = 0.0)]
    duration: f64,
    /// Length of the receiver line in m (metadata).
    #[arg(long, default_value_t = 0.0)]
    extent: f64,
    #[arg(long, default_value_t = 2000.0)]
    mean_velocity: f64,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: PathBuf,
}

fn power(v: u8) -> Result<Power> {
    Ok(Power::try_from(v)?)
}

fn point(v: &[f64], name: &str) -> Result<[f64; 2]> {
    match v {
        [x, y] => Ok([*x, *y]),
        [x] => Ok([*x, 0.0]),
        _ => bail!("--{name} takes one or two coordinates"),
    }
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn run_solve(a: &SolveArgs) -> Result<()> {
    let mu = read_field(&a.mu).with_context(|| format!("reading {}", a.mu.display()))?;
    let nu = read_field(&a.nu).with_context(|| format!("reading {}", a.nu.display()))?;
    let problem = if a.balanced {
        TransportProblem::balanced(mu, nu)?
    } else {
        TransportProblem::new(mu, nu, a.lambda, power(a.p)?, power(a.q)?)?
    };
    let r = solve(&problem, &a.solver.config())?;
    print_json(&write_solution(&a.out, &r)?)
}

fn run_oracle(a: &OracleArgs) -> Result<()> {
    let inst = TwoDeltaInstance {
        x1: point(&a.x1, "x1")?,
        x2: point(&a.x2, "x2")?,
        m1: a.m1.clone(),
        m2: a.m2.clone(),
        lambda: a.lambda,
        variant: a.variant,
    };
    let v = inst.evaluate()?;
    print_json(&serde_json::json!({
        "cost": v.cost,
        "branch": v.branch,
        "aux": { "a": v.a, "b": v.b, "distance": inst.distance() },
    }))
}

fn run_shift(a: &ShiftArgs) -> Result<()> {
    let spec = ShiftScanSpec {
        alpha: a.alpha,
        t_min: a.t_min,
        t_max: a.t_max,
        samples: a.samples,
        t0_min: a.t0_min,
        t0_max: a.t0_max,
        t0_count: a.t0_count,
        lift: a.lift,
        solver: a.solver.config(),
    };
    let kinds = if a.misfit.eq_ignore_ascii_case("l2") {
        vec![ShiftMisfit::L2]
    } else {
        a.lambda.iter().map(|&l| ShiftMisfit::parse(&a.misfit, l)).collect::<Result<_, _>>()?
    };
    let mut rows = Vec::new();
    for (k, kind) in kinds.iter().enumerate() {
        let lambda = match kind {
            ShiftMisfit::L2 => 0.0,
            ShiftMisfit::KrScalar { lambda } | ShiftMisfit::Transport { lambda, .. } => *lambda,
        };
        for p in shift_scan(&spec, kind)? {
            rows.push(vec![k as f64, lambda, p.t0, p.value, p.iterations as f64, f64::from(u8::from(p.converged))]);
        }
        eprintln!("{}: done", kind.label());
    }
    write_csv(&a.out, &["curve", "lambda", "t0", "misfit", "iterations", "converged"], rows)?;
    Ok(())
}

fn run_seismo(a: &SeismoArgs) -> Result<()> {
    let mu = load_seismogram(&a.mu).with_context(|| format!("reading {}", a.mu.display()))?;
    let nu = load_seismogram(&a.nu).with_context(|| format!("reading {}", a.nu.display()))?;
    let g = mu.grid();
    let spec = SeismogramSpec {
        receivers: g.nx(),
        samples: g.ny(),
        duration: a.duration,
        extent: a.extent,
        mean_velocity: a.mean_velocity,
        lift: a.lift,
    };
    let (p, q) = (power(a.p)?, power(a.q)?);
    let mut summaries = Vec::new();
    for (k, &factor) in a.lambda.iter().enumerate() {
        let r = seismo_transport(&spec, &mu, &nu, factor, p, q, &a.solver.config())?;
        let dir = if a.lambda.len() == 1 { a.out.clone() } else { a.out.join(format!("lambda_{k}")) };
        r.write(&dir, &spec)?;
        summaries.push(r.summary());
    }
    print_json(&summaries)
}

fn run_lift(input: &Path, lift: LiftKind, out: &Path) -> Result<()> {
    let s = load_seismogram(input).with_context(|| format!("reading {}", input.display()))?;
    write_field(out, &lift_lorentz(&s, lift))?;
    Ok(())
}

fn run_fwi(config: Option<&Path>, out: &Path) -> Result<()> {
    let file = match config {
        Some(p) => FwiDemoFile::load(p).with_context(|| format!("reading {}", p.display()))?,
        None => FwiDemoFile::default(),
    };
    let h = run_fwi_demo(&file, out)?;
    let last = *h.misfits.last().expect("history is never empty");
    print_json(&serde_json::json!({
        "iterations": h.misfits.len() - 1,
        "initial_misfit": h.misfits[0],
        "final_misfit": last,
        "ratio": last / h.misfits[0],
        "evaluations": h.evaluations,
        "line_search_failed": h.line_search_failed,
    }))
}

fn run_synth(offset: usize, contrast: f64, norm: bool, out: &Path) -> Result<()> {
    let spec = SynthSpec::default();
    let (mut mu, mut nu) = spec.pair(offset, contrast)?;
    if norm {
        (mu, nu) = normalize(&mu, &nu);
    }
    std::fs::create_dir_all(out)?;
    for (name, s) in [("mu", &mu), ("nu", &nu)] {
        write_field(&out.join(format!("{name}.rawh")), &s.to_field())?;
        save_seismogram_csv(&out.join(format!("{name}.csv")), s)?;
    }
    print_json(&serde_json::json!({
        "receivers": spec.receivers,
        "samples": spec.samples,
        "duration": spec.duration(),
        "extent": spec.extent(),
    }))
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Solve(a) => run_solve(&a),
        Command::Poisson { rhs, shift, out } => {
            let f = read_field(&rhs).with_context(|| format!("reading {}", rhs.display()))?;
            let plan = PoissonPlan::new(*f.grid(), shift)?;
            write_field(&out, &plan.solve(&f)?)?;
            Ok(())
        }
        Command::Oracle(a) => run_oracle(&a),
        Command::ShiftScan(a) => run_shift(&a),
        Command::SineScan {
            lambda,
            h,
            shifts,
            eps,
            out,
        } => {
            let solver = SolverConfig {
                eps,
                auto_tau: true,
                ..SolverConfig::default()
            };
            let rows = sine_pair_scan(&shifts, lambda, h, &solver)?
                .into_iter()
                .map(|p| vec![p.t0, p.value, p.iterations as f64, f64::from(u8::from(p.converged))]);
            write_csv(&out, &["shift", "cost", "iterations", "converged"], rows)?;
            Ok(())
        }
        Command::Seismo(a) => run_seismo(&a),
        Command::Lift { input, lift, out } => run_lift(&input, lift, &out),
        Command::FwiDemo { config, out } => run_fwi(config.as_deref(), &out),
        Command::ScaleLambda { lambda, length, mass, q } => {
            let v = scale_lambda(lambda, length, mass, power(q)?)?;
            print_json(&serde_json::json!({ "lambda": v }))
        }
        Command::Synth {
            offset,
            contrast,
            normalize,
            out,
        } => run_synth(offset, contrast, normalize, &out),
    }
}

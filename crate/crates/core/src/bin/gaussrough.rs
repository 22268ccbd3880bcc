use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gaussrough::error::Error;
use gaussrough::fourier::CoefficientRule;
use gaussrough::harness::config::{parse_model_spec, CoeffsSection, ExperimentConfig, ExperimentKind};
use gaussrough::harness::{run, Report};
use gaussrough::roughpath::PairSet;
use gaussrough::she::Bc;

#[derive(Parser)]
#[command(name = "gaussrough", version, about = "Gaussian rough path toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Default)]
struct Common {
    /// TOML config with [model] [coeffs] [grid] [mc] [experiment] sections
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (.json or .csv); the sibling file gets the other format
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output directory; files are named after the subcommand
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Model spec such as `fbm:0.3` or `bifbm:0.6,0.7`
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    grid_n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Default)]
struct McArgs {
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    level: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    /// Component count of the sampled field
    #[arg(long)]
    dim: Option<usize>,
    /// Use every grid pair instead of dyadic lags in distances
    #[arg(long)]
    all_pairs: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Mixed (gamma,rho)-variation of a covariance over a square or dyadic squares
    Variation {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        rho: Option<f64>,
        /// exact, lower or greedy
        #[arg(long)]
        mode: Option<String>,
        /// Square `lo,hi` on both axes
        #[arg(long, value_parser = parse_pair)]
        rect: Option<[f64; 2]>,
        /// Number of dyadic squares (side halves each time)
        #[arg(long)]
        sides: Option<usize>,
    },
    /// Classify a covariance into Part A / Part B with JSON verdicts
    Check {
        #[command(flatten)]
        common: Common,
        /// Also run the conditional-variance chain on [lo, lo + horizon]
        #[arg(long)]
        horizon: Option<f64>,
    },
    /// Convexity, total-variation and Hölder analysis of a coefficient sequence
    CheckSeries {
        #[command(flatten)]
        common: Common,
        /// Shortcut for the power rule a_k = k^(-exponent)
        #[arg(long)]
        exponent: Option<f64>,
        #[arg(long)]
        k_max: Option<u64>,
    },
    /// Exact Cholesky samples on a uniform grid
    Sample {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Signatures and Hölder norms of the paths in a sample CSV
    Lift {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        mc: McArgs,
        /// Sample CSV with columns path, component, t, value
        #[arg(long)]
        input: Option<String>,
    },
    /// Stochastic heat equation rate experiments
    She {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        mc: McArgs,
        #[arg(long)]
        alpha: Option<f64>,
        /// dirichlet, periodic or neumann
        #[arg(long)]
        bc: Option<String>,
        #[arg(long)]
        modes: Option<usize>,
        /// galerkin, hyperviscosity, time or moment
        #[arg(long)]
        experiment: Option<String>,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        min_rate: Option<f64>,
    },
    /// Scaling slopes and random Fourier series rates
    Rates {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        mc: McArgs,
        /// scaling, rfs-truncation or rfs-moment
        #[arg(long)]
        probe: Option<String>,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        modes: Option<usize>,
        #[arg(long)]
        min_rate: Option<f64>,
    },
    /// Cameron-Martin embedding inequality on random elements
    Embedding {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
    },
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let v: Vec<f64> =
        s.split(',').map(|x| x.trim().parse::<f64>().map_err(|e| e.to_string())).collect::<Result<_, _>>()?;
    match v[..] {
        [a, b] => Ok([a, b]),
        _ => Err(format!("expected lo,hi, got '{s}'")),
    }
}

fn parse_bc(s: &str) -> Result<Bc, Error> {
    match s {
        "dirichlet" => Ok(Bc::Dirichlet),
        "periodic" => Ok(Bc::Periodic { lambda: 1.0, color: 0.0 }),
        "neumann" => Ok(Bc::Neumann { shift: 1.0 }),
        other => Err(Error::Config(format!("unknown boundary condition '{other}'"))),
    }
}

fn base(common: &Common, kind: ExperimentKind) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(name) = cfg.experiment.name {
        if name != kind {
            return Err(Error::Config(format!("config is for '{}', not '{}'", name.name(), kind.name())));
        }
    }
    cfg.experiment.name = Some(kind);
    if let Some(spec) = &common.model {
        cfg.model = Some(parse_model_spec(spec)?);
    }
    if let Some(n) = common.grid_n {
        cfg.grid.n = n;
    }
    if let Some(s) = common.seed {
        cfg.mc.seed = s;
    }
    Ok(cfg)
}

fn apply_mc(cfg: &mut ExperimentConfig, mc: &McArgs) {
    let m = &mut cfg.mc;
    if let Some(v) = mc.paths {
        m.paths = v;
    }
    if let Some(v) = mc.level {
        m.level = v;
    }
    if let Some(v) = mc.beta {
        m.beta = v;
    }
    if let Some(v) = mc.q {
        m.q = v;
    }
    if let Some(v) = mc.dim {
        cfg.grid.d = v;
    }
    if mc.all_pairs {
        m.pairs = PairSet::All;
    }
}

fn resolve(cmd: Cmd) -> Result<(ExperimentConfig, Common), Error> {
    Ok(match cmd {
        Cmd::Variation { common, gamma, rho, mode, rect, sides } => {
            let mut c = base(&common, ExperimentKind::Variation)?;
            let e = &mut c.experiment;
            e.gamma = gamma.or(e.gamma);
            e.rho = rho.or(e.rho);
            e.mode = mode.or(e.mode.take());
            e.rect = rect.or(e.rect);
            e.sides = sides.or(e.sides);
            (c, common)
        }
        Cmd::Check { common, horizon } => {
            let mut c = base(&common, ExperimentKind::Check)?;
            c.experiment.horizon = horizon.or(c.experiment.horizon);
            (c, common)
        }
        Cmd::CheckSeries { common, exponent, k_max } => {
            let mut c = base(&common, ExperimentKind::CheckSeries)?;
            if let Some(e) = exponent {
                c.coeffs = Some(CoeffsSection {
                    sequence: CoefficientRule::power(e),
                    k_max: 1_000_000,
                    a0: 0.0,
                    rho: None,
                    tv_case: None,
                    tv_sequence: None,
                });
            }
            if let (Some(k), Some(s)) = (k_max, c.coeffs.as_mut()) {
                s.k_max = k;
            }
            (c, common)
        }
        Cmd::Sample { common, mc } => {
            let mut c = base(&common, ExperimentKind::Sample)?;
            apply_mc(&mut c, &mc);
            (c, common)
        }
        Cmd::Lift { common, mc, input } => {
            let mut c = base(&common, ExperimentKind::Lift)?;
            apply_mc(&mut c, &mc);
            c.experiment.input = input.or(c.experiment.input.take());
            (c, common)
        }
        Cmd::She { common, mc, alpha, bc, modes, experiment, theta, min_rate } => {
            let mut c = base(&common, ExperimentKind::She)?;
            apply_mc(&mut c, &mc);
            let e = &mut c.experiment;
            e.alpha = alpha.or(e.alpha);
            if let Some(b) = bc {
                e.bc = Some(parse_bc(&b)?);
            }
            e.modes = modes.or(e.modes);
            e.probe = experiment.or(e.probe.take());
            e.theta = theta.or(e.theta);
            e.min_rate = min_rate.or(e.min_rate);
            (c, common)
        }
        Cmd::Rates { common, mc, probe, rho, modes, min_rate } => {
            let mut c = base(&common, ExperimentKind::Rates)?;
            apply_mc(&mut c, &mc);
            let e = &mut c.experiment;
            e.probe = probe.or(e.probe.take());
            e.rho = rho.or(e.rho);
            e.modes = modes.or(e.modes);
            e.min_rate = min_rate.or(e.min_rate);
            (c, common)
        }
        Cmd::Embedding { common, rho, samples } => {
            let mut c = base(&common, ExperimentKind::Embedding)?;
            c.experiment.rho = rho.or(c.experiment.rho);
            c.experiment.samples = samples.or(c.experiment.samples);
            (c, common)
        }
    })
}

fn write(report: &Report, cfg: &ExperimentConfig, common: &Common) -> Result<(), Error> {
    let out = common.out.clone().or_else(|| cfg.experiment.out.as_ref().map(PathBuf::from));
    let out_dir = common.out_dir.clone().or_else(|| cfg.experiment.out_dir.as_ref().map(PathBuf::from));
    if let Some(p) = out {
        let dir = p.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
        let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or(report.experiment.as_str());
        report.write_to(dir, stem)?;
    } else if let Some(d) = out_dir {
        report.write_to(&d, &report.experiment)?;
    } else {
        // a closed pipe (e.g. `| head`) is not an error worth reporting
        let _ = writeln!(std::io::stdout().lock(), "{}", report.to_json()?);
    }
    Ok(())
}

/// Configuration and usage problems exit with 2, numerical failures with 1.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::InvalidParameter(_)
        | Error::BadExponent(_)
        | Error::UnknownKind(_)
        | Error::Io(_)
        | Error::TooLargeForExact { .. } => 2,
        _ => 1,
    }
}

fn init_threads() {
    if let Some(n) = std::env::var("GAUSSROUGH_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // a second initialisation only fails if something already built the pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    init_threads();
    let result = resolve(cli.cmd).and_then(|(cfg, common)| {
        let report = run(&cfg)?;
        write(&report, &cfg, &common)?;
        Ok(report.pass)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("check failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

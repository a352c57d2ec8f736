//! Command-line frontend: every subsystem exposed as a subcommand with
//! reproducible, file-based outputs and a run manifest.
//!
//! Exit codes: 0 success (including scientific outcomes like detected
//! blowup), 2 usage or domain errors, 3 numerical-failure outcomes (step
//! collapse), with the partial manifest still written.

pub mod config;
pub mod manifest;

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::admissibility;
use crate::exponents::{self, ModelParams, RegimeLabel};
use crate::field::Grid;
use crate::norms::{self, ProbeConfig, ProbeStatement};
use crate::picard::{run_picard, PicardConfig};
use crate::propagator::{linear_evolve_sampled, OdeOptions};
use crate::simulator::{
    evolve, make_initial_data, DataKind, EquationKind, Nonlinearity, SimConfig, SimOutcome,
    SimTrace,
};
use crate::transforms;
use config::Config;
use manifest::{write_output, RunManifest};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Usage or domain error: exit code 2.
    #[error("{0}")]
    Usage(String),
    /// Numerical-failure outcome: exit code 3.
    #[error("{0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

#[derive(Parser, Debug)]
#[command(
    name = "tricomi-lab",
    version,
    about = "Numerical laboratory for 2-D semilinear waves with scale-invariant damping and generalized Tricomi reformulations"
)]
pub struct Cli {
    /// Worker threads (wall time only; results are thread-count independent).
    /// Falls back to TRICOMI_LAB_THREADS, then to all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Critical/conformal exponents and regime classification for one
    /// parameter tuple.
    Exponents(ExponentsArgs),
    /// Phase-diagram table over a (μ,p) or (m,p) grid.
    Phase(PhaseArgs),
    /// Integrate the semilinear (or damped) equation from a config file.
    Simulate(FileRunArgs),
    /// Run a Picard iteration scheme from a config file.
    Picard(FileRunArgs),
    /// Linear sup-norm decay measurement and power-law fit.
    Decay(DecayArgs),
    /// Empirical LHS/RHS ratio probe for the weighted estimates.
    Probe(ProbeArgs),
    /// Parameter-map round trips and identity checks between the two forms.
    TransformCheck(TransformArgs),
    /// Strichartz index selection and constraint check at one (m,p).
    Admissible(AdmissibleArgs),
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct ExponentsArgs {
    #[arg(long, default_value_t = 2)]
    pub n: u32,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub m: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Output file (stdout too).
    #[arg(long, default_value = "exponents_report")]
    pub out: PathBuf,
}

#[derive(Copy, Clone, Debug, ValueEnum, PartialEq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct PhaseArgs {
    #[arg(long, value_enum)]
    pub plane: Plane,
    /// Grid as COLSxROWS, e.g. 50x50.
    #[arg(long, default_value = "50x50")]
    pub grid: String,
    #[arg(long)]
    pub x_min: Option<f64>,
    #[arg(long)]
    pub x_max: Option<f64>,
    #[arg(long)]
    pub y_min: Option<f64>,
    #[arg(long)]
    pub y_max: Option<f64>,
    #[arg(long, default_value = "phase.csv")]
    pub out: PathBuf,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum Plane {
    /// x = μ, y = p (damped form).
    #[value(name = "mu-p")]
    MuP,
    /// x = m, y = p (Tricomi mixed-norm rectangle).
    #[value(name = "m-p")]
    MP,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct FileRunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct DecayArgs {
    #[arg(long)]
    pub m: f64,
    #[arg(long, default_value_t = 256)]
    pub grid_n: usize,
    #[arg(long)]
    pub box_l: f64,
    /// Gaussian width of the (radial) datum.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 2.0)]
    pub t_min: f64,
    #[arg(long, default_value_t = 40.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 80)]
    pub samples: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub rtol: f64,
    #[arg(long, default_value = "decay")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct ProbeArgs {
    #[arg(long, value_enum)]
    pub statement: ProbeKind,
    #[arg(long)]
    pub m: f64,
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    pub p: f64,
    #[arg(long)]
    pub q: f64,
    #[arg(long, default_value_t = 2.0)]
    pub nu: f64,
    #[arg(long, default_value_t = 2.0)]
    pub q_tilde: f64,
    #[arg(long, default_value_t = 2.0)]
    pub nu_tilde: f64,
    #[arg(long, default_value_t = 0.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.0)]
    pub gamma2: f64,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long, default_value_t = 128)]
    pub grid_n: usize,
    #[arg(long)]
    pub box_l: f64,
    #[arg(long, default_value_t = 10.0)]
    pub t_probe: f64,
    #[arg(long, default_value_t = 80)]
    pub samples: usize,
    #[arg(long, default_value_t = 20)]
    pub family: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = "probe")]
    pub out_dir: PathBuf,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum ProbeKind {
    /// Homogeneous weighted L^q estimate.
    HomWeighted,
    /// Inhomogeneous weighted L^q estimate (cone-supported forcing).
    InhomWeighted,
    /// Homogeneous mixed-norm estimate.
    HomMixed,
    /// Inhomogeneous mixed-norm estimate.
    InhomMixed,
}

impl From<ProbeKind> for ProbeStatement {
    fn from(k: ProbeKind) -> ProbeStatement {
        match k {
            ProbeKind::HomWeighted => ProbeStatement::HomogeneousWeighted,
            ProbeKind::InhomWeighted => ProbeStatement::InhomogeneousWeighted,
            ProbeKind::HomMixed => ProbeStatement::HomogeneousMixed,
            ProbeKind::InhomMixed => ProbeStatement::InhomogeneousMixed,
        }
    }
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct TransformArgs {
    #[arg(long)]
    pub mu: f64,
    #[arg(long)]
    pub p: f64,
    #[arg(long, default_value = "transform_check.json")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct AdmissibleArgs {
    #[arg(long)]
    pub m: Option<f64>,
    /// Damped-side μ (mapped to m = 2(2-μ)/(μ-1)).
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub p: f64,
    /// Check this explicit q instead of selecting one.
    #[arg(long)]
    pub q: Option<f64>,
    /// Check this explicit ν instead of selecting one.
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long, default_value = "admissible.json")]
    pub out: PathBuf,
}

/// Entry point used by the binary; returns the process exit code.
pub fn run(cli: Cli, command_line: Vec<String>) -> i32 {
    let threads = cli
        .threads
        .or_else(|| {
            std::env::var("TRICOMI_LAB_THREADS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(0);
    if threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match dispatch(cli.command, command_line) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command, command_line: Vec<String>) -> Result<(), CliError> {
    match command {
        Command::Exponents(args) => cmd_exponents(args, command_line),
        Command::Phase(args) => cmd_phase(args, command_line),
        Command::Simulate(args) => cmd_simulate(args, command_line),
        Command::Picard(args) => cmd_picard(args, command_line),
        Command::Decay(args) => cmd_decay(args, command_line),
        Command::Probe(args) => cmd_probe(args, command_line),
        Command::TransformCheck(args) => cmd_transform_check(args, command_line),
        Command::Admissible(args) => cmd_admissible(args, command_line),
    }
}

fn cmd_exponents(args: ExponentsArgs, command_line: Vec<String>) -> Result<(), CliError> {
    let mut report = serde_json::Map::new();
    let mut residuals = serde_json::Map::new();
    let put = |map: &mut serde_json::Map<String, serde_json::Value>, k: &str, v: f64| {
        map.insert(k.into(), serde_json::json!(v));
    };
    match (args.mu, args.m, args.alpha) {
        (Some(mu), None, None) => {
            let n = args.n;
            put(&mut report, "n", n as f64);
            put(&mut report, "mu", mu);
            let z = n as f64 + mu;
            let ps = exponents::strauss_exponent(z).map_err(usage)?;
            put(&mut report, "p_strauss", ps);
            put(&mut residuals, "strauss", exponents::strauss_residual(z, ps));
            put(
                &mut report,
                "p_fujita",
                exponents::fujita_exponent(n).map_err(usage)?,
            );
            let crit = exponents::p_crit_damped(n, mu).map_err(usage)?;
            put(&mut report, "p_crit", crit.value);
            report.insert(
                "p_crit_branch".into(),
                serde_json::json!(format!("{:?}", crit.branch)),
            );
            put(&mut report, "mu_bar", exponents::mu_bar(n).map_err(usage)?);
            if n == 2 {
                if let Ok(pc) = exponents::p_conf_damped(mu) {
                    put(&mut report, "p_conf", pc);
                }
            }
            let p = match args.p {
                Some(p) => p,
                None => {
                    return Err(CliError::Usage(
                        "--p is required with --mu (regime classification and the mu > 1 \
                         forcing exponent depend on it)"
                            .into(),
                    ))
                }
            };
            put(&mut report, "p", p);
            let params = ModelParams::damped(n, mu, p).map_err(usage)?;
            let full = exponents::ExponentReport::for_params(&params).map_err(usage)?;
            if let Some(q0) = full.q0 {
                put(&mut report, "q0", q0);
            }
            let regime = exponents::classify_regime(&params).map_err(usage)?;
            report.insert(
                "regime".into(),
                serde_json::json!(format!("{:?}", regime.label)),
            );
            if let Some(nu) = regime.nu_choice {
                put(&mut report, "nu_choice", nu);
            }
        }
        (None, Some(m), Some(alpha)) => {
            put(&mut report, "m", m);
            put(&mut report, "alpha", alpha);
            if m < 0.0 {
                return Err(CliError::Usage(format!("--m must be >= 0, got {m}")));
            }
            let crit = exponents::p_crit_tricomi(m, alpha).map_err(usage)?;
            put(&mut report, "p_crit", crit.value);
            report.insert(
                "p_crit_branch".into(),
                serde_json::json!(format!("{:?}", crit.branch)),
            );
            let p2 = exponents::p2_tricomi(m, alpha);
            put(
                &mut residuals,
                "p2_tricomi",
                (m + 1.0) * p2 * p2 - (3.0 + 2.0 * alpha) * p2 - (m + 2.0),
            );
            put(
                &mut report,
                "p_conf",
                exponents::p_conf_tricomi(m, alpha).map_err(usage)?,
            );
            let (q0, flag) = exponents::q0_endpoint(m, alpha).map_err(usage)?;
            put(&mut report, "q0", q0);
            report.insert("q0_hypothesis".into(), serde_json::json!(format!("{flag:?}")));
            if let Some(p) = args.p {
                put(&mut report, "p", p);
                let g = exponents::gamma_delta_ranges(m, alpha, p).map_err(usage)?;
                put(&mut report, "gamma_lo", g.gamma_lo);
                put(&mut report, "gamma_hi", g.gamma_hi);
                put(&mut report, "delta_hi", g.delta_hi);
                let params = ModelParams::tricomi(m, alpha, p).map_err(usage)?;
                let regime = exponents::classify_regime(&params).map_err(usage)?;
                report.insert(
                    "regime".into(),
                    serde_json::json!(format!("{:?}", regime.label)),
                );
            }
        }
        _ => {
            return Err(CliError::Usage(
                "exactly one of --mu or (--m and --alpha) must be given".into(),
            ))
        }
    }
    report.insert("residuals".into(), serde_json::Value::Object(residuals));
    let value = serde_json::Value::Object(report);

    let mut manifest = RunManifest::start(command_line, None, value.clone());
    let path = args.out.with_extension(match args.format {
        Format::Json => "json",
        Format::Csv => "csv",
    });
    let contents = match args.format {
        Format::Json => serde_json::to_string_pretty(&value).expect("serializable"),
        Format::Csv => {
            let obj = value.as_object().unwrap();
            let mut keys = Vec::new();
            let mut vals = Vec::new();
            for (k, v) in obj {
                if let Some(x) = v.as_f64() {
                    keys.push(k.clone());
                    vals.push(format!("{x}"));
                } else if let Some(s) = v.as_str() {
                    keys.push(k.clone());
                    vals.push(s.to_string());
                }
            }
            format!("{}\n{}\n", keys.join(","), vals.join(","))
        }
    };
    println!("{contents}");
    write_output(&mut manifest, &path, &contents)?;
    manifest.finish(&path.with_file_name(format!(
        "{}_manifest.json",
        path.file_stem().unwrap().to_string_lossy()
    )))?;
    Ok(())
}

fn parse_grid_spec(spec: &str) -> Result<(usize, usize), CliError> {
    let (a, b) = spec
        .split_once('x')
        .ok_or_else(|| CliError::Usage(format!("grid spec {spec:?} is not COLSxROWS")))?;
    let cols = a.parse().map_err(|e| CliError::Usage(format!("{e}")))?;
    let rows = b.parse().map_err(|e| CliError::Usage(format!("{e}")))?;
    Ok((cols, rows))
}

fn cmd_phase(args: PhaseArgs, command_line: Vec<String>) -> Result<(), CliError> {
    let (cols, rows) = parse_grid_spec(&args.grid)?;
    let (x_lo, x_hi, y_lo, y_hi) = match args.plane {
        Plane::MuP => (
            args.x_min.unwrap_or(0.0),
            args.x_max.unwrap_or(2.0),
            args.y_min.unwrap_or(1.0),
            args.y_max.unwrap_or(4.0),
        ),
        Plane::MP => (
            args.x_min.unwrap_or(0.0),
            args.x_max.unwrap_or(exponents::SQRT2_MINUS_1),
            args.y_min.unwrap_or(2.0),
            args.y_max.unwrap_or(2.45),
        ),
    };
    if !(x_hi > x_lo && y_hi > y_lo) {
        return Err(CliError::Usage(format!(
            "empty bounds: x [{x_lo}, {x_hi}], y [{y_lo}, {y_hi}]"
        )));
    }
    let mut csv = String::from("x,y,regime,nu_branch,p_crit,p_conf\n");
    for j in 0..rows {
        let y = y_lo + (y_hi - y_lo) * (j as f64 + 0.5) / rows as f64;
        for i in 0..cols {
            let x = x_lo + (x_hi - x_lo) * (i as f64 + 0.5) / cols as f64;
            match args.plane {
                Plane::MuP => {
                    let (mu, p) = (x, y);
                    let Ok(params) = ModelParams::damped(2, mu, p) else {
                        writeln!(csv, "{x},{y},Invalid,,,").unwrap();
                        continue;
                    };
                    let regime = exponents::classify_regime(&params).map_err(usage)?;
                    let crit = exponents::p_crit_damped(2, mu).map_err(usage)?;
                    let conf = exponents::p_conf_damped(mu)
                        .map(|v| format!("{v}"))
                        .unwrap_or_default();
                    let branch = match regime.nu_choice {
                        Some(nu) if regime.label == RegimeLabel::GlobalThm12 => {
                            if (nu - p).abs() < 1e-12 {
                                "nu=p"
                            } else {
                                "nu=p+1/3"
                            }
                        }
                        _ => "",
                    };
                    writeln!(
                        csv,
                        "{x},{y},{:?},{branch},{},{conf}",
                        regime.label, crit.value
                    )
                    .unwrap();
                }
                Plane::MP => {
                    let (m, p) = (x, y);
                    let alpha = m - p + 1.0;
                    let crit = exponents::p_crit_tricomi(m.max(1e-12), alpha)
                        .map(|c| format!("{}", c.value))
                        .unwrap_or_default();
                    let conf = exponents::p_conf_tricomi(m.max(0.0), alpha)
                        .map(|v| format!("{v}"))
                        .unwrap_or_default();
                    match admissibility::select_pair(m, p) {
                        Ok((pair, branch)) => {
                            writeln!(
                                csv,
                                "{x},{y},{},{branch:?},{crit},{conf}",
                                if pair.feasible { "Feasible" } else { "Infeasible" }
                            )
                            .unwrap();
                        }
                        Err(_) => writeln!(csv, "{x},{y},OutsideRectangle,,{crit},{conf}").unwrap(),
                    }
                }
            }
        }
    }
    let mut manifest = RunManifest::start(
        command_line,
        None,
        serde_json::json!({
            "plane": format!("{:?}", args.plane),
            "grid": args.grid,
            "bounds": [x_lo, x_hi, y_lo, y_hi],
        }),
    );
    write_output(&mut manifest, &args.out, &csv)?;
    manifest.finish(&args.out.with_file_name(format!(
        "{}_manifest.json",
        args.out.file_stem().unwrap().to_string_lossy()
    )))?;
    println!("wrote {} ({} cells)", args.out.display(), rows * cols);
    Ok(())
}

fn data_kind(name: &str) -> Result<DataKind, CliError> {
    match name {
        "gaussian" => Ok(DataKind::GaussianBump),
        "smooth_compact" => Ok(DataKind::SmoothCompactBump),
        "annular" => Ok(DataKind::AnnularBump),
        other => Err(CliError::Usage(format!(
            "unknown data kind {other:?} (expected gaussian | smooth_compact | annular)"
        ))),
    }
}

fn sim_config_from(cfg: &Config) -> Result<SimConfig, CliError> {
    let form = cfg.get("model", "form").unwrap_or("tricomi");
    let p = cfg.f64("model", "p").map_err(usage)?;
    let equation = match form {
        "tricomi" => EquationKind::Tricomi {
            m: cfg.f64("model", "m").map_err(usage)?,
            alpha: cfg.f64("model", "alpha").map_err(usage)?,
        },
        "damped" => EquationKind::Damped {
            mu: cfg.f64("model", "mu").map_err(usage)?,
        },
        other => {
            return Err(CliError::Usage(format!(
                "[model] form = {other:?}: expected tricomi | damped"
            )))
        }
    };
    let nonlinearity = match cfg.get("model", "nonlinearity").unwrap_or("abs_pow") {
        "abs_pow" => Nonlinearity::AbsPow,
        "defocusing" => Nonlinearity::Defocusing,
        "none" => Nonlinearity::None,
        other => {
            return Err(CliError::Usage(format!(
                "[model] nonlinearity = {other:?}: expected abs_pow | defocusing | none"
            )))
        }
    };
    let grid = Grid::new(
        cfg.usize("grid", "n").map_err(usage)?,
        cfg.f64("grid", "l").map_err(usage)?,
    )
    .map_err(usage)?;
    let mut config = SimConfig::new(equation, p, grid, cfg.f64("time", "t_max").map_err(usage)?);
    config.nonlinearity = nonlinearity;
    config.t0 = cfg.f64_or("time", "t0", 1.0).map_err(usage)?;
    config.rtol = cfg.f64_or("solver", "rtol", 1e-8).map_err(usage)?;
    config.atol = cfg.f64_or("solver", "atol", 1e-12).map_err(usage)?;
    config.cap_factor = cfg.f64_or("solver", "cap_factor", 0.7).map_err(usage)?;
    config.blowup_sup_threshold = cfg
        .f64_or("solver", "blowup_sup_threshold", 1e6)
        .map_err(usage)?;
    config.blowup_step_floor = cfg
        .f64_or("solver", "blowup_step_floor", 1e-10)
        .map_err(usage)?;
    config.monitor_stride = cfg.usize_or("solver", "monitor_stride", 5).map_err(usage)?;
    config.snapshot_times = cfg.f64_list("output", "snapshot_times").map_err(usage)?;
    config.validate().map_err(usage)?;
    Ok(config)
}

fn scalars_csv(trace: &SimTrace) -> String {
    let mut csv = String::from("t,sup,l2,h1_seminorm,lagrangian,q0,max_imag\n");
    for row in &trace.scalars {
        let lag = row.lagrangian.map(|v| format!("{v}")).unwrap_or_default();
        let q0 = row.q0.map(|v| format!("{v}")).unwrap_or_default();
        writeln!(
            csv,
            "{},{},{},{},{lag},{q0},{}",
            row.t, row.sup, row.l2, row.h1_seminorm, row.max_imag
        )
        .unwrap();
    }
    csv
}

/// Raw little-endian f64 snapshot container: for each snapshot time, the
/// fields u.re, u.im, du.re, du.im, each row-major N×N.
fn snapshots_bin(trace: &SimTrace) -> Vec<u8> {
    let mut buf = Vec::new();
    for (u, du) in &trace.snapshots {
        for field in [u, du] {
            for v in &field.values {
                buf.extend_from_slice(&v.re.to_le_bytes());
            }
            for v in &field.values {
                buf.extend_from_slice(&v.im.to_le_bytes());
            }
        }
    }
    buf
}

fn cmd_simulate(args: FileRunArgs, command_line: Vec<String>) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config)?;
    let cfg = Config::parse(&text).map_err(usage)?;
    let config = sim_config_from(&cfg)?;
    let seed = args
        .seed
        .unwrap_or(cfg.u64_or("data", "seed", 0).map_err(usage)?);
    let kind = data_kind(cfg.get("data", "kind").unwrap_or("smooth_compact"))?;
    let epsilon = cfg.f64_or("data", "epsilon", 1.0).map_err(usage)?;
    let save_snapshots = cfg.bool_or("output", "save_snapshots", false).map_err(usage)?;

    let (u0, u1) = make_initial_data(kind, epsilon, seed, config.grid);
    let trace = evolve(&config, &u0, &u1).map_err(usage)?;

    std::fs::create_dir_all(&args.out_dir)?;
    let mut manifest = RunManifest::start(
        command_line,
        Some(seed),
        serde_json::to_value(&config).unwrap_or_default(),
    );
    write_output(&mut manifest, &args.out_dir.join("scalars.csv"), &scalars_csv(&trace))?;
    let meta = serde_json::json!({
        "equation": trace.equation,
        "p": trace.p,
        "nonlinearity": trace.nonlinearity,
        "outcome": trace.outcome,
        "grid": { "n": config.grid.n, "l": config.grid.l },
        "snapshot_times": trace.snapshot_times,
        "snapshot_format": "per snapshot: u.re[N*N], u.im[N*N], du.re[N*N], du.im[N*N], f64 LE, row-major",
        "data": { "kind": format!("{kind:?}"), "epsilon": epsilon, "seed": seed },
    });
    write_output(
        &mut manifest,
        &args.out_dir.join("meta.json"),
        &serde_json::to_string_pretty(&meta).unwrap(),
    )?;
    if save_snapshots && !trace.snapshots.is_empty() {
        let path = args.out_dir.join("snapshots.bin");
        std::fs::write(&path, snapshots_bin(&trace))?;
        manifest.record(&path)?;
    }
    manifest.finish(&args.out_dir.join("manifest.json"))?;
    println!("outcome: {:?}", trace.outcome);
    match trace.outcome {
        SimOutcome::StepCollapse { t_star, sup_trend } => Err(CliError::Numerical(format!(
            "step collapse at t = {t_star} (sup trend {sup_trend:+e}); partial outputs written"
        ))),
        _ => Ok(()),
    }
}

fn cmd_picard(args: FileRunArgs, command_line: Vec<String>) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config)?;
    let cfg = Config::parse(&text).map_err(usage)?;
    let grid = Grid::new(
        cfg.usize("grid", "n").map_err(usage)?,
        cfg.f64("grid", "l").map_err(usage)?,
    )
    .map_err(usage)?;
    let m = cfg.f64("picard", "m").map_err(usage)?;
    let p = cfg.f64("picard", "p").map_err(usage)?;
    let t_probe = cfg.f64("picard", "t_probe").map_err(usage)?;
    let mut config = match cfg.get("picard", "scheme").unwrap_or("weighted") {
        "weighted" => {
            let alpha = cfg.f64("picard", "alpha").map_err(usage)?;
            PicardConfig::weighted(m, alpha, p, grid, t_probe)
        }
        "mixed" => PicardConfig::mixed(m, p, grid, t_probe),
        other => {
            return Err(CliError::Usage(format!(
                "[picard] scheme = {other:?}: expected weighted | mixed"
            )))
        }
    };
    config.iterations = cfg.usize_or("picard", "iterations", 5).map_err(usage)?;
    config.n_time_samples = cfg.usize_or("picard", "samples", 81).map_err(usage)?;
    if let Some(g) = cfg.get("picard", "gamma") {
        config.gamma = g.parse().map_err(|e| CliError::Usage(format!("gamma: {e}")))?;
    }
    let seed = args
        .seed
        .unwrap_or(cfg.u64_or("data", "seed", 0).map_err(usage)?);
    let kind = data_kind(cfg.get("data", "kind").unwrap_or("smooth_compact"))?;
    let epsilon = cfg.f64_or("data", "epsilon", 1e-3).map_err(usage)?;

    let (u0, u1) = make_initial_data(kind, epsilon, seed, grid);
    let run = run_picard(&config, &u0, &u1).map_err(usage)?;

    std::fs::create_dir_all(&args.out_dir)?;
    let mut manifest = RunManifest::start(
        command_line,
        Some(seed),
        serde_json::json!({
            "scheme": format!("{:?}", config.scheme),
            "m": m, "alpha": config.alpha, "p": p, "gamma": config.gamma,
            "t_probe": t_probe, "iterations": config.iterations,
            "grid": {"n": grid.n, "l": grid.l},
            "data": {"kind": format!("{kind:?}"), "epsilon": epsilon, "seed": seed},
        }),
    );
    let mut csv = String::from("k,m_k,n_k,ratio_to_previous\n");
    for k in 0..run.m_values.len() {
        let ratio = if k == 0 {
            String::new()
        } else {
            format!("{}", run.ratios[k - 1])
        };
        writeln!(csv, "{k},{},{},{ratio}", run.m_values[k], run.n_values[k]).unwrap();
    }
    write_output(&mut manifest, &args.out_dir.join("picard.csv"), &csv)?;
    let meta = serde_json::to_string_pretty(&run).unwrap();
    write_output(&mut manifest, &args.out_dir.join("picard.json"), &meta)?;
    manifest.finish(&args.out_dir.join("manifest.json"))?;
    println!(
        "converged: {} (ratios: {:?}, tail fraction: {:.3e})",
        run.converged, run.ratios, run.tail_fraction
    );
    Ok(())
}

fn cmd_decay(args: DecayArgs, command_line: Vec<String>) -> Result<(), CliError> {
    let grid = Grid::new(args.grid_n, args.box_l).map_err(usage)?;
    let sigma = args.sigma;
    let u0 = crate::field::Field2D::from_real_fn(grid, |x, y| {
        (-(x * x + y * y) / (2.0 * sigma * sigma)).exp()
    });
    let u1 = crate::field::Field2D::zeros(grid, crate::field::Space::Physical);
    let times: Vec<f64> = (0..args.samples)
        .map(|k| {
            // log-spaced sample times
            let f = k as f64 / (args.samples - 1) as f64;
            args.t_min * (args.t_max / args.t_min).powf(f)
        })
        .collect();
    let opts = OdeOptions {
        rtol: args.rtol,
        atol: args.rtol * 1e-4,
        ..OdeOptions::default()
    };
    let frames = linear_evolve_sampled(&u0, &u1, args.m, 1.0, &times, opts, false).map_err(usage)?;
    let sups: Vec<f64> = frames
        .fields
        .iter()
        .map(|f| f.sup_norm().expect("physical"))
        .collect();
    let (slope, intercept, r2) = norms::decay_fit(&times, &sups).map_err(usage)?;
    let target = -(args.m + 1.0) / 2.0;

    std::fs::create_dir_all(&args.out_dir)?;
    let mut manifest = RunManifest::start(
        command_line,
        None,
        serde_json::json!({
            "m": args.m, "grid_n": args.grid_n, "box_l": args.box_l,
            "sigma": args.sigma, "t_min": args.t_min, "t_max": args.t_max,
            "samples": args.samples, "rtol": args.rtol,
        }),
    );
    let mut csv = String::from("t,sup\n");
    for (t, s) in times.iter().zip(&sups) {
        writeln!(csv, "{t},{s}").unwrap();
    }
    write_output(&mut manifest, &args.out_dir.join("decay.csv"), &csv)?;
    let meta = serde_json::json!({
        "slope": slope,
        "intercept": intercept,
        "r2": r2,
        "target_slope": target,
        "relative_deviation": (slope - target).abs() / target.abs(),
    });
    write_output(
        &mut manifest,
        &args.out_dir.join("fit.json"),
        &serde_json::to_string_pretty(&meta).unwrap(),
    )?;
    manifest.finish(&args.out_dir.join("manifest.json"))?;
    println!(
        "slope = {slope:.4} (target {target:.4}, deviation {:.1}%, r² = {r2:.4})",
        100.0 * (slope - target).abs() / target.abs()
    );
    Ok(())
}

fn cmd_probe(args: ProbeArgs, command_line: Vec<String>) -> Result<(), CliError> {
    let grid = Grid::new(args.grid_n, args.box_l).map_err(usage)?;
    let mut cfg = ProbeConfig::new(args.statement.into(), args.m, args.alpha, grid);
    cfg.p = args.p;
    cfg.q = args.q;
    cfg.nu = args.nu;
    cfg.q_tilde = args.q_tilde;
    cfg.nu_tilde = args.nu_tilde;
    cfg.gamma = args.gamma;
    cfg.gamma2 = args.gamma2;
    cfg.delta = args.delta;
    cfg.t_probe = args.t_probe;
    cfg.n_time_samples = args.samples;
    cfg.family_size = args.family;
    cfg.seed = args.seed;
    let report = norms::strichartz_ratio_probe(&cfg).map_err(usage)?;

    std::fs::create_dir_all(&args.out_dir)?;
    let mut manifest = RunManifest::start(
        command_line,
        Some(args.seed),
        serde_json::json!({
            "statement": format!("{:?}", cfg.statement),
            "m": cfg.m, "alpha": cfg.alpha, "p": cfg.p,
            "q": cfg.q, "nu": cfg.nu, "q_tilde": cfg.q_tilde, "nu_tilde": cfg.nu_tilde,
            "gamma": cfg.gamma, "gamma2": cfg.gamma2, "delta": cfg.delta,
            "grid": {"n": grid.n, "l": grid.l},
            "t_probe": cfg.t_probe, "family": cfg.family_size,
        }),
    );
    let mut csv = String::from("member,ratio\n");
    for (i, r) in report.ratios.iter().enumerate() {
        writeln!(csv, "{i},{r}").unwrap();
    }
    write_output(&mut manifest, &args.out_dir.join("ratios.csv"), &csv)?;
    write_output(
        &mut manifest,
        &args.out_dir.join("probe.json"),
        &serde_json::to_string_pretty(&report).unwrap(),
    )?;
    manifest.finish(&args.out_dir.join("manifest.json"))?;
    println!(
        "max ratio = {:.6e} over {} members ({} skipped)",
        report.max_ratio,
        report.ratios.len(),
        report.skipped
    );
    Ok(())
}

fn cmd_transform_check(args: TransformArgs, command_line: Vec<String>) -> Result<(), CliError> {
    let mu = args.mu;
    let p = args.p;
    let fwd = transforms::damped_to_tricomi(mu, p).map_err(usage)?;
    let back = transforms::tricomi_to_damped(fwd.m, fwd.alpha, p).map_err(usage)?;
    let theta = transforms::theta_exponent(mu, p).map_err(usage)?;
    let p_crit_t = exponents::p_crit_tricomi(fwd.m, fwd.alpha).map_err(usage)?;
    let p_s = exponents::strauss_exponent(2.0 + mu).map_err(usage)?;
    // ψ_μ(t) vs φ_m(t) pointwise agreement (identical closed forms for μ<1).
    let mut weight_dev: f64 = 0.0;
    if mu < 1.0 {
        for k in 1..=50 {
            let t = 0.2 * k as f64;
            let a = transforms::psi_mu(mu, t).map_err(usage)?;
            let b = transforms::phi_m(fwd.m, t);
            weight_dev = weight_dev.max((a - b).abs() / a.max(1.0));
        }
    }
    let report = serde_json::json!({
        "mu": mu,
        "p": p,
        "m": fwd.m,
        "alpha": fwd.alpha,
        "amplitude_power": fwd.amplitude_power,
        "round_trip_mu_error": (back.mu - mu).abs(),
        "theta": theta,
        "theta_times_p_plus_1_minus_alpha": theta * (p + 1.0) - fwd.alpha,
        "p_crit_tricomi": p_crit_t.value,
        "p_strauss_2_plus_mu": p_s,
        "crit_consistency_error": if mu < 1.0 { (p_crit_t.value - p_s).abs() } else { f64::NAN },
        "psi_phi_pointwise_deviation": weight_dev,
    });
    let mut manifest = RunManifest::start(command_line, None, report.clone());
    let contents = serde_json::to_string_pretty(&report).unwrap();
    println!("{contents}");
    write_output(&mut manifest, &args.out, &contents)?;
    manifest.finish(&args.out.with_file_name(format!(
        "{}_manifest.json",
        args.out.file_stem().unwrap().to_string_lossy()
    )))?;
    Ok(())
}

fn cmd_admissible(args: AdmissibleArgs, command_line: Vec<String>) -> Result<(), CliError> {
    let m = match (args.m, args.mu) {
        (Some(m), None) => m,
        (None, Some(mu)) => {
            if !(1.0..2.0).contains(&mu) {
                return Err(CliError::Usage(format!(
                    "--mu must lie in (1, 2) for the m-map, got {mu}"
                )));
            }
            2.0 * (2.0 - mu) / (mu - 1.0)
        }
        _ => {
            return Err(CliError::Usage(
                "exactly one of --m or --mu must be given".into(),
            ))
        }
    };
    let p = args.p;
    let report = match (args.q, args.nu) {
        (Some(q), Some(nu)) => {
            let pair = admissibility::check_ugly_system(m, p, q, nu).map_err(usage)?;
            serde_json::json!({
                "m": m, "p": p, "q": q, "nu": nu, "selected": false,
                "feasible": pair.feasible,
                "residuals": pair.residuals,
            })
        }
        (None, None) => {
            let (pair, branch) = admissibility::select_pair(m, p).map_err(usage)?;
            let s = admissibility::closure_sobolev_index(m, p);
            serde_json::json!({
                "m": m, "p": p, "q": pair.q, "nu": pair.nu,
                "branch": format!("{branch:?}"), "selected": true,
                "sobolev_index": s,
                "feasible": pair.feasible,
                "residuals": pair.residuals,
            })
        }
        _ => {
            return Err(CliError::Usage(
                "--q and --nu must be given together (or neither)".into(),
            ))
        }
    };
    let mut manifest = RunManifest::start(command_line, None, report.clone());
    let contents = serde_json::to_string_pretty(&report).unwrap();
    println!("{contents}");
    write_output(&mut manifest, &args.out, &contents)?;
    manifest.finish(&args.out.with_file_name(format!(
        "{}_manifest.json",
        args.out.file_stem().unwrap().to_string_lossy()
    )))?;
    Ok(())
}

/// Helper for tests: run the CLI on string args, returning the exit code.
pub fn run_from<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = argv.into_iter().map(Into::into).collect();
    match Cli::try_parse_from(&args) {
        Ok(cli) => run(cli, args),
        Err(e) => {
            eprint!("{e}");
            2
        }
    }
}


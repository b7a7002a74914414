//! `nslab`: validate configurations, run simulations, De Giorgi analyses and
//! parameter sweeps, and summarize the artifacts they leave on disk.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nslab_core::artifacts::{self, load_artifacts};
use nslab_core::config::RunConfig;
use nslab_core::continuation::SweepParam;
use nslab_core::Error;

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_RUN: u8 = 3;

#[derive(Parser)]
#[command(name = "nslab", version, about = "Regularized compressible Navier-Stokes laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the constitutive hypotheses of a configuration.
    Validate(Common),
    /// Integrate to the horizon and evaluate the diagnostics.
    Simulate(Common),
    /// Run and compute the De Giorgi level energies and certificate.
    Degiorgi(Common),
    /// Repeat the run over a decreasing schedule of one regularization parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// epsilon, eta or delta.
        #[arg(long)]
        param: Option<String>,
        /// Comma-separated, strictly decreasing levels.
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<f64>>,
    },
    /// Summarize the artifacts in an output directory.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `[output] dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    dry_run: bool,
}

fn load(common: &Common) -> Result<RunConfig, ExitCode> {
    let mut cfg = RunConfig::load(&common.config).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_CONFIG)
    })?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.output.dir = o.clone();
    }
    Ok(cfg)
}

fn dry_run(cmd: &str, cfg: &RunConfig) -> ExitCode {
    println!("# plan: {cmd} -> {}", cfg.output.dir.display());
    print!("{}", cfg.to_toml());
    ExitCode::SUCCESS
}

fn run_error(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        Error::Config { .. } => ExitCode::from(EXIT_CONFIG),
        Error::Hypothesis(_) => ExitCode::from(EXIT_FAILURE),
        _ => ExitCode::from(EXIT_RUN),
    }
}

fn cmd_validate(cfg: &RunConfig) -> ExitCode {
    let rep = cfg.hypotheses();
    for c in &rep.checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        match c.witness {
            Some(w) => println!("{status} {} [witness {w:e}] {}", c.name, c.detail),
            None => println!("{status} {} {}", c.name, c.detail),
        }
    }
    match cfg.validated() {
        Ok(()) => {
            println!("all hypotheses hold");
            ExitCode::SUCCESS
        }
        Err(e) => {
            println!("hypothesis failure: {e}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}

fn cmd_simulate(cfg: &RunConfig) -> ExitCode {
    let dir = &cfg.output.dir;
    match artifacts::simulate_to_dir(cfg, dir) {
        Ok(out) => {
            let r = &out.report;
            println!(
                "steps {} final t {:.6} min ϑ {:.6e}",
                r.stats.steps, r.final_time, r.stats.min_theta
            );
            println!("relative mass drift {:.3e}", r.stats.relative_mass_drift());
            if let Some(e) = &r.energy {
                println!(
                    "energy inequality {} (max excess {:.3e})",
                    verdict(e.passed),
                    e.max_excess
                );
            }
            for s in &r.renorm {
                let passed = s.error.is_none() && s.reports.iter().all(|x| x.passed);
                println!("renormalized inequality [{}] {}", s.renormalizer, verdict(passed));
            }
            if let Some(p) = &r.poincare {
                println!(
                    "weighted Poincaré sup ratio {:.4} over {} samples",
                    p.sup_ratio, p.samples
                );
            }
            println!("artifacts in {}", dir.display());
            match out.error {
                Some(e) => run_error(&e),
                None => ExitCode::SUCCESS,
            }
        }
        Err(e) => run_error(&e),
    }
}

fn cmd_degiorgi(cfg: &RunConfig) -> ExitCode {
    match artifacts::degiorgi_to_dir(cfg, &cfg.output.dir) {
        Ok((rep, err)) => {
            for (k, (c, u)) in rep.c_levels.iter().zip(&rep.u_levels).enumerate() {
                println!("k {k:2}  C_k {c:.6e}  U_k {u:.6e}");
            }
            match &rep.certificate {
                Some(c) => println!("certificate ϑ ≥ {:.6e} ({:?})", c.bound, c.kind),
                None => println!("no certificate: level energies did not decay below the threshold"),
            }
            for w in &rep.warnings {
                println!("warning: {w}");
            }
            match err {
                Some(e) => run_error(&e),
                None => ExitCode::SUCCESS,
            }
        }
        Err(e) => run_error(&e),
    }
}

fn cmd_sweep(cfg: &RunConfig) -> ExitCode {
    match artifacts::sweep_to_dir(cfg, &cfg.output.dir) {
        Ok(rep) => {
            for l in &rep.levels {
                println!(
                    "{} = {:e}: {} min ϑ {:.6e}",
                    rep.param.name(),
                    l.value,
                    if l.completed { "completed" } else { "failed" },
                    l.min_theta
                );
            }
            println!("density L¹ differences {:?}", rep.density_l1_differences);
            println!("min ϑ spread {:.4}", rep.verdicts.min_theta_spread);
            if rep.verdicts.all_completed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_RUN)
            }
        }
        Err(e) => run_error(&e),
    }
}

fn verdict(passed: bool) -> &'static str {
    if passed {
        "PASS"
    } else {
        "FAIL"
    }
}

fn cmd_report(dir: &Path) -> ExitCode {
    let a = match load_artifacts(dir) {
        Ok(a) => a,
        Err(e) => return run_error(&e),
    };
    if let Some(l) = &a.ledger {
        if let (Some(first), Some(last)) = (l.rows.first(), l.rows.last()) {
            println!(
                "ledger: {} rows, E(0) = {:.6e}, E(T) = {:.6e}, dissipation {:.6e}, residual {:.3e}",
                l.rows.len(),
                first.total,
                last.total,
                last.dissipation(),
                last.residual
            );
        }
    }
    if let Some(r) = &a.report {
        println!(
            "run: completed {}, steps {}, min ϑ {:.6e}, checks {}",
            r.completed,
            r.stats.steps,
            r.stats.min_theta,
            verdict(r.passed())
        );
    }
    if !a.snapshots.is_empty() {
        println!("snapshots: {} files", a.snapshots.len());
    }
    if let Some(d) = &a.degiorgi {
        println!(
            "degiorgi: M = {}, U_kmax = {:.3e}, certificate {:?}",
            d.config.m,
            d.u_levels.last().copied().unwrap_or(f64::NAN),
            d.certificate
        );
    }
    if let Some(s) = &a.sweep {
        println!(
            "sweep: {} over {:?}, all completed {}",
            s.param.name(),
            s.schedule,
            s.verdicts.all_completed
        );
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (name, common) = match &cli.command {
        Command::Report { out } => return cmd_report(out),
        Command::Validate(c) => ("validate", c),
        Command::Simulate(c) => ("simulate", c),
        Command::Degiorgi(c) => ("degiorgi", c),
        Command::Sweep { common, .. } => ("sweep", common),
    };
    let mut cfg = match load(common) {
        Ok(c) => c,
        Err(code) => return code,
    };
    if let Command::Sweep { param, levels, .. } = &cli.command {
        if let Some(p) = param {
            match SweepParam::parse(p) {
                Ok(p) => cfg.sweep.param = p,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            }
        }
        if let Some(l) = levels {
            cfg.sweep.levels = l.clone();
        }
    }
    if common.dry_run {
        return dry_run(name, &cfg);
    }
    match name {
        "validate" => cmd_validate(&cfg),
        "simulate" => cmd_simulate(&cfg),
        "degiorgi" => cmd_degiorgi(&cfg),
        _ => cmd_sweep(&cfg),
    }
}

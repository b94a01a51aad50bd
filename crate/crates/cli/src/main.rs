use std::path::PathBuf;
use std::process::ExitCode;

use cbpdg::LimiterMode;
use cbpdg_cli::config::parse_ns;
use cbpdg_cli::{audit_bounds, convergence, init_workers, parse_config, run, CliError, RunConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cbpdg", version, about = "DG solver with a continuously bounds-preserving limiter")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one case and write summary, audit, limiter and field artifacts.
    Run(RunArgs),
    /// Solve a case on several meshes and tabulate error rates.
    Convergence(RunArgs),
    /// Check the certified polynomial bounds against dense sampling.
    AuditBounds {
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
}

/// Flags override values read from `--config`.
#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    case: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    order: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    nelems: Option<String>,
    /// Element counts for `convergence`, e.g. `20,40,60`.
    #[arg(long)]
    ns: Option<String>,
    /// none, discrete or continuous.
    #[arg(long)]
    limiter: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    niters: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    cfl: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    tf: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn flag<T: std::str::FromStr>(name: &str, v: &Option<String>, expected: &str) -> Result<Option<T>, CliError> {
    v.as_deref()
        .map(|s| s.parse().map_err(|_| CliError::Config(format!("--{name} {s}: expected {expected}"))))
        .transpose()
}

fn non_negative(name: &str, v: &Option<String>) -> Result<Option<usize>, CliError> {
    match flag::<i64>(name, v, "an integer")? {
        Some(n) if n < 0 => Err(CliError::Config(format!("--{name} must be >= 0, got {n}"))),
        n => Ok(n.map(|n| n as usize)),
    }
}

fn build_config(a: &RunArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            parse_config(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(c) = &a.case {
        cfg.case = Some(c.clone());
    }
    if let Some(p) = non_negative("order", &a.order)? {
        cfg.order = Some(p);
    }
    if let Some(n) = non_negative("nelems", &a.nelems)? {
        cfg.nelems = Some(n);
    }
    if let Some(ns) = &a.ns {
        cfg.ns = parse_ns(ns)?;
    }
    if let Some(m) = &a.limiter {
        cfg.mode = m.parse::<LimiterMode>()?;
    }
    if let Some(k) = non_negative("niters", &a.niters)? {
        cfg.n_iters = k;
    }
    if let Some(c) = flag("cfl", &a.cfl, "a number")? {
        cfg.cfl = Some(c);
    }
    if let Some(t) = flag("tf", &a.tf, "a number")? {
        cfg.t_final = Some(t);
    }
    if let Some(o) = &a.out {
        cfg.out = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "-".into())
}

fn execute(cli: Cli) -> Result<(), CliError> {
    init_workers(std::env::var("CBPDG_WORKERS").ok().as_deref())?;
    match cli.command {
        Command::Run(a) => {
            let cfg = build_config(&a)?;
            let s = run(&cfg)?;
            println!(
                "{} P{} N={} {}: steps={} L1={} Linf={} g_min={:.3e} ({:.1} s) -> {}",
                s.case,
                s.order,
                s.nelems,
                s.mode,
                s.steps,
                fmt_opt(s.l1),
                fmt_opt(s.linf),
                s.g_min,
                s.wall_s,
                cfg.out.display()
            );
        }
        Command::Convergence(a) => {
            let cfg = build_config(&a)?;
            let (rows, r1, ri) = convergence(&cfg)?;
            for r in &rows {
                println!("N={:4}  L1={:.3e}  Linf={:.3e}  g_min={:.3e}", r.n, r.l1, r.linf, r.g_min);
            }
            println!("RoC L1={r1:.3} Linf={ri:.3} -> {}", cfg.out.join("convergence.csv").display());
        }
        Command::AuditBounds { trials, seed } => {
            let (checked, bad) = audit_bounds(trials, seed)?;
            println!("audit-bounds: {checked} samples checked, {bad} outside their certified bounds");
            if bad > 0 {
                return Err(CliError::Numerical(format!("{bad} samples violated their bounds")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    // clap exits with 2 on bad arguments; those are configuration errors here
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cbpdg: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

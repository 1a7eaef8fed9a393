//! `sigma2`: solve and verify the prescribed sigma_2 curvature problem on S^2.
//!
//! Exit codes: 0 success, 2 mathematically expected failure (nonexistence,
//! unsolvable data, degenerate K), 1 usage or configuration error.

mod commands;
mod config;
mod fields;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use commands::{FamilyArgs, Outcome, Run};
use config::RunConfig;

#[derive(Parser, Debug)]
#[command(
    name = "sigma2",
    version,
    about = "Prescribed sigma_2 curvature on the round two-sphere"
)]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one configuration key, e.g. `--set grid.h=0.0375`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Family {
    /// Family tag: a, b-log, b-const, c, d or e.
    #[arg(long, default_value = "c")]
    family: String,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long = "C1", default_value_t = 1.0)]
    c1: f64,
    #[arg(long = "C2", default_value_t = 0.0)]
    c2: f64,
    #[arg(long, default_value_t = 1e-6)]
    rmin: f64,
    #[arg(long, default_value_t = 1.0)]
    rmax: f64,
    #[arg(long, default_value_t = 200)]
    samples: usize,
}

impl From<&Family> for FamilyArgs {
    fn from(f: &Family) -> Self {
        FamilyArgs {
            family: f.family.clone(),
            p: f.p,
            c1: f.c1,
            c2: f.c2,
            rmin: f.rmin,
            rmax: f.rmax,
            samples: f.samples,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Newton solve of sigma_2 = K_mu.
    #[command(allow_negative_numbers = true)]
    Solve {
        #[arg(long = "K")]
        k: String,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        /// `mean`, `zero`, `const:C`, `mobius:P1,P2,P3,T`, `bubble:X1,X2,X3` or `@field.csv`.
        #[arg(long, default_value = "mean")]
        init: String,
    },
    /// Continuation in mu from K_0 = 1/4 to K.
    Continue {
        #[arg(long = "K")]
        k: String,
        /// Start from xi = 0 instead of a zero of the reduced map.
        #[arg(long)]
        skip_reduction: bool,
        /// Reject converged states with Kazdan-Warner integrals above this
        /// multiple of h^2; `0` disables the guard.
        #[arg(long, default_value_t = 20.0)]
        kw_factor: f64,
    },
    /// Peak, concentration and bubble fits of a conformal factor.
    Diagnose {
        #[arg(long)]
        u: String,
    },
    /// Tabulate a radial family or classify a sampled profile.
    #[command(allow_negative_numbers = true)]
    Radial {
        /// CSV with columns `r,u`; classify instead of tabulating.
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        family: Family,
    },
    /// Asymptotics of a radial profile at r = 0.
    #[command(allow_negative_numbers = true)]
    Bocher {
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        family: Family,
    },
    /// Critical points of K, deg(grad K, Crit_-) and the indicator.
    Degree {
        #[arg(long = "K")]
        k: String,
        /// Also compute the degree of the reduced map.
        #[arg(long)]
        reduced: bool,
    },
    /// Kazdan-Warner integrals of a conformal factor.
    KwCheck {
        #[arg(long)]
        u: String,
        /// Also search for an obstruction witness for this K.
        #[arg(long = "K")]
        k: Option<String>,
    },
    /// Residual order of sigma_2 = 1 on a Möbius factor.
    MobiusCheck {
        #[arg(long, default_value = "0,0.6,0.8")]
        pole: String,
        #[arg(long, default_value_t = 2.0)]
        t: f64,
        #[arg(long, value_delimiter = ',', default_value = "64,128,256")]
        levels: Vec<usize>,
    },
    /// Radial solution on an annulus with prescribed boundary values.
    #[command(allow_negative_numbers = true)]
    Bvp {
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 101)]
        samples: usize,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Solve { .. } => "solve",
            Command::Continue { .. } => "continue",
            Command::Diagnose { .. } => "diagnose",
            Command::Radial { .. } => "radial",
            Command::Bocher { .. } => "bocher",
            Command::Degree { .. } => "degree",
            Command::KwCheck { .. } => "kw-check",
            Command::MobiusCheck { .. } => "mobius-check",
            Command::Bvp { .. } => "bvp",
        }
    }

    fn arguments(&self) -> serde_json::Value {
        let fam = |f: &Family| json!({"family": f.family, "p": f.p, "C1": f.c1, "C2": f.c2, "rmin": f.rmin, "rmax": f.rmax, "samples": f.samples});
        match self {
            Command::Solve { k, mu, init } => json!({"K": k, "mu": mu, "init": init}),
            Command::Continue {
                k,
                skip_reduction,
                kw_factor,
            } => json!({"K": k, "skip_reduction": skip_reduction, "kw_factor": kw_factor}),
            Command::Diagnose { u } => json!({"u": u}),
            Command::Radial { input, family } | Command::Bocher { input, family } => {
                json!({"input": input.as_ref().map(|p| p.display().to_string()), "family": fam(family)})
            }
            Command::Degree { k, reduced } => json!({"K": k, "reduced": reduced}),
            Command::KwCheck { u, k } => json!({"u": u, "K": k}),
            Command::MobiusCheck { pole, t, levels } => {
                json!({"pole": pole, "t": t, "levels": levels})
            }
            Command::Bvp {
                p,
                a,
                b,
                alpha,
                beta,
                samples,
            } => json!({"p": p, "a": a, "b": b, "alpha": alpha, "beta": beta, "samples": samples}),
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<(Outcome, PathBuf)> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply_overrides(&cli.set)?;
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    let mut r = Run::new(cli.command.name(), cfg, cli.command.arguments())?;
    let outcome = match &cli.command {
        Command::Solve { k, mu, init } => commands::solve(&mut r, k, *mu, init)?,
        Command::Continue {
            k,
            skip_reduction,
            kw_factor,
        } => {
            let f = if *kw_factor > 0.0 {
                Some(*kw_factor)
            } else {
                None
            };
            commands::continue_path(&mut r, k, *skip_reduction, f)?
        }
        Command::Diagnose { u } => commands::diagnose(&mut r, u)?,
        Command::Radial { input, family } => commands::radial(&mut r, input, &family.into())?,
        Command::Bocher { input, family } => commands::bocher(&mut r, input, &family.into())?,
        Command::Degree { k, reduced } => commands::degree(&mut r, k, *reduced)?,
        Command::KwCheck { u, k } => commands::kw(&mut r, u, k.as_deref())?,
        Command::MobiusCheck { pole, t, levels } => {
            commands::mobius_check(&mut r, pole, *t, levels)?
        }
        Command::Bvp {
            p,
            a,
            b,
            alpha,
            beta,
            samples,
        } => commands::bvp(&mut r, *p, *a, *b, *alpha, *beta, *samples)?,
    };
    let dir = r.finish(outcome)?;
    Ok((outcome, dir))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok((outcome, dir)) => {
            println!("{}", dir.join(output::MANIFEST).display());
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

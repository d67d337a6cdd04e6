use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qsl::harness::checks::run_all;
use qsl::harness::run::run_dir;
use qsl::harness::{run_single, sweep, RunConfig};
use qsl::profiles::{f_uni, quasi_dist_uni, wave_profile};
use qsl::{QslError, Result};

#[derive(Parser)]
#[command(name = "qsl", version, about = "Q-tensor diffuse-interface simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; defaults are used for missing fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Diagnostics cadence in steps.
    #[arg(long)]
    snapshot_every: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single ε.
    Run {
        #[command(flatten)]
        common: Common,
        /// Interface width; defaults to the first value of the config list.
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Run every ε of the config and fit convergence rates.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Concurrent runs.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Fast self-checks of the profiles, quasi-distance and solver.
    Check {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Write S(z), g(s) and f(s) tables as CSV.
    DumpProfile {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Samples per table.
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
}

fn load(path: Option<&Path>) -> Result<RunConfig> {
    path.map_or_else(|| Ok(RunConfig::default()), RunConfig::load)
}

fn apply(common: &Common) -> Result<RunConfig> {
    let mut cfg = load(common.config.as_deref())?;
    if let Some(o) = &common.out {
        cfg.output_dir = o.clone();
    }
    if let Some(k) = common.snapshot_every {
        cfg.snapshot_every = k;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Run { common, eps } => {
            let cfg = apply(&common)?;
            let eps = eps.or(cfg.eps_list.first().copied()).ok_or_else(|| QslError::Config("no eps given".into()))?;
            let mut single = cfg.clone();
            single.eps_list = vec![eps];
            for w in single.validate()? {
                eprintln!("warning: {w}");
            }
            let dir = run_dir(&cfg.output_dir, eps);
            let out = run_single(&cfg, eps, Some(&dir))?;
            let s = &out.summary;
            println!(
                "eps {eps}: {} steps, E(T) = {:.6e}, E_vol(T) = {:.6e}, R = {}",
                s.steps,
                s.e_final,
                s.e_vol_final,
                s.r_measured.map_or("n/a".into(), |r| format!("{r:.5}"))
            );
            println!("wrote {}", dir.display());
            Ok(0)
        }
        Command::Sweep { common, jobs } => {
            let mut cfg = apply(&common)?;
            if let Some(j) = jobs {
                cfg.jobs = j;
            }
            for w in cfg.validate()? {
                eprintln!("warning: {w}");
            }
            let summary = sweep(&cfg, Some(&cfg.output_dir))?;
            for r in &summary.runs {
                match (&r.summary, &r.error) {
                    (Some(s), _) => println!(
                        "eps {}: E(T)+E_vol(T) = {:.6e}, diss = ({:.4e}, {:.4e})",
                        r.eps,
                        s.e_final + s.e_vol_final,
                        s.diss_parallel,
                        s.diss_transport
                    ),
                    (None, Some(e)) => println!("eps {}: FAILED: {e}", r.eps),
                    _ => {}
                }
            }
            for (k, f) in &summary.fits {
                println!("slope {k}: {:.4} (r2 {:.4})", f.slope, f.r2);
            }
            for c in &summary.criteria {
                println!("[{}] {:>2} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.id, c.name, c.detail);
            }
            println!("wrote {}", cfg.output_dir.join("sweep_summary.json").display());
            Ok(summary.exit_code())
        }
        Command::Check { config } => {
            let cfg = load(config.as_deref())?;
            let results = run_all(&cfg.bulk)?;
            let mut ok = true;
            for r in &results {
                ok &= r.passed;
                println!(
                    "[{}] {}: {:.3e} (tol {:.1e})",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.name,
                    r.value,
                    r.tolerance
                );
            }
            Ok(if ok { 0 } else { 1 })
        }
        Command::DumpProfile { config, out, points } => {
            let cfg = load(config.as_deref())?;
            cfg.bulk.validate()?;
            let p = cfg.bulk;
            let n = points.max(2);
            let sp = p.s_plus();
            let mut wave = String::from("z,S\n");
            let mut quasi = String::from("s,g,f\n");
            for k in 0..n {
                let z = -6.0 + 12.0 * k as f64 / (n - 1) as f64;
                wave.push_str(&format!("{z:.17e},{:.17e}\n", wave_profile(z, &p)));
                let s = sp * k as f64 / (n - 1) as f64;
                quasi.push_str(&format!("{s:.17e},{:.17e},{:.17e}\n", quasi_dist_uni(s, &p), f_uni(s, &p)));
            }
            match out {
                Some(dir) => {
                    fs::create_dir_all(&dir)?;
                    fs::write(dir.join("wave_profile.csv"), wave)?;
                    fs::write(dir.join("quasi_distance.csv"), quasi)?;
                    println!("wrote {}", dir.display());
                }
                None => print!("{wave}\n{quasi}"),
            }
            Ok(0)
        }
    }
}

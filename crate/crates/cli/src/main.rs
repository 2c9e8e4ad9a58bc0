use clap::{Parser, Subcommand};
use slqns::harness::{compare_reports, run_campaign, CampaignConfig, Report};
use slqns::Error;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// SPAM-robust spin-locking noise spectroscopy campaigns.
#[derive(Parser, Debug)]
#[command(name = "slqns", version, about)]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate data, estimate spectra and write the output bundle.
    Run {
        /// Config file, or the name of a bundled config such as `fig2-dephasing`.
        config: PathBuf,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Bundle directory (defaults to the config's, then `out/<name>`).
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Use exact expectations instead of sampled shots.
        #[arg(long)]
        analytic: bool,
    },
    /// Per-estimate z-scores between two reports (files or bundle directories).
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Also write `compare.csv` here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Check a config without running it.
    Validate { config: PathBuf },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Estimation { .. } => 3,
        Error::Config(_) | Error::Plan(_) | Error::Domain(_) | Error::Json(_) => 2,
        Error::Io(_) | Error::Csv(_) => 1,
    }
}

fn fail(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(exit_code(&e))
}

fn report_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join("report.json")
    } else {
        p.to_path_buf()
    }
}

fn cmd_run(config: &Path, seed: Option<u64>, out_dir: Option<PathBuf>, analytic: bool) -> Result<(), Error> {
    let mut cfg = CampaignConfig::load(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.analytic |= analytic;
    let name = if cfg.name.is_empty() { "campaign".to_string() } else { cfg.name.clone() };
    let dir = out_dir
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&name));
    let outcome = run_campaign(&cfg, &dir)?;
    let r = &outcome.report;
    println!(
        "{}: {} estimates at {} drive amplitudes, {} failures -> {}",
        name,
        r.all_estimates().count(),
        r.omegas.len(),
        r.failures.len(),
        dir.display()
    );
    for f in &r.failures {
        eprintln!("warning: omega {:.6} rad/us ({}): {}", f.omega, f.method, f.error);
    }
    for p in &r.pooled_spam {
        println!("  {} ({}): {:.5} +- {:.5}", p.quantity, p.method.label(), p.value, p.std_error);
    }
    Ok(())
}

fn cmd_compare(a: &Path, b: &Path, out_dir: Option<PathBuf>) -> Result<(), Error> {
    let ra = Report::load(&report_path(a))?;
    let rb = Report::load(&report_path(b))?;
    let deltas = compare_reports(&ra, &rb)?;
    println!("{:>12} {:>16} {:>16} {:>14} {:>14} {:>8}", "omega", "quantity", "method", "a", "b", "z");
    for d in &deltas {
        println!(
            "{:>12.5} {:>16} {:>16} {:>14.6e} {:>14.6e} {:>8.3}",
            d.omega,
            d.quantity.label(),
            d.method.label(),
            d.value_a,
            d.value_b,
            d.z
        );
    }
    let within = deltas.iter().filter(|d| d.z.abs() <= 3.0).count();
    println!("{within}/{} estimates within |z| <= 3", deltas.len());
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(&dir)?;
        let mut text = String::from("omega,quantity,method,value_a,value_b,z\n");
        for d in &deltas {
            text.push_str(&format!(
                "{},{},{},{},{},{}\n",
                d.omega,
                d.quantity.label(),
                d.method.label(),
                d.value_a,
                d.value_b,
                d.z
            ));
        }
        std::fs::write(dir.join("compare.csv"), text)?;
    }
    Ok(())
}

fn cmd_validate(config: &Path) -> Result<(), Error> {
    let cfg = CampaignConfig::load(config)?;
    let plan = cfg.plan();
    println!(
        "ok: protocol {}, {} drive amplitudes, {} times, backend {}",
        u8::from(plan.protocol),
        plan.omegas.len(),
        plan.times.len(),
        cfg.backend.label()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be >= 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Run {
            config,
            seed,
            out_dir,
            analytic,
        } => cmd_run(&config, seed, out_dir, analytic),
        Command::Compare { a, b, out_dir } => cmd_compare(&a, &b, out_dir),
        Command::Validate { config } => cmd_validate(&config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}

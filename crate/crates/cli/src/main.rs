use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use metawave::audit::{energy_audit, AuditSettings};
use metawave::mms::{self, DtPolicy, ExactSolution};
use metawave::output::{write_table, Format};
use metawave::{Pairing, RunConfig};

#[derive(Parser)]
#[command(
    name = "metawave",
    version,
    about = "Mixed FEM for acoustic waves in Drude metamaterials"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Manufactured-solution convergence study.
    Convergence(ConvergenceArgs),
    /// Run a scenario from a configuration file.
    Run(RunArgs),
    /// Energy conservation and decay traces.
    EnergyAudit(AuditArgs),
    /// Check a configuration and its material.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct ConvergenceArgs {
    /// One pairing; all four when omitted.
    #[arg(long)]
    pairing: Option<Pairing>,
    #[arg(long, value_delimiter = ',', default_value = "8,16,32")]
    levels: Vec<usize>,
    /// `h` or `h2`; the pairing's optimal choice when omitted.
    #[arg(long)]
    dt_policy: Option<DtPolicy>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the snapshot formats of the configuration.
    #[arg(long)]
    format: Option<Format>,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long, default_value = "rtn0")]
    pairing: Pairing,
    #[arg(long, default_value_t = 16)]
    n: usize,
    #[arg(long, default_value_t = 200)]
    steps: usize,
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    config: PathBuf,
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn convergence(a: ConvergenceArgs) -> Result<()> {
    if a.levels.contains(&0) {
        bail!("levels must be positive");
    }
    let pairings = match a.pairing {
        Some(p) => vec![p],
        None => Pairing::ALL.to_vec(),
    };
    let exact = ExactSolution::standard();
    for p in pairings {
        let policy = a.dt_policy.unwrap_or(DtPolicy::optimal(p));
        let report = mms::convergence_study(&exact, p, &a.levels, policy, mms::FINAL_TIME)?;
        println!("{}", report.to_table());
        if let Some(dir) = &a.out {
            create_dir(dir)?;
            let path = dir.join(format!("convergence_{}.csv", p.name()));
            std::fs::write(&path, report.to_csv())?;
            log::info!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn run(a: RunArgs) -> Result<()> {
    let mut cfg = RunConfig::from_file(&a.config)?;
    if let Some(f) = a.format {
        cfg.output.formats = vec![f];
    }
    create_dir(&a.out)?;
    let report = metawave::run_scenario(&cfg, Some(&a.out))?;
    println!(
        "{}: {} dofs, {} steps, {:.1} s, max |p| = {:.4e}",
        report.name, report.dofs, report.steps, report.seconds, report.final_max_abs_pressure
    );
    for s in &report.snapshots {
        println!("  {}", s.display());
    }
    if let Some(ph) = &report.phase {
        println!(
            "  phase probe: omega = {:.1}, k_ref = {:.1}, k_slab = {:.1}, amplitude ratio = {:.2e}, flipped = {}",
            ph.frequency,
            ph.k_reference,
            ph.k_slab,
            ph.amplitude_slab / ph.amplitude_reference,
            ph.flipped
        );
    }
    Ok(())
}

fn audit(a: AuditArgs) -> Result<()> {
    let s = AuditSettings {
        pairing: a.pairing,
        n: a.n,
        steps: a.steps,
        dt: a.dt,
        gamma: a.gamma,
        seed: a.seed,
    };
    let r = energy_audit(&s)?;
    println!(
        "{} N={} steps={} dt={}",
        s.pairing.name(),
        s.n,
        s.steps,
        s.dt
    );
    println!("  gamma = 0:   max relative drift    {:.3e}", r.max_drift);
    println!(
        "  gamma = {}: max relative increase {:.3e}",
        s.gamma, r.max_increase
    );
    println!(
        "  gamma = {}: E(T)/E(0)             {:.6}",
        s.gamma,
        r.damped.last().unwrap() / r.damped[0]
    );
    if let Some(dir) = &a.out {
        create_dir(dir)?;
        let rows: Vec<Vec<f64>> = (0..r.times.len())
            .map(|i| vec![r.times[i], r.conservative[i], r.damped[i]])
            .collect();
        let path = dir.join(format!("energy_{}.csv", s.pairing.name()));
        write_table(
            BufWriter::new(File::create(&path)?),
            &["t", "energy_lossless", "energy_damped"],
            &rows,
        )?;
        log::info!("wrote {}", path.display());
    }
    Ok(())
}

fn validate(a: ValidateArgs) -> Result<()> {
    let cfg = RunConfig::from_file(&a.config)?;
    let mesh = cfg.mesh()?;
    let material = cfg.material(&mesh)?;
    let diag = material.validate();
    let grid = cfg.time_grid()?;
    println!(
        "{}: {} cells, {} steps of {}, pairing {}",
        a.config.display(),
        mesh.num_cells(),
        grid.n_steps(),
        grid.dt(),
        cfg.pairing.name()
    );
    cfg.snapshot_steps()?;
    if !diag.is_valid() {
        bail!("material: {diag}");
    }
    println!("ok");
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    match cli.command {
        Command::Convergence(a) => convergence(a),
        Command::Run(a) => run(a),
        Command::EnergyAudit(a) => audit(a),
        Command::Validate(a) => validate(a),
    }
}

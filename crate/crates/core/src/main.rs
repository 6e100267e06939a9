use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use btrelax::bt::{double_entropy_residuals, run_bt, BtMode};
use btrelax::experiments::{eps_sweep, inequality_stress, mms_convergence};
use btrelax::io::config::RunConfig;
use btrelax::io::csv::{fmt_f64, write_diagnostics, write_table};
use btrelax::io::{parse_config, write_snapshot};
use btrelax::nsk::run_nsk;
use btrelax::{Error, GridSpec, Result, Trajectory};

#[derive(Parser, Debug)]
#[command(name = "btrelax", version, about = "Relaxation solvers for cross-diffusion systems")]
struct Cli {
    /// Parent directory for run directories (overrides output.dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Random seed (overrides output.seed).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Only report errors.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate the relaxed system.
    SimulateNsk { config: PathBuf },
    /// Integrate the limit system.
    SimulateBt { config: PathBuf },
    /// Relative energy against the limit across sweep.eps.
    SweepEps { config: PathBuf },
    /// Manufactured-solution convergence studies.
    Mms { config: PathBuf },
    /// Random-field study of the functional inequality ratio.
    CheckInequalities { config: PathBuf },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::SimulateNsk { .. } => "simulate-nsk",
            Command::SimulateBt { .. } => "simulate-bt",
            Command::SweepEps { .. } => "sweep-eps",
            Command::Mms { .. } => "mms",
            Command::CheckInequalities { .. } => "check-inequalities",
        }
    }

    fn config(&self) -> &Path {
        match self {
            Command::SimulateNsk { config }
            | Command::SimulateBt { config }
            | Command::SweepEps { config }
            | Command::Mms { config }
            | Command::CheckInequalities { config } => config,
        }
    }
}

fn run_dir(cli: &Cli, cfg: &RunConfig, seed: u64) -> Result<PathBuf> {
    let parent = cli
        .out
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("runs"));
    let stamp = chrono::Local::now().format("%Y%m%dT%H%M%S%.3f");
    let dir = parent.join(format!("{}_{stamp}_seed{seed}", cli.command.name()));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn write_trajectory(traj: &Trajectory, cfg: &RunConfig, dir: &Path) -> Result<()> {
    write_diagnostics(&traj.diagnostics, cfg.params.n_species(), &dir.join("diagnostics.csv"))?;
    let every = cfg.output.snapshot_every;
    let last = traj.states.len().saturating_sub(1);
    for (i, s) in traj.states.iter().enumerate() {
        let due = if every == 0 { i == 0 || i == last } else { i % every == 0 || i == last };
        if due {
            write_snapshot(s, &dir.join(format!("snapshot_{i:06}.bin")))?;
        }
    }
    Ok(())
}

fn report(quiet: bool, msg: String) {
    if !quiet {
        println!("{msg}");
    }
}

fn simulate_nsk(cli: &Cli, cfg: &RunConfig, dir: &Path) -> Result<()> {
    let traj = run_nsk(&cfg.ic, &cfg.nsk_config())?;
    write_trajectory(&traj, cfg, dir)?;
    let first = &traj.diagnostics[0];
    let last = traj.diagnostics.last().expect("nonempty trajectory");
    report(
        cli.quiet,
        format!(
            "t = {}: E {} -> {}, H {} -> {}, clips {}{}",
            last.time,
            first.energy,
            last.energy,
            first.entropy,
            last.entropy,
            traj.clip_events.count,
            if traj.is_degraded() { " (degraded)" } else { "" }
        ),
    );
    Ok(())
}

fn simulate_bt(cli: &Cli, cfg: &RunConfig, dir: &Path) -> Result<()> {
    let bcfg = cfg.bt_config();
    let traj = run_bt(&cfg.ic, &bcfg)?;
    write_trajectory(&traj, cfg, dir)?;
    if bcfg.mode == BtMode::RankOne {
        let (r1, r2) = double_entropy_residuals(&traj, &cfg.params)?;
        let rows: Vec<Vec<String>> = traj
            .states
            .iter()
            .zip(r1.iter().zip(&r2))
            .map(|(s, (&a, &b))| vec![fmt_f64(s.time), fmt_f64(a), fmt_f64(b)])
            .collect();
        write_table(&dir.join("entropy_residuals.csv"), &["time", "r1", "r2"], &rows)?;
        let m1 = r1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let m2 = r2.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        report(cli.quiet, format!("max |r1| = {m1:e}, max |r2| = {m2:e}"));
    }
    let last = traj.diagnostics.last().expect("nonempty trajectory");
    report(
        cli.quiet,
        format!("t = {}: H1 {}, H2 {}, clips {}", last.time, last.h1, last.h2, traj.clip_events.count),
    );
    Ok(())
}

fn sweep(cli: &Cli, cfg: &RunConfig, dir: &Path) -> Result<()> {
    let s = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("missing required section [sweep]".into()))?;
    let res = eps_sweep(&cfg.ic, &cfg.nsk_config(), &s.eps, s.t_end)?;
    let rows: Vec<Vec<String>> = (0..res.eps_values.len())
        .map(|i| {
            vec![
                fmt_f64(res.eps_values[i]),
                fmt_f64(res.er_final[i]),
                u8::from(res.run_flags[i]).to_string(),
                fmt_f64(res.velocity_defect[i]),
            ]
        })
        .collect();
    write_table(
        &dir.join("sweep_summary.csv"),
        &["eps", "E_R", "degraded", "velocity_defect"],
        &rows,
    )?;
    write_table(
        &dir.join("sweep_fit.csv"),
        &["fitted_exponent", "fit_r2"],
        &[vec![fmt_f64(res.fitted_exponent), fmt_f64(res.fit_r2)]],
    )?;
    for (i, recs) in res.diagnostics.iter().enumerate() {
        write_diagnostics(recs, cfg.params.n_species(), &dir.join(format!("run_{i:02}_diagnostics.csv")))?;
    }
    report(
        cli.quiet,
        format!(
            "E_R(t_end) = {:?}; fitted exponent {:.4} (r² {:.4}), worst monotonicity violation {:.2}%",
            res.er_final,
            res.fitted_exponent,
            res.fit_r2,
            100.0 * res.worst_monotonicity_violation()
        ),
    );
    Ok(())
}

fn mms(cli: &Cli, cfg: &RunConfig, dir: &Path) -> Result<()> {
    let settings = cfg.mms.clone().unwrap_or_default();
    let mut detail = Vec::new();
    let mut summary = Vec::new();
    for (kind, study) in settings.studies() {
        info!("running {}", kind.name());
        let r = mms_convergence(&study)?;
        for i in 0..r.parameters.len() {
            detail.push(vec![
                kind.name().to_string(),
                fmt_f64(r.parameters[i]),
                fmt_f64(r.errors_max[i]),
                fmt_f64(r.errors_l2[i]),
            ]);
        }
        summary.push(vec![
            kind.name().to_string(),
            fmt_f64(r.order_max),
            fmt_f64(r.order_l2),
            fmt_f64(r.orders_of_magnitude()),
        ]);
        report(
            cli.quiet,
            format!(
                "{}: errors {:?}, order {:.3}, drop {:.2} decades",
                kind.name(),
                r.errors_max,
                r.order_max,
                r.orders_of_magnitude()
            ),
        );
    }
    write_table(
        &dir.join("mms_errors.csv"),
        &["study", "parameter", "error_max", "error_l2"],
        &detail,
    )?;
    write_table(
        &dir.join("mms_orders.csv"),
        &["study", "order_max", "order_l2", "decades"],
        &summary,
    )
}

fn inequalities(cli: &Cli, cfg: &RunConfig, dir: &Path, seed: u64) -> Result<()> {
    let settings = cfg.inequality.clone().unwrap_or(btrelax::io::config::InequalitySettings {
        samples: 100,
        refine: true,
    });
    let mut grids = vec![cfg.grid];
    if settings.refine {
        grids.push(GridSpec::new(cfg.grid.dim(), 2 * cfg.grid.n())?);
    }
    let mut summary = Vec::new();
    let mut ratios = Vec::new();
    let mut mins = Vec::new();
    for g in &grids {
        let r = inequality_stress(settings.samples, seed, g)?;
        for (j, v) in r.ratios.iter().enumerate() {
            ratios.push(vec![r.n.to_string(), j.to_string(), fmt_f64(*v)]);
        }
        summary.push(vec![
            r.dim.to_string(),
            r.n.to_string(),
            r.n_samples.to_string(),
            fmt_f64(r.min),
            fmt_f64(r.median),
            fmt_f64(r.max),
        ]);
        mins.push(r.min);
        report(
            cli.quiet,
            format!("d = {}, n = {}: min ratio {}, median {}", r.dim, r.n, r.min, r.median),
        );
    }
    if mins.len() == 2 {
        report(
            cli.quiet,
            format!("relative change of the floor under n -> 2n: {:.3e}", (mins[1] - mins[0]).abs() / mins[0]),
        );
    }
    write_table(&dir.join("inequality_ratios.csv"), &["n", "sample", "ratio"], &ratios)?;
    write_table(
        &dir.join("inequality_summary.csv"),
        &["dim", "n", "samples", "min", "median", "max"],
        &summary,
    )?;
    if mins.iter().any(|m| m.is_nan() || *m <= 0.0) {
        return Err(Error::Experiment("inequality ratio not positive on some sample".into()));
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<PathBuf> {
    let cfg = parse_config(cli.command.config())?;
    let seed = cli.seed.unwrap_or(cfg.output.seed);
    let dir = run_dir(cli, &cfg, seed)?;
    fs::copy(cli.command.config(), dir.join("config.toml"))?;
    info!("writing to {}", dir.display());
    match &cli.command {
        Command::SimulateNsk { .. } => simulate_nsk(cli, &cfg, &dir)?,
        Command::SimulateBt { .. } => simulate_bt(cli, &cfg, &dir)?,
        Command::SweepEps { .. } => sweep(cli, &cfg, &dir)?,
        Command::Mms { .. } => mms(cli, &cfg, &dir)?,
        Command::CheckInequalities { .. } => inequalities(cli, &cfg, &dir, seed)?,
    }
    Ok(dir)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = if cli.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(&cli) {
        Ok(dir) => {
            report(cli.quiet, format!("output: {}", dir.display()));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! Batch front-end for the gate simulator: named presets or TOML configs
//! in, CSV records, process matrices, and gnuplot scripts out. Every
//! failure path prints a single `error: ...` line on stderr and exits
//! nonzero so sweep drivers can script against it.

mod config;
mod plots;
mod report;
mod runner;

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use itoffoli::crystal::{select_modes, CrystalModel, ModeSet};
use itoffoli::evolution::EchoKind;
use itoffoli::multibeat::verify_plan;
use itoffoli::presets::{resolve, RawConfig};
use rayon::prelude::*;

#[derive(Parser)]
#[command(name = "itoffoli", version, about = "Trapped-ion i-Toffoli gate simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// TOML config file (alternative to --preset).
    #[arg(long, global = true, value_name = "file")]
    config: Option<PathBuf>,
    /// Named parameter set: fig2, fig3a, fig4a, fig4b.
    #[arg(long, global = true, value_name = "name")]
    preset: Option<String>,
    /// Output directory for CSV, unitary, and plot-script files.
    #[arg(long, global = true, value_name = "dir", default_value = "out")]
    out: PathBuf,
    /// Sweep worker threads; defaults to the available parallelism.
    #[arg(long, global = true, value_name = "n")]
    workers: Option<usize>,
    /// Fock levels per mode: "auto" or an explicit count.
    #[arg(long, global = true, value_name = "int|auto")]
    nmax: Option<String>,
    /// Scale the integrator step: above 1 coarsens, below 1 refines.
    #[arg(long, global = true, value_name = "float")]
    dt_scale: Option<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the axial mode spectrum of the configured chain
    Modes,
    /// Full run: report, traces, process unitary, plot scripts
    Simulate,
    /// Rerun the config across a list of values for one parameter
    Sweep {
        /// Config key to vary (e.g. J_khz, g_khz, nbar_cm)
        #[arg(long)]
        param: String,
        /// Comma-separated values for the swept key
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Solve and audit the multibeat echo comb without running the gate
    EchoSolve,
    /// Run the gate and print the fidelity numbers
    Fidelity,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(&cli) {
        eprintln!("error: {}", format!("{e:#}").replace(['\n', '\r'], "; "));
        std::process::exit(1);
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.cmd {
        Cmd::Modes => modes(cli),
        Cmd::Simulate => simulate(cli),
        Cmd::Fidelity => fidelity(cli),
        Cmd::EchoSolve => echo_solve(cli),
        Cmd::Sweep { param, values } => sweep(cli, param, values),
    }
}

fn load(cli: &Cli) -> Result<(String, RawConfig)> {
    let (name, mut raw) = config::load_raw(cli.config.as_deref(), cli.preset.as_deref())?;
    if let Some(nmax) = &cli.nmax {
        config::apply_nmax(&mut raw, nmax)?;
    }
    Ok((name, raw))
}

fn ensure_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating output dir {}", dir.display()))
}

fn print_outcome(out: &runner::Outcome) {
    println!("fbar = {:.12e}", out.fbar);
    println!("max_leakage = {:.12e}", out.max_leakage);
    println!("max_residual_phase_rad = {:.12e}", out.max_residual_phase);
    if let Some(d) = out.conv_delta {
        println!("conv_delta_fbar = {d:.12e}");
    }
}

fn modes(cli: &Cli) -> Result<()> {
    let (_, raw) = load(cli)?;
    let crystal = CrystalModel::axial(raw.n_ions)?;
    let omega_cm = TAU * raw.omega_cm_khz * 1e3;
    let delta_cm = TAU * raw.delta_cm_khz * 1e3;
    let specs = select_modes(&crystal, omega_cm, delta_cm, raw.eta_cm_per_ion, ModeSet::AllAxial);
    println!("# axial modes, n_ions = {}", raw.n_ions);
    println!("{:<6}{:<10}{:<14}{:<14}eta_per_ion", "mode", "ratio", "freq_khz", "detune_khz");
    for (m, spec) in specs.iter().enumerate() {
        let etas: Vec<String> = spec.eta.iter().map(|e| format!("{e:+.5}")).collect();
        println!(
            "{:<6}{:<10.5}{:<14.5}{:<+14.5}{}",
            m,
            crystal.mode_ratios[m],
            spec.omega / TAU / 1e3,
            spec.delta / TAU / 1e3,
            etas.join(" ")
        );
    }
    Ok(())
}

fn simulate(cli: &Cli) -> Result<()> {
    let (name, raw) = load(cli)?;
    ensure_out(&cli.out)?;
    let opts =
        runner::RunOpts { dt_scale: cli.dt_scale, artifacts: true, convergence_check: true };
    let t0 = Instant::now();
    let (r, out) = runner::execute(&raw, &opts)?;
    let runtime = t0.elapsed().as_secs_f64();
    let fp = config::fingerprint(&r);
    let row = report::report_row(&name, &raw, Some((&r, &out, &fp)), "ok", runtime);
    report::write_report(&cli.out.join("report.csv"), &[row])?;

    let run = out.run.as_ref().expect("simulate keeps artifacts");
    let traces = report::write_traces(&cli.out, &r.cfg, run)?;
    let unitary = out.unitary.as_ref().expect("simulate keeps artifacts");
    report::write_unitary(&cli.out.join("unitary.txt"), unitary)?;
    let mut extras = vec![
        plots::trace_script(&cli.out, r.cfg.modes.len(), &traces)?,
        plots::unitary_script(&cli.out)?,
    ];
    if let EchoKind::Multibeat(plan) = &r.echo {
        report::write_tones(&cli.out.join("tones.csv"), plan)?;
        extras.push(plots::tones_script(&cli.out)?);
    }

    println!("fingerprint = {fp}");
    print_outcome(&out);
    println!(
        "wrote {}: report.csv, unitary.txt, {} trace files, {}",
        cli.out.display(),
        traces.len(),
        extras.join(", ")
    );
    Ok(())
}

fn fidelity(cli: &Cli) -> Result<()> {
    let (name, raw) = load(cli)?;
    ensure_out(&cli.out)?;
    let opts =
        runner::RunOpts { dt_scale: cli.dt_scale, artifacts: false, convergence_check: false };
    let t0 = Instant::now();
    let (r, out) = runner::execute(&raw, &opts)?;
    let runtime = t0.elapsed().as_secs_f64();
    let fp = config::fingerprint(&r);
    let row = report::report_row(&name, &raw, Some((&r, &out, &fp)), "ok", runtime);
    report::write_report(&cli.out.join("report.csv"), &[row])?;
    println!("fingerprint = {fp}");
    print_outcome(&out);
    println!("wrote {}: report.csv", cli.out.display());
    Ok(())
}

fn echo_solve(cli: &Cli) -> Result<()> {
    let (_, raw) = load(cli)?;
    ensure_out(&cli.out)?;
    let r = resolve(&raw)?;
    let EchoKind::Multibeat(plan) = &r.echo else {
        bail!("echo-solve needs echo = \"multibeat\" in the config");
    };
    let sol = r.tones.as_ref().expect("multibeat resolution carries its solution");
    let mut cfg = r.cfg.clone();
    if let Some(s) = cli.dt_scale {
        if !(s > 0.0) {
            bail!("--dt-scale must be positive");
        }
        cfg.dt_scale = s;
    }
    let audit = verify_plan(&cfg, plan)?;
    report::write_tones(&cli.out.join("tones.csv"), plan)?;
    plots::tones_script(&cli.out)?;
    println!("tones = {}", plan.tones.len());
    println!("beat_period_s = {:.12e}", plan.t_mb);
    println!("beat_periods = {}", plan.k2);
    println!("residual_phase_rad = {:.12e}", sol.residual_phase);
    println!("residual_disp = {:.12e}", sol.residual_disp);
    println!("iterations = {}", sol.iterations);
    println!("audit_max_leak = {:.12e}", audit.max_leak);
    println!("audit_max_phase_err_rad = {:.12e}", audit.max_phase_err);
    println!("wrote {}: tones.csv, plot_tones.gp", cli.out.display());
    Ok(())
}

fn set_param(raw: &mut RawConfig, key: &str, v: f64) -> Result<()> {
    match key {
        "J_khz" => raw.j_khz = Some(v),
        "omega_rabi_khz" => raw.omega_rabi_khz = Some(v),
        "g_khz" => raw.g_khz = Some(v),
        "ratio_J_over_g" => raw.ratio_j_over_g = Some(v),
        "delta_cm_khz" => raw.delta_cm_khz = v,
        "omega_cm_khz" => raw.omega_cm_khz = v,
        "eta_cm_per_ion" => raw.eta_cm_per_ion = v,
        "nbar_cm" => raw.nbar_cm = v,
        "t_a_us" => raw.t_a_us = Some(v),
        other => bail!(
            "cannot sweep {other}; numeric keys: J_khz, omega_rabi_khz, g_khz, \
             ratio_J_over_g, delta_cm_khz, omega_cm_khz, eta_cm_per_ion, nbar_cm, t_a_us"
        ),
    }
    Ok(())
}

fn sweep(cli: &Cli, param: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        bail!("--values needs at least one entry");
    }
    let (name, base) = load(cli)?;
    // Reject a bad key before burning worker time.
    set_param(&mut base.clone(), param, values[0])?;
    ensure_out(&cli.out)?;

    let workers = cli.workers.unwrap_or_else(|| {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    });
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .context("building worker pool")?;
    let opts =
        runner::RunOpts { dt_scale: cli.dt_scale, artifacts: false, convergence_check: false };

    let rows: Vec<(bool, Vec<String>)> = pool.install(|| {
        values
            .par_iter()
            .map(|&v| {
                let mut raw = base.clone();
                let t0 = Instant::now();
                let attempt =
                    set_param(&mut raw, param, v).and_then(|()| runner::execute(&raw, &opts));
                let runtime = t0.elapsed().as_secs_f64();
                match attempt {
                    Ok((r, out)) => {
                        let fp = config::fingerprint(&r);
                        (true, report::report_row(&name, &raw, Some((&r, &out, &fp)), "ok", runtime))
                    }
                    Err(e) => {
                        (false, report::report_row(&name, &raw, None, &format!("{e:#}"), runtime))
                    }
                }
            })
            .collect()
    });

    let flat: Vec<Vec<String>> = rows.iter().map(|(_, row)| row.clone()).collect();
    report::write_report(&cli.out.join("report.csv"), &flat)?;
    plots::sweep_script(&cli.out, param)?;
    let ok = rows.iter().filter(|(good, _)| *good).count();
    println!("sweep {param}: {ok} ok, {} failed over {} values", rows.len() - ok, rows.len());
    println!("wrote {}: report.csv, plot_sweep.gp", cli.out.display());
    Ok(())
}

//! Run-record serialization. Every numeric interchange file is CSV with a
//! versioned `#` schema comment on the first line; floats print as
//! `{:.12e}` so repeated runs are byte-identical. The wall-time column is
//! deliberately last: it is the one field determinism checks must skip.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use itoffoli::crystal::ModeSet;
use itoffoli::evolution::{EchoKind, MultibeatPlan, SequenceRun};
use itoffoli::hamiltonians::GateConfig;
use itoffoli::hilbert::CMat;
use itoffoli::presets::{EchoKey, FockNmax, RawConfig, Resolved, TaMode};
use std::f64::consts::TAU;

use crate::runner::Outcome;

pub const REPORT_SCHEMA: &str = "# itoffoli report schema v1";

pub const REPORT_COLUMNS: &[&str] = &[
    "preset",
    "fingerprint",
    "status",
    "n_ions",
    "omega_cm_khz",
    "delta_cm_khz",
    "eta_cm_per_ion",
    "J_khz",
    "omega_rabi_khz",
    "g_khz",
    "ratio_J_over_g",
    "t_a_mode",
    "t_a_us",
    "mode_set",
    "echo",
    "nbar_cm",
    "fock_nmax",
    "k1",
    "k2",
    "nu_khz",
    "g_drive_khz",
    "lambda_c",
    "tau_g_us",
    "t_a_us_used",
    "j_design_khz",
    "k2_used",
    "n_max",
    "dt_us",
    "thermal_n_top",
    "conv_delta_fbar",
    "fbar",
    "max_leakage",
    "max_residual_phase_rad",
    "runtime_s",
];

fn sci(v: f64) -> String {
    format!("{v:.12e}")
}

fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

/// One report row. `done` carries the resolved run and its outcome;
/// failures leave it `None` and put the reason in `status`.
pub fn report_row(
    preset: &str,
    raw: &RawConfig,
    done: Option<(&Resolved, &Outcome, &str)>,
    status: &str,
    runtime_s: f64,
) -> Vec<String> {
    let mut row = Vec::with_capacity(REPORT_COLUMNS.len());
    row.push(preset.to_string());
    row.push(done.map(|(_, _, fp)| fp.to_string()).unwrap_or_default());
    row.push(status.replace(['\n', '\r'], "; "));
    row.push(raw.n_ions.to_string());
    row.push(raw.omega_cm_khz.to_string());
    row.push(raw.delta_cm_khz.to_string());
    row.push(raw.eta_cm_per_ion.to_string());
    row.push(opt(&raw.j_khz));
    row.push(opt(&raw.omega_rabi_khz));
    row.push(opt(&raw.g_khz));
    row.push(opt(&raw.ratio_j_over_g));
    row.push(
        match raw.t_a_mode {
            TaMode::EqualTauG => "equal_tau_g",
            TaMode::Explicit => "explicit",
        }
        .into(),
    );
    row.push(opt(&raw.t_a_us));
    row.push(
        match raw.mode_set {
            ModeSet::CmOnly => "cm_only",
            ModeSet::AllAxial => "all_axial",
        }
        .into(),
    );
    row.push(
        match raw.echo {
            EchoKey::None => "none",
            EchoKey::SignFlip => "sign_flip",
            EchoKey::Multibeat => "multibeat",
        }
        .into(),
    );
    row.push(raw.nbar_cm.to_string());
    row.push(match &raw.fock_nmax {
        FockNmax::Count(c) => c.to_string(),
        FockNmax::Word(w) => w.clone(),
    });
    row.push(raw.k1.to_string());
    row.push(opt(&raw.k2));

    match done {
        Some((r, out, _)) => {
            let cfg = &r.cfg;
            row.push(sci(cfg.nu / TAU / 1e3));
            row.push(sci(cfg.g_drive / TAU / 1e3));
            row.push(sci(cfg.lambda_c));
            row.push(sci(cfg.tau_g * 1e6));
            row.push(sci(cfg.t_a * 1e6));
            row.push(sci(r.j_design / TAU / 1e3));
            row.push(match &r.echo {
                EchoKind::Multibeat(plan) => plan.k2.to_string(),
                _ => String::new(),
            });
            row.push(r.n_max.to_string());
            row.push(sci(out.dt * 1e6));
            row.push(out.thermal_n_top.map(|n| n.to_string()).unwrap_or_default());
            row.push(out.conv_delta.map(sci).unwrap_or_default());
            row.push(sci(out.fbar));
            row.push(sci(out.max_leakage));
            row.push(sci(out.max_residual_phase));
        }
        None => row.extend(std::iter::repeat_n(String::new(), 14)),
    }
    row.push(format!("{runtime_s:.3}"));
    debug_assert_eq!(row.len(), REPORT_COLUMNS.len());
    row
}

pub fn write_report(path: &Path, rows: &[Vec<String>]) -> Result<()> {
    let mut file =
        File::create(path).with_context(|| format!("creating {}", path.display()))?;
    writeln!(file, "{REPORT_SCHEMA}")?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(REPORT_COLUMNS)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// One CSV per traced vacuum-start input: time, both quadratures of every
/// mode (x = a + a†, p = i(a† - a), gate frame), and the target-ion Bloch
/// vector. Returns the files written.
pub fn write_traces(dir: &Path, cfg: &GateConfig, run: &SequenceRun) -> Result<Vec<String>> {
    let n_modes = cfg.modes.len();
    let mut written = Vec::new();
    for series in &run.traces {
        if series.init.iter().any(|&k| k != 0) {
            continue;
        }
        let bits: String = (0..cfg.n_ions)
            .map(|i| if series.input >> (cfg.n_ions - 1 - i) & 1 == 1 { '1' } else { '0' })
            .collect();
        let name = format!("trace_{bits}.csv");
        let path = dir.join(&name);
        let mut file =
            File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        writeln!(file, "# itoffoli trace schema v1, input |{bits}>")?;
        let mut w = csv::Writer::from_writer(file);
        let mut header = vec!["t_s".to_string()];
        for m in 0..n_modes {
            header.push(format!("x_{m}"));
            header.push(format!("p_{m}"));
        }
        header.extend(["sx", "sy", "sz"].map(String::from));
        w.write_record(&header)?;
        for s in &series.samples {
            let mut rec = vec![sci(s.t)];
            for a in &s.mode_amps {
                rec.push(sci(2.0 * a.re));
                rec.push(sci(2.0 * a.im));
            }
            rec.extend(s.bloch.iter().map(|&b| sci(b)));
            w.write_record(&rec)?;
        }
        w.flush()?;
        written.push(name);
    }
    Ok(written)
}

/// Real block, blank line, imaginary block; gnuplot reads them as matrix
/// datasets 0 and 1.
pub fn write_unitary(path: &Path, u: &CMat) -> Result<()> {
    let mut file =
        File::create(path).with_context(|| format!("creating {}", path.display()))?;
    writeln!(file, "# itoffoli process unitary schema v1, dim {}", u.nrows())?;
    writeln!(file, "# real part")?;
    for i in 0..u.nrows() {
        let cells: Vec<String> = (0..u.ncols()).map(|j| format!("{:+.12e}", u[(i, j)].re)).collect();
        writeln!(file, "{}", cells.join(" "))?;
    }
    writeln!(file)?;
    writeln!(file, "# imaginary part")?;
    for i in 0..u.nrows() {
        let cells: Vec<String> = (0..u.ncols()).map(|j| format!("{:+.12e}", u[(i, j)].im)).collect();
        writeln!(file, "{}", cells.join(" "))?;
    }
    Ok(())
}

pub fn write_tones(path: &Path, plan: &MultibeatPlan) -> Result<()> {
    let mut file =
        File::create(path).with_context(|| format!("creating {}", path.display()))?;
    writeln!(file, "# itoffoli tones schema v1, t_mb_s {:.12e}, k2 {}", plan.t_mb, plan.k2)?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["tone", "mu_khz", "amp_khz"])?;
    for (k, tone) in plan.tones.iter().enumerate() {
        w.write_record(&[k.to_string(), sci(tone.mu / TAU / 1e3), sci(tone.amp / TAU / 1e3)])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use itoffoli::presets::preset;

    /// Rows line up with the header, raw keys echo verbatim, and the
    /// wall-time column stays last.
    #[test]
    fn failure_rows_keep_the_schema_shape() {
        let raw = preset("fig2").unwrap();
        let row = report_row("fig2", &raw, None, "boom\nsecond line", 1.25);
        assert_eq!(row.len(), REPORT_COLUMNS.len());
        assert_eq!(*REPORT_COLUMNS.last().unwrap(), "runtime_s");
        assert_eq!(row.last().unwrap(), "1.250");
        assert_eq!(row[2], "boom; second line");
        let j_col = REPORT_COLUMNS.iter().position(|&c| c == "J_khz").unwrap();
        assert_eq!(row[j_col], "2");
        let fbar_col = REPORT_COLUMNS.iter().position(|&c| c == "fbar").unwrap();
        assert!(row[fbar_col].is_empty());
    }
}

//! One full gate evaluation: resolve, propagate, assess. Handles the
//! thermal-average pipeline for hot starts and the Fock-cutoff recheck.

use anyhow::{bail, Result};
use itoffoli::analysis::{
    assess, average_fidelity, motional_leakage, process_unitary, thermal_average, thermal_weights,
};
use itoffoli::evolution::{engine_dt, itoffoli_sequence, SequenceRun};
use itoffoli::hilbert::CMat;
use itoffoli::presets::{resolve, FockNmax, RawConfig, Resolved};
use itoffoli::spinmodel::ideal_itoffoli;

pub struct RunOpts {
    pub dt_scale: Option<f64>,
    /// Record observable traces and the process unitary.
    pub artifacts: bool,
    /// Re-run with two extra Fock levels per mode and record the fidelity
    /// shift. Only applies to vacuum starts with an automatic cutoff.
    pub convergence_check: bool,
}

pub struct Outcome {
    pub fbar: f64,
    pub max_leakage: f64,
    pub max_residual_phase: f64,
    /// |fbar(n_max + 2) - fbar(n_max)| when the recheck ran.
    pub conv_delta: Option<f64>,
    /// Engine step used for the main arm, s.
    pub dt: f64,
    /// Highest initial CM level in the thermal average, if one ran.
    pub thermal_n_top: Option<usize>,
    pub run: Option<SequenceRun>,
    pub unitary: Option<CMat>,
}

/// Truncation of the geometric occupation distribution: lowest level
/// count whose forfeited tail stays under 1e-3 of the mass.
fn thermal_top(nbar: f64) -> usize {
    let q = nbar / (1.0 + nbar);
    let mut n_top = 4usize;
    while q.powi(n_top as i32 + 1) >= 1e-3 && n_top < 30 {
        n_top += 1;
    }
    n_top
}

pub fn execute(raw: &RawConfig, opts: &RunOpts) -> Result<(Resolved, Outcome)> {
    let r = resolve(raw)?;
    let mut cfg = r.cfg.clone();
    if let Some(s) = opts.dt_scale {
        if !(s > 0.0) {
            bail!("--dt-scale must be positive");
        }
        cfg.dt_scale = s;
    }
    let dt = engine_dt(&cfg);
    let ideal = ideal_itoffoli(cfg.n_ions, cfg.target);
    let vacuum = vec![0usize; cfg.modes.len()];

    let mut inits = vec![vacuum.clone()];
    let mut thermal_n_top = None;
    if r.nbar_cm > 0.0 {
        let n_top = thermal_top(r.nbar_cm);
        // Resolved dims are sized for vacuum starts; the hottest start
        // needs its own headroom on top.
        cfg.fock_dims[0] += n_top + 1;
        inits = (0..=n_top).map(|k| { let mut v = vacuum.clone(); v[0] = k; v }).collect();
        thermal_n_top = Some(n_top);
    }

    let stride = if opts.artifacts {
        let steps = (cfg.total_time() / dt).ceil().max(1.0);
        Some(((steps / 800.0).ceil() as usize).max(1))
    } else {
        None
    };
    let run = itoffoli_sequence(&cfg, &r.echo, &inits, stride)?;

    let report = assess(&run, &cfg, &ideal, &inits[0]);
    let mut fbar = report.fbar;
    let mut max_leakage = report.max_leakage;
    let max_residual_phase = report
        .residual_phases
        .iter()
        .map(|&(_, p)| p.abs())
        .fold(0.0f64, f64::max);

    if let Some(n_top) = thermal_n_top {
        let fbars: Vec<f64> = inits
            .iter()
            .map(|init| average_fidelity(&run, &cfg, &ideal, init))
            .collect();
        let (weights, _tail) = thermal_weights(r.nbar_cm, n_top);
        fbar = thermal_average(&fbars, &weights);
        for init in &inits[1..] {
            let worst = motional_leakage(&run, &cfg, init).into_iter().fold(0.0f64, f64::max);
            max_leakage = max_leakage.max(worst);
        }
    }

    let mut conv_delta = None;
    let auto_cutoff = matches!(raw.fock_nmax, FockNmax::Word(_));
    if opts.convergence_check && auto_cutoff && thermal_n_top.is_none() {
        let mut wide = cfg.clone();
        for d in &mut wide.fock_dims {
            *d += 2;
        }
        let wide_run = itoffoli_sequence(&wide, &r.echo, &[vacuum.clone()], None)?;
        let wide_f = average_fidelity(&wide_run, &wide, &ideal, &vacuum);
        conv_delta = Some((wide_f - fbar).abs());
    }

    let unitary = opts.artifacts.then(|| process_unitary(&run, &cfg, &inits[0]));
    Ok((
        r,
        Outcome {
            fbar,
            max_leakage,
            max_residual_phase,
            conv_delta,
            dt,
            thermal_n_top,
            run: opts.artifacts.then_some(run),
            unitary,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Colder distributions truncate earlier; the forfeited tail is under
    /// the 1e-3 budget at the returned level count.
    #[test]
    fn thermal_truncation_respects_the_tail_budget() {
        for nbar in [0.1, 0.5, 1.0, 2.5] {
            let n_top = thermal_top(nbar);
            let q: f64 = nbar / (1.0 + nbar);
            assert!(q.powi(n_top as i32 + 1) < 1e-3 || n_top == 30);
        }
        assert!(thermal_top(0.1) <= thermal_top(1.0));
        assert!(thermal_top(1.0) <= thermal_top(2.5));
    }
}

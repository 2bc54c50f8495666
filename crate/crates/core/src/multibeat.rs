//! Engineered multi-tone echo combs.
//!
//! After the driven arm, every spin configuration still carries phases
//! from the phonon-mediated couplings, one contribution per mode
//! proportional to the square of that mode's collective coupling. A
//! mirrored second arm can only rewind all of them at once when a single
//! mode dominates. The comb handles the general case: undriven tones on
//! the harmonics of a short beat period, with amplitudes solved so that
//! each period hands back exactly the per-mode phase the gate arm loses
//! per period of plateau time, while every mode's phase-space loop closes.
//! Both arms share the same envelope, so the per-period balance carries
//! over to the ramped totals.
//!
//! Everything here is expressed per unit of the collective coupling w; the
//! engine reintroduces w per spin configuration when applying the step
//! factors. Amplitude unknowns are scaled as u = amp * t_mb so the
//! least-squares system is dimensionless and well conditioned.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::crystal::{IsingMatrix, ModeSpec};
use crate::error::{ModelError, Result};
use crate::evolution::{beat_only, tone_response, MultibeatPlan, Tone};
use crate::hamiltonians::{GateConfig, RampProfile};
use crate::hilbert::IM;
use crate::spinmodel::spin_of;

/// Tone amplitudes for one beat period plus solve diagnostics.
#[derive(Debug, Clone)]
pub struct ToneSolution {
    pub tones: Vec<Tone>,
    /// Largest per-mode phase miss after one period, rad.
    pub residual_phase: f64,
    /// Largest per-mode open displacement after one period.
    pub residual_disp: f64,
    pub iterations: usize,
}

/// Per-mode phase accumulation rates (rad/s at unit squared collective
/// coupling), read off the coupling matrix by projecting onto each mode's
/// Lamb-Dicke vector. The vectors are mutually orthogonal, so each
/// projection isolates that mode's prefactor exactly; a reconstruction
/// residual test keeps that assumption honest.
pub fn phase_rates(j: &IsingMatrix, modes: &[ModeSpec]) -> Vec<f64> {
    modes
        .iter()
        .map(|m| {
            let n = m.eta.len();
            let mut num = 0.0;
            let mut nrm = 0.0;
            for i in 0..n {
                nrm += m.eta[i] * m.eta[i];
                for k in 0..n {
                    num += m.eta[i] * j.mat[(i, k)] * m.eta[k];
                }
            }
            num / (nrm * nrm)
        })
        .collect()
}

/// Harmonics of 2 pi / t_mb considered for the comb: the mode band plus
/// two harmonics of margin on each side, minus tones landing within
/// 0.25 rad-per-period of any mode (those pump that mode nearly on
/// resonance and make the closure constraint ill-conditioned). Capped at
/// 24 tones, keeping the ones closest to the modes.
pub fn harmonic_grid(modes: &[ModeSpec], t_mb: f64) -> Vec<i64> {
    let lo = modes.iter().map(|m| m.omega).fold(f64::INFINITY, f64::min);
    let hi = modes.iter().map(|m| m.omega).fold(0.0f64, f64::max);
    let k_lo = ((lo * t_mb / TAU).floor() as i64 - 2).max(1);
    let k_hi = (hi * t_mb / TAU).ceil() as i64 + 2;
    let near = |k: i64| -> f64 {
        modes
            .iter()
            .map(|m| (m.omega - TAU * k as f64 / t_mb).abs())
            .fold(f64::INFINITY, f64::min)
    };
    let mut keep: Vec<i64> = (k_lo..=k_hi).filter(|&k| near(k) * t_mb >= 0.25).collect();
    if keep.len() > 24 {
        keep.sort_by(|&a, &b| near(a).total_cmp(&near(b)));
        keep.truncate(24);
        keep.sort_unstable();
    }
    keep
}

/// Response of each mode to the comb over one period, in the scaled
/// amplitudes: phase_m = u^T q_m u and closure_m = v_m . u. Built by
/// polarization of the same `tone_response` the stepper uses, so the
/// solved targets and the propagated dynamics cannot drift apart in
/// convention.
struct ResponseForms {
    q: Vec<DMatrix<f64>>,
    v: Vec<Vec<Complex64>>,
}

fn response_forms(modes: &[ModeSpec], harmonics: &[i64], t_mb: f64) -> ResponseForms {
    let kk = harmonics.len();
    let unit = IM * Complex64::new(0.5 / t_mb, 0.0);
    let mut q = Vec::with_capacity(modes.len());
    let mut v = Vec::with_capacity(modes.len());
    for mode in modes {
        let deltas: Vec<f64> = harmonics
            .iter()
            .map(|&k| mode.omega - TAU * k as f64 / t_mb)
            .collect();
        let mut qm = DMatrix::zeros(kk, kk);
        let mut vm = vec![Complex64::ZERO; kk];
        let mut wts = vec![Complex64::ZERO; kk];
        for a in 0..kk {
            wts[a] = unit;
            let (za, ta) = tone_response(&deltas, &wts, t_mb);
            wts[a] = Complex64::ZERO;
            qm[(a, a)] = ta;
            vm[a] = za;
        }
        for a in 0..kk {
            for b in (a + 1)..kk {
                wts[a] = unit;
                wts[b] = unit;
                let (_, tab) = tone_response(&deltas, &wts, t_mb);
                wts[a] = Complex64::ZERO;
                wts[b] = Complex64::ZERO;
                let cross = 0.5 * (tab - qm[(a, a)] - qm[(b, b)]);
                qm[(a, b)] = cross;
                qm[(b, a)] = cross;
            }
        }
        q.push(qm);
        v.push(vm);
    }
    ResponseForms { q, v }
}

/// Solve the comb amplitudes so one beat period imprints `targets[m]` rad
/// of squared-coupling phase on mode m with zero net displacement.
///
/// Levenberg-Marquardt from a deterministic start (one tone per mode, the
/// nearest harmonic whose single-tone phase carries the target's sign).
/// Amplitudes are signed. Residual infinity norm below 1e-9 counts as
/// solved; below 1e-6 is accepted with a warning; anything worse is an
/// error, since a comb that misses its phases corrupts the very states
/// the echo is supposed to protect.
pub fn solve_amplitudes(
    modes: &[ModeSpec],
    harmonics: &[i64],
    targets: &[f64],
    t_mb: f64,
) -> Result<ToneSolution> {
    assert_eq!(modes.len(), targets.len(), "one target per mode");
    let kk = harmonics.len();
    let mm = modes.len();
    if kk == 0 {
        return Err(ModelError::ToneSolve("empty tone grid".into()));
    }
    let forms = response_forms(modes, harmonics, t_mb);

    let mut u: DVector<f64> = DVector::zeros(kk);
    let mut claimed = vec![false; kk];
    for (m, &th) in targets.iter().enumerate() {
        if th.abs() < 1e-12 {
            continue;
        }
        let mut best: Option<usize> = None;
        for k in 0..kk {
            if claimed[k] || forms.q[m][(k, k)] * th <= 0.0 {
                continue;
            }
            let dist = (modes[m].omega - TAU * harmonics[k] as f64 / t_mb).abs();
            let better = match best {
                None => true,
                Some(b) => dist < (modes[m].omega - TAU * harmonics[b] as f64 / t_mb).abs(),
            };
            if better {
                best = Some(k);
            }
        }
        let Some(k) = best else {
            return Err(ModelError::ToneSolve(format!(
                "no free tone with the right phase sign for mode {m}"
            )));
        };
        claimed[k] = true;
        u[k] = (th / forms.q[m][(k, k)]).sqrt();
    }

    let residual = |u: &DVector<f64>| -> DVector<f64> {
        let mut r = DVector::zeros(3 * mm);
        for m in 0..mm {
            r[m] = (u.transpose() * &forms.q[m] * u)[(0, 0)] - targets[m];
            let z: Complex64 = forms.v[m]
                .iter()
                .zip(u.iter())
                .map(|(vk, &uk)| vk * uk)
                .sum();
            r[mm + 2 * m] = z.re;
            r[mm + 2 * m + 1] = z.im;
        }
        r
    };
    let jacobian = |u: &DVector<f64>| -> DMatrix<f64> {
        let mut j = DMatrix::zeros(3 * mm, kk);
        for m in 0..mm {
            let g = &forms.q[m] * u * 2.0;
            for k in 0..kk {
                j[(m, k)] = g[k];
                j[(mm + 2 * m, k)] = forms.v[m][k].re;
                j[(mm + 2 * m + 1, k)] = forms.v[m][k].im;
            }
        }
        j
    };

    let mut r = residual(&u);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    while r.amax() >= 1e-9 && iterations < 500 && lambda < 1e15 {
        iterations += 1;
        let jac = jacobian(&u);
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &r;
        let dmax = (0..kk).map(|i| jtj[(i, i)]).fold(0.0f64, f64::max).max(1e-300);
        loop {
            let mut a = jtj.clone();
            for i in 0..kk {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-12 * dmax);
            }
            let Some(ch) = a.cholesky() else {
                lambda *= 10.0;
                if lambda >= 1e15 {
                    break;
                }
                continue;
            };
            let h = ch.solve(&(-&jtr));
            let trial = &u + &h;
            let rt = residual(&trial);
            if rt.norm_squared() < r.norm_squared() {
                u = trial;
                r = rt;
                lambda = (lambda * 0.3).max(1e-14);
                break;
            }
            lambda *= 10.0;
            if lambda >= 1e15 {
                break;
            }
        }
    }

    let residual_phase = (0..mm).map(|m| r[m].abs()).fold(0.0f64, f64::max);
    let residual_disp = (0..mm)
        .map(|m| (r[mm + 2 * m].powi(2) + r[mm + 2 * m + 1].powi(2)).sqrt())
        .fold(0.0f64, f64::max);
    let worst = residual_phase.max(residual_disp);
    if worst >= 1e-6 {
        return Err(ModelError::ToneSolve(format!(
            "comb residual {worst:.2e} after {iterations} iterations"
        )));
    }
    if worst >= 1e-9 {
        log::warn!("comb residual {worst:.2e} is above the 1e-9 target");
    }
    let tones = harmonics
        .iter()
        .zip(u.iter())
        .map(|(&k, &uk)| Tone { mu: TAU * k as f64 / t_mb, amp: uk / t_mb })
        .collect();
    Ok(ToneSolution { tones, residual_phase, residual_disp, iterations })
}

/// Full comb pipeline for a gate configuration: beat period spanning `k1`
/// cycles of the lowest mode, commensuration check against the envelope,
/// per-mode targets from the coupling matrix, grid, solve.
pub fn build_plan(cfg: &GateConfig, k1: usize) -> Result<(MultibeatPlan, ToneSolution)> {
    if k1 == 0 {
        return Err(ModelError::Config("k1 must be positive".into()));
    }
    let omega_low = cfg.modes.iter().map(|m| m.omega).fold(f64::INFINITY, f64::min);
    let t_mb = TAU * k1 as f64 / omega_low;
    let total = cfg.total_time();
    let periods = total / t_mb;
    let k2 = periods.round();
    if k2 < 1.0 || (periods - k2).abs() > 1e-6 {
        return Err(ModelError::Config(format!(
            "sequence length {total:.6e} s spans {periods:.6} beat periods; \
             adjust t_a so this is an integer"
        )));
    }
    let rates = phase_rates(&IsingMatrix::from_modes(&cfg.modes, cfg.omega_rabi), &cfg.modes);
    let targets: Vec<f64> = rates.iter().map(|c| c * t_mb).collect();
    let harmonics = harmonic_grid(&cfg.modes, t_mb);
    let sol = solve_amplitudes(&cfg.modes, &harmonics, &targets, t_mb)?;
    let plan = MultibeatPlan {
        t_mb,
        k2: k2 as usize,
        tones: sol.tones.clone(),
        ramp: cfg.schedule().ramp,
    };
    Ok((plan, sol))
}

/// Worst-case results of a stepped single-period audit of a comb.
#[derive(Debug, Clone, Copy)]
pub struct EchoCheck {
    /// Largest 1 - |<init|final>|^2 over spin configurations.
    pub max_leak: f64,
    /// Largest phase distance from the engineered target, rad.
    pub max_phase_err: f64,
}

/// Propagate one rectangular beat period through the engine (carrier
/// offset disabled) and compare every spin configuration's vacuum return
/// amplitude and phase against the per-mode targets. Catches convention
/// drift between the solver and the stepper; tolerances are the caller's
/// business. The rectangular envelope keeps every step factor exact, so
/// the audit runs on a coarse step without losing accuracy.
pub fn verify_plan(cfg: &GateConfig, plan: &MultibeatPlan) -> Result<EchoCheck> {
    let mut probe = cfg.clone();
    probe.nu = 0.0;
    probe.dt_scale = cfg.dt_scale.max(1.0) * 50.0;
    let rect = MultibeatPlan {
        t_mb: plan.t_mb,
        k2: 1,
        tones: plan.tones.clone(),
        ramp: RampProfile::rectangular(plan.t_mb),
    };
    let rates = phase_rates(&IsingMatrix::from_modes(&probe.modes, probe.omega_rabi), &probe.modes);
    let run = beat_only(&probe, &rect, 1.0, &[vec![0; probe.modes.len()]])?;
    let n = probe.n_ions;
    let bit = 1usize << (n - 1 - probe.target);
    let mut check = EchoCheck { max_leak: 0.0, max_phase_err: 0.0 };
    for col in &run.columns {
        let x = col.input;
        let branch = if x & bit == 0 { &col.lo } else { &col.hi };
        let overlap = branch[0];
        let mut want = 0.0;
        for (m, mode) in probe.modes.iter().enumerate() {
            let w: f64 = (0..n).map(|i| mode.eta[i] * spin_of(x, i, n)).sum();
            want += rates[m] * plan.t_mb * w * w;
        }
        check.max_leak = check.max_leak.max(1.0 - overlap.norm_sqr());
        check.max_phase_err = check.max_phase_err.max(wrap_phase(overlap.arg() - want).abs());
    }
    Ok(check)
}

fn wrap_phase(x: f64) -> f64 {
    x - TAU * (x / TAU).round()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crystal::{select_modes, CrystalModel, ModeSet};
    use crate::evolution::{evolve_dense, mu_only};
    use crate::hamiltonians::Schedule;
    use crate::hilbert::{basis_state, displacement, ladder, CompositeSpace};

    fn synth_mode(omega: f64) -> ModeSpec {
        ModeSpec { omega, delta: 0.0, eta: vec![0.1] }
    }

    /// Brute force the full propagator of H(t) = w (A a† + A* a) with
    /// A(t) = i/2 sum_k amp_k e^{i delta_k t} and pin both outputs of
    /// `tone_response` against it, signs included. Everything downstream
    /// trusts these two numbers.
    #[test]
    fn dense_propagator_pins_phase_and_displacement_signs() {
        let dim = 30;
        let deltas = [9.0e4, -5.5e4, 1.7e5];
        let amps = [3.0e4, 2.2e4, 1.4e4];
        let t_end = 6.0e-5;
        let a = ladder(dim);
        let ad = a.adjoint();
        let space = CompositeSpace::new(0, vec![dim]);
        let vac = basis_state(&space, 0, &[0]);

        let weighted: Vec<Complex64> = amps
            .iter()
            .map(|&om| IM * Complex64::new(0.5 * om, 0.0))
            .collect();
        let (zeta, theta) = tone_response(&deltas, &weighted, t_end);

        for w in [1.0, -0.7] {
            let got = evolve_dense(
                |t| {
                    let mut a_of_t = Complex64::ZERO;
                    for (k, &dk) in deltas.iter().enumerate() {
                        a_of_t += weighted[k] * Complex64::from_polar(1.0, dk * t);
                    }
                    (&ad * a_of_t + &a * a_of_t.conj()) * Complex64::new(w, 0.0)
                },
                0.0,
                t_end,
                6000,
                &vac,
            );
            let want = displacement(dim, zeta * w)
                * &vac
                * Complex64::from_polar(1.0, theta * w * w);
            for i in 0..dim {
                assert!(
                    (got[i] - want[i]).norm() < 1e-6,
                    "w {w}: component {i}: {} vs {}",
                    got[i],
                    want[i]
                );
            }
        }
    }

    #[test]
    fn per_period_response_scales_correctly() {
        let deltas = [8.3e4, -4.1e4];
        let base: Vec<Complex64> = [2.0e4, 3.1e4]
            .iter()
            .map(|&om| IM * Complex64::new(0.5 * om, 0.0))
            .collect();
        let doubled: Vec<Complex64> = base.iter().map(|&x| 2.0 * x).collect();
        let t = 7.0e-6;
        let (z1, t1) = tone_response(&deltas, &base, t);
        let (z2, t2) = tone_response(&deltas, &doubled, t);
        assert!((z2 - 2.0 * z1).norm() < 1e-12 * z1.norm());
        assert!((t2 - 4.0 * t1).abs() < 1e-12 * t1.abs());
    }

    /// Composing the per-period factors with D(a)D(b) = e^{i Im(a b*)}
    /// D(a+b) must reproduce the whole-window response. This is the same
    /// identity the engine exploits when it steps through a period in
    /// many small exact windows.
    #[test]
    fn multi_period_response_composes_by_displacement_algebra() {
        let deltas = [8.3e4, -4.1e4];
        let amps = [2.0e4, 3.1e4];
        let t_mb = 7.0e-6;
        let whole: Vec<Complex64> = amps
            .iter()
            .map(|&om| IM * Complex64::new(0.5 * om, 0.0))
            .collect();
        let (z_all, t_all) = tone_response(&deltas, &whole, 3.0 * t_mb);

        let mut z_acc = Complex64::ZERO;
        let mut t_acc = 0.0;
        for j in 0..3 {
            let shifted: Vec<Complex64> = whole
                .iter()
                .zip(&deltas)
                .map(|(&wk, &dk)| wk * Complex64::from_polar(1.0, dk * j as f64 * t_mb))
                .collect();
            let (zj, tj) = tone_response(&deltas, &shifted, t_mb);
            t_acc += tj + (zj * z_acc.conj()).im;
            z_acc += zj;
        }
        assert!((z_acc - z_all).norm() < 1e-12 * (1.0 + z_all.norm()));
        assert!((t_acc - t_all).abs() < 1e-12 * (1.0 + t_all.abs()));
    }

    #[test]
    fn quadratic_forms_match_tone_response() {
        let modes = vec![synth_mode(TAU * 1.0e6), synth_mode(TAU * 1.7e6)];
        let t_mb = 5.0e-6;
        let harmonics = [4i64, 6, 7, 9];
        let forms = response_forms(&modes, &harmonics, t_mb);
        let u = DVector::from_vec(vec![3.1, -1.2, 0.4, 2.2]);
        for (m, mode) in modes.iter().enumerate() {
            let deltas: Vec<f64> = harmonics
                .iter()
                .map(|&k| mode.omega - TAU * k as f64 / t_mb)
                .collect();
            let weighted: Vec<Complex64> = u
                .iter()
                .map(|&uk| IM * Complex64::new(0.5 * uk / t_mb, 0.0))
                .collect();
            let (zeta, theta) = tone_response(&deltas, &weighted, t_mb);
            let phase = (u.transpose() * &forms.q[m] * &u)[(0, 0)];
            let closure: Complex64 = forms.v[m]
                .iter()
                .zip(u.iter())
                .map(|(vk, &uk)| vk * uk)
                .sum();
            assert!((phase - theta).abs() < 1e-10 * (1.0 + theta.abs()));
            assert!((closure - zeta).norm() < 1e-10 * (1.0 + zeta.norm()));
        }
    }

    /// The projection route to the per-mode rates must agree with the
    /// direct prefactors and reassemble the full coupling matrix.
    #[test]
    fn mode_projection_recovers_per_mode_rates() {
        let crystal = CrystalModel::axial(5).unwrap();
        let modes = select_modes(&crystal, TAU * 1.2e6, -TAU * 8.0e4, 0.08, ModeSet::AllAxial);
        let omega_rabi = TAU * 3.0e5;
        let j = IsingMatrix::from_modes(&modes, omega_rabi);
        let rates = phase_rates(&j, &modes);
        let mut rebuilt = DMatrix::zeros(5, 5);
        for (m, mode) in modes.iter().enumerate() {
            let direct = omega_rabi * omega_rabi / (4.0 * mode.delta);
            assert!(
                (rates[m] - direct).abs() < 1e-10 * direct.abs(),
                "mode {m}: {} vs {}",
                rates[m],
                direct
            );
            for a in 0..5 {
                for b in 0..5 {
                    rebuilt[(a, b)] += rates[m] * mode.eta[a] * mode.eta[b];
                }
            }
        }
        let err = (&rebuilt - &j.mat).norm();
        assert!(err < 1e-10 * j.mat.norm(), "reconstruction residual {err:.2e}");
    }

    #[test]
    fn harmonic_grid_brackets_the_mode_band() {
        let crystal = CrystalModel::axial(3).unwrap();
        let modes = select_modes(&crystal, TAU * 1.0e6, -TAU * 2.0e5, 0.1, ModeSet::AllAxial);
        let grid = harmonic_grid(&modes, 5.0e-6);
        // Band 5 .. 12.04 widened by 2 each way; harmonic 5 sits on the
        // lowest mode and is excluded.
        assert_eq!(grid, vec![3, 4, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15]);
    }

    #[test]
    fn single_tone_amplitude_recovery() {
        let mode = synth_mode(TAU * 1.0e6);
        let t_mb = 5.0e-6;
        for (harmonic, target) in [(6i64, -0.9), (4i64, 0.9)] {
            let delta = mode.omega - TAU * harmonic as f64 / t_mb;
            let kd = crate::evolution::kernel_diag(delta, t_mb);
            let expect = (4.0 * target / kd).sqrt();
            let sol =
                solve_amplitudes(&[mode.clone()], &[harmonic], &[target], t_mb).unwrap();
            let got = sol.tones[0].amp;
            assert!(
                (got - expect).abs() < 1e-6 * expect.abs(),
                "harmonic {harmonic}: {got} vs {expect}"
            );
            assert!(sol.residual_phase < 1e-9);
            assert!(sol.residual_disp < 1e-9);
        }
    }

    /// The driven arm seen from the phonon frame is a single comb tone at
    /// the drive frequency. Run both pictures through their steppers and
    /// compare state vectors after rotating the gate-frame result across
    /// the junction.
    #[test]
    fn gate_arm_matches_single_tone_in_the_phonon_frame() {
        let omega = TAU * 1.0e6;
        let delta = TAU * 2.0e4;
        let omega_rabi = TAU * 5.0e4;
        let t_end = 8.0e-5;
        let cfg = GateConfig {
            n_ions: 2,
            target: 1,
            modes: vec![ModeSpec { omega, delta, eta: vec![0.1, 0.1] }],
            omega_rabi,
            nu: 0.0,
            g_nominal: 0.0,
            g_drive: 0.0,
            lambda_c: 1.0,
            t_a: t_end,
            tau_g: t_end,
            fock_dims: vec![14],
            dt_scale: 1.0,
        };
        let rect = RampProfile::rectangular(t_end);
        let mu_run = mu_only(&cfg, &Schedule::undriven(rect), 1.0, 1.0, &[vec![0]]).unwrap();
        let plan = MultibeatPlan {
            t_mb: t_end,
            k2: 1,
            tones: vec![Tone { mu: omega + delta, amp: omega_rabi }],
            ramp: rect,
        };
        let beat_run = beat_only(&cfg, &plan, 1.0, &[vec![0]]).unwrap();

        for (mc, bc) in mu_run.columns.iter().zip(&beat_run.columns) {
            assert_eq!(mc.input, bc.input);
            for (mu_vec, beat_vec) in [(&mc.lo, &bc.lo), (&mc.hi, &bc.hi)] {
                for k in 0..14 {
                    let junction = Complex64::from_polar(1.0, -delta * t_end * k as f64);
                    let diff = (mu_vec[k] * junction - beat_vec[k]).norm();
                    assert!(diff < 1e-8, "input {} fock {k}: diff {diff:.2e}", mc.input);
                }
            }
        }
    }

    /// End-to-end pipeline on a three-ion chain with all axial modes: the
    /// solve converges, the commensuration bookkeeping holds, and the
    /// stepped audit confirms phases and closure per spin configuration.
    #[test]
    fn engineered_comb_for_three_ion_chain_passes_stepped_audit() {
        let crystal = CrystalModel::axial(3).unwrap();
        let modes = select_modes(&crystal, TAU * 1.0e6, -TAU * 2.0e5, 0.1, ModeSet::AllAxial);
        let cfg = GateConfig {
            n_ions: 3,
            target: 2,
            modes,
            omega_rabi: TAU * 4.0e5,
            nu: 0.0,
            g_nominal: 0.0,
            g_drive: 0.0,
            lambda_c: 1.0,
            t_a: 1.05e-4,
            tau_g: 1.05e-4,
            fock_dims: vec![12, 10, 8],
            dt_scale: 1.0,
        };
        let (plan, sol) = build_plan(&cfg, 5).unwrap();
        assert_eq!(plan.k2, 63);
        assert_eq!(plan.tones.len(), 12);
        assert!(sol.residual_phase < 1e-9, "phase residual {:.2e}", sol.residual_phase);
        assert!(sol.residual_disp < 1e-9, "closure residual {:.2e}", sol.residual_disp);

        let check = verify_plan(&cfg, &plan).unwrap();
        assert!(check.max_leak < 1e-4, "leak {:.2e}", check.max_leak);
        assert!(check.max_phase_err < 1e-2, "phase err {:.2e}", check.max_phase_err);
    }
}

//! Propagation paths for the gate sequence.
//!
//! Two integrators coexist. `evolve_dense` steps the full Hilbert space
//! with a midpoint matrix exponential and is the reference everything else
//! is checked against; it scales badly and only runs on deliberately small
//! spaces. `itoffoli_sequence` is the production path. For a basis-state
//! input the state never leaves the two spin configurations connected by
//! the target drive, so a run carries one pair of motional vectors per
//! input column. Every per-step factor is an exact exponential of the step
//! Hamiltonian with the envelope frozen at the step midpoint; the only
//! stepping errors are envelope curvature inside a step and the drive
//! split on the plateau, both of which the halving checks bound.
//!
//! Frames: the main sequence integrates in the frame rotating at the gate
//! drive frequency, where mode m carries the static detuning term
//! `-delta_m n_m`. The multi-tone echo integrates in the phonon frame; the
//! junction between the two is the diagonal `exp(-i delta_m t n_m)` per
//! mode. Reduced spin dynamics do not feel that final motional rotation,
//! so fidelities are frame-safe; trace output converts echo-segment mode
//! amplitudes back to the gate frame so plotted loops join up.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::error::{ModelError, Result};
use crate::hamiltonians::{GateConfig, RampProfile, Schedule};
use crate::hilbert::{
    basis_state, expect_ladder, expect_number, expm_hermitian, ladder, number, CMat,
    CompositeSpace, CVec, IM,
};
use crate::spinmodel::{magnetization, spin_of};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrotterOrder {
    First,
    Second,
}

/// One split step: apply A then B (first order), or the symmetric
/// A/2, B, A/2 sandwich. Reference helper for convergence tests; the
/// production engine builds its factors directly.
pub fn trotter_step(ha: &CMat, hb: &CMat, dt: f64, psi: &CVec, order: TrotterOrder) -> CVec {
    match order {
        TrotterOrder::First => expm_hermitian(hb, dt) * (expm_hermitian(ha, dt) * psi),
        TrotterOrder::Second => {
            let half = expm_hermitian(ha, 0.5 * dt);
            &half * (expm_hermitian(hb, dt) * (&half * psi))
        }
    }
}

/// Midpoint-exponential propagation of a time-dependent Hamiltonian.
pub fn evolve_dense<F: Fn(f64) -> CMat>(
    h_of_t: F,
    t0: f64,
    t1: f64,
    steps: usize,
    psi: &CVec,
) -> CVec {
    let dt = (t1 - t0) / steps as f64;
    let mut v = psi.clone();
    for k in 0..steps {
        let tm = t0 + (k as f64 + 0.5) * dt;
        v = expm_hermitian(&h_of_t(tm), dt) * v;
    }
    v
}

/// Step target for the dense path: resolve the ramp and the fastest mode
/// rotation explicitly.
pub fn spec_dt(cfg: &GateConfig) -> f64 {
    let dmax = cfg
        .modes
        .iter()
        .map(|m| m.delta.abs())
        .fold(0.0f64, f64::max);
    let mode_dt = if dmax > 0.0 {
        std::f64::consts::TAU / (50.0 * dmax)
    } else {
        f64::INFINITY
    };
    (cfg.t_a / 2000.0).min(mode_dt) * cfg.dt_scale
}

/// Step target for the structured engine. Mode detunings are folded into
/// exact per-step factors, so only the envelope segments set the scale.
pub fn profile_dt(ramp: &RampProfile, dt_scale: f64) -> f64 {
    let mut shortest = f64::INFINITY;
    for seg in [ramp.t_rise, ramp.t_hold, ramp.t_fall] {
        if seg > 0.0 {
            shortest = shortest.min(seg);
        }
    }
    assert!(shortest.is_finite(), "degenerate ramp with no extent");
    shortest / 2000.0 * dt_scale
}

pub fn engine_dt(cfg: &GateConfig) -> f64 {
    profile_dt(&cfg.schedule().ramp, cfg.dt_scale)
}

/// One echo drive tone: absolute frequency and signed amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tone {
    pub mu: f64,
    pub amp: f64,
}

/// Multi-tone echo segment. Tone phases are measured from the segment
/// start; `ramp` is normally a copy of the gate envelope so the engineered
/// phases scale with the same squared-envelope area they must cancel.
#[derive(Debug, Clone, PartialEq)]
pub struct MultibeatPlan {
    pub t_mb: f64,
    pub k2: usize,
    pub tones: Vec<Tone>,
    pub ramp: RampProfile,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EchoKind {
    None,
    /// Re-run the gate envelope with mode detunings and the carrier offset
    /// negated and the drive off. Physical for one mode, an idealized
    /// mirror spectrum otherwise.
    SignFlip,
    Multibeat(MultibeatPlan),
}

/// Final state of one input column: motional vectors attached to the two
/// spin configurations that differ in the target bit.
#[derive(Debug, Clone)]
pub struct PairColumn {
    pub input: usize,
    pub init: Vec<usize>,
    pub lo: CVec,
    pub hi: CVec,
}

#[derive(Debug, Clone)]
pub struct TraceSample {
    pub t: f64,
    /// Gate-frame <a_m> per mode.
    pub mode_amps: Vec<Complex64>,
    /// Target-ion (<sx>, <sy>, <sz>).
    pub bloch: [f64; 3],
}

#[derive(Debug, Clone)]
pub struct TraceSeries {
    pub input: usize,
    pub init: Vec<usize>,
    pub samples: Vec<TraceSample>,
}

#[derive(Debug)]
pub struct SequenceRun {
    pub columns: Vec<PairColumn>,
    pub traces: Vec<TraceSeries>,
    pub max_norm_drift: f64,
    pub steps_taken: usize,
}

/// Run the full sequence: ramped gate, then the selected echo, for every
/// spin basis input crossed with every initial motional occupation in
/// `inits`. `trace_stride` samples observables every that many steps.
pub fn itoffoli_sequence(
    cfg: &GateConfig,
    echo: &EchoKind,
    inits: &[Vec<usize>],
    trace_stride: Option<usize>,
) -> Result<SequenceRun> {
    let mut eng = Engine::new(cfg, inits, None, trace_stride)?;
    let dt = engine_dt(cfg);
    eng.run_mu(1.0, 1.0, &cfg.schedule(), dt)?;
    match echo {
        EchoKind::None => {}
        EchoKind::SignFlip => {
            let sched = Schedule::undriven(cfg.schedule().ramp);
            eng.run_mu(-1.0, -1.0, &sched, dt)?;
        }
        EchoKind::Multibeat(plan) => {
            eng.apply_gate_frame_junction();
            eng.run_beat(plan, -1.0, profile_dt(&plan.ramp, cfg.dt_scale))?;
        }
    }
    eng.finish()
}

/// Phonon population left behind by an undriven envelope, starting from
/// the motional ground state in the given spin configuration.
pub fn ramp_residual(cfg: &GateConfig, ramp: RampProfile, input: usize) -> Result<f64> {
    let vac = vec![0usize; cfg.modes.len()];
    let mut eng = Engine::new(cfg, &[vac], Some(vec![input]), None)?;
    eng.run_mu(1.0, 1.0, &Schedule::undriven(ramp), profile_dt(&ramp, cfg.dt_scale))?;
    let run = eng.finish()?;
    let col = &run.columns[0];
    let mspace = CompositeSpace::new(0, cfg.fock_dims.clone());
    let mut pop = 0.0;
    for m in 0..cfg.modes.len() {
        pop += expect_number(&mspace, &col.lo, m) + expect_number(&mspace, &col.hi, m);
    }
    Ok(pop)
}

struct PairMeta {
    m_lo: f64,
    m_hi: f64,
    w_lo: Vec<f64>,
    w_hi: Vec<f64>,
}

struct Engine<'a> {
    cfg: &'a GateConfig,
    mspace: CompositeSpace,
    dims: Vec<usize>,
    strides: Vec<usize>,
    columns: Vec<PairColumn>,
    meta: Vec<PairMeta>,
    /// Distinct coupling weights per mode over every live configuration.
    wclasses: Vec<Vec<f64>>,
    cache: FactorCache,
    traces: Vec<TraceSeries>,
    trace_stride: Option<usize>,
    step_count: usize,
    t_global: f64,
    /// While in the phonon frame, per-mode angle converting <a> back to
    /// the gate frame; None during gate-frame segments.
    beat_frame: bool,
    max_drift: f64,
    scratch: Vec<Complex64>,
}

struct FactorCache {
    stamp: (u64, u64),
    map: HashMap<(usize, u64), CMat>,
}

fn bits(x: f64) -> u64 {
    (if x == 0.0 { 0.0 } else { x }).to_bits()
}

impl FactorCache {
    fn new() -> Self {
        FactorCache { stamp: (0, 0), map: HashMap::new() }
    }

    fn reset_if_stale(&mut self, stamp: (u64, u64)) {
        if self.stamp != stamp {
            self.map.clear();
            self.stamp = stamp;
        }
    }
}

impl<'a> Engine<'a> {
    fn new(
        cfg: &'a GateConfig,
        inits: &[Vec<usize>],
        inputs: Option<Vec<usize>>,
        trace_stride: Option<usize>,
    ) -> Result<Self> {
        let n = cfg.n_ions;
        let n_modes = cfg.modes.len();
        if cfg.fock_dims.len() != n_modes {
            return Err(ModelError::Dimension(format!(
                "{} modes but {} Fock cutoffs",
                n_modes,
                cfg.fock_dims.len()
            )));
        }
        for m in &cfg.modes {
            if m.eta.len() != n {
                return Err(ModelError::Dimension(format!(
                    "mode has {} couplings for {} ions",
                    m.eta.len(),
                    n
                )));
            }
        }
        if cfg.target >= n {
            return Err(ModelError::Config(format!(
                "target ion {} out of range for {} ions",
                cfg.target, n
            )));
        }
        for init in inits {
            if init.len() != n_modes {
                return Err(ModelError::Dimension(format!(
                    "initial occupation lists {} modes, model has {}",
                    init.len(),
                    n_modes
                )));
            }
        }

        let mspace = CompositeSpace::new(0, cfg.fock_dims.clone());
        let dims = cfg.fock_dims.clone();
        let strides: Vec<usize> = (0..n_modes).map(|m| mspace.mode_stride(m)).collect();
        let l = mspace.fock_dim();
        let bit = 1usize << (n - 1 - cfg.target);

        let inputs: Vec<usize> = inputs.unwrap_or_else(|| (0..1usize << n).collect());
        let mut columns = Vec::new();
        let mut meta = Vec::new();
        for init in inits {
            for &x in &inputs {
                let lo_cfg = x & !bit;
                let hi_cfg = x | bit;
                let start = basis_state(&mspace, 0, init);
                let (lo, hi) = if x & bit == 0 {
                    (start, CVec::zeros(l))
                } else {
                    (CVec::zeros(l), start)
                };
                let w_of = |y: usize| -> Vec<f64> {
                    cfg.modes
                        .iter()
                        .map(|mode| {
                            (0..n).map(|i| mode.eta[i] * spin_of(y, i, n)).sum::<f64>()
                        })
                        .collect()
                };
                meta.push(PairMeta {
                    m_lo: magnetization(lo_cfg, n),
                    m_hi: magnetization(hi_cfg, n),
                    w_lo: w_of(lo_cfg),
                    w_hi: w_of(hi_cfg),
                });
                columns.push(PairColumn { input: x, init: init.clone(), lo, hi });
            }
        }

        let mut wclasses: Vec<Vec<f64>> = vec![Vec::new(); n_modes];
        for pm in &meta {
            for m in 0..n_modes {
                for w in [pm.w_lo[m], pm.w_hi[m]] {
                    if !wclasses[m].iter().any(|&x| bits(x) == bits(w)) {
                        wclasses[m].push(w);
                    }
                }
            }
        }

        let traces: Vec<TraceSeries> = columns
            .iter()
            .map(|c| TraceSeries { input: c.input, init: c.init.clone(), samples: Vec::new() })
            .collect();

        let max_d = dims.iter().copied().max().unwrap_or(1);
        let mut eng = Engine {
            cfg,
            mspace,
            dims,
            strides,
            columns,
            meta,
            wclasses,
            cache: FactorCache::new(),
            traces,
            trace_stride,
            step_count: 0,
            t_global: 0.0,
            beat_frame: false,
            max_drift: 0.0,
            scratch: vec![Complex64::ZERO; max_d],
        };
        eng.record_sample();
        Ok(eng)
    }

    /// Gate-frame segment: detuning term, envelope-scaled spin-phonon
    /// coupling and, inside the drive window, the symmetric drive split.
    /// `delta_sign`/`nu_sign` are -1 for the mirrored echo arm.
    fn run_mu(
        &mut self,
        delta_sign: f64,
        nu_sign: f64,
        schedule: &Schedule,
        dt_target: f64,
    ) -> Result<()> {
        self.beat_frame = false;
        let bounds = schedule.ramp.boundaries();
        let t_base = self.t_global;
        for seg in 0..3 {
            let (s0, s1) = (bounds[seg], bounds[seg + 1]);
            let len = s1 - s0;
            if len <= 0.0 {
                continue;
            }
            let n_steps = (len / dt_target).ceil().max(1.0) as usize;
            let dt = len / n_steps as f64;
            for k in 0..n_steps {
                let t_mid = s0 + (k as f64 + 0.5) * dt;
                let r = schedule.amp(t_mid);
                let driving = schedule.drive(t_mid) != 0.0 && self.cfg.g_drive != 0.0;
                if driving {
                    self.mu_factor_sweep(delta_sign, nu_sign, r, 0.5 * dt);
                    self.mix(0.5 * self.cfg.g_drive * dt);
                    self.mu_factor_sweep(delta_sign, nu_sign, r, 0.5 * dt);
                } else {
                    self.mu_factor_sweep(delta_sign, nu_sign, r, dt);
                }
                self.step_count += 1;
                self.t_global = t_base + s0 + (k as f64 + 1.0) * dt;
                self.maybe_record();
            }
            self.check_norms()?;
        }
        self.t_global = t_base + schedule.total();
        Ok(())
    }

    /// Apply the spin-diagonal step factor for duration `tau` at envelope
    /// value `r`: per mode the exact exponential of
    /// -s delta n + i (Omega r w / 2)(a^dag - a), plus the carrier phases.
    fn mu_factor_sweep(&mut self, delta_sign: f64, nu_sign: f64, r: f64, tau: f64) {
        self.cache.reset_if_stale((bits(r), bits(tau)));
        for m in 0..self.dims.len() {
            let delta = delta_sign * self.cfg.modes[m].delta;
            let d = self.dims[m];
            for wi in 0..self.wclasses[m].len() {
                let w = self.wclasses[m][wi];
                self.cache.map.entry((m, bits(w))).or_insert_with(|| {
                    let c = 0.5 * self.cfg.omega_rabi * r * w;
                    let a = ladder(d);
                    let mut h = number(d) * Complex64::new(-delta, 0.0);
                    h += (a.adjoint() - &a) * Complex64::new(0.0, c);
                    expm_hermitian(&h, tau)
                });
            }
        }
        // The carrier detuning tracks the coupling envelope (chirped tone),
        // so the driven pair stays degenerate through the ramps.
        let nu = nu_sign * self.cfg.nu * r * r;
        for ci in 0..self.columns.len() {
            for m in 0..self.dims.len() {
                let f_lo = &self.cache.map[&(m, bits(self.meta[ci].w_lo[m]))];
                apply_mode_matrix(
                    &mut self.columns[ci].lo,
                    self.dims[m],
                    self.strides[m],
                    f_lo,
                    &mut self.scratch,
                );
                let f_hi = &self.cache.map[&(m, bits(self.meta[ci].w_hi[m]))];
                apply_mode_matrix(
                    &mut self.columns[ci].hi,
                    self.dims[m],
                    self.strides[m],
                    f_hi,
                    &mut self.scratch,
                );
            }
            let ph_lo = Complex64::from_polar(1.0, 0.5 * nu * self.meta[ci].m_lo * tau);
            let ph_hi = Complex64::from_polar(1.0, 0.5 * nu * self.meta[ci].m_hi * tau);
            self.columns[ci].lo *= ph_lo;
            self.columns[ci].hi *= ph_hi;
        }
    }

    /// Drive rotation by angle theta: exp(+i theta sigma_x) on the pair.
    fn mix(&mut self, theta: f64) {
        let c = Complex64::new(theta.cos(), 0.0);
        let is = Complex64::new(0.0, theta.sin());
        for col in &mut self.columns {
            for idx in 0..col.lo.len() {
                let a = col.lo[idx];
                let b = col.hi[idx];
                col.lo[idx] = c * a + is * b;
                col.hi[idx] = is * a + c * b;
            }
        }
    }

    /// Move from the gate frame to the phonon frame at the current time.
    fn apply_gate_frame_junction(&mut self) {
        let t = self.t_global;
        for m in 0..self.dims.len() {
            let delta = self.cfg.modes[m].delta;
            let phases: Vec<Complex64> = (0..self.dims[m])
                .map(|k| Complex64::from_polar(1.0, -delta * t * k as f64))
                .collect();
            for col in &mut self.columns {
                apply_mode_phases(&mut col.lo, self.dims[m], self.strides[m], &phases);
                apply_mode_phases(&mut col.hi, self.dims[m], self.strides[m], &phases);
            }
        }
        self.beat_frame = true;
    }

    /// Phonon-frame multi-tone segment. Within each step the tone field is
    /// integrated exactly at frozen envelope value: the step factor per
    /// mode and weight w is exp(i theta w^2) D(zeta w), with theta the
    /// ordered double integral of the tone commutators and zeta the plain
    /// tone integral. Step-to-step composition of the displacements then
    /// accumulates the remaining second-order phase automatically.
    fn run_beat(&mut self, plan: &MultibeatPlan, nu_sign: f64, dt_target: f64) -> Result<()> {
        let t_base = self.t_global;
        let bounds = plan.ramp.boundaries();
        let deltas: Vec<Vec<f64>> = self
            .cfg
            .modes
            .iter()
            .map(|mode| plan.tones.iter().map(|tone| mode.omega - tone.mu).collect())
            .collect();
        for seg in 0..3 {
            let (s0, s1) = (bounds[seg], bounds[seg + 1]);
            let len = s1 - s0;
            if len <= 0.0 {
                continue;
            }
            let n_steps = (len / dt_target).ceil().max(1.0) as usize;
            let dt = len / n_steps as f64;
            for k in 0..n_steps {
                let t0 = s0 + k as f64 * dt;
                let r = plan.ramp.value(t0 + 0.5 * dt);
                self.beat_step(plan, &deltas, nu_sign, r, t0, dt);
                self.step_count += 1;
                self.t_global = t_base + t0 + dt;
                self.maybe_record();
            }
            self.check_norms()?;
        }
        self.t_global = t_base + plan.ramp.total();
        Ok(())
    }

    fn beat_step(
        &mut self,
        plan: &MultibeatPlan,
        deltas: &[Vec<f64>],
        nu_sign: f64,
        r: f64,
        t0: f64,
        dt: f64,
    ) {
        // Step stamps never repeat here, so the cache only shares factors
        // across columns within one step.
        self.cache.reset_if_stale((bits(t0), bits(dt)));
        let n_modes = self.dims.len();
        let mut kernels: Vec<(Complex64, f64)> = Vec::with_capacity(n_modes);
        for md in deltas.iter().take(n_modes) {
            let amp: Vec<Complex64> = plan
                .tones
                .iter()
                .zip(md)
                .map(|(tone, &dk)| {
                    IM * Complex64::new(0.5 * r * tone.amp, 0.0)
                        * Complex64::from_polar(1.0, dk * t0)
                })
                .collect();
            kernels.push(tone_response(md, &amp, dt));
        }

        for (m, &(zeta, theta)) in kernels.iter().enumerate() {
            let d = self.dims[m];
            for wi in 0..self.wclasses[m].len() {
                let w = self.wclasses[m][wi];
                self.cache.map.entry((m, bits(w))).or_insert_with(|| {
                    let zw = zeta * Complex64::new(w, 0.0);
                    let a = ladder(d);
                    let gen = a.adjoint() * zw - a * zw.conj();
                    crate::hilbert::expm_antihermitian(&gen)
                        * Complex64::from_polar(1.0, theta * w * w)
                });
            }
        }
        let nu = nu_sign * self.cfg.nu * r * r;
        for ci in 0..self.columns.len() {
            for m in 0..n_modes {
                let f_lo = &self.cache.map[&(m, bits(self.meta[ci].w_lo[m]))];
                apply_mode_matrix(
                    &mut self.columns[ci].lo,
                    self.dims[m],
                    self.strides[m],
                    f_lo,
                    &mut self.scratch,
                );
                let f_hi = &self.cache.map[&(m, bits(self.meta[ci].w_hi[m]))];
                apply_mode_matrix(
                    &mut self.columns[ci].hi,
                    self.dims[m],
                    self.strides[m],
                    f_hi,
                    &mut self.scratch,
                );
            }
            let ph_lo = Complex64::from_polar(1.0, 0.5 * nu * self.meta[ci].m_lo * dt);
            let ph_hi = Complex64::from_polar(1.0, 0.5 * nu * self.meta[ci].m_hi * dt);
            self.columns[ci].lo *= ph_lo;
            self.columns[ci].hi *= ph_hi;
        }
    }

    fn maybe_record(&mut self) {
        if let Some(s) = self.trace_stride {
            if self.step_count % s == 0 {
                self.record_sample();
            }
        }
    }

    fn record_sample(&mut self) {
        if self.trace_stride.is_none() {
            return;
        }
        let t = self.t_global;
        for (ci, col) in self.columns.iter().enumerate() {
            let mut amps = Vec::with_capacity(self.dims.len());
            for m in 0..self.dims.len() {
                let mut a = expect_ladder(&self.mspace, &col.lo, m)
                    + expect_ladder(&self.mspace, &col.hi, m);
                if self.beat_frame {
                    a *= Complex64::from_polar(1.0, self.cfg.modes[m].delta * t);
                }
                amps.push(a);
            }
            let cross = col.lo.dotc(&col.hi);
            let bloch = [
                2.0 * cross.re,
                2.0 * cross.im,
                col.lo.norm_squared() - col.hi.norm_squared(),
            ];
            self.traces[ci].samples.push(TraceSample { t, mode_amps: amps, bloch });
        }
    }

    fn check_norms(&mut self) -> Result<()> {
        for col in &self.columns {
            let drift = (col.lo.norm_squared() + col.hi.norm_squared() - 1.0).abs();
            if drift > self.max_drift {
                self.max_drift = drift;
            }
        }
        if self.max_drift > 1e-8 {
            return Err(ModelError::Numerics(format!(
                "propagation norm drift {:.3e}",
                self.max_drift
            )));
        }
        Ok(())
    }

    fn finish(mut self) -> Result<SequenceRun> {
        self.check_norms()?;
        if self.trace_stride.is_some() {
            self.record_sample();
        }
        Ok(SequenceRun {
            columns: self.columns,
            traces: self.traces,
            max_norm_drift: self.max_drift,
            steps_taken: self.step_count,
        })
    }
}

/// Exact response of one mode to a sum of weighted tones over a window of
/// length `dt`: `weighted[k]` is the full complex coefficient of
/// `e^{i deltas[k] (t - t0)}` in A(t). Returns the net displacement zeta
/// and the ordered-double-integral phase theta, so the window's propagator
/// for coupling weight w is `exp(i theta w^2) D(zeta w)`. The solver and
/// the stepper both come through here, which keeps the engineered targets
/// and the simulated dynamics in the same convention by construction.
pub(crate) fn tone_response(deltas: &[f64], weighted: &[Complex64], dt: f64) -> (Complex64, f64) {
    let mut i1 = Complex64::ZERO;
    for (k, &dk) in deltas.iter().enumerate() {
        i1 += weighted[k] * kernel_one(dk, dt);
    }
    let zeta = -IM * i1;
    let mut theta = 0.0;
    for (k, &dk) in deltas.iter().enumerate() {
        theta += weighted[k].norm_sqr() * kernel_diag(dk, dt);
        for (l, &dl) in deltas.iter().enumerate() {
            if l == k {
                continue;
            }
            // Ordered double integral of e^{i dk t1} e^{-i dl t2}; the
            // generic form divides by dl, so degenerate tone spacings get
            // the analytic limit instead.
            let t_od = if dl.abs() * dt < 1e-9 {
                if dk.abs() * dt < 1e-9 {
                    Complex64::new(0.5 * dt * dt, 0.0)
                } else {
                    (Complex64::from_polar(dt, dk * dt) - kernel_one(dk, dt))
                        / (IM * Complex64::new(dk, 0.0))
                }
            } else {
                (kernel_one(dk, dt) - kernel_one(dk - dl, dt)) / (IM * Complex64::new(dl, 0.0))
            };
            theta += (weighted[k] * weighted[l].conj() * t_od).im;
        }
    }
    (zeta, theta)
}

/// Run only a multi-tone segment from the given initial occupations, in
/// the phonon frame with no prior gate arm. Solver verification uses this
/// to check an engineered pulse by stepped propagation.
pub(crate) fn beat_only(
    cfg: &GateConfig,
    plan: &MultibeatPlan,
    nu_sign: f64,
    inits: &[Vec<usize>],
) -> Result<SequenceRun> {
    let mut eng = Engine::new(cfg, inits, None, None)?;
    eng.run_beat(plan, nu_sign, profile_dt(&plan.ramp, cfg.dt_scale))?;
    eng.finish()
}

/// Run only a gate-frame segment under an explicit schedule.
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) fn mu_only(
    cfg: &GateConfig,
    schedule: &Schedule,
    delta_sign: f64,
    nu_sign: f64,
    inits: &[Vec<usize>],
) -> Result<SequenceRun> {
    let mut eng = Engine::new(cfg, inits, None, None)?;
    let dt = profile_dt(&schedule.ramp, cfg.dt_scale);
    eng.run_mu(delta_sign, nu_sign, schedule, dt)?;
    eng.finish()
}

/// (e^{i x dt} - 1) / (i x), continuous at x = 0.
pub(crate) fn kernel_one(x: f64, dt: f64) -> Complex64 {
    let u = x * dt;
    if u.abs() < 1e-6 {
        // dt (1 + i u/2 - u^2/6 - i u^3/24)
        Complex64::new(dt * (1.0 - u * u / 6.0), dt * (u / 2.0 - u * u * u / 24.0))
    } else {
        (Complex64::from_polar(1.0, u) - Complex64::new(1.0, 0.0))
            / Complex64::new(0.0, x)
    }
}

/// Im of the ordered double integral of e^{i x (t1 - t2)} over a step:
/// dt/x - sin(x dt)/x^2, continuous at x = 0.
pub(crate) fn kernel_diag(x: f64, dt: f64) -> f64 {
    let u = x * dt;
    if u.abs() < 1e-4 {
        x * dt.powi(3) * (1.0 / 6.0 - u * u / 120.0)
    } else {
        dt / x - u.sin() / (x * x)
    }
}

/// Apply a small matrix to the given mode component of a motional vector.
fn apply_mode_matrix(
    v: &mut CVec,
    d: usize,
    stride: usize,
    mat: &CMat,
    scratch: &mut [Complex64],
) {
    let block = d * stride;
    let l = v.len();
    let mut base = 0;
    while base < l {
        for off in 0..stride {
            for j in 0..d {
                scratch[j] = v[base + j * stride + off];
            }
            for row in 0..d {
                let mut acc = Complex64::ZERO;
                for c in 0..d {
                    acc += mat[(row, c)] * scratch[c];
                }
                v[base + row * stride + off] = acc;
            }
        }
        base += block;
    }
}

fn apply_mode_phases(v: &mut CVec, d: usize, stride: usize, phases: &[Complex64]) {
    let block = d * stride;
    let l = v.len();
    let mut base = 0;
    while base < l {
        for j in 0..d {
            for off in 0..stride {
                v[base + j * stride + off] *= phases[j];
            }
        }
        base += block;
    }
}

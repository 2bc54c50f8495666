//! Pulse schedules and Hamiltonian builders.
//!
//! Two models are built here. `multi_mode_hamiltonian` is the laser-frame
//! model with explicit spin-phonon coupling; it is what the propagation
//! engine integrates. `single_mode_hamiltonian` is the dressed reference
//! in which the phonons are already folded into spin-spin couplings; it
//! exists for cross checks and for reasoning about the ideal sequence.
//!
//! Sign convention for the pair drive: the scheduled drive enters every
//! builder as `-(g_drive/2) sigma_x` so that a pi pulse maps the resonant
//! pair through `+i sigma_x`. `spinmodel::spin_hamiltonian` keeps the bare
//! `+g/2` convention; the two differ only by the sign fed to it.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::crystal::{IsingMatrix, ModeSpec};
use crate::error::{ModelError, Result};
use crate::hilbert::{ladder_embed, number_embed, pauli_embed, CMat, CompositeSpace, Pauli, IM};
use crate::math::{laguerre, sqrt_factorial_ratio};
use crate::spinmodel::{spin_hamiltonian, SpinModelParams};

/// Piecewise coupling envelope: sin^2 rise, flat hold, cos^2 fall.
///
/// `value` is the amplitude-level modulation r(t) in [0, 1]; the spin-spin
/// coupling follows r(t)^2. Zero-length rise or fall segments degrade to a
/// rectangular switch, which is what the quench diagnostics use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RampProfile {
    pub t_rise: f64,
    pub t_hold: f64,
    pub t_fall: f64,
}

impl RampProfile {
    pub fn smooth(t_a: f64, t_hold: f64) -> Self {
        RampProfile { t_rise: t_a, t_hold, t_fall: t_a }
    }

    pub fn rectangular(t_hold: f64) -> Self {
        RampProfile { t_rise: 0.0, t_hold, t_fall: 0.0 }
    }

    pub fn total(&self) -> f64 {
        self.t_rise + self.t_hold + self.t_fall
    }

    /// Segment boundaries [0, end of rise, end of hold, end of fall].
    /// Steppers align to these so envelope kinks never land inside a step.
    pub fn boundaries(&self) -> [f64; 4] {
        let a = self.t_rise;
        let b = a + self.t_hold;
        [0.0, a, b, b + self.t_fall]
    }

    /// Amplitude modulation r(t).
    pub fn value(&self, t: f64) -> f64 {
        let [_, a, b, end] = self.boundaries();
        if t < 0.0 || t > end {
            0.0
        } else if t < a {
            let s = (std::f64::consts::FRAC_PI_2 * t / self.t_rise).sin();
            s * s
        } else if t <= b {
            1.0
        } else {
            let s = (std::f64::consts::FRAC_PI_2 * (t - b) / self.t_fall).cos();
            s * s
        }
    }

    /// Coupling modulation r(t)^2.
    pub fn coupling(&self, t: f64) -> f64 {
        let r = self.value(t);
        r * r
    }

    /// Exact integral of r(t)^2: hold + 3/8 of each smooth ramp.
    pub fn coupling_time(&self) -> f64 {
        self.t_hold + 0.375 * (self.t_rise + self.t_fall)
    }

    /// Half-per-ramp estimate of the same area. Overshoots the exact value
    /// by (rise + fall)/8; reports carry both so timing audits can tell
    /// which bookkeeping a given run assumed.
    pub fn nominal_coupling_time(&self) -> f64 {
        self.t_hold + 0.5 * (self.t_rise + self.t_fall)
    }
}

/// A ramp plus the window in which the pair drive is switched on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub ramp: RampProfile,
    pub drive_start: f64,
    pub drive_stop: f64,
}

impl Schedule {
    /// Gate schedule: drive fills the whole plateau.
    pub fn gate(t_a: f64, tau_g: f64) -> Self {
        let ramp = RampProfile::smooth(t_a, tau_g);
        Schedule { ramp, drive_start: t_a, drive_stop: t_a + tau_g }
    }

    /// Undriven schedule with the same envelope (echo arms, ramp tests).
    pub fn undriven(ramp: RampProfile) -> Self {
        Schedule { ramp, drive_start: 0.0, drive_stop: 0.0 }
    }

    pub fn total(&self) -> f64 {
        self.ramp.total()
    }

    pub fn amp(&self, t: f64) -> f64 {
        self.ramp.value(t)
    }

    /// Drive gating, 1 inside the window. Boundaries sit on ramp segment
    /// edges, so segment-aligned steppers never sample the discontinuity.
    pub fn drive(&self, t: f64) -> f64 {
        if t >= self.drive_start && t < self.drive_stop {
            1.0
        } else {
            0.0
        }
    }
}

/// Matrix element <n|D(beta)|m> of the displacement operator for real beta.
pub fn displacement_element(n: usize, m: usize, beta: f64) -> f64 {
    let x = beta * beta;
    let gauss = (-0.5 * x).exp();
    if n >= m {
        let k = n - m;
        sqrt_factorial_ratio(m as u64, n as u64) * beta.powi(k as i32) * gauss
            * laguerre(m, k as f64, x)
    } else {
        let k = m - n;
        sqrt_factorial_ratio(n as u64, m as u64) * (-beta).powi(k as i32) * gauss
            * laguerre(n, k as f64, x)
    }
}

/// Diagonal displacement element <n|D(beta)|n> = exp(-b^2/2) L_n(b^2).
///
/// This is the factor by which a drive that must move the crystal through
/// a closed phase-space loop of size beta is slowed down.
pub fn condon_factor(beta: f64, n: usize) -> f64 {
    displacement_element(n, n, beta)
}

/// Drive attenuation over all selected modes at phonon occupations `occ`.
///
/// The loop size per mode is the separation between the two target-spin
/// displaced frames, `omega_rabi * eta_m(target) / delta_m`.
pub fn drive_correction(
    modes: &[ModeSpec],
    omega_rabi: f64,
    target: usize,
    occ: &[usize],
) -> f64 {
    assert_eq!(modes.len(), occ.len(), "one occupation per mode");
    modes
        .iter()
        .zip(occ)
        .map(|(m, &n)| condon_factor(omega_rabi * m.eta[target] / m.delta, n))
        .product()
}

/// Rescale the bare drive so the attenuated pulse still closes in tau_g.
/// Refuses correction factors close to zero: the pulse time would diverge.
pub fn corrected_drive(g: f64, lambda: f64) -> Result<f64> {
    if lambda.abs() < 0.05 {
        return Err(ModelError::DriveCorrection(lambda));
    }
    Ok(g / lambda)
}

/// Full coupled-model configuration consumed by the propagation paths.
///
/// Frequencies are angular (rad/s), times in seconds. `g_drive` is the
/// amplitude actually scheduled, i.e. already divided by `lambda_c`.
#[derive(Debug, Clone)]
pub struct GateConfig {
    pub n_ions: usize,
    pub target: usize,
    pub modes: Vec<ModeSpec>,
    pub omega_rabi: f64,
    pub nu: f64,
    pub g_nominal: f64,
    pub g_drive: f64,
    pub lambda_c: f64,
    pub t_a: f64,
    pub tau_g: f64,
    pub fock_dims: Vec<usize>,
    pub dt_scale: f64,
}

impl GateConfig {
    pub fn space(&self) -> CompositeSpace {
        CompositeSpace::new(self.n_ions, self.fock_dims.clone())
    }

    pub fn j_matrix(&self) -> DMatrix<f64> {
        IsingMatrix::from_modes(&self.modes, self.omega_rabi).mat
    }

    pub fn schedule(&self) -> Schedule {
        Schedule::gate(self.t_a, self.tau_g)
    }

    pub fn total_time(&self) -> f64 {
        self.schedule().total()
    }
}

/// Laser-frame Hamiltonian at envelope value `amp` (r, not r^2) and drive
/// gate `drive` (0 or 1). Spin-spin couplings are not in here explicitly;
/// they emerge from the spin-phonon term at second order and scale as r^2,
/// which is why the carrier detuning is scaled the same way: the drive gap
/// of every control configuration then stays fixed through the ramps.
pub fn multi_mode_hamiltonian(cfg: &GateConfig, amp: f64, drive: f64) -> CMat {
    let space = cfg.space();
    let d = space.dim();
    let mut h = CMat::zeros(d, d);

    let half_nu = Complex64::new(-0.5 * cfg.nu * amp * amp, 0.0);
    for i in 0..cfg.n_ions {
        h += pauli_embed(&space, Pauli::Z, i) * half_nu;
    }

    for (m, mode) in cfg.modes.iter().enumerate() {
        let a = ladder_embed(&space, m);
        let quad = (a.adjoint() - &a) * IM; // i(a^dag - a), Hermitian
        for i in 0..cfg.n_ions {
            let c = Complex64::new(0.5 * amp * cfg.omega_rabi * mode.eta[i], 0.0);
            h += &quad * pauli_embed(&space, Pauli::Z, i) * c;
        }
        h -= number_embed(&space, m) * Complex64::new(mode.delta, 0.0);
    }

    if drive != 0.0 {
        let c = Complex64::new(-0.5 * drive * cfg.g_drive, 0.0);
        h += pauli_embed(&space, Pauli::X, cfg.target) * c;
    }
    h
}

/// Dressed single-mode reference model.
#[derive(Debug, Clone, Copy)]
pub struct SingleModeParams {
    pub n_ions: usize,
    pub target: usize,
    /// Homogeneous peak spin-spin coupling, signed.
    pub j: f64,
    /// Mode detuning for the spectator oscillator term.
    pub delta: f64,
    pub g_drive: f64,
    pub fock_dim: usize,
}

/// Dressed Hamiltonian at coupling modulation `coupling` (r^2) and drive
/// gate `drive`: 2 Nc J(t) sum_z + J(t) sum_zz - delta n - drive (g/2) x.
/// The linear term tracks J(t), which keeps every control configuration's
/// drive gap fixed through the ramps.
pub fn single_mode_hamiltonian(p: &SingleModeParams, coupling: f64, drive: f64) -> CMat {
    let n = p.n_ions;
    let jt = p.j * coupling;
    let mut jm = DMatrix::from_element(n, n, jt);
    jm.fill_diagonal(0.0);
    let controls = (n - 1) as f64;
    let spin = spin_hamiltonian(&SpinModelParams {
        nu: -4.0 * controls * jt,
        j: jm,
        g: -drive * p.g_drive,
        target: p.target,
    });

    let space = CompositeSpace::new(n, vec![p.fock_dim]);
    let d = space.dim();
    let mut h = CMat::zeros(d, d);
    let f = p.fock_dim;
    for row in 0..1usize << n {
        for col in 0..1usize << n {
            let v = spin[(row, col)];
            if v != Complex64::ZERO {
                for k in 0..f {
                    h[(row * f + k, col * f + k)] += v;
                }
            }
        }
    }
    h -= number_embed(&space, 0) * Complex64::new(p.delta, 0.0);
    h
}

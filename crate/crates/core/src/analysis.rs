//! Reductions of finished runs to figures of merit.
//!
//! Average gate fidelity is computed twice by design. The production
//! route contracts the pair columns directly into the Kraus overlap
//! vector; the cross-check route is the literal operator-basis sum over
//! all Pauli strings, kept dense and slow on purpose. Both express the
//! same entanglement-fidelity average, so they must agree to numerical
//! precision on any channel, and a test holds them to that.

use num_complex::Complex64;

use crate::evolution::SequenceRun;
use crate::hamiltonians::GateConfig;
use crate::hilbert::{pauli, CMat, CVec, CompositeSpace, Pauli};
use crate::spinmodel::{driven_pair, energy_gap, spin_of};

/// (|tr(T† V)|^2 + d) / (d^2 + d) for two unitaries on the same space.
pub fn average_fidelity_unitary(t: &CMat, v: &CMat) -> f64 {
    let d = t.nrows() as f64;
    let tr = (t.adjoint() * v).trace();
    (tr.norm_sqr() + d) / (d * d + d)
}

/// Kraus overlap vector S with S_l = tr(ideal† K_l), contracted directly
/// from the pair columns whose initial occupation equals `init`. The
/// Kraus index l runs over the final motional basis; each input column
/// contributes only its two spin configurations, which is exactly the
/// support of the corresponding Kraus column.
fn kraus_overlap(run: &SequenceRun, cfg: &GateConfig, ideal: &CMat, init: &[usize]) -> CVec {
    let n = cfg.n_ions;
    let bit = 1usize << (n - 1 - cfg.target);
    let mut acc: Option<CVec> = None;
    let mut seen = 0usize;
    for col in run.columns.iter().filter(|c| c.init.as_slice() == init) {
        let x = col.input;
        let s = acc.get_or_insert_with(|| CVec::zeros(col.lo.len()));
        *s += &col.lo * ideal[(x & !bit, x)].conj() + &col.hi * ideal[(x | bit, x)].conj();
        seen += 1;
    }
    assert_eq!(seen, 1usize << n, "need one column per spin input");
    acc.unwrap()
}

/// Average gate fidelity of the run against `ideal`:
/// (sum_l |S_l|^2 + d) / (d^2 + d).
pub fn average_fidelity(
    run: &SequenceRun,
    cfg: &GateConfig,
    ideal: &CMat,
    init: &[usize],
) -> f64 {
    let d = (1usize << cfg.n_ions) as f64;
    let s = kraus_overlap(run, cfg, ideal, init);
    (s.norm_squared() + d) / (d * d + d)
}

/// Effective spin process: every column's final state projected onto the
/// initial motional state, with the global phase removed using the first
/// diagonal element (an off-resonant input, so its ideal value is 1).
pub fn process_unitary(run: &SequenceRun, cfg: &GateConfig, init: &[usize]) -> CMat {
    let n = cfg.n_ions;
    let d = 1usize << n;
    let bit = 1usize << (n - 1 - cfg.target);
    let idx = CompositeSpace::new(0, cfg.fock_dims.clone()).index(0, init);
    let mut u = CMat::zeros(d, d);
    let mut seen = 0usize;
    for col in run.columns.iter().filter(|c| c.init.as_slice() == init) {
        u[(col.input & !bit, col.input)] = col.lo[idx];
        u[(col.input | bit, col.input)] = col.hi[idx];
        seen += 1;
    }
    assert_eq!(seen, d, "need one column per spin input");
    let u00 = u[(0, 0)];
    if u00.norm() > 1e-12 {
        u *= u00.conj() / u00.norm();
    }
    u
}

/// Population outside the initial motional state per spin input, indexed
/// by input.
pub fn motional_leakage(run: &SequenceRun, cfg: &GateConfig, init: &[usize]) -> Vec<f64> {
    let d = 1usize << cfg.n_ions;
    let idx = CompositeSpace::new(0, cfg.fock_dims.clone()).index(0, init);
    let mut leak = vec![f64::NAN; d];
    for col in run.columns.iter().filter(|c| c.init.as_slice() == init) {
        leak[col.input] = 1.0 - col.lo[idx].norm_sqr() - col.hi[idx].norm_sqr();
    }
    assert!(leak.iter().all(|l| l.is_finite()), "need one column per spin input");
    leak
}

/// Summary of one propagated sequence at one initial occupation.
#[derive(Debug, Clone)]
pub struct FidelityReport {
    pub fbar: f64,
    pub max_leakage: f64,
    /// (input, diagonal phase after global-phase removal) for every input
    /// outside the driven pair. Ideal gates leave these at zero.
    pub residual_phases: Vec<(usize, f64)>,
}

pub fn assess(
    run: &SequenceRun,
    cfg: &GateConfig,
    ideal: &CMat,
    init: &[usize],
) -> FidelityReport {
    let fbar = average_fidelity(run, cfg, ideal, init);
    let max_leakage = motional_leakage(run, cfg, init)
        .into_iter()
        .fold(0.0f64, f64::max);
    let u = process_unitary(run, cfg, init);
    let (plo, phi) = driven_pair(cfg.n_ions, cfg.target);
    let residual_phases = (0..1usize << cfg.n_ions)
        .filter(|&x| x != plo && x != phi)
        .map(|x| (x, u[(x, x)].arg()))
        .collect();
    FidelityReport { fbar, max_leakage, residual_phases }
}

/// One n-qubit Pauli string; `code` is base 4 with the most significant
/// digit on ion 0, matching basis indexing. Digit 0 is the identity.
pub fn pauli_string(n: usize, code: usize) -> CMat {
    let mut digits = Vec::with_capacity(n);
    let mut c = code;
    for _ in 0..n {
        digits.push(c % 4);
        c /= 4;
    }
    digits.reverse();
    let mut m = CMat::identity(1, 1);
    for dg in digits {
        let f = match dg {
            0 => CMat::identity(2, 2),
            1 => pauli(Pauli::X),
            2 => pauli(Pauli::Y),
            _ => pauli(Pauli::Z),
        };
        m = m.kronecker(&f);
    }
    m
}

/// Average gate fidelity by the literal operator-basis sum
/// (sum_W tr(T W T† E(W)) + d^2) / (d^2 (d + 1)), W over all Pauli
/// strings. The sum must come out real for a genuine channel; the
/// imaginary residue is asserted tiny and dropped.
pub fn pauli_twirl_fidelity<F: Fn(&CMat) -> CMat>(t: &CMat, channel: F) -> f64 {
    let d = t.nrows();
    let n = d.trailing_zeros() as usize;
    assert_eq!(1usize << n, d, "dimension must be a power of two");
    let mut acc = Complex64::ZERO;
    for code in 0..d * d {
        let w = pauli_string(n, code);
        let ew = channel(&w);
        acc += (t * &w * t.adjoint() * &ew).trace();
    }
    assert!(
        acc.im.abs() < 1e-10 * (1.0 + acc.re.abs()),
        "operator-basis sum has imaginary residue {:.2e}",
        acc.im
    );
    let df = d as f64;
    (acc.re + df * df) / (df * df * (df + 1.0))
}

/// Geometric occupation weights p_n = nbar^n / (1 + nbar)^(n+1) for
/// n = 0..=n_top and the un-renormalized tail mass above n_top. Averages
/// taken with the truncated weights lower-bound the full thermal average
/// whenever the per-occupation values stay below 1.
pub fn thermal_weights(nbar: f64, n_top: usize) -> (Vec<f64>, f64) {
    assert!(nbar >= 0.0);
    let q = nbar / (1.0 + nbar);
    let w = (0..=n_top as i32).map(|k| q.powi(k) / (1.0 + nbar)).collect();
    (w, q.powi(n_top as i32 + 1))
}

/// Weighted combination for thermal averages.
pub fn thermal_average(values: &[f64], weights: &[f64]) -> f64 {
    assert_eq!(values.len(), weights.len());
    values.iter().zip(weights).map(|(v, p)| v * p).sum()
}

/// A spin input whose target-flip cost lands within 3 g of `k` phonons on
/// `mode`. Near such a crossing the drive trades spin flips for phonons
/// and the gate dips; sweeps attach these to explain local minima.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegeneracyFlag {
    pub input: usize,
    pub mode: usize,
    pub k: usize,
    /// Flip cost minus k * delta_m, rad/s.
    pub mismatch: f64,
}

pub fn degeneracy_flags(cfg: &GateConfig, max_phonons: usize) -> Vec<DegeneracyFlag> {
    let n = cfg.n_ions;
    let j = cfg.j_matrix();
    let width = 3.0 * cfg.g_nominal.abs();
    let mut flags = Vec::new();
    for x in 0..1usize << n {
        let st = spin_of(x, cfg.target, n);
        let cost = st * (cfg.nu - energy_gap(&j, cfg.target, x));
        for (m, mode) in cfg.modes.iter().enumerate() {
            for k in 1..=max_phonons {
                let mismatch = cost - k as f64 * mode.delta;
                if mismatch.abs() < width {
                    flags.push(DegeneracyFlag { input: x, mode: m, k, mismatch });
                }
            }
        }
    }
    flags
}

//! Parameter resolution: named experiment presets and raw key-value
//! configurations turn into a fully derived [`GateConfig`] plus echo choice.
//!
//! Raw keys use kHz / us / plain counts so config files read like the lab
//! notebook values; everything downstream is angular frequency and seconds.

use std::f64::consts::{PI, TAU};

use serde::Deserialize;

use crate::crystal::{select_modes, CrystalModel, IsingMatrix, ModeSet};
use crate::error::ModelError;
use crate::evolution::EchoKind;
use crate::hamiltonians::{corrected_drive, drive_correction, GateConfig};
use crate::multibeat::{build_plan, ToneSolution};
use crate::spinmodel::resonance_nu;

type Result<T> = std::result::Result<T, ModelError>;

/// Raw configuration, one field per documented config key.
///
/// Exactly the keys below are accepted; anything else is rejected with the
/// offending key named. The coupling strength may be pinned through any
/// consistent subset of `J_khz`, `omega_rabi_khz` and `g_khz` +
/// `ratio_J_over_g`; over-determined combinations are cross-checked to 0.1%.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub n_ions: usize,
    #[serde(default = "defaults::omega_cm_khz")]
    pub omega_cm_khz: f64,
    pub delta_cm_khz: f64,
    #[serde(default = "defaults::eta_cm_per_ion")]
    pub eta_cm_per_ion: f64,
    /// Design magnitude of the CM-mediated coupling, kHz.
    #[serde(rename = "J_khz", default)]
    pub j_khz: Option<f64>,
    #[serde(default)]
    pub omega_rabi_khz: Option<f64>,
    #[serde(default)]
    pub g_khz: Option<f64>,
    #[serde(rename = "ratio_J_over_g", default)]
    pub ratio_j_over_g: Option<f64>,
    #[serde(default)]
    pub t_a_mode: TaMode,
    /// Ramp time in us; required by `t_a_mode = "explicit"`, rejected otherwise.
    #[serde(default)]
    pub t_a_us: Option<f64>,
    #[serde(default)]
    pub mode_set: ModeSet,
    #[serde(default)]
    pub echo: EchoKey,
    #[serde(default)]
    pub nbar_cm: f64,
    #[serde(default)]
    pub fock_nmax: FockNmax,
    /// CM cycles per beat period of the echo comb.
    #[serde(default = "defaults::k1")]
    pub k1: usize,
    /// Beat periods in the echo; normally derived, overridable.
    #[serde(default)]
    pub k2: Option<usize>,
}

mod defaults {
    pub fn omega_cm_khz() -> f64 {
        1000.0
    }
    pub fn eta_cm_per_ion() -> f64 {
        0.1
    }
    pub fn k1() -> usize {
        5
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaMode {
    #[default]
    EqualTauG,
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EchoKey {
    #[default]
    None,
    SignFlip,
    Multibeat,
}

/// `fock_nmax` accepts either the literal string `"auto"` or an integer.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum FockNmax {
    Count(usize),
    Word(String),
}

impl Default for FockNmax {
    fn default() -> Self {
        FockNmax::Word("auto".into())
    }
}

/// A fully derived run description.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub cfg: GateConfig,
    pub echo: EchoKind,
    pub mode_set: ModeSet,
    /// Thermal mean CM occupation requested for fidelity averaging. The
    /// Fock dims in `cfg` are sized for vacuum starts; thermal pipelines
    /// widen the CM dimension themselves.
    pub nbar_cm: f64,
    /// Signed design value of the CM-mediated coupling, rad/s.
    pub j_design: f64,
    /// Per-mode Fock levels actually selected (dims are n_max + 1).
    pub n_max: usize,
    /// Solver metadata when the echo is a beatnote comb.
    pub tones: Option<ToneSolution>,
}

fn config_err(msg: String) -> ModelError {
    ModelError::Config(msg)
}

fn rel_mismatch(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Highest Fock level kept per mode for a worst-case coherent excursion
/// `alpha`: every displaced state the sequence visits keeps its Poisson
/// tail inside the cutoff with several-sigma headroom.
pub fn auto_fock_levels(alpha: f64) -> usize {
    (alpha * alpha + 6.0 * alpha + 4.0).ceil() as usize
}

/// Resolve a raw configuration into a runnable description.
pub fn resolve(raw: &RawConfig) -> Result<Resolved> {
    if raw.n_ions < 2 {
        return Err(config_err(format!(
            "n_ions = {} but the gate needs at least one control ion",
            raw.n_ions
        )));
    }
    if raw.delta_cm_khz == 0.0 {
        return Err(config_err("delta_cm_khz must be nonzero".into()));
    }
    if raw.eta_cm_per_ion <= 0.0 {
        return Err(config_err("eta_cm_per_ion must be positive".into()));
    }
    if raw.nbar_cm < 0.0 {
        return Err(config_err("nbar_cm must be >= 0".into()));
    }
    if raw.t_a_mode == TaMode::EqualTauG && raw.t_a_us.is_some() {
        return Err(config_err(
            "t_a_us is only meaningful with t_a_mode = \"explicit\"".into(),
        ));
    }
    if raw.echo != EchoKey::Multibeat && raw.k2.is_some() {
        return Err(config_err("k2 requires echo = \"multibeat\"".into()));
    }
    if raw.t_a_mode == TaMode::Explicit && raw.k2.is_some() {
        return Err(config_err(
            "k2 conflicts with t_a_mode = \"explicit\": an explicit ramp \
             already fixes the beat-period count"
                .into(),
        ));
    }

    let omega_cm = TAU * raw.omega_cm_khz * 1e3;
    let delta_cm = TAU * raw.delta_cm_khz * 1e3;
    let eta = raw.eta_cm_per_ion;
    let crystal = CrystalModel::axial(raw.n_ions)?;
    let modes = select_modes(&crystal, omega_cm, delta_cm, eta, raw.mode_set);
    let target = raw.n_ions / 2;

    // |J| candidates from each key that pins it, then cross-checked.
    let mut j_abs: Vec<(&str, f64)> = Vec::new();
    if let Some(j) = raw.j_khz {
        if j <= 0.0 {
            return Err(config_err("J_khz must be positive (sign follows delta_cm)".into()));
        }
        j_abs.push(("J_khz", TAU * j * 1e3));
    }
    if let Some(or) = raw.omega_rabi_khz {
        if or <= 0.0 {
            return Err(config_err("omega_rabi_khz must be positive".into()));
        }
        let omega_rabi = TAU * or * 1e3;
        j_abs.push((
            "omega_rabi_khz",
            omega_rabi * omega_rabi * eta * eta / (4.0 * delta_cm.abs()),
        ));
    }
    if let (Some(g), Some(ratio)) = (raw.g_khz, raw.ratio_j_over_g) {
        if ratio <= 0.0 {
            return Err(config_err("ratio_J_over_g must be positive".into()));
        }
        j_abs.push(("g_khz * ratio_J_over_g", TAU * g * 1e3 * ratio));
    }
    let Some(&(first_key, j_mag)) = j_abs.first() else {
        return Err(config_err(
            "coupling underdetermined: provide J_khz, omega_rabi_khz, \
             or g_khz together with ratio_J_over_g"
                .into(),
        ));
    };
    for &(key, val) in &j_abs[1..] {
        if rel_mismatch(j_mag, val) > 1e-3 {
            return Err(config_err(format!(
                "inconsistent coupling: {first_key} gives |J|/2pi = {:.4} kHz \
                 but {key} gives {:.4} kHz",
                j_mag / TAU / 1e3,
                val / TAU / 1e3
            )));
        }
    }
    let j_design = delta_cm.signum() * j_mag;

    let omega_rabi = match raw.omega_rabi_khz {
        Some(or) => TAU * or * 1e3,
        None => 2.0 * (j_mag * delta_cm.abs()).sqrt() / eta,
    };

    let g_nominal = match (raw.g_khz, raw.ratio_j_over_g) {
        (Some(g), _) if g <= 0.0 => {
            return Err(config_err("g_khz must be positive".into()));
        }
        (Some(g), _) => TAU * g * 1e3,
        (None, Some(ratio)) => j_mag / ratio,
        (None, None) => {
            return Err(config_err(
                "drive underdetermined: provide g_khz or ratio_J_over_g".into(),
            ));
        }
    };

    let j_matrix = IsingMatrix::from_modes(&modes, omega_rabi);
    let nu = resonance_nu(&j_matrix.mat, target);
    let occ = vec![0usize; modes.len()];
    let lambda_c = drive_correction(&modes, omega_rabi, target, &occ);
    let g_drive = corrected_drive(g_nominal, lambda_c)?;
    let tau_g = PI / g_nominal;

    let mut t_a = match raw.t_a_mode {
        TaMode::EqualTauG => tau_g,
        TaMode::Explicit => {
            let us = raw.t_a_us.ok_or_else(|| {
                config_err("t_a_mode = \"explicit\" requires t_a_us".into())
            })?;
            if us <= 0.0 {
                return Err(config_err("t_a_us must be positive".into()));
            }
            us * 1e-6
        }
    };

    // Nudge the ramp so the sequence spans whole beat periods. Explicit
    // ramp times are the user's call and go to the comb builder untouched.
    let mut k2_used = None;
    if raw.echo == EchoKey::Multibeat && raw.t_a_mode == TaMode::EqualTauG {
        if raw.k1 == 0 {
            return Err(config_err("k1 must be positive".into()));
        }
        let t_mb = TAU * raw.k1 as f64 / omega_cm;
        let k2 = match raw.k2 {
            Some(k2) => k2,
            None => ((2.0 * t_a + tau_g) / t_mb).round() as usize,
        };
        let adjusted = (k2 as f64 * t_mb - tau_g) / 2.0;
        if k2 == 0 || adjusted <= 0.0 {
            return Err(config_err(format!(
                "k2 = {k2} leaves no room for the ramps: gate alone is \
                 {:.1} beat periods",
                tau_g / t_mb
            )));
        }
        t_a = adjusted;
        k2_used = Some(k2);
    }

    let n_modes = modes.len();
    let alpha_max = raw.n_ions as f64 * omega_rabi * eta
        / (2.0 * modes.iter().map(|m| m.delta.abs()).fold(f64::INFINITY, f64::min));
    let n_max = match &raw.fock_nmax {
        FockNmax::Count(c) => *c,
        FockNmax::Word(w) if w == "auto" => auto_fock_levels(alpha_max),
        FockNmax::Word(w) => {
            return Err(config_err(format!(
                "fock_nmax must be \"auto\" or an integer, got {w:?}"
            )));
        }
    };

    let cfg = GateConfig {
        n_ions: raw.n_ions,
        target,
        modes,
        omega_rabi,
        nu,
        g_nominal,
        g_drive,
        lambda_c,
        t_a,
        tau_g,
        fock_dims: vec![n_max + 1; n_modes],
        dt_scale: 1.0,
    };

    let (echo, tones) = match raw.echo {
        EchoKey::None => (EchoKind::None, None),
        EchoKey::SignFlip => (EchoKind::SignFlip, None),
        EchoKey::Multibeat => {
            let (plan, sol) = build_plan(&cfg, raw.k1)?;
            if let Some(k2) = k2_used {
                debug_assert_eq!(plan.k2, k2);
            }
            (EchoKind::Multibeat(plan), Some(sol))
        }
    };

    Ok(Resolved {
        cfg,
        echo,
        mode_set: raw.mode_set,
        nbar_cm: raw.nbar_cm,
        j_design,
        n_max,
        tones,
    })
}

/// Named parameter sets matching the reference operating points.
pub fn preset(name: &str) -> Result<RawConfig> {
    let mut raw = RawConfig {
        n_ions: 3,
        omega_cm_khz: defaults::omega_cm_khz(),
        delta_cm_khz: 0.0,
        eta_cm_per_ion: defaults::eta_cm_per_ion(),
        j_khz: None,
        omega_rabi_khz: None,
        g_khz: None,
        ratio_j_over_g: Some(2.0),
        t_a_mode: TaMode::EqualTauG,
        t_a_us: None,
        mode_set: ModeSet::CmOnly,
        echo: EchoKey::None,
        nbar_cm: 0.0,
        fock_nmax: FockNmax::default(),
        k1: defaults::k1(),
        k2: None,
    };
    match name {
        // Slow single-mode gate; timing alone cancels the phases.
        "fig2" => {
            raw.delta_cm_khz = 20.0;
            raw.j_khz = Some(2.0);
        }
        // Same couplings spread over all axial modes, comb echo cleanup.
        "fig3a" => {
            raw.delta_cm_khz = -20.0;
            raw.j_khz = Some(2.0);
            raw.mode_set = ModeSet::AllAxial;
            raw.echo = EchoKey::Multibeat;
        }
        // Fast multi-mode point: far detuning, stronger couplings.
        "fig4a" => {
            raw.delta_cm_khz = -200.0;
            raw.g_khz = Some(4.762);
            raw.mode_set = ModeSet::AllAxial;
            raw.echo = EchoKey::Multibeat;
        }
        // Slow multi-mode point at the same far detuning.
        "fig4b" => {
            raw.delta_cm_khz = -200.0;
            raw.j_khz = Some(2.0);
            raw.mode_set = ModeSet::AllAxial;
            raw.echo = EchoKey::Multibeat;
        }
        other => {
            return Err(config_err(format!(
                "unknown preset {other:?}; available: fig2, fig3a, fig4a, fig4b"
            )));
        }
    }
    Ok(raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn resolved(name: &str) -> Resolved {
        resolve(&preset(name).unwrap()).unwrap()
    }

    #[test]
    fn slow_single_mode_preset_numbers() {
        let r = resolved("fig2");
        let cfg = &r.cfg;
        assert_eq!(cfg.n_ions, 3);
        assert_eq!(cfg.target, 1);
        assert_eq!(cfg.modes.len(), 1);
        let expect_rabi = 2.0 * (TAU * 2e3 * TAU * 2e4).sqrt() / 0.1;
        assert_relative_eq!(cfg.omega_rabi, expect_rabi, max_relative = 1e-12);
        assert_relative_eq!(cfg.omega_rabi / TAU, 126_491.106, max_relative = 1e-8);
        assert_relative_eq!(cfg.g_nominal, TAU * 1e3, max_relative = 1e-12);
        assert_relative_eq!(cfg.tau_g, 5e-4, max_relative = 1e-12);
        assert_eq!(cfg.t_a, cfg.tau_g);
        // Homogeneous couplings, central target: resonance at -8 J.
        assert_relative_eq!(cfg.nu, -8.0 * TAU * 2e3, max_relative = 1e-9);
        // Single vacuum mode: correction is exp(-beta^2/2) at the loop size.
        let beta = cfg.omega_rabi * 0.1 / (TAU * 2e4);
        assert_relative_eq!(cfg.lambda_c, (-0.5 * beta * beta).exp(), max_relative = 1e-12);
        assert_relative_eq!(cfg.g_drive, cfg.g_nominal / cfg.lambda_c, max_relative = 1e-12);
        assert_eq!(r.n_max, 11);
        assert_eq!(cfg.fock_dims, vec![12]);
        assert!(matches!(r.echo, EchoKind::None));
        assert!(r.j_design > 0.0);
    }

    #[test]
    fn slow_multi_mode_preset_numbers() {
        let r = resolved("fig4b");
        let cfg = &r.cfg;
        assert_eq!(cfg.modes.len(), 3);
        assert_relative_eq!(cfg.omega_rabi, TAU * 400e3, max_relative = 1e-12);
        assert_relative_eq!(cfg.g_nominal, TAU * 1e3, max_relative = 1e-12);
        let EchoKind::Multibeat(plan) = &r.echo else {
            panic!("expected a beatnote comb echo");
        };
        assert_eq!(plan.k2, 300);
        assert_relative_eq!(plan.t_mb, 5e-6, max_relative = 1e-12);
        // Rounding to whole beat periods happens to leave t_a = tau_g here.
        assert_relative_eq!(cfg.t_a, 5e-4, max_relative = 1e-9);
        assert_eq!(r.n_max, 6);
        assert!(r.tones.is_some());
        assert!(r.j_design < 0.0);
        // Resonance near the uniform-coupling estimate 8|J|, pulled down a
        // few percent by the tilt and zigzag contributions.
        assert!(cfg.nu > 0.0);
        assert_relative_eq!(cfg.nu / TAU, 15_173.9, max_relative = 1e-3);
    }

    #[test]
    fn fast_multi_mode_preset_timing() {
        let r = resolved("fig4a");
        let cfg = &r.cfg;
        // g pinned directly, the coupling follows from the ratio.
        assert_relative_eq!(cfg.g_nominal, TAU * 4762.0, max_relative = 1e-12);
        assert_relative_eq!(r.j_design.abs(), TAU * 9524.0, max_relative = 1e-12);
        let EchoKind::Multibeat(plan) = &r.echo else {
            panic!("expected a beatnote comb echo");
        };
        assert_eq!(plan.k2, 63);
        // The ramps absorb the rounding: 2 t_a + tau_g = k2 t_mb exactly.
        assert_relative_eq!(
            2.0 * cfg.t_a + cfg.tau_g,
            63.0 * 5e-6,
            max_relative = 1e-12
        );
    }

    #[test]
    fn near_resonant_multi_mode_preset_resolves() {
        let r = resolved("fig3a");
        let EchoKind::Multibeat(plan) = &r.echo else {
            panic!("expected a beatnote comb echo");
        };
        assert_eq!(plan.k2, 300);
        assert!(r.cfg.modes.iter().all(|m| m.delta < 0.0));
    }

    #[test]
    fn clashing_coupling_keys_are_rejected() {
        let mut raw = preset("fig2").unwrap();
        raw.omega_rabi_khz = Some(127.5); // 1.6% off the J-implied value
        let err = resolve(&raw).unwrap_err().to_string();
        assert!(err.contains("omega_rabi_khz"), "{err}");
    }

    #[test]
    fn redundant_consistent_keys_are_accepted() {
        let mut raw = preset("fig2").unwrap();
        raw.omega_rabi_khz = Some(126.4911064067);
        let r = resolve(&raw).unwrap();
        // The explicitly given Rabi frequency is used verbatim.
        assert_relative_eq!(
            r.cfg.omega_rabi,
            TAU * 126_491.1064067,
            max_relative = 1e-12
        );
    }

    #[test]
    fn underdetermined_coupling_is_rejected() {
        let mut raw = preset("fig2").unwrap();
        raw.j_khz = None;
        let err = resolve(&raw).unwrap_err().to_string();
        assert!(err.contains("underdetermined"), "{err}");
    }

    #[test]
    fn underdetermined_drive_is_rejected() {
        let mut raw = preset("fig2").unwrap();
        raw.ratio_j_over_g = None;
        let err = resolve(&raw).unwrap_err().to_string();
        assert!(err.contains("g_khz"), "{err}");
    }

    #[test]
    fn unknown_keys_are_named_in_the_error() {
        let err = toml::from_str::<RawConfig>(
            "n_ions = 3\ndelta_cm_khz = 20.0\nJ_khz = 2.0\nbogus_knob = 1\n",
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("bogus_knob"), "{err}");
    }

    #[test]
    fn toml_document_matches_preset() {
        let raw: RawConfig = toml::from_str(
            "n_ions = 3\ndelta_cm_khz = 20.0\nJ_khz = 2.0\n\
             ratio_J_over_g = 2.0\nfock_nmax = \"auto\"\n",
        )
        .unwrap();
        let a = resolve(&raw).unwrap();
        let b = resolved("fig2");
        assert_eq!(a.cfg.fock_dims, b.cfg.fock_dims);
        assert_relative_eq!(a.cfg.omega_rabi, b.cfg.omega_rabi);
        assert_relative_eq!(a.cfg.nu, b.cfg.nu);
        assert_relative_eq!(a.cfg.t_a, b.cfg.t_a);
    }

    #[test]
    fn explicit_fock_and_ramp_overrides() {
        let raw: RawConfig = toml::from_str(
            "n_ions = 2\ndelta_cm_khz = 20.0\nJ_khz = 0.45\ng_khz = 0.225\n\
             t_a_mode = \"explicit\"\nt_a_us = 100.0\nfock_nmax = 8\n\
             echo = \"sign_flip\"\n",
        )
        .unwrap();
        let r = resolve(&raw).unwrap();
        assert_eq!(r.cfg.fock_dims, vec![9]);
        assert_relative_eq!(r.cfg.t_a, 1e-4, max_relative = 1e-12);
        assert!(matches!(r.echo, EchoKind::SignFlip));
    }

    #[test]
    fn bad_fock_word_is_rejected() {
        let mut raw = preset("fig2").unwrap();
        raw.fock_nmax = FockNmax::Word("lots".into());
        let err = resolve(&raw).unwrap_err().to_string();
        assert!(err.contains("fock_nmax"), "{err}");
    }

    #[test]
    fn stray_ramp_and_comb_keys_are_rejected() {
        let mut raw = preset("fig2").unwrap();
        raw.t_a_us = Some(10.0);
        assert!(resolve(&raw).is_err());

        let mut raw = preset("fig2").unwrap();
        raw.k2 = Some(300);
        assert!(resolve(&raw).is_err());

        let mut raw = preset("fig4b").unwrap();
        raw.t_a_mode = TaMode::Explicit;
        raw.t_a_us = Some(500.0);
        raw.k2 = Some(300);
        assert!(resolve(&raw).is_err());
    }

    #[test]
    fn explicit_beat_count_overrides_the_rounding() {
        let mut raw = preset("fig4b").unwrap();
        raw.k2 = Some(320);
        let r = resolve(&raw).unwrap();
        let EchoKind::Multibeat(plan) = &r.echo else {
            panic!("expected a beatnote comb echo");
        };
        assert_eq!(plan.k2, 320);
        // t_a stretches to fill the requested span.
        assert_relative_eq!(r.cfg.t_a, (320.0 * 5e-6 - 5e-4) / 2.0, max_relative = 1e-9);
    }

    #[test]
    fn unknown_preset_is_an_error() {
        assert!(preset("fig9").is_err());
    }
}

//! Config intake: file or preset selection, flag overrides, and the run
//! fingerprint that names a physical parameter set in the run records.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use itoffoli::evolution::EchoKind;
use itoffoli::presets::{preset, FockNmax, RawConfig, Resolved};
use sha2::{Digest, Sha256};

/// Read the raw configuration from exactly one of the two sources.
/// Returns the preset name alongside (empty for file configs) so reports
/// can echo it.
pub fn load_raw(config: Option<&Path>, preset_name: Option<&str>) -> Result<(String, RawConfig)> {
    match (config, preset_name) {
        (Some(path), None) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            let raw: RawConfig =
                toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            Ok((String::new(), raw))
        }
        (None, Some(name)) => Ok((name.to_string(), preset(name)?)),
        (None, None) => bail!("pass --config <file> or --preset <name>"),
        (Some(_), Some(_)) => bail!("--config and --preset are mutually exclusive"),
    }
}

/// `--nmax` accepts the literal `auto` or a Fock level count.
pub fn apply_nmax(raw: &mut RawConfig, nmax: &str) -> Result<()> {
    if nmax == "auto" {
        raw.fock_nmax = FockNmax::Word("auto".into());
    } else {
        let n: usize = nmax
            .parse()
            .map_err(|_| anyhow::anyhow!("--nmax must be \"auto\" or an integer, got {nmax:?}"))?;
        raw.fock_nmax = FockNmax::Count(n);
    }
    Ok(())
}

/// Hash of every physical parameter of a resolved run, independent of how
/// the raw config spelled them (key order, J versus Omega, explicit versus
/// derived ramp time). Sixteen hex digits of SHA-256 over a sorted
/// canonical key=value list.
pub fn fingerprint(r: &Resolved) -> String {
    let mut kv: Vec<(String, String)> = Vec::new();
    let f = |v: f64| format!("{v:.17e}");
    let cfg = &r.cfg;
    kv.push(("n_ions".into(), cfg.n_ions.to_string()));
    kv.push(("target".into(), cfg.target.to_string()));
    kv.push(("omega_rabi".into(), f(cfg.omega_rabi)));
    kv.push(("nu".into(), f(cfg.nu)));
    kv.push(("g_nominal".into(), f(cfg.g_nominal)));
    kv.push(("g_drive".into(), f(cfg.g_drive)));
    kv.push(("lambda_c".into(), f(cfg.lambda_c)));
    kv.push(("t_a".into(), f(cfg.t_a)));
    kv.push(("tau_g".into(), f(cfg.tau_g)));
    kv.push(("dt_scale".into(), f(cfg.dt_scale)));
    kv.push(("nbar_cm".into(), f(r.nbar_cm)));
    let dims: Vec<String> = cfg.fock_dims.iter().map(|d| d.to_string()).collect();
    kv.push(("fock_dims".into(), dims.join(",")));
    for (m, mode) in cfg.modes.iter().enumerate() {
        kv.push((format!("mode{m}.omega"), f(mode.omega)));
        kv.push((format!("mode{m}.delta"), f(mode.delta)));
        let etas: Vec<String> = mode.eta.iter().map(|&e| f(e)).collect();
        kv.push((format!("mode{m}.eta"), etas.join(",")));
    }
    match &r.echo {
        EchoKind::None => kv.push(("echo".into(), "none".into())),
        EchoKind::SignFlip => kv.push(("echo".into(), "sign_flip".into())),
        EchoKind::Multibeat(plan) => {
            kv.push(("echo".into(), "multibeat".into()));
            kv.push(("echo.t_mb".into(), f(plan.t_mb)));
            kv.push(("echo.k2".into(), plan.k2.to_string()));
            for (k, tone) in plan.tones.iter().enumerate() {
                kv.push((format!("echo.tone{k}"), format!("{},{}", f(tone.mu), f(tone.amp))));
            }
        }
    }
    kv.sort();
    let mut h = Sha256::new();
    for (k, v) in &kv {
        h.update(k.as_bytes());
        h.update(b"=");
        h.update(v.as_bytes());
        h.update(b"\n");
    }
    let digest = h.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

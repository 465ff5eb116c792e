//! TOML run configuration with strict key checking: unknown keys are errors,
//! because a silently ignored typo is the cheapest way to invalidate a run.

use std::path::Path;

use toml::value::Table;
use toml::Value;

use crate::error::{Error, Result};
use crate::grid::Domain;
use crate::kernel::KernelKind;
use crate::nch::FluxScheme;
use crate::ns::FluidParams;
use crate::potential::PotentialSpec;
use crate::sim::{ChSettings, InitialCondition, OutputCadence, SimConfig};

pub fn parse_config(path: &Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<SimConfig> {
    let root: Value = text.parse().map_err(|e: toml::de::Error| Error::InvalidValue {
        key: "<config>".into(),
        reason: e.to_string(),
    })?;
    let root = root.as_table().ok_or_else(|| Error::InvalidValue {
        key: "<config>".into(),
        reason: "top level must be a table".into(),
    })?;

    const SECTIONS: &[&str] = &[
        "domain", "fluid", "potential", "kernel", "time", "ch", "initial", "output",
    ];
    for key in root.keys() {
        if !SECTIONS.contains(&key.as_str()) {
            return Err(Error::UnknownKey(key.clone()));
        }
    }

    let domain_t = section(root, "domain")?;
    check_keys("domain", domain_t, &["nx", "ny", "lx", "ly"])?;
    let domain = Domain::new(
        usize_key(domain_t, "domain", "nx")?,
        usize_key(domain_t, "domain", "ny")?,
        f64_key(domain_t, "domain", "lx")?,
        f64_key(domain_t, "domain", "ly")?,
    )?;

    let fluid_t = section(root, "fluid")?;
    check_keys("fluid", fluid_t, &["rho1", "rho2", "nu1", "nu2"])?;
    let fluid = FluidParams::new(
        f64_key(fluid_t, "fluid", "rho1")?,
        f64_key(fluid_t, "fluid", "rho2")?,
        f64_key(fluid_t, "fluid", "nu1")?,
        f64_key(fluid_t, "fluid", "nu2")?,
    )?;

    let pot_t = section(root, "potential")?;
    check_keys("potential", pot_t, &["alpha", "kind"])?;
    if let Some(kind) = str_opt(pot_t, "potential", "kind")? {
        if kind != "logarithmic" {
            return Err(Error::InvalidValue {
                key: "potential.kind".into(),
                reason: format!("only \"logarithmic\" is available, got \"{kind}\""),
            });
        }
    }
    let potential = PotentialSpec::logarithmic(f64_key(pot_t, "potential", "alpha")?)?;

    let kernel_t = section(root, "kernel")?;
    check_keys("kernel", kernel_t, &["kind", "epsilon", "radius", "strength"])?;
    let kernel_strength = f64_key(kernel_t, "kernel", "strength")?;
    let kind_name = str_key(kernel_t, "kernel", "kind")?;
    let kernel_kind = match kind_name.as_str() {
        "gaussian" => {
            if kernel_t.contains_key("radius") {
                return Err(Error::InvalidValue {
                    key: "kernel.radius".into(),
                    reason: "gaussian kernels take `epsilon`, not `radius`".into(),
                });
            }
            KernelKind::Gaussian {
                epsilon: f64_key(kernel_t, "kernel", "epsilon")?,
            }
        }
        "wendland" => {
            if kernel_t.contains_key("epsilon") {
                return Err(Error::InvalidValue {
                    key: "kernel.epsilon".into(),
                    reason: "wendland kernels take `radius`, not `epsilon`".into(),
                });
            }
            KernelKind::Wendland {
                radius: f64_key(kernel_t, "kernel", "radius")?,
            }
        }
        other => {
            return Err(Error::InvalidValue {
                key: "kernel.kind".into(),
                reason: format!("expected \"gaussian\" or \"wendland\", got \"{other}\""),
            })
        }
    };

    let time_t = section(root, "time")?;
    check_keys("time", time_t, &["dt", "t_end"])?;
    let dt = f64_key(time_t, "time", "dt")?;
    let t_end = f64_key(time_t, "time", "t_end")?;

    let defaults = ChSettings::default();
    let ch = match root.get("ch") {
        None => defaults,
        Some(v) => {
            let ch_t = v.as_table().ok_or_else(|| Error::InvalidValue {
                key: "ch".into(),
                reason: "must be a table".into(),
            })?;
            check_keys("ch", ch_t, &["lambda", "newton_tol", "newton_max", "flux"])?;
            let flux = match str_opt(ch_t, "ch", "flux")?.as_deref() {
                None | Some("upwind") => FluxScheme::Upwind,
                Some("centered") => FluxScheme::Centered,
                Some(other) => {
                    return Err(Error::InvalidValue {
                        key: "ch.flux".into(),
                        reason: format!("expected \"upwind\" or \"centered\", got \"{other}\""),
                    })
                }
            };
            ChSettings {
                lambda: f64_opt(ch_t, "ch", "lambda")?.unwrap_or(defaults.lambda),
                newton_tol: f64_opt(ch_t, "ch", "newton_tol")?.unwrap_or(defaults.newton_tol),
                newton_max: usize_opt(ch_t, "ch", "newton_max")?.unwrap_or(defaults.newton_max),
                flux,
            }
        }
    };

    let init_t = section(root, "initial")?;
    let preset = str_key(init_t, "initial", "preset")?;
    let initial = match preset.as_str() {
        "bubble" => {
            check_keys("initial", init_t, &["preset", "amplitude", "radius", "width"])?;
            InitialCondition::Bubble {
                amplitude: f64_key(init_t, "initial", "amplitude")?,
                radius: f64_key(init_t, "initial", "radius")?,
                width: f64_key(init_t, "initial", "width")?,
            }
        }
        "random-mix" => {
            check_keys("initial", init_t, &["preset", "amplitude", "seed"])?;
            InitialCondition::RandomMix {
                seed: usize_key(init_t, "initial", "seed")? as u64,
                amplitude: f64_key(init_t, "initial", "amplitude")?,
            }
        }
        "stratified" => {
            check_keys("initial", init_t, &["preset", "amplitude", "width", "ripple"])?;
            InitialCondition::Stratified {
                amplitude: f64_key(init_t, "initial", "amplitude")?,
                width: f64_key(init_t, "initial", "width")?,
                ripple: f64_opt(init_t, "initial", "ripple")?.unwrap_or(0.0),
            }
        }
        other => {
            return Err(Error::InvalidValue {
                key: "initial.preset".into(),
                reason: format!(
                    "expected \"bubble\", \"random-mix\" or \"stratified\", got \"{other}\""
                ),
            })
        }
    };

    let output = match root.get("output") {
        None => OutputCadence::default(),
        Some(v) => {
            let out_t = v.as_table().ok_or_else(|| Error::InvalidValue {
                key: "output".into(),
                reason: "must be a table".into(),
            })?;
            check_keys("output", out_t, &["snapshot_every", "checkpoint_every"])?;
            OutputCadence {
                snapshot_every: usize_opt(out_t, "output", "snapshot_every")?.unwrap_or(0),
                checkpoint_every: usize_opt(out_t, "output", "checkpoint_every")?.unwrap_or(0),
            }
        }
    };

    let cfg = SimConfig {
        domain,
        fluid,
        potential,
        kernel_kind,
        kernel_strength,
        ch,
        dt,
        t_end,
        initial,
        output,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn section<'a>(root: &'a Table, name: &str) -> Result<&'a Table> {
    root.get(name)
        .ok_or_else(|| Error::MissingKey(name.into()))?
        .as_table()
        .ok_or_else(|| Error::InvalidValue {
            key: name.into(),
            reason: "must be a table".into(),
        })
}

fn check_keys(section: &str, t: &Table, allowed: &[&str]) -> Result<()> {
    for key in t.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(Error::UnknownKey(format!("{section}.{key}")));
        }
    }
    Ok(())
}

fn f64_key(t: &Table, section: &str, key: &str) -> Result<f64> {
    f64_opt(t, section, key)?.ok_or_else(|| Error::MissingKey(format!("{section}.{key}")))
}

fn f64_opt(t: &Table, section: &str, key: &str) -> Result<Option<f64>> {
    match t.get(key) {
        None => Ok(None),
        Some(Value::Float(f)) => Ok(Some(*f)),
        Some(Value::Integer(i)) => Ok(Some(*i as f64)),
        Some(other) => Err(Error::InvalidValue {
            key: format!("{section}.{key}"),
            reason: format!("expected a number, got {other}"),
        }),
    }
}

fn usize_key(t: &Table, section: &str, key: &str) -> Result<usize> {
    usize_opt(t, section, key)?.ok_or_else(|| Error::MissingKey(format!("{section}.{key}")))
}

fn usize_opt(t: &Table, section: &str, key: &str) -> Result<Option<usize>> {
    match t.get(key) {
        None => Ok(None),
        Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as usize)),
        Some(other) => Err(Error::InvalidValue {
            key: format!("{section}.{key}"),
            reason: format!("expected a non-negative integer, got {other}"),
        }),
    }
}

fn str_key(t: &Table, section: &str, key: &str) -> Result<String> {
    str_opt(t, section, key)?.ok_or_else(|| Error::MissingKey(format!("{section}.{key}")))
}

fn str_opt(t: &Table, section: &str, key: &str) -> Result<Option<String>> {
    match t.get(key) {
        None => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(other) => Err(Error::InvalidValue {
            key: format!("{section}.{key}"),
            reason: format!("expected a string, got {other}"),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const REFERENCE: &str = r#"
[domain]
nx = 64
ny = 64
lx = 1.0
ly = 1.0

[fluid]
rho1 = 1.0
rho2 = 2.0
nu1 = 1.0
nu2 = 0.5

[potential]
alpha = 1.0

[kernel]
kind = "gaussian"
epsilon = 0.05
strength = 2.0

[time]
dt = 1e-3
t_end = 1.0

[ch]
lambda = 1e-4

[initial]
preset = "bubble"
amplitude = 0.9
radius = 0.25
width = 0.05

[output]
snapshot_every = 100
checkpoint_every = 500
"#;

    #[test]
    fn reference_config_parses() {
        let cfg = parse_config_str(REFERENCE).unwrap();
        assert_eq!(cfg.domain.nx, 64);
        assert_eq!(cfg.ch.lambda, 1e-4);
        assert_eq!(cfg.output.snapshot_every, 100);
        assert_eq!(cfg.n_steps(), 1000);
    }

    #[test]
    fn negative_dt_rejected() {
        let bad = REFERENCE.replace("dt = 1e-3", "dt = -1.0");
        match parse_config_str(&bad) {
            Err(Error::InvalidValue { key, .. }) => assert_eq!(key, "time.dt"),
            other => panic!("expected InvalidValue, got {other:?}"),
        }
    }

    #[test]
    fn unknown_key_rejected() {
        let bad = REFERENCE.replace("rho1 = 1.0", "rho_l = 1.0");
        match parse_config_str(&bad) {
            Err(Error::UnknownKey(k)) => assert_eq!(k, "fluid.rho_l"),
            other => panic!("expected UnknownKey, got {other:?}"),
        }
    }

    #[test]
    fn missing_key_reported() {
        let bad = REFERENCE.replace("strength = 2.0", "");
        match parse_config_str(&bad) {
            Err(Error::MissingKey(k)) => assert_eq!(k, "kernel.strength"),
            other => panic!("expected MissingKey, got {other:?}"),
        }
    }

    #[test]
    fn preset_specific_keys_enforced() {
        let bad = REFERENCE.replace("preset = \"bubble\"", "preset = \"random-mix\"");
        assert!(matches!(parse_config_str(&bad), Err(Error::UnknownKey(_))));
        let strat = REFERENCE
            .replace(
                "preset = \"bubble\"\namplitude = 0.9\nradius = 0.25\nwidth = 0.05",
                "preset = \"stratified\"\namplitude = 0.9\nwidth = 0.05",
            )
            .replace("snapshot_every = 100", "snapshot_every = 10");
        let cfg = parse_config_str(&strat).unwrap();
        assert!(matches!(
            cfg.initial,
            InitialCondition::Stratified { ripple, .. } if ripple == 0.0
        ));
    }
}

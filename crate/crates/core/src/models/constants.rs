//! Every model constant in one place. Values follow the published
//! Vogels-Abbott (conductance-based) and Brunel (current-based) benchmark
//! networks; all may be overridden through `key = value` config lines.

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown model constant `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`")]
    Value { key: String, value: String },
}

/// Integration step shared by all models, in milliseconds.
pub const DT_MS: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct VogelsConstants {
    pub dt_ms: f64,
    pub tau_m_ms: f64,
    pub v_rest_mv: f64,
    pub v_reset_mv: f64,
    pub v_thresh_mv: f64,
    pub refractory_ms: f64,
    pub tau_exc_ms: f64,
    pub tau_inh_ms: f64,
    pub e_exc_mv: f64,
    pub e_inh_mv: f64,
    /// Conductance jumps in units of the leak conductance, at the base size.
    pub w_exc: f64,
    pub w_inh: f64,
    pub probability: f64,
    pub exc_fraction: f64,
    /// Network size the weights above are tuned for.
    pub base_neurons: usize,
    pub delay_steps: u32,
    /// Independent excitatory background events per neuron: total rate and
    /// conductance jump. Not size-scaled.
    pub ext_rate_hz: f64,
    pub w_ext: f64,
    /// Initial potentials and conductances are drawn from N(mean, sd);
    /// conductances are clipped at 0.
    pub init_v_mean_mv: f64,
    pub init_v_sd_mv: f64,
    pub init_g_exc_mean: f64,
    pub init_g_exc_sd: f64,
    pub init_g_inh_mean: f64,
    pub init_g_inh_sd: f64,
}

impl Default for VogelsConstants {
    fn default() -> Self {
        VogelsConstants {
            dt_ms: DT_MS,
            tau_m_ms: 20.0,
            v_rest_mv: -60.0,
            v_reset_mv: -60.0,
            v_thresh_mv: -50.0,
            refractory_ms: 5.0,
            tau_exc_ms: 5.0,
            tau_inh_ms: 10.0,
            e_exc_mv: 0.0,
            e_inh_mv: -80.0,
            w_exc: 0.6,
            w_inh: 8.0,
            probability: 0.02,
            exc_fraction: 0.8,
            base_neurons: 4000,
            delay_steps: 1,
            ext_rate_hz: 150.0,
            w_ext: 4.0,
            init_v_mean_mv: -65.0,
            init_v_sd_mv: 5.0,
            init_g_exc_mean: 4.0,
            init_g_exc_sd: 1.5,
            init_g_inh_mean: 20.0,
            init_g_inh_sd: 12.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BrunelConstants {
    pub dt_ms: f64,
    pub tau_m_ms: f64,
    pub v_thresh_mv: f64,
    pub v_reset_mv: f64,
    pub refractory_ms: f64,
    pub delay_ms: f64,
    /// Excitatory PSP amplitude at the base size.
    pub j_mv: f64,
    /// Relative strength of inhibition.
    pub g: f64,
    /// External rate as a multiple of the rate needed to reach threshold
    /// without feedback.
    pub nu_ext_over_thresh: f64,
    pub probability: f64,
    pub exc_fraction: f64,
    /// Recurrent (excitatory + inhibitory) size the weights are tuned for.
    pub base_neurons: usize,
}

impl Default for BrunelConstants {
    fn default() -> Self {
        BrunelConstants {
            dt_ms: DT_MS,
            tau_m_ms: 20.0,
            v_thresh_mv: 20.0,
            v_reset_mv: 0.0,
            refractory_ms: 2.0,
            delay_ms: 1.5,
            j_mv: 0.2,
            g: 5.0,
            nu_ext_over_thresh: 2.0,
            probability: 0.1,
            exc_fraction: 0.8,
            base_neurons: 5000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StdpConstants {
    pub tau_plus_ms: f64,
    pub tau_minus_ms: f64,
    /// Depression step as a fraction of the initial weight.
    pub eta_minus: f64,
    /// Potentiation is `asymmetry * eta_minus`.
    pub asymmetry: f64,
    /// Upper weight bound as a multiple of the initial weight.
    pub w_max_factor: f64,
}

impl Default for StdpConstants {
    fn default() -> Self {
        StdpConstants {
            tau_plus_ms: 20.0,
            tau_minus_ms: 20.0,
            eta_minus: 0.01,
            asymmetry: 1.05,
            w_max_factor: 2.0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModelConstants {
    pub vogels: VogelsConstants,
    pub brunel: BrunelConstants,
    pub stdp: StdpConstants,
}

macro_rules! setters {
    ($self:ident, $key:ident, $value:ident, $($prefix:literal => $field:ident { $($name:ident),* $(,)? }),* $(,)?) => {
        match $key {
            $($(concat!($prefix, ".", stringify!($name)) => {
                $self.$field.$name = $value.parse().map_err(|_| ConfigError::Value {
                    key: $key.to_string(),
                    value: $value.to_string(),
                })?;
            })*)*
            _ => return Err(ConfigError::UnknownKey($key.to_string())),
        }
    };
}

impl ModelConstants {
    /// Sets one constant, e.g. `set("brunel.j_mv", "0.1")`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        setters!(self, key, value,
            "vogels" => vogels {
                dt_ms, tau_m_ms, v_rest_mv, v_reset_mv, v_thresh_mv, refractory_ms,
                tau_exc_ms, tau_inh_ms, e_exc_mv, e_inh_mv, w_exc, w_inh, probability,
                exc_fraction, base_neurons, delay_steps, ext_rate_hz, w_ext, init_v_mean_mv, init_v_sd_mv, init_g_exc_mean, init_g_exc_sd,
                init_g_inh_mean, init_g_inh_sd,
            },
            "brunel" => brunel {
                dt_ms, tau_m_ms, v_thresh_mv, v_reset_mv, refractory_ms, delay_ms, j_mv, g,
                nu_ext_over_thresh, probability, exc_fraction, base_neurons,
            },
            "stdp" => stdp { tau_plus_ms, tau_minus_ms, eta_minus, asymmetry, w_max_factor },
        );
        Ok(())
    }

    /// Applies `key = value` lines. Blank lines and `#` comments are skipped.
    pub fn apply_config(&mut self, text: &str) -> Result<(), ConfigError> {
        for (key, value) in parse_config(text)? {
            self.set(&key, &value)?;
        }
        Ok(())
    }
}

/// Parses `key = value` lines in order of appearance (last one wins).
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(ConfigError::Syntax { line: i + 1 });
        }
        out.insert(k.to_string(), v.to_string());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_apply() {
        let mut c = ModelConstants::default();
        c.apply_config("# tweak\nbrunel.j_mv = 0.1\n\nstdp.eta_minus=0.02 # inline\n").unwrap();
        assert_eq!(c.brunel.j_mv, 0.1);
        assert_eq!(c.stdp.eta_minus, 0.02);
        assert_eq!(c.vogels, VogelsConstants::default());
    }

    #[test]
    fn rejects_bad_lines() {
        let mut c = ModelConstants::default();
        assert_eq!(c.apply_config("nonsense"), Err(ConfigError::Syntax { line: 1 }));
        assert_eq!(
            c.apply_config("vogels.nope = 1"),
            Err(ConfigError::UnknownKey("vogels.nope".into()))
        );
        assert!(matches!(c.apply_config("vogels.w_exc = abc"), Err(ConfigError::Value { .. })));
    }
}

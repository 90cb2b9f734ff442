//! Scenario files: a single JSON document with every knob of a benchmark.
//!
//! An empty document `{}` resolves to the default testbed: 8 experts, 64
//! subcarriers, 16 layers, 1 MHz subcarriers at 10 mW with 10 dB SNR,
//! 65536-bit hidden states, mean path loss 1e-2 and per-token compute
//! energy `(j + 1) * 1e-3` J for expert `j`. Unknown keys are rejected.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use dmoe_core::gating::{synth_gating, GatingSynthSpec, GatingTensor, QosPolicy, ThresholdMode};
use dmoe_core::jesa::{Scenario, SchemeKind};
use dmoe_core::sysmodel::{sample_channel, ChannelRealization, ExpertProfile, SystemConfig};

pub const SCHEMA_VERSION: u32 = 1;

/// Token counts per expert: one uniform count or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TokensSpec {
    Uniform(usize),
    PerExpert(Vec<usize>),
}

impl TokensSpec {
    pub fn resolve(&self, num_experts: usize) -> Result<Vec<usize>> {
        match self {
            TokensSpec::Uniform(n) => Ok(vec![*n; num_experts]),
            TokensSpec::PerExpert(list) => {
                if list.len() != num_experts {
                    bail!(
                        "tokens_per_expert lists {} entries for {} experts",
                        list.len(),
                        num_experts
                    );
                }
                Ok(list.clone())
            }
        }
    }
}

/// Gating source: synthesize from a seeded simplex sampler, or inject a
/// previously traced tensor verbatim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GatingSpec {
    Synth { concentration: f64, specialist_boost: f64 },
    Injected { tensor: GatingTensor<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSpec {
    pub schema_version: u32,
    pub num_experts: usize,
    pub num_subcarriers: usize,
    pub num_layers: usize,
    pub subcarrier_bandwidth_hz: f64,
    pub tx_power_w: f64,
    pub noise_power_w: f64,
    pub hidden_state_bits: f64,
    pub mean_path_loss: f64,
    /// Per-expert compute energy per token; defaults to `(j + 1) * 1e-3` J.
    pub comp_energy_per_token_j: Option<Vec<f64>>,
    /// Per-expert fixed offsets; defaults to zero.
    pub comp_energy_offset_j: Option<Vec<f64>>,
    pub tokens_per_expert: TokensSpec,
    pub gating: GatingSpec,
    /// Replay a recorded channel realization instead of sampling; the
    /// realization is then held fixed across layers.
    pub channel: Option<ChannelRealization<f64>>,
    pub policy: QosPolicy<f64>,
    pub schemes: Vec<SchemeKind<f64>>,
    /// Check each descent-backed cell against the exhaustive joint oracle
    /// (only valid at oracle-tractable sizes).
    pub oracle_check: bool,
    /// Number of replicate scenarios per scheme.
    pub num_seeds: usize,
    /// Importance-base grid expanded by the sweep command.
    pub gamma0_grid: Vec<f64>,
    /// Top-k grid expanded by the sweep command.
    pub k_grid: Vec<usize>,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            num_experts: 8,
            num_subcarriers: 64,
            num_layers: 16,
            subcarrier_bandwidth_hz: 1e6,
            tx_power_w: 1e-2,
            noise_power_w: 1e-3,
            hidden_state_bits: 65536.0,
            mean_path_loss: 1e-2,
            comp_energy_per_token_j: None,
            comp_energy_offset_j: None,
            tokens_per_expert: TokensSpec::Uniform(4),
            gating: GatingSpec::Synth { concentration: 0.5, specialist_boost: 4.0 },
            channel: None,
            policy: QosPolicy {
                base_threshold: 1.0,
                importance_base: 0.9,
                max_experts: 2,
                mode: ThresholdMode::Geometric,
            },
            schemes: vec![
                SchemeKind::TopK { k: 2 },
                SchemeKind::Homogeneous { base_threshold: 0.5, max_experts: 2 },
                SchemeKind::Jesa { importance_base: 0.9, max_experts: 2 },
                SchemeKind::LowerBound { importance_base: 0.9, max_experts: 2 },
            ],
            oracle_check: false,
            num_seeds: 50,
            gamma0_grid: vec![0.85, 0.9, 0.95, 1.0],
            k_grid: vec![1, 2],
        }
    }
}

impl ScenarioSpec {
    /// Field-by-field validation with the offending field named.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            bail!("schema_version must be {SCHEMA_VERSION}, got {}", self.schema_version);
        }
        if self.num_experts < 2 {
            bail!("num_experts must be at least 2, got {}", self.num_experts);
        }
        if self.num_subcarriers == 0 {
            bail!("num_subcarriers must be positive");
        }
        if self.num_layers == 0 {
            bail!("num_layers must be positive");
        }
        for (name, value) in [
            ("subcarrier_bandwidth_hz", self.subcarrier_bandwidth_hz),
            ("tx_power_w", self.tx_power_w),
            ("noise_power_w", self.noise_power_w),
            ("hidden_state_bits", self.hidden_state_bits),
            ("mean_path_loss", self.mean_path_loss),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                bail!("{name} must be strictly positive and finite, got {value}");
            }
        }
        if let Some(list) = &self.comp_energy_per_token_j {
            if list.len() != self.num_experts {
                bail!("comp_energy_per_token_j needs one entry per expert");
            }
            if list.iter().any(|&a| !(a > 0.0)) {
                bail!("comp_energy_per_token_j entries must be positive");
            }
        }
        if let Some(list) = &self.comp_energy_offset_j {
            if list.len() != self.num_experts {
                bail!("comp_energy_offset_j needs one entry per expert");
            }
            if list.iter().any(|&b| b < 0.0) {
                bail!("comp_energy_offset_j entries must be nonnegative");
            }
        }
        let tokens = self.tokens_per_expert.resolve(self.num_experts)?;
        if tokens.iter().sum::<usize>() == 0 {
            bail!("tokens_per_expert must schedule at least one token");
        }
        match &self.gating {
            GatingSpec::Synth { concentration, specialist_boost } => {
                if !(*concentration > 0.0) {
                    bail!("gating.concentration must be positive");
                }
                if *specialist_boost < 1.0 {
                    bail!("gating.specialist_boost must be at least 1");
                }
            }
            GatingSpec::Injected { tensor } => {
                tensor.validate().map_err(|e| anyhow::anyhow!("gating.tensor: {e}"))?;
            }
        }
        if let Some(replay) = &self.channel {
            if replay.num_experts != self.num_experts
                || replay.num_subcarriers != self.num_subcarriers
            {
                bail!("channel shape does not match num_experts/num_subcarriers");
            }
            replay.validate().map_err(|e| anyhow::anyhow!("channel: {e}"))?;
        }
        if self.oracle_check
            && (self.num_experts * (self.num_experts - 1) > 6 || self.num_subcarriers > 16)
        {
            bail!("oracle_check requires K*(K-1) <= 6 links and at most 16 subcarriers");
        }
        self.policy.validate().map_err(|e| anyhow::anyhow!("policy: {e}"))?;
        if self.policy.max_experts > self.num_experts {
            bail!("policy.max_experts must not exceed num_experts");
        }
        if self.schemes.is_empty() {
            bail!("schemes must list at least one scheme");
        }
        if self.num_seeds == 0 {
            bail!("num_seeds must be positive");
        }
        if self.gamma0_grid.iter().any(|&g| !(g > 0.0) || g > 1.0) {
            bail!("gamma0_grid values must lie in (0, 1]");
        }
        if self.k_grid.iter().any(|&k| k == 0 || k > self.num_experts) {
            bail!("k_grid values must lie in 1..=num_experts");
        }
        Ok(())
    }

    pub fn system_config(&self) -> SystemConfig<f64> {
        SystemConfig {
            num_experts: self.num_experts,
            num_subcarriers: self.num_subcarriers,
            num_layers: self.num_layers,
            subcarrier_bandwidth: self.subcarrier_bandwidth_hz,
            tx_power_per_subcarrier: self.tx_power_w,
            noise_power: self.noise_power_w,
            hidden_state_bits: self.hidden_state_bits,
            mean_path_loss: self.mean_path_loss,
        }
    }

    pub fn profiles(&self) -> Result<Vec<ExpertProfile<f64>>> {
        let mut out = Vec::with_capacity(self.num_experts);
        for j in 0..self.num_experts {
            let a = match &self.comp_energy_per_token_j {
                Some(list) => list[j],
                None => (j as f64 + 1.0) * 1e-3,
            };
            let b = match &self.comp_energy_offset_j {
                Some(list) => list[j],
                None => 0.0,
            };
            out.push(ExpertProfile::new(j, a, b)?);
        }
        Ok(out)
    }

    /// Materializes one scenario replicate from derived seeds; the injected
    /// gating tensor, when present, ignores the gating seed.
    pub fn build_scenario(&self, channel_seed: u64, gating_seed: u64) -> Result<Scenario<f64>> {
        self.validate()?;
        let cfg = self.system_config();
        let tokens = self.tokens_per_expert.resolve(self.num_experts)?;
        let gating = match &self.gating {
            GatingSpec::Synth { concentration, specialist_boost } => synth_gating(
                &GatingSynthSpec {
                    concentration: *concentration,
                    specialist_boost: *specialist_boost,
                    rng_seed: gating_seed,
                },
                &cfg,
                &tokens,
            )?,
            GatingSpec::Injected { tensor } => {
                if tensor.tokens_per_expert != tokens
                    || tensor.num_layers != cfg.num_layers
                    || tensor.num_experts != cfg.num_experts
                {
                    bail!("gating.tensor shape does not match the spec topology");
                }
                tensor.clone()
            }
        };
        let (channel, hold_channel) = match &self.channel {
            Some(replay) => (replay.clone(), true),
            None => (sample_channel(channel_seed, &cfg), false),
        };
        let scenario = Scenario {
            channel,
            cfg,
            profiles: self.profiles()?,
            gating,
            policy: self.policy.clone(),
            tokens_per_expert: tokens,
            layer: 1,
            hold_channel,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

/// Loads and validates a scenario document, reporting parse position or the
/// offending field on failure.
pub fn load_scenario(path: &Path) -> Result<ScenarioSpec> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading scenario file {}", path.display()))?;
    parse_scenario(&text).with_context(|| format!("in scenario file {}", path.display()))
}

/// Parses a scenario document from a JSON string.
pub fn parse_scenario(text: &str) -> Result<ScenarioSpec> {
    let spec: ScenarioSpec = serde_json::from_str(text)
        .map_err(|e| anyhow::anyhow!("parse error at line {}, column {}: {e}", e.line(), e.column()))?;
    spec.validate()?;
    Ok(spec)
}

/// Writes the spec back out as pretty JSON; a reload yields an equal spec.
pub fn save_scenario(spec: &ScenarioSpec, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(spec)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing scenario file {}", path.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_resolves_to_defaults() {
        let spec = parse_scenario("{}").unwrap();
        assert_eq!(spec, ScenarioSpec::default());
        assert_eq!(spec.num_experts, 8);
        assert_eq!(spec.num_subcarriers, 64);
        assert_eq!(spec.subcarrier_bandwidth_hz, 1e6);
        assert_eq!(spec.tx_power_w, 1e-2);
        assert_eq!(spec.hidden_state_bits, 65536.0);
        let profiles = spec.profiles().unwrap();
        assert_eq!(profiles[0].comp_energy_per_token, 1e-3);
        assert_eq!(profiles[7].comp_energy_per_token, 8e-3);
    }

    #[test]
    fn negative_power_names_the_field() {
        let err = parse_scenario(r#"{"tx_power_w": -1.0}"#).unwrap_err();
        assert!(err.to_string().contains("tx_power_w"), "message: {err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse_scenario(r#"{"tx_power": 1.0}"#).unwrap_err();
        assert!(err.to_string().contains("tx_power"), "message: {err}");
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("spec.json");
        let spec = ScenarioSpec {
            num_experts: 3,
            num_subcarriers: 12,
            tokens_per_expert: TokensSpec::PerExpert(vec![1, 2, 0]),
            ..ScenarioSpec::default()
        };
        save_scenario(&spec, &path).unwrap();
        let loaded = load_scenario(&path).unwrap();
        assert_eq!(loaded, spec);
    }

    #[test]
    fn replayed_channel_is_used_verbatim_and_held() {
        let mut spec = ScenarioSpec {
            num_experts: 3,
            num_subcarriers: 8,
            num_layers: 2,
            tokens_per_expert: TokensSpec::Uniform(1),
            ..ScenarioSpec::default()
        };
        let recorded = spec.build_scenario(99, 1).unwrap().channel;

        spec.channel = Some(recorded.clone());
        let scenario = spec.build_scenario(12345, 1).unwrap();
        assert_eq!(scenario.channel, recorded);
        assert!(scenario.hold_channel);

        // The full document (channel included) survives a save/load cycle.
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("replay.json");
        save_scenario(&spec, &path).unwrap();
        assert_eq!(load_scenario(&path).unwrap(), spec);

        // Shape mismatches are rejected up front.
        spec.num_subcarriers = 9;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn oracle_check_is_guarded_to_small_topologies() {
        let mut spec = ScenarioSpec { oracle_check: true, ..ScenarioSpec::default() };
        assert!(spec.validate().is_err());
        spec.num_experts = 3;
        spec.num_subcarriers = 12;
        spec.validate().unwrap();
    }

    #[test]
    fn build_scenario_is_deterministic() {
        let spec = ScenarioSpec {
            num_experts: 3,
            num_subcarriers: 8,
            num_layers: 2,
            tokens_per_expert: TokensSpec::Uniform(1),
            ..ScenarioSpec::default()
        };
        let a = spec.build_scenario(11, 22).unwrap();
        let b = spec.build_scenario(11, 22).unwrap();
        assert_eq!(a, b);
        let c = spec.build_scenario(12, 22).unwrap();
        assert_ne!(a.channel, c.channel);
    }
}

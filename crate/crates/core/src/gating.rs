//! Gating scores, QoS thresholds and aggregation weights.
//!
//! A gating vector assigns each expert a nonnegative relevance score for one
//! token at one layer; scores sum to one. The QoS policy turns a base
//! threshold `z` and a per-layer importance factor into the minimum summed
//! score a token's selected experts must reach. Layers are indexed from 1.
//!
//! Real deployments read scores from a trained gate; for simulation,
//! [`synth_gating`] draws Dirichlet-style simplex samples and boosts one
//! randomly chosen specialist per token before renormalizing.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::scalar::Scalar;
use crate::sysmodel::SystemConfig;

/// Per-layer, per-source-expert, per-token gating score vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatingTensor<T> {
    pub num_layers: usize,
    pub num_experts: usize,
    pub tokens_per_expert: Vec<usize>,
    /// `scores[l - 1][i][n]` is the length-K score vector of token `n` held
    /// by expert `i` at layer `l`.
    scores: Vec<Vec<Vec<Vec<T>>>>,
}

impl<T: Scalar> GatingTensor<T> {
    pub fn new(
        num_layers: usize,
        num_experts: usize,
        tokens_per_expert: Vec<usize>,
        scores: Vec<Vec<Vec<Vec<T>>>>,
    ) -> Result<Self> {
        let tensor = Self { num_layers, num_experts, tokens_per_expert, scores };
        tensor.validate()?;
        Ok(tensor)
    }

    /// Score vector of token `n` at source expert `i`, layer `layer` (1-based).
    pub fn scores(&self, layer: usize, source: usize, token: usize) -> &[T] {
        &self.scores[layer - 1][source][token]
    }

    /// Checks the simplex invariant: nonnegative entries summing to one
    /// within 1e-9, every shape consistent.
    pub fn validate(&self) -> Result<()> {
        if self.tokens_per_expert.len() != self.num_experts {
            return Err(Error::InvalidConfig("tokens_per_expert length must equal num_experts".into()));
        }
        if self.scores.len() != self.num_layers {
            return Err(Error::InvalidConfig("gating tensor layer count mismatch".into()));
        }
        let tol = T::from_f64_lossy(1e-9);
        for per_layer in &self.scores {
            if per_layer.len() != self.num_experts {
                return Err(Error::InvalidConfig("gating tensor expert count mismatch".into()));
            }
            for (i, per_expert) in per_layer.iter().enumerate() {
                if per_expert.len() != self.tokens_per_expert[i] {
                    return Err(Error::InvalidConfig("gating tensor token count mismatch".into()));
                }
                for vec in per_expert {
                    if vec.len() != self.num_experts {
                        return Err(Error::InvalidConfig("gating vector length mismatch".into()));
                    }
                    if vec.iter().any(|&g| g < T::zero()) {
                        return Err(Error::InvalidConfig("gating scores must be nonnegative".into()));
                    }
                    let sum: T = vec.iter().copied().sum();
                    if (sum - T::one()).abs() > tol {
                        return Err(Error::InvalidConfig(format!(
                            "gating vector sums to {sum}, expected 1"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Threshold policy: base threshold `z`, importance base and the per-token
/// cap `D` on selected experts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QosPolicy<T> {
    /// Base threshold `z` in `[0, 1]`.
    pub base_threshold: T,
    /// Importance base in `(0, 1]`; geometric mode uses `base^layer`.
    pub importance_base: T,
    /// Maximum number of experts per token.
    pub max_experts: usize,
    pub mode: ThresholdMode,
}

/// How the layer importance factor evolves with depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// Importance factor 1 at every layer: the threshold is `z` throughout.
    Homogeneous,
    /// Importance factor decays geometrically: `base^layer` at layer `l`.
    Geometric,
}

impl<T: Scalar> QosPolicy<T> {
    pub fn validate(&self) -> Result<()> {
        if self.base_threshold < T::zero() || self.base_threshold > T::one() {
            return Err(Error::InvalidConfig(format!(
                "base_threshold must lie in [0, 1], got {}",
                self.base_threshold
            )));
        }
        if !(self.importance_base > T::zero()) || self.importance_base > T::one() {
            return Err(Error::InvalidConfig(format!(
                "importance_base must lie in (0, 1], got {}",
                self.importance_base
            )));
        }
        if self.max_experts == 0 {
            return Err(Error::InvalidConfig("max_experts must be positive".into()));
        }
        Ok(())
    }

    /// Threshold at `layer` (1-based): `z * base^layer` in geometric mode,
    /// plain `z` in homogeneous mode. Non-increasing in the layer index.
    pub fn layer_threshold(&self, layer: usize, num_layers: usize) -> Result<T> {
        if layer == 0 || layer > num_layers {
            return Err(Error::LayerOutOfRange { layer, num_layers });
        }
        Ok(match self.mode {
            ThresholdMode::Homogeneous => self.base_threshold,
            ThresholdMode::Geometric => {
                self.base_threshold * self.importance_base.powi(layer as i32)
            }
        })
    }
}

/// Parameters of the synthetic gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatingSynthSpec<T> {
    /// Dirichlet concentration; large values approach the uniform vector,
    /// small values produce spiky, specialized gates.
    pub concentration: T,
    /// Multiplier (>= 1) applied to one randomly chosen expert's raw score
    /// per token before renormalization.
    pub specialist_boost: T,
    pub rng_seed: u64,
}

impl<T: Scalar> GatingSynthSpec<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.concentration > T::zero()) {
            return Err(Error::InvalidConfig("concentration must be positive".into()));
        }
        if self.specialist_boost < T::one() {
            return Err(Error::InvalidConfig("specialist_boost must be at least 1".into()));
        }
        Ok(())
    }
}

/// Draws a full gating tensor: one simplex sample per (layer, source, token),
/// independent across layers. Deterministic under the spec's seed.
pub fn synth_gating<T: Scalar>(
    spec: &GatingSynthSpec<T>,
    cfg: &SystemConfig<T>,
    tokens_per_expert: &[usize],
) -> Result<GatingTensor<T>> {
    spec.validate()?;
    cfg.validate()?;
    if tokens_per_expert.len() != cfg.num_experts {
        return Err(Error::InvalidConfig("tokens_per_expert length must equal num_experts".into()));
    }
    let k = cfg.num_experts;
    let gamma = Gamma::new(spec.concentration.to_f64_lossy(), 1.0)
        .map_err(|e| Error::InvalidConfig(format!("gamma sampler: {e}")))?;
    let boost = spec.specialist_boost.to_f64_lossy();
    let mut rng = rng_from_seed(spec.rng_seed);

    let mut scores = Vec::with_capacity(cfg.num_layers);
    for _layer in 0..cfg.num_layers {
        let mut per_layer = Vec::with_capacity(k);
        for &tokens in tokens_per_expert.iter().take(k) {
            let mut per_expert = Vec::with_capacity(tokens);
            for _token in 0..tokens {
                let mut raw = vec![0.0f64; k];
                loop {
                    for slot in raw.iter_mut() {
                        *slot = gamma.sample(&mut rng);
                    }
                    let specialist = rng.random_range(0..k);
                    raw[specialist] *= boost;
                    let sum: f64 = raw.iter().sum();
                    if sum > 0.0 && sum.is_finite() {
                        for slot in raw.iter_mut() {
                            *slot /= sum;
                        }
                        break;
                    }
                    // Underflowed to an all-zero draw; redraw from the same stream.
                }
                per_expert.push(raw.into_iter().map(T::from_f64_lossy).collect());
            }
            per_layer.push(per_expert);
        }
        scores.push(per_layer);
    }

    GatingTensor::new(cfg.num_layers, k, tokens_per_expert.to_vec(), scores)
}

/// True when the selected experts' summed score reaches the threshold.
/// Comparison is exact `>=`; ties count as satisfied.
pub fn qos_satisfied<T: Scalar>(scores: &[T], selection: &[usize], threshold: T) -> bool {
    let attained: T = selection.iter().map(|&j| scores[j]).sum();
    attained >= threshold
}

/// Aggregation weights over the selected experts: each selected expert gets
/// its score divided by the selection's summed score; unselected experts get
/// zero. The output sums to one.
pub fn aggregation_weights<T: Scalar>(scores: &[T], selection: &[usize]) -> Result<Vec<T>> {
    let total: T = selection.iter().map(|&j| scores[j]).sum();
    if !(total > T::zero()) {
        return Err(Error::DegenerateGate);
    }
    let mut weights = vec![T::zero(); scores.len()];
    for &j in selection {
        weights[j] = scores[j] / total;
    }
    Ok(weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(k: usize, layers: usize) -> SystemConfig<f64> {
        SystemConfig {
            num_experts: k,
            num_subcarriers: 4,
            num_layers: layers,
            subcarrier_bandwidth: 1e6,
            tx_power_per_subcarrier: 1e-2,
            noise_power: 1e-3,
            hidden_state_bits: 65536.0,
            mean_path_loss: 1e-2,
        }
    }

    fn policy(z: f64, gamma0: f64, d: usize, mode: ThresholdMode) -> QosPolicy<f64> {
        QosPolicy { base_threshold: z, importance_base: gamma0, max_experts: d, mode }
    }

    #[test]
    fn layer_threshold_reference_values() {
        let p = policy(1.0, 1.0, 2, ThresholdMode::Geometric);
        for l in 1..=8 {
            assert_eq!(p.layer_threshold(l, 8).unwrap(), 1.0);
        }
        let p = policy(1.0, 0.9, 2, ThresholdMode::Geometric);
        assert!((p.layer_threshold(2, 8).unwrap() - 0.81).abs() < 1e-15);
        let p = policy(0.5, 0.7, 2, ThresholdMode::Homogeneous);
        assert_eq!(p.layer_threshold(7, 8).unwrap(), 0.5);
    }

    #[test]
    fn homogeneous_equals_geometric_with_unit_base() {
        for z in [0.0, 0.3, 0.5, 1.0] {
            let flat = policy(z, 0.9, 2, ThresholdMode::Homogeneous);
            let unit = policy(z, 1.0, 2, ThresholdMode::Geometric);
            for l in 1..=8 {
                assert_eq!(flat.layer_threshold(l, 8).unwrap(), unit.layer_threshold(l, 8).unwrap());
            }
        }
    }

    #[test]
    fn layer_threshold_rejects_out_of_range() {
        let p = policy(0.5, 0.9, 2, ThresholdMode::Geometric);
        assert!(matches!(p.layer_threshold(0, 4), Err(Error::LayerOutOfRange { .. })));
        assert!(matches!(p.layer_threshold(5, 4), Err(Error::LayerOutOfRange { .. })));
    }

    #[test]
    fn qos_reference_values() {
        let scores = [0.5f64, 0.3, 0.2];
        assert!(qos_satisfied(&scores, &[], 0.0));
        assert!(qos_satisfied(&scores, &[0, 1], 0.6));
        assert!(!qos_satisfied(&scores, &[2], 0.6));
    }

    #[test]
    fn aggregation_reference_values() {
        let scores = [0.5f64, 0.3, 0.2];
        assert_eq!(aggregation_weights(&scores, &[1]).unwrap(), vec![0.0, 1.0, 0.0]);
        let all = aggregation_weights(&scores, &[0, 1, 2]).unwrap();
        for (&w, &g) in all.iter().zip(scores.iter()) {
            assert!((w - g).abs() < 1e-12);
        }
        let partial = aggregation_weights(&scores, &[0, 1]).unwrap();
        assert!((partial[0] - 0.625f64).abs() < 1e-12);
        assert!((partial[1] - 0.375f64).abs() < 1e-12);
        assert_eq!(partial[2], 0.0);
    }

    #[test]
    fn aggregation_rejects_zero_score_selection() {
        let scores = [0.0f64, 1.0];
        assert_eq!(aggregation_weights(&scores, &[0]), Err(Error::DegenerateGate));
        assert_eq!(aggregation_weights(&scores, &[]), Err(Error::DegenerateGate));
    }

    #[test]
    fn synth_is_deterministic_and_valid() {
        let spec = GatingSynthSpec { concentration: 0.5, specialist_boost: 4.0, rng_seed: 3 };
        let c = cfg(4, 3);
        let tokens = vec![2, 1, 0, 3];
        let a = synth_gating(&spec, &c, &tokens).unwrap();
        let b = synth_gating(&spec, &c, &tokens).unwrap();
        assert_eq!(a, b);
        a.validate().unwrap();
    }

    #[test]
    fn synth_high_concentration_is_near_uniform() {
        let spec = GatingSynthSpec { concentration: 1e6, specialist_boost: 1.0, rng_seed: 11 };
        let c = cfg(4, 1);
        let tensor = synth_gating(&spec, &c, &[8, 8, 8, 8]).unwrap();
        for i in 0..4 {
            for n in 0..8 {
                let v = tensor.scores(1, i, n);
                let max = v.iter().cloned().fold(f64::MIN, f64::max);
                let min = v.iter().cloned().fold(f64::MAX, f64::min);
                assert!(max - min < 0.01, "spread {} too wide", max - min);
            }
        }
    }

    #[test]
    fn synth_tensors_stay_on_simplex_across_seeds() {
        let c = cfg(3, 2);
        for seed in 0..10_000u64 {
            let spec = GatingSynthSpec { concentration: 0.4, specialist_boost: 3.0, rng_seed: seed };
            let tensor = synth_gating(&spec, &c, &[1, 1, 1]).unwrap();
            tensor.validate().unwrap();
        }
    }

    proptest! {
        #[test]
        fn threshold_non_increasing_in_layer(z in 0.0f64..=1.0, gamma0 in 0.05f64..=1.0) {
            let p = policy(z, gamma0, 2, ThresholdMode::Geometric);
            let mut prev = f64::INFINITY;
            for l in 1..=16 {
                let t = p.layer_threshold(l, 16).unwrap();
                prop_assert!(t <= prev + 1e-15);
                prev = t;
            }
        }

        #[test]
        fn aggregation_sums_to_one_on_selection_support(
            raw in proptest::collection::vec(1e-6f64..1.0, 2..8),
            mask in proptest::collection::vec(proptest::bool::ANY, 2..8),
        ) {
            let k = raw.len().min(mask.len());
            let total: f64 = raw[..k].iter().sum();
            let scores: Vec<f64> = raw[..k].iter().map(|g| g / total).collect();
            let selection: Vec<usize> = (0..k).filter(|&j| mask[j]).collect();
            prop_assume!(!selection.is_empty());
            let weights = aggregation_weights(&scores, &selection).unwrap();
            let sum: f64 = weights.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
            for j in 0..k {
                let selected = selection.contains(&j);
                prop_assert_eq!(weights[j] > 0.0, selected);
            }
        }

        #[test]
        fn qos_monotone_under_added_expert(
            raw in proptest::collection::vec(0.0f64..1.0, 3..8),
            threshold in 0.0f64..1.0,
            extra in 0usize..8,
        ) {
            let k = raw.len();
            let extra = extra % k;
            let selection: Vec<usize> = (0..k).filter(|&j| j % 2 == 0).collect();
            let mut grown = selection.clone();
            if !grown.contains(&extra) {
                grown.push(extra);
            }
            if qos_satisfied(&raw, &selection, threshold) {
                prop_assert!(qos_satisfied(&raw, &grown, threshold));
            }
        }
    }
}

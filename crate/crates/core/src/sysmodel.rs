//! Physical-layer and energy models.
//!
//! Rates follow the Shannon form `r = B0 * log2(1 + H * P0 / N0)` per
//! subcarrier; a link's rate is the sum over its assigned subcarriers.
//! Transmitting `s` bits over a link that holds `c` subcarriers at total
//! rate `R` costs `(s / R) * c * P0` joules, and an expert that processes
//! `n` tokens burns `a * n + b` joules. Everything here is a pure function
//! of its inputs; channel realizations are immutable after sampling.

use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::scalar::Scalar;

/// Physical constants and topology sizes of the system.
///
/// Sizes are carried in bits; `hidden_state_bits` is the payload of one
/// token's hidden state (65536 bits for a 4096-dim FP16 vector).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig<T> {
    pub num_experts: usize,
    pub num_subcarriers: usize,
    pub num_layers: usize,
    /// Subcarrier bandwidth B0 in Hz.
    pub subcarrier_bandwidth: T,
    /// Transmit power per subcarrier P0 in watts.
    pub tx_power_per_subcarrier: T,
    /// Noise power N0 in watts.
    pub noise_power: T,
    /// Hidden-state size s0 in bits.
    pub hidden_state_bits: T,
    /// Mean path loss applied to the unit-mean fading gain.
    pub mean_path_loss: T,
}

impl<T: Scalar> SystemConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.num_experts < 2 {
            return Err(Error::InvalidConfig(format!(
                "num_experts must be at least 2, got {}",
                self.num_experts
            )));
        }
        if self.num_subcarriers == 0 || self.num_layers == 0 {
            return Err(Error::InvalidConfig(
                "num_subcarriers and num_layers must be positive".into(),
            ));
        }
        let positives = [
            ("subcarrier_bandwidth", self.subcarrier_bandwidth),
            ("tx_power_per_subcarrier", self.tx_power_per_subcarrier),
            ("noise_power", self.noise_power),
            ("hidden_state_bits", self.hidden_state_bits),
            ("mean_path_loss", self.mean_path_loss),
        ];
        for (name, value) in positives {
            if !(value > T::zero()) || !value.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be strictly positive and finite, got {value}"
                )));
            }
        }
        Ok(())
    }

    /// Number of directed inter-expert links, `K * (K - 1)`.
    pub fn num_links(&self) -> usize {
        self.num_experts * (self.num_experts - 1)
    }

    /// Index of the directed link `source -> target` in row-major link order.
    ///
    /// Panics on `source == target`: local processing has no link.
    pub fn link_index(&self, source: usize, target: usize) -> usize {
        assert_ne!(source, target, "diagonal carries no link");
        let column = if target < source { target } else { target - 1 };
        source * (self.num_experts - 1) + column
    }

    /// Directed link `(source, target)` for a row-major link index.
    pub fn link_pair(&self, link: usize) -> (usize, usize) {
        let source = link / (self.num_experts - 1);
        let column = link % (self.num_experts - 1);
        let target = if column < source { column } else { column + 1 };
        (source, target)
    }
}

/// Per-expert computation energy model: `a * tokens + b` joules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertProfile<T> {
    pub index: usize,
    /// Energy per processed token, joules.
    pub comp_energy_per_token: T,
    /// Fixed per-round energy offset, joules.
    pub comp_energy_offset: T,
}

impl<T: Scalar> ExpertProfile<T> {
    pub fn new(index: usize, comp_energy_per_token: T, comp_energy_offset: T) -> Result<Self> {
        if !(comp_energy_per_token > T::zero()) {
            return Err(Error::InvalidConfig(format!(
                "comp_energy_per_token must be positive, got {comp_energy_per_token}"
            )));
        }
        if comp_energy_offset < T::zero() {
            return Err(Error::InvalidConfig(format!(
                "comp_energy_offset must be nonnegative, got {comp_energy_offset}"
            )));
        }
        Ok(Self { index, comp_energy_per_token, comp_energy_offset })
    }
}

/// One draw of the fading channel: gains and derived per-subcarrier rates
/// for every directed expert pair. The diagonal `i == j` is unused.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization<T> {
    pub num_experts: usize,
    pub num_subcarriers: usize,
    /// Flattened `K x K x M` gains, index `(i * K + j) * M + m`.
    pub gains: Vec<T>,
    /// Flattened `K x K x M` rates in bits/s, same layout.
    pub rates: Vec<T>,
    pub rng_seed: u64,
}

impl<T: Scalar> ChannelRealization<T> {
    #[inline]
    fn offset(&self, source: usize, target: usize, subcarrier: usize) -> usize {
        (source * self.num_experts + target) * self.num_subcarriers + subcarrier
    }

    #[inline]
    pub fn gain(&self, source: usize, target: usize, subcarrier: usize) -> T {
        self.gains[self.offset(source, target, subcarrier)]
    }

    #[inline]
    pub fn rate(&self, source: usize, target: usize, subcarrier: usize) -> T {
        self.rates[self.offset(source, target, subcarrier)]
    }

    /// Largest single-subcarrier rate on the directed link.
    pub fn max_rate(&self, source: usize, target: usize) -> T {
        (0..self.num_subcarriers)
            .map(|m| self.rate(source, target, m))
            .fold(T::zero(), T::max)
    }

    /// Subcarrier with the largest rate on the link, ties to the smaller index.
    pub fn max_rate_subcarrier(&self, source: usize, target: usize) -> usize {
        let mut best = 0;
        for m in 1..self.num_subcarriers {
            if self.rate(source, target, m) > self.rate(source, target, best) {
                best = m;
            }
        }
        best
    }

    pub fn validate(&self) -> Result<()> {
        let expect = self.num_experts * self.num_experts * self.num_subcarriers;
        if self.gains.len() != expect || self.rates.len() != expect {
            return Err(Error::InvalidConfig(format!(
                "channel arrays must hold {expect} entries"
            )));
        }
        for &g in &self.gains {
            if g < T::zero() || !g.is_finite() {
                return Err(Error::NegativeGain(g.to_f64_lossy()));
            }
        }
        for &r in &self.rates {
            if r < T::zero() || !r.is_finite() {
                return Err(Error::InvalidConfig(format!("rate {r} out of range")));
            }
        }
        Ok(())
    }
}

/// Shannon rate of one subcarrier: `B0 * log2(1 + gain * P0 / N0)` bits/s.
///
/// Monotone nondecreasing in the gain, the transmit power and the bandwidth.
pub fn subcarrier_rate<T: Scalar>(gain: T, cfg: &SystemConfig<T>) -> Result<T> {
    if gain < T::zero() {
        return Err(Error::NegativeGain(gain.to_f64_lossy()));
    }
    let snr = gain * cfg.tx_power_per_subcarrier / cfg.noise_power;
    Ok(cfg.subcarrier_bandwidth * (T::one() + snr).log2())
}

/// Total link rate: dot product of the subcarrier flags with the rates.
pub fn link_rate<T: Scalar>(flags: &[bool], rates: &[T]) -> T {
    assert_eq!(flags.len(), rates.len(), "flag and rate rows must match");
    flags
        .iter()
        .zip(rates)
        .filter(|(&used, _)| used)
        .map(|(_, &r)| r)
        .sum()
}

/// Energy to push `s_bits` over a link: `(s / R) * c * P0` where `c` is the
/// number of assigned subcarriers and `R` their summed rate. Zero traffic
/// costs zero regardless of the assignment.
pub fn comm_energy<T: Scalar>(
    s_bits: T,
    flags: &[bool],
    rates: &[T],
    cfg: &SystemConfig<T>,
) -> Result<T> {
    if s_bits == T::zero() {
        return Ok(T::zero());
    }
    let total_rate = link_rate(flags, rates);
    if !(total_rate > T::zero()) {
        return Err(Error::InfeasibleLink { link: None, bits: s_bits.to_f64_lossy() });
    }
    let count = T::from_usize(flags.iter().filter(|&&f| f).count()).unwrap();
    Ok(s_bits / total_rate * count * cfg.tx_power_per_subcarrier)
}

/// Computation energy of one expert for a round: `a * tokens + b`.
pub fn comp_energy<T: Scalar>(profile: &ExpertProfile<T>, inbound_tokens: usize) -> T {
    profile.comp_energy_per_token * T::from_usize(inbound_tokens).unwrap()
        + profile.comp_energy_offset
}

/// Samples a block-fading channel: each gain is `mean_path_loss * X` with
/// `X` unit-mean exponential (squared Rayleigh envelope), independent across
/// links and subcarriers. Identical seeds give identical realizations.
pub fn sample_channel<T: Scalar>(rng_seed: u64, cfg: &SystemConfig<T>) -> ChannelRealization<T> {
    let k = cfg.num_experts;
    let m = cfg.num_subcarriers;
    let mut rng = rng_from_seed(rng_seed);
    let mut gains = vec![T::zero(); k * k * m];
    let mut rates = vec![T::zero(); k * k * m];
    for i in 0..k {
        for j in 0..k {
            for s in 0..m {
                if i == j {
                    continue;
                }
                let x: f64 = Exp1.sample(&mut rng);
                let gain = cfg.mean_path_loss * T::from_f64_lossy(x);
                let idx = (i * k + j) * m + s;
                gains[idx] = gain;
                rates[idx] = subcarrier_rate(gain, cfg).expect("nonnegative gain");
            }
        }
    }
    ChannelRealization { num_experts: k, num_subcarriers: m, gains, rates, rng_seed }
}

/// Binary subcarrier allocation, stored as the sorted subcarrier list of
/// each directed link. Exclusivity (each subcarrier on at most one link) is
/// checked by [`SubcarrierAssignment::is_exclusive`] rather than enforced at
/// construction, because the lower-bound benchmark deliberately violates it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubcarrierAssignment {
    pub num_experts: usize,
    pub num_subcarriers: usize,
    /// Per directed link (row-major order), the sorted assigned subcarriers.
    subcarriers: Vec<Vec<usize>>,
}

impl SubcarrierAssignment {
    pub fn empty(num_experts: usize, num_subcarriers: usize) -> Self {
        let links = num_experts * (num_experts - 1);
        Self { num_experts, num_subcarriers, subcarriers: vec![Vec::new(); links] }
    }

    fn link_index(&self, source: usize, target: usize) -> usize {
        assert_ne!(source, target, "diagonal carries no link");
        let column = if target < source { target } else { target - 1 };
        source * (self.num_experts - 1) + column
    }

    /// Adds a subcarrier to the link, keeping the list sorted and unique.
    pub fn assign(&mut self, source: usize, target: usize, subcarrier: usize) {
        assert!(subcarrier < self.num_subcarriers, "subcarrier out of range");
        let idx = self.link_index(source, target);
        if let Err(pos) = self.subcarriers[idx].binary_search(&subcarrier) {
            self.subcarriers[idx].insert(pos, subcarrier);
        }
    }

    pub fn clear_link(&mut self, source: usize, target: usize) {
        let idx = self.link_index(source, target);
        self.subcarriers[idx].clear();
    }

    pub fn link_subcarriers(&self, source: usize, target: usize) -> &[usize] {
        &self.subcarriers[self.link_index(source, target)]
    }

    /// Subcarrier flags of the link as a dense row of length M.
    pub fn flags_row(&self, source: usize, target: usize) -> Vec<bool> {
        let mut row = vec![false; self.num_subcarriers];
        for &m in self.link_subcarriers(source, target) {
            row[m] = true;
        }
        row
    }

    /// Summed rate of the link under a channel realization.
    pub fn link_rate<T: Scalar>(&self, channel: &ChannelRealization<T>, source: usize, target: usize) -> T {
        self.link_subcarriers(source, target)
            .iter()
            .map(|&m| channel.rate(source, target, m))
            .sum()
    }

    /// True when every subcarrier serves at most one directed link.
    pub fn is_exclusive(&self) -> bool {
        let mut used = vec![false; self.num_subcarriers];
        for list in &self.subcarriers {
            for &m in list {
                if used[m] {
                    return false;
                }
                used[m] = true;
            }
        }
        true
    }

    pub fn total_assigned(&self) -> usize {
        self.subcarriers.iter().map(Vec::len).sum()
    }
}

/// Per-token expert selections: for every source expert and token, the sorted
/// set of experts chosen to process it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionMatrix {
    pub num_experts: usize,
    /// `selected[i][n]` lists the target experts of token `n` at expert `i`.
    selected: Vec<Vec<Vec<usize>>>,
}

impl SelectionMatrix {
    pub fn new(num_experts: usize, tokens_per_expert: &[usize]) -> Self {
        assert_eq!(tokens_per_expert.len(), num_experts);
        let selected = tokens_per_expert.iter().map(|&n| vec![Vec::new(); n]).collect();
        Self { num_experts, selected }
    }

    pub fn tokens_at(&self, source: usize) -> usize {
        self.selected[source].len()
    }

    pub fn total_tokens(&self) -> usize {
        self.selected.iter().map(Vec::len).sum()
    }

    pub fn set(&mut self, source: usize, token: usize, mut targets: Vec<usize>) {
        targets.sort_unstable();
        targets.dedup();
        assert!(targets.iter().all(|&j| j < self.num_experts));
        self.selected[source][token] = targets;
    }

    pub fn get(&self, source: usize, token: usize) -> &[usize] {
        &self.selected[source][token]
    }

    /// Tokens routed from `source` to `target` (diagonal included).
    pub fn route_count(&self, source: usize, target: usize) -> usize {
        self.selected[source]
            .iter()
            .filter(|sel| sel.binary_search(&target).is_ok())
            .count()
    }

    /// Tokens processed by `target` from every source, local ones included.
    pub fn inbound_tokens(&self, target: usize) -> usize {
        (0..self.num_experts).map(|i| self.route_count(i, target)).sum()
    }
}

/// Scheduled traffic in bits per directed expert pair: `s[i][j]` is the
/// hidden-state size times the number of tokens routed from `i` to `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficMatrix<T> {
    pub num_experts: usize,
    /// Flattened `K x K` token counts, index `i * K + j`.
    pub counts: Vec<usize>,
    /// Flattened `K x K` traffic in bits.
    pub bits: Vec<T>,
}

impl<T: Scalar> TrafficMatrix<T> {
    pub fn from_selection(alpha: &SelectionMatrix, hidden_state_bits: T) -> Self {
        let k = alpha.num_experts;
        let mut counts = vec![0usize; k * k];
        let mut bits = vec![T::zero(); k * k];
        for i in 0..k {
            for j in 0..k {
                let c = alpha.route_count(i, j);
                counts[i * k + j] = c;
                bits[i * k + j] = hidden_state_bits * T::from_usize(c).unwrap();
            }
        }
        Self { num_experts: k, counts, bits }
    }

    pub fn bits_at(&self, source: usize, target: usize) -> T {
        self.bits[source * self.num_experts + target]
    }

    pub fn count_at(&self, source: usize, target: usize) -> usize {
        self.counts[source * self.num_experts + target]
    }

    /// Directed links with nonzero traffic, in row-major order.
    pub fn active_links(&self) -> Vec<(usize, usize)> {
        let mut links = Vec::new();
        for i in 0..self.num_experts {
            for j in 0..self.num_experts {
                if i != j && self.counts[i * self.num_experts + j] > 0 {
                    links.push((i, j));
                }
            }
        }
        links
    }
}

/// Communication/computation energy breakdown for one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport<T> {
    pub num_experts: usize,
    /// Flattened `K x K` per-link communication energy (diagonal zero).
    pub comm: Vec<T>,
    /// Per-expert computation energy.
    pub comp: Vec<T>,
    pub comm_total: T,
    pub comp_total: T,
    pub total: T,
}

impl<T: Scalar> EnergyReport<T> {
    pub fn comm_at(&self, source: usize, target: usize) -> T {
        self.comm[source * self.num_experts + target]
    }
}

/// Full objective evaluation: per-link communication energies (local
/// processing is exempt) plus per-expert computation energies, including
/// tokens an expert keeps for itself.
pub fn total_energy<T: Scalar>(
    alpha: &SelectionMatrix,
    beta: &SubcarrierAssignment,
    channel: &ChannelRealization<T>,
    profiles: &[ExpertProfile<T>],
    cfg: &SystemConfig<T>,
) -> Result<EnergyReport<T>> {
    let k = cfg.num_experts;
    assert_eq!(alpha.num_experts, k);
    assert_eq!(beta.num_experts, k);
    assert_eq!(profiles.len(), k);
    let traffic = TrafficMatrix::from_selection(alpha, cfg.hidden_state_bits);

    let mut comm = vec![T::zero(); k * k];
    let mut comm_total = T::zero();
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            let bits = traffic.bits_at(i, j);
            if bits == T::zero() {
                continue;
            }
            let subs = beta.link_subcarriers(i, j);
            let rate: T = subs.iter().map(|&m| channel.rate(i, j, m)).sum();
            if !(rate > T::zero()) {
                return Err(Error::InfeasibleLink { link: Some((i, j)), bits: bits.to_f64_lossy() });
            }
            let count = T::from_usize(subs.len()).unwrap();
            let energy = bits / rate * count * cfg.tx_power_per_subcarrier;
            comm[i * k + j] = energy;
            comm_total += energy;
        }
    }

    let mut comp = vec![T::zero(); k];
    let mut comp_total = T::zero();
    for j in 0..k {
        let energy = comp_energy(&profiles[j], alpha.inbound_tokens(j));
        comp[j] = energy;
        comp_total += energy;
    }

    Ok(EnergyReport {
        num_experts: k,
        comm,
        comp,
        comm_total,
        comp_total,
        total: comm_total + comp_total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn test_cfg() -> SystemConfig<f64> {
        SystemConfig {
            num_experts: 2,
            num_subcarriers: 3,
            num_layers: 1,
            subcarrier_bandwidth: 1e6,
            tx_power_per_subcarrier: 1e-2,
            noise_power: 1e-3,
            hidden_state_bits: 65536.0,
            mean_path_loss: 1e-2,
        }
    }

    #[test]
    fn rate_is_zero_at_zero_gain() {
        assert_eq!(subcarrier_rate(0.0, &test_cfg()).unwrap(), 0.0);
    }

    #[test]
    fn rate_is_bandwidth_at_unit_snr() {
        // gain * P0 / N0 = 1 => log2(2) = 1 => B0 bits/s
        let cfg = test_cfg();
        let gain = cfg.noise_power / cfg.tx_power_per_subcarrier;
        assert_eq!(subcarrier_rate(gain, &cfg).unwrap(), 1e6);
    }

    #[test]
    fn rate_matches_reference_evaluation() {
        // B0 = 1e6, P0/N0 = 10, gain = 1e-2 => 1e6 * log2(1.1)
        let r = subcarrier_rate(1e-2, &test_cfg()).unwrap();
        let expect = 137503.52374993502; // 1e6 * log2(1.1), high-precision
        assert!((r - expect).abs() / expect < 1e-12, "r = {r}");
    }

    #[test]
    fn rate_rejects_negative_gain() {
        assert!(matches!(subcarrier_rate(-1.0, &test_cfg()), Err(Error::NegativeGain(_))));
    }

    #[test]
    fn link_rate_sums_selected_subcarriers() {
        let rates = [1e6, 2e6, 3e6];
        assert_eq!(link_rate(&[false, false, false], &rates), 0.0);
        assert_eq!(link_rate(&[true, false, false], &[1e6, 2e6, 4e6]), 1e6);
        assert_eq!(link_rate(&[true, false, true], &rates), 4e6);
    }

    #[test]
    fn comm_energy_reference_values() {
        let cfg = test_cfg();
        assert_eq!(comm_energy(0.0, &[true, false, false], &[1e6, 1.0, 1.0], &cfg).unwrap(), 0.0);
        let single = comm_energy(65536.0, &[true], &[1e6], &cfg).unwrap();
        assert!((single - 6.5536e-4).abs() < 1e-18);
        let double = comm_energy(65536.0, &[true, true], &[1e6, 3e6], &cfg).unwrap();
        assert!((double - 3.2768e-4).abs() < 1e-18);
    }

    #[test]
    fn comm_energy_rejects_zero_rate_with_traffic() {
        let cfg = test_cfg();
        let err = comm_energy(1.0, &[false], &[1e6], &cfg);
        assert!(matches!(err, Err(Error::InfeasibleLink { .. })));
    }

    #[test]
    fn comp_energy_reference_values() {
        let p = ExpertProfile::new(0, 1e-3, 0.0).unwrap();
        assert_eq!(comp_energy(&p, 5), 5e-3);
        assert_eq!(comp_energy(&p, 0), 0.0);
        let q = ExpertProfile::new(1, 2e-3, 1e-4).unwrap();
        assert!((comp_energy(&q, 3) - 6.1e-3f64).abs() < 1e-18);
    }

    #[test]
    fn total_energy_all_zero_selection_is_sum_of_offsets() {
        let cfg = test_cfg();
        let alpha = SelectionMatrix::new(2, &[1, 1]);
        let beta = SubcarrierAssignment::empty(2, 3);
        let channel = sample_channel(7, &cfg);
        let profiles = vec![
            ExpertProfile::new(0, 1e-3, 2e-4).unwrap(),
            ExpertProfile::new(1, 2e-3, 3e-4).unwrap(),
        ];
        let report = total_energy(&alpha, &beta, &channel, &profiles, &cfg).unwrap();
        assert_eq!(report.comm_total, 0.0);
        assert_eq!(report.total, 5e-4);
    }

    #[test]
    fn total_energy_local_only_has_no_comm() {
        let cfg = test_cfg();
        let mut alpha = SelectionMatrix::new(2, &[2, 1]);
        alpha.set(0, 0, vec![0]);
        alpha.set(0, 1, vec![0]);
        alpha.set(1, 0, vec![1]);
        let beta = SubcarrierAssignment::empty(2, 3);
        let channel = sample_channel(7, &cfg);
        let profiles = vec![
            ExpertProfile::new(0, 1e-3, 0.0).unwrap(),
            ExpertProfile::new(1, 2e-3, 0.0).unwrap(),
        ];
        let report = total_energy(&alpha, &beta, &channel, &profiles, &cfg).unwrap();
        assert_eq!(report.comm_total, 0.0);
        assert_eq!(report.comp_total, 2.0 * 1e-3 + 1.0 * 2e-3);
    }

    #[test]
    fn total_energy_single_remote_token_reference() {
        // One token from expert 0 to expert 1 over a 1e6 bits/s subcarrier:
        // comm 6.5536e-4 J plus comp 1e-3 J.
        let mut cfg = test_cfg();
        cfg.num_subcarriers = 1;
        let mut alpha = SelectionMatrix::new(2, &[1, 0]);
        alpha.set(0, 0, vec![1]);
        let mut beta = SubcarrierAssignment::empty(2, 1);
        beta.assign(0, 1, 0);
        // Channel crafted so the (0 -> 1) rate is exactly 1e6 bits/s.
        let gain = cfg.noise_power / cfg.tx_power_per_subcarrier;
        let mut channel = sample_channel(1, &cfg);
        let idx = 1; // (source 0, target 1, subcarrier 0) with K = 2, M = 1
        channel.gains[idx] = gain;
        channel.rates[idx] = subcarrier_rate(gain, &cfg).unwrap();
        let profiles = vec![
            ExpertProfile::new(0, 5e-3, 0.0).unwrap(),
            ExpertProfile::new(1, 1e-3, 0.0).unwrap(),
        ];
        let report = total_energy(&alpha, &beta, &channel, &profiles, &cfg).unwrap();
        assert!((report.total - 1.65536e-3).abs() < 1e-15, "total = {}", report.total);
    }

    #[test]
    fn sample_channel_is_deterministic() {
        let cfg = test_cfg();
        let a = sample_channel::<f64>(42, &cfg);
        let b = sample_channel::<f64>(42, &cfg);
        assert_eq!(a, b);
        let c = sample_channel::<f64>(43, &cfg);
        assert_ne!(a, c);
    }

    #[test]
    fn sample_channel_rates_nonnegative_finite() {
        let cfg = test_cfg();
        for seed in 0..20 {
            let ch = sample_channel::<f64>(seed, &cfg);
            ch.validate().unwrap();
        }
    }

    #[test]
    fn total_energy_decomposition_over_random_pairs() {
        let cfg = SystemConfig { num_experts: 3, num_subcarriers: 8, ..test_cfg() };
        let channel = sample_channel(11, &cfg);
        let profiles: Vec<_> = (0..3)
            .map(|j| ExpertProfile::new(j, (j as f64 + 1.0) * 1e-3, 1e-5).unwrap())
            .collect();
        let mut rng = rng_from_seed(99);
        for _ in 0..1000 {
            let tokens = [rng.random_range(0..3usize), rng.random_range(0..3), rng.random_range(0..3)];
            let mut alpha = SelectionMatrix::new(3, &tokens);
            for i in 0..3 {
                for n in 0..tokens[i] {
                    let mut sel = Vec::new();
                    for j in 0..3 {
                        if rng.random_bool(0.5) {
                            sel.push(j);
                        }
                    }
                    if sel.is_empty() {
                        sel.push(i);
                    }
                    alpha.set(i, n, sel);
                }
            }
            let mut beta = SubcarrierAssignment::empty(3, 8);
            let mut free: Vec<usize> = (0..8).collect();
            for i in 0..3 {
                for j in 0..3 {
                    if i != j && alpha.route_count(i, j) > 0 {
                        let pick = free.remove(rng.random_range(0..free.len()));
                        beta.assign(i, j, pick);
                    }
                }
            }
            let report = total_energy(&alpha, &beta, &channel, &profiles, &cfg).unwrap();
            let comm_sum: f64 = report.comm.iter().sum();
            let comp_sum: f64 = report.comp.iter().sum();
            assert!((report.total - (comm_sum + comp_sum)).abs() <= 1e-12 * report.total.max(1.0));
            assert!(report.comm.iter().all(|&e| e >= 0.0));
            assert!(report.comp.iter().all(|&e| e >= 0.0));
        }
    }

    #[test]
    fn link_indexing_round_trips() {
        let cfg = SystemConfig { num_experts: 4, ..test_cfg() };
        let mut seen = vec![false; cfg.num_links()];
        for i in 0..4 {
            for j in 0..4 {
                if i == j {
                    continue;
                }
                let idx = cfg.link_index(i, j);
                assert!(!seen[idx]);
                seen[idx] = true;
                assert_eq!(cfg.link_pair(idx), (i, j));
            }
        }
        assert!(seen.into_iter().all(|s| s));
    }

    proptest! {
        #[test]
        fn rate_monotone_in_gain_power_bandwidth(
            g1 in 0.0f64..1.0, g2 in 0.0f64..1.0,
            p in 1e-4f64..1.0, b in 1e3f64..1e7, scale in 1.0f64..8.0,
        ) {
            let mut cfg = test_cfg();
            cfg.tx_power_per_subcarrier = p;
            cfg.subcarrier_bandwidth = b;
            let (lo, hi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
            let r_lo = subcarrier_rate(lo, &cfg).unwrap();
            let r_hi = subcarrier_rate(hi, &cfg).unwrap();
            prop_assert!(r_lo <= r_hi);

            let mut more_power = cfg.clone();
            more_power.tx_power_per_subcarrier = p * scale;
            prop_assert!(subcarrier_rate(hi, &more_power).unwrap() >= r_hi);

            let mut more_band = cfg.clone();
            more_band.subcarrier_bandwidth = b * scale;
            prop_assert!(subcarrier_rate(hi, &more_band).unwrap() >= r_hi);
        }

        #[test]
        fn comm_energy_is_linear_in_bits(s in 1.0f64..1e7, r1 in 1e3f64..1e7, r2 in 1e3f64..1e7) {
            let cfg = test_cfg();
            let flags = [true, true, false];
            let rates = [r1, r2, 1.0];
            let once = comm_energy(s, &flags, &rates, &cfg).unwrap();
            let twice = comm_energy(2.0 * s, &flags, &rates, &cfg).unwrap();
            prop_assert!((twice - 2.0 * once).abs() <= 1e-12 * twice.abs());
        }

        #[test]
        fn comm_energy_single_subcarrier_closed_form(s in 1.0f64..1e7, r in 1e3f64..1e7) {
            let cfg = test_cfg();
            let e = comm_energy(s, &[false, true, false], &[1.0, r, 1.0], &cfg).unwrap();
            let closed = cfg.tx_power_per_subcarrier * s / r;
            prop_assert!((e - closed).abs() <= 1e-12 * closed.abs());
        }
    }
}

//! Decay: every sender transmits with probability `2^{-j}` while `j` sweeps
//! `1..=inner`, repeated `reps` times per message and `outer` times overall.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{RunResult, Tracker};
use crate::error::{Error, Result};
use crate::radio_sim::{
    message_payload, AdjacencyList, Packet, PacketBudget, RoutingAudit, Simulator, TransmitMap,
};
use crate::scalar::ceil_log2;
use crate::topology::BipartiteNetwork;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecayConfig {
    pub outer: u32,
    pub inner: u32,
    pub reps: u32,
    pub seed: u64,
    /// Bytes per synthetic message.
    pub payload_len: usize,
}

impl DecayConfig {
    /// `outer = inner = ⌈log₂ n⌉`, `reps = 4`, 8-byte messages.
    pub fn defaults_for(n: usize, seed: u64) -> Self {
        let l = ceil_log2(n.max(2) as u64);
        DecayConfig {
            outer: l,
            inner: l,
            reps: 4,
            seed,
            payload_len: 8,
        }
    }

    pub fn rounds_per_message(&self) -> u64 {
        u64::from(self.outer) * u64::from(self.inner) * u64::from(self.reps)
    }

    fn validate(&self) -> Result<()> {
        if self.outer == 0 || self.inner == 0 || self.reps == 0 {
            return Err(Error::InvalidParameter(
                "outer, inner and reps must be positive".into(),
            ));
        }
        if self.payload_len < 4 {
            return Err(Error::InvalidParameter(
                "payload_len must be at least 4".into(),
            ));
        }
        Ok(())
    }
}

/// One message; runs exactly `outer·inner·reps` rounds.
pub fn decay_single(net: &BipartiteNetwork, cfg: &DecayConfig) -> Result<RunResult> {
    run(net, 1, cfg, "decay")
}

/// Decay per message as a routing protocol: for each outer iteration, each
/// message gets `reps` passes of the inner loop. Always runs exactly
/// `k·outer·inner·reps` rounds.
pub fn repeated_decay_multicast(
    net: &BipartiteNetwork,
    k: u32,
    cfg: &DecayConfig,
) -> Result<RunResult> {
    run(net, k, cfg, "repeated-decay")
}

fn run(net: &BipartiteNetwork, k: u32, cfg: &DecayConfig, name: &str) -> Result<RunResult> {
    cfg.validate()?;
    let adj = AdjacencyList::from_bipartite(net);
    let eta = net.eta() as usize;
    let msgs: Vec<Arc<[u8]>> = (1..=k)
        .map(|m| message_payload(m, cfg.payload_len))
        .collect();
    let mut audit = RoutingAudit::new(net.node_count(), &msgs)?;
    for s in 0..eta {
        audit.give_all(s);
    }
    let budget = PacketBudget::default_for(net.node_count());
    let mut sim = Simulator::new(&adj)
        .with_budget(budget)
        .with_routing_audit(audit);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut tracker = Tracker::new((0..net.num_receivers() as u64).collect(), k as usize);
    for _ in 0..cfg.outer {
        for (m, payload) in msgs.iter().enumerate() {
            for _ in 0..cfg.reps {
                for j in 1..=cfg.inner {
                    let p = 0.5f64.powi(j as i32);
                    let tx: TransmitMap = (0..eta)
                        .filter(|_| rng.random_bool(p))
                        .map(|s| (s, Packet::Data(payload.clone())))
                        .collect();
                    let heard = sim.transmit(&tx)?;
                    let round = sim.rounds();
                    for (v, _) in heard.iter().filter(|&(v, _)| v >= eta) {
                        tracker.deliver(v - eta, m, round);
                    }
                }
            }
        }
    }
    let mut config = serde_json::to_value(cfg)?;
    config["budget_bits"] = budget.bits.into();
    config["k"] = k.into();
    Ok(tracker.finish(name, sim.rounds(), config))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::make_bipartite;

    #[test]
    fn fixed_round_count() {
        let net = make_bipartite(4, vec![vec![1], vec![2, 3], vec![1, 2, 3, 4]]).unwrap();
        let cfg = DecayConfig::defaults_for(net.node_count(), 3);
        let single = decay_single(&net, &cfg).unwrap();
        assert_eq!(single.rounds, cfg.rounds_per_message());
        let multi = repeated_decay_multicast(&net, 5, &cfg).unwrap();
        assert_eq!(multi.rounds, 5 * cfg.rounds_per_message());
        assert!(multi.throughput <= super::super::exact_ratio(1, 1));
    }

    #[test]
    fn deterministic() {
        let net = make_bipartite(3, vec![vec![1, 2], vec![3]]).unwrap();
        let cfg = DecayConfig::defaults_for(net.node_count(), 9);
        assert_eq!(
            repeated_decay_multicast(&net, 3, &cfg).unwrap(),
            repeated_decay_multicast(&net, 3, &cfg).unwrap()
        );
    }

    #[test]
    fn rejects_zero_loops() {
        let net = make_bipartite(1, vec![vec![1]]).unwrap();
        let mut cfg = DecayConfig::defaults_for(2, 0);
        cfg.reps = 0;
        assert!(decay_single(&net, &cfg).is_err());
    }
}

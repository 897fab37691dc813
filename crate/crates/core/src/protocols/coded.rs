//! Phased random linear network coding.
//!
//! Messages are split into blocks of `b`. For each block and each phase
//! `i`, every sender independently transmits a fresh random combination of
//! the block with probability `2^{-i}` for `rounds_per_phase` rounds. A
//! receiver finishes a block once its decoder reaches rank `b`; decoded
//! blocks are compared against the originals byte for byte.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{RunResult, Tracker};
use crate::coding::rlnc::{encode, random_coeffs, CodedPacket, DecoderState};
use crate::error::{Error, Result};
use crate::radio_sim::{
    message_payload, AdjacencyList, Packet, PacketBudget, Simulator, TransmitMap,
};
use crate::scalar::ceil_log2;
use crate::topology::BipartiteNetwork;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhasedCodingConfig {
    pub block_size: usize,
    /// First phase `i` (transmit probability `2^{-i}`).
    pub phase_lo: u32,
    /// Last phase, inclusive.
    pub phase_hi: u32,
    pub rounds_per_phase: u32,
    /// Bytes per synthetic message.
    pub payload_len: usize,
    pub budget_bits: usize,
    /// End a block early once every receiver has decoded it.
    pub stop_when_decoded: bool,
    pub seed: u64,
}

impl PhasedCodingConfig {
    /// `b = ⌈log₂ n⌉`, phases `1..=⌈log₂ n⌉`, `4⌈log₂ n⌉` rounds per phase,
    /// 8-byte messages and the default packet budget.
    pub fn defaults_for(n: usize, seed: u64) -> Self {
        let l = ceil_log2(n.max(2) as u64);
        PhasedCodingConfig {
            block_size: l as usize,
            phase_lo: 1,
            phase_hi: l,
            rounds_per_phase: 4 * l,
            payload_len: 8,
            budget_bits: PacketBudget::default_for(n).bits,
            stop_when_decoded: false,
            seed,
        }
    }

    pub fn with_phases(mut self, lo: u32, hi: u32) -> Self {
        self.phase_lo = lo;
        self.phase_hi = hi;
        self
    }

    pub fn budget(&self) -> PacketBudget {
        PacketBudget {
            bits: self.budget_bits,
        }
    }

    /// Rounds per block when no block stops early.
    pub fn rounds_per_block(&self) -> u64 {
        u64::from(self.phase_hi - self.phase_lo + 1) * u64::from(self.rounds_per_phase)
    }

    fn validate(&self) -> Result<()> {
        if self.block_size == 0 || self.rounds_per_phase == 0 {
            return Err(Error::InvalidParameter(
                "block_size and rounds_per_phase must be positive".into(),
            ));
        }
        if self.phase_lo > self.phase_hi {
            return Err(Error::InvalidParameter(format!(
                "empty phase range {}..={}",
                self.phase_lo, self.phase_hi
            )));
        }
        if self.payload_len < 4 {
            return Err(Error::InvalidParameter(
                "payload_len must be at least 4".into(),
            ));
        }
        Ok(())
    }
}

fn transmit_round(
    eta: usize,
    p: f64,
    block_id: u32,
    block: &[Arc<[u8]>],
    budget: PacketBudget,
    rng: &mut ChaCha8Rng,
) -> Result<TransmitMap> {
    let mut tx = TransmitMap::new();
    for s in 0..eta {
        if rng.random_bool(p) {
            let coeffs = random_coeffs(block.len(), rng);
            let pkt = encode(block_id, block, &coeffs, budget)?;
            tx.insert(s, Packet::data(pkt.to_bytes()));
        }
    }
    Ok(tx)
}

fn run_phased(
    net: &BipartiteNetwork,
    k: u32,
    cfg: &PhasedCodingConfig,
    name: &str,
    extra: serde_json::Value,
) -> Result<RunResult> {
    cfg.validate()?;
    let adj = AdjacencyList::from_bipartite(net);
    let eta = net.eta() as usize;
    let nr = net.num_receivers();
    let budget = cfg.budget();
    let msgs: Vec<Arc<[u8]>> = (1..=k)
        .map(|m| message_payload(m, cfg.payload_len))
        .collect();
    let mut sim = Simulator::new(&adj).with_budget(budget);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut tracker = Tracker::new((0..nr as u64).collect(), k as usize);

    for (bid, block) in msgs.chunks(cfg.block_size).enumerate() {
        let bid = bid as u32;
        let first = bid as usize * cfg.block_size;
        let mut decoders: Vec<DecoderState> = (0..nr)
            .map(|_| DecoderState::new(bid, block.len()))
            .collect();
        let mut pending = nr;
        'phases: for i in cfg.phase_lo..=cfg.phase_hi {
            let p = 0.5f64.powi(i as i32);
            for _ in 0..cfg.rounds_per_phase {
                if cfg.stop_when_decoded && pending == 0 {
                    break 'phases;
                }
                let tx = transmit_round(eta, p, bid, block, budget, &mut rng)?;
                let heard = sim.transmit(&tx)?;
                let round = sim.rounds();
                for (v, pkt) in heard.iter().filter(|&(v, _)| v >= eta) {
                    let r = v - eta;
                    let pkt =
                        CodedPacket::from_bytes(pkt.payload().expect("coded packets are data"))?;
                    if decoders[r].absorb(&pkt)? && decoders[r].is_decodable() {
                        let decoded = decoders[r].decode()?;
                        if decoded
                            .iter()
                            .zip(block)
                            .any(|(d, m)| d.as_slice() != &m[..])
                        {
                            return Err(Error::DecodeMismatch { block: bid });
                        }
                        for m in 0..block.len() {
                            tracker.deliver(r, first + m, round);
                        }
                        pending -= 1;
                    }
                }
            }
        }
    }
    let mut config = serde_json::to_value(cfg)?;
    config["k"] = k.into();
    if let serde_json::Value::Object(extra) = extra {
        for (key, v) in extra {
            config[key] = v;
        }
    }
    Ok(tracker.finish(name, sim.rounds(), config))
}

/// Phased coded broadcast with the phases given in `cfg`.
pub fn coded_broadcast(
    net: &BipartiteNetwork,
    k: u32,
    cfg: &PhasedCodingConfig,
) -> Result<RunResult> {
    run_phased(net, k, cfg, "coded", serde_json::json!({}))
}

/// Phase range `max(1, ⌈log₂ δ⌉)..=max(lo, ⌈log₂ Δ⌉)`.
pub fn range_phases(delta: usize, max_degree: usize) -> (u32, u32) {
    let lo = ceil_log2(delta.max(1) as u64).max(1);
    let hi = ceil_log2(max_degree.max(1) as u64).max(lo);
    (lo, hi)
}

/// Coded broadcast restricted to the phases of the promised degree range
/// `[delta, max_degree]`; errors if a receiver breaks the promise.
pub fn range_coded_broadcast(
    net: &BipartiteNetwork,
    k: u32,
    delta: usize,
    max_degree: usize,
    cfg: &PhasedCodingConfig,
) -> Result<RunResult> {
    if delta == 0 || delta > max_degree {
        return Err(Error::DegreeRangeInvalid(format!(
            "need 1 <= delta <= Delta, got delta = {delta}, Delta = {max_degree}"
        )));
    }
    if let Some((receiver, degree)) = net
        .degrees()
        .enumerate()
        .find(|&(_, d)| d < delta || d > max_degree)
    {
        return Err(Error::DegreeOutOfDeclaredRange {
            receiver,
            degree,
            delta,
            max_degree,
        });
    }
    let (lo, hi) = range_phases(delta, max_degree);
    let cfg = cfg.clone().with_phases(lo, hi);
    run_phased(
        net,
        k,
        &cfg,
        "range-coded",
        serde_json::json!({"delta": delta, "max_degree": max_degree}),
    )
}

/// Rounds in which one receiver got an innovative packet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReceptionRate {
    pub rounds: u64,
    pub innovative: u64,
}

impl ReceptionRate {
    pub fn frequency(&self) -> f64 {
        if self.rounds == 0 {
            0.0
        } else {
            self.innovative as f64 / self.rounds as f64
        }
    }
}

/// Runs `rounds` rounds of a single phase `i` and counts the rounds in which
/// `receiver` gets an innovative packet. Every measured round starts with the
/// receiver's rank below `block_size`; a full decoder starts a fresh block.
pub fn phase_reception_rate(
    net: &BipartiteNetwork,
    receiver: usize,
    phase: u32,
    rounds: u64,
    block_size: usize,
    seed: u64,
) -> Result<ReceptionRate> {
    if receiver >= net.num_receivers() || block_size == 0 {
        return Err(Error::InvalidParameter(format!(
            "receiver {receiver} / block size {block_size} out of range"
        )));
    }
    let adj = AdjacencyList::from_bipartite(net);
    let eta = net.eta() as usize;
    let target = eta + receiver;
    let block: Vec<Arc<[u8]>> = (1..=block_size as u32)
        .map(|m| message_payload(m, 8))
        .collect();
    let p = 0.5f64.powi(phase as i32);
    let mut sim = Simulator::new(&adj);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bid = 0u32;
    let mut dec = DecoderState::new(bid, block_size);
    let mut innovative = 0;
    for _ in 0..rounds {
        let tx = transmit_round(eta, p, bid, &block, PacketBudget::UNBOUNDED, &mut rng)?;
        let heard = sim.transmit(&tx)?;
        if let Some(pkt) = heard.get(target) {
            let pkt = CodedPacket::from_bytes(pkt.payload().expect("coded packets are data"))?;
            if dec.absorb(&pkt)? {
                innovative += 1;
            }
        }
        if dec.is_decodable() {
            bid += 1;
            dec = DecoderState::new(bid, block_size);
        }
    }
    Ok(ReceptionRate { rounds, innovative })
}

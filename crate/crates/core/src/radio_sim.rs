//! Synchronous round engine with radio-network collision semantics.
//!
//! In every round each node either transmits one packet or listens. A
//! listening node receives a packet iff exactly one of its neighbors
//! transmits; two or more transmitting neighbors collide and the node hears
//! nothing. Transmitting nodes never receive in the same round. There is no
//! collision detection: [`ReceptionReport`] separates collided from silent
//! listeners for analysis, but protocols only get a [`Heard`] view.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::ceil_log2;
use crate::schedule::{MessageId, TransmissionSchedule};
use crate::topology::{BipartiteNetwork, RadioGraph};

/// Packet length bound `B`, in bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PacketBudget {
    pub bits: usize,
}

impl PacketBudget {
    pub const UNBOUNDED: PacketBudget = PacketBudget { bits: usize::MAX };

    /// Default `B` for an `n`-node network: `8 * ceil(log2 n)` bytes, and
    /// never less than 32 bytes so that a coded packet header fits.
    pub fn default_for(n: usize) -> Self {
        let l = ceil_log2(n.max(2) as u64) as usize;
        PacketBudget {
            bits: 64 * l.max(4),
        }
    }

    pub fn bytes(&self) -> usize {
        self.bits / 8
    }

    pub fn admits(&self, packet: &Packet) -> bool {
        packet.bit_length() <= self.bits
    }
}

/// A transmitted packet. Noise is a reserved packet kind carrying no message;
/// it collides like any other transmission.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Packet {
    Data(Arc<[u8]>),
    Noise,
}

impl Packet {
    pub fn data(bytes: impl Into<Arc<[u8]>>) -> Self {
        Packet::Data(bytes.into())
    }

    pub fn payload(&self) -> Option<&[u8]> {
        match self {
            Packet::Data(b) => Some(b),
            Packet::Noise => None,
        }
    }

    pub fn is_noise(&self) -> bool {
        matches!(self, Packet::Noise)
    }

    /// Noise occupies a single tag byte.
    pub fn bit_length(&self) -> usize {
        match self {
            Packet::Data(b) => 8 * b.len(),
            Packet::Noise => 8,
        }
    }
}

/// Synthetic payload for message `m`: 4 bytes of big-endian id followed by
/// deterministic filler, `len >= 4` bytes in total.
pub fn message_payload(m: u32, len: usize) -> Arc<[u8]> {
    assert!(len >= 4, "message payloads need at least 4 bytes");
    let mut out = Vec::with_capacity(len);
    out.extend_from_slice(&m.to_be_bytes());
    let mut x = u64::from(m).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0xD1B5_4A32_D192_ED03;
    while out.len() < len {
        x ^= x >> 29;
        x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
        x ^= x >> 32;
        out.push(x as u8);
    }
    out.into()
}

/// Read-only neighborhood structure the engine runs on. Nodes are dense
/// indices `0..node_count()`.
pub trait Adjacency {
    fn node_count(&self) -> usize;
    fn neighbors(&self, v: usize) -> &[usize];
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdjacencyList {
    adj: Vec<Vec<usize>>,
}

impl AdjacencyList {
    pub fn new(adj: Vec<Vec<usize>>) -> Self {
        AdjacencyList { adj }
    }

    /// Sender `s` becomes node `s - 1`; receiver `j` becomes node `eta + j`.
    pub fn from_bipartite(net: &BipartiteNetwork) -> Self {
        let eta = net.eta() as usize;
        let mut adj = vec![Vec::new(); net.node_count()];
        for (j, n) in net.receivers().iter().enumerate() {
            for s in n.iter() {
                adj[s as usize - 1].push(eta + j);
                adj[eta + j].push(s as usize - 1);
            }
        }
        AdjacencyList { adj }
    }

    /// Dense indices follow [`RadioGraph::nodes`].
    pub fn from_graph(g: &RadioGraph) -> Self {
        AdjacencyList {
            adj: (0..g.node_count())
                .map(|i| g.neighbors_of_index(i).to_vec())
                .collect(),
        }
    }
}

impl Adjacency for AdjacencyList {
    fn node_count(&self) -> usize {
        self.adj.len()
    }

    fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }
}

/// Engine node of sender `s` in [`AdjacencyList::from_bipartite`].
pub fn sender_node(s: u32) -> usize {
    s as usize - 1
}

/// Engine node of receiver `j` in [`AdjacencyList::from_bipartite`].
pub fn receiver_node(net: &BipartiteNetwork, j: usize) -> usize {
    net.eta() as usize + j
}

/// Which nodes transmit this round and what; absent nodes listen.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TransmitMap(BTreeMap<usize, Packet>);

impl TransmitMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, node: usize, packet: Packet) -> Option<Packet> {
        self.0.insert(node, packet)
    }

    pub fn get(&self, node: usize) -> Option<&Packet> {
        self.0.get(&node)
    }

    pub fn contains(&self, node: usize) -> bool {
        self.0.contains_key(&node)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Packet)> {
        self.0.iter().map(|(&n, p)| (n, p))
    }
}

impl FromIterator<(usize, Packet)> for TransmitMap {
    fn from_iter<I: IntoIterator<Item = (usize, Packet)>>(iter: I) -> Self {
        TransmitMap(iter.into_iter().collect())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reception {
    pub packet: Packet,
    pub from: usize,
}

/// Per-round outcome for every listening node.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ReceptionReport {
    pub received: BTreeMap<usize, Reception>,
    pub collided: BTreeSet<usize>,
    pub silent: BTreeSet<usize>,
}

impl ReceptionReport {
    pub fn listeners(&self) -> usize {
        self.received.len() + self.collided.len() + self.silent.len()
    }
}

/// One synchronous round.
pub fn step<A: Adjacency + ?Sized>(adj: &A, tx: &TransmitMap) -> Result<ReceptionReport> {
    let n = adj.node_count();
    let mut hits = vec![0u32; n];
    let mut last = vec![usize::MAX; n];
    for (u, _) in tx.iter() {
        if u >= n {
            return Err(Error::UnknownNode(u as u64));
        }
        for &v in adj.neighbors(u) {
            hits[v] += 1;
            last[v] = u;
        }
    }
    let mut report = ReceptionReport::default();
    for v in (0..n).filter(|&v| !tx.contains(v)) {
        match hits[v] {
            0 => {
                report.silent.insert(v);
            }
            1 => {
                let from = last[v];
                let packet = tx.get(from).expect("transmitter present").clone();
                report.received.insert(v, Reception { packet, from });
            }
            _ => {
                report.collided.insert(v);
            }
        }
    }
    Ok(report)
}

/// What a protocol may observe after a round: the packets that arrived.
/// Collided and silent listeners look the same (absent).
#[derive(Clone, Debug, Default)]
pub struct Heard {
    entries: Vec<(usize, Packet)>,
}

impl Heard {
    pub fn iter(&self) -> impl Iterator<Item = (usize, &Packet)> {
        self.entries.iter().map(|(v, p)| (*v, p))
    }

    pub fn get(&self, node: usize) -> Option<&Packet> {
        self.entries
            .binary_search_by_key(&node, |(v, _)| *v)
            .ok()
            .map(|i| &self.entries[i].1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl From<&ReceptionReport> for Heard {
    fn from(r: &ReceptionReport) -> Self {
        Heard {
            entries: r
                .received
                .iter()
                .map(|(&v, rc)| (v, rc.packet.clone()))
                .collect(),
        }
    }
}

/// Store-and-forward legality check: a node may only transmit a payload
/// equal to a message currently in its buffer. Buffers grow as nodes
/// receive message payloads.
#[derive(Clone, Debug)]
pub struct RoutingAudit {
    lookup: HashMap<Arc<[u8]>, u32>,
    words: usize,
    buffers: Vec<Vec<u64>>,
}

impl RoutingAudit {
    /// `messages[i]` is the payload of message index `i`; payloads must be
    /// distinct.
    pub fn new(node_count: usize, messages: &[Arc<[u8]>]) -> Result<Self> {
        let mut lookup = HashMap::with_capacity(messages.len());
        for (i, m) in messages.iter().enumerate() {
            if lookup.insert(m.clone(), i as u32).is_some() {
                return Err(Error::InvalidParameter(format!(
                    "message {i} duplicates an earlier payload"
                )));
            }
        }
        let words = messages.len().div_ceil(64);
        Ok(RoutingAudit {
            lookup,
            words,
            buffers: vec![vec![0; words]; node_count],
        })
    }

    pub fn give(&mut self, node: usize, message: u32) {
        self.buffers[node][message as usize / 64] |= 1 << (message % 64);
    }

    pub fn give_all(&mut self, node: usize) {
        for m in 0..self.lookup.len() as u32 {
            self.give(node, m);
        }
    }

    pub fn holds(&self, node: usize, message: u32) -> bool {
        self.buffers[node][message as usize / 64] >> (message % 64) & 1 == 1
    }

    pub fn held_count(&self, node: usize) -> usize {
        self.buffers[node]
            .iter()
            .map(|w| w.count_ones() as usize)
            .sum()
    }

    pub fn message_count(&self) -> usize {
        self.lookup.len()
    }

    pub fn message_index(&self, payload: &[u8]) -> Option<u32> {
        self.lookup.get(payload).copied()
    }

    pub fn check(&self, tx: &TransmitMap, round: u64) -> Result<()> {
        for (node, packet) in tx.iter() {
            if let Some(p) = packet.payload() {
                match self.lookup.get(p) {
                    Some(&m) if self.holds(node, m) => {}
                    _ => return Err(Error::RoutingViolation { node, round }),
                }
            }
        }
        Ok(())
    }

    fn absorb(&mut self, report: &ReceptionReport) {
        for (&v, rc) in &report.received {
            if let Some(&m) = rc.packet.payload().and_then(|p| self.lookup.get(p)) {
                self.give(v, m);
            }
        }
        debug_assert!(self.buffers.iter().all(|b| b.len() == self.words));
    }
}

/// Round driver: packet-budget enforcement, optional routing audit and a
/// round counter around [`step`].
pub struct Simulator<'a, A: Adjacency + ?Sized> {
    adj: &'a A,
    budget: PacketBudget,
    audit: Option<RoutingAudit>,
    round: u64,
}

impl<'a, A: Adjacency + ?Sized> Simulator<'a, A> {
    pub fn new(adj: &'a A) -> Self {
        Simulator {
            adj,
            budget: PacketBudget::UNBOUNDED,
            audit: None,
            round: 0,
        }
    }

    pub fn with_budget(mut self, budget: PacketBudget) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_routing_audit(mut self, audit: RoutingAudit) -> Self {
        self.audit = Some(audit);
        self
    }

    pub fn audit(&self) -> Option<&RoutingAudit> {
        self.audit.as_ref()
    }

    /// Rounds executed so far.
    pub fn rounds(&self) -> u64 {
        self.round
    }

    /// Runs one round and returns the full report (analysis use).
    pub fn step_report(&mut self, tx: &TransmitMap) -> Result<ReceptionReport> {
        for (_, p) in tx.iter() {
            if !self.budget.admits(p) {
                return Err(Error::PayloadTooLarge {
                    bits: p.bit_length(),
                    budget: self.budget.bits,
                });
            }
        }
        let round = self.round + 1;
        if let Some(audit) = &self.audit {
            audit.check(tx, round)?;
        }
        let report = step(self.adj, tx)?;
        if let Some(audit) = &mut self.audit {
            audit.absorb(&report);
        }
        self.round = round;
        Ok(report)
    }

    /// Runs one round and returns only what listeners can observe.
    pub fn transmit(&mut self, tx: &TransmitMap) -> Result<Heard> {
        self.step_report(tx).map(|r| Heard::from(&r))
    }

    /// Advances the round counter without any transmission.
    pub fn idle(&mut self) {
        self.round += 1;
    }
}

/// Messages one receiver got from a schedule run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReceiverDelivery {
    pub receiver: usize,
    pub messages: Vec<MessageId>,
    /// 1-based round of first arrival per message.
    pub first_round: BTreeMap<MessageId, u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DeliveryReport {
    pub receivers: Vec<ReceiverDelivery>,
}

impl DeliveryReport {
    /// Real messages (ids `1..=k`) that reached every receiver.
    pub fn delivered_to_all(&self, k: u32) -> BTreeSet<MessageId> {
        (1..=k)
            .map(MessageId)
            .filter(|m| self.receivers.iter().all(|r| r.first_round.contains_key(m)))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Executes a schedule on a bipartite network: in round `r`, every sender in
/// `T_r^m` transmits the payload of `m` (noise for [`MessageId::NOISE`]).
pub fn run_schedule(
    net: &BipartiteNetwork,
    sched: &TransmissionSchedule,
    payloads: &BTreeMap<MessageId, Packet>,
) -> Result<DeliveryReport> {
    if sched.eta() != net.eta() {
        return Err(Error::MalformedSchedule(format!(
            "schedule has {} senders, network has {}",
            sched.eta(),
            net.eta()
        )));
    }
    let adj = AdjacencyList::from_bipartite(net);
    let eta = net.eta() as usize;
    let mut first: Vec<BTreeMap<MessageId, u64>> = vec![BTreeMap::new(); net.num_receivers()];
    for (r, round) in sched.rounds().iter().enumerate() {
        let mut tx = TransmitMap::new();
        let mut sender_msg = vec![MessageId::NOISE; eta + 1];
        for (&m, senders) in round {
            let packet = if m.is_noise() {
                Packet::Noise
            } else {
                payloads
                    .get(&m)
                    .cloned()
                    .ok_or_else(|| Error::MalformedSchedule(format!("no payload for {m}")))?
            };
            for s in senders.iter() {
                sender_msg[s as usize] = m;
                tx.insert(sender_node(s), packet.clone());
            }
        }
        let report = step(&adj, &tx)?;
        for (&v, rc) in report.received.range(eta..) {
            let m = sender_msg[rc.from + 1];
            if !m.is_noise() {
                first[v - eta].entry(m).or_insert(r as u64 + 1);
            }
        }
    }
    Ok(DeliveryReport {
        receivers: first
            .into_iter()
            .enumerate()
            .map(|(receiver, first_round)| ReceiverDelivery {
                receiver,
                messages: first_round.keys().copied().collect(),
                first_round,
            })
            .collect(),
    })
}

/// Payload table `m -> message_payload(m, len)` for ids `1..=k`.
pub fn synthetic_payloads(k: u32, len: usize) -> BTreeMap<MessageId, Packet> {
    (1..=k)
        .map(|m| (MessageId(m), Packet::Data(message_payload(m, len))))
        .collect()
}

//! Pipelined broadcast on a general graph.
//!
//! The graph is cut into BFS layers. Messages move in batches of `k'`; batch
//! `j` crosses layer pair `p` (layer `p` to layer `p + 1`) in slot
//! `p + spacing·j`, so pairs active in the same slot are at least `spacing`
//! apart. A slot lasts as long as the longest hop schedule active in it.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{RunResult, Tracker};
use crate::error::{Error, Result};
use crate::radio_sim::{
    message_payload, Adjacency, AdjacencyList, Packet, PacketBudget, RoutingAudit, Simulator,
    TransmitMap,
};
use crate::schedule::{MessageId, TransmissionSchedule};
use crate::sts::prefix_sts;
use crate::synthesis::{record_delivery, sts_to_schedule, SynthMode, DEFAULT_SYNTH_CAP};
use crate::topology::{layering, LayerPair, Layering, RadioGraph};

/// How one batch crosses one layer pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InnerProtocol {
    /// Each sender sends each message alone: `|batch|·|layer|` rounds.
    Tdma,
    /// Repeated exact synthesis of the prefix STS of the layer.
    PrefixSts,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelinePlan {
    /// `k'`; defaults to `⌈k / D⌉`.
    pub batch_size: Option<u32>,
    pub spacing: u32,
    pub inner: InnerProtocol,
    /// Largest layer accepted by [`InnerProtocol::PrefixSts`].
    pub synth_cap: u32,
}

impl Default for PipelinePlan {
    fn default() -> Self {
        PipelinePlan {
            batch_size: None,
            spacing: 3,
            inner: InnerProtocol::Tdma,
            synth_cap: DEFAULT_SYNTH_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub result: RunResult,
    /// Eccentricity `D` of the source.
    pub depth: usize,
    pub batch_size: u32,
    pub batches: u32,
    pub slots: u64,
    /// Longest hop schedule for a full batch over all pairs.
    pub rounds_per_batch: u64,
    /// Node-rounds in which an intended receiver of one active pair had a
    /// transmitting neighbor outside its own sender layer.
    pub inter_pair_collisions: u64,
    /// Smallest index gap between pairs active in the same slot.
    pub min_active_gap: Option<usize>,
    /// `(D + ⌈k/k'⌉)·rounds_per_batch`.
    pub bound: u64,
}

/// One hop round: node index to message index (`None` = noise).
type HopRound = Vec<(usize, Option<usize>)>;

struct HopPlanner<'a> {
    g: &'a RadioGraph,
    inner: InnerProtocol,
    cap: u32,
    synthesized: HashMap<usize, (TransmissionSchedule, Vec<MessageId>)>,
}

impl HopPlanner<'_> {
    fn prepare(&mut self, pair: &LayerPair) -> Result<()> {
        if self.inner != InnerProtocol::PrefixSts || self.synthesized.contains_key(&pair.index) {
            return Ok(());
        }
        let eta = pair.senders.len() as u32;
        let mode = SynthMode::Exact { cap: self.cap };
        let (sched, mut plan) = sts_to_schedule(&prefix_sts(eta), eta, mode)?;
        record_delivery(&mut plan, &pair.net)?;
        let ok: Vec<MessageId> = plan.delivered.unwrap_or_default().into_iter().collect();
        if ok.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "layer pair {} delivers nothing",
                pair.index
            )));
        }
        self.synthesized.insert(pair.index, (sched, ok));
        Ok(())
    }

    fn schedule(&mut self, pair: &LayerPair, batch: &[usize]) -> Result<Vec<HopRound>> {
        let node = |id: u32| self.g.index_of(id).expect("layer node");
        match self.inner {
            InnerProtocol::Tdma => Ok(batch
                .iter()
                .flat_map(|&m| pair.senders.iter().map(move |&s| (s, m)))
                .map(|(s, m)| vec![(node(s), Some(m))])
                .collect()),
            InnerProtocol::PrefixSts => {
                self.prepare(pair)?;
                let (sched, ok) = &self.synthesized[&pair.index];
                let mut out = Vec::new();
                for chunk in batch.chunks(ok.len()) {
                    let slot: HashMap<MessageId, usize> =
                        ok.iter().copied().zip(chunk.iter().copied()).collect();
                    for round in sched.rounds() {
                        let mut hr = HopRound::new();
                        for (m, senders) in round {
                            let real = slot.get(m).copied();
                            hr.extend(
                                senders
                                    .iter()
                                    .map(|s| (node(pair.senders[s as usize - 1]), real)),
                            );
                        }
                        out.push(hr);
                    }
                }
                Ok(out)
            }
        }
    }
}

/// Broadcasts `k` messages from the source of `g` to every node.
pub fn pipelined_broadcast(g: &RadioGraph, k: u32, plan: &PipelinePlan) -> Result<PipelineReport> {
    if plan.spacing < 3 {
        return Err(Error::InvalidParameter(format!(
            "spacing {} is below 3; concurrent layer pairs could collide",
            plan.spacing
        )));
    }
    let Layering { layers, pairs } = layering(g)?;
    let depth = pairs.len();
    let batch_size = plan
        .batch_size
        .unwrap_or_else(|| k.div_ceil(depth.max(1) as u32))
        .max(1);
    let batches = k.div_ceil(batch_size);
    let spacing = plan.spacing as usize;

    let adj = AdjacencyList::from_graph(g);
    let msgs: Vec<Arc<[u8]>> = (1..=k).map(|m| message_payload(m, 8)).collect();
    let source = g.index_of(g.source()).expect("source exists");
    let mut audit = RoutingAudit::new(g.node_count(), &msgs)?;
    audit.give_all(source);
    let budget = PacketBudget::default_for(g.node_count());
    let mut sim = Simulator::new(&adj)
        .with_budget(budget)
        .with_routing_audit(audit);

    let mut layer_of = vec![0usize; g.node_count()];
    for (l, nodes) in layers.iter().enumerate() {
        for &v in nodes {
            layer_of[g.index_of(v).expect("layer node")] = l;
        }
    }
    let others: Vec<usize> = (0..g.node_count()).filter(|&i| i != source).collect();
    let tracker_idx: HashMap<usize, usize> =
        others.iter().enumerate().map(|(t, &i)| (i, t)).collect();
    let mut tracker = Tracker::new(
        others.iter().map(|&i| u64::from(g.nodes()[i])).collect(),
        k as usize,
    );

    let mut planner = HopPlanner {
        g,
        inner: plan.inner,
        cap: plan.synth_cap,
        synthesized: HashMap::new(),
    };
    let full: Vec<usize> = (0..batch_size as usize).collect();
    let mut rounds_per_batch = 0u64;
    for pair in &pairs {
        rounds_per_batch = rounds_per_batch.max(planner.schedule(pair, &full)?.len() as u64);
    }

    let batch_msgs = |j: usize| -> Vec<usize> {
        let lo = j * batch_size as usize;
        (lo..(lo + batch_size as usize).min(k as usize)).collect()
    };
    let slots = if batches == 0 || depth == 0 {
        0
    } else {
        depth + spacing * (batches as usize - 1)
    };
    let mut inter_pair_collisions = 0u64;
    let mut min_active_gap: Option<usize> = None;
    for slot in 0..slots {
        let active: Vec<(usize, usize)> = (0..batches as usize)
            .filter(|&j| slot >= spacing * j && slot - spacing * j < depth)
            .map(|j| (slot - spacing * j, j))
            .collect();
        for w in active.windows(2) {
            let gap = w[0].0.abs_diff(w[1].0);
            min_active_gap = Some(min_active_gap.map_or(gap, |g: usize| g.min(gap)));
        }
        let hops: Vec<(usize, Vec<HopRound>)> = active
            .iter()
            .map(|&(p, j)| Ok((p, planner.schedule(&pairs[p], &batch_msgs(j))?)))
            .collect::<Result<_>>()?;
        let len = hops.iter().map(|(_, h)| h.len()).max().unwrap_or(0);
        for t in 0..len {
            let mut tx = TransmitMap::new();
            for (_, h) in &hops {
                for &(v, m) in h.get(t).into_iter().flatten() {
                    let pkt = m.map_or(Packet::Noise, |m| Packet::Data(msgs[m].clone()));
                    tx.insert(v, pkt);
                }
            }
            for (p, h) in &hops {
                if t >= h.len() {
                    continue;
                }
                for &r in &pairs[*p].receivers {
                    let ri = g.index_of(r).expect("layer node");
                    if adj
                        .neighbors(ri)
                        .iter()
                        .any(|&u| tx.contains(u) && layer_of[u] != *p)
                    {
                        inter_pair_collisions += 1;
                    }
                }
            }
            let heard = sim.transmit(&tx)?;
            let round = sim.rounds();
            let audit = sim.audit().expect("audit installed");
            for (v, pkt) in heard.iter() {
                if let (Some(&ti), Some(m)) = (
                    tracker_idx.get(&v),
                    pkt.payload().and_then(|p| audit.message_index(p)),
                ) {
                    tracker.deliver(ti, m as usize, round);
                }
            }
        }
    }

    let bound = (depth as u64 + u64::from(batches)) * rounds_per_batch;
    let config = serde_json::json!({
        "k": k,
        "depth": depth,
        "batch_size": batch_size,
        "spacing": plan.spacing,
        "inner": plan.inner,
        "synth_cap": plan.synth_cap,
        "budget_bits": budget.bits,
    });
    Ok(PipelineReport {
        result: tracker.finish("pipelined", sim.rounds(), config),
        depth,
        batch_size,
        batches,
        slots: slots as u64,
        rounds_per_batch,
        inter_pair_collisions,
        min_active_gap,
        bound,
    })
}

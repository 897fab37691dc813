//! Routing from a synthesized STS schedule.
//!
//! One synthesis cycle delivers the same set of synthesized messages to
//! every receiver on every repetition, so each cycle carries fresh real
//! messages in exactly those slots and noise everywhere else.

use std::collections::HashMap;
use std::sync::Arc;

use super::{RunResult, Tracker};
use crate::error::Result;
use crate::radio_sim::{
    message_payload, sender_node, AdjacencyList, Packet, PacketBudget, RoutingAudit, Simulator,
    TransmitMap,
};
use crate::schedule::MessageId;
use crate::sts::Sts;
use crate::synthesis::{record_delivery, routing_throughput, sts_to_schedule, SynthMode};
use crate::topology::BipartiteNetwork;

/// Repeats the schedule synthesized from `s` for `⌈k / D⌉` cycles, where
/// `D` is the number of synthesized messages one cycle delivers to all
/// receivers. Runs a single cycle and reports incompleteness when `D = 0`.
pub fn sts_routing_broadcast(
    net: &BipartiteNetwork,
    k: u32,
    s: &Sts,
    mode: SynthMode,
) -> Result<RunResult> {
    let eta = net.eta();
    let (sched, mut plan) = sts_to_schedule(s, eta, mode)?;
    record_delivery(&mut plan, net)?;
    let cycle_throughput = routing_throughput(&plan)?;
    let delivered: Vec<MessageId> = plan
        .delivered
        .clone()
        .unwrap_or_default()
        .into_iter()
        .collect();
    let per_cycle = delivered.len() as u32;
    let cycles = if per_cycle == 0 {
        1
    } else {
        k.div_ceil(per_cycle).max(1)
    };

    let adj = AdjacencyList::from_bipartite(net);
    let msgs: Vec<Arc<[u8]>> = (1..=k).map(|m| message_payload(m, 8)).collect();
    let mut audit = RoutingAudit::new(net.node_count(), &msgs)?;
    for s in 1..=eta {
        audit.give_all(sender_node(s));
    }
    let budget = PacketBudget::default_for(net.node_count());
    let mut sim = Simulator::new(&adj)
        .with_budget(budget)
        .with_routing_audit(audit);
    let mut tracker = Tracker::new((0..net.num_receivers() as u64).collect(), k as usize);
    let eta_us = eta as usize;

    for c in 0..cycles {
        // Synthesized message -> real message index for this cycle.
        let slot: HashMap<MessageId, usize> = delivered
            .iter()
            .enumerate()
            .filter_map(|(j, &m)| {
                let real = (c * per_cycle) as usize + j;
                (real < k as usize).then_some((m, real))
            })
            .collect();
        for round in sched.rounds() {
            let mut tx = TransmitMap::new();
            for (m, senders) in round {
                let packet = match slot.get(m) {
                    Some(&r) => Packet::Data(msgs[r].clone()),
                    None => Packet::Noise,
                };
                for s in senders.iter() {
                    tx.insert(sender_node(s), packet.clone());
                }
            }
            let heard = sim.transmit(&tx)?;
            let r = sim.rounds();
            for (v, pkt) in heard.iter().filter(|&(v, _)| v >= eta_us) {
                let audit = sim.audit().expect("audit installed");
                if let Some(real) = pkt.payload().and_then(|p| audit.message_index(p)) {
                    tracker.deliver(v - eta_us, real as usize, r);
                }
            }
        }
    }
    let config = serde_json::json!({
        "k": k,
        "eta": eta,
        "mode": match mode {
            SynthMode::Exact { cap } => serde_json::json!({"exact": {"cap": cap}}),
            SynthMode::Sampled { num_perms, seed } =>
                serde_json::json!({"sampled": {"num_perms": num_perms, "seed": seed}}),
        },
        "sts_rounds": s.len(),
        "sts_weight": crate::sts::weight(s).to_string(),
        "cycle_rounds": plan.total_rounds(),
        "delivered_per_cycle": per_cycle,
        "cycles": cycles,
        "cycle_throughput": cycle_throughput.to_string(),
        "budget_bits": budget.bits,
    });
    Ok(tracker.finish("sts-routing", sim.rounds(), config))
}

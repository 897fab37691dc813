//! Broadcast protocols on top of the round engine.
//!
//! Every protocol returns a [`RunResult`]. Randomized protocols draw from a
//! single [`ChaCha8Rng`](rand_chacha::ChaCha8Rng) seeded from their config,
//! so a fixed seed and config reproduce the same result bit for bit.

use std::collections::BTreeMap;
use std::io::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::sts::Sts;
use crate::synthesis::SynthMode;
use crate::topology::BipartiteNetwork;

pub mod coded;
pub mod decay;
pub mod pipeline;
pub mod sts_routing;

pub use coded::{
    coded_broadcast, phase_reception_rate, range_coded_broadcast, range_phases, PhasedCodingConfig,
};
pub use decay::{decay_single, repeated_decay_multicast, DecayConfig};
pub use pipeline::{pipelined_broadcast, InnerProtocol, PipelinePlan, PipelineReport};
pub use sts_routing::sts_routing_broadcast;

/// Serializes a [`BigRational`] as `"num/den"` (or `"num"` when integral).
pub mod rational_string {
    use num_rational::BigRational;
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&r.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let s = String::deserialize(d)?;
        s.parse()
            .map_err(|_| D::Error::custom(format!("bad rational {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReceiverOutcome {
    /// Messages this receiver ended up with.
    pub received: u64,
    pub complete: bool,
    /// Round (1-based) at which the last message arrived, if complete.
    pub completion_round: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub protocol: String,
    pub rounds: u64,
    pub k: u64,
    /// Messages held by every receiver at the end.
    pub delivered_to_all: u64,
    /// `delivered_to_all / rounds`.
    #[serde(with = "rational_string")]
    pub throughput: BigRational,
    pub complete: bool,
    pub per_receiver: BTreeMap<u64, ReceiverOutcome>,
    /// Fully resolved configuration of the run.
    pub config: serde_json::Value,
}

impl RunResult {
    pub fn throughput_f64(&self) -> f64 {
        self.throughput.to_f64().unwrap_or(f64::NAN)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub const CSV_HEADER: [&'static str; 7] = [
        "protocol",
        "k",
        "rounds",
        "delivered_to_all",
        "throughput",
        "throughput_f64",
        "complete",
    ];

    pub fn csv_record(&self) -> [String; 7] {
        [
            self.protocol.clone(),
            self.k.to_string(),
            self.rounds.to_string(),
            self.delivered_to_all.to_string(),
            self.throughput.to_string(),
            format!("{:.6}", self.throughput_f64()),
            self.complete.to_string(),
        ]
    }
}

/// Writes a CSV summary, one row per run.
pub fn write_runs_csv<W: Write>(out: W, runs: &[RunResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RunResult::CSV_HEADER)?;
    for r in runs {
        w.write_record(r.csv_record())?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn exact_ratio(num: u64, den: u64) -> BigRational {
    if den == 0 {
        BigRational::zero()
    } else {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
}

/// Per-receiver message bookkeeping shared by the runners.
pub(crate) struct Tracker {
    k: usize,
    have: Vec<Vec<bool>>,
    count: Vec<u64>,
    holders: Vec<usize>,
    done_at: Vec<Option<u64>>,
    keys: Vec<u64>,
}

impl Tracker {
    pub fn new(keys: Vec<u64>, k: usize) -> Self {
        let n = keys.len();
        Tracker {
            k,
            have: vec![vec![false; k]; n],
            count: vec![0; n],
            holders: vec![0; k],
            done_at: vec![if k == 0 { Some(0) } else { None }; n],
            keys,
        }
    }

    /// Records that receiver `r` holds message index `m` after `round`.
    pub fn deliver(&mut self, r: usize, m: usize, round: u64) {
        if !std::mem::replace(&mut self.have[r][m], true) {
            self.count[r] += 1;
            self.holders[m] += 1;
            if self.count[r] as usize == self.k {
                self.done_at[r] = Some(round);
            }
        }
    }

    pub fn all_done(&self) -> bool {
        self.done_at.iter().all(Option::is_some)
    }

    pub fn finish(self, protocol: &str, rounds: u64, config: serde_json::Value) -> RunResult {
        let n = self.keys.len();
        let delivered = self.holders.iter().filter(|&&h| h == n).count() as u64;
        let per_receiver = self
            .keys
            .iter()
            .enumerate()
            .map(|(i, &key)| {
                (
                    key,
                    ReceiverOutcome {
                        received: self.count[i],
                        complete: self.done_at[i].is_some(),
                        completion_round: self.done_at[i],
                    },
                )
            })
            .collect();
        RunResult {
            protocol: protocol.to_string(),
            rounds,
            k: self.k as u64,
            delivered_to_all: delivered,
            throughput: exact_ratio(delivered, rounds),
            complete: self.all_done(),
            per_receiver,
            config,
        }
    }
}

/// A bipartite protocol and its configuration.
#[derive(Clone, Debug, PartialEq)]
pub enum ProtocolSpec {
    Decay(DecayConfig),
    RepeatedDecay(DecayConfig),
    Coded(PhasedCodingConfig),
    RangeCoded {
        cfg: PhasedCodingConfig,
        delta: usize,
        max_degree: usize,
    },
    StsRouting {
        sts: Sts,
        mode: SynthMode,
    },
}

impl ProtocolSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ProtocolSpec::Decay(_) => "decay",
            ProtocolSpec::RepeatedDecay(_) => "repeated-decay",
            ProtocolSpec::Coded(_) => "coded",
            ProtocolSpec::RangeCoded { .. } => "range-coded",
            ProtocolSpec::StsRouting { .. } => "sts-routing",
        }
    }
}

/// Runs `spec` on `net` with `k` messages (`decay` always sends one).
pub fn run_protocol(spec: &ProtocolSpec, net: &BipartiteNetwork, k: u32) -> Result<RunResult> {
    match spec {
        ProtocolSpec::Decay(cfg) => decay_single(net, cfg),
        ProtocolSpec::RepeatedDecay(cfg) => repeated_decay_multicast(net, k, cfg),
        ProtocolSpec::Coded(cfg) => coded_broadcast(net, k, cfg),
        ProtocolSpec::RangeCoded {
            cfg,
            delta,
            max_degree,
        } => range_coded_broadcast(net, k, *delta, *max_degree, cfg),
        ProtocolSpec::StsRouting { sts, mode } => sts_routing_broadcast(net, k, sts, *mode),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tracker_counts_full_delivery() {
        let mut t = Tracker::new(vec![10, 11], 2);
        t.deliver(0, 0, 1);
        t.deliver(0, 1, 2);
        t.deliver(1, 0, 3);
        t.deliver(1, 0, 4);
        let r = t.finish("x", 4, serde_json::Value::Null);
        assert_eq!(r.delivered_to_all, 1);
        assert_eq!(r.throughput, exact_ratio(1, 4));
        assert!(!r.complete);
        assert_eq!(r.per_receiver[&10].completion_round, Some(2));
        assert_eq!(r.per_receiver[&11].received, 1);
    }

    #[test]
    fn run_result_json_shape() {
        let t = Tracker::new(vec![0], 1);
        let mut r = t.finish("coded", 3, serde_json::json!({"seed": 1}));
        r.throughput = exact_ratio(2, 6);
        let v: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(v["throughput"], "1/3");
        assert_eq!(v["protocol"], "coded");
        assert!(v["per_receiver"]["0"].is_object());
        assert_eq!(RunResult::from_json(&r.to_json().unwrap()).unwrap(), r);
    }
}

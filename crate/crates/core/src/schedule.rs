//! Routing transmission schedules for bipartite networks.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::SenderSet;

/// Message identifier. Ids `1..=k` are real messages; [`MessageId::NOISE`]
/// marks filler transmissions that carry no message.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MessageId(pub u32);

impl MessageId {
    pub const NOISE: MessageId = MessageId(0);

    pub fn is_noise(self) -> bool {
        self == Self::NOISE
    }
}

impl fmt::Display for MessageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "m{}", self.0)
    }
}

/// Senders transmitting each message in one round (the sets `T_r^m`).
pub type ScheduleRound = BTreeMap<MessageId, SenderSet>;

/// A routing schedule: per round, mutually disjoint sender sets per message.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSchedule", into = "RawSchedule")]
pub struct TransmissionSchedule {
    eta: u32,
    k: u32,
    rounds: Vec<ScheduleRound>,
}

#[derive(Serialize, Deserialize)]
struct RawSchedule {
    eta: u32,
    k: u32,
    rounds: Vec<BTreeMap<String, Vec<u32>>>,
}

impl TryFrom<RawSchedule> for TransmissionSchedule {
    type Error = Error;

    fn try_from(raw: RawSchedule) -> Result<Self> {
        let rounds = raw
            .rounds
            .into_iter()
            .map(|r| {
                r.into_iter()
                    .map(|(key, senders)| {
                        let id = key
                            .strip_prefix('m')
                            .and_then(|s| s.parse::<u32>().ok())
                            .ok_or_else(|| {
                                Error::MalformedSchedule(format!("bad message key {key:?}"))
                            })?;
                        Ok((MessageId(id), SenderSet::new(senders)))
                    })
                    .collect::<Result<ScheduleRound>>()
            })
            .collect::<Result<Vec<_>>>()?;
        TransmissionSchedule::new(raw.eta, raw.k, rounds)
    }
}

impl From<TransmissionSchedule> for RawSchedule {
    fn from(s: TransmissionSchedule) -> Self {
        RawSchedule {
            eta: s.eta,
            k: s.k,
            rounds: s
                .rounds
                .into_iter()
                .map(|r| {
                    r.into_iter()
                        .map(|(m, set)| (m.to_string(), set.into()))
                        .collect()
                })
                .collect(),
        }
    }
}

impl TransmissionSchedule {
    /// Validates disjointness within every round, sender range and message
    /// ids (`0` for noise, otherwise `1..=k`). Empty sender sets are dropped.
    pub fn new(eta: u32, k: u32, rounds: Vec<ScheduleRound>) -> Result<Self> {
        let mut clean = Vec::with_capacity(rounds.len());
        for (r, round) in rounds.into_iter().enumerate() {
            let mut used = SenderSet::default();
            let mut kept = ScheduleRound::new();
            for (m, set) in round {
                if m.0 > k {
                    return Err(Error::MalformedSchedule(format!(
                        "round {}: message {m} exceeds k = {k}",
                        r + 1
                    )));
                }
                if let Some(bad) = set.iter().find(|&s| s == 0 || s > eta) {
                    return Err(Error::SenderIdOutOfRange { id: bad, eta });
                }
                if !used.is_disjoint(&set) {
                    return Err(Error::MalformedSchedule(format!(
                        "round {}: sender sets overlap",
                        r + 1
                    )));
                }
                if !set.is_empty() {
                    used = used.union(&set);
                    kept.insert(m, set);
                }
            }
            clean.push(kept);
        }
        Ok(TransmissionSchedule {
            eta,
            k,
            rounds: clean,
        })
    }

    pub fn eta(&self) -> u32 {
        self.eta
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn rounds(&self) -> &[ScheduleRound] {
        &self.rounds
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    /// `T_r`: every sender transmitting in round `r` (0-based).
    pub fn transmitters(&self, r: usize) -> SenderSet {
        self.rounds[r].values().flat_map(|s| s.iter()).collect()
    }

    /// Message sent by `sender` in round `r`, if any.
    pub fn message_of(&self, r: usize, sender: u32) -> Option<MessageId> {
        self.rounds[r]
            .iter()
            .find(|(_, set)| set.contains(sender))
            .map(|(&m, _)| m)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn round(entries: &[(u32, &[u32])]) -> ScheduleRound {
        entries
            .iter()
            .map(|&(m, s)| (MessageId(m), SenderSet::new(s.iter().copied())))
            .collect()
    }

    #[test]
    fn rejects_overlap() {
        let err = TransmissionSchedule::new(2, 2, vec![round(&[(1, &[1]), (2, &[1, 2])])]);
        assert!(matches!(err, Err(Error::MalformedSchedule(_))));
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(TransmissionSchedule::new(2, 1, vec![round(&[(1, &[3])])]).is_err());
        assert!(TransmissionSchedule::new(2, 1, vec![round(&[(2, &[1])])]).is_err());
    }

    #[test]
    fn json_uses_m_keys() {
        let s = TransmissionSchedule::new(2, 2, vec![round(&[(1, &[1]), (2, &[2])])]).unwrap();
        let json = s.to_json().unwrap();
        assert!(json.contains("\"m1\""));
        assert_eq!(TransmissionSchedule::from_json(&json).unwrap(), s);
    }

    #[test]
    fn transmitters_union() {
        let s = TransmissionSchedule::new(3, 2, vec![round(&[(1, &[1, 3]), (2, &[2])])]).unwrap();
        assert_eq!(s.transmitters(0).as_slice(), &[1, 2, 3]);
        assert_eq!(s.message_of(0, 3), Some(MessageId(1)));
        assert_eq!(s.message_of(0, 2), Some(MessageId(2)));
    }
}

//! Conversions between routing schedules and STSs.
//!
//! [`schedule_to_sts`] charges every message for its share of each round
//! and extracts a covering STS from the cheapest message.
//! [`sts_to_schedule`] runs the same STS under every permutation of the
//! senders at once, one message per permutation, packing all of them into
//! `η!·W(S)` rounds.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::perm::Permutation;
use crate::radio_sim::{run_schedule, synthetic_payloads};
use crate::scalar::factorial;
use crate::schedule::{MessageId, ScheduleRound, TransmissionSchedule};
use crate::sts::{trial_rng, Sts, StsRound};
use crate::topology::{BipartiteNetwork, SenderSet};

/// Default largest `eta` accepted by exact synthesis.
pub const DEFAULT_SYNTH_CAP: u32 = 7;

/// Charges `Ψ(m) = Σ_r |T_r^m| / |T_r|` per real message.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChargeReport {
    pub charges: BTreeMap<MessageId, BigRational>,
    /// Lowest id among the minimizers of `Ψ`.
    pub argmin: MessageId,
    /// Share of rounds spent on noise transmissions.
    pub noise_charge: BigRational,
    /// Rounds in which nobody transmits.
    pub idle_rounds: u64,
}

impl ChargeReport {
    pub fn total(&self) -> BigRational {
        self.charges
            .values()
            .fold(BigRational::zero(), |a, c| a + c)
    }
}

/// Computes charges without checking delivery.
pub fn charges(sched: &TransmissionSchedule) -> Result<ChargeReport> {
    if sched.k() == 0 {
        return Err(Error::InvalidParameter(
            "schedule carries no messages".into(),
        ));
    }
    let mut charges: BTreeMap<MessageId, BigRational> = (1..=sched.k())
        .map(|m| (MessageId(m), BigRational::zero()))
        .collect();
    let mut noise_charge = BigRational::zero();
    let mut idle_rounds = 0;
    for round in sched.rounds() {
        let total: usize = round.values().map(SenderSet::len).sum();
        if total == 0 {
            idle_rounds += 1;
            continue;
        }
        for (m, set) in round {
            let share = BigRational::new(BigInt::from(set.len()), BigInt::from(total));
            if m.is_noise() {
                noise_charge += share;
            } else {
                *charges.get_mut(m).expect("ids validated") += share;
            }
        }
    }
    let argmin = charges
        .iter()
        .fold(None::<(&MessageId, &BigRational)>, |best, cur| match best {
            Some(b) if b.1 <= cur.1 => Some(b),
            _ => Some(cur),
        })
        .map(|(m, _)| *m)
        .expect("k >= 1");
    Ok(ChargeReport {
        charges,
        argmin,
        noise_charge,
        idle_rounds,
    })
}

/// Extracts a covering STS of weight `Ψ(m*) <= |rounds| / k` from a schedule
/// that delivers every message to every receiver.
///
/// Every round where `m*` is sent becomes `|T_r^{m*}|` solo rounds, each
/// keeping the full transmitter set `T_r` as its active set.
pub fn schedule_to_sts(
    sched: &TransmissionSchedule,
    net: &BipartiteNetwork,
) -> Result<(Sts, ChargeReport)> {
    let report = run_schedule(net, sched, &synthetic_payloads(sched.k(), 8))?;
    for m in 1..=sched.k() {
        if let Some(r) = report
            .receivers
            .iter()
            .find(|r| !r.first_round.contains_key(&MessageId(m)))
        {
            return Err(Error::ScheduleDoesNotBroadcast {
                message: m,
                receiver: r.receiver,
            });
        }
    }
    let ch = charges(sched)?;
    let mut rounds = Vec::new();
    for (r, round) in sched.rounds().iter().enumerate() {
        if let Some(set) = round.get(&ch.argmin) {
            let all = sched.transmitters(r);
            rounds.extend(set.iter().map(|i| StsRound {
                solo: i,
                active: all.clone(),
            }));
        }
    }
    Ok((Sts::new(rounds)?, ch))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SynthMode {
    /// Every permutation of the senders, refused above `cap`.
    Exact { cap: u32 },
    /// `num_perms` random permutations, best-effort packing.
    Sampled { num_perms: u64, seed: u64 },
}

impl SynthMode {
    pub fn exact() -> Self {
        SynthMode::Exact {
            cap: DEFAULT_SYNTH_CAP,
        }
    }
}

/// One synthesized round: exactly `active` transmits, and `assignment` says
/// which message each member carries (noise when unassigned).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlanRound {
    pub active: SenderSet,
    pub assignment: BTreeMap<u32, MessageId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SynthPlan {
    pub eta: u32,
    pub exact: bool,
    /// `n_ℓ`: rounds of the source STS with `|A_r| = ℓ`.
    pub size_counts: BTreeMap<usize, u64>,
    pub rounds: Vec<PlanRound>,
    /// Message `m` follows `permutations[m - 1]`.
    pub permutations: Vec<Permutation>,
    /// Messages whose whole permuted STS was placed.
    pub placed: BTreeSet<MessageId>,
    /// Messages received by every receiver, once recorded.
    pub delivered: Option<BTreeSet<MessageId>>,
}

impl SynthPlan {
    pub fn total_rounds(&self) -> u64 {
        self.rounds.len() as u64
    }

    pub fn messages(&self) -> u32 {
        self.permutations.len() as u32
    }

    /// The STS traced by message `m`: one round `(sender, active)` per
    /// transmission of `m`, in schedule order.
    pub fn induced_sts(&self, m: MessageId) -> Sts {
        let rounds = self
            .rounds
            .iter()
            .flat_map(|r| {
                r.assignment
                    .iter()
                    .filter(move |(_, &mm)| mm == m)
                    .map(move |(&i, _)| StsRound {
                        solo: i,
                        active: r.active.clone(),
                    })
            })
            .collect();
        Sts::new(rounds).expect("assignments stay inside their active sets")
    }

    pub fn schedule(&self) -> Result<TransmissionSchedule> {
        let rounds = self
            .rounds
            .iter()
            .map(|r| {
                let mut groups: BTreeMap<MessageId, Vec<u32>> = BTreeMap::new();
                for i in r.active.iter() {
                    let m = r.assignment.get(&i).copied().unwrap_or(MessageId::NOISE);
                    groups.entry(m).or_default().push(i);
                }
                groups
                    .into_iter()
                    .map(|(m, v)| (m, SenderSet::new(v)))
                    .collect::<ScheduleRound>()
            })
            .collect();
        TransmissionSchedule::new(self.eta, self.messages(), rounds)
    }
}

fn set_mask(s: &SenderSet) -> u64 {
    s.to_mask().expect("synthesis works on at most 64 senders")
}

/// All `l`-subsets of `1..=eta` in lexicographic order.
fn subsets(eta: u32, l: u32) -> Vec<SenderSet> {
    let mut out = Vec::new();
    let mut cur: Vec<u32> = (1..=l).collect();
    loop {
        out.push(SenderSet::new(cur.iter().copied()));
        let Some(pos) = (0..l as usize)
            .rev()
            .find(|&p| cur[p] < eta - (l - 1 - p as u32))
        else {
            return out;
        };
        cur[pos] += 1;
        for q in pos + 1..l as usize {
            cur[q] = cur[q - 1] + 1;
        }
    }
}

struct Packer {
    rounds: Vec<PlanRound>,
    slots: HashMap<u64, (usize, usize)>,
    cursor: HashMap<(u64, u32), usize>,
}

impl Packer {
    fn new() -> Self {
        Packer {
            rounds: Vec::new(),
            slots: HashMap::new(),
            cursor: HashMap::new(),
        }
    }

    fn allocate(&mut self, set: SenderSet, count: usize) {
        if count == 0 {
            return;
        }
        let start = self.rounds.len();
        self.slots.insert(set_mask(&set), (start, count));
        self.rounds.extend((0..count).map(|_| PlanRound {
            active: set.clone(),
            assignment: BTreeMap::new(),
        }));
    }

    /// First round allocated to `set` in which `sender` is still free.
    fn place(&mut self, set: &SenderSet, sender: u32, m: MessageId) -> bool {
        let key = set_mask(set);
        let Some(&(start, count)) = self.slots.get(&key) else {
            return false;
        };
        let cur = self.cursor.entry((key, sender)).or_insert(0);
        while *cur < count && self.rounds[start + *cur].assignment.contains_key(&sender) {
            *cur += 1;
        }
        if *cur == count {
            return false;
        }
        self.rounds[start + *cur].assignment.insert(sender, m);
        *cur += 1;
        true
    }
}

/// Builds one message per permutation of the senders; message `m_π` follows
/// `π(S)`.
///
/// Exact mode allocates `n_ℓ·(η−ℓ)!·(ℓ−1)!` rounds to every `ℓ`-subset and
/// fills them greedily (permutations in lexicographic order, STS rounds in
/// order, earliest free round first); the allocation matches the demand
/// exactly, so every slot is filled. Sampled mode draws `num_perms`
/// permutations, gives each set `⌈requests/ℓ⌉` rounds and leaves unfilled
/// slots as noise.
pub fn sts_to_schedule(
    s: &Sts,
    eta: u32,
    mode: SynthMode,
) -> Result<(TransmissionSchedule, SynthPlan)> {
    if eta == 0 {
        return Err(Error::InvalidParameter("eta must be at least 1".into()));
    }
    s.check_eta(eta)?;
    let mut size_counts: BTreeMap<usize, u64> = BTreeMap::new();
    for r in s.rounds() {
        *size_counts.entry(r.active.len()).or_default() += 1;
    }
    let (permutations, exact) = match mode {
        SynthMode::Exact { cap } => {
            if eta > cap {
                return Err(Error::EtaTooLargeForExact { eta, cap });
            }
            (Permutation::all(eta).collect::<Vec<_>>(), true)
        }
        SynthMode::Sampled { num_perms, seed } => {
            if eta > 64 {
                return Err(Error::InvalidParameter(
                    "synthesis supports at most 64 senders".into(),
                ));
            }
            let perms = (0..num_perms)
                .map(|t| Permutation::random(eta, &mut trial_rng(seed, t)))
                .collect::<Vec<_>>();
            (perms, false)
        }
    };

    let mut packer = Packer::new();
    if exact {
        for (&l, &n_l) in &size_counts {
            let per_set =
                BigInt::from(n_l) * factorial(u64::from(eta) - l as u64) * factorial(l as u64 - 1);
            let per_set: usize = per_set
                .try_into()
                .map_err(|_| Error::InvalidParameter("round count overflows".into()))?;
            for set in subsets(eta, l as u32) {
                packer.allocate(set, per_set);
            }
        }
    } else {
        let mut requests: BTreeMap<SenderSet, usize> = BTreeMap::new();
        for pi in &permutations {
            for r in s.rounds() {
                *requests.entry(pi.apply_set(&r.active)).or_default() += 1;
            }
        }
        // Smaller sets first, each size in lexicographic order.
        let mut sets: Vec<(SenderSet, usize)> = requests.into_iter().collect();
        sets.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
        for (set, req) in sets {
            let l = set.len();
            packer.allocate(set, req.div_ceil(l));
        }
    }

    let mut placed = BTreeSet::new();
    for (idx, pi) in permutations.iter().enumerate() {
        let m = MessageId(idx as u32 + 1);
        let mut ok = true;
        for r in s.rounds() {
            let set = pi.apply_set(&r.active);
            let sender = pi.apply(r.solo);
            if !packer.place(&set, sender, m) {
                if exact {
                    return Err(Error::GreedyStuck {
                        sender,
                        set: set.to_string(),
                    });
                }
                ok = false;
            }
        }
        if ok {
            placed.insert(m);
        }
    }

    let plan = SynthPlan {
        eta,
        exact,
        size_counts,
        rounds: packer.rounds,
        permutations,
        placed,
        delivered: None,
    };
    let sched = plan.schedule()?;
    Ok((sched, plan))
}

/// Simulates the plan's schedule on `net` and stores which messages reached
/// every receiver.
pub fn record_delivery(plan: &mut SynthPlan, net: &BipartiteNetwork) -> Result<()> {
    let sched = plan.schedule()?;
    let report = run_schedule(net, &sched, &synthetic_payloads(plan.messages(), 8))?;
    plan.delivered = Some(report.delivered_to_all(plan.messages()));
    Ok(())
}

/// Messages delivered to all receivers per round: `p / w` for exact plans.
pub fn routing_throughput(plan: &SynthPlan) -> Result<BigRational> {
    let delivered = plan.delivered.as_ref().ok_or(Error::DeliveryNotRecorded)?;
    if plan.rounds.is_empty() {
        return Ok(BigRational::zero());
    }
    Ok(BigRational::new(
        BigInt::from(delivered.len()),
        BigInt::from(plan.rounds.len()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;
    use crate::sts::{permute, prefix_sts, weight};
    use crate::topology::make_bipartite;

    fn round(entries: &[(u32, &[u32])]) -> ScheduleRound {
        entries
            .iter()
            .map(|&(m, s)| (MessageId(m), SenderSet::new(s.iter().copied())))
            .collect()
    }

    #[test]
    fn subsets_lexicographic() {
        let s: Vec<Vec<u32>> = subsets(4, 2)
            .iter()
            .map(|s| s.as_slice().to_vec())
            .collect();
        assert_eq!(
            s,
            vec![
                vec![1, 2],
                vec![1, 3],
                vec![1, 4],
                vec![2, 3],
                vec![2, 4],
                vec![3, 4]
            ]
        );
        assert_eq!(subsets(3, 3).len(), 1);
        assert_eq!(subsets(5, 1).len(), 5);
    }

    #[test]
    fn single_round_schedule() {
        let net = make_bipartite(1, vec![vec![1]]).unwrap();
        let sched = TransmissionSchedule::new(1, 1, vec![round(&[(1, &[1])])]).unwrap();
        let (sts, ch) = schedule_to_sts(&sched, &net).unwrap();
        assert_eq!(sts.rounds(), &[StsRound::new(1, [1])]);
        assert_eq!(ch.charges[&MessageId(1)], ratio(1, 1));
    }

    #[test]
    fn two_message_charges() {
        // Receiver {1} hears sender 1 alone in both rounds.
        let net = make_bipartite(2, vec![vec![1]]).unwrap();
        let sched = TransmissionSchedule::new(
            2,
            2,
            vec![
                round(&[(1, &[1]), (2, &[2])]),
                round(&[(1, &[2]), (2, &[1])]),
            ],
        )
        .unwrap();
        let (sts, ch) = schedule_to_sts(&sched, &net).unwrap();
        assert_eq!(ch.charges[&MessageId(1)], ratio(1, 1));
        assert_eq!(ch.charges[&MessageId(2)], ratio(1, 1));
        assert_eq!(ch.total(), ratio(2, 1));
        assert_eq!(ch.argmin, MessageId(1));
        assert_eq!(weight(&sts), ratio(1, 1));
    }

    #[test]
    fn undelivered_schedule_is_rejected() {
        let net = make_bipartite(2, vec![vec![1, 2]]).unwrap();
        let sched = TransmissionSchedule::new(2, 1, vec![round(&[(1, &[1, 2])])]).unwrap();
        assert_eq!(
            schedule_to_sts(&sched, &net).unwrap_err(),
            Error::ScheduleDoesNotBroadcast {
                message: 1,
                receiver: 0
            }
        );
    }

    #[test]
    fn exact_small_plans() {
        let s = Sts::new(vec![StsRound::new(1, [1]), StsRound::new(1, [1, 2])]).unwrap();
        let (sched, plan) = sts_to_schedule(&s, 2, SynthMode::exact()).unwrap();
        assert_eq!(sched.len(), 3);
        assert_eq!(sched.k(), 2);
        for (i, pi) in plan.permutations.iter().enumerate() {
            let mut induced = plan.induced_sts(MessageId(i as u32 + 1)).rounds().to_vec();
            let mut want = permute(&s, pi).unwrap().rounds().to_vec();
            induced.sort_by(|a, b| (a.solo, &a.active).cmp(&(b.solo, &b.active)));
            want.sort_by(|a, b| (a.solo, &a.active).cmp(&(b.solo, &b.active)));
            assert_eq!(induced, want);
        }

        let one = Sts::new(vec![StsRound::new(1, [1])]).unwrap();
        let (sched, _) = sts_to_schedule(&one, 1, SynthMode::exact()).unwrap();
        assert_eq!((sched.len(), sched.k()), (1, 1));
    }

    #[test]
    fn prefix_three_throughput() {
        let (sched, mut plan) = sts_to_schedule(&prefix_sts(3), 3, SynthMode::exact()).unwrap();
        assert_eq!(sched.len(), 11);
        let net = make_bipartite(3, vec![vec![1], vec![2, 3], vec![1, 2, 3]]).unwrap();
        assert_eq!(routing_throughput(&plan), Err(Error::DeliveryNotRecorded));
        record_delivery(&mut plan, &net).unwrap();
        assert_eq!(routing_throughput(&plan).unwrap(), ratio(6, 11));
    }

    #[test]
    fn exact_cap_is_enforced() {
        assert_eq!(
            sts_to_schedule(&prefix_sts(8), 8, SynthMode::exact()).unwrap_err(),
            Error::EtaTooLargeForExact { eta: 8, cap: 7 }
        );
    }

    #[test]
    fn sampled_mode_marks_noise() {
        let (sched, plan) = sts_to_schedule(
            &prefix_sts(6),
            6,
            SynthMode::Sampled {
                num_perms: 30,
                seed: 4,
            },
        )
        .unwrap();
        assert!(!plan.exact);
        assert_eq!(sched.k(), 30);
        assert!(!plan.placed.is_empty());
        for m in &plan.placed {
            let pi = &plan.permutations[m.0 as usize - 1];
            assert_eq!(
                plan.induced_sts(*m).len(),
                permute(&prefix_sts(6), pi).unwrap().len()
            );
        }
    }
}

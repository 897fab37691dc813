//! Solitude transmission schedules.
//!
//! An STS is a sequence of rounds `(i_r, A_r)`: every sender in `A_r`
//! transmits, `i_r` carries the message and the rest of `A_r` carry noise. A
//! receiver with neighborhood `N` is covered in round `r` iff
//! `N ∩ A_r = {i_r}`. The weight `W(S) = Σ_r 1/|A_r|` is kept exact.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perm::Permutation;
use crate::scalar::Scalar;
use crate::topology::{BipartiteNetwork, SenderSet};

/// Default largest `eta` for which exact coverage enumerates all `eta!`
/// permutations.
pub const DEFAULT_COVERAGE_CAP: u32 = 8;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StsRound {
    pub solo: u32,
    pub active: SenderSet,
}

impl StsRound {
    pub fn new(solo: u32, active: impl IntoIterator<Item = u32>) -> Self {
        StsRound {
            solo,
            active: SenderSet::new(active),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<StsRound>", into = "Vec<StsRound>")]
pub struct Sts {
    rounds: Vec<StsRound>,
}

impl TryFrom<Vec<StsRound>> for Sts {
    type Error = Error;

    fn try_from(rounds: Vec<StsRound>) -> Result<Self> {
        Sts::new(rounds)
    }
}

impl From<Sts> for Vec<StsRound> {
    fn from(s: Sts) -> Self {
        s.rounds
    }
}

impl Sts {
    /// Checks `i_r ∈ A_r` and that sender ids are positive.
    pub fn new(rounds: Vec<StsRound>) -> Result<Self> {
        for (r, round) in rounds.iter().enumerate() {
            if round.active.contains(0) || round.solo == 0 {
                return Err(Error::InvalidSts(format!("round {}: sender id 0", r + 1)));
            }
            if !round.active.contains(round.solo) {
                return Err(Error::InvalidSts(format!(
                    "round {}: solo sender {} is not in {}",
                    r + 1,
                    round.solo,
                    round.active
                )));
            }
        }
        Ok(Sts { rounds })
    }

    pub fn empty() -> Self {
        Sts::default()
    }

    pub fn rounds(&self) -> &[StsRound] {
        &self.rounds
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    /// Largest sender id mentioned.
    pub fn max_sender(&self) -> u32 {
        self.rounds
            .iter()
            .filter_map(|r| r.active.max_id())
            .max()
            .unwrap_or(0)
    }

    /// Errors if a sender id exceeds `eta`.
    pub fn check_eta(&self, eta: u32) -> Result<()> {
        match self.max_sender() {
            m if m > eta => Err(Error::SenderIdOutOfRange { id: m, eta }),
            _ => Ok(()),
        }
    }

    pub fn concat(mut self, other: Sts) -> Sts {
        self.rounds.extend(other.rounds);
        self
    }

    /// `W(S)` in any scalar type.
    pub fn weight<T: Scalar>(&self) -> T {
        self.rounds.iter().fold(T::zero(), |acc, r| {
            acc + T::from_ratio(BigInt::from(1), BigInt::from(r.active.len()))
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Exact weight `Σ_r 1/|A_r|`.
pub fn weight(s: &Sts) -> BigRational {
    s.weight()
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageReport {
    /// Receiver index to its first covering round (1-based).
    pub covered: BTreeMap<usize, usize>,
    pub uncovered: BTreeSet<usize>,
}

impl CoverageReport {
    pub fn is_full(&self) -> bool {
        self.uncovered.is_empty()
    }
}

/// Bitmask form of an STS for senders `1..=64`.
struct MaskSts(Vec<(u64, u64)>);

impl MaskSts {
    fn compile(s: &Sts) -> Option<Self> {
        s.rounds
            .iter()
            .map(|r| Some((1u64 << (r.solo - 1), r.active.to_mask()?)))
            .collect::<Option<Vec<_>>>()
            .map(MaskSts)
    }

    fn first_cover(&self, n: u64) -> Option<usize> {
        self.0.iter().position(|&(solo, active)| n & active == solo)
    }
}

fn receiver_masks(net: &BipartiteNetwork) -> Option<Vec<u64>> {
    net.receivers().iter().map(|n| n.to_mask()).collect()
}

/// First covering round per receiver.
pub fn covers(s: &Sts, net: &BipartiteNetwork) -> CoverageReport {
    let mut report = CoverageReport::default();
    let fast = MaskSts::compile(s).zip(receiver_masks(net));
    for (j, n) in net.receivers().iter().enumerate() {
        let first = match &fast {
            Some((ms, masks)) => ms.first_cover(masks[j]),
            None => s
                .rounds
                .iter()
                .position(|r| n.hears_alone(r.solo, &r.active)),
        };
        match first {
            Some(r) => {
                report.covered.insert(j, r + 1);
            }
            None => {
                report.uncovered.insert(j);
            }
        }
    }
    report
}

fn covers_all(s: &Sts, net: &BipartiteNetwork) -> bool {
    match MaskSts::compile(s).zip(receiver_masks(net)) {
        Some((ms, masks)) => masks.iter().all(|&n| ms.first_cover(n).is_some()),
        None => covers(s, net).is_full(),
    }
}

/// `π(S)`: relabels every `i_r` and `A_r` through `pi`.
pub fn permute(s: &Sts, pi: &Permutation) -> Result<Sts> {
    if s.max_sender() as usize > pi.len() {
        return Err(Error::NotAPermutation(pi.len()));
    }
    Ok(Sts {
        rounds: s
            .rounds
            .iter()
            .map(|r| StsRound {
                solo: pi.apply(r.solo),
                active: pi.apply_set(&r.active),
            })
            .collect(),
    })
}

/// Round `t` is `(t, [1, t])` for `t = 1..=eta`.
pub fn prefix_sts(eta: u32) -> Sts {
    Sts {
        rounds: (1..=eta)
            .map(|t| StsRound {
                solo: t,
                active: SenderSet::interval(1, t),
            })
            .collect(),
    }
}

fn ceil_pos(x: f64) -> u32 {
    x.ceil().max(0.0) as u32
}

/// A degree-range STS together with the pieces it was built from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RangeSts {
    /// The random sets `S_1..S_f`.
    pub sets: Vec<SenderSet>,
    /// Last round index `t` of the first part.
    pub switch: u32,
    /// Last prefix round of the second part.
    pub end: u32,
    pub sts: Sts,
}

fn check_range(eta: u32, delta: u32, max_degree: u32) -> Result<()> {
    if !(1 <= delta && delta <= max_degree && max_degree <= eta) {
        return Err(Error::DegreeRangeInvalid(format!(
            "need 1 <= delta <= Delta <= eta, got delta = {delta}, Delta = {max_degree}, eta = {eta}"
        )));
    }
    Ok(())
}

/// STS for receivers with degrees in `[delta, max_degree]`.
///
/// Draws `f = ⌈16 ln η⌉` uniform sets of size `⌈η/Δ⌉`. The first part has
/// rounds `(t, [1,t] ∪ S_i)` for `t = 1..=⌈η/(Δ ln η)⌉` (at most `η`) and
/// `i = 1..=f`; the second part has prefix rounds up to
/// `min(⌈2η ln η/δ⌉, η)`.
pub fn range_sts_parts(eta: u32, delta: u32, max_degree: u32, seed: u64) -> Result<RangeSts> {
    check_range(eta, delta, max_degree)?;
    if eta == 1 {
        return Ok(RangeSts {
            sets: Vec::new(),
            switch: 0,
            end: 1,
            sts: prefix_sts(1),
        });
    }
    let (n, ln) = (f64::from(eta), f64::from(eta).ln());
    let f = ceil_pos(16.0 * ln);
    let size = eta.div_ceil(max_degree);
    let switch = ceil_pos(n / (f64::from(max_degree) * ln)).min(eta);
    let end = ceil_pos(2.0 * n * ln / f64::from(delta)).min(eta);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sets: Vec<SenderSet> = (0..f)
        .map(|_| {
            index::sample(&mut rng, eta as usize, size as usize)
                .iter()
                .map(|x| x as u32 + 1)
                .collect()
        })
        .collect();
    let mut rounds = Vec::new();
    for t in 1..=switch {
        let prefix = SenderSet::interval(1, t);
        for s in &sets {
            rounds.push(StsRound {
                solo: t,
                active: prefix.union(s),
            });
        }
    }
    for t in switch + 1..=end {
        rounds.push(StsRound {
            solo: t,
            active: SenderSet::interval(1, t),
        });
    }
    Ok(RangeSts {
        sets,
        switch,
        end,
        sts: Sts { rounds },
    })
}

pub fn range_sts(eta: u32, delta: u32, max_degree: u32, seed: u64) -> Result<Sts> {
    range_sts_parts(eta, delta, max_degree, seed).map(|p| p.sts)
}

/// Round-robin partition of `1..=eta` into `cells` parts: sender `j` lands in
/// cell `(j - 1) mod cells`.
pub fn even_partition(eta: u32, cells: u32) -> Vec<SenderSet> {
    (0..cells)
        .map(|c| (1..=eta).filter(|j| (j - 1) % cells == c).collect())
        .collect()
}

/// STS whose every permutation covers every network of maximum degree at
/// most `max_degree`.
///
/// Rounds `(t, [1,t] ∪ S_i)` for `t = 1..=⌈η/Δ²⌉` over the `Δ + 1` cells of
/// [`even_partition`], then prefix rounds up to `η`.
pub fn partition_sts(eta: u32, max_degree: u32) -> Result<Sts> {
    if !(1 <= max_degree && max_degree < eta) {
        return Err(Error::DegreeRangeInvalid(format!(
            "need 1 <= Delta < eta, got Delta = {max_degree}, eta = {eta}"
        )));
    }
    let cells = even_partition(eta, max_degree + 1);
    let switch = eta.div_ceil(max_degree * max_degree).min(eta);
    let mut rounds = Vec::new();
    for t in 1..=switch {
        let prefix = SenderSet::interval(1, t);
        for s in &cells {
            rounds.push(StsRound {
                solo: t,
                active: prefix.union(s),
            });
        }
    }
    for t in switch + 1..=eta {
        rounds.push(StsRound {
            solo: t,
            active: SenderSet::interval(1, t),
        });
    }
    Ok(Sts { rounds })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoverageMode {
    /// Enumerate all `eta!` permutations; refused above `cap`.
    Exact {
        cap: u32,
    },
    MonteCarlo {
        trials: u64,
        seed: u64,
    },
}

impl CoverageMode {
    pub fn exact() -> Self {
        CoverageMode::Exact {
            cap: DEFAULT_COVERAGE_CAP,
        }
    }
}

/// Fraction of permutations `π` for which `π(S)` covers every receiver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageEstimate {
    pub successes: u64,
    pub trials: u64,
    pub exact: bool,
    /// 95% Wilson interval; a point interval in exact mode.
    pub interval: (f64, f64),
}

impl CoverageEstimate {
    pub fn probability(&self) -> BigRational {
        if self.trials == 0 {
            return BigRational::from_integer(0.into());
        }
        BigRational::new(self.successes.into(), self.trials.into())
    }

    pub fn mean(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.successes as f64 / self.trials as f64
        }
    }
}

/// 95% Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z: f64 = 1.959_963_984_540_054;
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let center = (p + z * z / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Per-trial RNG stream used by every Monte-Carlo routine.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

pub fn coverage_probability(
    s: &Sts,
    net: &BipartiteNetwork,
    mode: CoverageMode,
) -> Result<CoverageEstimate> {
    let eta = net.eta();
    s.check_eta(eta)?;
    match mode {
        CoverageMode::Exact { cap } => {
            if eta > cap {
                return Err(Error::EtaTooLargeForExact { eta, cap });
            }
            let perms: Vec<Permutation> = Permutation::all(eta).collect();
            let successes = perms
                .par_iter()
                .filter(|pi| covers_all(&permute(s, pi).expect("eta-sized"), net))
                .count() as u64;
            let trials = perms.len() as u64;
            let p = successes as f64 / trials as f64;
            Ok(CoverageEstimate {
                successes,
                trials,
                exact: true,
                interval: (p, p),
            })
        }
        CoverageMode::MonteCarlo { trials, seed } => {
            let successes = (0..trials)
                .into_par_iter()
                .filter(|&t| {
                    let pi = Permutation::random(eta, &mut trial_rng(seed, t));
                    covers_all(&permute(s, &pi).expect("eta-sized"), net)
                })
                .count() as u64;
            Ok(CoverageEstimate {
                successes,
                trials,
                exact: false,
                interval: wilson_interval(successes, trials),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;
    use crate::topology::make_bipartite;

    #[test]
    fn weights() {
        assert_eq!(weight(&prefix_sts(3)), ratio(11, 6));
        assert_eq!(weight(&Sts::empty()), ratio(0, 1));
        let s = Sts::new(vec![
            StsRound::new(1, [1, 2, 3]),
            StsRound::new(2, [1, 2, 3]),
        ])
        .unwrap();
        assert_eq!(weight(&s), ratio(2, 3));
        assert!((s.weight::<f64>() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn cover_examples() {
        let net = make_bipartite(3, vec![vec![1], vec![2, 3], vec![1, 2, 3]]).unwrap();
        let rep = covers(&prefix_sts(3), &net);
        assert_eq!(
            rep.covered.values().copied().collect::<Vec<_>>(),
            vec![1, 2, 1]
        );
        assert!(rep.is_full());

        let net = make_bipartite(2, vec![vec![1, 2]]).unwrap();
        let s = Sts::new(vec![StsRound::new(2, [1, 2])]).unwrap();
        assert!(covers(&s, &net).uncovered.contains(&0));

        let net = make_bipartite(2, vec![vec![2]]).unwrap();
        let s = Sts::new(vec![StsRound::new(1, [1])]).unwrap();
        assert!(!covers(&s, &net).is_full());
    }

    #[test]
    fn rejects_solo_outside_active() {
        assert!(Sts::new(vec![StsRound::new(3, [1, 2])]).is_err());
        assert!(Sts::from_json(r#"[{"solo": 1, "active": [2]}]"#).is_err());
    }

    #[test]
    fn json_format() {
        let s = prefix_sts(2);
        let v: serde_json::Value = serde_json::from_str(&s.to_json().unwrap()).unwrap();
        assert_eq!(v[1]["solo"], 2);
        assert_eq!(v[1]["active"], serde_json::json!([1, 2]));
        assert_eq!(Sts::from_json(&s.to_json().unwrap()).unwrap(), s);
    }

    #[test]
    fn permute_examples() {
        let s = Sts::new(vec![StsRound::new(1, [1, 2])]).unwrap();
        let swap = Permutation::new(vec![2, 1]).unwrap();
        assert_eq!(permute(&s, &swap).unwrap().rounds()[0].solo, 2);
        assert_eq!(permute(&s, &Permutation::identity(2)).unwrap(), s);
        assert!(permute(&prefix_sts(3), &swap).is_err());
    }

    #[test]
    fn prefix_shapes() {
        assert_eq!(prefix_sts(1).rounds(), &[StsRound::new(1, [1])]);
        assert_eq!(
            prefix_sts(3).rounds(),
            &[
                StsRound::new(1, [1]),
                StsRound::new(2, [1, 2]),
                StsRound::new(3, [1, 2, 3])
            ]
        );
    }

    #[test]
    fn partition_cells() {
        let cells = even_partition(4, 2);
        assert_eq!(cells, vec![SenderSet::new([1, 3]), SenderSet::new([2, 4])]);
        assert!(partition_sts(2, 2).is_err());
        assert!(partition_sts(4, 0).is_err());
        let s = partition_sts(4, 1).unwrap();
        // ⌈4/1⌉ = 4 switch rounds with 2 cells each, no prefix tail.
        assert_eq!(s.len(), 8);
    }

    #[test]
    fn range_is_deterministic_and_validated() {
        assert_eq!(
            range_sts(16, 2, 8, 5).unwrap(),
            range_sts(16, 2, 8, 5).unwrap()
        );
        assert!(range_sts(16, 9, 8, 5).is_err());
        assert!(range_sts(16, 1, 17, 5).is_err());
        assert_eq!(range_sts(1, 1, 1, 0).unwrap(), prefix_sts(1));
        let p = range_sts_parts(16, 2, 8, 5).unwrap();
        assert_eq!(p.sets.len(), (16.0f64 * 16f64.ln()).ceil() as usize);
        assert!(p.sets.iter().all(|s| s.len() == 2));
    }

    #[test]
    fn coverage_examples() {
        let net = make_bipartite(2, vec![vec![2]]).unwrap();
        let s = Sts::new(vec![StsRound::new(1, [1])]).unwrap();
        let est = coverage_probability(&s, &net, CoverageMode::exact()).unwrap();
        assert_eq!(est.probability(), ratio(1, 2));
        let est = coverage_probability(&Sts::empty(), &net, CoverageMode::exact()).unwrap();
        assert_eq!(est.probability(), ratio(0, 1));
        let big = make_bipartite(9, vec![vec![1]]).unwrap();
        assert_eq!(
            coverage_probability(&prefix_sts(9), &big, CoverageMode::exact()),
            Err(Error::EtaTooLargeForExact { eta: 9, cap: 8 })
        );
    }

    #[test]
    fn monte_carlo_agrees_with_exact() {
        let net = make_bipartite(4, vec![vec![1, 2], vec![3]]).unwrap();
        let s = Sts::new(vec![StsRound::new(1, [1]), StsRound::new(2, [1, 2, 3])]).unwrap();
        let ex = coverage_probability(&s, &net, CoverageMode::exact()).unwrap();
        let mc = coverage_probability(
            &s,
            &net,
            CoverageMode::MonteCarlo {
                trials: 4000,
                seed: 1,
            },
        )
        .unwrap();
        let (lo, hi) = mc.interval;
        let p = ex.mean();
        assert!(lo - 0.02 <= p && p <= hi + 0.02, "{p} vs [{lo}, {hi}]");
    }

    #[test]
    fn wilson_bounds() {
        let (lo, hi) = wilson_interval(50, 100);
        assert!(lo < 0.5 && hi > 0.5 && lo > 0.39 && hi < 0.61);
        assert_eq!(wilson_interval(0, 10).0, 0.0);
    }
}

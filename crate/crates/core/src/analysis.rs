//! Reception probabilities, subset scans and throughput curves.
//!
//! A receiver of degree `d` whose neighborhood is a uniform `d`-subset of
//! `n'` senders hears a transmitting set of size `a` alone with probability
//! `P_d(a) = a·C(n'−a, d−1) / C(n', d)`.

use std::io::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocols::{rational_string, run_protocol, ProtocolSpec};
use crate::scalar::{binomial, Scalar};
use crate::sts::trial_rng;
use crate::topology::{BipartiteNetwork, SenderSet};

/// Default largest `eta` for the exhaustive subset scan.
pub const DEFAULT_SUBSET_CAP: u32 = 20;

fn check_domain(n_prime: u64, a: u64, d: u64) -> Result<()> {
    if n_prime == 0 || !(1..=n_prime).contains(&a) || !(1..=n_prime).contains(&d) {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= a, d <= n', got n' = {n_prime}, a = {a}, d = {d}"
        )));
    }
    Ok(())
}

/// `P(|N ∩ A'| = j)` for a uniform `d`-subset `N` and a fixed `a`-set `A'`.
fn hypergeometric(n_prime: u64, a: u64, d: u64, j: u64) -> BigRational {
    if j > a || j > d || d - j > n_prime - a {
        return BigRational::zero();
    }
    BigRational::new(
        binomial(a, j) * binomial(n_prime - a, d - j),
        binomial(n_prime, d),
    )
}

/// Exact `P_d(a)`; zero when `d > n' − a + 1`.
pub fn reception_prob_exact(n_prime: u64, a: u64, d: u64) -> Result<BigRational> {
    check_domain(n_prime, a, d)?;
    Ok(hypergeometric(n_prime, a, d, 1))
}

/// `P_d(a)` in any scalar type.
pub fn reception_prob<T: Scalar>(n_prime: u64, a: u64, d: u64) -> Result<T> {
    let p = reception_prob_exact(n_prime, a, d)?;
    Ok(T::from_ratio(p.numer().clone(), p.denom().clone()))
}

/// Exact probabilities of hearing zero, exactly one, and two or more
/// transmitters; they sum to one.
pub fn reception_outcomes(n_prime: u64, a: u64, d: u64) -> Result<[BigRational; 3]> {
    check_domain(n_prime, a, d)?;
    let zero = hypergeometric(n_prime, a, d, 0);
    let one = hypergeometric(n_prime, a, d, 1);
    let many = (2..=a.min(d)).fold(BigRational::zero(), |acc, j| {
        acc + hypergeometric(n_prime, a, d, j)
    });
    Ok([zero, one, many])
}

/// `x·e^{1−x}` with `x = a·d/n'`, an upper bound on `P_d(a)`.
pub fn reception_bound(n_prime: u64, a: u64, d: u64) -> f64 {
    let x = a as f64 * d as f64 / n_prime as f64;
    x * (1.0 - x).exp()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReceptionStats {
    pub n_prime: u64,
    pub a: u64,
    pub d: u64,
    #[serde(with = "rational_string")]
    pub p_exact: BigRational,
    pub p_bound: f64,
}

/// Exact probability and bound for every `1 <= a, d <= n'`.
pub fn reception_table(n_prime: u64) -> Result<Vec<ReceptionStats>> {
    let mut rows = Vec::new();
    for a in 1..=n_prime {
        for d in 1..=n_prime {
            rows.push(ReceptionStats {
                n_prime,
                a,
                d,
                p_exact: reception_prob_exact(n_prime, a, d)?,
                p_bound: reception_bound(n_prime, a, d),
            });
        }
    }
    Ok(rows)
}

/// CSV columns `eta, a, d, p_exact_num, p_exact_den, p_bound`.
pub fn write_reception_csv<W: Write>(out: W, rows: &[ReceptionStats]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["eta", "a", "d", "p_exact_num", "p_exact_den", "p_bound"])?;
    for r in rows {
        w.write_record([
            r.n_prime.to_string(),
            r.a.to_string(),
            r.d.to_string(),
            r.p_exact.numer().to_string(),
            r.p_exact.denom().to_string(),
            format!("{:.12e}", r.p_bound),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Where the receiver degrees come from.
#[derive(Clone, Copy, Debug)]
pub enum ReceptionModel<'a> {
    /// `num_classes` classes of `n'` receivers, class `i` of degree `2^i`.
    Classes { n_prime: u64, num_classes: u32 },
    /// Each receiver of the network with a uniformly random neighborhood of
    /// its own degree.
    Network(&'a BipartiteNetwork),
}

/// Expected number of receivers hearing a fixed `a`-set alone.
pub fn expected_receptions<T: Scalar>(model: ReceptionModel<'_>, a: u64) -> Result<T> {
    let exact = match model {
        ReceptionModel::Classes {
            n_prime,
            num_classes,
        } => {
            if num_classes >= 64 || 1u64 << num_classes > n_prime {
                return Err(Error::DegreeExceedsSenders {
                    classes: num_classes,
                    senders: n_prime as u32,
                });
            }
            let mut sum = BigRational::zero();
            for i in 1..=num_classes {
                sum += reception_prob_exact(n_prime, a, 1 << i)?;
            }
            sum * BigRational::from_integer(BigInt::from(n_prime))
        }
        ReceptionModel::Network(net) => {
            let n_prime = u64::from(net.eta());
            let mut sum = BigRational::zero();
            for d in net.degrees() {
                sum += reception_prob_exact(n_prime, a, d as u64)?;
            }
            sum
        }
    };
    Ok(T::from_ratio(exact.numer().clone(), exact.denom().clone()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubsetScan {
    /// All `2^η − 1` nonempty sets; refused above `cap`.
    Exhaustive { cap: u32 },
    /// Best of `trials` random sets: a lower bound on the maximum.
    Sampled { trials: u64, seed: u64 },
}

impl SubsetScan {
    pub fn exhaustive() -> Self {
        SubsetScan::Exhaustive {
            cap: DEFAULT_SUBSET_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaxReception {
    pub best: SenderSet,
    /// Receivers hearing `best` alone.
    pub count: usize,
    pub receivers: usize,
    pub exhaustive: bool,
}

impl MaxReception {
    pub fn fraction(&self) -> BigRational {
        if self.receivers == 0 {
            return BigRational::zero();
        }
        BigRational::new(self.count.into(), self.receivers.into())
    }

    pub fn fraction_f64(&self) -> f64 {
        self.fraction().to_f64().unwrap_or(f64::NAN)
    }
}

/// `(count, mask)` ordered so that larger counts win and ties go to the
/// smaller mask.
fn better(a: (usize, u64), b: (usize, u64)) -> (usize, u64) {
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

fn count_alone(net: &BipartiteNetwork, set: &SenderSet) -> usize {
    net.receivers()
        .iter()
        .filter(|n| n.intersection_len(set, 2) == 1)
        .count()
}

/// The sender set reaching the most receivers alone.
pub fn max_reception_fraction(net: &BipartiteNetwork, mode: SubsetScan) -> Result<MaxReception> {
    let eta = net.eta();
    let receivers = net.num_receivers();
    match mode {
        SubsetScan::Exhaustive { cap } => {
            if eta > cap || eta > 63 {
                return Err(Error::EtaTooLargeForExhaustive { eta, cap });
            }
            let incidence = net.sender_incidence();
            let high = eta.min(6);
            let low = eta - high;
            let (count, mask) = (0u64..1 << high)
                .into_par_iter()
                .map(|h| gray_scan(&incidence, receivers, h << low, low))
                .reduce(|| (0, u64::MAX), better);
            let mask = if mask == u64::MAX { 1 } else { mask };
            Ok(MaxReception {
                best: SenderSet::from_mask(mask),
                count,
                receivers,
                exhaustive: true,
            })
        }
        SubsetScan::Sampled { trials, seed } => {
            let best = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = trial_rng(seed, t);
                    let a = rng.random_range(1..=eta as usize);
                    let set: SenderSet = index::sample(&mut rng, eta as usize, a)
                        .iter()
                        .map(|x| x as u32 + 1)
                        .collect();
                    (count_alone(net, &set), set)
                })
                .reduce(
                    || (0, SenderSet::default()),
                    |x, y| {
                        if y.0 > x.0
                            || (y.0 == x.0 && !y.1.is_empty() && (x.1.is_empty() || y.1 < x.1))
                        {
                            y
                        } else {
                            x
                        }
                    },
                );
            let best_set = if best.1.is_empty() {
                SenderSet::new([1])
            } else {
                best.1
            };
            Ok(MaxReception {
                count: count_alone(net, &best_set),
                best: best_set,
                receivers,
                exhaustive: false,
            })
        }
    }
}

/// Walks the `2^low` sets `base | gray(i)` with incremental per-receiver
/// intersection counts; returns the best nonempty `(count, mask)`.
fn gray_scan(incidence: &[Vec<usize>], receivers: usize, base: u64, low: u32) -> (usize, u64) {
    let mut cnt = vec![0u32; receivers];
    let mut ones = 0usize;
    let flip = |s: usize, on: bool, cnt: &mut Vec<u32>, ones: &mut usize| {
        for &r in &incidence[s] {
            let before = cnt[r];
            let after = if on { before + 1 } else { before - 1 };
            cnt[r] = after;
            match (before == 1, after == 1) {
                (true, false) => *ones -= 1,
                (false, true) => *ones += 1,
                _ => {}
            }
        }
    };
    let mut mask = base;
    for s in 0..incidence.len() {
        if base >> s & 1 == 1 {
            flip(s, true, &mut cnt, &mut ones);
        }
    }
    let mut best = (0usize, u64::MAX);
    if mask != 0 {
        best = (ones, mask);
    }
    for i in 1u64..1 << low {
        let s = i.trailing_zeros() as usize;
        let on = mask >> s & 1 == 0;
        mask ^= 1 << s;
        flip(s, on, &mut cnt, &mut ones);
        best = better(best, (ones, mask));
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThroughputPoint {
    pub k: u32,
    pub rounds: u64,
    pub delivered: u64,
    /// `delivered / rounds`; equals `k / T_k` for complete runs.
    #[serde(with = "rational_string")]
    pub throughput: BigRational,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThroughputCurve {
    pub protocol: String,
    pub network: String,
    pub points: Vec<ThroughputPoint>,
}

/// Runs `spec` once per `k` (strictly increasing) and records `k / T_k`.
/// This is a finite-`k` estimate of the limiting throughput.
pub fn throughput_estimate(
    spec: &ProtocolSpec,
    net: &BipartiteNetwork,
    k_list: &[u32],
) -> Result<ThroughputCurve> {
    if k_list.is_empty() || k_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "k list must be nonempty and strictly increasing".into(),
        ));
    }
    let points = k_list
        .par_iter()
        .map(|&k| {
            let r = run_protocol(spec, net, k)?;
            Ok(ThroughputPoint {
                k,
                rounds: r.rounds,
                delivered: r.delivered_to_all,
                throughput: r.throughput,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ThroughputCurve {
        protocol: spec.name().to_string(),
        network: net.name().to_string(),
        points,
    })
}

/// CSV columns `k, rounds, throughput` (plus a float column).
pub fn write_curve_csv<W: Write>(out: W, curve: &ThroughputCurve) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "rounds", "throughput", "throughput_f64"])?;
    for p in &curve.points {
        w.write_record([
            p.k.to_string(),
            p.rounds.to_string(),
            p.throughput.to_string(),
            format!("{:.6}", p.throughput.to_f64().unwrap_or(f64::NAN)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

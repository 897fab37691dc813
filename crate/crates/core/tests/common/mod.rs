//! Shared oracles and generators for the integration tests.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use radio_bcast::sts::{Sts, StsRound};
use radio_bcast::topology::{make_bipartite, BipartiteNetwork};

/// Reference collision evaluator over an explicit undirected edge list:
/// listener `v` gets the tag of its unique transmitting neighbor.
pub fn naive_receive(
    n: usize,
    edges: &[(usize, usize)],
    tx: &[(usize, u8)],
) -> Vec<Option<Option<u8>>> {
    (0..n)
        .map(|v| {
            if tx.iter().any(|&(u, _)| u == v) {
                return None;
            }
            let heard: Vec<u8> = tx
                .iter()
                .filter(|&&(u, _)| {
                    edges
                        .iter()
                        .any(|&(a, b)| (a == u && b == v) || (a == v && b == u))
                })
                .map(|&(_, t)| t)
                .collect();
            Some(if heard.len() == 1 {
                Some(heard[0])
            } else {
                None
            })
        })
        .collect()
}

/// First 1-based round in which `nbhd` meets the active set exactly in the
/// solo sender, by direct counting.
pub fn brute_first_cover(rounds: &[(u32, Vec<u32>)], nbhd: &[u32]) -> Option<usize> {
    rounds
        .iter()
        .position(|(solo, active)| {
            let hit: Vec<u32> = active
                .iter()
                .copied()
                .filter(|a| nbhd.contains(a))
                .collect();
            hit == [*solo]
        })
        .map(|r| r + 1)
}

/// `H_n` through the common denominator `lcm(1..=n)`.
pub fn harmonic(n: u32) -> BigRational {
    let mut l = BigInt::one();
    for t in 1..=n {
        let t = BigInt::from(t);
        let g = gcd(l.clone(), t.clone());
        l = l * &t / g;
    }
    let num = (1..=n).fold(BigInt::zero(), |acc, t| acc + &l / BigInt::from(t));
    BigRational::new(num, l)
}

fn gcd(mut a: BigInt, mut b: BigInt) -> BigInt {
    while !b.is_zero() {
        let r = &a % &b;
        a = b;
        b = r;
    }
    a
}

/// `C(n, r)` by Pascal's triangle in `u128`.
pub fn pascal(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    let mut row = vec![1u128];
    for _ in 0..n {
        let mut next = vec![1u128; row.len() + 1];
        for i in 1..row.len() {
            next[i] = row[i - 1] + row[i];
        }
        row = next;
    }
    row[r]
}

pub fn ids_of(mask: u64) -> Vec<u32> {
    (0..64)
        .filter(|b| mask >> b & 1 == 1)
        .map(|b| b + 1)
        .collect()
}

pub fn sts_from(rounds: &[(u32, Vec<u32>)]) -> Sts {
    Sts::new(
        rounds
            .iter()
            .map(|(s, a)| StsRound::new(*s, a.iter().copied()))
            .collect(),
    )
    .unwrap()
}

/// Raw STS rounds on `eta` senders: a solo sender plus a random superset.
pub fn arb_rounds(eta: u32, max_len: usize) -> impl Strategy<Value = Vec<(u32, Vec<u32>)>> {
    let full = (1u64 << eta) - 1;
    prop::collection::vec((1..=eta, 0..=full), 1..=max_len).prop_map(|v| {
        v.into_iter()
            .map(|(solo, extra)| {
                let mask = extra | 1 << (solo - 1);
                (solo, ids_of(mask))
            })
            .collect()
    })
}

/// A network on `eta` senders with up to `max_receivers` distinct receivers.
pub fn arb_net(eta: u32, max_receivers: usize) -> impl Strategy<Value = BipartiteNetwork> {
    let full = (1u64 << eta) - 1;
    prop::collection::vec(1..=full, 1..=max_receivers)
        .prop_map(move |masks| make_bipartite(eta, masks.into_iter().map(ids_of)).unwrap())
}

pub fn arb_eta_net(max_eta: u32, max_receivers: usize) -> impl Strategy<Value = BipartiteNetwork> {
    (1..=max_eta).prop_flat_map(move |eta| arb_net(eta, max_receivers))
}

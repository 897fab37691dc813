mod common;

use std::collections::BTreeMap;

use num_rational::BigRational;
use proptest::prelude::*;
use radio_bcast::analysis::{reception_bound, reception_outcomes, reception_prob_exact};
use radio_bcast::coding::{encode, fec_decode, fec_encode, DecoderState, Gf256};
use radio_bcast::perm::Permutation;
use radio_bcast::protocols::{run_protocol, DecayConfig, PhasedCodingConfig, ProtocolSpec};
use radio_bcast::radio_sim::{step, AdjacencyList, Packet, PacketBudget, TransmitMap};
use radio_bcast::schedule::{MessageId, ScheduleRound, TransmissionSchedule};
use radio_bcast::sts::{covers, permute, prefix_sts, weight};
use radio_bcast::synthesis::{charges, schedule_to_sts, sts_to_schedule, SynthMode};
use radio_bcast::topology::{gen_class_family, make_bipartite, RadioGraph, SenderSet};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;

fn arb_graph() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (1usize..=7).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .collect();
        let m = pairs.len();
        (Just(n), prop::collection::vec(any::<bool>(), m)).prop_map(move |(n, keep)| {
            (
                n,
                pairs
                    .iter()
                    .zip(keep)
                    .filter(|(_, k)| *k)
                    .map(|(&p, _)| p)
                    .collect(),
            )
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn step_agrees_with_naive_evaluator((n, edges) in arb_graph(), tx_mask in any::<u8>()) {
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in &edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        let adj = AdjacencyList::new(adj);
        let tx_list: Vec<(usize, u8)> = (0..n).filter(|v| tx_mask >> v & 1 == 1).map(|v| (v, v as u8 + 10)).collect();
        let tx: TransmitMap = tx_list.iter().map(|&(v, t)| (v, Packet::data(vec![t]))).collect();
        let report = step(&adj, &tx).unwrap();
        prop_assert_eq!(report.listeners(), n - tx_list.len());
        prop_assert_eq!(&step(&adj, &tx).unwrap(), &report);
        for (v, expect) in naive_receive(n, &edges, &tx_list).into_iter().enumerate() {
            match expect {
                None => prop_assert!(!report.received.contains_key(&v) && !report.collided.contains(&v) && !report.silent.contains(&v)),
                Some(Some(t)) => prop_assert_eq!(report.received[&v].packet.payload(), Some(&[t][..])),
                Some(None) => prop_assert!(report.collided.contains(&v) || report.silent.contains(&v)),
            }
        }
    }

    #[test]
    fn covers_matches_brute_force_and_simulation(
        (net, rounds) in (1u32..=6).prop_flat_map(|eta| (arb_net(eta, 12), arb_rounds(eta, 8)))
    ) {
        let s = sts_from(&rounds);
        let report = covers(&s, &net);
        let eta = net.eta() as usize;
        let adj = AdjacencyList::from_bipartite(&net);
        let mut sim_first: BTreeMap<usize, usize> = BTreeMap::new();
        for (r, (solo, active)) in rounds.iter().enumerate() {
            let tx: TransmitMap = active
                .iter()
                .map(|&a| (a as usize - 1, if a == *solo { Packet::data(vec![1u8]) } else { Packet::Noise }))
                .collect();
            let rep = step(&adj, &tx).unwrap();
            for (&v, rc) in rep.received.range(eta..) {
                if !rc.packet.is_noise() {
                    sim_first.entry(v - eta).or_insert(r + 1);
                }
            }
        }
        prop_assert_eq!(&report.covered, &sim_first);
        for (j, nb) in net.receivers().iter().enumerate() {
            prop_assert_eq!(brute_first_cover(&rounds, nb.as_slice()), report.covered.get(&j).copied());
        }
    }

    #[test]
    fn weight_is_permutation_invariant(
        (rounds, pi) in (1u32..=8).prop_flat_map(|eta| (arb_rounds(eta, 10), Just((1..=eta).collect::<Vec<u32>>()).prop_shuffle()))
    ) {
        let s = sts_from(&rounds);
        let pi = Permutation::new(pi).unwrap();
        let t = permute(&s, &pi).unwrap();
        prop_assert_eq!(weight(&t), weight(&s));
        let oracle = rounds.iter().fold(BigRational::from_integer(0.into()), |acc, (_, a)| {
            acc + BigRational::new(1.into(), (a.len() as i64).into())
        });
        prop_assert_eq!(weight(&s), oracle);
    }

    #[test]
    fn coverage_is_monotone_in_appended_rounds(
        (net, a, b) in (1u32..=6).prop_flat_map(|eta| (arb_net(eta, 10), arb_rounds(eta, 5), arb_rounds(eta, 5)))
    ) {
        let first = covers(&sts_from(&a), &net);
        let mut joined = a.clone();
        joined.extend(b);
        let both = covers(&sts_from(&joined), &net);
        for (j, r) in &first.covered {
            prop_assert_eq!(both.covered.get(j), Some(r));
        }
    }

    #[test]
    fn make_bipartite_is_idempotent(net in arb_eta_net(8, 20)) {
        let again = make_bipartite(net.eta(), net.receivers().iter().map(|n| n.as_slice().to_vec())).unwrap();
        prop_assert_eq!(&again, &net);
        let back = radio_bcast::BipartiteNetwork::from_json(&net.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, net);
    }

    #[test]
    fn class_family_degrees_are_exact(exp in 2u32..=6, seed in any::<u64>()) {
        let n_prime = 1u32 << exp;
        let classes = exp - 1;
        let net = gen_class_family(n_prime, classes, seed).unwrap();
        prop_assert_eq!(net.num_receivers(), (n_prime * classes) as usize);
        for (j, d) in net.degrees().enumerate() {
            prop_assert_eq!(d, 1usize << (j / n_prime as usize + 1));
        }
        prop_assert_eq!(gen_class_family(n_prime, classes, seed).unwrap(), net);
    }

    #[test]
    fn charges_sum_to_round_count(
        (eta, k, raw) in (1u32..=5, 1u32..=4).prop_flat_map(|(eta, k)| {
            (Just(eta), Just(k), prop::collection::vec(prop::collection::vec(0..=k, eta as usize), 1..12))
        })
    ) {
        // raw[r][s] = message sent by sender s+1 in round r (0 = silent).
        let rounds: Vec<ScheduleRound> = raw
            .iter()
            .map(|row| {
                let mut round: BTreeMap<MessageId, Vec<u32>> = BTreeMap::new();
                for (s, &m) in row.iter().enumerate() {
                    if m > 0 {
                        round.entry(MessageId(m)).or_default().push(s as u32 + 1);
                    }
                }
                round.into_iter().map(|(m, v)| (m, SenderSet::new(v))).collect()
            })
            .collect();
        let busy = rounds.iter().filter(|r| !r.is_empty()).count();
        let sched = TransmissionSchedule::new(eta, k, rounds).unwrap();
        let ch = charges(&sched).unwrap();
        prop_assert_eq!(ch.total(), BigRational::from_integer(busy.into()));
        prop_assert_eq!(ch.idle_rounds as usize, sched.len() - busy);
        let min = ch.charges.values().min().unwrap();
        prop_assert_eq!(&ch.charges[&ch.argmin], min);
        prop_assert!(min * BigRational::from_integer(k.into()) <= ch.total());
    }

    #[test]
    fn extracted_sts_covers_when_schedule_delivers(net in arb_eta_net(4, 6), k in 1u32..=3) {
        // Every sender sends every message alone once: always delivers.
        let eta = net.eta();
        let rounds: Vec<ScheduleRound> = (1..=k)
            .flat_map(|m| (1..=eta).map(move |s| [(MessageId(m), SenderSet::new([s]))].into_iter().collect()))
            .collect();
        let sched = TransmissionSchedule::new(eta, k, rounds).unwrap();
        let (s, ch) = schedule_to_sts(&sched, &net).unwrap();
        prop_assert!(covers(&s, &net).is_full());
        prop_assert!(weight(&s) * BigRational::from_integer(k.into()) <= BigRational::from_integer(sched.len().into()));
        prop_assert_eq!(ch.total(), BigRational::from_integer(sched.len().into()));
    }

    #[test]
    fn exact_synthesis_round_count(rounds in (1u32..=4).prop_flat_map(|eta| arb_rounds(eta, 4))) {
        let s = sts_from(&rounds);
        let eta = s.max_sender();
        let (sched, plan) = sts_to_schedule(&s, eta, SynthMode::exact()).unwrap();
        let fact: u64 = (1..=u64::from(eta)).product();
        prop_assert_eq!(
            BigRational::from_integer(sched.len().into()),
            weight(&s) * BigRational::from_integer(fact.into())
        );
        prop_assert_eq!(plan.total_rounds(), sched.len() as u64);
    }

    #[test]
    fn gf_field_laws(a in any::<u8>(), b in any::<u8>(), c in any::<u8>()) {
        let (a, b, c) = (Gf256(a), Gf256(b), Gf256(c));
        prop_assert_eq!(a * (b + c), a * b + a * c);
        prop_assert_eq!((a * b) * c, a * (b * c));
        prop_assert_eq!(a * b, b * a);
    }

    #[test]
    fn decode_inverts_encode(b in 1usize..=16, len in 0usize..24, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let block: Vec<Vec<u8>> = (0..b).map(|_| (0..len).map(|_| rand::Rng::random(&mut rng)).collect()).collect();
        let mut dec = DecoderState::new(9, b);
        let mut packets = Vec::new();
        let mut last_rank = 0;
        while !dec.is_decodable() {
            let coeffs = radio_bcast::coding::random_coeffs(b, &mut rng);
            let p = encode(9, &block, &coeffs, PacketBudget::UNBOUNDED).unwrap();
            dec.absorb(&p).unwrap();
            prop_assert!(dec.rank() >= last_rank);
            last_rank = dec.rank();
            packets.push(p);
        }
        prop_assert_eq!(dec.decode().unwrap(), block.clone());
        packets.reverse();
        let mut rev = DecoderState::new(9, b);
        for p in &packets {
            rev.absorb(p).unwrap();
        }
        prop_assert_eq!(rev.rank(), b);
        prop_assert_eq!(rev.decode().unwrap(), block);
    }

    #[test]
    fn fec_sampled_subsets_decode(k in 1usize..=8, extra in 0usize..8, seed in any::<u64>()) {
        let m = k + extra;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let msgs: Vec<Vec<u8>> = (0..k).map(|i| vec![i as u8, 7, 3]).collect();
        let pkts = fec_encode(1, &msgs, m).unwrap();
        let pick = rand::seq::index::sample(&mut rng, m, k);
        let chosen: Vec<_> = pick.iter().map(|i| pkts[i].clone()).collect();
        prop_assert_eq!(fec_decode(&chosen, k).unwrap(), msgs);
    }

    #[test]
    fn reception_outcomes_and_bound(n in 1u64..=48, a in 1u64..=48, d in 1u64..=48) {
        prop_assume!(a <= n && d <= n);
        let [zero, one, many] = reception_outcomes(n, a, d).unwrap();
        prop_assert_eq!(zero + &one + many, BigRational::from_integer(1.into()));
        let p = reception_prob_exact(n, a, d).unwrap();
        prop_assert_eq!(&p, &one);
        let oracle = a as f64 * pascal((n - a) as usize, (d - 1) as usize) as f64 / pascal(n as usize, d as usize) as f64;
        let pf: f64 = radio_bcast::analysis::reception_prob(n, a, d).unwrap();
        prop_assert!((pf - oracle).abs() <= 1e-12 * oracle.max(1.0));
        prop_assert!(pf <= reception_bound(n, a, d) + 1e-12);
    }

    #[test]
    fn protocol_throughput_at_most_one_and_deterministic(net in arb_eta_net(5, 8), k in 1u32..=4, seed in any::<u64>()) {
        let n = net.node_count();
        let specs = [
            ProtocolSpec::RepeatedDecay(DecayConfig::defaults_for(n, seed)),
            ProtocolSpec::Coded(PhasedCodingConfig::defaults_for(n, seed)),
            ProtocolSpec::StsRouting { sts: prefix_sts(net.eta()), mode: SynthMode::exact() },
        ];
        for spec in &specs {
            let r = run_protocol(spec, &net, k).unwrap();
            prop_assert!(r.throughput <= BigRational::from_integer(1.into()));
            prop_assert_eq!(r.to_json().unwrap(), run_protocol(spec, &net, k).unwrap().to_json().unwrap());
        }
    }

    #[test]
    fn bfs_layers_partition_and_link((n, extra) in (2usize..=10).prop_flat_map(|n| {
        (Just(n), prop::collection::vec((0..n, 0..n), 0..12))
    }), parents in prop::collection::vec(any::<prop::sample::Index>(), 9)) {
        // Random tree plus extra edges: connected by construction.
        let mut edges = std::collections::BTreeSet::new();
        for v in 1..n {
            let p = parents[v - 1].index(v);
            edges.insert((p.min(v) as u32, p.max(v) as u32));
        }
        for (a, b) in extra {
            if a != b {
                edges.insert((a.min(b) as u32, a.max(b) as u32));
            }
        }
        let g = RadioGraph::new(0..n as u32, edges.iter().copied(), 0).unwrap();
        let layers = g.bfs_layers().unwrap();
        let mut all: Vec<u32> = layers.iter().flatten().copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n as u32).collect::<Vec<_>>());
        prop_assert_eq!(&layers[0], &vec![0]);
        for i in 1..layers.len() {
            for &v in &layers[i] {
                prop_assert!(layers[i - 1].iter().any(|&u| edges.contains(&(u.min(v), u.max(v)))));
            }
        }
    }
}

//! Bipartite and general radio networks.
//!
//! Senders of a [`BipartiteNetwork`] are numbered `1..=eta`; a receiver is
//! identified with the set of senders it hears. Generators use
//! [`ChaCha8Rng`] seeded with `seed_from_u64`, so every instance is
//! reproducible across platforms.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::fmt;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sorted, duplicate-free set of sender ids.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "Vec<u32>", into = "Vec<u32>")]
pub struct SenderSet(Vec<u32>);

/// A receiver's view of the senders: the senders it is adjacent to.
pub type Neighborhood = SenderSet;

impl SenderSet {
    pub fn new(ids: impl IntoIterator<Item = u32>) -> Self {
        let mut v: Vec<u32> = ids.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        SenderSet(v)
    }

    /// The interval `[lo, hi]` (empty when `lo > hi`).
    pub fn interval(lo: u32, hi: u32) -> Self {
        SenderSet((lo..=hi).collect())
    }

    /// Senders whose bit `id - 1` is set in `mask`.
    pub fn from_mask(mask: u64) -> Self {
        SenderSet(
            (0..64)
                .filter(|b| mask >> b & 1 == 1)
                .map(|b| b + 1)
                .collect(),
        )
    }

    /// Bitmask with bit `id - 1` set per member; `None` if an id exceeds 64.
    pub fn to_mask(&self) -> Option<u64> {
        self.0.iter().try_fold(0u64, |acc, &id| {
            (1..=64).contains(&id).then(|| acc | 1u64 << (id - 1))
        })
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: u32) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.iter().copied()
    }

    pub fn max_id(&self) -> Option<u32> {
        self.0.last().copied()
    }

    pub fn union(&self, other: &SenderSet) -> SenderSet {
        SenderSet::new(self.iter().chain(other.iter()))
    }

    pub fn is_disjoint(&self, other: &SenderSet) -> bool {
        self.intersection_len(other, usize::MAX) == 0
    }

    /// `|self ∩ other|`, stopping early once `cap` is reached.
    pub fn intersection_len(&self, other: &SenderSet, cap: usize) -> usize {
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j, mut n) = (0, 0, 0);
        while i < a.len() && j < b.len() && n < cap {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }

    /// True iff `self ∩ active == {solo}`.
    pub fn hears_alone(&self, solo: u32, active: &SenderSet) -> bool {
        self.contains(solo) && self.intersection_len(active, 2) == 1
    }
}

impl From<Vec<u32>> for SenderSet {
    fn from(v: Vec<u32>) -> Self {
        SenderSet::new(v)
    }
}

impl From<SenderSet> for Vec<u32> {
    fn from(s: SenderSet) -> Self {
        s.0
    }
}

impl FromIterator<u32> for SenderSet {
    fn from_iter<I: IntoIterator<Item = u32>>(iter: I) -> Self {
        SenderSet::new(iter)
    }
}

impl fmt::Display for SenderSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, id) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{id}")?;
        }
        write!(f, "}}")
    }
}

/// One collision-prone hop: `eta` senders that all hold every message and a
/// list of receivers given by their neighborhoods.
///
/// [`make_bipartite`] removes duplicate neighborhoods (two receivers with the
/// same neighbors always hear the same packets). The degree-class generator
/// keeps its classes at their exact sizes instead, so networks built by
/// [`gen_class_family`] or loaded from disk may repeat a neighborhood.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawNetwork", into = "RawNetwork")]
pub struct BipartiteNetwork {
    eta: u32,
    receivers: Vec<Neighborhood>,
    name: String,
}

#[derive(Serialize, Deserialize)]
struct RawNetwork {
    eta: u32,
    receivers: Vec<Vec<u32>>,
    #[serde(default)]
    name: String,
}

impl TryFrom<RawNetwork> for BipartiteNetwork {
    type Error = Error;

    fn try_from(raw: RawNetwork) -> Result<Self> {
        let receivers = validate_neighborhoods(raw.eta, raw.receivers)?;
        Ok(BipartiteNetwork {
            eta: raw.eta,
            receivers,
            name: raw.name,
        })
    }
}

impl From<BipartiteNetwork> for RawNetwork {
    fn from(net: BipartiteNetwork) -> Self {
        RawNetwork {
            eta: net.eta,
            receivers: net.receivers.into_iter().map(Vec::from).collect(),
            name: net.name,
        }
    }
}

fn validate_neighborhoods<I, S>(eta: u32, raw: I) -> Result<Vec<Neighborhood>>
where
    I: IntoIterator<Item = S>,
    S: IntoIterator<Item = u32>,
{
    if eta == 0 {
        return Err(Error::InvalidParameter("eta must be at least 1".into()));
    }
    raw.into_iter()
        .enumerate()
        .map(|(idx, ids)| {
            let set = SenderSet::new(ids);
            if set.is_empty() {
                return Err(Error::EmptyNeighborhood(idx));
            }
            if let Some(&bad) = set.as_slice().iter().find(|&&id| id == 0 || id > eta) {
                return Err(Error::SenderIdOutOfRange { id: bad, eta });
            }
            Ok(set)
        })
        .collect()
}

/// Validates, sorts and deduplicates neighborhoods (first occurrence wins).
pub fn make_bipartite<I, S>(eta: u32, raw_neighborhoods: I) -> Result<BipartiteNetwork>
where
    I: IntoIterator<Item = S>,
    S: IntoIterator<Item = u32>,
{
    let receivers = validate_neighborhoods(eta, raw_neighborhoods)?;
    let mut seen = HashSet::new();
    let receivers = receivers
        .into_iter()
        .filter(|n| seen.insert(n.clone()))
        .collect();
    Ok(BipartiteNetwork {
        eta,
        receivers,
        name: String::new(),
    })
}

impl BipartiteNetwork {
    pub fn eta(&self) -> u32 {
        self.eta
    }

    pub fn receivers(&self) -> &[Neighborhood] {
        &self.receivers
    }

    pub fn num_receivers(&self) -> usize {
        self.receivers.len()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Total node count `eta + |receivers|`.
    pub fn node_count(&self) -> usize {
        self.eta as usize + self.receivers.len()
    }

    pub fn degrees(&self) -> impl Iterator<Item = usize> + '_ {
        self.receivers.iter().map(SenderSet::len)
    }

    /// Smallest receiver degree (delta); `None` without receivers.
    pub fn min_degree(&self) -> Option<usize> {
        self.degrees().min()
    }

    /// Largest receiver degree (Delta).
    pub fn max_degree(&self) -> Option<usize> {
        self.degrees().max()
    }

    pub fn is_deduplicated(&self) -> bool {
        let mut seen = HashSet::new();
        self.receivers.iter().all(|n| seen.insert(n))
    }

    pub fn dedup(&self) -> BipartiteNetwork {
        make_bipartite(
            self.eta,
            self.receivers.iter().map(|n| n.iter().collect::<Vec<_>>()),
        )
        .expect("already validated")
        .with_name(self.name.clone())
    }

    /// For each sender `1..=eta` (index `id - 1`), the receivers adjacent to it.
    pub fn sender_incidence(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.eta as usize];
        for (r, n) in self.receivers.iter().enumerate() {
            for s in n.iter() {
                inc[s as usize - 1].push(r);
            }
        }
        inc
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Receiver classes used by the default degree-class instance:
/// `floor(log2 n') - 1`, at least 1.
pub fn default_num_classes(n_prime: u32) -> u32 {
    (31 - n_prime.max(1).leading_zeros())
        .saturating_sub(1)
        .max(1)
}

/// The degree-class family: `n_prime` senders and `num_classes` classes of
/// `n_prime` receivers each, where every class-`i` receiver picks a uniform
/// random `2^i`-subset of the senders independently.
pub fn gen_class_family(n_prime: u32, num_classes: u32, seed: u64) -> Result<BipartiteNetwork> {
    if n_prime == 0 {
        return Err(Error::InvalidParameter("n_prime must be at least 1".into()));
    }
    if num_classes >= 32 || (1u64 << num_classes) > u64::from(n_prime) {
        return Err(Error::DegreeExceedsSenders {
            classes: num_classes,
            senders: n_prime,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut receivers = Vec::with_capacity((n_prime * num_classes) as usize);
    for class in 1..=num_classes {
        let degree = 1usize << class;
        for _ in 0..n_prime {
            let pick = index::sample(&mut rng, n_prime as usize, degree);
            receivers.push(SenderSet::new(pick.into_iter().map(|i| i as u32 + 1)));
        }
    }
    Ok(BipartiteNetwork {
        eta: n_prime,
        receivers,
        name: format!("class-family(n'={n_prime}, classes={num_classes}, seed={seed})"),
    })
}

/// Receiver count used by the default half-dense instance: `eta^2`.
pub fn default_halfdense_receivers(eta: u32) -> usize {
    (eta as usize).pow(2)
}

/// The half-dense family: every receiver–sender edge is present with
/// probability 1/2. Empty neighborhoods are redrawn; duplicates are then
/// removed, so fewer than `num_receivers` receivers remain when `2^eta - 1`
/// is small relative to `num_receivers`.
pub fn gen_halfdense_family(eta: u32, num_receivers: usize, seed: u64) -> Result<BipartiteNetwork> {
    if eta < 2 {
        return Err(Error::InvalidParameter(
            "half-dense family needs eta >= 2".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut raw = Vec::with_capacity(num_receivers);
    for _ in 0..num_receivers {
        loop {
            let n: Vec<u32> = (1..=eta).filter(|_| rng.random_bool(0.5)).collect();
            if !n.is_empty() {
                raw.push(n);
                break;
            }
        }
    }
    Ok(make_bipartite(eta, raw)?.with_name(format!(
        "halfdense(eta={eta}, receivers={num_receivers}, seed={seed})"
    )))
}

pub type NodeId = u32;

/// A simple undirected graph with a distinguished source.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawGraph", into = "RawGraph")]
pub struct RadioGraph {
    nodes: Vec<NodeId>,
    edges: Vec<(NodeId, NodeId)>,
    source: NodeId,
    #[serde(skip)]
    index: BTreeMap<NodeId, usize>,
    #[serde(skip)]
    adjacency: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct RawGraph {
    nodes: Vec<NodeId>,
    edges: Vec<[NodeId; 2]>,
    source: NodeId,
}

impl TryFrom<RawGraph> for RadioGraph {
    type Error = Error;

    fn try_from(raw: RawGraph) -> Result<Self> {
        RadioGraph::new(
            raw.nodes,
            raw.edges.into_iter().map(|[a, b]| (a, b)),
            raw.source,
        )
    }
}

impl From<RadioGraph> for RawGraph {
    fn from(g: RadioGraph) -> Self {
        RawGraph {
            nodes: g.nodes,
            edges: g.edges.into_iter().map(|(a, b)| [a, b]).collect(),
            source: g.source,
        }
    }
}

impl RadioGraph {
    /// Builds a simple graph. Reachability from the source is checked by the
    /// consumers that need it ([`bfs_decompose`]).
    pub fn new(
        nodes: impl IntoIterator<Item = NodeId>,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
        source: NodeId,
    ) -> Result<Self> {
        let mut nodes: Vec<NodeId> = nodes.into_iter().collect();
        nodes.sort_unstable();
        if nodes.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::NotSimple("duplicate node id".into()));
        }
        let index: BTreeMap<NodeId, usize> =
            nodes.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        if !index.contains_key(&source) {
            return Err(Error::UnknownNode(source.into()));
        }
        let mut adjacency = vec![Vec::new(); nodes.len()];
        let mut seen = HashSet::new();
        let mut normalized = Vec::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::NotSimple(format!("self-loop at {a}")));
            }
            let ia = *index.get(&a).ok_or(Error::UnknownNode(a.into()))?;
            let ib = *index.get(&b).ok_or(Error::UnknownNode(b.into()))?;
            let key = (a.min(b), a.max(b));
            if !seen.insert(key) {
                return Err(Error::NotSimple(format!("multi-edge {}-{}", key.0, key.1)));
            }
            normalized.push(key);
            adjacency[ia].push(ib);
            adjacency[ib].push(ia);
        }
        normalized.sort_unstable();
        for adj in &mut adjacency {
            adj.sort_unstable();
        }
        Ok(RadioGraph {
            nodes,
            edges: normalized,
            source,
            index,
            adjacency,
        })
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn source(&self) -> NodeId {
        self.source
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Dense index of a node id (position in [`nodes`](Self::nodes)).
    pub fn index_of(&self, id: NodeId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    /// Neighbors of the node at dense index `i`, as dense indices.
    pub fn neighbors_of_index(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn degree(&self, id: NodeId) -> Option<usize> {
        self.index_of(id).map(|i| self.adjacency[i].len())
    }

    /// BFS distance layers from the source, as node ids. Errors on the first
    /// unreachable node.
    pub fn bfs_layers(&self) -> Result<Vec<Vec<NodeId>>> {
        let n = self.nodes.len();
        let mut dist = vec![usize::MAX; n];
        let s = self.index[&self.source];
        dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &v in &self.adjacency[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        if let Some(i) = dist.iter().position(|&d| d == usize::MAX) {
            return Err(Error::Unreachable(self.nodes[i].into()));
        }
        let depth = dist.iter().copied().max().unwrap_or(0);
        let mut layers = vec![Vec::new(); depth + 1];
        for (i, &d) in dist.iter().enumerate() {
            layers[d].push(self.nodes[i]);
        }
        Ok(layers)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Adds a source adjacent to every sender. Node ids: source `0`, senders
/// keep their ids `1..=eta`, receiver `j` becomes `eta + 1 + j`.
pub fn attach_source(net: &BipartiteNetwork) -> RadioGraph {
    let eta = net.eta();
    let total = net.node_count() as u32 + 1;
    let mut edges: Vec<(NodeId, NodeId)> = (1..=eta).map(|s| (0, s)).collect();
    for (j, n) in net.receivers().iter().enumerate() {
        let r = eta + 1 + j as u32;
        edges.extend(n.iter().map(|s| (s, r)));
    }
    RadioGraph::new(0..total, edges, 0).expect("attach_source builds a simple graph")
}

/// One hop of the BFS layering: layer `index` transmits to layer `index + 1`.
#[derive(Clone, Debug)]
pub struct LayerPair {
    pub index: usize,
    /// Layer `index` node ids; local sender id `k` is `senders[k - 1]`.
    pub senders: Vec<NodeId>,
    /// Layer `index + 1` node ids.
    pub receivers: Vec<NodeId>,
    /// Local neighborhood of each entry of `receivers` (not deduplicated).
    pub local: Vec<Neighborhood>,
    /// The deduplicated bipartite network of this hop.
    pub net: BipartiteNetwork,
}

/// Full BFS layering of a graph together with its per-hop bipartite networks.
#[derive(Clone, Debug)]
pub struct Layering {
    pub layers: Vec<Vec<NodeId>>,
    pub pairs: Vec<LayerPair>,
}

impl Layering {
    /// Eccentricity of the source.
    pub fn depth(&self) -> usize {
        self.pairs.len()
    }
}

pub fn layering(g: &RadioGraph) -> Result<Layering> {
    let layers = g.bfs_layers()?;
    let mut pairs = Vec::with_capacity(layers.len().saturating_sub(1));
    for (i, w) in layers.windows(2).enumerate() {
        let (upper, lower) = (&w[0], &w[1]);
        let local_id: BTreeMap<usize, u32> = upper
            .iter()
            .enumerate()
            .map(|(k, &v)| (g.index_of(v).expect("layer node"), k as u32 + 1))
            .collect();
        let local: Vec<Neighborhood> = lower
            .iter()
            .map(|&v| {
                let iv = g.index_of(v).expect("layer node");
                g.neighbors_of_index(iv)
                    .iter()
                    .filter_map(|u| local_id.get(u).copied())
                    .collect()
            })
            .collect();
        let net = make_bipartite(
            upper.len() as u32,
            local.iter().map(|n| n.iter().collect::<Vec<_>>()),
        )?
        .with_name(format!("layer {i} -> {}", i + 1));
        pairs.push(LayerPair {
            index: i,
            senders: upper.clone(),
            receivers: lower.clone(),
            local,
            net,
        });
    }
    Ok(Layering { layers, pairs })
}

/// One bipartite network per consecutive BFS layer pair; the list length is
/// the eccentricity of the source.
pub fn bfs_decompose(g: &RadioGraph) -> Result<Vec<BipartiteNetwork>> {
    Ok(layering(g)?.pairs.into_iter().map(|p| p.net).collect())
}

/// A path `0 - 1 - ... - len` with source `0`.
pub fn path_graph(len: u32) -> RadioGraph {
    RadioGraph::new(0..=len, (0..len).map(|i| (i, i + 1)), 0).expect("path is simple")
}

/// A layered gadget graph of the given depth.
///
/// Every layer below the source has three nodes `a, b, c`; they hear the
/// previous layer as `{1}`, `{2, 3}` and `{1, 2, 3}` respectively (the first
/// layer hears only the source), and `a`-`b` are joined inside each layer so
/// that listeners also sit next to other listeners.
pub fn layered_gadget(depth: u32) -> RadioGraph {
    assert!(depth >= 1, "gadget needs at least one layer");
    let node = |layer: u32, k: u32| 1 + (layer - 1) * 3 + k;
    let mut edges = Vec::new();
    for layer in 1..=depth {
        let (a, b, c) = (node(layer, 0), node(layer, 1), node(layer, 2));
        edges.push((a, b));
        if layer == 1 {
            edges.extend([(0, a), (0, b), (0, c)]);
        } else {
            let (pa, pb, pc) = (node(layer - 1, 0), node(layer - 1, 1), node(layer - 1, 2));
            edges.extend([(pa, a), (pb, b), (pc, b), (pa, c), (pb, c), (pc, c)]);
        }
    }
    RadioGraph::new(0..=3 * depth, edges, 0).expect("gadget is simple")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sets(net: &BipartiteNetwork) -> Vec<Vec<u32>> {
        net.receivers()
            .iter()
            .map(|n| n.as_slice().to_vec())
            .collect()
    }

    #[test]
    fn make_bipartite_dedups_in_first_occurrence_order() {
        let net = make_bipartite(3, vec![vec![1], vec![2, 3], vec![3, 2]]).unwrap();
        assert_eq!(sets(&net), vec![vec![1], vec![2, 3]]);
        let net = make_bipartite(2, vec![vec![1, 2]]).unwrap();
        assert_eq!(net.max_degree(), Some(2));
    }

    #[test]
    fn make_bipartite_rejects_bad_input() {
        assert_eq!(
            make_bipartite(2, vec![Vec::<u32>::new()]),
            Err(Error::EmptyNeighborhood(0))
        );
        assert_eq!(
            make_bipartite(2, vec![vec![3]]),
            Err(Error::SenderIdOutOfRange { id: 3, eta: 2 })
        );
        assert!(make_bipartite(2, vec![vec![0]]).is_err());
    }

    #[test]
    fn class_family_sizes() {
        let net = gen_class_family(4, 2, 7).unwrap();
        assert_eq!(net.eta(), 4);
        assert_eq!(net.num_receivers(), 8);
        assert_eq!(net.degrees().filter(|&d| d == 2).count(), 4);
        assert_eq!(net.degrees().filter(|&d| d == 4).count(), 4);

        let net = gen_class_family(16, 3, 1).unwrap();
        assert!(net.receivers()[32..].iter().all(|n| n.len() == 8));
        for (i, n) in net.receivers().iter().enumerate() {
            assert_eq!(n.len(), 1 << (i / 16 + 1));
        }
    }

    #[test]
    fn class_family_rejects_oversized_classes() {
        assert_eq!(
            gen_class_family(2, 2, 0),
            Err(Error::DegreeExceedsSenders {
                classes: 2,
                senders: 2
            })
        );
    }

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(gen_class_family(32, 4, 9), gen_class_family(32, 4, 9));
        assert_eq!(
            gen_halfdense_family(20, 100, 3),
            gen_halfdense_family(20, 100, 3)
        );
        assert_ne!(
            gen_halfdense_family(20, 100, 3),
            gen_halfdense_family(20, 100, 4)
        );
    }

    #[test]
    fn halfdense_small_and_mean_degree() {
        let net = gen_halfdense_family(2, 1, 0).unwrap();
        assert_eq!(net.num_receivers(), 1);
        assert!(!net.receivers()[0].is_empty());

        let net = gen_halfdense_family(64, 2048, 9).unwrap();
        let mean = net.degrees().sum::<usize>() as f64 / net.num_receivers() as f64;
        assert!((28.0..=36.0).contains(&mean), "mean degree {mean}");
        assert_eq!(net.num_receivers(), 2048);
    }

    #[test]
    fn halfdense_needs_two_senders() {
        assert!(gen_halfdense_family(1, 4, 0).is_err());
    }

    #[test]
    fn attach_source_shapes() {
        let g = attach_source(&make_bipartite(2, vec![vec![1, 2]]).unwrap());
        assert_eq!(g.node_count(), 4);
        assert_eq!(g.degree(0), Some(2));

        let g = attach_source(&make_bipartite(1, vec![vec![1]]).unwrap());
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);

        let g = attach_source(&make_bipartite(3, vec![vec![1], vec![2, 3]]).unwrap());
        assert_eq!(g.node_count(), 6);
        assert_eq!(g.degree(0), Some(3));
        assert_eq!(g.edges().len(), 6);
    }

    #[test]
    fn bfs_decompose_path_and_star() {
        let nets = bfs_decompose(&path_graph(2)).unwrap();
        assert_eq!(nets.len(), 2);
        assert!(nets.iter().all(|n| n.eta() == 1 && n.num_receivers() == 1));

        let star = RadioGraph::new(0..6, (1..6).map(|i| (0, i)), 0).unwrap();
        let nets = bfs_decompose(&star).unwrap();
        assert_eq!(nets.len(), 1);
        assert_eq!(nets[0].eta(), 1);
        assert_eq!(nets[0].num_receivers(), 1);
    }

    #[test]
    fn bfs_decompose_inverts_attach_source() {
        let net = make_bipartite(3, vec![vec![1], vec![2, 3], vec![1, 2, 3]]).unwrap();
        let nets = bfs_decompose(&attach_source(&net)).unwrap();
        assert_eq!(nets.len(), 2);
        assert_eq!(nets[0].eta(), 1);
        assert_eq!(sets(&nets[1]), sets(&net));
    }

    #[test]
    fn bfs_decompose_reports_unreachable() {
        let g = RadioGraph::new(0..3, vec![(0, 1)], 0).unwrap();
        assert_eq!(bfs_decompose(&g).unwrap_err(), Error::Unreachable(2));
    }

    #[test]
    fn radio_graph_rejects_non_simple() {
        assert!(RadioGraph::new(0..2, vec![(0, 0)], 0).is_err());
        assert!(RadioGraph::new(0..2, vec![(0, 1), (1, 0)], 0).is_err());
        assert!(RadioGraph::new(0..2, vec![(0, 5)], 0).is_err());
        assert!(RadioGraph::new(0..2, vec![(0, 1)], 9).is_err());
    }

    #[test]
    fn gadget_layers() {
        let g = layered_gadget(6);
        let lay = layering(&g).unwrap();
        assert_eq!(lay.depth(), 6);
        assert!(lay.layers[1..].iter().all(|l| l.len() == 3));
        // Later hops see {1}, {2,3}, {1,2,3}.
        assert_eq!(lay.pairs[3].net.num_receivers(), 3);
    }

    #[test]
    fn json_round_trip() {
        let net = gen_class_family(8, 2, 3).unwrap();
        assert_eq!(
            BipartiteNetwork::from_json(&net.to_json().unwrap()).unwrap(),
            net
        );
        let g = layered_gadget(3);
        assert_eq!(RadioGraph::from_json(&g.to_json().unwrap()).unwrap(), g);
    }

    #[test]
    fn json_load_validates() {
        let bad = r#"{"eta": 2, "receivers": [[1], []], "name": ""}"#;
        assert!(BipartiteNetwork::from_json(bad).is_err());
        let bad = r#"{"eta": 2, "receivers": [[4]], "name": ""}"#;
        assert!(BipartiteNetwork::from_json(bad).is_err());
    }

    #[test]
    fn sender_set_masks() {
        let s = SenderSet::new([3, 1, 3]);
        assert_eq!(s.as_slice(), &[1, 3]);
        assert_eq!(s.to_mask(), Some(0b101));
        assert_eq!(SenderSet::from_mask(0b101), s);
        assert!(SenderSet::new([1, 2]).hears_alone(2, &SenderSet::new([2, 3])));
        assert!(!SenderSet::new([1, 2]).hears_alone(2, &SenderSet::new([1, 2])));
    }
}

//! Communication moderator: per-round reference selection and the directed
//! graph it induces.
//!
//! Each agent takes its `N` nearest peers by cognitive distance (ties by
//! ascending id) as candidates. Every candidate slot is then independently
//! marked for rewiring with probability `beta`; marked slots are refilled, in
//! slot order, by uniform draws from the peers that are neither the agent,
//! a kept candidate, nor an earlier replacement. At `beta = 1` this makes the
//! reference set a uniform random `N`-subset of the peers.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distance::DistanceMatrix;
use crate::error::{Error, Result};
use crate::hash::stream_seed;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceSet {
    pub agent_id: usize,
    /// Peer ids in slot order: similarity rank, rewired slots in place.
    pub refs: Vec<usize>,
    pub rewired: Vec<bool>,
}

pub fn select_refs<R: Rng + ?Sized>(
    agent_id: usize,
    dmatrix: &DistanceMatrix,
    n: usize,
    beta: f64,
    rng: &mut R,
) -> Result<ReferenceSet> {
    let m = dmatrix.size();
    if agent_id >= m || n == 0 || n > m - 1 {
        return Err(Error::InvalidN { n, agents: m });
    }
    let row = dmatrix.row(agent_id);
    let mut peers: Vec<usize> = (0..m).filter(|&p| p != agent_id).collect();
    // Stable sort over ascending ids keeps id order among equal distances.
    peers.sort_by(|&a, &b| row[a].total_cmp(&row[b]));

    let mut refs: Vec<usize> = peers[..n].to_vec();
    let rewired: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < beta).collect();

    let mut taken: Vec<bool> = vec![false; m];
    for (slot, &peer) in refs.iter().enumerate() {
        if !rewired[slot] {
            taken[peer] = true;
        }
    }
    for slot in 0..n {
        if !rewired[slot] {
            continue;
        }
        let pool: Vec<usize> = (0..m).filter(|&p| p != agent_id && !taken[p]).collect();
        if pool.is_empty() {
            taken[refs[slot]] = true;
            continue;
        }
        let pick = pool[rng.random_range(0..pool.len())];
        refs[slot] = pick;
        taken[pick] = true;
    }

    Ok(ReferenceSet { agent_id, refs, rewired })
}

/// Reference sets for every agent of one refinement round, each drawn from
/// its own stream `seed ^ FNV-1a-64(round, agent_id)`.
pub fn select_round_refs(
    dmatrix: &DistanceMatrix,
    n: usize,
    beta: f64,
    seed: u64,
    round: usize,
) -> Result<Vec<ReferenceSet>> {
    (0..dmatrix.size())
        .map(|agent| {
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, round, agent));
            select_refs(agent, dmatrix, n, beta, &mut rng)
        })
        .collect()
}

/// Directed reference graph; edge `(u, v)` means `v` reads `u`'s output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommGraph {
    pub round: usize,
    pub node_count: usize,
    pub edges: Vec<(usize, usize)>,
}

impl CommGraph {
    pub fn in_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.node_count];
        for &(_, v) in &self.edges {
            deg[v] += 1;
        }
        deg
    }
}

pub fn build_round_graph(refsets: &[ReferenceSet], round: usize) -> Result<CommGraph> {
    let m = refsets.len();
    let n = refsets.first().map_or(0, |r| r.refs.len());
    let mut edges = Vec::with_capacity(m * n);
    for (v, set) in refsets.iter().enumerate() {
        let bad = |reason| Error::MalformedRefSet { agent_id: set.agent_id, reason };
        if set.agent_id != v {
            return Err(bad("reference sets out of agent order"));
        }
        if set.refs.is_empty() || set.refs.len() != n {
            return Err(bad("in-degree differs across agents"));
        }
        if set.rewired.len() != set.refs.len() {
            return Err(bad("rewired flags do not match slots"));
        }
        for (i, &u) in set.refs.iter().enumerate() {
            if u == v {
                return Err(bad("self reference"));
            }
            if u >= m {
                return Err(bad("reference to unknown agent"));
            }
            if set.refs[..i].contains(&u) {
                return Err(bad("duplicate reference"));
            }
            edges.push((u, v));
        }
    }
    Ok(CommGraph { round, node_count: m, edges })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    /// Mean local clustering coefficient of the undirected graph.
    pub clustering: f64,
    /// Mean shortest-path length over reachable unordered pairs; `None`
    /// when no pair is reachable.
    pub path_length: Option<f64>,
    pub unreachable_pair_fraction: f64,
}

impl GraphStats {
    /// Path length with a disconnected graph treated as infinitely long.
    pub fn effective_path_length(&self) -> f64 {
        if self.unreachable_pair_fraction > 0.0 {
            f64::INFINITY
        } else {
            self.path_length.unwrap_or(0.0)
        }
    }
}

pub fn graph_stats(g: &CommGraph) -> GraphStats {
    edge_stats(g.node_count, &g.edges)
}

/// Stats of the undirected simple graph underlying `edges` (direction,
/// multiplicity and self-loops dropped).
pub fn edge_stats(node_count: usize, edges: &[(usize, usize)]) -> GraphStats {
    let mut adj = vec![vec![false; node_count]; node_count];
    for &(u, v) in edges {
        if u != v {
            adj[u][v] = true;
            adj[v][u] = true;
        }
    }
    let neighbors: Vec<Vec<usize>> =
        (0..node_count).map(|u| (0..node_count).filter(|&v| adj[u][v]).collect()).collect();

    let mut clustering_sum = 0.0;
    for nb in &neighbors {
        let k = nb.len();
        if k < 2 {
            continue;
        }
        let mut closed = 0usize;
        for i in 0..k {
            for j in (i + 1)..k {
                if adj[nb[i]][nb[j]] {
                    closed += 1;
                }
            }
        }
        clustering_sum += closed as f64 / (k * (k - 1) / 2) as f64;
    }
    let clustering = if node_count == 0 { 0.0 } else { clustering_sum / node_count as f64 };

    let mut total = 0usize;
    let mut reachable = 0usize;
    let mut unreachable = 0usize;
    let mut dist = vec![usize::MAX; node_count];
    let mut queue = VecDeque::new();
    for s in 0..node_count {
        dist.iter_mut().for_each(|d| *d = usize::MAX);
        dist[s] = 0;
        queue.push_back(s);
        while let Some(x) = queue.pop_front() {
            for &y in &neighbors[x] {
                if dist[y] == usize::MAX {
                    dist[y] = dist[x] + 1;
                    queue.push_back(y);
                }
            }
        }
        for &d in &dist[s + 1..] {
            if d == usize::MAX {
                unreachable += 1;
            } else {
                total += d;
                reachable += 1;
            }
        }
    }
    let pairs = reachable + unreachable;
    GraphStats {
        clustering,
        path_length: (reachable > 0).then(|| total as f64 / reachable as f64),
        unreachable_pair_fraction: if pairs == 0 { 0.0 } else { unreachable as f64 / pairs as f64 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn matrix_with_row0(m: usize, row0: &[(usize, f64)]) -> DistanceMatrix {
        let mut rows = vec![vec![0.5; m]; m];
        for (u, row) in rows.iter_mut().enumerate() {
            row[u] = 0.0;
        }
        for &(v, d) in row0 {
            rows[0][v] = d;
            rows[v][0] = d;
        }
        DistanceMatrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn beta_zero_takes_nearest() {
        let dm = matrix_with_row0(4, &[(1, 0.1), (2, 0.5), (3, 0.9)]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let set = select_refs(0, &dm, 2, 0.0, &mut rng).unwrap();
        assert_eq!(set.refs, vec![1, 2]);
        assert_eq!(set.rewired, vec![false, false]);
    }

    #[test]
    fn ties_break_by_ascending_id() {
        let dm = matrix_with_row0(5, &[(1, 0.4), (2, 0.2), (3, 0.2), (4, 0.4)]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(select_refs(0, &dm, 3, 0.0, &mut rng).unwrap().refs, vec![2, 3, 1]);
    }

    #[test]
    fn full_peer_set_is_never_changed_by_rewiring() {
        let dm = matrix_with_row0(4, &[(1, 0.1), (2, 0.5), (3, 0.9)]);
        for seed in 0..50 {
            for beta in [0.0, 0.3, 1.0] {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut refs = select_refs(0, &dm, 3, beta, &mut rng).unwrap().refs;
                refs.sort();
                assert_eq!(refs, vec![1, 2, 3]);
            }
        }
    }

    #[test]
    fn invalid_n_rejected() {
        let dm = matrix_with_row0(4, &[]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(select_refs(0, &dm, 4, 0.0, &mut rng), Err(Error::InvalidN { .. })));
        assert!(matches!(select_refs(0, &dm, 0, 0.0, &mut rng), Err(Error::InvalidN { .. })));
    }

    #[test]
    fn beta_one_is_uniform_over_peers() {
        // Each of 5 peers should appear with probability 2/5.
        let dm = matrix_with_row0(6, &[(1, 0.1), (2, 0.2), (3, 0.3), (4, 0.4), (5, 0.5)]);
        let trials = 10_000;
        let mut counts = [0usize; 6];
        for seed in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for r in select_refs(0, &dm, 2, 1.0, &mut rng).unwrap().refs {
                counts[r] += 1;
            }
        }
        for &c in &counts[1..] {
            let freq = c as f64 / trials as f64;
            assert!((freq - 0.4).abs() <= 0.02, "frequency {freq}");
        }
        assert_eq!(counts[0], 0);
    }

    #[test]
    fn deterministic_for_same_seed() {
        let dm = matrix_with_row0(6, &[(1, 0.1), (2, 0.2)]);
        let a = select_round_refs(&dm, 3, 0.3, 42, 1).unwrap();
        let b = select_round_refs(&dm, 3, 0.3, 42, 1).unwrap();
        assert_eq!(a, b);
    }

    fn refset(agent_id: usize, refs: &[usize]) -> ReferenceSet {
        ReferenceSet { agent_id, refs: refs.to_vec(), rewired: vec![false; refs.len()] }
    }

    #[test]
    fn two_agents_force_a_mutual_pair() {
        let g = build_round_graph(&[refset(0, &[1]), refset(1, &[0])], 1).unwrap();
        assert_eq!(g.edges, vec![(1, 0), (0, 1)]);
    }

    #[test]
    fn self_reference_is_malformed() {
        let err = build_round_graph(&[refset(0, &[0]), refset(1, &[0])], 1).unwrap_err();
        assert!(matches!(err, Error::MalformedRefSet { agent_id: 0, .. }));
    }

    #[test]
    fn uneven_in_degree_is_malformed() {
        let sets = [refset(0, &[1, 2]), refset(1, &[0]), refset(2, &[0, 1])];
        assert!(build_round_graph(&sets, 1).is_err());
    }

    #[test]
    fn default_shape_graph() {
        let dm = matrix_with_row0(6, &[(1, 0.1)]);
        let sets = select_round_refs(&dm, 3, 0.3, 9, 1).unwrap();
        let g = build_round_graph(&sets, 1).unwrap();
        assert_eq!(g.edges.len(), 18);
        assert!(g.in_degrees().iter().all(|&d| d == 3));
    }

    // Brute-force oracles for the metric tests: all-pairs shortest paths via
    // Floyd-Warshall and triangle counts by enumerating every triple.
    fn oracle(n: usize, edges: &[(usize, usize)]) -> (f64, f64) {
        let inf = usize::MAX / 4;
        let mut d = vec![vec![inf; n]; n];
        let mut a = vec![vec![false; n]; n];
        for &(u, v) in edges {
            a[u][v] = true;
            a[v][u] = true;
            d[u][v] = 1;
            d[v][u] = 1;
        }
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = 0;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if d[i][k] + d[k][j] < d[i][j] {
                        d[i][j] = d[i][k] + d[k][j];
                    }
                }
            }
        }
        let mut sum = 0;
        let mut cnt = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                if d[i][j] < inf {
                    sum += d[i][j];
                    cnt += 1;
                }
            }
        }
        let mut cl = 0.0;
        for v in 0..n {
            let nb: Vec<usize> = (0..n).filter(|&u| a[v][u]).collect();
            if nb.len() < 2 {
                continue;
            }
            let mut t = 0;
            let mut p = 0;
            for x in 0..nb.len() {
                for y in (x + 1)..nb.len() {
                    p += 1;
                    if a[nb[x]][nb[y]] {
                        t += 1;
                    }
                }
            }
            cl += t as f64 / p as f64;
        }
        (cl / n as f64, sum as f64 / cnt as f64)
    }

    #[test]
    fn complete_graph_k4() {
        let edges: Vec<_> = (0..4).flat_map(|u| (0..4).filter(move |&v| v != u).map(move |v| (u, v))).collect();
        let s = edge_stats(4, &edges);
        assert!((s.clustering - 1.0).abs() < 1e-9);
        assert_eq!(s.path_length, Some(1.0));
        assert_eq!(s.unreachable_pair_fraction, 0.0);
    }

    #[test]
    fn four_cycle() {
        let edges = [(0, 1), (1, 2), (2, 3), (3, 0)];
        let s = edge_stats(4, &edges);
        let (cl, pl) = oracle(4, &edges);
        assert_eq!(s.clustering, 0.0);
        assert_eq!(cl, 0.0);
        assert!((s.path_length.unwrap() - 4.0 / 3.0).abs() < 1e-9);
        assert!((pl - 4.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn star_on_five_nodes() {
        let edges = [(0, 1), (0, 2), (0, 3), (0, 4)];
        let s = edge_stats(5, &edges);
        let (cl, pl) = oracle(5, &edges);
        assert_eq!(s.clustering, cl);
        assert_eq!(s.clustering, 0.0);
        assert!((s.path_length.unwrap() - pl).abs() < 1e-12);
        assert!((pl - 1.6).abs() < 1e-12);
    }

    #[test]
    fn disconnected_pairs_reported_separately() {
        let s = edge_stats(4, &[(0, 1), (2, 3)]);
        assert_eq!(s.path_length, Some(1.0));
        assert!((s.unreachable_pair_fraction - 4.0 / 6.0).abs() < 1e-12);
        assert_eq!(s.effective_path_length(), f64::INFINITY);
    }

    proptest::proptest! {
        #[test]
        fn stats_match_brute_force(n in 2usize..9, raw in proptest::collection::vec((0usize..9, 0usize..9), 0..30)) {
            let edges: Vec<(usize, usize)> = raw.into_iter().map(|(u, v)| (u % n, v % n)).filter(|(u, v)| u != v).collect();
            proptest::prop_assume!(!edges.is_empty());
            let s = edge_stats(n, &edges);
            let (cl, pl) = oracle(n, &edges);
            proptest::prop_assert!((s.clustering - cl).abs() < 1e-12);
            proptest::prop_assert!((s.path_length.unwrap() - pl).abs() < 1e-12);
        }

        #[test]
        fn in_degree_is_always_n(m in 2usize..13, n_raw in 1usize..12, beta in proptest::sample::select(vec![0.0, 0.3, 1.0]), seed: u64) {
            let n = 1 + (n_raw - 1) % (m - 1);
            let rows: Vec<Vec<f64>> = (0..m).map(|u| (0..m).map(|v| if u == v { 0.0 } else { ((u * 7 + v * 7) % 11) as f64 / 10.0 }).collect()).collect();
            let dm = DistanceMatrix::from_rows(&rows).unwrap();
            let sets = select_round_refs(&dm, n, beta, seed, 1).unwrap();
            let g = build_round_graph(&sets, 1).unwrap();
            proptest::prop_assert_eq!(g.edges.len(), m * n);
            proptest::prop_assert!(g.in_degrees().iter().all(|&d| d == n));
            proptest::prop_assert!(g.edges.iter().all(|(u, v)| u != v));
        }
    }
}

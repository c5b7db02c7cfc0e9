//! Network statistics of the per-round reference graphs recorded in a
//! transcript.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moderator::{build_round_graph, graph_stats, GraphStats, ReferenceSet};
use crate::transcript::{EventType, RunTranscript};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundNetStats {
    pub round: usize,
    pub in_degrees: Vec<usize>,
    /// `(in-degree, node count)` pairs in ascending degree order.
    pub in_degree_histogram: Vec<(usize, usize)>,
    pub stats: GraphStats,
    pub rewired_edges: usize,
    pub total_edges: usize,
}

impl RoundNetStats {
    pub fn rewired_fraction(&self) -> f64 {
        if self.total_edges == 0 {
            0.0
        } else {
            self.rewired_edges as f64 / self.total_edges as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetStatsReport {
    pub rounds: Vec<RoundNetStats>,
}

impl NetStatsReport {
    /// Rewired fraction pooled over all edges of all rounds.
    pub fn rewired_fraction(&self) -> f64 {
        let total: usize = self.rounds.iter().map(|r| r.total_edges).sum();
        let rewired: usize = self.rounds.iter().map(|r| r.rewired_edges).sum();
        if total == 0 {
            0.0
        } else {
            rewired as f64 / total as f64
        }
    }
}

pub fn round_netstats(refsets: &[ReferenceSet], round: usize) -> Result<RoundNetStats> {
    let graph = build_round_graph(refsets, round)?;
    let in_degrees = graph.in_degrees();
    let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
    for &d in &in_degrees {
        *hist.entry(d).or_default() += 1;
    }
    let rewired_edges = refsets.iter().flat_map(|s| &s.rewired).filter(|&&f| f).count();
    Ok(RoundNetStats {
        round,
        in_degree_histogram: hist.into_iter().collect(),
        in_degrees,
        stats: graph_stats(&graph),
        rewired_edges,
        total_edges: graph.edges.len(),
    })
}

/// Recomputes statistics from every `RefSelect` record, checking the
/// recorded edges against the recorded reference sets.
pub fn transcript_netstats(transcript: &RunTranscript) -> Result<NetStatsReport> {
    let mut rounds = Vec::new();
    for r in transcript.events(EventType::RefSelect) {
        let bad = |what: &str| Error::MalformedTranscript(format!("RefSelect record {}: {what}", r.seq));
        let round = r.round.ok_or_else(|| bad("missing round"))?;
        let refsets = r.refsets.as_ref().ok_or_else(|| bad("missing reference sets"))?;
        let stats = round_netstats(refsets, round).map_err(|e| bad(&format!("{e}")))?;
        if let Some(edges) = &r.edges {
            let rebuilt = build_round_graph(refsets, round)?.edges;
            if *edges != rebuilt {
                return Err(bad("edges do not match reference sets"));
            }
        }
        rounds.push(stats);
    }
    Ok(NetStatsReport { rounds })
}

fn fmt_path(stats: &GraphStats) -> alloc::string::String {
    match stats.path_length {
        Some(p) if stats.unreachable_pair_fraction > 0.0 => {
            format!("{p:.4} (over reachable pairs; {:.1}% unreachable)", 100.0 * stats.unreachable_pair_fraction)
        }
        Some(p) => format!("{p:.4}"),
        None => "n/a".into(),
    }
}

impl fmt::Display for NetStatsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.rounds.is_empty() {
            return writeln!(f, "no reference selections recorded");
        }
        for r in &self.rounds {
            writeln!(f, "round {}", r.round)?;
            write!(f, "  in-degree histogram:")?;
            for (d, count) in &r.in_degree_histogram {
                write!(f, " {d}:{count}")?;
            }
            writeln!(f)?;
            writeln!(f, "  clustering coefficient: {:.4}", r.stats.clustering)?;
            writeln!(f, "  characteristic path length: {}", fmt_path(&r.stats))?;
            writeln!(f, "  rewired edges: {}/{} ({:.4})", r.rewired_edges, r.total_edges, r.rewired_fraction())?;
        }
        writeln!(f, "overall rewired fraction: {:.4}", self.rewired_fraction())
    }
}

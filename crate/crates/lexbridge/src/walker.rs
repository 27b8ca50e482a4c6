//! Second-order biased random walks over a knowledge graph.
//!
//! Transition weights follow the return/in-out scheme: stepping back to the
//! previous node weighs 1/p, moving to a common neighbor of the previous node
//! weighs 1, and anything else weighs 1/q. The first step is uniform. Each
//! walk draws from its own generator seeded by (seed, start node, walk index),
//! so output is identical no matter how walks are scheduled across threads.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::io::Write;

use crate::error::{LexError, Result};
use crate::graph::KnowledgeGraph;

#[derive(Debug, Clone, PartialEq)]
pub struct WalkConfig {
    /// Nodes per walk, counting the start node.
    pub walk_length: usize,
    pub walks_per_node: usize,
    /// Return parameter p; weight 1/p for revisiting the previous node.
    pub return_param: f64,
    /// In-out parameter q; weight 1/q for leaving the previous neighborhood.
    pub inout_param: f64,
    pub seed: u64,
    pub threads: usize,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            walk_length: 100,
            walks_per_node: 10,
            return_param: 1.0,
            inout_param: 1.0,
            seed: 42,
            threads: 1,
        }
    }
}

/// Generates `walks_per_node` walks from every node, start nodes in
/// lexicographic name order. A walk ends early only at a neighborless node.
pub fn generate_walks(graph: &KnowledgeGraph, cfg: &WalkConfig) -> Result<Vec<Vec<u32>>> {
    if cfg.walk_length == 0 {
        return Err(LexError::InvalidInput("walk_length must be >= 1".into()));
    }
    if cfg.return_param <= 0.0
        || cfg.inout_param <= 0.0
        || cfg.return_param.is_nan()
        || cfg.inout_param.is_nan()
    {
        return Err(LexError::InvalidInput(
            "return and in-out parameters must be > 0".into(),
        ));
    }
    let mut starts: Vec<u32> = (0..graph.node_count() as u32).collect();
    starts.sort_by(|a, b| graph.node_name(*a).cmp(graph.node_name(*b)));

    let jobs: Vec<(u32, usize)> = starts
        .iter()
        .flat_map(|&s| (0..cfg.walks_per_node).map(move |i| (s, i)))
        .collect();

    let run = |&(start, idx): &(u32, usize)| {
        let mut rng = walk_rng(cfg.seed, graph.node_name(start), idx);
        single_walk(graph, start, cfg, &mut rng)
    };

    if cfg.threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| LexError::InvalidInput(format!("thread pool: {e}")))?;
        Ok(pool.install(|| jobs.par_iter().map(run).collect()))
    } else {
        Ok(jobs.iter().map(run).collect())
    }
}

fn single_walk(
    graph: &KnowledgeGraph,
    start: u32,
    cfg: &WalkConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<u32> {
    let mut walk = Vec::with_capacity(cfg.walk_length);
    walk.push(start);
    while walk.len() < cfg.walk_length {
        let cur = *walk.last().unwrap();
        let neighbors = graph.neighbors(cur);
        if neighbors.is_empty() {
            break;
        }
        let next = if walk.len() == 1 {
            neighbors[rng.random_range(0..neighbors.len())]
        } else {
            let prev = walk[walk.len() - 2];
            biased_step(graph, prev, neighbors, cfg, rng)
        };
        walk.push(next);
    }
    walk
}

fn biased_step(
    graph: &KnowledgeGraph,
    prev: u32,
    neighbors: &[u32],
    cfg: &WalkConfig,
    rng: &mut ChaCha8Rng,
) -> u32 {
    let weight = |x: u32| {
        if x == prev {
            1.0 / cfg.return_param
        } else if graph.has_edge(x, prev) {
            1.0
        } else {
            1.0 / cfg.inout_param
        }
    };
    let total: f64 = neighbors.iter().map(|&x| weight(x)).sum();
    let draw = rng.random_range(0.0..total);
    let mut cum = 0.0;
    for &x in neighbors {
        cum += weight(x);
        if draw < cum {
            return x;
        }
    }
    *neighbors.last().unwrap()
}

/// Walks as whitespace-joined node names, one walk per line.
pub fn write_walks(
    graph: &KnowledgeGraph,
    walks: &[Vec<u32>],
    w: &mut impl Write,
) -> std::io::Result<()> {
    for walk in walks {
        let mut first = true;
        for &id in walk {
            if !first {
                write!(w, " ")?;
            }
            write!(w, "{}", graph.node_name(id))?;
            first = false;
        }
        writeln!(w)?;
    }
    w.flush()
}

pub fn walks_to_sentences(graph: &KnowledgeGraph, walks: &[Vec<u32>]) -> Vec<Vec<String>> {
    walks
        .iter()
        .map(|walk| walk.iter().map(|&id| graph.node_name(id).to_owned()).collect())
        .collect()
}

fn walk_rng(seed: u64, start_name: &str, walk_idx: usize) -> ChaCha8Rng {
    let mixed = mix64(
        seed ^ fnv1a64(start_name.as_bytes()).rotate_left(17),
        walk_idx as u64,
    );
    ChaCha8Rng::seed_from_u64(mixed)
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn mix64(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

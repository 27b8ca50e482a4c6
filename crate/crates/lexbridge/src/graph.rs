//! Undirected knowledge graph with interned node ids and edge kinds.
//!
//! Nodes are interned strings; an edge is stored once under its
//! (min, max) id pair. Adjacency lists stay sorted so traversal order is a
//! function of construction order alone.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{LexError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    /// Taxonomic or lexical relation from the source resource.
    Relation,
    /// Co-occurrence of a node with a term from its gloss.
    Gloss,
}

/// Outcome of inserting one edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeOutcome {
    Added,
    /// Edge already present; relation kind wins over gloss.
    Duplicate,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KnowledgeGraph {
    names: Vec<String>,
    index: HashMap<String, u32>,
    adjacency: Vec<Vec<u32>>,
    edges: HashMap<(u32, u32), EdgeKind>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct EdgeListReport {
    pub lines_read: usize,
    pub nodes_added: usize,
    pub edges_added: usize,
    pub duplicates_skipped: usize,
    pub self_loops_skipped: usize,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct GraphStats {
    pub nodes: usize,
    pub edges: usize,
    pub relation_edges: usize,
    pub gloss_edges: usize,
    pub min_degree: usize,
    pub max_degree: usize,
    pub mean_degree: f64,
    pub isolated_nodes: usize,
    pub connected_components: usize,
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node_name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub fn node_id(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub fn node_names(&self) -> &[String] {
        &self.names
    }

    /// Neighbor ids in ascending order.
    pub fn neighbors(&self, id: u32) -> &[u32] {
        &self.adjacency[id as usize]
    }

    pub fn degree(&self, id: u32) -> usize {
        self.adjacency[id as usize].len()
    }

    pub fn has_edge(&self, a: u32, b: u32) -> bool {
        self.edges.contains_key(&key(a, b))
    }

    pub fn edge_kind(&self, a: u32, b: u32) -> Option<EdgeKind> {
        self.edges.get(&key(a, b)).copied()
    }

    /// Interns a node name, returning its id. Names must be non-empty and
    /// whitespace-free (the edge list format is whitespace-delimited).
    pub fn add_node(&mut self, name: &str) -> Result<u32> {
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(LexError::InvalidInput(format!(
                "node name {name:?} is empty or contains whitespace"
            )));
        }
        if let Some(&id) = self.index.get(name) {
            return Ok(id);
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_owned());
        self.index.insert(name.to_owned(), id);
        self.adjacency.push(Vec::new());
        Ok(id)
    }

    /// Adds an undirected edge, interning endpoints as needed. Self-loops are
    /// rejected. Re-adding an edge keeps one copy; a relation kind overrides
    /// gloss but never the reverse.
    pub fn add_edge(&mut self, a: &str, b: &str, kind: EdgeKind) -> Result<EdgeOutcome> {
        if a == b {
            return Err(LexError::InvalidInput(format!("self-loop on `{a}`")));
        }
        let ia = self.add_node(a)?;
        let ib = self.add_node(b)?;
        let k = key(ia, ib);
        if let Some(existing) = self.edges.get_mut(&k) {
            if *existing == EdgeKind::Gloss && kind == EdgeKind::Relation {
                *existing = EdgeKind::Relation;
            }
            return Ok(EdgeOutcome::Duplicate);
        }
        self.edges.insert(k, kind);
        insert_sorted(&mut self.adjacency[ia as usize], ib);
        insert_sorted(&mut self.adjacency[ib as usize], ia);
        Ok(EdgeOutcome::Added)
    }

    /// Loads a whitespace-separated edge list: one `node_a node_b` pair per
    /// line, `#` lines are comments, blank lines are skipped. Self-loops are
    /// dropped and counted, never fatal.
    pub fn load_edge_list(path: impl AsRef<Path>, kind: EdgeKind) -> Result<(Self, EdgeListReport)> {
        let mut graph = KnowledgeGraph::new();
        let report = graph.append_edge_list(path, kind)?;
        Ok((graph, report))
    }

    pub fn append_edge_list(
        &mut self,
        path: impl AsRef<Path>,
        kind: EdgeKind,
    ) -> Result<EdgeListReport> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| LexError::io(path, e))?;
        self.append_edge_list_from(BufReader::new(file), path, kind)
    }

    pub fn append_edge_list_from(
        &mut self,
        reader: impl BufRead,
        path: &Path,
        kind: EdgeKind,
    ) -> Result<EdgeListReport> {
        let mut report = EdgeListReport::default();
        let nodes_before = self.node_count();
        for (lineno, line) in reader.lines().enumerate() {
            let lineno = lineno + 1;
            let line = line.map_err(|e| LexError::io(path, e))?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            report.lines_read += 1;
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(LexError::parse(
                    path,
                    lineno,
                    format!("expected two node ids, found {}", fields.len()),
                ));
            }
            if fields[0] == fields[1] {
                report.self_loops_skipped += 1;
                continue;
            }
            match self.add_edge(fields[0], fields[1], kind)? {
                EdgeOutcome::Added => report.edges_added += 1,
                EdgeOutcome::Duplicate => report.duplicates_skipped += 1,
            }
        }
        report.nodes_added = self.node_count() - nodes_before;
        Ok(report)
    }

    /// Folds gloss co-occurrence edges into an existing relation graph.
    /// Pairs already linked by a relation stay relations; new nodes named
    /// only in the gloss list are interned.
    pub fn merge_gloss_edges(&mut self, path: impl AsRef<Path>) -> Result<EdgeListReport> {
        self.append_edge_list(path, EdgeKind::Gloss)
    }

    pub fn stats(&self) -> GraphStats {
        let nodes = self.node_count();
        let edges = self.edge_count();
        let relation_edges = self
            .edges
            .values()
            .filter(|k| **k == EdgeKind::Relation)
            .count();
        let degrees: Vec<usize> = self.adjacency.iter().map(Vec::len).collect();
        GraphStats {
            nodes,
            edges,
            relation_edges,
            gloss_edges: edges - relation_edges,
            min_degree: degrees.iter().copied().min().unwrap_or(0),
            max_degree: degrees.iter().copied().max().unwrap_or(0),
            mean_degree: if nodes == 0 {
                0.0
            } else {
                2.0 * edges as f64 / nodes as f64
            },
            isolated_nodes: degrees.iter().filter(|d| **d == 0).count(),
            connected_components: self.count_components(),
        }
    }

    fn count_components(&self) -> usize {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut components = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            stack.push(start as u32);
            while let Some(id) = stack.pop() {
                for &nb in self.neighbors(id) {
                    if !seen[nb as usize] {
                        seen[nb as usize] = true;
                        stack.push(nb);
                    }
                }
            }
        }
        components
    }
}

fn key(a: u32, b: u32) -> (u32, u32) {
    (a.min(b), a.max(b))
}

fn insert_sorted(v: &mut Vec<u32>, x: u32) {
    if let Err(pos) = v.binary_search(&x) {
        v.insert(pos, x);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::path::PathBuf;

    fn from_text(text: &str, kind: EdgeKind) -> (KnowledgeGraph, EdgeListReport) {
        let mut g = KnowledgeGraph::new();
        let r = g
            .append_edge_list_from(text.as_bytes(), &PathBuf::from("mem"), kind)
            .unwrap();
        (g, r)
    }

    #[test]
    fn two_lines_three_nodes_two_edges() {
        let (g, r) = from_text("a b\nb c\n", EdgeKind::Relation);
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(r.edges_added, 2);
        assert_eq!(r.nodes_added, 3);
    }

    #[test]
    fn reversed_duplicate_stored_once() {
        let (g, r) = from_text("a b\nb a\n", EdgeKind::Relation);
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(r.duplicates_skipped, 1);
    }

    #[test]
    fn comments_and_blanks_skipped() {
        let (g, r) = from_text("# header\n\n  a b\n   # more\nb c\n", EdgeKind::Relation);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(r.lines_read, 2);
    }

    #[test]
    fn malformed_line_reports_number() {
        let mut g = KnowledgeGraph::new();
        let err = g
            .append_edge_list_from("a b\nlonely\n".as_bytes(), &PathBuf::from("mem"), EdgeKind::Relation)
            .unwrap_err();
        match err {
            LexError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
        let mut g = KnowledgeGraph::new();
        assert!(g
            .append_edge_list_from("a b c\n".as_bytes(), &PathBuf::from("mem"), EdgeKind::Relation)
            .is_err());
    }

    #[test]
    fn self_loops_counted_not_fatal() {
        let (g, r) = from_text("a a\na b\n", EdgeKind::Relation);
        assert_eq!(r.self_loops_skipped, 1);
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn empty_input_empty_graph() {
        let (g, r) = from_text("", EdgeKind::Relation);
        assert_eq!(g.node_count(), 0);
        assert_eq!(g.edge_count(), 0);
        assert_eq!(r, EdgeListReport::default());
    }

    #[test]
    fn gloss_merge_adds_kind_and_nodes() {
        let (mut g, _) = from_text("a b\n", EdgeKind::Relation);
        let r = g
            .append_edge_list_from("a c\n".as_bytes(), &PathBuf::from("mem"), EdgeKind::Gloss)
            .unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(r.nodes_added, 1);
        let (a, b, c) = (g.node_id("a").unwrap(), g.node_id("b").unwrap(), g.node_id("c").unwrap());
        assert_eq!(g.edge_kind(a, b), Some(EdgeKind::Relation));
        assert_eq!(g.edge_kind(a, c), Some(EdgeKind::Gloss));
    }

    #[test]
    fn relation_wins_over_gloss_both_directions() {
        let (mut g, _) = from_text("a b\n", EdgeKind::Relation);
        g.append_edge_list_from("b a\n".as_bytes(), &PathBuf::from("mem"), EdgeKind::Gloss)
            .unwrap();
        let (a, b) = (g.node_id("a").unwrap(), g.node_id("b").unwrap());
        assert_eq!(g.edge_kind(a, b), Some(EdgeKind::Relation));

        let (mut g, _) = from_text("a b\n", EdgeKind::Gloss);
        g.append_edge_list_from("b a\n".as_bytes(), &PathBuf::from("mem"), EdgeKind::Relation)
            .unwrap();
        let (a, b) = (g.node_id("a").unwrap(), g.node_id("b").unwrap());
        assert_eq!(g.edge_kind(a, b), Some(EdgeKind::Relation));
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn merge_with_empty_list_is_identity() {
        let (mut g, _) = from_text("a b\nb c\n", EdgeKind::Relation);
        let before = g.clone();
        g.append_edge_list_from("".as_bytes(), &PathBuf::from("mem"), EdgeKind::Gloss)
            .unwrap();
        assert_eq!(g, before);
    }

    #[test]
    fn triangle_stats() {
        let (g, _) = from_text("a b\nb c\nc a\n", EdgeKind::Relation);
        let s = g.stats();
        assert_eq!(s.nodes, 3);
        assert_eq!(s.edges, 3);
        assert_eq!(s.min_degree, 2);
        assert_eq!(s.max_degree, 2);
        assert!((s.mean_degree - 2.0).abs() < 1e-12);
        assert_eq!(s.connected_components, 1);
    }

    #[test]
    fn star_stats() {
        let (g, _) = from_text("hub a\nhub b\nhub c\nhub d\n", EdgeKind::Relation);
        let s = g.stats();
        assert_eq!(s.nodes, 5);
        assert_eq!(s.max_degree, 4);
        assert_eq!(s.min_degree, 1);
        assert!((s.mean_degree - 1.6).abs() < 1e-12);
        assert_eq!(s.connected_components, 1);
    }

    #[test]
    fn empty_graph_stats_are_zero() {
        let s = KnowledgeGraph::new().stats();
        assert_eq!(s.nodes, 0);
        assert_eq!(s.edges, 0);
        assert_eq!(s.mean_degree, 0.0);
        assert_eq!(s.connected_components, 0);
    }

    #[test]
    fn two_components_counted() {
        let (g, _) = from_text("a b\nc d\n", EdgeKind::Relation);
        assert_eq!(g.stats().connected_components, 2);
    }

    #[test]
    fn add_node_rejects_bad_names() {
        let mut g = KnowledgeGraph::new();
        assert!(g.add_node("").is_err());
        assert!(g.add_node("has space").is_err());
        assert!(g.add_edge("x", "x", EdgeKind::Relation).is_err());
    }

    proptest! {
        #[test]
        fn adjacency_symmetric_and_degree_sum_matches(
            pairs in proptest::collection::vec((0u8..20, 0u8..20), 0..60)
        ) {
            let mut g = KnowledgeGraph::new();
            for (a, b) in pairs {
                if a != b {
                    g.add_edge(&format!("n{a}"), &format!("n{b}"), EdgeKind::Relation).unwrap();
                }
            }
            let mut degree_sum = 0;
            for id in 0..g.node_count() as u32 {
                degree_sum += g.degree(id);
                for &nb in g.neighbors(id) {
                    prop_assert!(g.neighbors(nb).contains(&id));
                    prop_assert!(g.has_edge(id, nb) && g.has_edge(nb, id));
                }
                prop_assert!(g.neighbors(id).windows(2).all(|w| w[0] < w[1]));
            }
            prop_assert_eq!(degree_sum, 2 * g.edge_count());
        }
    }
}

use super::instance::Instance;
use super::markers::MarkedSequence;
use crate::error::{Error, Result};

/// Undirected dependency graph as sorted neighbor lists. Every node lists
/// itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyGraph {
    pub neighbors: Vec<Vec<usize>>,
}

impl DependencyGraph {
    fn from_edges(num_nodes: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut neighbors: Vec<Vec<usize>> = (0..num_nodes).map(|i| vec![i]).collect();
        for (a, b) in edges {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        Self { neighbors }
    }

    pub fn num_nodes(&self) -> usize {
        self.neighbors.len()
    }

    /// Total entries across all neighbor lists.
    pub fn num_entries(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum()
    }
}

/// Graph over the original tokens: edge {i, head_i - 1} for every
/// non-root token, plus self-loops.
pub fn build_dependency_graph(inst: &Instance) -> Result<DependencyGraph> {
    inst.check_tree().map_err(|m| Error::validation(&inst.id, m))?;
    let edges = inst.dep_heads.iter().enumerate().filter(|(_, &h)| h != 0).map(|(i, &h)| (i, h - 1));
    Ok(DependencyGraph::from_edges(inst.tokens.len(), edges))
}

/// Graph over a marked sequence: dependency edges are carried over to the
/// original tokens' new positions and each marker hangs off the first
/// original token of its span.
pub fn build_marked_graph(inst: &Instance, marked: &MarkedSequence) -> Result<DependencyGraph> {
    inst.check_tree().map_err(|m| Error::validation(&inst.id, m))?;
    let mut position_of = vec![0; inst.tokens.len()];
    for (pos, origin) in marked.origin_map.iter().enumerate() {
        if let Some(o) = origin {
            position_of[*o] = pos;
        }
    }
    let dep_edges =
        inst.dep_heads.iter().enumerate().filter(|(_, &h)| h != 0).map(|(i, &h)| (position_of[i], position_of[h - 1]));
    let subj_root = marked.subj_tokens.0;
    let obj_root = marked.obj_tokens.0;
    let marker_edges =
        marked.subj_markers.iter().map(|&m| (m, subj_root)).chain(marked.obj_markers.iter().map(|&m| (m, obj_root)));
    Ok(DependencyGraph::from_edges(marked.len(), dep_edges.chain(marker_edges).collect::<Vec<_>>()))
}

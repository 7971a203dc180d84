//! Work counters shared by all engines.

use std::ops::AddAssign;

/// Counters collected during one parse. `allocations` is the storage proxy:
/// every category copy, edge, item, stack vertex and forest node created.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ParseStats {
    pub unify_attempts: u64,
    pub unify_successes: u64,
    /// Categories (or category tuples) copied out of a binding store.
    pub copies: u64,
    /// Active edges (BU-LC) or stack edges (GLR).
    pub edges: u64,
    /// Chart items (CE).
    pub items: u64,
    /// Stack vertices (GLR).
    pub vertices: u64,
    /// Forest nodes allocated, including ones later packed away.
    pub nodes: u64,
    /// Forest representatives at the end of the parse.
    pub nodes_live: u64,
    /// Derivations packed under subsumption.
    pub packings: u64,
    pub cache_hits: u64,
    pub cache_misses: u64,
}

impl ParseStats {
    pub fn allocations(&self) -> u64 {
        self.copies + self.edges + self.items + self.vertices + self.nodes
    }
}

impl AddAssign for ParseStats {
    fn add_assign(&mut self, o: ParseStats) {
        self.unify_attempts += o.unify_attempts;
        self.unify_successes += o.unify_successes;
        self.copies += o.copies;
        self.edges += o.edges;
        self.items += o.items;
        self.vertices += o.vertices;
        self.nodes += o.nodes;
        self.nodes_live += o.nodes_live;
        self.packings += o.packings;
        self.cache_hits += o.cache_hits;
        self.cache_misses += o.cache_misses;
    }
}

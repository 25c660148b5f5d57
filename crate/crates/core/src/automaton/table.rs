//! Transition storage for goto edges.

/// State index. The root is always 0.
pub type StateId = u32;

/// "No edge" marker in the dense table.
pub(crate) const NO_EDGE: StateId = StateId::MAX;

/// Per-(state, byte) goto lookup, without failure resolution.
pub trait Goto {
    fn goto(&self, state: StateId, byte: u8) -> Option<StateId>;
    fn state_count(&self) -> usize;
    /// Heap bytes used by the transition storage.
    fn memory_bytes(&self) -> usize;
}

/// `Q × 256` successor table, [`NO_EDGE`] where there is no edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DenseTable {
    next: Vec<StateId>,
}

impl DenseTable {
    pub(crate) fn from_edges(edges: &[Vec<(u8, StateId)>]) -> Self {
        let mut next = vec![NO_EDGE; edges.len() * 256];
        for (s, out) in edges.iter().enumerate() {
            for &(b, t) in out {
                next[s * 256 + b as usize] = t;
            }
        }
        DenseTable { next }
    }

    pub(crate) fn row(&self, state: StateId) -> &[StateId] {
        let base = state as usize * 256;
        &self.next[base..base + 256]
    }
}

impl Goto for DenseTable {
    #[inline(always)]
    fn goto(&self, state: StateId, byte: u8) -> Option<StateId> {
        let t = self.next[state as usize * 256 + byte as usize];
        (t != NO_EDGE).then_some(t)
    }

    fn state_count(&self) -> usize {
        self.next.len() / 256
    }

    fn memory_bytes(&self) -> usize {
        self.next.len() * std::mem::size_of::<StateId>()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct CompactNode {
    /// Bit `b` set iff the state has an edge on byte `b`.
    present: [u64; 4],
    /// Index of this state's first successor in the packed array.
    base: u32,
    /// Set bits in `present` below word `w`; fits in the struct padding.
    before: [u8; 4],
}

/// Per-state 256-bit presence bitmap plus successors packed in byte order;
/// an edge's slot is `base + rank(byte)` where rank counts set bits below it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompactTable {
    nodes: Vec<CompactNode>,
    successors: Vec<StateId>,
}

impl CompactTable {
    pub(crate) fn from_edges(edges: &[Vec<(u8, StateId)>]) -> Self {
        let mut nodes = Vec::with_capacity(edges.len());
        let mut successors = Vec::new();
        for out in edges {
            let mut node = CompactNode {
                present: [0; 4],
                base: successors.len() as u32,
                before: [0; 4],
            };
            let mut sorted = out.clone();
            sorted.sort_unstable_by_key(|&(b, _)| b);
            for (b, t) in sorted {
                node.present[(b >> 6) as usize] |= 1u64 << (b & 63);
                successors.push(t);
            }
            for w in 1..4 {
                node.before[w] = node.before[w - 1] + node.present[w - 1].count_ones() as u8;
            }
            nodes.push(node);
        }
        CompactTable { nodes, successors }
    }

    pub(crate) fn from_dense(dense: &DenseTable) -> Self {
        let edges: Vec<Vec<(u8, StateId)>> = (0..dense.state_count() as StateId)
            .map(|s| {
                dense
                    .row(s)
                    .iter()
                    .enumerate()
                    .filter(|&(_, &t)| t != NO_EDGE)
                    .map(|(b, &t)| (b as u8, t))
                    .collect()
            })
            .collect();
        CompactTable::from_edges(&edges)
    }

    /// Presence bitmap of `state`, low word first.
    pub fn bitmap(&self, state: StateId) -> [u64; 4] {
        self.nodes[state as usize].present
    }

    pub fn successor_count(&self) -> usize {
        self.successors.len()
    }
}

impl Goto for CompactTable {
    #[inline(always)]
    fn goto(&self, state: StateId, byte: u8) -> Option<StateId> {
        let node = &self.nodes[state as usize];
        let word = (byte >> 6) as usize;
        let bit = 1u64 << (byte & 63);
        if node.present[word] & bit == 0 {
            return None;
        }
        let rank = node.before[word] as u32 + (node.present[word] & (bit - 1)).count_ones();
        Some(self.successors[(node.base + rank) as usize])
    }

    fn state_count(&self) -> usize {
        self.nodes.len()
    }

    fn memory_bytes(&self) -> usize {
        self.nodes.len() * std::mem::size_of::<CompactNode>()
            + self.successors.len() * std::mem::size_of::<StateId>()
    }
}

//! Failureless tries and full Aho-Corasick automata over the byte alphabet.
//!
//! Both kinds share one representation: goto edges in either a dense
//! `Q × 256` table or a compact bitmap/rank table, per-state depth, and a
//! side table of outputs. The full Aho-Corasick kind adds failure links and
//! merges the outputs of each state's failure chain into the state itself.
//!
//! States are numbered breadth-first from the root (state 0), visiting
//! children in ascending byte order, so two builds from the same input are
//! identical.

mod table;

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

use crate::rules::{PatternId, PrefixSet, RuleSet};

pub use table::{CompactTable, DenseTable, Goto, StateId};
use table::NO_EDGE;

pub const ROOT: StateId = 0;

/// Default upper bound on the number of states in one automaton.
pub const DEFAULT_MAX_STATES: usize = 1 << 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AutomatonKind {
    /// Goto edges only; a missing edge ends the walk.
    Failureless,
    /// Goto edges plus failure links.
    FullAc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Backend {
    Dense,
    Compact,
}

impl Backend {
    pub fn as_str(self) -> &'static str {
        match self {
            Backend::Dense => "dense",
            Backend::Compact => "compact",
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BuildError {
    #[error("automaton would need more than {limit} states")]
    Capacity { limit: usize },
}

/// A pattern recognized on entering a state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Output {
    pub pattern_id: PatternId,
    /// Bytes of the pattern (or prefix) ending at this state.
    pub matched_len: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Transitions {
    Dense(DenseTable),
    Compact(CompactTable),
}

impl Transitions {
    fn state_count(&self) -> usize {
        match self {
            Transitions::Dense(t) => t.state_count(),
            Transitions::Compact(t) => t.state_count(),
        }
    }

    #[inline]
    fn goto(&self, state: StateId, byte: u8) -> Option<StateId> {
        match self {
            Transitions::Dense(t) => t.goto(state, byte),
            Transitions::Compact(t) => t.goto(state, byte),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Automaton {
    kind: AutomatonKind,
    transitions: Transitions,
    /// Empty for failureless automata.
    fail: Vec<StateId>,
    depth: Vec<u32>,
    out_offsets: Vec<u32>,
    outputs: Vec<Output>,
    /// Failureless only: bit `b0 << 8 | b1` is set iff a walk starting with
    /// bytes `b0 b1` can reach an output. Empty for full AC.
    start_pairs: Vec<u64>,
    /// Failureless only: root successor per byte, [`NO_EDGE`] if none.
    root_row: Vec<StateId>,
}

impl Automaton {
    pub fn kind(&self) -> AutomatonKind {
        self.kind
    }

    pub fn backend(&self) -> Backend {
        match self.transitions {
            Transitions::Dense(_) => Backend::Dense,
            Transitions::Compact(_) => Backend::Compact,
        }
    }

    pub fn state_count(&self) -> usize {
        self.transitions.state_count()
    }

    pub fn transitions(&self) -> &Transitions {
        &self.transitions
    }

    /// Goto edge only, ignoring failure links.
    pub fn goto(&self, state: StateId, byte: u8) -> Option<StateId> {
        self.transitions.goto(state, byte)
    }

    /// One scan step. Failureless automata return `None` (terminate) when
    /// there is no edge; full Aho-Corasick automata resolve failure links
    /// and always return a state.
    pub fn next_state(&self, state: StateId, byte: u8) -> Option<StateId> {
        match self.kind {
            AutomatonKind::Failureless => self.goto(state, byte),
            AutomatonKind::FullAc => Some(self.ac_step(state, byte)),
        }
    }

    #[inline]
    pub(crate) fn ac_step_with<G: Goto>(&self, table: &G, mut state: StateId, byte: u8) -> StateId {
        loop {
            if let Some(t) = table.goto(state, byte) {
                return t;
            }
            if state == ROOT {
                return ROOT;
            }
            state = self.fail[state as usize];
        }
    }

    fn ac_step(&self, state: StateId, byte: u8) -> StateId {
        match &self.transitions {
            Transitions::Dense(t) => self.ac_step_with(t, state, byte),
            Transitions::Compact(t) => self.ac_step_with(t, state, byte),
        }
    }

    /// Failure link of `state`; `None` for failureless automata.
    pub fn failure(&self, state: StateId) -> Option<StateId> {
        self.fail.get(state as usize).copied()
    }

    pub fn depth(&self, state: StateId) -> u32 {
        self.depth[state as usize]
    }

    #[inline]
    pub fn outputs(&self, state: StateId) -> &[Output] {
        let s = state as usize;
        &self.outputs[self.out_offsets[s] as usize..self.out_offsets[s + 1] as usize]
    }

    #[inline]
    pub fn has_output(&self, state: StateId) -> bool {
        let s = state as usize;
        self.out_offsets[s] != self.out_offsets[s + 1]
    }

    /// False only if no walk beginning with `b0 b1` reaches an output.
    #[inline]
    pub(crate) fn may_start(&self, b0: u8, b1: u8) -> bool {
        let i = (b0 as usize) << 8 | b1 as usize;
        self.start_pairs[i >> 6] & (1 << (i & 63)) != 0
    }

    /// Root transition of a failureless automaton, without a table lookup.
    #[inline]
    pub(crate) fn root_step(&self, byte: u8) -> Option<StateId> {
        let t = self.root_row[byte as usize];
        (t != NO_EDGE).then_some(t)
    }

    /// Heap bytes used by the transition storage.
    pub fn transition_bytes(&self) -> usize {
        match &self.transitions {
            Transitions::Dense(t) => t.memory_bytes(),
            Transitions::Compact(t) => t.memory_bytes(),
        }
    }

    /// Same transition function and outputs, stored in the compact layout.
    pub fn to_compact(&self) -> Automaton {
        let transitions = match &self.transitions {
            Transitions::Dense(t) => Transitions::Compact(CompactTable::from_dense(t)),
            Transitions::Compact(t) => Transitions::Compact(t.clone()),
        };
        Automaton {
            transitions,
            ..self.clone()
        }
    }

    /// Text dump, one line per state: goto edges, then failure link and
    /// outputs. Meant for tests and debugging; the format may change.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for s in 0..self.state_count() as StateId {
            let _ = write!(out, "{s}:");
            for b in 0..=255u8 {
                if let Some(t) = self.goto(s, b) {
                    let _ = write!(out, " {s} --{}--> {t}", b.escape_ascii());
                }
            }
            if let Some(f) = self.failure(s) {
                let _ = write!(out, " | fail {f}");
            }
            out.push_str(" | out [");
            for (i, o) in self.outputs(s).iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                let _ = write!(out, "{}/{}", o.pattern_id, o.matched_len);
            }
            out.push_str("]\n");
        }
        out
    }
}

/// Builds automata with a chosen backend and state ceiling.
#[derive(Clone, Copy, Debug)]
pub struct AutomatonBuilder {
    backend: Backend,
    max_states: usize,
}

impl Default for AutomatonBuilder {
    fn default() -> Self {
        AutomatonBuilder {
            backend: Backend::Dense,
            max_states: DEFAULT_MAX_STATES,
        }
    }
}

impl AutomatonBuilder {
    pub fn new(backend: Backend) -> Self {
        AutomatonBuilder {
            backend,
            ..Default::default()
        }
    }

    pub fn backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }

    pub fn max_states(mut self, limit: usize) -> Self {
        self.max_states = limit;
        self
    }

    /// Failureless trie over the prefix entries. Every pattern id of an
    /// entry is an output of the state its prefix ends in.
    pub fn failureless(&self, prefixes: &PrefixSet) -> Result<Automaton, BuildError> {
        let keys = prefixes
            .entries()
            .iter()
            .map(|e| (e.bytes.as_slice(), e.pattern_ids.as_slice()));
        let trie = Trie::build(keys, self.max_states)?;
        Ok(trie.finish(AutomatonKind::Failureless, self.backend))
    }

    /// Full Aho-Corasick automaton over the untruncated patterns.
    pub fn aho_corasick(&self, rules: &RuleSet) -> Result<Automaton, BuildError> {
        let keys = rules
            .patterns()
            .iter()
            .map(|p| (p.bytes.as_slice(), std::slice::from_ref(&p.id)));
        let trie = Trie::build(keys, self.max_states)?;
        Ok(trie.finish(AutomatonKind::FullAc, self.backend))
    }
}

pub fn build_failureless_trie(
    prefixes: &PrefixSet,
    backend: Backend,
) -> Result<Automaton, BuildError> {
    AutomatonBuilder::new(backend).failureless(prefixes)
}

pub fn build_ac_automaton(rules: &RuleSet, backend: Backend) -> Result<Automaton, BuildError> {
    AutomatonBuilder::new(backend).aho_corasick(rules)
}

/// Goto trie in breadth-first numbering.
struct Trie {
    edges: Vec<Vec<(u8, StateId)>>,
    depth: Vec<u32>,
    outputs: Vec<Vec<Output>>,
}

impl Trie {
    fn build<'a, I>(keys: I, max_states: usize) -> Result<Self, BuildError>
    where
        I: IntoIterator<Item = (&'a [u8], &'a [PatternId])>,
    {
        // Insertion-order trie first, renumbered below.
        let mut children: Vec<BTreeMap<u8, usize>> = vec![BTreeMap::new()];
        let mut raw_out: Vec<Vec<Output>> = vec![Vec::new()];
        for (key, ids) in keys {
            let mut s = 0;
            for &b in key {
                s = match children[s].get(&b) {
                    Some(&t) => t,
                    None => {
                        if children.len() >= max_states {
                            return Err(BuildError::Capacity { limit: max_states });
                        }
                        let t = children.len();
                        children.push(BTreeMap::new());
                        raw_out.push(Vec::new());
                        children[s].insert(b, t);
                        t
                    }
                };
            }
            raw_out[s].extend(ids.iter().map(|&pattern_id| Output {
                pattern_id,
                matched_len: key.len() as u32,
            }));
        }

        let n = children.len();
        let mut order = Vec::with_capacity(n);
        let mut renum = vec![0 as StateId; n];
        let mut queue = VecDeque::from([0usize]);
        while let Some(s) = queue.pop_front() {
            renum[s] = order.len() as StateId;
            order.push(s);
            queue.extend(children[s].values().copied());
        }

        let mut edges = Vec::with_capacity(n);
        let mut depth = vec![0u32; n];
        let mut outputs = Vec::with_capacity(n);
        for &old in &order {
            let new = renum[old];
            let out: Vec<(u8, StateId)> = children[old]
                .iter()
                .map(|(&b, &t)| (b, renum[t]))
                .collect();
            for &(_, t) in &out {
                depth[t as usize] = depth[new as usize] + 1;
            }
            edges.push(out);
            let mut o = std::mem::take(&mut raw_out[old]);
            o.sort_unstable();
            outputs.push(o);
        }
        Ok(Trie {
            edges,
            depth,
            outputs,
        })
    }

    fn child(&self, state: StateId, byte: u8) -> Option<StateId> {
        let out = &self.edges[state as usize];
        out.binary_search_by_key(&byte, |&(b, _)| b)
            .ok()
            .map(|i| out[i].1)
    }

    /// Failure links by breadth-first order, merging each state's outputs
    /// with those of its failure target.
    fn link(&mut self) -> Vec<StateId> {
        let n = self.edges.len();
        let mut fail = vec![ROOT; n];
        // BFS numbering: parents precede children.
        for s in 0..n as StateId {
            for i in 0..self.edges[s as usize].len() {
                let (b, t) = self.edges[s as usize][i];
                fail[t as usize] = if s == ROOT {
                    ROOT
                } else {
                    let mut f = fail[s as usize];
                    loop {
                        if let Some(x) = self.child(f, b) {
                            break x;
                        }
                        if f == ROOT {
                            break ROOT;
                        }
                        f = fail[f as usize];
                    }
                };
            }
        }
        // States are numbered breadth-first, so fail[t] is already complete.
        for (t, &f) in fail.iter().enumerate().skip(1) {
            let f = f as usize;
            if !self.outputs[f].is_empty() {
                let inherited = self.outputs[f].clone();
                self.outputs[t].extend(inherited);
                self.outputs[t].sort_unstable();
            }
        }
        fail
    }

    fn finish(mut self, kind: AutomatonKind, backend: Backend) -> Automaton {
        let fail = match kind {
            AutomatonKind::Failureless => Vec::new(),
            AutomatonKind::FullAc => self.link(),
        };
        let transitions = match backend {
            Backend::Dense => Transitions::Dense(DenseTable::from_edges(&self.edges)),
            Backend::Compact => Transitions::Compact(CompactTable::from_edges(&self.edges)),
        };
        let (start_pairs, root_row) = match kind {
            AutomatonKind::Failureless => {
                let mut row = vec![NO_EDGE; 256];
                for &(b, t) in &self.edges[ROOT as usize] {
                    row[b as usize] = t;
                }
                (self.start_pairs(), row)
            }
            AutomatonKind::FullAc => (Vec::new(), Vec::new()),
        };
        let mut out_offsets = Vec::with_capacity(self.outputs.len() + 1);
        out_offsets.push(0u32);
        let mut outputs = Vec::new();
        for o in self.outputs {
            outputs.extend(o);
            out_offsets.push(outputs.len() as u32);
        }
        Automaton {
            kind,
            transitions,
            fail,
            depth: self.depth,
            out_offsets,
            outputs,
            start_pairs,
            root_row,
        }
    }

    fn start_pairs(&self) -> Vec<u64> {
        let mut bits = vec![0u64; 256 * 256 / 64];
        for &(b0, s1) in &self.edges[ROOT as usize] {
            let row = (b0 as usize) << 8;
            if !self.outputs[s1 as usize].is_empty() {
                bits[row >> 6..(row >> 6) + 4].fill(!0);
                continue;
            }
            for &(b1, _) in &self.edges[s1 as usize] {
                let i = row | b1 as usize;
                bits[i >> 6] |= 1 << (i & 63);
            }
        }
        bits
    }
}

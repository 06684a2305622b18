//! Count trees over the level-k buckets.
//!
//! Four balanced binary trees (one per first context symbol) live in a
//! single Eytzinger array: the roots of the A/C/G/T trees are nodes 4..=7,
//! children of node `i` are `2i` and `2i + 1`, and any index `>= 2^kappa`
//! is a leaf, i.e. a bucket. Entries 0..=3 hold running per-symbol totals
//! over the A tree, the A and C trees, and so on.
//!
//! Each internal node counts, per base, the symbols stored in the leaves of
//! its left subtree. Walking from a root to a leaf and summing the counters
//! of every node where the path goes right yields the number of symbols in
//! all buckets left of that leaf inside the tree.

use std::ops::{Add, AddAssign, Range};
use std::sync::atomic::{AtomicU64, Ordering};

use crate::alphabet::{Symbol, SIGMA};
use crate::error::{Error, Result};

/// Smallest supported `kappa` (twice the context length `k`).
pub const MIN_KAPPA: u32 = 3;
/// Largest supported `kappa`; the node array alone is `2^kappa * 32` bytes.
pub const MAX_KAPPA: u32 = 30;
/// Range of `kappa` with known good behaviour (k = 1.5 ..= 9.5); others warn.
pub const TESTED_KAPPA: Range<u32> = 3..20;

/// Below this many entries a subtree is not split across workers.
const PAR_THRESHOLD: usize = 2048;

/// Four per-base counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Accumulator {
    pub counts: [u64; SIGMA],
}

impl Accumulator {
    pub const ZERO: Accumulator = Accumulator { counts: [0; SIGMA] };

    pub fn new(counts: [u64; SIGMA]) -> Self {
        Accumulator { counts }
    }

    /// Counter for a base. Panics on the sentinel.
    #[inline]
    pub fn get(&self, sym: Symbol) -> u64 {
        self.counts[sym.code().expect("sentinel has no counter") as usize]
    }

    #[inline]
    pub fn bump(&mut self, code: u8) {
        self.counts[code as usize] += 1;
    }

    #[inline]
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

impl Add for Accumulator {
    type Output = Accumulator;
    fn add(mut self, rhs: Accumulator) -> Accumulator {
        self += rhs;
        self
    }
}

impl AddAssign for Accumulator {
    fn add_assign(&mut self, rhs: Accumulator) {
        for (a, b) in self.counts.iter_mut().zip(rhs.counts) {
            *a += b;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Left,
    Right,
}

/// The two navigation steps one context symbol contributes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NavPlan {
    pub first: Step,
    pub second: Step,
}

/// A: left-left, C: left-right, G: right-left, T: right-right.
pub fn nav_directions(sym: Symbol) -> NavPlan {
    let code = sym
        .code()
        .expect("the sentinel never appears in a context; it is padded with A");
    let step = |bit: u8| if bit == 0 { Step::Left } else { Step::Right };
    NavPlan {
        first: step(code >> 1),
        second: step(code & 1),
    }
}

/// Number of context symbols kept for a given `kappa`: `ceil(kappa / 2)`.
#[inline]
pub fn context_len(kappa: u32) -> u32 {
    kappa.div_ceil(2)
}

/// A predecessor sequence `D = c_1 .. c_k`, 2 bits per symbol with `c_1` in
/// the most significant position, so integer order is lexicographic order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Context(pub u64);

impl Context {
    /// All-A context given to a freshly started word.
    pub const PADDING: Context = Context(0);

    /// Pack from symbols; missing trailing symbols are A.
    pub fn from_symbols(syms: &[Symbol], k: u32) -> Context {
        let mut v = 0u64;
        for i in 0..k as usize {
            let code = syms.get(i).and_then(|s| s.code()).unwrap_or(0);
            v = (v << 2) | code as u64;
        }
        Context(v)
    }

    /// `D[0]`, the symbol inserted most recently; selects the tree.
    #[inline]
    pub fn first(self, k: u32) -> Symbol {
        Symbol::from_code((self.0 >> (2 * (k - 1))) as u8)
    }

    /// `c . D[0..k-1]`: the context after inserting base `code`.
    #[inline]
    pub fn shift_in(self, code: u8, k: u32) -> Context {
        Context(((code as u64) << (2 * (k - 1))) | (self.0 >> 2))
    }

    /// Leaf ordinal in `0..2^kappa`. With odd `kappa` the last symbol only
    /// contributes its first navigation step.
    #[inline]
    pub fn leaf_ordinal(self, kappa: u32) -> u64 {
        self.0 >> (2 * context_len(kappa) - kappa)
    }

    /// Leaf index in the tree array, in `2^kappa .. 2^(kappa + 1)`.
    #[inline]
    pub fn leaf_index(self, kappa: u32) -> u64 {
        (1u64 << kappa) + self.leaf_ordinal(kappa)
    }

    pub fn symbols(self, k: u32) -> Vec<Symbol> {
        (0..k)
            .map(|i| Symbol::from_code((self.0 >> (2 * (k - 1 - i))) as u8))
            .collect()
    }
}

/// Leaf ordinal of a context given as symbols.
pub fn bucket_id(context: &[Symbol], kappa: u32) -> u64 {
    let k = context_len(kappa);
    Context::from_symbols(context, k).leaf_ordinal(kappa)
}

#[derive(Default)]
struct NodeCounters([AtomicU64; SIGMA]);

impl NodeCounters {
    #[inline]
    fn load(&self) -> Accumulator {
        Accumulator::new(std::array::from_fn(|c| self.0[c].load(Ordering::Relaxed)))
    }

    #[inline]
    fn add(&self, delta: &Accumulator) {
        for (cell, d) in self.0.iter().zip(delta.counts) {
            if d != 0 {
                cell.fetch_add(d, Ordering::Relaxed);
            }
        }
    }

    #[inline]
    fn store(&self, value: Accumulator) {
        for (cell, v) in self.0.iter().zip(value.counts) {
            cell.store(v, Ordering::Relaxed);
        }
    }
}

/// A run of entries that reached the same leaf, together with the
/// accumulator holding the per-base count of symbols left of that leaf in
/// its tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeafGroup {
    pub leaf: u64,
    pub range: Range<usize>,
    pub acc: Accumulator,
}

/// What the descent needs to know about an entry.
pub trait Routed {
    fn leaf_ordinal(&self, kappa: u32) -> u64;
    /// Symbol this entry inserts in the current iteration.
    fn insert_symbol(&self) -> Symbol;
}

pub struct TreeArray {
    kappa: u32,
    nodes: Vec<NodeCounters>,
}

impl std::fmt::Debug for TreeArray {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TreeArray")
            .field("kappa", &self.kappa)
            .field("totals", &self.prefix_totals(Symbol::T).counts)
            .finish()
    }
}

impl TreeArray {
    pub fn new(kappa: u32) -> Result<TreeArray> {
        if !(MIN_KAPPA..=MAX_KAPPA).contains(&kappa) {
            return Err(Error::KappaOutOfRange {
                kappa,
                min: MIN_KAPPA,
                max: MAX_KAPPA,
            });
        }
        let mut nodes = Vec::with_capacity(1 << kappa);
        nodes.resize_with(1 << kappa, NodeCounters::default);
        Ok(TreeArray { kappa, nodes })
    }

    pub fn kappa(&self) -> u32 {
        self.kappa
    }

    pub fn leaf_count(&self) -> u64 {
        1 << self.kappa
    }

    /// Counters of node `i` (prefix totals for `i < 4`).
    pub fn node(&self, i: usize) -> Accumulator {
        self.nodes[i].load()
    }

    /// Overwrite a node; for assembling fixtures.
    pub fn set_node(&mut self, i: usize, value: Accumulator) {
        self.nodes[i].store(value);
    }

    /// Running totals through the tree of `tree_symbol` (entry `code`).
    pub fn prefix_totals(&self, tree_symbol: Symbol) -> Accumulator {
        self.node(tree_symbol.code().expect("tree symbol must be a base") as usize)
    }

    /// Number of base `c` in all trees before the tree of `tree_symbol`.
    pub fn level1_base(&self, tree_symbol: Symbol, c: Symbol) -> u64 {
        match tree_symbol.code().expect("tree symbol must be a base") {
            0 => 0,
            x => self.node(x as usize - 1).get(c),
        }
    }

    /// Add this iteration's insertions to the running totals.
    /// `per_tree[x].c` counts base `c` inserted under first context symbol `x`.
    pub fn update_prefix_totals(&mut self, per_tree: &[Accumulator; SIGMA]) {
        let mut running = Accumulator::ZERO;
        for (x, counts) in per_tree.iter().enumerate() {
            running += *counts;
            self.nodes[x].add(&running);
        }
    }

    /// Route a group of entries that all share the tree `tree_symbol` to
    /// their leaves, incrementing counters on every left step.
    ///
    /// `entries` must be sorted by leaf ordinal. The returned groups are in
    /// leaf order; `range` indexes into `entries`. Sentinel insertions do not
    /// touch any counter. With `parallel` set, sibling subtrees may be
    /// processed on the current rayon pool.
    pub fn descend<E: Routed + Sync>(
        &self,
        tree_symbol: Symbol,
        entries: &[E],
        parallel: bool,
    ) -> Vec<LeafGroup> {
        let mut out = Vec::new();
        if entries.is_empty() {
            return out;
        }
        let root = 4 + tree_symbol.code().expect("tree symbol must be a base") as usize;
        self.descend_node(root, 2, entries, 0, Accumulator::ZERO, parallel, &mut out);
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn descend_node<E: Routed + Sync>(
        &self,
        node: usize,
        level: u32,
        entries: &[E],
        offset: usize,
        acc: Accumulator,
        parallel: bool,
        out: &mut Vec<LeafGroup>,
    ) {
        let shift = self.kappa - level - 1;
        let split = entries.partition_point(|e| (e.leaf_ordinal(self.kappa) >> shift) & 1 == 0);
        let (left, right) = entries.split_at(split);

        let mut left_counts = Accumulator::ZERO;
        for e in left {
            if let Some(code) = e.insert_symbol().code() {
                left_counts.bump(code);
            }
        }
        self.nodes[node].add(&left_counts);

        // Left-bound increments above happen before this read.
        let right_acc = if right.is_empty() {
            acc
        } else {
            acc + self.nodes[node].load()
        };

        let leaf_base = 1usize << self.kappa;
        let children_are_leaves = 2 * node >= leaf_base;
        if children_are_leaves {
            if !left.is_empty() {
                out.push(LeafGroup {
                    leaf: (2 * node - leaf_base) as u64,
                    range: offset..offset + split,
                    acc,
                });
            }
            if !right.is_empty() {
                out.push(LeafGroup {
                    leaf: (2 * node + 1 - leaf_base) as u64,
                    range: offset + split..offset + entries.len(),
                    acc: right_acc,
                });
            }
            return;
        }

        match (left.is_empty(), right.is_empty()) {
            (false, true) => {
                self.descend_node(2 * node, level + 1, left, offset, acc, parallel, out)
            }
            (true, false) => {
                self.descend_node(2 * node + 1, level + 1, right, offset, right_acc, parallel, out)
            }
            (false, false) if parallel && entries.len() >= PAR_THRESHOLD => {
                let mut right_out = Vec::new();
                rayon::join(
                    || self.descend_node(2 * node, level + 1, left, offset, acc, parallel, out),
                    || {
                        self.descend_node(
                            2 * node + 1,
                            level + 1,
                            right,
                            offset + split,
                            right_acc,
                            parallel,
                            &mut right_out,
                        )
                    },
                );
                out.append(&mut right_out);
            }
            (false, false) => {
                self.descend_node(2 * node, level + 1, left, offset, acc, parallel, out);
                self.descend_node(
                    2 * node + 1,
                    level + 1,
                    right,
                    offset + split,
                    right_acc,
                    parallel,
                    out,
                );
            }
            (true, true) => unreachable!("descend is never called with an empty group"),
        }
    }

    /// Compare every counter against per-bucket symbol counts.
    ///
    /// `bucket_counts[leaf]` is the base histogram of bucket `leaf`. Returns a
    /// description of the first mismatch.
    pub fn check_against(&self, bucket_counts: &[Accumulator]) -> std::result::Result<(), String> {
        let leaves = self.leaf_count() as usize;
        if bucket_counts.len() != leaves {
            return Err(format!(
                "expected {} bucket histograms, got {}",
                leaves,
                bucket_counts.len()
            ));
        }
        // subtree[i] = histogram of all leaves under index i.
        let mut subtree = vec![Accumulator::ZERO; 2 * leaves];
        subtree[leaves..].copy_from_slice(bucket_counts);
        for i in (4..leaves).rev() {
            subtree[i] = subtree[2 * i] + subtree[2 * i + 1];
        }
        for i in 4..leaves {
            if self.node(i) != subtree[2 * i] {
                return Err(format!(
                    "node {i}: stored {:?}, left subtree holds {:?}",
                    self.node(i).counts,
                    subtree[2 * i].counts
                ));
            }
        }
        let mut running = Accumulator::ZERO;
        for x in 0..SIGMA {
            running += subtree[4 + x];
            if self.node(x) != running {
                return Err(format!(
                    "prefix total {x}: stored {:?}, buckets hold {:?}",
                    self.node(x).counts,
                    running.counts
                ));
            }
        }
        Ok(())
    }
}

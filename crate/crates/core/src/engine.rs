//! The iteration driver.
//!
//! Words are read right-aligned: iteration `t` inserts `W_j[t]` for every
//! active word, where a word becomes active at `t = M - |S_j|` and inserts
//! its sentinel at `t = M`. The active list is kept ordered by
//! `(D[0], position)`, which makes every tree and every bucket a contiguous
//! slice of it.

use std::io::Write;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use log::{debug, info, warn};

use crate::alphabet::{Symbol, SIGMA};
use crate::bucket::{local_position_base, Backend, BatchItem, BucketStore, Encoding, StoreConfig};
use crate::collection::WordCollection;
use crate::error::{Error, Result};
use crate::tree::{context_len, Accumulator, Context, Routed, TreeArray, TESTED_KAPPA};

#[derive(Debug, Clone)]
pub struct Config {
    pub kappa: u32,
    /// Worker threads; 1 disables all parallel paths.
    pub threads: usize,
    /// Parent of the per-run scratch directory (external backend).
    pub tmp_dir: PathBuf,
    pub buffer_bytes: usize,
    pub backend: Backend,
    pub encoding: Encoding,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            kappa: 5,
            threads: default_threads(),
            tmp_dir: std::env::temp_dir(),
            buffer_bytes: 1 << 20,
            backend: Backend::External,
            encoding: Encoding::Packed,
        }
    }
}

impl Config {
    /// In-memory buckets on a single thread; handy for tests.
    pub fn in_memory(kappa: u32) -> Config {
        Config {
            kappa,
            threads: 1,
            backend: Backend::Memory,
            ..Config::default()
        }
    }
}

pub fn default_threads() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

/// A word that still has symbols to insert.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActiveWord {
    pub word: u32,
    /// Position of this iteration's insertion, relative to the tree of
    /// `context.first(k)`.
    pub position: u64,
    pub context: Context,
    pub symbol: Symbol,
    /// Count of `symbol` in the tree before `position`, filled by the merge.
    pub rank: u64,
}

impl ActiveWord {
    fn fresh(word: u32, position: u64) -> ActiveWord {
        ActiveWord {
            word,
            position,
            context: Context::PADDING,
            symbol: Symbol::Sentinel,
            rank: 0,
        }
    }
}

impl Routed for ActiveWord {
    #[inline]
    fn leaf_ordinal(&self, kappa: u32) -> u64 {
        self.context.leaf_ordinal(kappa)
    }
    #[inline]
    fn insert_symbol(&self) -> Symbol {
        self.symbol
    }
}

impl BatchItem for ActiveWord {
    #[inline]
    fn position(&self) -> u64 {
        self.position
    }
    #[inline]
    fn symbol(&self) -> Symbol {
        self.symbol
    }
    #[inline]
    fn set_rank(&mut self, rank: u64) {
        self.rank = rank;
    }
}

/// Bit `j` is set once word `j` has started. `rank(j)` is answered from a
/// Fenwick tree over the per-block popcounts.
#[derive(Debug, Clone)]
pub struct StartBitvector {
    bits: Vec<u64>,
    fenwick: Vec<u64>,
    ones: u64,
}

impl StartBitvector {
    pub fn new(m: usize) -> StartBitvector {
        let blocks = m.div_ceil(64);
        StartBitvector {
            bits: vec![0; blocks],
            fenwick: vec![0; blocks + 1],
            ones: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len() * 64
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, j: usize) -> bool {
        self.bits[j / 64] >> (j % 64) & 1 == 1
    }

    pub fn set(&mut self, j: usize) {
        let (block, bit) = (j / 64, j % 64);
        if self.bits[block] >> bit & 1 == 1 {
            return;
        }
        self.bits[block] |= 1 << bit;
        self.ones += 1;
        let mut i = block + 1;
        while i < self.fenwick.len() {
            self.fenwick[i] += 1;
            i += i & i.wrapping_neg();
        }
    }

    /// Set bits strictly before `j`.
    pub fn rank(&self, j: usize) -> u64 {
        let (block, bit) = (j / 64, j % 64);
        let mut sum = 0;
        let mut i = block;
        while i > 0 {
            sum += self.fenwick[i];
            i &= i - 1;
        }
        if bit > 0 {
            sum += (self.bits[block] & ((1u64 << bit) - 1)).count_ones() as u64;
        }
        sum
    }

    pub fn count_ones(&self) -> u64 {
        self.ones
    }
}

/// Words grouped by the iteration they start in, ascending index within
/// each iteration.
#[derive(Debug, Clone)]
struct StartSchedule {
    offsets: Vec<usize>,
    words: Vec<u32>,
}

impl StartSchedule {
    fn new(collection: &WordCollection) -> StartSchedule {
        let iterations = collection.max_len() as usize + 1;
        let mut offsets = vec![0usize; iterations + 1];
        for j in 0..collection.len() {
            offsets[collection.start_iteration(j) as usize + 1] += 1;
        }
        for i in 1..offsets.len() {
            offsets[i] += offsets[i - 1];
        }
        let mut fill = offsets.clone();
        let mut words = vec![0u32; collection.len()];
        for j in 0..collection.len() {
            let t = collection.start_iteration(j) as usize;
            words[fill[t]] = j as u32;
            fill[t] += 1;
        }
        StartSchedule { offsets, words }
    }

    fn at(&self, t: u64) -> &[u32] {
        let t = t as usize;
        if t + 1 >= self.offsets.len() {
            return &[];
        }
        &self.words[self.offsets[t]..self.offsets[t + 1]]
    }
}

/// Mark the words starting now, then prepend them to the active list at
/// their `$`-row positions. All bits are set before any rank is taken.
pub fn activate_new_words(
    sb: &mut StartBitvector,
    starting: &[u32],
    active: &mut Vec<ActiveWord>,
) {
    if starting.is_empty() {
        return;
    }
    for &j in starting {
        sb.set(j as usize);
    }
    let fresh = starting
        .iter()
        .map(|&j| ActiveWord::fresh(j, sb.rank(j as usize)));
    active.splice(0..0, fresh);
}

/// Slices of the active list for one iteration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IterationPlan {
    /// Maximal runs sharing a full context, in list order.
    pub groups: Vec<(Context, std::ops::Range<usize>)>,
    /// Index range of each tree, A..T.
    pub trees: [std::ops::Range<usize>; SIGMA],
    /// `per_tree[x].c`: base `c` inserted under first context symbol `x`.
    pub per_tree: [Accumulator; SIGMA],
}

pub fn plan_iteration(active: &[ActiveWord], k: u32) -> IterationPlan {
    let mut groups: Vec<(Context, std::ops::Range<usize>)> = Vec::new();
    let mut per_tree = [Accumulator::ZERO; SIGMA];
    for (i, e) in active.iter().enumerate() {
        match groups.last_mut() {
            Some((ctx, range)) if *ctx == e.context => range.end = i + 1,
            _ => groups.push((e.context, i..i + 1)),
        }
        if let Some(code) = e.symbol.code() {
            per_tree[e.context.first(k).code().unwrap() as usize].bump(code);
        }
    }
    let mut trees: [std::ops::Range<usize>; SIGMA] = std::array::from_fn(|_| 0..0);
    let mut start = 0;
    for (x, range) in trees.iter_mut().enumerate() {
        let end = start
            + active[start..].partition_point(|e| e.context.first(k).code().unwrap() as usize <= x);
        *range = start..end;
        start = end;
    }
    IterationPlan {
        groups,
        trees,
        per_tree,
    }
}

/// Where a word that just inserted `c` under tree `tree_symbol` inserts next,
/// relative to the tree of `c`.
///
/// `tree_rank` is the count of `c` in the tree before the insertion point.
/// The `$`-rows of the next iteration sit at the start of the A tree, so
/// words moving into it are shifted by `alpha_next`. Returns `None` for the
/// sentinel, which ends the word.
pub fn next_insert_position(
    tree: &TreeArray,
    tree_symbol: Symbol,
    c: Symbol,
    tree_rank: u64,
    alpha_next: u64,
) -> Option<u64> {
    let code = c.code()?;
    let shift = if code == 0 { alpha_next } else { 0 };
    Some(tree.level1_base(tree_symbol, c) + tree_rank + shift)
}

/// Stable partition by the symbol just inserted; words that finished drop
/// out. `scratch` is reused storage.
pub fn stable_radix_step(active: &mut Vec<ActiveWord>, scratch: &mut Vec<ActiveWord>) {
    let mut counts = [0usize; SIGMA];
    for e in active.iter() {
        if let Some(code) = e.symbol.code() {
            counts[code as usize] += 1;
        }
    }
    let mut starts = [0usize; SIGMA];
    for c in 1..SIGMA {
        starts[c] = starts[c - 1] + counts[c - 1];
    }
    let live = starts[SIGMA - 1] + counts[SIGMA - 1];
    scratch.clear();
    scratch.resize(live, ActiveWord::fresh(0, 0));
    for e in active.iter() {
        if let Some(code) = e.symbol.code() {
            scratch[starts[code as usize]] = *e;
            starts[code as usize] += 1;
        }
    }
    std::mem::swap(active, scratch);
}

/// State visible to an [`Observer`] after each iteration.
pub struct IterationView<'a> {
    pub t: u64,
    pub alpha: u64,
    pub kappa: u32,
    pub tree: &'a TreeArray,
    pub store: &'a BucketStore,
    /// Active list ordered for the next iteration.
    pub active: &'a [ActiveWord],
}

pub trait Observer {
    fn after_iteration(&mut self, view: &IterationView<'_>) -> Result<()>;
}

impl Observer for () {
    fn after_iteration(&mut self, _view: &IterationView<'_>) -> Result<()> {
        Ok(())
    }
}

impl<F: FnMut(&IterationView<'_>) -> Result<()>> Observer for F {
    fn after_iteration(&mut self, view: &IterationView<'_>) -> Result<()> {
        self(view)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BuildReport {
    pub kappa: u32,
    pub buckets: u64,
    pub words: u64,
    pub symbols: u64,
    pub iterations: u64,
    pub bytes_read: u64,
    pub bytes_written: u64,
    pub elapsed: Duration,
}

/// Build the transform in memory.
pub fn build(collection: &WordCollection, config: &Config) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(collection.total_length() as usize);
    build_to_writer(collection, config, &mut out, &mut ())?;
    Ok(out)
}

/// Build the transform and stream it to `out`.
pub fn build_to_writer<W: Write, O: Observer>(
    collection: &WordCollection,
    config: &Config,
    out: W,
    observer: &mut O,
) -> Result<BuildReport> {
    let started = Instant::now();
    let tree = TreeArray::new(config.kappa)?;
    if collection.is_empty() {
        return Err(Error::EmptyCollection);
    }
    if collection.len() > u32::MAX as usize {
        return Err(Error::Consistency(format!(
            "{} words exceed the supported maximum",
            collection.len()
        )));
    }
    advise_kappa(config.kappa, collection.total_length());

    let scratch = match config.backend {
        Backend::External => Some(
            tempfile::Builder::new()
                .prefix("bucketbwt-")
                .tempdir_in(&config.tmp_dir)
                .map_err(|source| Error::File {
                    path: config.tmp_dir.clone(),
                    source,
                })?,
        ),
        Backend::Memory => None,
    };
    let store_config = StoreConfig {
        backend: config.backend,
        dir: scratch
            .as_ref()
            .map(|d| d.path().to_path_buf())
            .unwrap_or_default(),
        buffer_bytes: config.buffer_bytes.max(64),
        encoding: config.encoding,
    };
    let store = BucketStore::new(tree.leaf_count(), store_config)?;

    let threads = config.threads.max(1);
    let pool = if threads > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::Consistency(format!("thread pool: {e}")))?,
        )
    } else {
        None
    };
    let mut run = Run {
        collection,
        kappa: config.kappa,
        k: context_len(config.kappa),
        pool,
        tree,
        store,
    };
    run.iterate(observer)?;

    let symbols = run.store.assemble(out, collection.total_length())?;
    let stats = run.store.stats();
    let report = BuildReport {
        kappa: config.kappa,
        buckets: run.tree.leaf_count(),
        words: collection.len() as u64,
        symbols,
        iterations: collection.max_len() + 1,
        bytes_read: stats.bytes_read(),
        bytes_written: stats.bytes_written(),
        elapsed: started.elapsed(),
    };
    run.store.cleanup();
    drop(scratch);
    info!(
        "built {} symbols from {} words in {:.3?} (kappa {}, {} B read, {} B written)",
        report.symbols,
        report.words,
        report.elapsed,
        report.kappa,
        report.bytes_read,
        report.bytes_written
    );
    Ok(report)
}

fn advise_kappa(kappa: u32, total: u64) {
    if !TESTED_KAPPA.contains(&kappa) {
        warn!("kappa {kappa} is outside the tested range {TESTED_KAPPA:?}");
    }
    let ceiling = 2.0 * (total.max(1) as f64).log(4.0);
    if kappa as f64 > ceiling {
        info!(
            "kappa {kappa} exceeds 2*log4(n) = {ceiling:.1}; most buckets will stay empty"
        );
    }
}

struct Run<'a> {
    collection: &'a WordCollection,
    kappa: u32,
    k: u32,
    /// Present when more than one thread was requested.
    pool: Option<rayon::ThreadPool>,
    tree: TreeArray,
    store: BucketStore,
}

impl Run<'_> {
    fn iterate<O: Observer>(&mut self, observer: &mut O) -> Result<()> {
        let collection = self.collection;
        let schedule = StartSchedule::new(collection);
        let mut sb = StartBitvector::new(collection.len());
        let mut active: Vec<ActiveWord> = Vec::new();
        let mut scratch: Vec<ActiveWord> = Vec::new();
        let max_len = collection.max_len();

        for t in 0..=max_len {
            activate_new_words(&mut sb, schedule.at(t), &mut active);
            let alpha = active.len() as u64;
            if alpha != sb.count_ones() {
                return Err(Error::Consistency(format!(
                    "iteration {t}: {alpha} active words but {} started",
                    sb.count_ones()
                )));
            }
            for e in active.iter_mut() {
                e.symbol = collection.symbol_at(e.word as usize, t);
            }
            let plan = plan_iteration(&active, self.k);
            if t == max_len {
                self.insert_sentinels(&active, &plan)?;
            } else {
                let alpha_next = alpha + schedule.at(t + 1).len() as u64;
                self.insert_bases(&mut active, &plan, alpha_next)?;
            }
            stable_radix_step(&mut active, &mut scratch);
            debug!("iteration {t}: alpha {alpha}");
            observer.after_iteration(&IterationView {
                t,
                alpha,
                kappa: self.kappa,
                tree: &self.tree,
                store: &self.store,
                active: &active,
            })?;
        }
        if !active.is_empty() {
            return Err(Error::Consistency(format!(
                "{} words still active after the last iteration",
                active.len()
            )));
        }
        Ok(())
    }

    fn insert_bases(
        &mut self,
        active: &mut [ActiveWord],
        plan: &IterationPlan,
        alpha_next: u64,
    ) -> Result<()> {
        self.tree.update_prefix_totals(&plan.per_tree);
        match self.pool.take() {
            Some(pool) => {
                let result = pool.install(|| self.splice_all(active, plan, true));
                self.pool = Some(pool);
                result?;
            }
            None => self.splice_all(active, plan, false)?,
        }

        let k = self.k;
        for e in active.iter_mut() {
            let tree_symbol = e.context.first(k);
            let c = e.symbol;
            e.position = next_insert_position(&self.tree, tree_symbol, c, e.rank, alpha_next)
                .expect("bases only in this pass");
            e.context = e.context.shift_in(c.code().unwrap(), k);
        }
        Ok(())
    }

    /// Route every entry to its leaf and merge all batches.
    fn splice_all(
        &mut self,
        active: &mut [ActiveWord],
        plan: &IterationPlan,
        parallel: bool,
    ) -> Result<()> {
        let mut jobs: Vec<(u64, Accumulator, std::ops::Range<usize>)> = Vec::new();
        for (x, range) in plan.trees.iter().enumerate() {
            let groups = self.tree.descend(
                Symbol::from_code(x as u8),
                &active[range.clone()],
                parallel,
            );
            for g in groups {
                let r = range.start + g.range.start..range.start + g.range.end;
                jobs.push((g.leaf, g.acc, r));
            }
        }

        // Jobs tile the active list in order, so it can be carved up directly.
        let mut rest: &mut [ActiveWord] = active;
        let mut consumed = 0;
        let mut batches = Vec::with_capacity(jobs.len());
        for (leaf, acc, range) in &jobs {
            if range.start != consumed {
                return Err(Error::Consistency(format!(
                    "leaf groups leave a gap at entry {consumed}"
                )));
            }
            let (head, tail) = std::mem::take(&mut rest).split_at_mut(range.len());
            batches.push((*leaf, *acc, head));
            rest = tail;
            consumed = range.end;
        }
        self.store.merge_many(batches, parallel)
    }

    /// Sentinels are not tracked by the counters, so each bucket's position
    /// counter also has to skip the sentinels placed earlier in its tree.
    fn insert_sentinels(&mut self, active: &[ActiveWord], plan: &IterationPlan) -> Result<()> {
        for (x, range) in plan.trees.iter().enumerate() {
            let slice = &active[range.clone()];
            let groups = self
                .tree
                .descend(Symbol::from_code(x as u8), slice, false);
            for g in groups {
                let base = local_position_base(&g.acc) + g.range.start as u64;
                let positions: Vec<u64> = slice[g.range.clone()].iter().map(|e| e.position).collect();
                self.store.insert_sentinels(g.leaf, base, &positions)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::naive_bwt;
    use proptest::prelude::*;

    fn coll(words: &[&str]) -> WordCollection {
        WordCollection::from_words(words).unwrap()
    }

    fn entry(word: u32, position: u64, context: &[Symbol], symbol: Symbol, k: u32) -> ActiveWord {
        ActiveWord {
            word,
            position,
            context: Context::from_symbols(context, k),
            symbol,
            rank: 0,
        }
    }

    #[test]
    fn tiny_collections() {
        assert_eq!(build(&coll(&["A"]), &Config::in_memory(3)).unwrap(), b"A$");
        assert_eq!(build(&coll(&["AC", "C"]), &Config::in_memory(3)).unwrap(), b"CC$A$");
    }

    #[test]
    fn start_bitvector_fixtures() {
        let mut sb = StartBitvector::new(8);
        for j in [1, 2, 4, 6] {
            sb.set(j);
        }
        assert_eq!(sb.rank(7), 4);

        let mut sb = StartBitvector::new(8);
        for j in [2, 3, 7] {
            sb.set(j);
        }
        assert_eq!(sb.rank(7), 2);

        assert_eq!(StartBitvector::new(8).rank(7), 0);
    }

    #[test]
    fn new_words_prepended_with_ranks_after_all_bits() {
        let mut sb = StartBitvector::new(8);
        sb.set(4);
        let mut active = vec![ActiveWord::fresh(4, 99)];
        activate_new_words(&mut sb, &[1, 6], &mut active);
        let got: Vec<(u32, u64)> = active.iter().map(|e| (e.word, e.position)).collect();
        // Word 6 sees both 1 and 4 before it.
        assert_eq!(got, vec![(1, 0), (6, 2), (4, 99)]);
        assert!(active[..2].iter().all(|e| e.context == Context::PADDING));
    }

    #[test]
    fn next_position_examples() {
        let mut tree = TreeArray::new(4).unwrap();
        // Three C in the A tree, five A over A and C trees.
        tree.set_node(0, Accumulator::new([4, 3, 0, 0]));
        tree.set_node(1, Accumulator::new([5, 6, 0, 1]));
        assert_eq!(next_insert_position(&tree, Symbol::C, Symbol::C, 0, 5), Some(3));
        assert_eq!(next_insert_position(&tree, Symbol::C, Symbol::C, 1, 5), Some(4));
        assert_eq!(next_insert_position(&tree, Symbol::A, Symbol::A, 0, 5), Some(5));
        assert_eq!(next_insert_position(&tree, Symbol::G, Symbol::T, 2, 5), Some(3));
        assert_eq!(next_insert_position(&tree, Symbol::A, Symbol::Sentinel, 0, 5), None);
    }

    #[test]
    fn two_words_through_a_cg_bucket() {
        // Four C inserted: two under context AT into the A tree and two under
        // context CG into the C tree, at positions 1 and 2. One C was already
        // in the A tree, and the C tree's left-most leaf (CA) holds a T.
        let kappa = 4;
        let k = context_len(kappa);
        let mut tree = TreeArray::new(kappa).unwrap();
        tree.set_node(0, Accumulator::new([0, 1, 0, 0]));
        tree.set_node(1, Accumulator::new([0, 1, 0, 1]));
        tree.set_node(2, Accumulator::new([0, 1, 0, 1]));
        tree.set_node(3, Accumulator::new([0, 1, 0, 1]));
        tree.set_node(5, Accumulator::new([0, 0, 0, 1]));
        tree.set_node(10, Accumulator::new([0, 0, 0, 1]));
        let mut store = BucketStore::new(tree.leaf_count(), StoreConfig::memory()).unwrap();
        let ca = Context::from_symbols(&[Symbol::C, Symbol::A], k).leaf_ordinal(kappa);
        let mut seed = [entry(9, 0, &[Symbol::C, Symbol::A], Symbol::T, k)];
        store.merge_insert(ca, Accumulator::ZERO, &mut seed).unwrap();

        let mut active = vec![
            entry(4, 0, &[Symbol::A, Symbol::T], Symbol::C, k),
            entry(5, 1, &[Symbol::A, Symbol::T], Symbol::C, k),
            entry(2, 1, &[Symbol::C, Symbol::G], Symbol::C, k),
            entry(3, 2, &[Symbol::C, Symbol::G], Symbol::C, k),
        ];
        let plan = plan_iteration(&active, k);
        assert_eq!(plan.trees[1], 2..4);
        tree.update_prefix_totals(&plan.per_tree);
        assert_eq!(tree.node(0).get(Symbol::C), 3);
        for x in 1..4 {
            assert_eq!(tree.node(x).get(Symbol::C), 5);
        }
        let cg = &mut active[2..];
        let groups = tree.descend(Symbol::C, cg, false);
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].leaf, bucket_id_cg(kappa));
        assert_eq!(groups[0].acc, Accumulator::new([0, 0, 0, 1]));
        assert_eq!(tree.node(11).get(Symbol::C), 2);
        assert_eq!(local_position_base(&groups[0].acc), 1);
        store.merge_insert(groups[0].leaf, groups[0].acc, cg).unwrap();
        assert_eq!((cg[0].rank, cg[1].rank), (0, 1));
        let next: Vec<u64> = cg
            .iter()
            .map(|e| next_insert_position(&tree, Symbol::C, e.symbol, e.rank, 4).unwrap())
            .collect();
        assert_eq!(next, vec![3, 4]);
    }

    fn bucket_id_cg(kappa: u32) -> u64 {
        crate::tree::bucket_id(&[Symbol::C, Symbol::G], kappa)
    }

    #[test]
    fn plan_groups_follow_contexts() {
        let k = 2;
        let active = vec![
            entry(0, 0, &[Symbol::A, Symbol::A], Symbol::C, k),
            entry(1, 1, &[Symbol::A, Symbol::A], Symbol::G, k),
            entry(2, 0, &[Symbol::G, Symbol::C], Symbol::Sentinel, k),
            entry(3, 1, &[Symbol::G, Symbol::T], Symbol::A, k),
        ];
        let plan = plan_iteration(&active, k);
        assert_eq!(plan.groups.len(), 3);
        assert_eq!(plan.groups[0].1, 0..2);
        assert_eq!(plan.trees, [0..2, 2..2, 2..4, 4..4]);
        assert_eq!(plan.per_tree[0], Accumulator::new([0, 1, 1, 0]));
        assert_eq!(plan.per_tree[2], Accumulator::new([1, 0, 0, 0]));
    }

    proptest! {
        #[test]
        fn rank_matches_popcount(bits in proptest::collection::vec(any::<bool>(), 1..300)) {
            let mut sb = StartBitvector::new(bits.len());
            for (j, &b) in bits.iter().enumerate() {
                if b { sb.set(j); }
            }
            for j in 0..bits.len() {
                let expected = bits[..j].iter().filter(|&&b| b).count() as u64;
                prop_assert_eq!(sb.rank(j), expected);
                prop_assert_eq!(sb.get(j), bits[j]);
            }
        }

        #[test]
        fn radix_step_is_a_stable_sort(symbols in proptest::collection::vec(0u8..5, 0..200)) {
            let mut active: Vec<ActiveWord> = symbols
                .iter()
                .enumerate()
                .map(|(i, &s)| ActiveWord {
                    symbol: if s == 4 { Symbol::Sentinel } else { Symbol::from_code(s) },
                    ..ActiveWord::fresh(i as u32, 0)
                })
                .collect();
            let mut expected: Vec<ActiveWord> = active
                .iter()
                .filter(|e| e.symbol.is_base())
                .copied()
                .collect();
            expected.sort_by_key(|e| e.symbol);
            let mut scratch = Vec::new();
            stable_radix_step(&mut active, &mut scratch);
            prop_assert_eq!(active, expected);
        }

        #[test]
        fn matches_suffix_sort(
            words in proptest::collection::vec("[ACGT]{1,12}", 1..8),
            kappa in 3u32..7,
        ) {
            let c = WordCollection::from_words(&words).unwrap();
            prop_assert_eq!(build(&c, &Config::in_memory(kappa)).unwrap(), naive_bwt(&c));
        }
    }
}

//! Level-k bucket storage.
//!
//! Every bucket owns two storage slots. An iteration that inserts into the
//! bucket streams the current slot into the other one, splicing the new
//! symbols in at their local positions, and then swaps the roles of the two
//! slots. Buckets that receive nothing are not touched at all.
//!
//! Slots are either files under a temporary directory (2-bit packed, or one
//! ASCII byte per symbol for debugging) or in-memory vectors holding one
//! 2-bit code per byte.
//!
//! Sentinels are only inserted in the last iteration. They are kept as a
//! sorted list of local positions per bucket and spliced in on assembly.

use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use crate::alphabet::Symbol;
use crate::error::{Error, Result};
use crate::tree::Accumulator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    #[default]
    External,
    Memory,
}

/// On-disk symbol layout of the external backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Encoding {
    /// Four symbols per byte, first symbol in the low bits.
    #[default]
    Packed,
    /// One ASCII letter per symbol.
    Bytes,
}

#[derive(Debug, Clone)]
pub struct StoreConfig {
    pub backend: Backend,
    /// Directory the bucket files are created in (external backend only).
    pub dir: PathBuf,
    /// Buffer size of each reader and writer.
    pub buffer_bytes: usize,
    pub encoding: Encoding,
}

impl StoreConfig {
    pub fn memory() -> StoreConfig {
        StoreConfig {
            backend: Backend::Memory,
            dir: PathBuf::new(),
            buffer_bytes: 1 << 20,
            encoding: Encoding::Packed,
        }
    }
}

/// One symbol to be spliced into a bucket.
pub trait BatchItem {
    /// Position in the coordinates of the enclosing tree.
    fn position(&self) -> u64;
    fn symbol(&self) -> Symbol;
    /// Receives `R_D.c + rank-k`: the number of `c` in the tree before this
    /// symbol, where `c` is the symbol being inserted.
    fn set_rank(&mut self, rank: u64);
}

/// The position counter of a bucket starts at the number of symbols in the
/// buckets before it within the same tree.
#[inline]
pub fn local_position_base(acc: &Accumulator) -> u64 {
    acc.total()
}

/// I/O bookkeeping shared by all buckets.
#[derive(Debug, Default)]
pub struct IoStats {
    bytes_read: AtomicU64,
    bytes_written: AtomicU64,
}

impl IoStats {
    pub fn bytes_read(&self) -> u64 {
        self.bytes_read.load(Ordering::Relaxed)
    }
    pub fn bytes_written(&self) -> u64 {
        self.bytes_written.load(Ordering::Relaxed)
    }
    fn add(&self, read: u64, written: u64) {
        self.bytes_read.fetch_add(read, Ordering::Relaxed);
        self.bytes_written.fetch_add(written, Ordering::Relaxed);
    }
}

#[derive(Debug)]
enum Slots {
    Memory([Vec<u8>; 2]),
    /// Files are created on the first non-empty merge.
    External,
}

#[derive(Debug)]
pub struct Bucket {
    ordinal: u64,
    /// Number of bases (sentinels excluded).
    size: u64,
    /// Index of the slot written next; the other one holds the content.
    active: u8,
    flips: u64,
    bytes_read: u64,
    bytes_written: u64,
    sentinels: Vec<u64>,
    slots: Slots,
}

impl Bucket {
    fn new(ordinal: u64, backend: Backend) -> Bucket {
        Bucket {
            ordinal,
            size: 0,
            active: 0,
            flips: 0,
            bytes_read: 0,
            bytes_written: 0,
            sentinels: Vec::new(),
            slots: match backend {
                Backend::Memory => Slots::Memory([Vec::new(), Vec::new()]),
                Backend::External => Slots::External,
            },
        }
    }

    pub fn ordinal(&self) -> u64 {
        self.ordinal
    }

    /// Bases currently stored.
    pub fn size(&self) -> u64 {
        self.size
    }

    /// Size including spliced sentinels.
    pub fn len_with_sentinels(&self) -> u64 {
        self.size + self.sentinels.len() as u64
    }

    pub fn active_slot(&self) -> u8 {
        self.active
    }

    /// How many times the slots swapped roles.
    pub fn flips(&self) -> u64 {
        self.flips
    }

    pub fn io_bytes(&self) -> (u64, u64) {
        (self.bytes_read, self.bytes_written)
    }

    pub fn sentinel_positions(&self) -> &[u64] {
        &self.sentinels
    }
}

pub fn bucket_path(dir: &Path, ordinal: u64, slot: u8) -> PathBuf {
    dir.join(format!("bucket_{ordinal}_{slot}.bin"))
}

pub struct BucketStore {
    config: StoreConfig,
    buckets: Vec<Bucket>,
    stats: IoStats,
}

impl std::fmt::Debug for BucketStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BucketStore")
            .field("config", &self.config)
            .field("buckets", &self.buckets.len())
            .finish()
    }
}

impl BucketStore {
    /// A store with `count` empty buckets.
    pub fn new(count: u64, config: StoreConfig) -> Result<BucketStore> {
        if config.backend == Backend::External {
            fs::create_dir_all(&config.dir).map_err(|source| Error::File {
                path: config.dir.clone(),
                source,
            })?;
        }
        let buckets = (0..count).map(|i| Bucket::new(i, config.backend)).collect();
        Ok(BucketStore {
            config,
            buckets,
            stats: IoStats::default(),
        })
    }

    pub fn config(&self) -> &StoreConfig {
        &self.config
    }

    pub fn bucket(&self, ordinal: u64) -> &Bucket {
        &self.buckets[ordinal as usize]
    }

    pub fn buckets(&self) -> &[Bucket] {
        &self.buckets
    }

    pub fn stats(&self) -> &IoStats {
        &self.stats
    }

    /// Bases stored over all buckets.
    pub fn total_size(&self) -> u64 {
        self.buckets.iter().map(|b| b.size).sum()
    }

    /// Splice a batch into one bucket. See [`BucketStore::merge_many`].
    pub fn merge_insert<E: BatchItem>(
        &mut self,
        ordinal: u64,
        acc: Accumulator,
        items: &mut [E],
    ) -> Result<()> {
        let bucket = &mut self.buckets[ordinal as usize];
        merge_into(&self.config, &self.stats, bucket, acc, items)
    }

    /// Splice batches into several distinct buckets, in parallel on the
    /// current rayon pool when `parallel` is set.
    ///
    /// Each job is `(leaf ordinal, accumulator, items)`; jobs must be sorted
    /// by strictly increasing ordinal. Items are sorted by position; the
    /// first item's position is at least `local_position_base(acc)`. Each
    /// item's `set_rank` is called just before its symbol is written, with
    /// the running count of its symbol (`acc.c` plus everything of that
    /// symbol copied or inserted so far in this bucket).
    pub fn merge_many<E: BatchItem + Send>(
        &mut self,
        jobs: Vec<(u64, Accumulator, &mut [E])>,
        parallel: bool,
    ) -> Result<()> {
        let config = &self.config;
        let stats = &self.stats;
        let paired = pair_with_buckets(&mut self.buckets, jobs)?;
        if parallel {
            paired
                .into_par_iter()
                .try_for_each(|(bucket, acc, items)| merge_into(config, stats, bucket, acc, items))
        } else {
            paired
                .into_iter()
                .try_for_each(|(bucket, acc, items)| merge_into(config, stats, bucket, acc, items))
        }
    }

    /// Record sentinel insertions of the final iteration. Positions are in
    /// tree coordinates like merge items; `base` is the bucket's position
    /// counter start.
    pub fn insert_sentinels(&mut self, ordinal: u64, base: u64, positions: &[u64]) -> Result<()> {
        let bucket = &mut self.buckets[ordinal as usize];
        for &p in positions {
            let local = p.checked_sub(base).ok_or_else(|| {
                Error::Consistency(format!(
                    "bucket {ordinal}: sentinel position {p} below bucket start {base}"
                ))
            })?;
            if let Some(&last) = bucket.sentinels.last() {
                if local <= last {
                    return Err(Error::Consistency(format!(
                        "bucket {ordinal}: sentinel positions not increasing"
                    )));
                }
            }
            if local > bucket.len_with_sentinels() {
                return Err(Error::Consistency(format!(
                    "bucket {ordinal}: sentinel position {local} beyond length {}",
                    bucket.len_with_sentinels()
                )));
            }
            bucket.sentinels.push(local);
        }
        Ok(())
    }

    /// Per-base histogram of one bucket, read back from storage.
    pub fn histogram(&self, ordinal: u64) -> Result<Accumulator> {
        let mut acc = Accumulator::ZERO;
        self.for_each_code(ordinal, |code| acc.bump(code))?;
        Ok(acc)
    }

    /// Bucket content as ASCII, sentinels included.
    pub fn read_bucket(&self, ordinal: u64) -> Result<Vec<u8>> {
        let bucket = &self.buckets[ordinal as usize];
        let mut out = Vec::with_capacity(bucket.len_with_sentinels() as usize);
        self.write_bucket(ordinal, &mut out)?;
        Ok(out)
    }

    /// Concatenate all buckets in leaf order; returns the bytes written.
    pub fn assemble<W: Write>(&self, mut out: W, expected_len: u64) -> Result<u64> {
        let total: u64 = self.buckets.iter().map(|b| b.len_with_sentinels()).sum();
        if total != expected_len {
            return Err(Error::Consistency(format!(
                "buckets hold {total} symbols, expected {expected_len}"
            )));
        }
        for b in &self.buckets {
            self.write_bucket(b.ordinal, &mut out)?;
        }
        out.flush()?;
        Ok(total)
    }

    fn write_bucket<W: Write>(&self, ordinal: u64, out: &mut W) -> Result<()> {
        let bucket = &self.buckets[ordinal as usize];
        let mut sentinels = bucket.sentinels.iter().peekable();
        let mut pos = 0u64;
        let mut buf = Vec::with_capacity(8192);
        let mut push = |byte: u8, buf: &mut Vec<u8>| -> io::Result<()> {
            buf.push(byte);
            if buf.len() == buf.capacity() {
                out.write_all(buf)?;
                buf.clear();
            }
            Ok(())
        };
        let mut err = None;
        self.for_each_code(ordinal, |code| {
            if err.is_some() {
                return;
            }
            while sentinels.peek() == Some(&&pos) {
                sentinels.next();
                if let Err(e) = push(b'$', &mut buf) {
                    err = Some(e);
                }
                pos += 1;
            }
            if let Err(e) = push(Symbol::from_code(code).to_ascii(), &mut buf) {
                err = Some(e);
            }
            pos += 1;
        })?;
        if let Some(e) = err {
            return Err(e.into());
        }
        for _ in sentinels {
            push(b'$', &mut buf)?;
        }
        out.write_all(&buf)?;
        Ok(())
    }

    fn for_each_code<F: FnMut(u8)>(&self, ordinal: u64, mut f: F) -> Result<()> {
        let bucket = &self.buckets[ordinal as usize];
        if bucket.size == 0 {
            return Ok(());
        }
        let content_slot = 1 - bucket.active;
        match &bucket.slots {
            Slots::Memory(slots) => {
                slots[content_slot as usize].iter().for_each(|&c| f(c));
                Ok(())
            }
            Slots::External => {
                let path = bucket_path(&self.config.dir, ordinal, content_slot);
                let file = File::open(&path).map_err(|source| Error::File { path, source })?;
                let mut reader = SymbolReader::new(file, self.config.buffer_bytes, self.config.encoding);
                for _ in 0..bucket.size {
                    f(reader.next_code().map_err(|e| bucket_err(ordinal, e))?);
                }
                Ok(())
            }
        }
    }

    /// Remove bucket files. Called on drop as well.
    pub fn cleanup(&mut self) {
        if self.config.backend != Backend::External {
            return;
        }
        for b in &self.buckets {
            if b.flips > 0 {
                for slot in 0..2 {
                    let _ = fs::remove_file(bucket_path(&self.config.dir, b.ordinal, slot));
                }
            }
        }
    }
}

impl Drop for BucketStore {
    fn drop(&mut self) {
        self.cleanup();
    }
}

fn bucket_err(ordinal: u64, source: io::Error) -> Error {
    Error::BucketIo {
        bucket: ordinal,
        source,
    }
}

type PairedJob<'b, 'e, E> = (&'b mut Bucket, Accumulator, &'e mut [E]);

fn pair_with_buckets<'b, 'e, E>(
    buckets: &'b mut [Bucket],
    jobs: Vec<(u64, Accumulator, &'e mut [E])>,
) -> Result<Vec<PairedJob<'b, 'e, E>>> {
    let mut out = Vec::with_capacity(jobs.len());
    let mut rest = buckets;
    let mut consumed = 0u64;
    for (ordinal, acc, items) in jobs {
        if ordinal < consumed || ordinal as usize >= consumed as usize + rest.len() {
            return Err(Error::Consistency(format!(
                "merge jobs out of order or out of range at bucket {ordinal}"
            )));
        }
        let skip = (ordinal - consumed) as usize;
        let (_, tail) = std::mem::take(&mut rest).split_at_mut(skip);
        let (head, tail) = tail.split_at_mut(1);
        out.push((&mut head[0], acc, items));
        rest = tail;
        consumed = ordinal + 1;
    }
    Ok(out)
}

/// Source and sink of one merge pass.
trait MergeStream {
    /// Move `n` symbols from the old content to the new one, counting them.
    fn copy_counted(&mut self, n: u64, counts: &mut Accumulator) -> io::Result<()>;
    /// Move `n` symbols without counting.
    fn copy_plain(&mut self, n: u64) -> io::Result<()>;
    fn emit(&mut self, code: u8) -> io::Result<()>;
}

fn merge_into<E: BatchItem>(
    config: &StoreConfig,
    stats: &IoStats,
    bucket: &mut Bucket,
    acc: Accumulator,
    items: &mut [E],
) -> Result<()> {
    if items.is_empty() {
        return Ok(());
    }
    let ordinal = bucket.ordinal;
    let old_len = bucket.size;
    let new_len = old_len + items.len() as u64;
    let read_slot = (1 - bucket.active) as usize;
    let write_slot = bucket.active as usize;

    let (read, written) = match &mut bucket.slots {
        Slots::Memory(slots) => {
            let [a, b] = slots;
            let (src, dst) = if read_slot == 0 { (&*a, b) } else { (&*b, a) };
            dst.clear();
            dst.reserve(new_len as usize);
            let mut stream = MemoryStream { src, at: 0, dst };
            splice(&mut stream, ordinal, old_len, acc, items)?;
            (old_len, new_len)
        }
        Slots::External => {
            let in_path = bucket_path(&config.dir, ordinal, read_slot as u8);
            let out_path = bucket_path(&config.dir, ordinal, write_slot as u8);
            let reader = if old_len > 0 {
                let f = File::open(&in_path).map_err(|e| bucket_err(ordinal, e))?;
                Some(SymbolReader::new(f, config.buffer_bytes, config.encoding))
            } else {
                None
            };
            let f = File::create(&out_path).map_err(|e| bucket_err(ordinal, e))?;
            let writer = SymbolWriter::new(f, config.buffer_bytes, config.encoding);
            let mut stream = FileStream { reader, writer };
            splice(&mut stream, ordinal, old_len, acc, items)?;
            let written = stream.writer.finish().map_err(|e| bucket_err(ordinal, e))?;
            let read = stream.reader.map(|r| r.bytes_consumed()).unwrap_or(0);
            (read, written)
        }
    };

    bucket.size = new_len;
    bucket.active ^= 1;
    bucket.flips += 1;
    bucket.bytes_read += read;
    bucket.bytes_written += written;
    stats.add(read, written);
    Ok(())
}

fn splice<S: MergeStream, E: BatchItem>(
    stream: &mut S,
    ordinal: u64,
    old_len: u64,
    mut acc: Accumulator,
    items: &mut [E],
) -> Result<()> {
    let mut cursor = local_position_base(&acc);
    let mut consumed = 0u64;
    for item in items.iter_mut() {
        let pos = item.position();
        if pos < cursor {
            return Err(Error::Consistency(format!(
                "bucket {ordinal}: insert position {pos} precedes cursor {cursor}"
            )));
        }
        let gap = pos - cursor;
        if consumed + gap > old_len {
            return Err(Error::Consistency(format!(
                "bucket {ordinal}: insert position {pos} beyond stream end"
            )));
        }
        stream
            .copy_counted(gap, &mut acc)
            .map_err(|e| bucket_err(ordinal, e))?;
        consumed += gap;
        cursor += gap;
        let code = item.symbol().code().ok_or_else(|| {
            Error::Consistency(format!("bucket {ordinal}: sentinel in a merge batch"))
        })?;
        item.set_rank(acc.counts[code as usize]);
        stream.emit(code).map_err(|e| bucket_err(ordinal, e))?;
        acc.bump(code);
        cursor += 1;
    }
    stream
        .copy_plain(old_len - consumed)
        .map_err(|e| bucket_err(ordinal, e))?;
    Ok(())
}

/// Add the histogram of a slice of 2-bit codes (one per byte).
pub(crate) fn count_codes(codes: &[u8], acc: &mut Accumulator) {
    const LOW: u64 = 0x0101_0101_0101_0101;
    let mut chunks = codes.chunks_exact(8);
    let (mut c1, mut c2, mut c3) = (0u64, 0u64, 0u64);
    for chunk in &mut chunks {
        let x = u64::from_le_bytes(chunk.try_into().unwrap());
        let lo = x & LOW;
        let hi = (x >> 1) & LOW;
        c1 += (lo & !hi).count_ones() as u64;
        c2 += (hi & !lo).count_ones() as u64;
        c3 += (lo & hi).count_ones() as u64;
    }
    for &c in chunks.remainder() {
        match c {
            1 => c1 += 1,
            2 => c2 += 1,
            3 => c3 += 1,
            _ => {}
        }
    }
    acc.counts[0] += codes.len() as u64 - c1 - c2 - c3;
    acc.counts[1] += c1;
    acc.counts[2] += c2;
    acc.counts[3] += c3;
}

struct MemoryStream<'a> {
    src: &'a [u8],
    at: usize,
    dst: &'a mut Vec<u8>,
}

impl MergeStream for MemoryStream<'_> {
    fn copy_counted(&mut self, n: u64, counts: &mut Accumulator) -> io::Result<()> {
        let run = &self.src[self.at..self.at + n as usize];
        count_codes(run, counts);
        self.dst.extend_from_slice(run);
        self.at += n as usize;
        Ok(())
    }

    fn copy_plain(&mut self, n: u64) -> io::Result<()> {
        self.dst
            .extend_from_slice(&self.src[self.at..self.at + n as usize]);
        self.at += n as usize;
        Ok(())
    }

    fn emit(&mut self, code: u8) -> io::Result<()> {
        self.dst.push(code);
        Ok(())
    }
}

struct FileStream {
    reader: Option<SymbolReader<File>>,
    writer: SymbolWriter<File>,
}

impl MergeStream for FileStream {
    fn copy_counted(&mut self, n: u64, counts: &mut Accumulator) -> io::Result<()> {
        if n == 0 {
            return Ok(());
        }
        let reader = self.reader.as_mut().expect("copy from an empty bucket");
        for _ in 0..n {
            let c = reader.next_code()?;
            counts.bump(c);
            self.writer.push(c)?;
        }
        Ok(())
    }

    fn copy_plain(&mut self, n: u64) -> io::Result<()> {
        if n == 0 {
            return Ok(());
        }
        let reader = self.reader.as_mut().expect("copy from an empty bucket");
        reader.copy_into(n, &mut self.writer)
    }

    fn emit(&mut self, code: u8) -> io::Result<()> {
        self.writer.push(code)
    }
}

/// Buffered reader of 2-bit codes from a packed or byte-per-symbol stream.
pub(crate) struct SymbolReader<R: Read> {
    inner: BufReader<R>,
    encoding: Encoding,
    current: u8,
    /// Symbols left in `current` (packed encoding).
    left: u8,
    consumed: u64,
}

impl<R: Read> SymbolReader<R> {
    pub(crate) fn new(inner: R, buffer_bytes: usize, encoding: Encoding) -> Self {
        SymbolReader {
            inner: BufReader::with_capacity(buffer_bytes.max(64), inner),
            encoding,
            current: 0,
            left: 0,
            consumed: 0,
        }
    }

    fn next_byte(&mut self) -> io::Result<u8> {
        let mut b = [0u8; 1];
        self.inner.read_exact(&mut b)?;
        self.consumed += 1;
        Ok(b[0])
    }

    #[inline]
    pub(crate) fn next_code(&mut self) -> io::Result<u8> {
        match self.encoding {
            Encoding::Packed => {
                if self.left == 0 {
                    self.current = self.next_byte()?;
                    self.left = 4;
                }
                let c = self.current & 3;
                self.current >>= 2;
                self.left -= 1;
                Ok(c)
            }
            Encoding::Bytes => {
                let b = self.next_byte()?;
                crate::alphabet::base_code(b).ok_or_else(|| {
                    io::Error::new(io::ErrorKind::InvalidData, format!("bad symbol byte {b:#x}"))
                })
            }
        }
    }

    /// Copy `n` symbols into `writer`, taking whole bytes when both sides
    /// are byte aligned.
    fn copy_into<W: Write>(&mut self, mut n: u64, writer: &mut SymbolWriter<W>) -> io::Result<()> {
        let in_phase = (4 - self.left) % 4 == writer.filled;
        if self.encoding == Encoding::Packed && writer.encoding == Encoding::Packed && in_phase {
            while n > 0 && self.left != 0 {
                writer.push(self.next_code()?)?;
                n -= 1;
            }
            while n >= 4 {
                let buf = self.inner.fill_buf_checked()?;
                let whole = (buf.len() as u64).min(n / 4) as usize;
                writer.inner.write_all(&buf[..whole])?;
                writer.bytes += whole as u64;
                self.inner.consume(whole);
                self.consumed += whole as u64;
                n -= 4 * whole as u64;
            }
        }
        for _ in 0..n {
            writer.push(self.next_code()?)?;
        }
        Ok(())
    }

    pub(crate) fn bytes_consumed(&self) -> u64 {
        self.consumed
    }
}

trait FillBufChecked {
    fn fill_buf_checked(&mut self) -> io::Result<&[u8]>;
}

impl<R: Read> FillBufChecked for BufReader<R> {
    fn fill_buf_checked(&mut self) -> io::Result<&[u8]> {
        let buf = self.fill_buf()?;
        if buf.is_empty() {
            return Err(io::ErrorKind::UnexpectedEof.into());
        }
        Ok(buf)
    }
}

pub(crate) struct SymbolWriter<W: Write> {
    inner: BufWriter<W>,
    encoding: Encoding,
    current: u8,
    filled: u8,
    bytes: u64,
}

impl<W: Write> SymbolWriter<W> {
    pub(crate) fn new(inner: W, buffer_bytes: usize, encoding: Encoding) -> Self {
        SymbolWriter {
            inner: BufWriter::with_capacity(buffer_bytes.max(64), inner),
            encoding,
            current: 0,
            filled: 0,
            bytes: 0,
        }
    }

    #[inline]
    pub(crate) fn push(&mut self, code: u8) -> io::Result<()> {
        match self.encoding {
            Encoding::Packed => {
                self.current |= code << (2 * self.filled);
                self.filled += 1;
                if self.filled == 4 {
                    self.inner.write_all(&[self.current])?;
                    self.bytes += 1;
                    self.current = 0;
                    self.filled = 0;
                }
            }
            Encoding::Bytes => {
                self.inner.write_all(&[Symbol::from_code(code).to_ascii()])?;
                self.bytes += 1;
            }
        }
        Ok(())
    }

    /// Flush the partial byte and the buffer; returns bytes written.
    pub(crate) fn finish(mut self) -> io::Result<u64> {
        if self.filled > 0 {
            self.inner.write_all(&[self.current])?;
            self.bytes += 1;
        }
        self.inner.flush()?;
        Ok(self.bytes)
    }
}

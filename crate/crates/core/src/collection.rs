//! Input words, ingestion, and the right-aligned reversed view over them.
//!
//! Words are kept 2-bit packed back to back. The view used by construction
//! addresses word `j` at iteration `t` as `S_j[M - 1 - t]`, so the longest
//! words start at iteration 0 and every word delivers its first character at
//! iteration `M - 1`. Iteration `M` yields the sentinel for every word.

use std::io::{BufRead, Write};

use crate::alphabet::{base_code, is_ambiguous, Symbol};
use crate::error::{Error, Result};

/// What to do with IUPAC ambiguity codes (N, R, Y, ...).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AmbiguousHandling {
    /// Delete the character in place. A word that becomes empty is dropped.
    #[default]
    DropChar,
    /// Drop the whole record.
    DropRecord,
    /// Abort with an error.
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InputFormat {
    #[default]
    Fasta,
    Fastq,
    /// One sequence per line; blank lines are ignored.
    RawLines,
}

impl InputFormat {
    /// Guess from the first non-blank byte of the input.
    pub fn detect(first: u8) -> InputFormat {
        match first {
            b'>' | b';' => InputFormat::Fasta,
            b'@' => InputFormat::Fastq,
            _ => InputFormat::RawLines,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct IngestPolicy {
    pub ambiguous: AmbiguousHandling,
    pub format: InputFormat,
}

/// An immutable collection of words over `{A, C, G, T}` in input order.
#[derive(Clone, PartialEq, Eq)]
pub struct WordCollection {
    packed: Vec<u64>,
    /// `offsets[j]..offsets[j + 1]` is the symbol range of word `j`.
    offsets: Vec<u64>,
    max_len: u64,
}

impl std::fmt::Debug for WordCollection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut list = f.debug_list();
        for j in 0..self.len().min(16) {
            list.entry(&String::from_utf8_lossy(&self.word(j)));
        }
        list.finish()
    }
}

impl WordCollection {
    /// Build from ASCII words. Letters are case-insensitive; anything outside
    /// `ACGT` and empty words are rejected.
    pub fn from_words<I, W>(words: I) -> Result<WordCollection>
    where
        I: IntoIterator<Item = W>,
        W: AsRef<[u8]>,
    {
        let mut builder = Builder::default();
        for (idx, w) in words.into_iter().enumerate() {
            let w = w.as_ref();
            if w.is_empty() {
                return Err(Error::Parse {
                    line: idx as u64 + 1,
                    message: "empty word".into(),
                });
            }
            for &b in w {
                let code = base_code(b).ok_or_else(|| Error::Parse {
                    line: idx as u64 + 1,
                    message: format!("invalid base {:?}", b as char),
                })?;
                builder.push(code);
            }
            builder.finish_word();
        }
        builder.build()
    }

    /// Number of words `m`.
    #[inline]
    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Always false for a successfully built collection.
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Length of the longest word, `M`.
    #[inline]
    pub fn max_len(&self) -> u64 {
        self.max_len
    }

    #[inline]
    pub fn word_len(&self, j: usize) -> u64 {
        self.offsets[j + 1] - self.offsets[j]
    }

    /// Total symbols in the transform: all bases plus one sentinel per word.
    pub fn total_length(&self) -> u64 {
        self.offsets[self.len()] + self.len() as u64
    }

    /// Number of bases over all words.
    pub fn base_count(&self) -> u64 {
        self.offsets[self.len()]
    }

    #[inline]
    fn code_at(&self, idx: u64) -> u8 {
        ((self.packed[(idx >> 5) as usize] >> ((idx & 31) * 2)) & 3) as u8
    }

    /// `S_j[i]` as a 2-bit code.
    #[inline]
    pub fn code(&self, j: usize, i: u64) -> u8 {
        debug_assert!(i < self.word_len(j));
        self.code_at(self.offsets[j] + i)
    }

    /// Word `j` as uppercase ASCII.
    pub fn word(&self, j: usize) -> Vec<u8> {
        (0..self.word_len(j))
            .map(|i| Symbol::from_code(self.code(j, i)).to_ascii())
            .collect()
    }

    pub fn words(&self) -> impl Iterator<Item = Vec<u8>> + '_ {
        (0..self.len()).map(|j| self.word(j))
    }

    /// First iteration in which word `j` inserts a symbol: `M - |S_j|`.
    #[inline]
    pub fn start_iteration(&self, j: usize) -> u64 {
        self.max_len - self.word_len(j)
    }

    /// The right-aligned reversed view `W_j[t]`.
    ///
    /// Returns `S_j[M - 1 - t]` for `t < M` and the sentinel for `t = M`.
    /// Asking for an iteration before the word starts is a contract violation.
    #[inline]
    pub fn symbol_at(&self, j: usize, t: u64) -> Symbol {
        debug_assert!(
            t >= self.start_iteration(j) && t <= self.max_len,
            "word {j} is not active at iteration {t}"
        );
        if t == self.max_len {
            Symbol::Sentinel
        } else {
            Symbol::from_code(self.code(j, self.max_len - 1 - t))
        }
    }

    /// Write one word per line; parsing the result with
    /// [`InputFormat::RawLines`] reproduces the collection.
    pub fn write_raw_lines<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for j in 0..self.len() {
            out.write_all(&self.word(j))?;
            out.write_all(b"\n")?;
        }
        out.flush()
    }
}

#[derive(Default)]
struct Builder {
    packed: Vec<u64>,
    offsets: Vec<u64>,
    cursor: u64,
    max_len: u64,
}

impl Builder {
    #[inline]
    fn push(&mut self, code: u8) {
        let slot = (self.cursor >> 5) as usize;
        if slot == self.packed.len() {
            self.packed.push(0);
        }
        self.packed[slot] |= (code as u64) << ((self.cursor & 31) * 2);
        self.cursor += 1;
    }

    fn word_start(&self) -> u64 {
        self.offsets.last().copied().unwrap_or(0)
    }

    fn finish_word(&mut self) {
        if self.offsets.is_empty() {
            self.offsets.push(0);
        }
        let len = self.cursor - self.word_start();
        debug_assert!(len > 0);
        self.max_len = self.max_len.max(len);
        self.offsets.push(self.cursor);
    }

    /// Roll back the partially pushed current word.
    fn discard_word(&mut self) {
        let start = self.word_start();
        while self.cursor > start {
            self.cursor -= 1;
            let slot = (self.cursor >> 5) as usize;
            self.packed[slot] &= !(3u64 << ((self.cursor & 31) * 2));
        }
        self.packed.truncate(((self.cursor + 31) >> 5) as usize);
    }

    fn current_len(&self) -> u64 {
        self.cursor - self.word_start()
    }

    fn build(self) -> Result<WordCollection> {
        if self.offsets.len() < 2 {
            return Err(Error::EmptyCollection);
        }
        Ok(WordCollection {
            packed: self.packed,
            offsets: self.offsets,
            max_len: self.max_len,
        })
    }
}

/// Accumulates one record's sequence lines under an ambiguity policy.
struct RecordSink<'a> {
    builder: &'a mut Builder,
    policy: AmbiguousHandling,
    dropped: bool,
    saw_ambiguous: bool,
    start_line: u64,
}

impl<'a> RecordSink<'a> {
    fn new(builder: &'a mut Builder, policy: AmbiguousHandling, start_line: u64) -> Self {
        RecordSink {
            builder,
            policy,
            dropped: false,
            saw_ambiguous: false,
            start_line,
        }
    }

    fn feed(&mut self, line: &[u8], line_no: u64) -> Result<()> {
        for &b in line {
            if let Some(code) = base_code(b) {
                if !self.dropped {
                    self.builder.push(code);
                }
            } else if is_ambiguous(b) {
                self.saw_ambiguous = true;
                match self.policy {
                    AmbiguousHandling::DropChar => {}
                    AmbiguousHandling::DropRecord => {
                        if !self.dropped {
                            self.builder.discard_word();
                            self.dropped = true;
                        }
                    }
                    AmbiguousHandling::Fail => {
                        return Err(Error::AmbiguousBase {
                            line: line_no,
                            base: b as char,
                        })
                    }
                }
            } else if b.is_ascii_whitespace() {
                continue;
            } else {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("invalid sequence character {:?}", b as char),
                });
            }
        }
        Ok(())
    }

    /// Returns the number of bases kept.
    fn finish(self) -> Result<u64> {
        if self.dropped {
            return Ok(0);
        }
        let len = self.builder.current_len();
        if len == 0 {
            if self.saw_ambiguous {
                // Nothing but ambiguity codes: escalate to dropping the record.
                return Ok(0);
            }
            return Err(Error::Parse {
                line: self.start_line,
                message: "empty sequence".into(),
            });
        }
        self.builder.finish_word();
        Ok(len)
    }
}

fn trim_line_end(line: &[u8]) -> &[u8] {
    let mut end = line.len();
    while end > 0 && (line[end - 1] == b'\n' || line[end - 1] == b'\r') {
        end -= 1;
    }
    &line[..end]
}

fn is_blank(line: &[u8]) -> bool {
    line.iter().all(|b| b.is_ascii_whitespace())
}

/// Parse FASTA, FASTQ, or raw lines into a collection in file order.
///
/// Lowercase bases are accepted. Quality lines of FASTQ are checked for
/// length and otherwise ignored.
pub fn parse_sequences<R: BufRead>(mut reader: R, policy: IngestPolicy) -> Result<WordCollection> {
    let mut builder = Builder::default();
    let mut buf = Vec::new();
    let mut line_no = 0u64;

    let mut next_line = |buf: &mut Vec<u8>, line_no: &mut u64| -> Result<bool> {
        buf.clear();
        let n = reader.read_until(b'\n', buf)?;
        if n == 0 {
            return Ok(false);
        }
        *line_no += 1;
        let trimmed = trim_line_end(buf).len();
        buf.truncate(trimmed);
        Ok(true)
    };

    match policy.format {
        InputFormat::RawLines => {
            while next_line(&mut buf, &mut line_no)? {
                if is_blank(&buf) {
                    continue;
                }
                let mut sink = RecordSink::new(&mut builder, policy.ambiguous, line_no);
                sink.feed(&buf, line_no)?;
                sink.finish()?;
            }
        }
        InputFormat::Fasta => {
            let mut record: Option<RecordSink<'_>> = None;
            while next_line(&mut buf, &mut line_no)? {
                if buf.first() == Some(&b'>') {
                    if let Some(done) = record.take() {
                        done.finish()?;
                    }
                    record = Some(RecordSink::new(&mut builder, policy.ambiguous, line_no));
                } else if buf.first() == Some(&b';') || is_blank(&buf) {
                    continue;
                } else if let Some(open) = record.as_mut() {
                    open.feed(&buf, line_no)?;
                } else {
                    return Err(Error::Parse {
                        line: line_no,
                        message: "sequence data before the first '>' header".into(),
                    });
                }
            }
            if let Some(done) = record {
                done.finish()?;
            }
        }
        InputFormat::Fastq => loop {
            if !next_line(&mut buf, &mut line_no)? {
                break;
            }
            if is_blank(&buf) {
                continue;
            }
            if buf[0] != b'@' {
                return Err(Error::Parse {
                    line: line_no,
                    message: "expected FASTQ header starting with '@'".into(),
                });
            }
            let header_line = line_no;
            if !next_line(&mut buf, &mut line_no)? {
                return Err(Error::Parse {
                    line: header_line,
                    message: "truncated FASTQ record".into(),
                });
            }
            let seq_len = buf.iter().filter(|b| !b.is_ascii_whitespace()).count();
            let mut sink = RecordSink::new(&mut builder, policy.ambiguous, header_line);
            sink.feed(&buf, line_no)?;
            if !next_line(&mut buf, &mut line_no)? || buf.first() != Some(&b'+') {
                return Err(Error::Parse {
                    line: line_no,
                    message: "expected '+' separator line".into(),
                });
            }
            if !next_line(&mut buf, &mut line_no)? {
                return Err(Error::Parse {
                    line: line_no,
                    message: "missing quality line".into(),
                });
            }
            if buf.len() != seq_len {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!(
                        "quality length {} differs from sequence length {}",
                        buf.len(),
                        seq_len
                    ),
                });
            }
            sink.finish()?;
        },
    }
    builder.build()
}

//! Brute-force reference implementations.
//!
//! Everything here follows the textbook definitions directly and is meant
//! for desk-scale inputs: sorting suffixes by full comparison, counting
//! ranks by scanning, and inserting into a flat vector. Nothing in this
//! module uses the tree or bucket machinery.
//!
//! Flattened outputs write every sentinel as `$`. Because rows starting with
//! sentinels sort by word index, the `j`-th `$` in first-column order is
//! `$_j`; `lf` and `invert` rely on that.

use crate::collection::WordCollection;
use crate::error::{Error, Result};

/// One character of `W = S_0 $_0 ... S_{m-1} $_{m-1}`.
///
/// Variant order gives `$_0 < ... < $_{m-1} < A < C < G < T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Letter {
    Sentinel(u32),
    Base(u8),
}

impl Letter {
    pub fn to_ascii(self) -> u8 {
        match self {
            Letter::Sentinel(_) => b'$',
            Letter::Base(b) => b,
        }
    }
}

/// The concatenation with sentinel identities kept.
pub fn sentinel_string(collection: &WordCollection) -> Vec<Letter> {
    let mut w = Vec::with_capacity(collection.total_length() as usize);
    for (j, word) in collection.words().enumerate() {
        w.extend(word.into_iter().map(Letter::Base));
        w.push(Letter::Sentinel(j as u32));
    }
    w
}

/// Last column of the sorted rotations of `W`.
pub fn naive_bwt(collection: &WordCollection) -> Vec<u8> {
    let w = sentinel_string(collection);
    let n = w.len();
    let mut rows: Vec<usize> = (0..n).collect();
    // The final sentinel is unique, so rotation order equals suffix order,
    // and two suffixes always differ before either ends.
    rows.sort_by(|&a, &b| w[a..].cmp(&w[b..]));
    rows.iter().map(|&i| w[(i + n - 1) % n].to_ascii()).collect()
}

/// Occurrences of `c` in `s[0..x]`.
pub fn rank(s: &[u8], x: usize, c: u8) -> u64 {
    s[..x].iter().filter(|&&b| b == c).count() as u64
}

/// Characters of `s` smaller than `c` under `$ < A < C < G < T`
/// (which is also ASCII order).
pub fn count_smaller(s: &[u8], c: u8) -> u64 {
    s.iter().filter(|&&b| b < c).count() as u64
}

/// Last-to-first mapping on a flattened multi-string transform.
pub fn lf(bwt: &[u8], i: usize) -> Result<usize> {
    let c = *bwt
        .get(i)
        .ok_or_else(|| Error::InvalidBwt(format!("position {i} out of range")))?;
    Ok((rank(bwt, i, c) + count_smaller(bwt, c)) as usize)
}

/// Recover the words from a transform with `m` sentinels.
pub fn invert(bwt: &[u8], m: usize) -> Result<WordCollection> {
    let dollars = bwt.iter().filter(|&&b| b == b'$').count();
    if dollars != m || m == 0 {
        return Err(Error::InvalidBwt(format!(
            "expected {m} sentinels, found {dollars}"
        )));
    }
    if let Some(&bad) = bwt.iter().find(|&&b| !b"$ACGT".contains(&b)) {
        return Err(Error::InvalidBwt(format!("unexpected byte {bad:#x}")));
    }
    // Precompute LF for every row; the scans above already bound the input.
    let mut occ = [0u64; 256];
    let mut lf_table = Vec::with_capacity(bwt.len());
    let mut smaller = [0u64; 256];
    {
        let mut hist = [0u64; 256];
        for &b in bwt {
            hist[b as usize] += 1;
        }
        let mut acc = 0;
        for (c, h) in hist.iter().enumerate() {
            smaller[c] = acc;
            acc += h;
        }
    }
    for &b in bwt {
        lf_table.push((occ[b as usize] + smaller[b as usize]) as usize);
        occ[b as usize] += 1;
    }

    let mut words = Vec::with_capacity(m);
    for j in 0..m {
        let mut word = Vec::new();
        let mut row = j;
        loop {
            let c = bwt[row];
            if c == b'$' {
                break;
            }
            word.push(c);
            if word.len() > bwt.len() {
                return Err(Error::InvalidBwt(format!("word {j} does not terminate")));
            }
            row = lf_table[row];
        }
        if word.is_empty() {
            return Err(Error::InvalidBwt(format!("word {j} is empty")));
        }
        word.reverse();
        words.push(word);
    }
    WordCollection::from_words(words)
}

fn context_ordinal(suffix: &[Letter], kappa: u32) -> u64 {
    let k = kappa.div_ceil(2) as usize;
    let mut value = 0u64;
    let mut padded = false;
    for i in 0..k {
        let digit = match suffix.get(i) {
            Some(Letter::Base(b)) if !padded => match b {
                b'A' => 0,
                b'C' => 1,
                b'G' => 2,
                _ => 3,
            },
            _ => {
                padded = true;
                0
            }
        };
        value = value * 4 + digit;
    }
    value >> (2 * k as u32 - kappa)
}

/// Size of every bucket of the final transform, by leaf ordinal.
///
/// Each row's bucket is given by the first `ceil(kappa / 2)` characters of
/// its suffix with the sentinel and everything after it read as `A`.
pub fn bucket_sizes(collection: &WordCollection, kappa: u32) -> Vec<u64> {
    let mut sizes = vec![0u64; 1 << kappa];
    for word in collection.words() {
        let mut letters: Vec<Letter> = word.iter().map(|&b| Letter::Base(b)).collect();
        letters.push(Letter::Sentinel(0));
        for start in 0..letters.len() {
            sizes[context_ordinal(&letters[start..], kappa) as usize] += 1;
        }
    }
    sizes
}

/// `C_W(D)` for every bucket: symbols in all lexicographically smaller
/// buckets.
pub fn bucket_offsets(collection: &WordCollection, kappa: u32) -> Vec<u64> {
    let mut acc = 0;
    bucket_sizes(collection, kappa)
        .into_iter()
        .map(|s| {
            let offset = acc;
            acc += s;
            offset
        })
        .collect()
}

/// `bwt(t)` for `t = 0..=M`, built by inserting every word's symbol at its
/// global position and advancing positions with
/// `P_j(t + 1) = LF(P_j(t)) + alpha(t + 1)`.
pub fn naive_partial_bwts(collection: &WordCollection) -> Vec<Vec<u8>> {
    let m = collection.len();
    let max_len = collection.max_len();
    let active_at = |t: u64| (0..m).filter(|&j| collection.start_iteration(j) <= t).count() as u64;

    let mut bwt: Vec<u8> = Vec::new();
    let mut pos: Vec<Option<u64>> = vec![None; m];
    let mut out = Vec::with_capacity(max_len as usize + 1);
    for t in 0..=max_len {
        let active: Vec<usize> = (0..m)
            .filter(|&j| collection.start_iteration(j) <= t)
            .collect();
        for (rank_in_active, &j) in active.iter().enumerate() {
            if collection.start_iteration(j) == t {
                pos[j] = Some(rank_in_active as u64);
            }
        }
        let mut inserts: Vec<(u64, u8, usize)> = active
            .iter()
            .map(|&j| (pos[j].unwrap(), collection.symbol_at(j, t).to_ascii(), j))
            .collect();
        inserts.sort();
        for &(p, c, _) in &inserts {
            bwt.insert(p as usize, c);
        }
        if t < max_len {
            let alpha_next = active_at(t + 1);
            for &(p, c, j) in &inserts {
                let next = rank(&bwt, p as usize, c) + count_smaller(&bwt, c) + alpha_next;
                pos[j] = Some(next);
            }
        }
        out.push(bwt.clone());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coll(words: &[&str]) -> WordCollection {
        WordCollection::from_words(words).unwrap()
    }

    #[test]
    fn single_word() {
        assert_eq!(naive_bwt(&coll(&["A"])), b"A$");
        assert_eq!(invert(b"A$", 1).unwrap(), coll(&["A"]));
    }

    #[test]
    fn two_words_by_hand() {
        // Suffixes of A C $0 C $1 in order: $0C$1, $1, AC$0C$1, C$0C$1, C$1.
        assert_eq!(naive_bwt(&coll(&["AC", "C"])), b"CC$A$");
    }

    #[test]
    fn rank_and_count_on_partial() {
        let bwt6 = b"CTCCGAACCGCCG";
        assert_eq!(rank(bwt6, 8, b'C'), 4);
        assert_eq!(count_smaller(bwt6, b'C'), 2);
        assert_eq!(rank(bwt6, 0, b'G'), 0);
        // Next global position of the word at position 8 with alpha(7) = 4.
        assert_eq!(rank(bwt6, 8, b'C') + count_smaller(bwt6, b'C') + 4, 10);
    }

    #[test]
    fn lf_walk_reaches_previous_sentinel() {
        let c = coll(&["ACGT", "GGA", "T"]);
        let bwt = naive_bwt(&c);
        for j in 0..c.len() {
            let mut row = j;
            for _ in 0..c.word_len(j) {
                assert_ne!(bwt[row], b'$');
                row = lf(&bwt, row).unwrap();
            }
            assert_eq!(bwt[row], b'$');
        }
        let mut image: Vec<usize> = (0..bwt.len()).map(|i| lf(&bwt, i).unwrap()).collect();
        image.sort();
        assert_eq!(image, (0..bwt.len()).collect::<Vec<_>>());
        assert!(lf(&bwt, bwt.len()).is_err());
    }

    #[test]
    fn invert_rejects_garbage() {
        assert!(invert(b"A$", 2).is_err());
        assert!(invert(b"AN$", 1).is_err());
        // A cycle that never meets the sentinel: row 0 ('$') is fine but the
        // word is empty.
        assert!(invert(b"$A", 1).is_err());
    }

    #[test]
    fn bucket_offsets_partition() {
        let c = coll(&["ACGTTGCA", "CCA", "G"]);
        for kappa in 3..=7 {
            let offsets = bucket_offsets(&c, kappa);
            let sizes = bucket_sizes(&c, kappa);
            assert_eq!(offsets[0], 0);
            assert_eq!(sizes.iter().sum::<u64>(), c.total_length());
            // Offsets slice the naive transform into the expected segments:
            // every row lands in the bucket its suffix prefix dictates.
            assert!(offsets.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn partial_bwts_end_in_the_transform() {
        let c = coll(&["ACGTTGCA", "CCA", "G", "TTAGC"]);
        let partial = naive_partial_bwts(&c);
        assert_eq!(partial.len() as u64, c.max_len() + 1);
        assert_eq!(partial.last().unwrap(), &naive_bwt(&c));
        // Before the last iteration no sentinel is present.
        assert!(partial[..partial.len() - 1]
            .iter()
            .all(|p| !p.contains(&b'$')));
    }
}

#![allow(dead_code)]

use bucketbwt::WordCollection;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const BASES: [u8; 4] = *b"ACGT";

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_word(rng: &mut ChaCha8Rng, len: usize) -> Vec<u8> {
    (0..len).map(|_| BASES[rng.gen_range(0..4)]).collect()
}

/// `m` in `words`, each length in `lens`, uniform bases.
pub fn random_collection(
    rng: &mut ChaCha8Rng,
    words: std::ops::RangeInclusive<usize>,
    lens: std::ops::RangeInclusive<usize>,
) -> WordCollection {
    let m = rng.gen_range(words);
    let list: Vec<Vec<u8>> = (0..m)
        .map(|_| {
            let len = rng.gen_range(lens.clone());
            random_word(rng, len)
        })
        .collect();
    WordCollection::from_words(list).unwrap()
}

/// Like [`random_collection`] but drawn from a tiny alphabet or a short
/// source so that duplicates and long shared suffixes are common.
pub fn repetitive_collection(rng: &mut ChaCha8Rng) -> WordCollection {
    let m = rng.gen_range(1..=25);
    let source_len = rng.gen_range(1..=12);
    let source = random_word(rng, source_len);
    let list: Vec<Vec<u8>> = (0..m)
        .map(|_| {
            let len = rng.gen_range(1..=40);
            let start = rng.gen_range(0..source.len());
            (0..len).map(|i| source[(start + i) % source.len()]).collect()
        })
        .collect();
    WordCollection::from_words(list).unwrap()
}

/// Reads sampled from a random reference with point mutations, plus a few
/// long words, until roughly `total` bases are produced.
pub fn synthetic_corpus(
    seed: u64,
    total: usize,
    lens: std::ops::RangeInclusive<usize>,
    long_words: usize,
    long_len: usize,
) -> WordCollection {
    let mut rng = rng(seed);
    let reference = random_word(&mut rng, 1 << 20);
    let mut list: Vec<Vec<u8>> = Vec::new();
    let mut produced = 0;
    for _ in 0..long_words {
        let start = rng.gen_range(0..reference.len() - long_len);
        list.push(reference[start..start + long_len].to_vec());
        produced += long_len;
    }
    while produced < total {
        let len = rng.gen_range(lens.clone());
        let start = rng.gen_range(0..reference.len() - len);
        let mut read = reference[start..start + len].to_vec();
        for b in read.iter_mut() {
            if rng.gen_ratio(1, 100) {
                *b = BASES[rng.gen_range(0..4)];
            }
        }
        produced += len;
        list.push(read);
    }
    WordCollection::from_words(list).unwrap()
}

/// Uniform random reads of one length.
pub fn uniform_reads(seed: u64, total: usize, len: usize) -> WordCollection {
    let mut rng = rng(seed);
    let list: Vec<Vec<u8>> = (0..total / len).map(|_| random_word(&mut rng, len)).collect();
    WordCollection::from_words(list).unwrap()
}

//! The DNA alphabet plus the end-of-word sentinel.

use std::fmt;

/// Number of base symbols (A, C, G, T).
pub const SIGMA: usize = 4;

/// One symbol of a word or of the transform.
///
/// The derived ordering is `$ < A < C < G < T`. Sentinels of different words
/// are not distinguished here; where their identity matters (the oracle),
/// the word ordinal is carried separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    Sentinel,
    A,
    C,
    G,
    T,
}

impl Symbol {
    pub const BASES: [Symbol; SIGMA] = [Symbol::A, Symbol::C, Symbol::G, Symbol::T];

    /// Base for a 2-bit code. Only the low two bits are looked at.
    #[inline]
    pub fn from_code(code: u8) -> Symbol {
        Self::BASES[(code & 3) as usize]
    }

    /// 2-bit code of a base, `None` for the sentinel.
    #[inline]
    pub fn code(self) -> Option<u8> {
        match self {
            Symbol::Sentinel => None,
            Symbol::A => Some(0),
            Symbol::C => Some(1),
            Symbol::G => Some(2),
            Symbol::T => Some(3),
        }
    }

    #[inline]
    pub fn is_base(self) -> bool {
        self != Symbol::Sentinel
    }

    /// Parse an upper- or lowercase base letter or `$`.
    pub fn from_ascii(byte: u8) -> Option<Symbol> {
        match byte {
            b'A' | b'a' => Some(Symbol::A),
            b'C' | b'c' => Some(Symbol::C),
            b'G' | b'g' => Some(Symbol::G),
            b'T' | b't' => Some(Symbol::T),
            b'$' => Some(Symbol::Sentinel),
            _ => None,
        }
    }

    #[inline]
    pub fn to_ascii(self) -> u8 {
        match self {
            Symbol::Sentinel => b'$',
            Symbol::A => b'A',
            Symbol::C => b'C',
            Symbol::G => b'G',
            Symbol::T => b'T',
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_ascii() as char)
    }
}

/// 2-bit code of an ASCII base, case-insensitive.
#[inline]
pub fn base_code(byte: u8) -> Option<u8> {
    match byte {
        b'A' | b'a' => Some(0),
        b'C' | b'c' => Some(1),
        b'G' | b'g' => Some(2),
        b'T' | b't' => Some(3),
        _ => None,
    }
}

/// Ambiguity codes that ingestion is allowed to drop.
#[inline]
pub fn is_ambiguous(byte: u8) -> bool {
    matches!(
        byte.to_ascii_uppercase(),
        b'N' | b'R' | b'Y' | b'S' | b'W' | b'K' | b'M' | b'B' | b'D' | b'H' | b'V' | b'U'
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_sentinel_then_bases() {
        let mut all = vec![Symbol::T, Symbol::A, Symbol::Sentinel, Symbol::G, Symbol::C];
        all.sort();
        assert_eq!(
            all,
            vec![Symbol::Sentinel, Symbol::A, Symbol::C, Symbol::G, Symbol::T]
        );
    }

    #[test]
    fn codes_round_trip() {
        for (i, s) in Symbol::BASES.iter().enumerate() {
            assert_eq!(s.code(), Some(i as u8));
            assert_eq!(Symbol::from_code(i as u8), *s);
            assert_eq!(Symbol::from_ascii(s.to_ascii()), Some(*s));
            assert_eq!(base_code(s.to_ascii().to_ascii_lowercase()), Some(i as u8));
        }
        assert_eq!(Symbol::Sentinel.code(), None);
    }

    #[test]
    fn ambiguity_codes() {
        assert!(is_ambiguous(b'N'));
        assert!(is_ambiguous(b'n'));
        assert!(!is_ambiguous(b'A'));
        assert!(!is_ambiguous(b'-'));
    }
}

//! Keyword vocabulary, stable hashing, and fixed-width bit vectors.
//!
//! Item keyword sets are summarized into a `B`-bit vector (default 128) by
//! hashing each keyword string with a stable 64-bit hash reduced mod `B`.
//! Bit-vector intersection is a conservative pretest: an empty intersection
//! proves the keyword sets are disjoint, a non-empty one must be confirmed
//! against the exact sets (hash collisions can set shared bits).

use std::collections::HashMap;

/// Default bit-vector width.
pub const DEFAULT_BITS: usize = 128;

/// Interned keyword identifier (dense index into the vocabulary table).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct KeywordId(pub u32);

/// Stable FNV-1a 64-bit hash of a keyword string.
///
/// Independent of process, platform, and insertion history, so dumps and
/// replays agree on bit positions.
pub fn stable_hash64(s: &str) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(PRIME);
    }
    h
}

/// Fixed-width bit vector over keyword hash buckets.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct KeywordBits {
    words: Box<[u64]>,
    width: u32,
}

impl KeywordBits {
    /// All-zero vector of `width` bits.
    pub fn zero(width: usize) -> Self {
        assert!(width > 0, "bit-vector width must be positive");
        let nwords = (width + 63) / 64;
        KeywordBits {
            words: vec![0u64; nwords].into_boxed_slice(),
            width: width as u32,
        }
    }

    /// Width in bits.
    pub fn width(&self) -> usize {
        self.width as usize
    }

    /// Set the bit at `idx`.
    pub fn set(&mut self, idx: usize) {
        debug_assert!(idx < self.width());
        self.words[idx / 64] |= 1u64 << (idx % 64);
    }

    /// True when the bit at `idx` is set.
    pub fn get(&self, idx: usize) -> bool {
        debug_assert!(idx < self.width());
        self.words[idx / 64] & (1u64 << (idx % 64)) != 0
    }

    /// Bitwise OR of `other` into `self`. Returns true when any bit changed.
    pub fn or_assign(&mut self, other: &KeywordBits) -> bool {
        debug_assert_eq!(self.width, other.width);
        let mut changed = false;
        for (w, o) in self.words.iter_mut().zip(other.words.iter()) {
            let merged = *w | *o;
            changed |= merged != *w;
            *w = merged;
        }
        changed
    }

    /// True when `self & other` has any bit set.
    pub fn intersects(&self, other: &KeywordBits) -> bool {
        debug_assert_eq!(self.width, other.width);
        self.words
            .iter()
            .zip(other.words.iter())
            .any(|(a, b)| a & b != 0)
    }

    /// True when no bit is set.
    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    /// Number of set bits.
    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }
}

/// Vocabulary table interning keyword strings and caching their bit index.
#[derive(Debug, Clone)]
pub struct KeywordTable {
    names: Vec<String>,
    index: HashMap<String, KeywordId>,
    bit_of: Vec<u32>,
    width: usize,
}

impl KeywordTable {
    /// Empty table with the given bit-vector width.
    pub fn new(width: usize) -> Self {
        assert!(width > 0, "bit-vector width must be positive");
        KeywordTable {
            names: Vec::new(),
            index: HashMap::new(),
            bit_of: Vec::new(),
            width,
        }
    }

    /// Empty table with the default 128-bit width.
    pub fn with_default_width() -> Self {
        Self::new(DEFAULT_BITS)
    }

    /// Bit-vector width used by this table.
    pub fn width(&self) -> usize {
        self.width
    }

    /// Number of interned keywords.
    pub fn len(&self) -> usize {
        self.names.len()
    }

    /// True when no keyword has been interned.
    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Intern `name`, returning its id (existing or fresh).
    pub fn intern(&mut self, name: &str) -> KeywordId {
        if let Some(id) = self.index.get(name) {
            return *id;
        }
        let id = KeywordId(self.names.len() as u32);
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        self.bit_of
            .push((stable_hash64(name) % self.width as u64) as u32);
        id
    }

    /// Look up an already-interned keyword.
    pub fn lookup(&self, name: &str) -> Option<KeywordId> {
        self.index.get(name).copied()
    }

    /// Keyword string for `id`.
    pub fn name(&self, id: KeywordId) -> &str {
        &self.names[id.0 as usize]
    }

    /// Hash bucket (bit index) for `id`.
    pub fn bit(&self, id: KeywordId) -> usize {
        self.bit_of[id.0 as usize] as usize
    }

    /// Bit vector summarizing a keyword set.
    pub fn bits_of(&self, keywords: &[KeywordId]) -> KeywordBits {
        let mut bv = KeywordBits::zero(self.width);
        for kw in keywords {
            bv.set(self.bit(*kw));
        }
        bv
    }
}

/// True when the two sorted keyword lists share an element.
pub fn sorted_intersects(a: &[KeywordId], b: &[KeywordId]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

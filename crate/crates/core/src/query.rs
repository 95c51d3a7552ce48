//! Query predicates.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::keywords::{stable_hash64, KeywordBits, KeywordId, KeywordTable};

/// A registered community predicate: query keywords plus the (k, r, sigma)
/// thresholds. Ordered so it can key a registry of continuous queries.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct QuerySpec {
    /// Ids of query keywords present in the vocabulary. Words never seen on
    /// any item cannot match and are kept only in the bit vector.
    pub keywords: BTreeSet<KeywordId>,
    /// OR of the hash bits of every query word (known or not); conservative
    /// pretest companion to `keywords`.
    pub bits: KeywordBits,
    /// Minimum butterfly support per community edge.
    pub k: u64,
    /// Hop radius: users must lie within r user-to-user hops of the center.
    pub r: u32,
    /// Minimum relationship score per wedge-adjacent user pair.
    pub sigma: u64,
}

impl QuerySpec {
    pub fn new(
        table: &KeywordTable,
        words: &[&str],
        k: u64,
        r: u32,
        sigma: u64,
    ) -> Result<Self> {
        if words.is_empty() {
            return Err(Error::InvalidParameter(
                "query keyword set is empty".into(),
            ));
        }
        if k == 0 {
            return Err(Error::InvalidParameter("k must be positive".into()));
        }
        if r == 0 {
            return Err(Error::InvalidParameter("r must be positive".into()));
        }
        if sigma == 0 {
            return Err(Error::InvalidParameter("sigma must be positive".into()));
        }
        let mut bits = KeywordBits::zero(table.width());
        let mut keywords = BTreeSet::new();
        for w in words {
            bits.set((stable_hash64(w) % table.width() as u64) as usize);
            if let Some(id) = table.lookup(w) {
                keywords.insert(id);
            }
        }
        Ok(QuerySpec {
            keywords,
            bits,
            k,
            r,
            sigma,
        })
    }
}

//! Hand-built example graphs shared by tests and the `verify` subcommand.

use crate::graph::{ItemAttributes, ItemId, StreamingGraph, UserId};
use crate::keywords::KeywordTable;

/// Keyword names given to the three items of [`example_graph`], in item order.
pub const EXAMPLE_KEYWORDS: [&[&str]; 3] = [&["bank", "finance"], &["bank", "hack"], &["music"]];

/// Vocabulary table matching [`example_graph`].
pub fn example_keyword_table() -> KeywordTable {
    let mut t = KeywordTable::with_default_width();
    for kws in EXAMPLE_KEYWORDS {
        for kw in kws {
            t.intern(kw);
        }
    }
    t
}

/// The three-user, three-item weighted example:
///
/// ```text
///   (u1,v1)=2  (u2,v1)=4  (u3,v1)=2
///              (u2,v2)=5  (u3,v2)=1
///              (u2,v3)=6  (u3,v3)=3
/// ```
///
/// External ids are 1-based on both layers. Edges are loaded as base edges
/// (weight = repeat count), so the window starts empty.
pub fn example_graph() -> StreamingGraph {
    let table = example_keyword_table();
    let mut g = StreamingGraph::new(64);
    for ext in 1..=3u64 {
        g.intern_user(ext);
    }
    for (idx, kws) in EXAMPLE_KEYWORDS.iter().enumerate() {
        let ids: Vec<_> = kws.iter().map(|k| table.lookup(k).unwrap()).collect();
        let mut sorted = ids.clone();
        sorted.sort();
        sorted.dedup();
        g.intern_item(
            idx as u64 + 1,
            ItemAttributes {
                bits: table.bits_of(&sorted),
                keywords: sorted,
            },
        );
    }
    for (ue, ve, w) in [
        (1u64, 1u64, 2u32),
        (2, 1, 4),
        (3, 1, 2),
        (2, 2, 5),
        (3, 2, 1),
        (2, 3, 6),
        (3, 3, 3),
    ] {
        let u = g.find_user(ue).unwrap();
        let v = g.find_item(ve).unwrap();
        for _ in 0..w {
            g.add_base_edge(u, v);
        }
    }
    g
}

/// Dense user id for a 1-based external id in a fixture graph.
pub fn user(g: &StreamingGraph, ext: u64) -> UserId {
    g.find_user(ext).expect("fixture user")
}

/// Dense item id for a 1-based external id in a fixture graph.
pub fn item(g: &StreamingGraph, ext: u64) -> ItemId {
    g.find_item(ext).expect("fixture item")
}

/// Complete bipartite graph with `nu` users, `nl` items, uniform weight `w`.
/// Items carry the single keyword "all". External ids: users 1..=nu,
/// items 1..=nl.
pub fn biclique(nu: u32, nl: u32, w: u32) -> (StreamingGraph, KeywordTable) {
    let mut table = KeywordTable::with_default_width();
    let kw = table.intern("all");
    let mut g = StreamingGraph::new(64);
    for ue in 1..=u64::from(nu) {
        g.intern_user(ue);
    }
    for ve in 1..=u64::from(nl) {
        g.intern_item(
            ve,
            ItemAttributes {
                keywords: vec![kw],
                bits: table.bits_of(&[kw]),
            },
        );
    }
    for ue in 1..=u64::from(nu) {
        for ve in 1..=u64::from(nl) {
            let u = g.find_user(ue).unwrap();
            let v = g.find_item(ve).unwrap();
            for _ in 0..w {
                g.add_base_edge(u, v);
            }
        }
    }
    (g, table)
}

//! Randomized invariant checks across module boundaries.
//!
//! Each property pins one contract the unit suites only sample: the score
//! identity, maintenance-vs-rebuild equality, snapshot-vs-oracle equality,
//! pruning neutrality, extraction idempotence, and window replay.

use proptest::prelude::*;

use bitruss_core::community::{self, oracle_enumerate};
use bitruss_core::engine::{Engine, EngineConfig};
use bitruss_core::graph::{ItemAttributes, StreamingGraph};
use bitruss_core::keywords::KeywordTable;
use bitruss_core::prune::{PruneFlags, Rule};
use bitruss_core::query::QuerySpec;
use bitruss_core::scores::{relationship_score_direct, AuxStore};
use bitruss_core::synopsis::Synopsis;

const WORDS: [&str; 4] = ["alpha", "beta", "gamma", "delta"];

/// Deterministic keyword assignment so specs can hit and miss items.
fn attrs_for(ext: u64, table: &mut KeywordTable) -> ItemAttributes {
    let mut ids = vec![table.intern(WORDS[ext as usize % WORDS.len()])];
    if ext % 3 == 0 {
        ids.push(table.intern(WORDS[(ext as usize + 1) % WORDS.len()]));
    }
    ItemAttributes::new(ids, table)
}

fn build_graph(edges: &[(u64, u64, u32)], window: usize) -> (StreamingGraph, KeywordTable) {
    let mut table = KeywordTable::with_default_width();
    let mut g = StreamingGraph::new(window);
    for &(u, v, w) in edges {
        let uid = g.intern_user(u);
        let vid = match g.find_item(v) {
            Some(x) => x,
            None => {
                let attrs = attrs_for(v, &mut table);
                g.intern_item(v, attrs)
            }
        };
        for _ in 0..w {
            g.add_base_edge(uid, vid);
        }
    }
    (g, table)
}

fn edge_strategy() -> impl Strategy<Value = Vec<(u64, u64, u32)>> {
    prop::collection::vec((1u64..=8, 1u64..=8, 1u32..=3), 1..40)
}

fn spec_strategy() -> impl Strategy<Value = (Vec<usize>, u64, u32, u64)> {
    (
        prop::collection::btree_set(0usize..WORDS.len(), 1..=WORDS.len()),
        1u64..=4,
        1u32..=3,
        1u64..=20,
    )
        .prop_map(|(words, k, r, sigma)| (words.into_iter().collect(), k, r, sigma))
}

fn make_spec(
    table: &KeywordTable,
    words: &[usize],
    k: u64,
    r: u32,
    sigma: u64,
) -> QuerySpec {
    let names: Vec<&str> = words.iter().map(|&i| WORDS[i]).collect();
    QuerySpec::new(table, &names, k, r, sigma).expect("valid spec")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// (X^2 - Y) / 2 equals the butterfly-score sum for every user pair.
    #[test]
    fn pair_score_identity(edges in edge_strategy()) {
        let (g, _) = build_graph(&edges, 256);
        let aux = AuxStore::build(&g);
        let users: Vec<_> = g.users().collect();
        for (i, &a) in users.iter().enumerate() {
            for &b in &users[i + 1..] {
                prop_assert_eq!(aux.pair_score(a, b), relationship_score_direct(&g, a, b));
            }
        }
    }

    /// Incremental score-store maintenance equals a from-scratch rebuild,
    /// and the synopsis stays internally consistent, after every slide.
    #[test]
    fn maintenance_matches_rebuild(
        edges in edge_strategy(),
        slides in prop::collection::vec((1u64..=8, 1u64..=8), 1..25),
        window in 4usize..24,
    ) {
        let (mut g, mut table) = build_graph(&edges, window);
        for &(_, v) in &slides {
            if g.find_item(v).is_none() {
                let attrs = attrs_for(v, &mut table);
                g.intern_item(v, attrs);
            }
        }
        let mut aux = AuxStore::build(&g);
        let mut syn = Synopsis::build(&g, &aux, 2, 3, table.width());
        let mut tick = g.last_tick();
        for &(u, v) in &slides {
            tick += 1;
            let uid = g.intern_user(u);
            let vid = g.find_item(v).unwrap();
            // Maintenance must observe the graph right after each delta, so
            // insert and expiry apply separately rather than via slide().
            let ins = g.apply_insert(uid, vid, tick).unwrap();
            aux.maintain(&g, &ins);
            syn.maintain(&g, &aux, &ins);
            if g.window().needs_expire() {
                let exp = g.apply_expire().unwrap();
                aux.maintain(&g, &exp);
                syn.maintain(&g, &aux, &exp);
            }
            prop_assert_eq!(&aux, &AuxStore::build(&g));
            let problems = syn.verify_consistency(&g, &aux);
            prop_assert!(problems.is_empty(), "synopsis drift: {:?}", problems);
        }
    }

    /// The engine's snapshot equals brute-force enumeration.
    #[test]
    fn snapshot_matches_oracle(
        edges in edge_strategy(),
        spec in spec_strategy(),
    ) {
        let (g, table) = build_graph(&edges, 256);
        let (words, k, r, sigma) = spec;
        let spec = make_spec(&table, &words, k, r, sigma);
        let oracle = oracle_enumerate(&g, &spec, 300).unwrap();
        let engine = Engine::new(g, EngineConfig::default());
        let (rs, _) = engine.snapshot(&spec).unwrap();
        prop_assert_eq!(rs.communities, oracle);
    }

    /// No pruning toggle may change what a snapshot returns.
    #[test]
    fn pruning_is_results_neutral(
        edges in edge_strategy(),
        spec in spec_strategy(),
    ) {
        let (g, table) = build_graph(&edges, 256);
        let (words, k, r, sigma) = spec;
        let spec = make_spec(&table, &words, k, r, sigma);
        let mut engine = Engine::new(g, EngineConfig::default());
        let (full, _) = engine.snapshot(&spec).unwrap();
        let mut configs = vec![PruneFlags::none()];
        configs.extend(Rule::ALL.iter().map(|&rule| PruneFlags::all_but(rule)));
        for flags in configs {
            engine.set_flags(flags);
            let (got, _) = engine.snapshot(&spec).unwrap();
            prop_assert_eq!(&got.communities, &full.communities);
        }
    }

    /// Re-extracting an extracted community from its own subgraph returns
    /// the community unchanged: extraction is a fixpoint.
    #[test]
    fn extraction_is_idempotent(
        edges in edge_strategy(),
        spec in spec_strategy(),
    ) {
        let (g, table) = build_graph(&edges, 256);
        let (words, k, r, sigma) = spec;
        let spec = make_spec(&table, &words, k, r, sigma);
        let engine = Engine::new(g, EngineConfig::default());
        let (rs, _) = engine.snapshot(&spec).unwrap();
        for c in rs.communities.values() {
            let g = engine.graph();
            let mut sub = StreamingGraph::new(256);
            for &(u, v, w) in &c.edges {
                let uid = sub.intern_user(g.user_ext(u));
                let vid = match sub.find_item(g.item_ext(v)) {
                    Some(x) => x,
                    None => sub.intern_item(
                        g.item_ext(v),
                        ItemAttributes::new(g.item_attrs(v).keywords.clone(), &table),
                    ),
                };
                for _ in 0..w {
                    sub.add_base_edge(uid, vid);
                }
            }
            let aux = AuxStore::build(&sub);
            let center = sub.find_user(g.user_ext(c.center)).unwrap();
            let again = community::maximal_bitruss(&sub, &aux, &spec, center)
                .community
                .expect("community re-extracts");
            // Ids were re-interned; compare external projections.
            let ext_edges = |g: &StreamingGraph, es: &[(bitruss_core::graph::UserId, bitruss_core::graph::ItemId, u32)]| {
                let mut out: Vec<(u64, u64, u32)> = es
                    .iter()
                    .map(|&(u, v, w)| (g.user_ext(u), g.item_ext(v), w))
                    .collect();
                out.sort_unstable();
                out
            };
            prop_assert_eq!(ext_edges(&sub, &again.edges), ext_edges(g, &c.edges));
        }
    }

    /// An edge's weight is exactly its occurrence count among the window's
    /// newest `capacity` elements.
    #[test]
    fn window_replay_matches_weights(
        stream in prop::collection::vec((1u64..=6, 1u64..=6), 1..60),
        window in 1usize..=20,
    ) {
        let mut table = KeywordTable::with_default_width();
        let mut g = StreamingGraph::new(window);
        for &(u, v) in &stream {
            g.intern_user(u);
            if g.find_item(v).is_none() {
                let attrs = attrs_for(v, &mut table);
                g.intern_item(v, attrs);
            }
        }
        for (i, &(u, v)) in stream.iter().enumerate() {
            let uid = g.find_user(u).unwrap();
            let vid = g.find_item(v).unwrap();
            g.slide(uid, vid, i as u64 + 1).unwrap();
        }
        let tail = &stream[stream.len().saturating_sub(window)..];
        for &(u, v) in &stream {
            let expect = tail.iter().filter(|&&e| e == (u, v)).count() as u32;
            let uid = g.find_user(u).unwrap();
            let vid = g.find_item(v).unwrap();
            prop_assert_eq!(g.weight(uid, vid), expect);
        }
    }
}

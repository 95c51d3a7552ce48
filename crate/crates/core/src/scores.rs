//! Butterfly scores, per-pair aggregates, and their incremental maintenance.
//!
//! For a user pair (ui, uj), every common item v contributes a wedge of
//! weight min(w(ui,v), w(uj,v)). The pair's relationship score is the sum of
//! products over unordered wedge pairs, which collapses to (X^2 - Y) / 2 for
//! X = sum of wedge weights and Y = sum of squared wedge weights. Both X and
//! Y admit O(1) updates per affected pair when one edge weight moves by 1,
//! so a stream of unit inserts and expiries is maintained without rescans.
//!
//! The store also tracks, per present edge, the number of butterflies that
//! contain it in the full graph. That count upper-bounds the edge's support
//! inside any subgraph and only changes when an edge appears or disappears,
//! not when a weight moves between two positive values.

use std::collections::{BTreeSet, HashMap};

use crate::graph::{EdgeDelta, ItemId, StreamingGraph, UserId};

/// Wedge weight: the smaller of the two edge weights meeting at an item.
pub fn wedge_weight(w1: u32, w2: u32) -> u64 {
    u64::from(w1.min(w2))
}

/// Butterfly score: product of its two wedge weights.
pub fn butterfly_score(wedge_a: u64, wedge_b: u64) -> u64 {
    wedge_a * wedge_b
}

/// Change of min(w, w_other) when w moves to new_w (|new_w - w| <= 1).
pub fn wedge_lambda(old_w: u32, new_w: u32, w_other: u32) -> i64 {
    i64::from(new_w.min(w_other)) - i64::from(old_w.min(w_other))
}

/// Relationship score of (ui, uj) by direct enumeration of wedge pairs.
///
/// Quadratic in the number of common items; reference implementation for
/// tests and the brute-force oracle.
pub fn relationship_score_direct(g: &StreamingGraph, ui: UserId, uj: UserId) -> u64 {
    let mut wedges: Vec<u64> = Vec::new();
    let (small, large) = if g.user_degree(ui) <= g.user_degree(uj) {
        (ui, uj)
    } else {
        (uj, ui)
    };
    for (v, w_small) in g.user_neighbors(small) {
        let w_large = g.weight(large, *v);
        if w_large > 0 {
            wedges.push(wedge_weight(*w_small, w_large));
        }
    }
    let mut score = 0u64;
    for a in 0..wedges.len() {
        for b in (a + 1)..wedges.len() {
            score += butterfly_score(wedges[a], wedges[b]);
        }
    }
    score
}

/// Aggregated wedge data for one user pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AuxScorePair {
    /// Sum of wedge weights over common items.
    pub x: u64,
    /// Sum of squared wedge weights over common items.
    pub y: u64,
}

impl AuxScorePair {
    /// Relationship score (X^2 - Y) / 2.
    pub fn score(&self) -> u64 {
        let sq = self.x * self.x;
        debug_assert!(sq >= self.y, "X^2 < Y is impossible for real wedges");
        debug_assert_eq!((sq - self.y) % 2, 0, "X^2 - Y is always even");
        (sq - self.y) / 2
    }
}

fn pair_key(a: UserId, b: UserId) -> (UserId, UserId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Maintained aggregates: per-pair X/Y, a wedge-partner index, and per-edge
/// butterfly counts in the full graph.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AuxStore {
    pairs: HashMap<(UserId, UserId), AuxScorePair>,
    partners: HashMap<UserId, BTreeSet<UserId>>,
    edge_ub: HashMap<(UserId, ItemId), u64>,
}

impl AuxStore {
    /// Build from scratch over the current graph.
    pub fn build(g: &StreamingGraph) -> Self {
        let mut store = AuxStore::default();
        // Per item, fold every unordered adjacent-user pair into X/Y and a
        // common-neighbor count used afterwards for butterfly counts.
        let mut common: HashMap<(UserId, UserId), u64> = HashMap::new();
        for v in g.items() {
            let mut adj: Vec<(UserId, u32)> =
                g.item_neighbors(v).iter().map(|(u, w)| (*u, *w)).collect();
            adj.sort_by_key(|(u, _)| *u);
            for a in 0..adj.len() {
                for b in (a + 1)..adj.len() {
                    let (ua, wa) = adj[a];
                    let (ub, wb) = adj[b];
                    let ww = wedge_weight(wa, wb);
                    store.add_wedge(ua, ub, ww as i64);
                    *common.entry((ua, ub)).or_insert(0) += 1;
                }
            }
        }
        // Butterflies through edge (u, v): pick the second user u2 from
        // N(v) and the second item among the remaining common neighbors of
        // (u, u2), so each pair sharing c items yields (c - 1) butterflies
        // per edge it touches at v.
        for v in g.items() {
            let mut adj: Vec<UserId> = g.item_neighbors(v).keys().copied().collect();
            adj.sort();
            for a in 0..adj.len() {
                for b in (a + 1)..adj.len() {
                    let c = common[&(adj[a], adj[b])];
                    if c >= 2 {
                        *store.edge_ub.entry((adj[a], v)).or_insert(0) += c - 1;
                        *store.edge_ub.entry((adj[b], v)).or_insert(0) += c - 1;
                    }
                }
            }
        }
        store
    }

    fn add_wedge(&mut self, a: UserId, b: UserId, ww: i64) {
        self.apply_xy(a, b, ww, ww * ww);
    }

    fn apply_xy(&mut self, a: UserId, b: UserId, dx: i64, dy: i64) {
        let key = pair_key(a, b);
        let entry = self.pairs.entry(key).or_default();
        entry.x = entry.x.checked_add_signed(dx).expect("X underflow");
        entry.y = entry.y.checked_add_signed(dy).expect("Y underflow");
        if entry.x == 0 {
            debug_assert_eq!(entry.y, 0, "X == 0 forces Y == 0");
            self.pairs.remove(&key);
            self.unlink(key.0, key.1);
        } else {
            self.link(key.0, key.1);
        }
    }

    fn link(&mut self, a: UserId, b: UserId) {
        self.partners.entry(a).or_default().insert(b);
        self.partners.entry(b).or_default().insert(a);
    }

    fn unlink(&mut self, a: UserId, b: UserId) {
        if let Some(s) = self.partners.get_mut(&a) {
            s.remove(&b);
            if s.is_empty() {
                self.partners.remove(&a);
            }
        }
        if let Some(s) = self.partners.get_mut(&b) {
            s.remove(&a);
            if s.is_empty() {
                self.partners.remove(&b);
            }
        }
    }

    /// X/Y aggregate for a pair; zero when the users share no item.
    pub fn pair(&self, a: UserId, b: UserId) -> AuxScorePair {
        self.pairs.get(&pair_key(a, b)).copied().unwrap_or_default()
    }

    /// Relationship score of (a, b) in the full graph.
    pub fn pair_score(&self, a: UserId, b: UserId) -> u64 {
        self.pair(a, b).score()
    }

    /// Users wedge-adjacent to `u` (sharing at least one item), ascending.
    pub fn partners(&self, u: UserId) -> Option<&BTreeSet<UserId>> {
        self.partners.get(&u)
    }

    /// Butterfly count of edge (u, v) in the full graph; 0 when absent.
    pub fn edge_ub(&self, u: UserId, v: ItemId) -> u64 {
        self.edge_ub.get(&(u, v)).copied().unwrap_or(0)
    }

    /// Apply the aggregate changes implied by `delta`.
    ///
    /// `g` must already be in the post-update state. Handles unit weight
    /// moves, edge creation (0 -> 1), and edge removal (1 -> 0).
    pub fn maintain(&mut self, g: &StreamingGraph, delta: &EdgeDelta) {
        let (ui, va) = (delta.user, delta.item);
        debug_assert_eq!(g.weight(ui, va), delta.new_weight);
        debug_assert!(delta.old_weight.abs_diff(delta.new_weight) == 1);

        // X/Y per wedge partner at va. Other edges of va kept their weight,
        // so the post-state weight doubles as the pre-state one.
        for (uj, w_other) in g.item_neighbors(va) {
            if *uj == ui {
                continue;
            }
            let lambda = wedge_lambda(delta.old_weight, delta.new_weight, *w_other);
            if lambda == 0 {
                continue;
            }
            let w_pre = wedge_weight(delta.old_weight, *w_other) as i64;
            self.apply_xy(ui, *uj, lambda, 2 * lambda * w_pre + lambda * lambda);
        }

        // Butterfly counts move only when the edge itself appears or goes.
        match (delta.old_weight, delta.new_weight) {
            (0, _) => self.shift_butterflies(g, ui, va, 1),
            (_, 0) => {
                self.shift_butterflies(g, ui, va, -1);
                let removed = self.edge_ub.remove(&(ui, va));
                debug_assert!(removed.is_none() || removed == Some(0));
            }
            _ => {}
        }
    }

    /// Add or remove every butterfly containing edge (ui, va).
    ///
    /// Reads the post-update graph in both directions: after a creation the
    /// edge is present and each butterfly {ui, uj, va, vb} is found through
    /// uj in N(va) and vb common to ui and uj; after a removal the same
    /// enumeration covers exactly the butterflies that existed before, since
    /// post-state N(va) excludes ui and post-state N(ui) excludes va.
    fn shift_butterflies(&mut self, g: &StreamingGraph, ui: UserId, va: ItemId, sign: i64) {
        let mut on_va = 0i64;
        for uj in g.item_neighbors(va).keys() {
            if *uj == ui {
                continue;
            }
            let mut cn = 0i64;
            for vb in g.user_neighbors(ui).keys() {
                if *vb == va {
                    continue;
                }
                if g.weight(*uj, *vb) > 0 {
                    cn += 1;
                    self.bump_edge(ui, *vb, sign);
                    self.bump_edge(*uj, *vb, sign);
                }
            }
            if cn > 0 {
                self.bump_edge(*uj, va, sign * cn);
                on_va += cn;
            }
        }
        if on_va > 0 {
            self.bump_edge(ui, va, sign * on_va);
        }
    }

    fn bump_edge(&mut self, u: UserId, v: ItemId, by: i64) {
        let entry = self.edge_ub.entry((u, v)).or_insert(0);
        *entry = entry.checked_add_signed(by).expect("butterfly count underflow");
        if *entry == 0 {
            self.edge_ub.remove(&(u, v));
        }
    }

    /// Number of tracked pairs (wedge-adjacent user pairs).
    pub fn num_pairs(&self) -> usize {
        self.pairs.len()
    }
}

/// Butterfly count of edge (u, v) by direct enumeration (reference).
pub fn count_butterflies_direct(g: &StreamingGraph, u: UserId, v: ItemId) -> u64 {
    let mut total = 0u64;
    for vx in g.user_neighbors(u).keys() {
        if *vx == v {
            continue;
        }
        for u2 in g.item_neighbors(v).keys() {
            if *u2 != u && g.weight(*u2, *vx) > 0 {
                total += 1;
            }
        }
    }
    total
}

//! Streaming weighted bipartite graph with a count-based sliding window.
//!
//! Vertices live on two layers: users and items. Every stream element is a
//! (user, item) occurrence; the multiplicity of occurrences currently inside
//! the window is the edge weight. A base graph loaded before streaming never
//! expires, so long-lived structure persists while streamed occurrences age
//! out FIFO.

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::keywords::{KeywordBits, KeywordId, KeywordTable};

/// Dense user index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UserId(pub u32);

/// Dense item index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ItemId(pub u32);

/// One streamed (user, item) occurrence. `tick` is the 1-based arrival index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UpdateItem {
    pub user: UserId,
    pub item: ItemId,
    pub tick: u64,
}

/// Net effect of applying one stream element or expiry to the graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeDelta {
    pub user: UserId,
    pub item: ItemId,
    /// Weight before the change (0 means the edge was created).
    pub old_weight: u32,
    /// Weight after the change (0 means the edge was removed).
    pub new_weight: u32,
    pub tick: u64,
}

/// Keyword payload attached to an item vertex.
#[derive(Debug, Clone)]
pub struct ItemAttributes {
    /// Sorted, deduplicated keyword ids.
    pub keywords: Vec<KeywordId>,
    /// Bit summary of `keywords` (see [`crate::keywords`]).
    pub bits: KeywordBits,
}

impl ItemAttributes {
    pub fn new(mut keywords: Vec<KeywordId>, table: &KeywordTable) -> Self {
        keywords.sort_unstable();
        keywords.dedup();
        let bits = table.bits_of(&keywords);
        ItemAttributes { keywords, bits }
    }
}

/// FIFO window over streamed occurrences, capacity in elements.
#[derive(Debug, Clone)]
pub struct SlidingWindow {
    capacity: usize,
    items: VecDeque<UpdateItem>,
}

impl SlidingWindow {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "window capacity must be positive");
        SlidingWindow {
            capacity,
            items: VecDeque::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.items.len() >= self.capacity
    }

    /// True while the window holds more than `capacity` items. A slide
    /// inserts first and expires second, so the overshoot is at most one.
    pub fn needs_expire(&self) -> bool {
        self.items.len() > self.capacity
    }

    fn push(&mut self, it: UpdateItem) {
        debug_assert!(self.items.len() <= self.capacity, "window overshoot > 1");
        self.items.push_back(it);
    }

    fn pop_oldest(&mut self) -> Option<UpdateItem> {
        self.items.pop_front()
    }

    /// Occurrences currently in the window, oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &UpdateItem> {
        self.items.iter()
    }
}

/// Bipartite multigraph induced by the base edges plus the current window.
#[derive(Debug, Clone)]
pub struct StreamingGraph {
    user_ext: Vec<u64>,
    item_ext: Vec<u64>,
    user_index: HashMap<u64, UserId>,
    item_index: HashMap<u64, ItemId>,
    user_adj: Vec<HashMap<ItemId, u32>>,
    item_adj: Vec<HashMap<UserId, u32>>,
    item_attrs: Vec<ItemAttributes>,
    window: SlidingWindow,
    edge_count: usize,
    last_tick: u64,
}

impl StreamingGraph {
    pub fn new(window_capacity: usize) -> Self {
        StreamingGraph {
            user_ext: Vec::new(),
            item_ext: Vec::new(),
            user_index: HashMap::new(),
            item_index: HashMap::new(),
            user_adj: Vec::new(),
            item_adj: Vec::new(),
            item_attrs: Vec::new(),
            window: SlidingWindow::new(window_capacity),
            edge_count: 0,
            last_tick: 0,
        }
    }

    /// Number of user vertices ever interned (isolated ones included).
    pub fn num_users(&self) -> usize {
        self.user_ext.len()
    }

    /// Number of item vertices ever interned (isolated ones included).
    pub fn num_items(&self) -> usize {
        self.item_ext.len()
    }

    /// Number of distinct present edges (weight >= 1).
    pub fn num_edges(&self) -> usize {
        self.edge_count
    }

    /// Arrival index of the most recently applied stream element.
    pub fn last_tick(&self) -> u64 {
        self.last_tick
    }

    pub fn window(&self) -> &SlidingWindow {
        &self.window
    }

    /// Intern an external user id, returning its dense index.
    pub fn intern_user(&mut self, ext: u64) -> UserId {
        if let Some(u) = self.user_index.get(&ext) {
            return *u;
        }
        let u = UserId(self.user_ext.len() as u32);
        self.user_ext.push(ext);
        self.user_index.insert(ext, u);
        self.user_adj.push(HashMap::new());
        u
    }

    /// Intern an external item id with its keyword payload.
    ///
    /// The first interning fixes the keywords; later calls for the same
    /// external id keep the original payload.
    pub fn intern_item(&mut self, ext: u64, attrs: ItemAttributes) -> ItemId {
        if let Some(v) = self.item_index.get(&ext) {
            return *v;
        }
        let v = ItemId(self.item_ext.len() as u32);
        self.item_ext.push(ext);
        self.item_index.insert(ext, v);
        self.item_adj.push(HashMap::new());
        debug_assert!(attrs.keywords.windows(2).all(|w| w[0] < w[1]));
        self.item_attrs.push(attrs);
        v
    }

    /// Dense index for an external user id, if interned.
    pub fn find_user(&self, ext: u64) -> Option<UserId> {
        self.user_index.get(&ext).copied()
    }

    /// Dense index for an external item id, if interned.
    pub fn find_item(&self, ext: u64) -> Option<ItemId> {
        self.item_index.get(&ext).copied()
    }

    /// External id for a dense user index.
    pub fn user_ext(&self, u: UserId) -> u64 {
        self.user_ext[u.0 as usize]
    }

    /// External id for a dense item index.
    pub fn item_ext(&self, v: ItemId) -> u64 {
        self.item_ext[v.0 as usize]
    }

    pub fn item_attrs(&self, v: ItemId) -> &ItemAttributes {
        &self.item_attrs[v.0 as usize]
    }

    /// Current weight of edge (u, v); 0 when absent.
    pub fn weight(&self, u: UserId, v: ItemId) -> u32 {
        self.user_adj[u.0 as usize].get(&v).copied().unwrap_or(0)
    }

    /// Adjacent items of `u` with weights (unordered).
    pub fn user_neighbors(&self, u: UserId) -> &HashMap<ItemId, u32> {
        &self.user_adj[u.0 as usize]
    }

    /// Adjacent users of `v` with weights (unordered).
    pub fn item_neighbors(&self, v: ItemId) -> &HashMap<UserId, u32> {
        &self.item_adj[v.0 as usize]
    }

    pub fn user_degree(&self, u: UserId) -> usize {
        self.user_adj[u.0 as usize].len()
    }

    pub fn item_degree(&self, v: ItemId) -> usize {
        self.item_adj[v.0 as usize].len()
    }

    /// All user ids, ascending.
    pub fn users(&self) -> impl Iterator<Item = UserId> + '_ {
        (0..self.user_ext.len() as u32).map(UserId)
    }

    /// All item ids, ascending.
    pub fn items(&self) -> impl Iterator<Item = ItemId> + '_ {
        (0..self.item_ext.len() as u32).map(ItemId)
    }

    fn bump(&mut self, u: UserId, v: ItemId, by_one_up: bool) -> (u32, u32) {
        let w = self.user_adj[u.0 as usize].entry(v).or_insert(0);
        let old = *w;
        if by_one_up {
            *w += 1;
        } else {
            debug_assert!(*w > 0, "expiring an absent edge");
            *w -= 1;
        }
        let new = *w;
        if new == 0 {
            self.user_adj[u.0 as usize].remove(&v);
            self.item_adj[v.0 as usize].remove(&u);
            self.edge_count -= 1;
        } else {
            self.item_adj[v.0 as usize].insert(u, new);
            if old == 0 {
                self.edge_count += 1;
            }
        }
        (old, new)
    }

    /// Add a base-graph occurrence: weight +1, never enters the window.
    pub fn add_base_edge(&mut self, u: UserId, v: ItemId) {
        self.bump(u, v, true);
    }

    /// Apply one streamed occurrence. Ticks must be strictly increasing.
    ///
    /// May overshoot the window capacity by one element; the caller expires
    /// the evicted oldest item afterwards (see [`Self::slide`]).
    pub fn apply_insert(&mut self, u: UserId, v: ItemId, tick: u64) -> Result<EdgeDelta> {
        if tick <= self.last_tick {
            return Err(Error::NonMonotonicTimestamp {
                last: self.last_tick,
                got: tick,
            });
        }
        assert!(
            !self.window.needs_expire(),
            "window overshoot: expire before inserting again"
        );
        let (old, new) = self.bump(u, v, true);
        self.window.push(UpdateItem {
            user: u,
            item: v,
            tick,
        });
        self.last_tick = tick;
        Ok(EdgeDelta {
            user: u,
            item: v,
            old_weight: old,
            new_weight: new,
            tick,
        })
    }

    /// Expire the oldest occurrence in the window: weight -1 on its edge.
    /// Vertices stay interned even when their last edge disappears.
    pub fn apply_expire(&mut self) -> Result<EdgeDelta> {
        let it = self.window.pop_oldest().ok_or(Error::EmptyWindow)?;
        let (old, new) = self.bump(it.user, it.item, false);
        Ok(EdgeDelta {
            user: it.user,
            item: it.item,
            old_weight: old,
            new_weight: new,
            tick: it.tick,
        })
    }

    /// One window slide: insert the new occurrence, then expire the evicted
    /// oldest one if the window was at capacity. Returns both deltas in
    /// (insert, expire) order.
    pub fn slide(&mut self, u: UserId, v: ItemId, tick: u64) -> Result<(EdgeDelta, Option<EdgeDelta>)> {
        let ins = self.apply_insert(u, v, tick)?;
        let exp = if self.window.needs_expire() {
            Some(self.apply_expire()?)
        } else {
            None
        };
        Ok((ins, exp))
    }

    /// Hop distances from `start` out to `max_hops` user-to-user hops.
    ///
    /// One hop is user -> item -> user; returned map carries hop counts for
    /// users only, including `start` at 0. Deterministic regardless of map
    /// iteration order because BFS layers are fully expanded before moving on.
    pub fn users_within_hops(&self, start: UserId, max_hops: u32) -> HashMap<UserId, u32> {
        let mut dist: HashMap<UserId, u32> = HashMap::new();
        dist.insert(start, 0);
        let mut frontier = vec![start];
        let mut seen_items: HashMap<ItemId, ()> = HashMap::new();
        for d in 1..=max_hops {
            let mut next = Vec::new();
            for u in frontier.drain(..) {
                for v in self.user_adj[u.0 as usize].keys() {
                    if seen_items.contains_key(v) {
                        continue;
                    }
                    seen_items.insert(*v, ());
                    for u2 in self.item_adj[v.0 as usize].keys() {
                        if !dist.contains_key(u2) {
                            dist.insert(*u2, d);
                            next.push(*u2);
                        }
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        dist
    }

    /// Items adjacent to any user in `users` (the item layer of the induced
    /// subgraph), with no ordering guarantee.
    pub fn items_of_users<'a>(
        &'a self,
        users: impl IntoIterator<Item = &'a UserId>,
    ) -> HashMap<ItemId, ()> {
        let mut out = HashMap::new();
        for u in users {
            for v in self.user_adj[u.0 as usize].keys() {
                out.insert(*v, ());
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keywords::KeywordTable;

    fn attrs(t: &KeywordTable, kws: &[KeywordId]) -> ItemAttributes {
        let mut sorted = kws.to_vec();
        sorted.sort();
        sorted.dedup();
        ItemAttributes {
            bits: t.bits_of(&sorted),
            keywords: sorted,
        }
    }

    fn empty_attrs() -> ItemAttributes {
        let t = KeywordTable::with_default_width();
        ItemAttributes {
            keywords: Vec::new(),
            bits: t.bits_of(&[]),
        }
    }

    #[test]
    fn insert_expire_roundtrip() {
        let mut g = StreamingGraph::new(4);
        let u = g.intern_user(10);
        let v = g.intern_item(20, empty_attrs());

        let d1 = g.apply_insert(u, v, 1).unwrap();
        assert_eq!((d1.old_weight, d1.new_weight), (0, 1));
        let d2 = g.apply_insert(u, v, 2).unwrap();
        assert_eq!((d2.old_weight, d2.new_weight), (1, 2));
        assert_eq!(g.weight(u, v), 2);
        assert_eq!(g.num_edges(), 1);

        let e1 = g.apply_expire().unwrap();
        assert_eq!((e1.old_weight, e1.new_weight), (2, 1));
        let e2 = g.apply_expire().unwrap();
        assert_eq!((e2.old_weight, e2.new_weight), (1, 0));
        assert_eq!(g.num_edges(), 0);
        assert_eq!(g.weight(u, v), 0);
        // Vertices survive edge removal.
        assert_eq!(g.find_user(10), Some(u));
        assert_eq!(g.find_item(20), Some(v));
    }

    #[test]
    fn base_edges_never_expire() {
        let mut g = StreamingGraph::new(2);
        let u = g.intern_user(1);
        let v = g.intern_item(2, empty_attrs());
        g.add_base_edge(u, v);
        g.apply_insert(u, v, 1).unwrap();
        assert_eq!(g.weight(u, v), 2);
        g.apply_expire().unwrap();
        assert_eq!(g.weight(u, v), 1);
        assert!(g.apply_expire().is_err(), "window drained");
        assert_eq!(g.weight(u, v), 1);
    }

    #[test]
    fn ticks_must_increase() {
        let mut g = StreamingGraph::new(2);
        let u = g.intern_user(1);
        let v = g.intern_item(2, empty_attrs());
        g.apply_insert(u, v, 5).unwrap();
        let err = g.apply_insert(u, v, 5).unwrap_err();
        assert!(matches!(err, Error::NonMonotonicTimestamp { last: 5, got: 5 }));
    }

    #[test]
    fn slide_at_capacity_one_replaces_the_edge() {
        let mut g = StreamingGraph::new(1);
        let u1 = g.intern_user(1);
        let u2 = g.intern_user(2);
        let v1 = g.intern_item(11, empty_attrs());
        let v2 = g.intern_item(12, empty_attrs());

        let (ins, exp) = g.slide(u1, v1, 1).unwrap();
        assert_eq!((ins.old_weight, ins.new_weight), (0, 1));
        assert!(exp.is_none(), "warm-up slide has nothing to expire");

        let (ins2, exp2) = g.slide(u2, v2, 2).unwrap();
        assert_eq!((ins2.old_weight, ins2.new_weight), (0, 1));
        let exp2 = exp2.expect("steady-state slide expires the oldest item");
        assert_eq!((exp2.user, exp2.item), (u1, v1));
        assert_eq!(g.weight(u1, v1), 0);
        assert_eq!(g.weight(u2, v2), 1);
        assert_eq!(g.num_edges(), 1);
    }

    #[test]
    fn hop_distances_follow_user_item_user_steps() {
        // u0 - v0 - u1 - v1 - u2, and isolated u3.
        let mut g = StreamingGraph::new(16);
        let t = KeywordTable::with_default_width();
        let us: Vec<UserId> = (0..4).map(|i| g.intern_user(i)).collect();
        let vs: Vec<ItemId> = (0..2).map(|i| g.intern_item(100 + i, attrs(&t, &[]))).collect();
        g.add_base_edge(us[0], vs[0]);
        g.add_base_edge(us[1], vs[0]);
        g.add_base_edge(us[1], vs[1]);
        g.add_base_edge(us[2], vs[1]);

        let d = g.users_within_hops(us[0], 1);
        assert_eq!(d.get(&us[0]), Some(&0));
        assert_eq!(d.get(&us[1]), Some(&1));
        assert_eq!(d.get(&us[2]), None);

        let d2 = g.users_within_hops(us[0], 2);
        assert_eq!(d2.get(&us[2]), Some(&2));
        assert_eq!(d2.get(&us[3]), None);
    }
}

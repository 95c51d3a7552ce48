//! Mutable subgraph views used during community extraction.
//!
//! A view materializes the hop-bounded neighborhood of one candidate center
//! and is then peeled in place. Both layers are kept in ordered maps so that
//! iteration order, and therefore every tie-break downstream, is stable.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use crate::graph::{ItemId, StreamingGraph, UserId};

/// Induced subgraph with a distinguished center user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubgraphView {
    center: UserId,
    /// Per-user in-view adjacency with edge weights.
    users: BTreeMap<UserId, BTreeMap<ItemId, u32>>,
    /// Mirror adjacency; weights live on the user side.
    items: BTreeMap<ItemId, BTreeSet<UserId>>,
}

impl SubgraphView {
    /// Hop-bounded neighborhood of `center`: users within `r` user-to-user
    /// hops, items within bipartite distance 2r - 1 (items one step past the
    /// farthest users are out), and all induced edges.
    pub fn hop(g: &StreamingGraph, center: UserId, r: u32) -> Self {
        let dist = g.users_within_hops(center, r);
        let mut users: BTreeMap<UserId, BTreeMap<ItemId, u32>> =
            dist.keys().map(|u| (*u, BTreeMap::new())).collect();
        let mut items: BTreeMap<ItemId, BTreeSet<UserId>> = BTreeMap::new();
        // Items enter through users strictly inside the ball; boundary users
        // only contribute edges back to items already reached.
        for (u, d) in &dist {
            if *d < r {
                for v in g.user_neighbors(*u).keys() {
                    items.entry(*v).or_default();
                }
            }
        }
        if cfg!(debug_assertions) {
            // Neighbors of an in-view item sit one hop past the user that
            // pulled the item in, hence still inside the ball.
            for v in items.keys() {
                for (u, _) in g.item_neighbors(*v) {
                    debug_assert!(dist.contains_key(u), "item adjacency leaves the ball");
                }
            }
        }
        let item_set: Vec<ItemId> = items.keys().copied().collect();
        for v in item_set {
            for (u, w) in g.item_neighbors(v) {
                if users.contains_key(u) {
                    users.get_mut(u).unwrap().insert(v, *w);
                    items.get_mut(&v).unwrap().insert(*u);
                }
            }
        }
        SubgraphView {
            center,
            users,
            items,
        }
    }

    /// View over an explicit edge list (tests and the oracle).
    pub fn from_edges(center: UserId, edges: &[(UserId, ItemId, u32)]) -> Self {
        let mut view = SubgraphView {
            center,
            users: BTreeMap::new(),
            items: BTreeMap::new(),
        };
        view.users.entry(center).or_default();
        for (u, v, w) in edges {
            assert!(*w > 0, "zero-weight edge in view");
            view.users.entry(*u).or_default().insert(*v, *w);
            view.items.entry(*v).or_default().insert(*u);
        }
        view
    }

    pub fn center(&self) -> UserId {
        self.center
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    pub fn num_edges(&self) -> usize {
        self.users.values().map(|adj| adj.len()).sum()
    }

    pub fn contains_user(&self, u: UserId) -> bool {
        self.users.contains_key(&u)
    }

    pub fn contains_item(&self, v: ItemId) -> bool {
        self.items.contains_key(&v)
    }

    /// Edge weight inside the view; 0 when absent.
    pub fn weight(&self, u: UserId, v: ItemId) -> u32 {
        self.users
            .get(&u)
            .and_then(|adj| adj.get(&v))
            .copied()
            .unwrap_or(0)
    }

    /// Users in ascending id order.
    pub fn users(&self) -> impl Iterator<Item = UserId> + '_ {
        self.users.keys().copied()
    }

    /// Items in ascending id order.
    pub fn items(&self) -> impl Iterator<Item = ItemId> + '_ {
        self.items.keys().copied()
    }

    /// In-view adjacency of a user, ascending by item id.
    pub fn user_adj(&self, u: UserId) -> Option<&BTreeMap<ItemId, u32>> {
        self.users.get(&u)
    }

    /// In-view adjacency of an item, ascending by user id.
    pub fn item_adj(&self, v: ItemId) -> Option<&BTreeSet<UserId>> {
        self.items.get(&v)
    }

    /// All edges as (user, item, weight), sorted by (user, item).
    pub fn edges(&self) -> impl Iterator<Item = (UserId, ItemId, u32)> + '_ {
        self.users
            .iter()
            .flat_map(|(u, adj)| adj.iter().map(move |(v, w)| (*u, *v, *w)))
    }

    /// The center has no incident edge left.
    pub fn center_is_edgeless(&self) -> bool {
        self.users.get(&self.center).map_or(true, |adj| adj.is_empty())
    }

    /// Remove one edge. Endpoints stay; prune them separately.
    pub fn remove_edge(&mut self, u: UserId, v: ItemId) {
        if let Some(adj) = self.users.get_mut(&u) {
            adj.remove(&v);
        }
        if let Some(adj) = self.items.get_mut(&v) {
            adj.remove(&u);
        }
    }

    /// Remove a user and all incident edges. The center is never removed.
    pub fn remove_user(&mut self, u: UserId) {
        if u == self.center {
            // Peeling the center means the candidate is dead; the extraction
            // loop detects that through center_is_edgeless instead.
            if let Some(adj) = self.users.get_mut(&u) {
                let vs: Vec<ItemId> = adj.keys().copied().collect();
                adj.clear();
                for v in vs {
                    self.items.get_mut(&v).map(|s| s.remove(&u));
                }
            }
            return;
        }
        if let Some(adj) = self.users.remove(&u) {
            for v in adj.keys() {
                self.items.get_mut(v).map(|s| s.remove(&u));
            }
        }
    }

    /// Remove an item and all incident edges.
    pub fn remove_item(&mut self, v: ItemId) {
        if let Some(adj) = self.items.remove(&v) {
            for u in adj {
                self.users.get_mut(&u).map(|m| m.remove(&v));
            }
        }
    }

    /// Drop edgeless items and edgeless non-center users.
    pub fn prune_isolated(&mut self) {
        let dead_items: Vec<ItemId> = self
            .items
            .iter()
            .filter(|(_, s)| s.is_empty())
            .map(|(v, _)| *v)
            .collect();
        for v in dead_items {
            self.items.remove(&v);
        }
        let center = self.center;
        let dead_users: Vec<UserId> = self
            .users
            .iter()
            .filter(|(u, adj)| **u != center && adj.is_empty())
            .map(|(u, _)| *u)
            .collect();
        for u in dead_users {
            self.users.remove(&u);
        }
    }

    /// User-hop distances from the center within the view. Unreachable
    /// users are absent.
    pub fn user_distances(&self) -> HashMap<UserId, u32> {
        let mut dist = HashMap::new();
        dist.insert(self.center, 0u32);
        let mut queue = VecDeque::from([self.center]);
        let mut seen_items: BTreeSet<ItemId> = BTreeSet::new();
        while let Some(u) = queue.pop_front() {
            let d = dist[&u];
            if let Some(adj) = self.users.get(&u) {
                for v in adj.keys() {
                    if !seen_items.insert(*v) {
                        continue;
                    }
                    if let Some(us) = self.items.get(v) {
                        for u2 in us {
                            if !dist.contains_key(u2) {
                                dist.insert(*u2, d + 1);
                                queue.push_back(*u2);
                            }
                        }
                    }
                }
            }
        }
        dist
    }

    /// Keep only the connected component containing the center.
    pub fn retain_center_component(&mut self) {
        let reach = self.user_distances();
        let dead: Vec<UserId> = self
            .users
            .keys()
            .filter(|u| !reach.contains_key(u))
            .copied()
            .collect();
        for u in dead {
            self.remove_user(u);
        }
        self.prune_isolated();
    }

    /// Butterfly count of one edge within the view, by direct enumeration.
    pub fn edge_support(&self, u: UserId, v: ItemId) -> u64 {
        let Some(u_adj) = self.users.get(&u) else {
            return 0;
        };
        let Some(v_adj) = self.items.get(&v) else {
            return 0;
        };
        let mut total = 0u64;
        for u2 in v_adj {
            if *u2 == u {
                continue;
            }
            if let Some(u2_adj) = self.users.get(u2) {
                for v2 in u_adj.keys() {
                    if *v2 != v && u2_adj.contains_key(v2) {
                        total += 1;
                    }
                }
            }
        }
        total
    }

    /// Butterfly counts for every in-view edge.
    ///
    /// One pass over item-pair common counts: a user pair sharing c items
    /// contributes (c - 1) butterflies through each of its edges.
    pub fn support_map(&self) -> BTreeMap<(UserId, ItemId), u64> {
        let mut common: HashMap<(UserId, UserId), u64> = HashMap::new();
        for us in self.items.values() {
            let list: Vec<UserId> = us.iter().copied().collect();
            for a in 0..list.len() {
                for b in (a + 1)..list.len() {
                    *common.entry((list[a], list[b])).or_insert(0) += 1;
                }
            }
        }
        let mut sup: BTreeMap<(UserId, ItemId), u64> = BTreeMap::new();
        for (u, v, _) in self.edges() {
            sup.insert((u, v), 0);
        }
        for (v, us) in &self.items {
            let list: Vec<UserId> = us.iter().copied().collect();
            for a in 0..list.len() {
                for b in (a + 1)..list.len() {
                    let c = common[&(list[a], list[b])];
                    if c >= 2 {
                        *sup.get_mut(&(list[a], *v)).unwrap() += c - 1;
                        *sup.get_mut(&(list[b], *v)).unwrap() += c - 1;
                    }
                }
            }
        }
        sup
    }

    /// Relationship score of a user pair within the view.
    pub fn pair_score(&self, a: UserId, b: UserId) -> u64 {
        let (Some(a_adj), Some(b_adj)) = (self.users.get(&a), self.users.get(&b)) else {
            return 0;
        };
        let (small, large) = if a_adj.len() <= b_adj.len() {
            (a_adj, b_adj)
        } else {
            (b_adj, a_adj)
        };
        let mut x = 0u64;
        let mut y = 0u64;
        for (v, w1) in small {
            if let Some(w2) = large.get(v) {
                let ww = u64::from(*w1.min(w2));
                x += ww;
                y += ww * ww;
            }
        }
        debug_assert!(x * x >= y);
        (x * x - y) / 2
    }

    /// Unordered user pairs sharing at least one in-view item, ascending.
    pub fn wedge_pairs(&self) -> BTreeSet<(UserId, UserId)> {
        let mut pairs = BTreeSet::new();
        for us in self.items.values() {
            let list: Vec<UserId> = us.iter().copied().collect();
            for a in 0..list.len() {
                for b in (a + 1)..list.len() {
                    pairs.insert((list[a], list[b]));
                }
            }
        }
        pairs
    }
}

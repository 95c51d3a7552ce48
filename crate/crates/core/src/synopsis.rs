//! Hierarchical per-user summaries that let queries skip hopeless centers.
//!
//! For every user and every radius r up to `r_max` we keep three summaries
//! of the ball around that user: the OR of the keyword bit vectors of all
//! items in the ball, the largest whole-graph butterfly count of any edge in
//! the ball, and the largest relationship score of any user pair inside the
//! ball. Each is an upper bound for the corresponding quantity inside any
//! community centered at that user, so a failed threshold test on the
//! summary rules the center out without touching the graph.
//!
//! Users are grouped into leaves of a shallow B-tree-like index ordered by
//! how promising they look (descending sum of score bounds), and interior
//! nodes fold their children with OR/max. A query walks the tree with a
//! max-heap keyed by the score bound and can stop early once the best
//! remaining key drops below its threshold.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::{EdgeDelta, StreamingGraph, UserId};
use crate::keywords::KeywordBits;
use crate::scores::AuxStore;

/// Users whose candidate ball of `radius` user hops could have changed
/// under `delta`: everyone within `radius` user hops of the delta's user
/// endpoint, measured on the graph state where the edge exists.
///
/// The graph passed in is always the post-delta state. For inserts and
/// weight changes that state has the edge (or the same topology), so a
/// plain ball suffices. For removals the pre-state reach through the dead
/// edge is reconstructed by also walking from the item's remaining
/// neighbors with one hop less, which reproduces the pre-state ball
/// exactly: any pre-path crossing the removed edge continues from one of
/// those neighbors.
pub fn affected_users(
    g: &StreamingGraph,
    delta: &EdgeDelta,
    radius: u32,
) -> Result<BTreeSet<UserId>> {
    if radius == 0 {
        return Err(Error::InvalidParameter(
            "affected-set radius must be positive".into(),
        ));
    }
    let mut out: BTreeSet<UserId> = g
        .users_within_hops(delta.user, radius)
        .into_keys()
        .collect();
    if delta.new_weight == 0 {
        for (&uj, _) in g.item_neighbors(delta.item) {
            out.extend(g.users_within_hops(uj, radius - 1).into_keys());
        }
    }
    Ok(out)
}

/// Per-user (or folded per-node) summaries, indexed by radius minus one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Aggregates {
    bv: Vec<KeywordBits>,
    ub_sup: Vec<u64>,
    ub_score: Vec<u64>,
}

impl Aggregates {
    pub fn zero(r_max: u32, width: usize) -> Self {
        let n = r_max as usize;
        Aggregates {
            bv: vec![KeywordBits::zero(width); n],
            ub_sup: vec![0; n],
            ub_score: vec![0; n],
        }
    }

    pub fn r_max(&self) -> u32 {
        self.bv.len() as u32
    }

    pub fn bv(&self, r: u32) -> &KeywordBits {
        &self.bv[(r - 1) as usize]
    }

    pub fn ub_sup(&self, r: u32) -> u64 {
        self.ub_sup[(r - 1) as usize]
    }

    pub fn ub_score(&self, r: u32) -> u64 {
        self.ub_score[(r - 1) as usize]
    }

    /// Fold another summary in (OR the bit vectors, max the bounds).
    /// Returns true if anything changed.
    pub fn merge_max(&mut self, other: &Aggregates) -> bool {
        debug_assert_eq!(self.bv.len(), other.bv.len());
        let mut changed = false;
        for (mine, theirs) in self.bv.iter_mut().zip(&other.bv) {
            changed |= mine.or_assign(theirs);
        }
        for (mine, theirs) in self.ub_sup.iter_mut().zip(&other.ub_sup) {
            if *theirs > *mine {
                *mine = *theirs;
                changed = true;
            }
        }
        for (mine, theirs) in self.ub_score.iter_mut().zip(&other.ub_score) {
            if *theirs > *mine {
                *mine = *theirs;
                changed = true;
            }
        }
        changed
    }

    /// True if every summary here includes the corresponding one in `other`.
    pub fn dominates(&self, other: &Aggregates) -> bool {
        self.bv
            .iter()
            .zip(&other.bv)
            .all(|(a, b)| {
                let mut merged = a.clone();
                !merged.or_assign(b)
            })
            && self.ub_sup.iter().zip(&other.ub_sup).all(|(a, b)| a >= b)
            && self.ub_score.iter().zip(&other.ub_score).all(|(a, b)| a >= b)
    }

    /// Sort key for leaf placement: total score bound across radii.
    pub fn sum_key(&self) -> u64 {
        self.ub_score.iter().fold(0u64, |acc, &s| acc.saturating_add(s))
    }
}

/// Exact summaries for one user, recomputed from the live graph.
///
/// One layered walk to `r_max` user hops records when each user and item
/// first enters the ball; edges and pairs bucket at the radius where both
/// endpoints are present, and a prefix pass turns buckets into cumulative
/// per-radius values.
pub fn exact_user_aggregates(
    g: &StreamingGraph,
    aux: &AuxStore,
    u: UserId,
    r_max: u32,
    width: usize,
) -> Aggregates {
    let mut agg = Aggregates::zero(r_max, width);
    let user_hop = g.users_within_hops(u, r_max);
    // Items enter the ball of radius r via a user at hop < r, so the item's
    // threshold is its discovering user's hop plus one.
    let mut item_radius: HashMap<crate::graph::ItemId, u32> = HashMap::new();
    for (&w, &hop) in &user_hop {
        if hop >= r_max {
            continue;
        }
        for (&v, _) in g.user_neighbors(w) {
            let entry = item_radius.entry(v).or_insert(hop + 1);
            if hop + 1 < *entry {
                *entry = hop + 1;
            }
        }
    }

    for (&v, &rv) in &item_radius {
        let slot = (rv - 1) as usize;
        agg.bv[slot].or_assign(&g.item_attrs(v).bits);
    }

    for (&w, &hop) in &user_hop {
        for (&v, _) in g.user_neighbors(w) {
            let Some(&rv) = item_radius.get(&v) else { continue };
            let re = rv.max(hop).max(1);
            if re > r_max {
                continue;
            }
            let slot = (re - 1) as usize;
            let ub = aux.edge_ub(w, v);
            if ub > agg.ub_sup[slot] {
                agg.ub_sup[slot] = ub;
            }
        }
    }

    for (&a, &hop_a) in &user_hop {
        let Some(partners) = aux.partners(a) else { continue };
        for &b in partners {
            if b <= a {
                continue;
            }
            let Some(&hop_b) = user_hop.get(&b) else { continue };
            let rp = hop_a.max(hop_b).max(1);
            if rp > r_max {
                continue;
            }
            let slot = (rp - 1) as usize;
            let s = aux.pair_score(a, b);
            if s > agg.ub_score[slot] {
                agg.ub_score[slot] = s;
            }
        }
    }

    // Buckets hold "first appears at radius r"; balls are nested, so each
    // per-radius value is the running fold over smaller radii.
    for i in 1..r_max as usize {
        let (lo, hi) = agg.bv.split_at_mut(i);
        hi[0].or_assign(&lo[i - 1]);
        agg.ub_sup[i] = agg.ub_sup[i].max(agg.ub_sup[i - 1]);
        agg.ub_score[i] = agg.ub_score[i].max(agg.ub_score[i - 1]);
    }
    agg
}

/// One user's slot in a leaf.
#[derive(Debug, Clone)]
pub struct Member {
    pub user: UserId,
    pub key: u64,
    pub agg: Aggregates,
}

#[derive(Debug)]
enum NodeKind {
    Leaf(Vec<Member>),
    Internal(Vec<usize>),
}

#[derive(Debug)]
struct Node {
    parent: Option<usize>,
    users: usize,
    agg: Aggregates,
    kind: NodeKind,
}

/// Borrowed view of a node's payload for traversal.
pub enum NodeView<'a> {
    Leaf(&'a [Member]),
    Internal(&'a [usize]),
}

/// The index: an arena of nodes plus a user-to-leaf map.
///
/// The map together with the parent pointers yields the root-to-leaf path
/// of every user, which is what maintenance walks after re-aggregation.
#[derive(Debug)]
pub struct Synopsis {
    r_max: u32,
    gamma: usize,
    width: usize,
    nodes: Vec<Node>,
    root: usize,
    leaf_of: HashMap<UserId, usize>,
}

impl Synopsis {
    /// Build from scratch. `gamma` is the fanout bound (at least 2).
    pub fn build(g: &StreamingGraph, aux: &AuxStore, r_max: u32, gamma: usize, width: usize) -> Self {
        assert!(r_max >= 1, "synopsis needs at least one radius level");
        assert!(gamma >= 2, "fanout below two cannot form a tree");
        let users: Vec<UserId> = g.users().collect();
        let mut members: Vec<Member> = {
            use rayon::prelude::*;
            users
                .par_iter()
                .map(|&u| {
                    let agg = exact_user_aggregates(g, aux, u, r_max, width);
                    let key = agg.sum_key();
                    Member { user: u, key, agg }
                })
                .collect()
        };
        members.sort_by(|a, b| b.key.cmp(&a.key).then(a.user.cmp(&b.user)));

        let mut syn = Synopsis {
            r_max,
            gamma,
            width,
            nodes: Vec::new(),
            root: 0,
            leaf_of: HashMap::new(),
        };

        if members.is_empty() {
            syn.root = syn.push_node(None, NodeKind::Leaf(Vec::new()));
            return syn;
        }

        let mut level: Vec<usize> = Vec::new();
        for chunk in members.chunks(gamma) {
            let id = syn.push_node(None, NodeKind::Leaf(chunk.to_vec()));
            for m in chunk {
                syn.leaf_of.insert(m.user, id);
            }
            level.push(id);
        }
        while level.len() > 1 {
            let mut next = Vec::new();
            for chunk in level.chunks(gamma) {
                let id = syn.push_node(None, NodeKind::Internal(chunk.to_vec()));
                for &c in chunk {
                    syn.nodes[c].parent = Some(id);
                }
                next.push(id);
            }
            level = next;
        }
        syn.root = level[0];
        syn
    }

    fn push_node(&mut self, parent: Option<usize>, kind: NodeKind) -> usize {
        let id = self.nodes.len();
        let mut node = Node {
            parent,
            users: 0,
            agg: Aggregates::zero(self.r_max, self.width),
            kind,
        };
        Self::refold(&mut node, &self.nodes, self.r_max, self.width);
        self.nodes.push(node);
        id
    }

    /// Recompute a node's fold and user count from its payload.
    fn refold(node: &mut Node, arena: &[Node], r_max: u32, width: usize) {
        let mut agg = Aggregates::zero(r_max, width);
        let mut users = 0;
        match &node.kind {
            NodeKind::Leaf(members) => {
                for m in members {
                    agg.merge_max(&m.agg);
                }
                users = members.len();
            }
            NodeKind::Internal(children) => {
                for &c in children {
                    agg.merge_max(&arena[c].agg);
                    users += arena[c].users;
                }
            }
        }
        node.agg = agg;
        node.users = users;
    }

    fn refold_at(&mut self, id: usize) {
        let mut node = std::mem::replace(
            &mut self.nodes[id],
            Node {
                parent: None,
                users: 0,
                agg: Aggregates::zero(self.r_max, self.width),
                kind: NodeKind::Internal(Vec::new()),
            },
        );
        Self::refold(&mut node, &self.nodes, self.r_max, self.width);
        self.nodes[id] = node;
    }

    pub fn r_max(&self) -> u32 {
        self.r_max
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn num_users(&self) -> usize {
        self.nodes[self.root].users
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_users(&self, id: usize) -> usize {
        self.nodes[id].users
    }

    pub fn node_agg(&self, id: usize) -> &Aggregates {
        &self.nodes[id].agg
    }

    pub fn expand(&self, id: usize) -> NodeView<'_> {
        match &self.nodes[id].kind {
            NodeKind::Leaf(members) => NodeView::Leaf(members),
            NodeKind::Internal(children) => NodeView::Internal(children),
        }
    }

    /// Root-to-leaf node path for a user, if the user is indexed.
    pub fn path_of(&self, u: UserId) -> Option<Vec<usize>> {
        let mut id = *self.leaf_of.get(&u)?;
        let mut path = vec![id];
        while let Some(p) = self.nodes[id].parent {
            path.push(p);
            id = p;
        }
        path.reverse();
        Some(path)
    }

    /// The stored per-radius summaries for one user, if indexed.
    pub fn user_agg(&self, u: UserId) -> Option<&Aggregates> {
        let leaf = *self.leaf_of.get(&u)?;
        match &self.nodes[leaf].kind {
            NodeKind::Leaf(members) => {
                members.iter().find(|m| m.user == u).map(|m| &m.agg)
            }
            NodeKind::Internal(_) => unreachable!("leaf_of points at a leaf"),
        }
    }

    /// Refresh summaries after one edge change.
    ///
    /// Every summary someone stores is a function of their ball's contents,
    /// and any content or bound the delta touched lies inside the balls of
    /// [`affected_users`], so exact re-aggregation of that set is
    /// sufficient. Both directions re-aggregate (a change never merges in
    /// monotonically) because expirations shrink values and the maintained
    /// tree must stay byte-equal to a fresh build's member data.
    pub fn maintain(&mut self, g: &StreamingGraph, aux: &AuxStore, delta: &EdgeDelta) {
        let affected =
            affected_users(g, delta, self.r_max).expect("r_max is validated at build time");
        for u in affected {
            self.refresh_user(g, aux, u);
        }
    }

    fn refresh_user(&mut self, g: &StreamingGraph, aux: &AuxStore, u: UserId) {
        let fresh = exact_user_aggregates(g, aux, u, self.r_max, self.width);
        let key = fresh.sum_key();
        match self.leaf_of.get(&u).copied() {
            Some(leaf) => {
                let NodeKind::Leaf(members) = &mut self.nodes[leaf].kind else {
                    unreachable!("leaf_of points at a non-leaf");
                };
                let idx = members
                    .iter()
                    .position(|m| m.user == u)
                    .expect("leaf_of entry without a member");
                if members[idx].agg == fresh {
                    return;
                }
                members[idx].agg = fresh;
                members[idx].key = key;
                // Existing users keep their leaf; only the in-leaf order is
                // restored so placement of future users stays meaningful.
                members.sort_by(|a, b| b.key.cmp(&a.key).then(a.user.cmp(&b.user)));
                self.propagate_from(leaf);
            }
            None => self.insert_user(u, fresh),
        }
    }

    fn propagate_from(&mut self, mut id: usize) {
        loop {
            let before = self.nodes[id].agg.clone();
            let before_users = self.nodes[id].users;
            self.refold_at(id);
            if self.nodes[id].agg == before && self.nodes[id].users == before_users {
                return;
            }
            match self.nodes[id].parent {
                Some(p) => id = p,
                None => return,
            }
        }
    }

    /// Place a previously unseen user in the leaf whose key range sits
    /// closest to the user's key, then split upward as needed.
    fn insert_user(&mut self, u: UserId, agg: Aggregates) {
        let key = agg.sum_key();
        let leaf = self.closest_leaf(key);
        let NodeKind::Leaf(members) = &mut self.nodes[leaf].kind else {
            unreachable!("closest_leaf returned a non-leaf");
        };
        let pos = members
            .partition_point(|m| m.key > key || (m.key == key && m.user < u));
        members.insert(pos, Member { user: u, key, agg });
        self.leaf_of.insert(u, leaf);
        let overflow = members.len() > self.gamma;
        self.propagate_from(leaf);
        if overflow {
            self.split(leaf);
        }
    }

    fn closest_leaf(&self, key: u64) -> usize {
        let mut best: Option<(u64, usize)> = None;
        for (id, node) in self.nodes.iter().enumerate() {
            let NodeKind::Leaf(members) = &node.kind else { continue };
            let dist = if members.is_empty() {
                0
            } else {
                let hi = members[0].key;
                let lo = members[members.len() - 1].key;
                if key > hi {
                    key - hi
                } else if key < lo {
                    lo - key
                } else {
                    0
                }
            };
            if best.map_or(true, |(d, _)| dist < d) {
                best = Some((dist, id));
            }
        }
        best.expect("synopsis always has at least one leaf").1
    }

    /// Split an overflowing node in half, registering the upper half as a
    /// new sibling; splits cascade to the root, which grows the tree by one
    /// level when it overflows itself.
    fn split(&mut self, id: usize) {
        let keep;
        let moved_kind;
        match &mut self.nodes[id].kind {
            NodeKind::Leaf(members) => {
                keep = members.len().div_ceil(2);
                let rest = members.split_off(keep);
                moved_kind = NodeKind::Leaf(rest);
            }
            NodeKind::Internal(children) => {
                keep = children.len().div_ceil(2);
                let rest = children.split_off(keep);
                moved_kind = NodeKind::Internal(rest);
            }
        }
        let parent = self.nodes[id].parent;
        let sibling = self.push_node(parent, moved_kind);
        match &self.nodes[sibling].kind {
            NodeKind::Leaf(members) => {
                let users: Vec<UserId> = members.iter().map(|m| m.user).collect();
                for u in users {
                    self.leaf_of.insert(u, sibling);
                }
            }
            NodeKind::Internal(children) => {
                let children = children.clone();
                for c in children {
                    self.nodes[c].parent = Some(sibling);
                }
            }
        }
        self.refold_at(id);

        match parent {
            Some(p) => {
                let NodeKind::Internal(children) = &mut self.nodes[p].kind else {
                    unreachable!("parent of a split node must be internal");
                };
                let at = children
                    .iter()
                    .position(|&c| c == id)
                    .expect("child missing from its parent");
                children.insert(at + 1, sibling);
                let overflow = children.len() > self.gamma;
                self.propagate_from(p);
                if overflow {
                    self.split(p);
                }
            }
            None => {
                let new_root = self.push_node(None, NodeKind::Internal(vec![id, sibling]));
                self.nodes[id].parent = Some(new_root);
                self.nodes[sibling].parent = Some(new_root);
                self.refold_at(new_root);
                self.root = new_root;
            }
        }
    }

    /// Cross-check the index against the live graph. Returns one line per
    /// violation; empty means the maintained state equals a fresh rebuild
    /// member for member and every fold is exact.
    pub fn verify_consistency(&self, g: &StreamingGraph, aux: &AuxStore) -> Vec<String> {
        let mut problems = Vec::new();
        let mut seen = BTreeSet::new();
        for (id, node) in self.nodes.iter().enumerate() {
            if let NodeKind::Leaf(members) = &node.kind {
                for m in members {
                    if !seen.insert(m.user) {
                        problems.push(format!("user {:?} indexed twice", m.user));
                    }
                    if self.leaf_of.get(&m.user) != Some(&id) {
                        problems.push(format!("user {:?} leaf map mismatch", m.user));
                    }
                    let fresh = exact_user_aggregates(g, aux, m.user, self.r_max, self.width);
                    if m.agg != fresh {
                        problems.push(format!("user {:?} summaries are stale", m.user));
                    }
                    if m.key != m.agg.sum_key() {
                        problems.push(format!("user {:?} sort key is stale", m.user));
                    }
                }
            }
        }
        for u in g.users() {
            if !seen.contains(&u) {
                problems.push(format!("user {u:?} missing from the index"));
            }
        }
        // Reachability from the root, fold exactness, and parent pointers.
        let mut reached = vec![false; self.nodes.len()];
        let mut queue = VecDeque::from([self.root]);
        while let Some(id) = queue.pop_front() {
            if std::mem::replace(&mut reached[id], true) {
                problems.push(format!("node {id} reached twice"));
                continue;
            }
            let node = &self.nodes[id];
            let mut fold = Aggregates::zero(self.r_max, self.width);
            let mut users = 0;
            match &node.kind {
                NodeKind::Leaf(members) => {
                    for m in members {
                        fold.merge_max(&m.agg);
                    }
                    users = members.len();
                }
                NodeKind::Internal(children) => {
                    if children.is_empty() {
                        problems.push(format!("node {id} is an empty internal node"));
                    }
                    for &c in children {
                        if self.nodes[c].parent != Some(id) {
                            problems.push(format!("node {c} has a wrong parent pointer"));
                        }
                        fold.merge_max(&self.nodes[c].agg);
                        users += self.nodes[c].users;
                        queue.push_back(c);
                    }
                }
            }
            if fold != node.agg {
                problems.push(format!("node {id} fold is stale"));
            }
            if users != node.users {
                problems.push(format!("node {id} user count is stale"));
            }
        }
        if self.nodes[self.root].parent.is_some() {
            problems.push("root has a parent".to_string());
        }
        problems
    }

    /// Plain-text dump, one node per line: id, kind, per-radius summaries.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (id, node) in self.nodes.iter().enumerate() {
            let kind = match &node.kind {
                NodeKind::Leaf(members) => {
                    let users: Vec<String> =
                        members.iter().map(|m| format!("{}", m.user.0)).collect();
                    format!("leaf users=[{}]", users.join(","))
                }
                NodeKind::Internal(children) => {
                    let ids: Vec<String> = children.iter().map(|c| c.to_string()).collect();
                    format!("node children=[{}]", ids.join(","))
                }
            };
            let _ = write!(out, "{id} | {kind} |");
            for r in 1..=self.r_max {
                let _ = write!(
                    out,
                    " r{}: kw={} sup={} score={};",
                    r,
                    node.agg.bv(r).count_ones(),
                    node.agg.ub_sup(r),
                    node.agg.ub_score(r),
                );
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::keywords::DEFAULT_BITS;

    fn example() -> (StreamingGraph, AuxStore) {
        let g = fixtures::example_graph();
        let aux = AuxStore::build(&g);
        (g, aux)
    }

    #[test]
    fn summaries_on_the_example_graph() {
        let (g, aux) = example();
        let u2 = fixtures::user(&g, 2);
        let agg = exact_user_aggregates(&g, &aux, u2, 2, DEFAULT_BITS);
        // The radius-1 ball around u2 is the whole graph: the best edge sits
        // in two butterflies and the best pair scores 11.
        assert_eq!(agg.ub_sup(1), 2);
        assert_eq!(agg.ub_score(1), 11);
        assert_eq!(agg.ub_sup(2), 2);
        assert_eq!(agg.ub_score(2), 11);

        // u1 only touches v1, so at radius 1 its ball has that single item,
        // yet the induced edges still include the strong (u2,v1) and the
        // strong pair (u2,u3) is inside the ball.
        let u1 = fixtures::user(&g, 1);
        let agg = exact_user_aggregates(&g, &aux, u1, 2, DEFAULT_BITS);
        let v1_bits = &g.item_attrs(fixtures::item(&g, 1)).bits;
        assert_eq!(agg.bv(1), v1_bits);
        assert_eq!(agg.ub_sup(1), 2);
        assert_eq!(agg.ub_score(1), 11);
        // At radius 2 the items reached through u2 and u3 join.
        assert!(agg.bv(2).count_ones() > v1_bits.count_ones());
    }

    #[test]
    fn affected_set_covers_the_reach_of_a_change() {
        let (mut g, _) = example();
        let u2 = fixtures::user(&g, 2);
        let v2 = fixtures::item(&g, 2);
        let delta = g.apply_insert(u2, v2, 1).unwrap();

        // One update on (u2,v2) reaches every user through the shared v1.
        let got = affected_users(&g, &delta, 1).unwrap();
        let all: BTreeSet<UserId> = g.users().collect();
        assert_eq!(got, all);
        assert!(affected_users(&g, &delta, 0).is_err());
    }

    #[test]
    fn affected_set_recovers_pre_state_reach_of_a_removal() {
        // u1's window edge to v1 is the only thing connecting u1 to u2/u3.
        let mut g = StreamingGraph::new(1);
        let table = fixtures::example_keyword_table();
        let u1 = g.intern_user(1);
        let u2 = g.intern_user(2);
        let u3 = g.intern_user(3);
        let v1 = g.intern_item(
            1,
            crate::graph::ItemAttributes::new(vec![table.lookup("bank").unwrap()], &table),
        );
        let v9 = g.intern_item(
            9,
            crate::graph::ItemAttributes::new(vec![table.lookup("music").unwrap()], &table),
        );
        g.add_base_edge(u2, v1);
        g.add_base_edge(u3, v1);
        g.apply_insert(u1, v1, 1).unwrap();
        // The window holds one element; this slide expires (u1,v1).
        let (_, exp) = g.slide(u1, v9, 2).unwrap();
        let exp = exp.unwrap();
        assert_eq!(exp.new_weight, 0);

        // Post-state u1 only reaches v9, yet everyone who could see the
        // removed edge must be re-aggregated.
        let got = affected_users(&g, &exp, 1).unwrap();
        let want: BTreeSet<UserId> = [u1, u2, u3].into_iter().collect();
        assert_eq!(got, want);
    }

    #[test]
    fn build_is_consistent_and_paths_resolve() {
        let (g, aux) = example();
        let syn = Synopsis::build(&g, &aux, 2, 2, DEFAULT_BITS);
        assert_eq!(syn.num_users(), 3);
        assert!(syn.verify_consistency(&g, &aux).is_empty());
        for ext in 1..=3 {
            let u = fixtures::user(&g, ext);
            let path = syn.path_of(u).unwrap();
            assert_eq!(path[0], syn.root());
            // Every node on the path dominates the user's own summaries.
            let NodeView::Leaf(members) = syn.expand(*path.last().unwrap()) else {
                panic!("path must end at a leaf");
            };
            let member = members.iter().find(|m| m.user == u).unwrap();
            for &id in &path {
                assert!(syn.node_agg(id).dominates(&member.agg));
            }
        }
    }

    #[test]
    fn empty_graph_builds_an_empty_index() {
        let g = StreamingGraph::new(8);
        let aux = AuxStore::build(&g);
        let syn = Synopsis::build(&g, &aux, 2, 4, DEFAULT_BITS);
        assert_eq!(syn.num_users(), 0);
        assert!(syn.verify_consistency(&g, &aux).is_empty());
    }

    #[test]
    fn maintenance_tracks_slides_and_new_users() {
        let (mut g, mut aux) = example();
        let mut syn = Synopsis::build(&g, &aux, 2, 2, DEFAULT_BITS);

        // Strengthen an existing edge.
        let u3 = fixtures::user(&g, 3);
        let v1 = fixtures::item(&g, 1);
        let delta = g.apply_insert(u3, v1, 1).unwrap();
        aux.maintain(&g, &delta);
        syn.maintain(&g, &aux, &delta);
        assert!(syn.verify_consistency(&g, &aux).is_empty());

        // A brand new user lands in some leaf and splits keep the tree sound.
        for ext in 10..16 {
            let u = g.intern_user(ext);
            let v = fixtures::item(&g, 2);
            let tick = g.last_tick() + 1;
            let delta = g.apply_insert(u, v, tick).unwrap();
            aux.maintain(&g, &delta);
            syn.maintain(&g, &aux, &delta);
            assert!(syn.path_of(u).is_some());
            assert!(
                syn.verify_consistency(&g, &aux).is_empty(),
                "index went stale after inserting user {ext}"
            );
        }
    }

    #[test]
    fn maintenance_survives_expiry() {
        let mut g = StreamingGraph::new(4);
        let table = fixtures::example_keyword_table();
        let attrs = |words: &[&str]| {
            let kws: Vec<_> = words.iter().map(|w| table.lookup(w).unwrap()).collect();
            crate::graph::ItemAttributes::new(kws, &table)
        };
        let mut aux = AuxStore::build(&g);
        let mut syn = Synopsis::build(&g, &aux, 1, 2, DEFAULT_BITS);

        let stream = [(1u64, 1u64), (2, 1), (1, 2), (2, 2), (1, 1), (2, 3), (3, 3)];
        for (i, &(ue, ve)) in stream.iter().enumerate() {
            let u = g.intern_user(ue);
            let v = g.intern_item(ve, attrs(&["bank"]));
            // Maintain at the midpoint: each delta is applied to the state
            // it describes before the next one lands.
            let ins = g.apply_insert(u, v, (i + 1) as u64).unwrap();
            aux.maintain(&g, &ins);
            syn.maintain(&g, &aux, &ins);
            if g.window().needs_expire() {
                let exp = g.apply_expire().unwrap();
                aux.maintain(&g, &exp);
                syn.maintain(&g, &aux, &exp);
            }
            assert!(
                syn.verify_consistency(&g, &aux).is_empty(),
                "index went stale at step {i}"
            );
        }
        assert_eq!(aux, AuxStore::build(&g));
    }

    #[test]
    fn dump_lists_every_node() {
        let (g, aux) = example();
        let syn = Synopsis::build(&g, &aux, 2, 2, DEFAULT_BITS);
        let text = syn.dump();
        assert_eq!(text.lines().count(), syn.num_nodes());
        assert!(text.contains("leaf"));
    }
}

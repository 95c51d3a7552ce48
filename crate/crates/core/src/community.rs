//! Community extraction, certification, and the brute-force oracle.
//!
//! A community for a query (Q, k, r, sigma) around a center u_c is the
//! fixpoint of constraint peeling over the center's hop-bounded, keyword-
//! filtered neighborhood: edges must sit in at least k butterflies within
//! the subgraph, users must stay within r user-hops of the center, every
//! wedge-adjacent user pair must keep an in-subgraph relationship score of
//! at least sigma, and everything must remain connected to the center.
//! Candidates whose center loses its last edge yield nothing.
//!
//! [`maximal_bitruss`] is the production extractor; [`naive_extract`] is an
//! independent re-implementation that recomputes every quantity from
//! scratch each round and uses no cached bounds. Both must compute the same
//! function; the test suites hold them to that.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::hash::{Hash, Hasher};

use crate::error::{Error, Result};
use crate::graph::{ItemId, StreamingGraph, UserId};
use crate::prune::{self, ElementCounts, Rule};
use crate::query::QuerySpec;
use crate::scores::AuxStore;
use crate::view::SubgraphView;

/// Largest graph (in edges) the oracle agrees to enumerate.
pub const DEFAULT_ORACLE_CAP: usize = 300;

/// A certified community: sorted member lists plus the query thresholds it
/// was extracted under and a content signature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Community {
    pub center: UserId,
    pub users: Vec<UserId>,
    pub items: Vec<ItemId>,
    /// Sorted by (user, item); weights as of extraction time.
    pub edges: Vec<(UserId, ItemId, u32)>,
    pub k: u64,
    pub r: u32,
    pub sigma: u64,
    /// Hash of (users, items, edges, k, r, sigma). The center is excluded
    /// so that the same subgraph reached from different centers
    /// deduplicates to one community.
    pub signature: u64,
}

impl Community {
    fn from_view(view: &SubgraphView, spec: &QuerySpec) -> Self {
        let users: Vec<UserId> = view.users().collect();
        let items: Vec<ItemId> = view.items().collect();
        let edges: Vec<(UserId, ItemId, u32)> = view.edges().collect();
        let signature = signature_of(&users, &items, &edges, spec);
        Community {
            center: view.center(),
            users,
            items,
            edges,
            k: spec.k,
            r: spec.r,
            sigma: spec.sigma,
            signature,
        }
    }
}

/// Content signature over sorted members and thresholds; center-free.
pub fn signature_of(
    users: &[UserId],
    items: &[ItemId],
    edges: &[(UserId, ItemId, u32)],
    spec: &QuerySpec,
) -> u64 {
    debug_assert!(users.windows(2).all(|w| w[0] < w[1]));
    debug_assert!(edges.windows(2).all(|w| (w[0].0, w[0].1) < (w[1].0, w[1].1)));
    let mut h = DefaultHasher::new();
    spec.k.hash(&mut h);
    spec.r.hash(&mut h);
    spec.sigma.hash(&mut h);
    users.len().hash(&mut h);
    for u in users {
        u.0.hash(&mut h);
    }
    items.len().hash(&mut h);
    for v in items {
        v.0.hash(&mut h);
    }
    edges.len().hash(&mut h);
    for (u, v, w) in edges {
        u.0.hash(&mut h);
        v.0.hash(&mut h);
        w.hash(&mut h);
    }
    h.finish()
}

/// Outcome of one candidate extraction.
#[derive(Debug, Clone)]
pub struct Extraction {
    pub community: Option<Community>,
    /// The filter stage that killed the candidate before the peeling loop,
    /// if any; deaths inside the loop are ordinary peeling, not pruning.
    pub prefix_kill: Option<Rule>,
    /// Users/items/edges each pre-loop filter stage removed from the view,
    /// indexed by `Rule as usize`; loop peeling is not attributed.
    pub stage_elements: [ElementCounts; 8],
}

impl Extraction {
    fn dead(rule: Option<Rule>, stage_elements: [ElementCounts; 8]) -> Self {
        Extraction {
            community: None,
            prefix_kill: rule,
            stage_elements,
        }
    }
}

fn view_size(view: &SubgraphView) -> (u64, u64, u64) {
    (
        view.num_users() as u64,
        view.num_items() as u64,
        view.num_edges() as u64,
    )
}

fn size_diff(before: (u64, u64, u64), after: (u64, u64, u64)) -> ElementCounts {
    ElementCounts {
        users: before.0 - after.0,
        items: before.1 - after.1,
        edges: before.2 - after.2,
    }
}

/// Candidate is provably empty: the center lost its edges, or no edge can
/// reach support k in a layer this small.
fn is_dead(view: &SubgraphView, k: u64) -> bool {
    view.center_is_edgeless() || prune::layer_size_prune(view, k)
}

/// Extract the community centered at `center`, if any.
///
/// Pipeline: hop ball -> keyword filter -> two results-neutral speedups
/// (whole-graph support bound purge, one radius trim) -> fixpoint loop of
/// support peel, radius trim, score victim peel, and center-component
/// retention.
///
/// Death attribution before the loop: a fired layer-size check always
/// credits that rule (it is the detector), while an edgeless center credits
/// the stage that removed the last incident edge. Loop deaths are ordinary
/// peeling and credit nothing.
pub fn maximal_bitruss(
    g: &StreamingGraph,
    aux: &AuxStore,
    spec: &QuerySpec,
    center: UserId,
) -> Extraction {
    let mut elems = [ElementCounts::default(); 8];
    let mut view = SubgraphView::hop(g, center, spec.r);
    if view.center_is_edgeless() {
        // Nothing near the center at all; no filter gets credit.
        return Extraction::dead(None, elems);
    }
    if prune::layer_size_prune(&view, spec.k) {
        return Extraction::dead(Some(Rule::LayerSize), elems);
    }

    let before = view_size(&view);
    prune::keyword_prune(&mut view, g, spec);
    elems[Rule::KeywordFilter as usize] = size_diff(before, view_size(&view));
    if view.center_is_edgeless() {
        return Extraction::dead(Some(Rule::KeywordFilter), elems);
    }
    if prune::layer_size_prune(&view, spec.k) {
        return Extraction::dead(Some(Rule::LayerSize), elems);
    }

    let before = view_size(&view);
    prune::support_prune(&mut view, spec.k, aux);
    elems[Rule::SupportUpperBound as usize] = size_diff(before, view_size(&view));
    if view.center_is_edgeless() {
        return Extraction::dead(Some(Rule::SupportUpperBound), elems);
    }
    if prune::layer_size_prune(&view, spec.k) {
        return Extraction::dead(Some(Rule::LayerSize), elems);
    }

    // The trim removes users only, so the center keeps its edges here.
    let before = view_size(&view);
    prune::radius_prune(&mut view, spec.r);
    elems[Rule::Radius as usize] = size_diff(before, view_size(&view));
    if prune::layer_size_prune(&view, spec.k) {
        return Extraction::dead(Some(Rule::LayerSize), elems);
    }

    loop {
        let mut changed = peel_support(&mut view, spec.k);
        if is_dead(&view, spec.k) {
            return Extraction::dead(None, elems);
        }
        changed |= prune::radius_prune(&mut view, spec.r) > 0;
        changed |= peel_score(&mut view, spec.sigma);
        let before = (view.num_users(), view.num_items(), view.num_edges());
        view.retain_center_component();
        changed |= (view.num_users(), view.num_items(), view.num_edges()) != before;
        if is_dead(&view, spec.k) {
            return Extraction::dead(None, elems);
        }
        if !changed {
            break;
        }
    }

    let community = Community::from_view(&view, spec);
    debug_assert!(
        certify(&community, g, spec).is_empty(),
        "extractor produced an uncertifiable community: {:?}",
        certify(&community, g, spec)
    );
    Extraction {
        community: Some(community),
        prefix_kill: None,
        stage_elements: elems,
    }
}

/// Cascade-peel every edge whose in-view butterfly count is below `k`.
/// Returns true when anything was removed.
fn peel_support(view: &mut SubgraphView, k: u64) -> bool {
    let mut sup = view.support_map();
    let mut queue: VecDeque<(UserId, ItemId)> = sup
        .iter()
        .filter(|(_, c)| **c < k)
        .map(|(e, _)| *e)
        .collect();
    let mut queued: BTreeSet<(UserId, ItemId)> = queue.iter().copied().collect();
    let mut removed = false;
    while let Some((u, v)) = queue.pop_front() {
        if view.weight(u, v) == 0 {
            continue;
        }
        // Each butterfly {u, u2, v, v2} destroyed by dropping (u, v)
        // lowers the counts of its other three edges.
        let partners: Vec<UserId> = view
            .item_adj(v)
            .map(|s| s.iter().copied().filter(|u2| *u2 != u).collect())
            .unwrap_or_default();
        let seconds: Vec<ItemId> = view
            .user_adj(u)
            .map(|m| m.keys().copied().filter(|v2| *v2 != v).collect())
            .unwrap_or_default();
        for u2 in &partners {
            for v2 in &seconds {
                if view.weight(*u2, *v2) == 0 {
                    continue;
                }
                for other in [(u, *v2), (*u2, v), (*u2, *v2)] {
                    let c = sup.get_mut(&other).expect("support entry for live edge");
                    *c -= 1;
                    if *c < k && queued.insert(other) {
                        queue.push_back(other);
                    }
                }
            }
        }
        view.remove_edge(u, v);
        sup.remove(&(u, v));
        removed = true;
    }
    if removed {
        view.prune_isolated();
    }
    removed
}

/// Remove users violating the pairwise score constraint, one victim per
/// iteration, until no wedge-adjacent pair scores below `sigma` in view.
fn peel_score(view: &mut SubgraphView, sigma: u64) -> bool {
    let mut changed = false;
    loop {
        let center = view.center();
        let mut violating: Vec<(UserId, UserId)> = Vec::new();
        let mut agg: BTreeMap<UserId, u64> = BTreeMap::new();
        for (a, b) in view.wedge_pairs() {
            let s = view.pair_score(a, b);
            *agg.entry(a).or_insert(0) += s;
            *agg.entry(b).or_insert(0) += s;
            if s < sigma {
                violating.push((a, b));
            }
        }
        if violating.is_empty() {
            return changed;
        }
        let victim = prune::select_victim(&violating, center, |u| {
            agg.get(&u).copied().unwrap_or(0)
        })
        .expect("a violating pair always nominates a non-center victim");
        view.remove_user(victim);
        view.prune_isolated();
        changed = true;
    }
}

/// Check every community constraint from first principles. Returns a list
/// of violations; empty means certified.
pub fn certify(c: &Community, g: &StreamingGraph, spec: &QuerySpec) -> Vec<String> {
    let mut errs = Vec::new();
    if c.edges.is_empty() {
        errs.push("community has no edges".into());
        return errs;
    }
    if !c.users.contains(&c.center) {
        errs.push(format!("center {:?} not among users", c.center));
    }

    // Membership lists must match the edge list exactly.
    let edge_users: BTreeSet<UserId> = c.edges.iter().map(|(u, _, _)| *u).collect();
    let edge_items: BTreeSet<ItemId> = c.edges.iter().map(|(_, v, _)| *v).collect();
    if edge_users.iter().copied().collect::<Vec<_>>() != c.users {
        errs.push("user list disagrees with edge endpoints".into());
    }
    if edge_items.iter().copied().collect::<Vec<_>>() != c.items {
        errs.push("item list disagrees with edge endpoints".into());
    }

    // Edges must exist in the graph with the recorded weights.
    for (u, v, w) in &c.edges {
        let gw = g.weight(*u, *v);
        if gw != *w {
            errs.push(format!(
                "edge ({}, {}) weight {} in community but {} in graph",
                u.0, v.0, w, gw
            ));
        }
    }

    let view = SubgraphView::from_edges(c.center, &c.edges);

    // Keyword relevance of every item.
    for v in &c.items {
        if !prune::item_is_relevant(g, *v, spec) {
            errs.push(format!("item {} has no query keyword", v.0));
        }
    }

    // Connectivity plus the radius bound.
    let dist = view.user_distances();
    for u in &c.users {
        match dist.get(u) {
            None => errs.push(format!("user {} unreachable from center", u.0)),
            Some(d) if *d > spec.r => {
                errs.push(format!("user {} at {} hops > r = {}", u.0, d, spec.r))
            }
            _ => {}
        }
    }

    // Support of every edge inside the community.
    for (u, v, _) in &c.edges {
        let s = view.edge_support(*u, *v);
        if s < spec.k {
            errs.push(format!(
                "edge ({}, {}) support {} < k = {}",
                u.0, v.0, s, spec.k
            ));
        }
    }

    // Pairwise score of every wedge-adjacent user pair.
    for (a, b) in view.wedge_pairs() {
        let s = view.pair_score(a, b);
        if s < spec.sigma {
            errs.push(format!(
                "pair ({}, {}) score {} < sigma = {}",
                a.0, b.0, s, spec.sigma
            ));
        }
    }
    errs
}

/// Communities keyed by signature. The stored representative is the one
/// with the smallest producing center.
pub type ResultMap = BTreeMap<u64, Community>;

/// Brute-force enumeration over every center with all quantities recomputed
/// from scratch each round; ground truth at desk scale.
pub fn oracle_enumerate(g: &StreamingGraph, spec: &QuerySpec, cap: usize) -> Result<ResultMap> {
    if g.num_edges() > cap {
        return Err(Error::OracleTooLarge {
            edges: g.num_edges(),
            cap,
        });
    }
    let mut out = ResultMap::new();
    for center in g.users() {
        if let Some(c) = naive_extract(g, spec, center) {
            out.entry(c.signature).or_insert(c);
        }
    }
    Ok(out)
}

/// Independent re-implementation of the extraction semantics: explicit
/// layered ball construction, per-round full recomputation, butterfly
/// enumeration instead of the (X^2 - Y) / 2 identity, and no cached bounds.
pub fn naive_extract(g: &StreamingGraph, spec: &QuerySpec, center: UserId) -> Option<Community> {
    // Ball: users within r user-hops; items one step inside the frontier.
    let mut user_dist: BTreeMap<UserId, u32> = BTreeMap::new();
    user_dist.insert(center, 0);
    let mut ball_items: BTreeSet<ItemId> = BTreeSet::new();
    let mut frontier = vec![center];
    for d in 1..=spec.r {
        let mut next = Vec::new();
        for u in std::mem::take(&mut frontier) {
            for v in g.user_neighbors(u).keys() {
                if ball_items.insert(*v) {
                    for u2 in g.item_neighbors(*v).keys() {
                        if !user_dist.contains_key(u2) {
                            user_dist.insert(*u2, d);
                            next.push(*u2);
                        }
                    }
                }
            }
        }
        frontier = next;
    }

    // Keyword filter by exact set intersection only.
    ball_items.retain(|v| {
        g.item_attrs(*v)
            .keywords
            .iter()
            .any(|kw| spec.keywords.contains(kw))
    });

    let mut edges: BTreeSet<(UserId, ItemId)> = BTreeSet::new();
    for v in &ball_items {
        for u in g.item_neighbors(*v).keys() {
            if user_dist.contains_key(u) {
                edges.insert((*u, *v));
            }
        }
    }
    let mut users: BTreeSet<UserId> = edges.iter().map(|(u, _)| *u).collect();
    users.insert(center);
    let mut items: BTreeSet<ItemId> = edges.iter().map(|(_, v)| *v).collect();

    let weight = |edges: &BTreeSet<(UserId, ItemId)>, u: UserId, v: ItemId| -> u64 {
        if edges.contains(&(u, v)) {
            u64::from(g.weight(u, v))
        } else {
            0
        }
    };
    // In-subgraph relationship score by butterfly enumeration.
    let pair_score = |edges: &BTreeSet<(UserId, ItemId)>,
                      items: &BTreeSet<ItemId>,
                      a: UserId,
                      b: UserId|
     -> u64 {
        let common: Vec<u64> = items
            .iter()
            .filter(|v| edges.contains(&(a, **v)) && edges.contains(&(b, **v)))
            .map(|v| weight(edges, a, *v).min(weight(edges, b, *v)))
            .collect();
        let mut s = 0;
        for i in 0..common.len() {
            for j in (i + 1)..common.len() {
                s += common[i] * common[j];
            }
        }
        s
    };

    loop {
        let mut changed = false;

        // Support peel to fixpoint, bulk per sub-round.
        loop {
            let mut doomed: Vec<(UserId, ItemId)> = Vec::new();
            for (u, v) in &edges {
                let mut support = 0u64;
                for u2 in &users {
                    if u2 == u || !edges.contains(&(*u2, *v)) {
                        continue;
                    }
                    for v2 in &items {
                        if v2 != v
                            && edges.contains(&(*u, *v2))
                            && edges.contains(&(*u2, *v2))
                        {
                            support += 1;
                        }
                    }
                }
                if support < spec.k {
                    doomed.push((*u, *v));
                }
            }
            if doomed.is_empty() {
                break;
            }
            for e in doomed {
                edges.remove(&e);
            }
            changed = true;
        }
        drop_isolated(&mut users, &mut items, &edges, center);
        if !edges.iter().any(|(u, _)| *u == center) {
            return None;
        }

        // Radius trim by distances inside the current subgraph.
        let dist = bfs_in_subgraph(&users, &items, &edges, center);
        let far: Vec<UserId> = users
            .iter()
            .filter(|u| dist.get(u).map_or(true, |d| *d > spec.r))
            .copied()
            .collect();
        for u in far {
            edges.retain(|(eu, _)| *eu != u);
            users.remove(&u);
            changed = true;
        }
        drop_isolated(&mut users, &mut items, &edges, center);

        // Score victim peel to fixpoint.
        loop {
            let mut pairs: Vec<(UserId, UserId, u64)> = Vec::new();
            let ulist: Vec<UserId> = users.iter().copied().collect();
            for i in 0..ulist.len() {
                for j in (i + 1)..ulist.len() {
                    let share = items.iter().any(|v| {
                        edges.contains(&(ulist[i], *v)) && edges.contains(&(ulist[j], *v))
                    });
                    if share {
                        pairs.push((
                            ulist[i],
                            ulist[j],
                            pair_score(&edges, &items, ulist[i], ulist[j]),
                        ));
                    }
                }
            }
            let violating: Vec<(UserId, UserId)> = pairs
                .iter()
                .filter(|(_, _, s)| *s < spec.sigma)
                .map(|(a, b, _)| (*a, *b))
                .collect();
            if violating.is_empty() {
                break;
            }
            let mut agg: BTreeMap<UserId, u64> = BTreeMap::new();
            for (a, b, s) in &pairs {
                *agg.entry(*a).or_insert(0) += s;
                *agg.entry(*b).or_insert(0) += s;
            }
            let victim =
                prune::select_victim(&violating, center, |u| agg.get(&u).copied().unwrap_or(0))
                    .expect("non-center victim");
            edges.retain(|(eu, _)| *eu != victim);
            users.remove(&victim);
            drop_isolated(&mut users, &mut items, &edges, center);
            changed = true;
        }

        // Keep the center's component.
        let reach = bfs_in_subgraph(&users, &items, &edges, center);
        let stranded: Vec<UserId> = users
            .iter()
            .filter(|u| !reach.contains_key(u))
            .copied()
            .collect();
        for u in stranded {
            edges.retain(|(eu, _)| *eu != u);
            users.remove(&u);
            changed = true;
        }
        drop_isolated(&mut users, &mut items, &edges, center);
        if !edges.iter().any(|(u, _)| *u == center) {
            return None;
        }
        if !changed {
            break;
        }
    }

    let edge_list: Vec<(UserId, ItemId, u32)> = edges
        .iter()
        .map(|(u, v)| (*u, *v, g.weight(*u, *v)))
        .collect();
    let users: Vec<UserId> = users.iter().copied().collect();
    let items: Vec<ItemId> = items.iter().copied().collect();
    let signature = signature_of(&users, &items, &edge_list, spec);
    Some(Community {
        center,
        users,
        items,
        edges: edge_list,
        k: spec.k,
        r: spec.r,
        sigma: spec.sigma,
        signature,
    })
}

fn drop_isolated(
    users: &mut BTreeSet<UserId>,
    items: &mut BTreeSet<ItemId>,
    edges: &BTreeSet<(UserId, ItemId)>,
    center: UserId,
) {
    users.retain(|u| *u == center || edges.iter().any(|(eu, _)| eu == u));
    items.retain(|v| edges.iter().any(|(_, ev)| ev == v));
}

fn bfs_in_subgraph(
    users: &BTreeSet<UserId>,
    items: &BTreeSet<ItemId>,
    edges: &BTreeSet<(UserId, ItemId)>,
    center: UserId,
) -> BTreeMap<UserId, u32> {
    let mut dist = BTreeMap::new();
    dist.insert(center, 0u32);
    let mut queue = VecDeque::from([center]);
    while let Some(u) = queue.pop_front() {
        let d = dist[&u];
        for v in items {
            if !edges.contains(&(u, *v)) {
                continue;
            }
            for u2 in users {
                if !dist.contains_key(u2) && edges.contains(&(*u2, *v)) {
                    dist.insert(*u2, d + 1);
                    queue.push_back(*u2);
                }
            }
        }
    }
    dist
}

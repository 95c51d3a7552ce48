//! Candidate-level filters and the pruning bookkeeping for benchmarks.
//!
//! Filters come in two kinds with very different contracts:
//!
//! * **View transforms** (`keyword_prune`, `support_prune`, `radius_prune`,
//!   `layer_size_prune`, `score_ub_prune`): each removes elements that some
//!   proof obligation marks as unable to appear in a valid community. The
//!   extraction pipeline only employs the transforms whose removals are
//!   results-neutral (removing elements the peeling loop would kill anyway),
//!   so toggling them can never change the detected communities.
//! * **Entry tests** (`entry_*`): cheap aggregate checks that skip a whole
//!   candidate center (or synopsis subtree) before any view is built. They
//!   are gated by [`PruneFlags`] and attributed in a [`PruneReport`].

use crate::graph::{StreamingGraph, UserId};
use crate::query::QuerySpec;
use crate::scores::AuxStore;
use crate::synopsis::Aggregates;
use crate::view::SubgraphView;

/// Identifiers for the eight filter rules, used for attribution counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    /// Keyword-irrelevant items can be dropped from any candidate.
    KeywordFilter = 0,
    /// Edges whose whole-graph butterfly count is below k cannot survive.
    SupportUpperBound = 1,
    /// (|U|-1)(|L|-1) < k admits no edge with support k.
    LayerSize = 2,
    /// Users beyond distance 2r of the center cannot stay.
    Radius = 3,
    /// Wedge pairs whose whole-graph score is below sigma cannot coexist.
    ScoreUpperBound = 4,
    /// Entry test: aggregated keyword bits miss the query entirely.
    EntryKeyword = 5,
    /// Entry test: aggregated support bound below k.
    EntrySupport = 6,
    /// Entry test: aggregated score bound below sigma (plus early stop).
    EntryScore = 7,
}

impl Rule {
    pub const ALL: [Rule; 8] = [
        Rule::KeywordFilter,
        Rule::SupportUpperBound,
        Rule::LayerSize,
        Rule::Radius,
        Rule::ScoreUpperBound,
        Rule::EntryKeyword,
        Rule::EntrySupport,
        Rule::EntryScore,
    ];

    /// Stable column name for CSV output.
    pub fn name(self) -> &'static str {
        match self {
            Rule::KeywordFilter => "keyword-filter",
            Rule::SupportUpperBound => "support-bound",
            Rule::LayerSize => "layer-size",
            Rule::Radius => "radius",
            Rule::ScoreUpperBound => "score-bound",
            Rule::EntryKeyword => "entry-keyword",
            Rule::EntrySupport => "entry-support",
            Rule::EntryScore => "entry-score",
        }
    }
}

/// Which rules participate in entry skipping and which are credited in the
/// report. View transforms run regardless; their flag only controls whether
/// a candidate killed by that stage is counted as pruned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PruneFlags {
    pub enabled: [bool; 8],
}

impl PruneFlags {
    pub fn all() -> Self {
        PruneFlags {
            enabled: [true; 8],
        }
    }

    pub fn none() -> Self {
        PruneFlags {
            enabled: [false; 8],
        }
    }

    /// Support-bound family: layer size, edge support bound, entry support.
    pub fn support_family() -> Self {
        let mut f = Self::none();
        f.enable(Rule::SupportUpperBound);
        f.enable(Rule::LayerSize);
        f.enable(Rule::EntrySupport);
        f
    }

    /// Support + score-bound families (score adds the entry score test and
    /// traversal early termination).
    pub fn support_score_family() -> Self {
        let mut f = Self::support_family();
        f.enable(Rule::ScoreUpperBound);
        f.enable(Rule::EntryScore);
        f
    }

    /// All three families; same as `all`.
    pub fn support_score_keyword_family() -> Self {
        let mut f = Self::support_score_family();
        f.enable(Rule::KeywordFilter);
        f.enable(Rule::EntryKeyword);
        f
    }

    pub fn enable(&mut self, rule: Rule) {
        self.enabled[rule as usize] = true;
    }

    pub fn disable(&mut self, rule: Rule) {
        self.enabled[rule as usize] = false;
    }

    pub fn is_enabled(&self, rule: Rule) -> bool {
        self.enabled[rule as usize]
    }

    /// `all` with exactly one rule turned off (the soundness-ablation shape).
    pub fn all_but(rule: Rule) -> Self {
        let mut f = Self::all();
        f.disable(rule);
        f
    }
}

impl Default for PruneFlags {
    fn default() -> Self {
        Self::all()
    }
}

/// Elements removed from a candidate view by one stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ElementCounts {
    pub users: u64,
    pub items: u64,
    pub edges: u64,
}

impl ElementCounts {
    pub fn add(&mut self, other: &ElementCounts) {
        self.users += other.users;
        self.items += other.items;
        self.edges += other.edges;
    }

    pub fn is_zero(&self) -> bool {
        *self == ElementCounts::default()
    }
}

/// Counters for one query run. A candidate center is "pruned" when an entry
/// test skipped it or a credited prefix stage killed it; each center counts
/// at most once.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PruneReport {
    /// Pruned-candidate counts by rule (indexed by `Rule as usize`).
    pub pruned_by_rule: [u64; 8],
    /// Users/items/edges removed inside candidate views, by rule.
    pub elements_by_rule: [ElementCounts; 8],
    /// Centers whose view was actually built and peeled.
    pub candidates_extracted: u64,
    /// Extractions that produced a community (before dedup).
    pub communities_found: u64,
    /// Leaf entries whose aggregates were tested.
    pub entries_tested: u64,
    /// Traversal stops triggered by the score-ordered frontier.
    pub early_terminations: u64,
}

impl PruneReport {
    pub fn credit(&mut self, rule: Rule, candidates: u64) {
        self.pruned_by_rule[rule as usize] += candidates;
    }

    pub fn credit_elements(&mut self, rule: Rule, counts: &ElementCounts) {
        self.elements_by_rule[rule as usize].add(counts);
    }

    pub fn merge(&mut self, other: &PruneReport) {
        for (mine, theirs) in self.pruned_by_rule.iter_mut().zip(&other.pruned_by_rule) {
            *mine += theirs;
        }
        for (mine, theirs) in self.elements_by_rule.iter_mut().zip(&other.elements_by_rule) {
            mine.add(theirs);
        }
        self.candidates_extracted += other.candidates_extracted;
        self.communities_found += other.communities_found;
        self.entries_tested += other.entries_tested;
        self.early_terminations += other.early_terminations;
    }

    /// Total pruned candidates across all rules.
    pub fn total_pruned(&self) -> u64 {
        self.pruned_by_rule.iter().sum()
    }
}

/// First enabled aggregate test that rules the entry out, in the fixed
/// keyword, support, score order; `None` means the entry must be visited.
/// With all flags on this is the plain "first lemma that fires" test.
pub fn entry_test(agg: &Aggregates, spec: &QuerySpec, flags: &PruneFlags) -> Option<Rule> {
    debug_assert!(spec.r >= 1 && spec.r <= agg.r_max());
    if flags.is_enabled(Rule::EntryKeyword) && !agg.bv(spec.r).intersects(&spec.bits) {
        return Some(Rule::EntryKeyword);
    }
    if flags.is_enabled(Rule::EntrySupport) && agg.ub_sup(spec.r) < spec.k {
        return Some(Rule::EntrySupport);
    }
    if flags.is_enabled(Rule::EntryScore) && agg.ub_score(spec.r) < spec.sigma {
        return Some(Rule::EntryScore);
    }
    None
}

/// True when the item keyword set intersects the query keywords, using the
/// bit pretest first and confirming against the exact sorted sets.
pub fn item_is_relevant(g: &StreamingGraph, v: crate::graph::ItemId, spec: &QuerySpec) -> bool {
    let attrs = g.item_attrs(v);
    if !attrs.bits.intersects(&spec.bits) {
        return false;
    }
    attrs
        .keywords
        .iter()
        .any(|kw| spec.keywords.contains(kw))
}

/// Remove every keyword-irrelevant item (and its edges) from the view.
/// Returns the number of items removed.
pub fn keyword_prune(view: &mut SubgraphView, g: &StreamingGraph, spec: &QuerySpec) -> usize {
    let doomed: Vec<_> = view
        .items()
        .filter(|v| !item_is_relevant(g, *v, spec))
        .collect();
    for v in &doomed {
        view.remove_item(*v);
    }
    view.prune_isolated();
    doomed.len()
}

/// Remove every edge whose whole-graph butterfly count is below `k`.
/// Returns the number of edges removed.
///
/// Results-neutral: an edge set in which every member has in-set support
/// at least k cannot contain an edge with fewer than k butterflies in the
/// whole graph, so the support-peel fixpoint is unchanged.
pub fn support_prune(view: &mut SubgraphView, k: u64, aux: &AuxStore) -> usize {
    let doomed: Vec<_> = view
        .edges()
        .filter(|(u, v, _)| aux.edge_ub(*u, *v) < k)
        .map(|(u, v, _)| (u, v))
        .collect();
    for (u, v) in &doomed {
        view.remove_edge(*u, *v);
    }
    view.prune_isolated();
    doomed.len()
}

/// True when no subgraph of `view` can host an edge with support `k`:
/// each edge sits in at most (|U|-1)(|L|-1) butterflies.
pub fn layer_size_prune(view: &SubgraphView, k: u64) -> bool {
    let u = view.num_users() as u64;
    let l = view.num_items() as u64;
    u.saturating_sub(1) * l.saturating_sub(1) < k
}

/// Remove users farther than `r` user-hops from the center in the current
/// view (unreachable ones included). Returns the number removed.
pub fn radius_prune(view: &mut SubgraphView, r: u32) -> usize {
    let dist = view.user_distances();
    let doomed: Vec<UserId> = view
        .users()
        .filter(|u| dist.get(u).map_or(true, |d| *d > r))
        .collect();
    for u in &doomed {
        view.remove_user(*u);
    }
    view.prune_isolated();
    doomed.len()
}

/// Iteratively remove users from wedge pairs whose whole-graph relationship
/// score is below `sigma`; the center is never removed. Returns false only
/// if a violation cannot be resolved without removing the center, which the
/// non-center-first victim rule makes unreachable; callers may treat false
/// as "discard the candidate".
///
/// Not used by the extraction pipeline: victim choices driven by
/// whole-graph scores are not interchangeable with the in-view peeling the
/// detected communities are defined by. Exposed for measurement and tests.
pub fn score_ub_prune(
    view: &mut SubgraphView,
    sigma: u64,
    aux: &AuxStore,
) -> bool {
    loop {
        let center = view.center();
        let mut violating: Vec<(UserId, UserId)> = Vec::new();
        let mut agg: std::collections::BTreeMap<UserId, u64> = std::collections::BTreeMap::new();
        for (a, b) in view.wedge_pairs() {
            let s = aux.pair_score(a, b);
            *agg.entry(a).or_insert(0) += s;
            *agg.entry(b).or_insert(0) += s;
            if s < sigma {
                violating.push((a, b));
            }
        }
        if violating.is_empty() {
            return true;
        }
        let victim = select_victim(&violating, center, |u| agg.get(&u).copied().unwrap_or(0));
        let Some(victim) = victim else {
            return false;
        };
        view.remove_user(victim);
        view.prune_isolated();
    }
}

/// Nominate one user to remove for a set of violating wedge pairs: each
/// pair offers its non-center endpoint (both non-center: the endpoint with
/// smaller (aggregate, id)); the overall smallest (aggregate, id) nominee
/// is picked. None when every violation pins the center on both sides,
/// which cannot happen for distinct-user pairs.
pub fn select_victim(
    violating: &[(UserId, UserId)],
    center: UserId,
    aggregate: impl Fn(UserId) -> u64,
) -> Option<UserId> {
    let mut best: Option<(u64, UserId)> = None;
    for (a, b) in violating {
        debug_assert_ne!(a, b);
        let nominee = if *a == center {
            *b
        } else if *b == center {
            *a
        } else {
            let ka = (aggregate(*a), *a);
            let kb = (aggregate(*b), *b);
            if ka <= kb {
                *a
            } else {
                *b
            }
        };
        if nominee == center {
            continue;
        }
        let key = (aggregate(nominee), nominee);
        if best.map_or(true, |b| key < b) {
            best = Some(key);
        }
    }
    best.map(|(_, u)| u)
}

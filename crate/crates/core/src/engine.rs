//! The retrieval engine: snapshot queries over the synopsis and rolling
//! maintenance of registered continuous queries across window slides.
//!
//! A snapshot run walks the synopsis best-first, keyed by the per-radius
//! score bound, skipping every subtree and user entry an aggregate test
//! rules out, and hands the survivors to the community extractor in
//! parallel. Continuous mode keeps a per-center record of what each
//! candidate last produced; a slide re-extracts exactly the centers whose
//! r-hop ball could have changed and folds the differences into the stored
//! result set, so the rolling answer always equals a fresh snapshot.

use std::cmp::Reverse;
use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use rayon::prelude::*;

use crate::community::{self, Community, ResultMap};
use crate::error::{Error, Result};
use crate::graph::{EdgeDelta, ItemAttributes, ItemId, StreamingGraph, UserId};
use crate::keywords::DEFAULT_BITS;
use crate::prune::{self, PruneFlags, PruneReport, Rule};
use crate::query::QuerySpec;
use crate::scores::AuxStore;
use crate::synopsis::{NodeView, Synopsis};

/// Construction-time knobs.
#[derive(Debug, Clone)]
pub struct EngineConfig {
    /// Largest query radius the synopsis can answer.
    pub r_max: u32,
    /// Synopsis fanout bound.
    pub gamma: usize,
    /// Build and maintain the synopsis; without it every user is a
    /// candidate and no entry test runs.
    pub use_synopsis: bool,
    /// Entry-test and attribution toggles; results never depend on them.
    pub flags: PruneFlags,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            r_max: 3,
            gamma: 32,
            use_synopsis: true,
            flags: PruneFlags::all(),
        }
    }
}

/// A query's answer: deduplicated communities at a specific tick.
#[derive(Debug, Clone)]
pub struct ResultSet {
    pub spec: QuerySpec,
    /// Tick of the last update applied before this answer was computed.
    pub as_of: u64,
    pub communities: ResultMap,
}

/// What one slide did.
#[derive(Debug, Clone)]
pub struct SlideOutcome {
    pub insert: EdgeDelta,
    pub expire: Option<EdgeDelta>,
    /// Candidate centers re-examined across all registered queries.
    pub refreshed_centers: u64,
}

/// Rolling state for one registered query.
///
/// `results` is the deduplicated answer. `producers` maps each signature to
/// every center currently extracting that content and `center_sig` is its
/// inverse; the stored representative is always the smallest producer.
#[derive(Debug, Default)]
struct ContinuousState {
    results: ResultMap,
    producers: BTreeMap<u64, BTreeSet<UserId>>,
    center_sig: BTreeMap<UserId, u64>,
    as_of: u64,
}

/// Owns the graph, the exact pair/bound store, and the optional synopsis,
/// keeping the three consistent across slides.
#[derive(Debug)]
pub struct Engine {
    g: StreamingGraph,
    aux: AuxStore,
    syn: Option<Synopsis>,
    flags: PruneFlags,
    report: PruneReport,
    continuous: BTreeMap<QuerySpec, ContinuousState>,
}

impl Engine {
    /// Wrap a loaded graph. Keyword-bit width is taken from the graph's
    /// items, which are interned through the same table as any query spec;
    /// a graph that starts empty falls back to the default width.
    pub fn new(g: StreamingGraph, cfg: EngineConfig) -> Self {
        let aux = AuxStore::build(&g);
        let width = g
            .items()
            .next()
            .map(|v| g.item_attrs(v).bits.width())
            .unwrap_or(DEFAULT_BITS);
        let syn = cfg
            .use_synopsis
            .then(|| Synopsis::build(&g, &aux, cfg.r_max, cfg.gamma, width));
        Engine {
            g,
            aux,
            syn,
            flags: cfg.flags,
            report: PruneReport::default(),
            continuous: BTreeMap::new(),
        }
    }

    pub fn graph(&self) -> &StreamingGraph {
        &self.g
    }

    pub fn aux(&self) -> &AuxStore {
        &self.aux
    }

    pub fn synopsis(&self) -> Option<&Synopsis> {
        self.syn.as_ref()
    }

    pub fn flags(&self) -> &PruneFlags {
        &self.flags
    }

    pub fn set_flags(&mut self, flags: PruneFlags) {
        self.flags = flags;
    }

    /// Counters accumulated by registration and slides.
    pub fn report(&self) -> &PruneReport {
        &self.report
    }

    pub fn reset_report(&mut self) {
        self.report = PruneReport::default();
    }

    /// Intern pass-throughs so a replay loop can name vertices without
    /// holding the graph itself.
    pub fn intern_user(&mut self, ext: u64) -> UserId {
        self.g.intern_user(ext)
    }

    pub fn intern_item(&mut self, ext: u64, attrs: ItemAttributes) -> ItemId {
        self.g.intern_item(ext, attrs)
    }

    /// Cross-check the maintained synopsis against fresh recomputation.
    pub fn verify_integrity(&self) -> Vec<String> {
        match &self.syn {
            Some(syn) => syn.verify_consistency(&self.g, &self.aux),
            None => Vec::new(),
        }
    }

    fn check_radius(&self, spec: &QuerySpec) -> Result<()> {
        if let Some(syn) = &self.syn {
            if spec.r > syn.r_max() {
                return Err(Error::InvalidParameter(format!(
                    "query radius {} exceeds the synopsis radius cap {}",
                    spec.r,
                    syn.r_max()
                )));
            }
        }
        Ok(())
    }

    /// One-time retrieval at the current tick. Returns the deduplicated
    /// result set plus this run's counters; the engine's cumulative report
    /// is left alone.
    pub fn snapshot(&self, spec: &QuerySpec) -> Result<(ResultSet, PruneReport)> {
        self.check_radius(spec)?;
        let mut report = PruneReport::default();
        let centers = self.candidate_centers(spec, &mut report);
        let mut communities = ResultMap::new();
        for (_, found) in self.extract_all(spec, &centers, &mut report) {
            if let Some(c) = found {
                communities.entry(c.signature).or_insert(c);
            }
        }
        Ok((
            ResultSet {
                spec: spec.clone(),
                as_of: self.g.last_tick(),
                communities,
            },
            report,
        ))
    }

    /// Start maintaining `spec` continuously; the initial answer is a full
    /// evaluation at the current tick. Re-registering is a no-op. Returns
    /// the number of distinct communities currently held.
    pub fn register(&mut self, spec: &QuerySpec) -> Result<usize> {
        self.check_radius(spec)?;
        if let Some(state) = self.continuous.get(spec) {
            return Ok(state.results.len());
        }
        let mut report = PruneReport::default();
        let centers = self.candidate_centers(spec, &mut report);
        let evals = self.extract_all(spec, &centers, &mut report);
        let mut state = ContinuousState {
            as_of: self.g.last_tick(),
            ..ContinuousState::default()
        };
        Self::fold_center_updates(&mut state, evals);
        self.report.merge(&report);
        let n = state.results.len();
        self.continuous.insert(spec.clone(), state);
        Ok(n)
    }

    /// Stop maintaining `spec`. Unknown specs are a no-op.
    pub fn unregister(&mut self, spec: &QuerySpec) -> bool {
        self.continuous.remove(spec).is_some()
    }

    /// The rolling answer for a registered query.
    pub fn results(&self, spec: &QuerySpec) -> Option<ResultSet> {
        self.continuous.get(spec).map(|state| ResultSet {
            spec: spec.clone(),
            as_of: state.as_of,
            communities: state.results.clone(),
        })
    }

    pub fn registered(&self) -> impl Iterator<Item = &QuerySpec> {
        self.continuous.keys()
    }

    /// One window slide: the new occurrence lands, then the oldest expires
    /// if the window overflowed. Summaries are maintained after each delta.
    ///
    /// Every registered query re-extracts exactly the candidate centers
    /// whose r-ball could have changed: users within r user-hops of either
    /// delta's user endpoint, measured at the midpoint state where both the
    /// new and the expiring edge exist. Any ball content a delta added or
    /// removed is reachable through its edge at that midpoint, so centers
    /// outside these sets keep their previous extraction verbatim.
    pub fn slide(&mut self, u: UserId, v: ItemId, tick: u64) -> Result<SlideOutcome> {
        let insert = self.g.apply_insert(u, v, tick)?;
        self.aux.maintain(&self.g, &insert);
        if let Some(syn) = &mut self.syn {
            syn.maintain(&self.g, &self.aux, &insert);
        }

        let expiring = self.g.window().needs_expire().then(|| {
            self.g
                .window()
                .iter()
                .next()
                .expect("overfull window has a head")
                .user
        });
        let mut affected: BTreeMap<QuerySpec, BTreeSet<UserId>> = BTreeMap::new();
        for spec in self.continuous.keys() {
            let mut set: BTreeSet<UserId> =
                self.g.users_within_hops(u, spec.r).into_keys().collect();
            if let Some(eu) = expiring {
                set.extend(self.g.users_within_hops(eu, spec.r).into_keys());
            }
            affected.insert(spec.clone(), set);
        }

        let expire = if self.g.window().needs_expire() {
            let delta = self.g.apply_expire()?;
            self.aux.maintain(&self.g, &delta);
            if let Some(syn) = &mut self.syn {
                syn.maintain(&self.g, &self.aux, &delta);
            }
            Some(delta)
        } else {
            None
        };

        let mut refreshed = 0u64;
        let mut report = PruneReport::default();
        // The map is detached during refresh so extraction can borrow the
        // graph; registration and unregistration cannot interleave here.
        let mut continuous = std::mem::take(&mut self.continuous);
        for (spec, state) in continuous.iter_mut() {
            let centers = affected.remove(spec).unwrap_or_default();
            refreshed += centers.len() as u64;
            let evals = self.refresh_centers(spec, &centers, &mut report);
            Self::fold_center_updates(state, evals);
            state.as_of = tick;
        }
        self.continuous = continuous;
        self.report.merge(&report);
        Ok(SlideOutcome {
            insert,
            expire,
            refreshed_centers: refreshed,
        })
    }

    /// Candidate centers for a full evaluation, ascending.
    fn candidate_centers(&self, spec: &QuerySpec, report: &mut PruneReport) -> Vec<UserId> {
        match &self.syn {
            Some(syn) => {
                let mut survivors = self.synopsis_survivors(syn, spec, report);
                survivors.sort_unstable();
                survivors
            }
            None => self.g.users().collect(),
        }
    }

    /// Best-first synopsis traversal. Subtrees are screened by the keyword
    /// and support aggregates before entering the max-heap; the heap key is
    /// the subtree's score bound at the query radius, so the first popped
    /// key below sigma proves every remaining entry is skippable and stops
    /// the walk. Users in surviving leaves are tested individually.
    fn synopsis_survivors(
        &self,
        syn: &Synopsis,
        spec: &QuerySpec,
        report: &mut PruneReport,
    ) -> Vec<UserId> {
        let mut survivors = Vec::new();
        let mut heap: BinaryHeap<(u64, Reverse<usize>)> = BinaryHeap::new();
        // Sentinel key: the root always expands. Ties pop the smaller id.
        heap.push((u64::MAX, Reverse(syn.root())));
        while let Some((key, Reverse(id))) = heap.pop() {
            if self.flags.is_enabled(Rule::EntryScore) && key < spec.sigma {
                let mut skipped = syn.node_users(id) as u64;
                for (_, Reverse(rest)) in heap.drain() {
                    skipped += syn.node_users(rest) as u64;
                }
                report.credit(Rule::EntryScore, skipped);
                report.early_terminations += 1;
                break;
            }
            match syn.expand(id) {
                NodeView::Internal(children) => {
                    for &c in children {
                        match self.subtree_screen(syn.node_agg(c), spec) {
                            Some(rule) => report.credit(rule, syn.node_users(c) as u64),
                            None => {
                                heap.push((syn.node_agg(c).ub_score(spec.r), Reverse(c)));
                            }
                        }
                    }
                }
                NodeView::Leaf(members) => {
                    for m in members {
                        report.entries_tested += 1;
                        match prune::entry_test(&m.agg, spec, &self.flags) {
                            Some(rule) => report.credit(rule, 1),
                            None => survivors.push(m.user),
                        }
                    }
                }
            }
        }
        survivors
    }

    /// Keyword and support screens for internal nodes. The score bound is
    /// deliberately left to the heap: the traversal order visits entries by
    /// that bound, so one early stop covers every score-skippable subtree.
    fn subtree_screen(&self, agg: &crate::synopsis::Aggregates, spec: &QuerySpec) -> Option<Rule> {
        if self.flags.is_enabled(Rule::EntryKeyword) && !agg.bv(spec.r).intersects(&spec.bits) {
            return Some(Rule::EntryKeyword);
        }
        if self.flags.is_enabled(Rule::EntrySupport) && agg.ub_sup(spec.r) < spec.k {
            return Some(Rule::EntrySupport);
        }
        None
    }

    /// Extract candidates in parallel, then fold counters sequentially in
    /// input order. Element removals and prefix kills are credited only
    /// when the responsible rule's flag is on, so an all-off run reports
    /// zeros while computing identical communities.
    fn extract_all(
        &self,
        spec: &QuerySpec,
        centers: &[UserId],
        report: &mut PruneReport,
    ) -> Vec<(UserId, Option<Community>)> {
        let runs: Vec<(UserId, community::Extraction)> = centers
            .par_iter()
            .map(|&c| (c, community::maximal_bitruss(&self.g, &self.aux, spec, c)))
            .collect();
        let mut out = Vec::with_capacity(runs.len());
        for (center, ex) in runs {
            report.candidates_extracted += 1;
            for rule in Rule::ALL {
                if self.flags.is_enabled(rule) {
                    let counts = ex.stage_elements[rule as usize];
                    if !counts.is_zero() {
                        report.credit_elements(rule, &counts);
                    }
                }
            }
            if ex.community.is_some() {
                report.communities_found += 1;
            } else if let Some(rule) = ex.prefix_kill {
                if self.flags.is_enabled(rule) {
                    report.credit(rule, 1);
                }
            }
            out.push((center, ex.community));
        }
        out
    }

    /// Re-evaluate one query's affected centers. Entry tests veto the
    /// extraction but still count as a verdict: a skipped center provably
    /// produces nothing now, so its old community (if any) must leave the
    /// rolling results.
    fn refresh_centers(
        &self,
        spec: &QuerySpec,
        affected: &BTreeSet<UserId>,
        report: &mut PruneReport,
    ) -> Vec<(UserId, Option<Community>)> {
        let mut evals: Vec<(UserId, Option<Community>)> = Vec::new();
        let mut to_extract: Vec<UserId> = Vec::new();
        for &center in affected {
            let skip = self.syn.as_ref().and_then(|syn| {
                let agg = syn.user_agg(center)?;
                report.entries_tested += 1;
                prune::entry_test(agg, spec, &self.flags)
            });
            match skip {
                Some(rule) => {
                    report.credit(rule, 1);
                    evals.push((center, None));
                }
                None => to_extract.push(center),
            }
        }
        evals.extend(self.extract_all(spec, &to_extract, report));
        evals
    }

    /// Apply per-center outcomes to the rolling state, keeping `results`,
    /// `producers`, and `center_sig` mutually consistent. Insertion order
    /// does not matter: the representative is recomputed from the producer
    /// group on every membership change.
    fn fold_center_updates(
        state: &mut ContinuousState,
        evals: Vec<(UserId, Option<Community>)>,
    ) {
        for (center, found) in evals {
            let new_sig = found.as_ref().map(|c| c.signature);
            let old_sig = state.center_sig.get(&center).copied();
            if old_sig == new_sig {
                // Same signature means identical content and thresholds;
                // the stored record is already exact.
                continue;
            }
            if let Some(sig) = old_sig {
                state.center_sig.remove(&center);
                let group = state
                    .producers
                    .get_mut(&sig)
                    .expect("producer group exists for a stored signature");
                group.remove(&center);
                match group.iter().next().copied() {
                    None => {
                        state.producers.remove(&sig);
                        state.results.remove(&sig);
                    }
                    Some(min) => {
                        let rec = state
                            .results
                            .get_mut(&sig)
                            .expect("result record exists for a live signature");
                        if rec.center == center {
                            rec.center = min;
                        }
                    }
                }
            }
            if let Some(c) = found {
                let sig = c.signature;
                let group = state.producers.entry(sig).or_default();
                group.insert(center);
                state.center_sig.insert(center, sig);
                let min = *group.iter().next().expect("group was just extended");
                match state.results.entry(sig) {
                    Entry::Vacant(slot) => {
                        slot.insert(c);
                    }
                    Entry::Occupied(mut slot) => {
                        if min == center {
                            slot.insert(c);
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::community::{oracle_enumerate, DEFAULT_ORACLE_CAP};
    use crate::fixtures;
    use crate::graph::ItemAttributes;
    use crate::keywords::KeywordTable;

    fn spec_with(q: &[&str], k: u64, r: u32, sigma: u64) -> QuerySpec {
        let table = fixtures::example_keyword_table();
        QuerySpec::new(&table, q, k, r, sigma).unwrap()
    }

    fn example_engine(cfg: EngineConfig) -> Engine {
        Engine::new(fixtures::example_graph(), cfg)
    }

    fn example_specs() -> Vec<QuerySpec> {
        vec![
            spec_with(&["bank"], 1, 1, 1),
            spec_with(&["bank", "music"], 1, 1, 1),
            spec_with(&["bank"], 2, 1, 3),
            spec_with(&["music"], 1, 2, 1),
            spec_with(&["finance", "hack"], 1, 2, 11),
            spec_with(&["bank"], 5, 2, 1),
        ]
    }

    #[test]
    fn snapshot_matches_the_oracle_on_the_example() {
        let engine = example_engine(EngineConfig::default());
        for spec in example_specs() {
            let (rs, _) = engine.snapshot(&spec).unwrap();
            let want = oracle_enumerate(engine.graph(), &spec, DEFAULT_ORACLE_CAP).unwrap();
            assert_eq!(rs.communities, want, "spec {:?}", spec);
        }
    }

    #[test]
    fn synopsis_and_plain_scans_agree() {
        let with = example_engine(EngineConfig::default());
        let without = example_engine(EngineConfig {
            use_synopsis: false,
            ..EngineConfig::default()
        });
        for spec in example_specs() {
            let (a, _) = with.snapshot(&spec).unwrap();
            let (b, _) = without.snapshot(&spec).unwrap();
            assert_eq!(a.communities, b.communities, "spec {:?}", spec);
        }
    }

    #[test]
    fn flag_toggles_change_counters_but_never_results() {
        let baseline = example_engine(EngineConfig::default());
        for rule in Rule::ALL {
            let engine = example_engine(EngineConfig {
                flags: PruneFlags::all_but(rule),
                ..EngineConfig::default()
            });
            for spec in example_specs() {
                let (want, _) = baseline.snapshot(&spec).unwrap();
                let (got, _) = engine.snapshot(&spec).unwrap();
                assert_eq!(got.communities, want.communities, "without {:?}", rule);
            }
        }

        let muted = example_engine(EngineConfig {
            flags: PruneFlags::none(),
            ..EngineConfig::default()
        });
        for spec in example_specs() {
            let (want, _) = baseline.snapshot(&spec).unwrap();
            let (got, report) = muted.snapshot(&spec).unwrap();
            assert_eq!(got.communities, want.communities);
            assert_eq!(report.total_pruned(), 0);
            assert!(report.elements_by_rule.iter().all(|c| c.is_zero()));
        }
    }

    #[test]
    fn early_termination_stops_a_hopeless_traversal() {
        // gamma 2 forces internal structure over the three users, so the
        // stop fires on a popped child rather than never being consulted.
        let engine = example_engine(EngineConfig {
            gamma: 2,
            ..EngineConfig::default()
        });
        let spec = spec_with(&["bank"], 1, 1, 12);
        let (rs, report) = engine.snapshot(&spec).unwrap();
        assert!(rs.communities.is_empty());
        assert_eq!(report.early_terminations, 1);
        // The best pair score anywhere is 11, so every user is skipped by
        // the score rule and none reaches extraction.
        assert_eq!(report.pruned_by_rule[Rule::EntryScore as usize], 3);
        assert_eq!(report.candidates_extracted, 0);
    }

    #[test]
    fn radius_above_the_synopsis_cap_is_rejected() {
        let mut engine = example_engine(EngineConfig {
            r_max: 2,
            ..EngineConfig::default()
        });
        let spec = spec_with(&["bank"], 1, 3, 1);
        assert!(matches!(
            engine.snapshot(&spec),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            engine.register(&spec),
            Err(Error::InvalidParameter(_))
        ));

        let mut plain = example_engine(EngineConfig {
            use_synopsis: false,
            ..EngineConfig::default()
        });
        assert!(plain.snapshot(&spec).is_ok());
        assert!(plain.register(&spec).is_ok());
    }

    #[test]
    fn continuous_results_track_snapshots_across_slides() {
        let table = fixtures::example_keyword_table();
        let mut g = StreamingGraph::new(3);
        let base = fixtures::example_graph();
        // Same vertices and base edges as the example, but a 3-slot window.
        for u in 1..=3u64 {
            g.intern_user(u);
        }
        for v in 1..=3u64 {
            let attrs = base.item_attrs(base.find_item(v).unwrap()).clone();
            g.intern_item(v, attrs);
        }
        for u in base.users() {
            for (v, w) in base.user_neighbors(u) {
                for _ in 0..*w {
                    g.add_base_edge(
                        g.find_user(base.user_ext(u)).unwrap(),
                        g.find_item(base.item_ext(*v)).unwrap(),
                    );
                }
            }
        }

        let mut engine = Engine::new(g, EngineConfig::default());
        let specs = [
            spec_with(&["bank"], 1, 1, 1),
            spec_with(&["bank", "music"], 2, 2, 3),
        ];
        for spec in &specs {
            engine.register(spec).unwrap();
            // Registration is idempotent.
            let n = engine.register(spec).unwrap();
            assert_eq!(n, engine.results(spec).unwrap().communities.len());
        }

        let kw_table = table;
        let v9 = engine.intern_item(9, ItemAttributes::new(vec![], &kw_table));
        let u1 = engine.graph().find_user(1).unwrap();
        let u2 = engine.graph().find_user(2).unwrap();
        let v1 = engine.graph().find_item(1).unwrap();
        let v3 = engine.graph().find_item(3).unwrap();

        // Weight bumps, a keyword-free item, and enough inserts to overflow
        // the window and expire earlier occurrences again.
        let slides = [
            (u1, v3),
            (u1, v1),
            (u2, v9),
            (u2, v1),
            (u1, v3),
            (u2, v9),
            (u1, v1),
            (u2, v1),
        ];
        for (i, (su, sv)) in slides.into_iter().enumerate() {
            let tick = (i + 1) as u64;
            let outcome = engine.slide(su, sv, tick).unwrap();
            if i >= 3 {
                assert!(outcome.expire.is_some(), "window holds three slots");
            }
            for spec in &specs {
                let rolling = engine.results(spec).unwrap();
                assert_eq!(rolling.as_of, tick);
                let (fresh, _) = engine.snapshot(spec).unwrap();
                assert_eq!(
                    rolling.communities, fresh.communities,
                    "tick {} spec {:?}",
                    tick, spec
                );
                let want =
                    oracle_enumerate(engine.graph(), spec, DEFAULT_ORACLE_CAP).unwrap();
                assert_eq!(rolling.communities, want, "oracle at tick {}", tick);
            }
        }

        assert!(engine.unregister(&specs[0]));
        assert!(!engine.unregister(&specs[0]), "second removal is a no-op");
        assert!(engine.results(&specs[0]).is_none());
        assert!(engine.results(&specs[1]).is_some());
        assert_eq!(engine.registered().count(), 1);
    }

    #[test]
    fn representative_follows_the_smallest_producer() {
        let table = KeywordTable::with_default_width();
        let spec = QuerySpec::new(&table, &["w"], 1, 1, 1).unwrap();
        let mk = |center: u32| Community {
            center: UserId(center),
            users: vec![UserId(1), UserId(2), UserId(3)],
            items: vec![ItemId(1)],
            edges: vec![
                (UserId(1), ItemId(1), 1),
                (UserId(2), ItemId(1), 1),
                (UserId(3), ItemId(1), 1),
            ],
            k: spec.k,
            r: spec.r,
            sigma: spec.sigma,
            signature: 42,
        };

        let mut state = ContinuousState::default();
        Engine::fold_center_updates(
            &mut state,
            vec![
                (UserId(3), Some(mk(3))),
                (UserId(1), Some(mk(1))),
                (UserId(2), Some(mk(2))),
            ],
        );
        assert_eq!(state.results[&42].center, UserId(1));
        assert_eq!(state.producers[&42].len(), 3);

        // The smallest producer leaves; the record re-homes to the next.
        Engine::fold_center_updates(&mut state, vec![(UserId(1), None)]);
        assert_eq!(state.results[&42].center, UserId(2));
        assert!(!state.center_sig.contains_key(&UserId(1)));

        // A verdict identical to the stored one is a no-op.
        Engine::fold_center_updates(&mut state, vec![(UserId(2), Some(mk(2)))]);
        assert_eq!(state.results[&42].center, UserId(2));

        Engine::fold_center_updates(
            &mut state,
            vec![(UserId(2), None), (UserId(3), None)],
        );
        assert!(state.results.is_empty());
        assert!(state.producers.is_empty());
        assert!(state.center_sig.is_empty());
    }
}

//! Synthetic corpus generation: graphs, item keywords, update streams, and
//! query workloads, all reproducible from a seed.
//!
//! A generated dataset is plain data (external ids and keyword strings),
//! not a built graph, so it can be written to disk, re-read, and loaded
//! either as a pre-filled base graph or replayed occurrence by occurrence
//! through the sliding window. An edge of weight w becomes w occurrences in
//! the stream; replaying the whole stream through a large enough window
//! reconstructs exactly the generated weights.
//!
//! Degree sequences come from a heavy-tailed or a bounded distribution,
//! keyword popularity from a skewed or uniform one. Query keywords are
//! drawn by empirical corpus frequency, so hot keywords dominate workloads
//! the way they do in the datasets this mimics.

use std::collections::BTreeSet;

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, LogNormal, Normal, Pareto, Zipf};

use crate::error::{Error, Result};
use crate::graph::{ItemAttributes, StreamingGraph};
use crate::keywords::{KeywordId, KeywordTable};
use crate::query::QuerySpec;

/// Degree distribution for the user layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DegreeDist {
    /// Pareto tail with exponent `alpha` (> 2 so the mean exists).
    PowerLaw { alpha: f64 },
    /// Beta(a, b) scaled to the requested mean; bounded support.
    Beta { a: f64, b: f64 },
}

/// Popularity distribution over the keyword domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeywordDist {
    /// LogNormal(0, 1) mapped onto the domain, truncated at its 99th
    /// percentile so the map is onto.
    LogNormal,
    /// Zipf-like rank skew.
    Pareto,
    Uniform,
}

/// Generator parameters. Defaults give the standard benchmark graph:
/// 25K x 25K vertices, ~150K edges, 500 keywords, 3 per item, weights in
/// [1, 2].
#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub n_users: usize,
    pub n_items: usize,
    /// Average user degree; edge count scales as n_users * mean_degree.
    pub mean_degree: f64,
    pub degree_dist: DegreeDist,
    /// Size of the keyword vocabulary.
    pub keyword_domain: u32,
    /// Distinct keywords attached to each item.
    pub kws_per_item: usize,
    pub keyword_dist: KeywordDist,
    pub min_weight: u32,
    pub max_weight: u32,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            n_users: 25_000,
            n_items: 25_000,
            mean_degree: 6.0,
            degree_dist: DegreeDist::PowerLaw { alpha: 2.5 },
            keyword_domain: 500,
            kws_per_item: 3,
            keyword_dist: KeywordDist::LogNormal,
            min_weight: 1,
            max_weight: 2,
            seed: 7,
        }
    }
}

impl GenConfig {
    fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.into()));
        if self.n_users == 0 || self.n_items == 0 {
            return bad("vertex layers must be non-empty");
        }
        if !(self.mean_degree >= 1.0) || self.mean_degree > self.n_items as f64 {
            return bad("mean degree must lie in [1, n_items]");
        }
        if self.min_weight == 0 || self.min_weight > self.max_weight {
            return bad("weight range must satisfy 1 <= min <= max");
        }
        if self.keyword_domain == 0 {
            return bad("keyword domain must be non-empty");
        }
        if self.kws_per_item == 0 || self.kws_per_item > self.keyword_domain as usize {
            return bad("keywords per item must lie in [1, domain]");
        }
        match self.degree_dist {
            DegreeDist::PowerLaw { alpha } if !(alpha > 2.0) => {
                bad("power-law exponent must exceed 2")
            }
            DegreeDist::Beta { a, b } if !(a > 0.0 && b > 0.0) => {
                bad("beta shape parameters must be positive")
            }
            _ => Ok(()),
        }
    }
}

/// A generated dataset in external-id form.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    /// (user, item, weight), users and items numbered from 1; items
    /// distinct per user.
    pub edges: Vec<(u64, u64, u32)>,
    /// Keyword names per item, every item listed.
    pub keywords: Vec<(u64, Vec<String>)>,
    /// One occurrence per unit of weight, shuffled; tick = position + 1.
    pub stream: Vec<(u64, u64)>,
}

fn sample_degree(rng: &mut ChaCha8Rng, cfg: &GenConfig) -> usize {
    let cap = cfg.n_items;
    match cfg.degree_dist {
        DegreeDist::PowerLaw { alpha } => {
            // Pareto(xmin, alpha - 1) has mean xmin * (alpha-1)/(alpha-2).
            let xmin = cfg.mean_degree * (alpha - 2.0) / (alpha - 1.0);
            let dist = Pareto::new(xmin, alpha - 1.0).expect("valid pareto");
            for _ in 0..64 {
                let d = rng.sample(dist).round() as usize;
                if d <= cap {
                    return d.max(1);
                }
            }
            cap
        }
        DegreeDist::Beta { a, b } => {
            let scale = cfg.mean_degree * (a + b) / a;
            let dist = Beta::new(a, b).expect("valid beta");
            let d = (rng.sample(dist) * scale).round() as usize;
            d.clamp(1, cap)
        }
    }
}

fn sample_weight(rng: &mut ChaCha8Rng, cfg: &GenConfig) -> u32 {
    if cfg.min_weight == cfg.max_weight {
        return cfg.min_weight;
    }
    let mu = f64::from(cfg.min_weight + cfg.max_weight) / 2.0;
    let sd = f64::from(cfg.max_weight - cfg.min_weight) / 4.0;
    let dist = Normal::new(mu, sd).expect("valid normal");
    let w = rng.sample(dist).round();
    (w as i64).clamp(i64::from(cfg.min_weight), i64::from(cfg.max_weight)) as u32
}

fn sample_keyword(rng: &mut ChaCha8Rng, cfg: &GenConfig) -> u32 {
    let n = cfg.keyword_domain;
    match cfg.keyword_dist {
        KeywordDist::Uniform => rng.gen_range(0..n),
        KeywordDist::Pareto => {
            let dist = Zipf::new(u64::from(n), 1.16).expect("valid zipf");
            rng.sample(dist) as u32 - 1
        }
        KeywordDist::LogNormal => {
            // Truncate at the 99th percentile so the [0, cut) mass maps
            // onto the whole domain.
            let cut = 2.33f64.exp();
            let dist = LogNormal::new(0.0, 1.0).expect("valid lognormal");
            loop {
                let x = rng.sample(dist);
                if x < cut {
                    return ((x / cut) * f64::from(n)) as u32;
                }
            }
        }
    }
}

/// Generate a dataset. The same config (seed included) yields the same
/// dataset, field for field.
pub fn generate(cfg: &GenConfig) -> Result<Generated> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut edges = Vec::new();
    for u in 1..=cfg.n_users as u64 {
        let d = sample_degree(&mut rng, cfg);
        let mut items = rand::seq::index::sample(&mut rng, cfg.n_items, d).into_vec();
        items.sort_unstable();
        for v in items {
            let w = sample_weight(&mut rng, cfg);
            edges.push((u, v as u64 + 1, w));
        }
    }

    let mut keywords = Vec::with_capacity(cfg.n_items);
    for v in 1..=cfg.n_items as u64 {
        let mut picked = BTreeSet::new();
        let mut tries = 0usize;
        while picked.len() < cfg.kws_per_item && tries < 1000 * cfg.kws_per_item {
            picked.insert(sample_keyword(&mut rng, cfg));
            tries += 1;
        }
        // Skew can starve the rejection loop near full coverage; complete
        // deterministically from the smallest unused ids.
        let mut next = 0;
        while picked.len() < cfg.kws_per_item {
            picked.insert(next);
            next += 1;
        }
        let names = picked.into_iter().map(|i| format!("kw{}", i + 1)).collect();
        keywords.push((v, names));
    }

    let mut stream = Vec::new();
    for &(u, v, w) in &edges {
        for _ in 0..w {
            stream.push((u, v));
        }
    }
    stream.shuffle(&mut rng);

    Ok(Generated {
        edges,
        keywords,
        stream,
    })
}

/// Sample query specs whose keywords follow the corpus' empirical keyword
/// frequency, without replacement within one query.
pub fn gen_queries(
    g: &StreamingGraph,
    table: &KeywordTable,
    count: usize,
    q_size: usize,
    (k, r, sigma): (u64, u32, u64),
    seed: u64,
) -> Result<Vec<QuerySpec>> {
    let mut freq: Vec<(KeywordId, u64)> = Vec::new();
    {
        let mut acc = std::collections::BTreeMap::new();
        for v in g.items() {
            for &kw in &g.item_attrs(v).keywords {
                *acc.entry(kw).or_insert(0u64) += 1;
            }
        }
        freq.extend(acc);
    }
    if q_size == 0 {
        return Err(Error::InvalidParameter("query keyword count is zero".into()));
    }
    if q_size > freq.len() {
        return Err(Error::InvalidParameter(format!(
            "asked for {q_size} query keywords but the corpus has {} distinct",
            freq.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut pool = freq.clone();
        let mut words = Vec::with_capacity(q_size);
        for _ in 0..q_size {
            let dist = WeightedIndex::new(pool.iter().map(|&(_, w)| w)).expect("positive weights");
            let i = rng.sample(&dist);
            words.push(table.name(pool[i].0).to_string());
            pool.swap_remove(i);
        }
        let refs: Vec<&str> = words.iter().map(String::as_str).collect();
        out.push(QuerySpec::new(table, &refs, k, r, sigma)?);
    }
    Ok(out)
}

fn intern_items(gen: &Generated, table: &mut KeywordTable, g: &mut StreamingGraph) {
    for (ext, words) in &gen.keywords {
        let ids: Vec<KeywordId> = words.iter().map(|w| table.intern(w)).collect();
        let attrs = ItemAttributes::new(ids, table);
        g.intern_item(*ext, attrs);
    }
}

/// Build a graph with every generated edge already present at its full
/// weight, as if the stream had run long ago.
pub fn base_graph(gen: &Generated, table: &mut KeywordTable, window: usize) -> StreamingGraph {
    let mut g = StreamingGraph::new(window);
    intern_items(gen, table, &mut g);
    for &(u, v, w) in &gen.edges {
        let uid = g.intern_user(u);
        let vid = g.find_item(v).expect("item was interned");
        for _ in 0..w {
            g.add_base_edge(uid, vid);
        }
    }
    g
}

/// Build a graph with the items (and their keywords) interned but no
/// edges; weights accrue only as the stream is replayed.
pub fn shell_graph(gen: &Generated, table: &mut KeywordTable, window: usize) -> StreamingGraph {
    let mut g = StreamingGraph::new(window);
    intern_items(gen, table, &mut g);
    for &(u, _, _) in &gen.edges {
        g.intern_user(u);
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> GenConfig {
        GenConfig {
            n_users: 300,
            n_items: 200,
            mean_degree: 5.0,
            keyword_domain: 40,
            kws_per_item: 2,
            seed: 11,
            ..GenConfig::default()
        }
    }

    #[test]
    fn same_seed_reproduces_the_corpus() {
        let a = generate(&small_cfg()).unwrap();
        let b = generate(&small_cfg()).unwrap();
        assert_eq!(a, b);
        let c = generate(&GenConfig {
            seed: 12,
            ..small_cfg()
        })
        .unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn weights_stay_inside_the_configured_range() {
        for (lo, hi) in [(1, 2), (1, 4)] {
            let gen = generate(&GenConfig {
                min_weight: lo,
                max_weight: hi,
                ..small_cfg()
            })
            .unwrap();
            assert!(!gen.edges.is_empty());
            assert!(gen.edges.iter().all(|&(_, _, w)| w >= lo && w <= hi));
        }
    }

    #[test]
    fn stream_replay_reconstructs_the_weights() {
        let gen = generate(&small_cfg()).unwrap();
        let mut table = KeywordTable::with_default_width();
        let mut g = shell_graph(&gen, &mut table, gen.stream.len());
        for (i, &(u, v)) in gen.stream.iter().enumerate() {
            let uid = g.find_user(u).unwrap();
            let vid = g.find_item(v).unwrap();
            g.apply_insert(uid, vid, i as u64 + 1).unwrap();
        }
        assert_eq!(g.num_edges() as usize, gen.edges.len());
        for &(u, v, w) in &gen.edges {
            let uid = g.find_user(u).unwrap();
            let vid = g.find_item(v).unwrap();
            assert_eq!(g.weight(uid, vid), w, "edge ({u}, {v})");
        }
    }

    #[test]
    fn distinct_items_per_user() {
        let gen = generate(&small_cfg()).unwrap();
        let mut seen = BTreeSet::new();
        for &(u, v, _) in &gen.edges {
            assert!(seen.insert((u, v)), "duplicate generated edge ({u}, {v})");
        }
    }

    #[test]
    fn frequent_keywords_dominate_sampled_queries() {
        // 90% of items carry "hot"; single-keyword queries should pick it
        // far more often than any uniform draw would.
        let mut table = KeywordTable::with_default_width();
        let mut g = StreamingGraph::new(16);
        for ext in 1..=100u64 {
            let name = if ext <= 90 { "hot" } else { "cold" };
            let ids = vec![table.intern(name)];
            g.intern_item(ext, ItemAttributes::new(ids, &table));
        }
        let specs = gen_queries(&g, &table, 1000, 1, (2, 1, 3), 5).unwrap();
        let hot = table.lookup("hot").unwrap();
        let hits = specs
            .iter()
            .filter(|s| s.keywords.contains(&hot))
            .count();
        assert!(hits > 700, "hot picked {hits}/1000");
    }

    #[test]
    fn oversized_query_request_is_rejected() {
        let mut table = KeywordTable::with_default_width();
        let mut g = StreamingGraph::new(16);
        let ids = vec![table.intern("only")];
        g.intern_item(1, ItemAttributes::new(ids, &table));
        let err = gen_queries(&g, &table, 1, 2, (1, 1, 1), 0).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    #[test]
    fn degree_shapes_are_plausible() {
        let heavy = generate(&GenConfig {
            n_users: 2000,
            n_items: 2000,
            mean_degree: 6.0,
            degree_dist: DegreeDist::PowerLaw { alpha: 2.5 },
            ..small_cfg()
        })
        .unwrap();
        let degree = |gen: &Generated| {
            let mut d = std::collections::BTreeMap::new();
            for &(u, _, _) in &gen.edges {
                *d.entry(u).or_insert(0usize) += 1;
            }
            d
        };
        let hd = degree(&heavy);
        let mean = hd.values().sum::<usize>() as f64 / hd.len() as f64;
        let max = *hd.values().max().unwrap();
        assert!((mean - 6.0).abs() < 2.0, "power-law mean {mean}");
        assert!(max >= 18, "heavy tail missing, max degree {max}");

        let bounded = generate(&GenConfig {
            n_users: 2000,
            n_items: 2000,
            mean_degree: 6.0,
            degree_dist: DegreeDist::Beta { a: 2.0, b: 5.0 },
            ..small_cfg()
        })
        .unwrap();
        let bd = degree(&bounded);
        let mean = bd.values().sum::<usize>() as f64 / bd.len() as f64;
        let max = *bd.values().max().unwrap();
        // Beta(2, 5) at mean 6 has support capped at 21.
        assert!((mean - 6.0).abs() < 2.0, "beta mean {mean}");
        assert!(max <= 21, "beta support exceeded, max degree {max}");
    }
}

//! Command-line front end for snapshot and continuous community retrieval
//! over streaming weighted bipartite graphs.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bitruss_core::bbd;
use bitruss_core::engine::{Engine, EngineConfig, ResultSet};
use bitruss_core::error::{Error, Result};
use bitruss_core::graph::{ItemAttributes, StreamingGraph};
use bitruss_core::io::{self, Format};
use bitruss_core::keywords::KeywordTable;
use bitruss_core::query::QuerySpec;
use bitruss_core::scores::AuxStore;
use bitruss_core::synopsis::Synopsis;
use bitruss_core::workload::{self, DegreeDist, GenConfig, KeywordDist};

use bitruss_cli::harness::{
    self, apply_param, BenchRecord, DeskConfig, Param, Phase,
};

#[derive(Parser, Debug)]
#[command(
    name = "bitruss",
    version,
    about = "Community search over streaming weighted bipartite graphs"
)]
struct Cli {
    /// Worker threads for parallel candidate detection.
    #[arg(long, global = true, default_value_t = 100)]
    threads: usize,

    /// Seed for generation and query sampling.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Generate a synthetic dataset: graph, keywords, and update stream.
    Generate {
        #[command(flatten)]
        gen: GenArgs,
        /// Directory for graph.txt, keywords.txt, stream.txt.
        #[arg(long)]
        out: PathBuf,
    },
    /// Load a graph and print its shape.
    Load {
        #[command(flatten)]
        input: InputArgs,
    },
    /// Build the hierarchical synopsis and report on it.
    BuildSynopsis {
        #[command(flatten)]
        input: InputArgs,
        /// Largest query radius the synopsis must answer.
        #[arg(long, default_value_t = 3)]
        r_max: u32,
        /// Fanout bound of the synopsis tree.
        #[arg(long, default_value_t = 32)]
        gamma: usize,
        /// Also print the exact score store, one line per pair and edge.
        #[arg(long)]
        dump: bool,
    },
    /// One-off community retrieval on the loaded graph.
    Snapshot {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        query: QueryArgs,
        /// Write result records here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Skip the synopsis and test every user as a candidate.
        #[arg(long)]
        no_synopsis: bool,
    },
    /// Register queries, replay an update stream, report after each slide.
    Continuous {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        query: QueryArgs,
        /// Update stream file: `user item` per line, one occurrence each.
        #[arg(long)]
        stream: PathBuf,
        /// Replay at most this many occurrences.
        #[arg(long)]
        slides: Option<usize>,
        /// Write final result records here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Skip the synopsis and test every user as a candidate.
        #[arg(long)]
        no_synopsis: bool,
    },
    /// Decomposition-first baseline retrieval on the loaded graph.
    Bbd {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        query: QueryArgs,
        /// Write result records here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time continuous retrieval on synthetic data, optionally sweeping
    /// one parameter.
    Bench {
        #[command(flatten)]
        desk: DeskArgs,
        /// Sweep one parameter: name then comma-separated values, e.g.
        /// `--vary sigma 1,2,3,4,5`.
        #[arg(long, num_args = 2, value_names = ["PARAM", "VALUES"])]
        vary: Option<Vec<String>>,
        /// Also time the decomposition-first baseline on the same slides.
        #[arg(long)]
        compare_baseline: bool,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Snapshot the same queries under each pruning group and count
    /// pruned candidates.
    Ablation {
        #[command(flatten)]
        desk: DeskArgs,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep every benchmark parameter and check wall-time trends.
    Trends {
        #[command(flatten)]
        desk: DeskArgs,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-check snapshot, continuous, and baseline retrieval against
    /// brute-force enumeration on small instances.
    Verify {
        /// Number of generated instances.
        #[arg(long, default_value_t = 12)]
        instances: usize,
    },
}

/// Generator parameters, also accepted as a flat `key=value` file.
#[derive(Args, Debug, Clone)]
struct GenArgs {
    /// Flat `key=value` generator config; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    users: Option<usize>,
    #[arg(long)]
    items: Option<usize>,
    /// Average user degree.
    #[arg(long)]
    mean_degree: Option<f64>,
    /// `powerlaw[:alpha]` or `beta:a:b`.
    #[arg(long, value_parser = parse_degree_dist)]
    degree_dist: Option<DegreeDist>,
    /// Keyword vocabulary size.
    #[arg(long)]
    domain: Option<u32>,
    /// Distinct keywords per item.
    #[arg(long)]
    kws_per_item: Option<usize>,
    /// `lognormal`, `pareto`, or `uniform`.
    #[arg(long, value_parser = parse_keyword_dist)]
    keyword_dist: Option<KeywordDist>,
    #[arg(long)]
    min_weight: Option<u32>,
    #[arg(long)]
    max_weight: Option<u32>,
}

impl GenArgs {
    fn resolve(&self, seed: u64) -> Result<GenConfig> {
        let mut cfg = GenConfig {
            seed,
            ..GenConfig::default()
        };
        if let Some(path) = &self.config {
            cfg = read_gen_config(path, cfg)?;
        }
        if let Some(v) = self.users {
            cfg.n_users = v;
        }
        if let Some(v) = self.items {
            cfg.n_items = v;
        }
        if let Some(v) = self.mean_degree {
            cfg.mean_degree = v;
        }
        if let Some(v) = self.degree_dist {
            cfg.degree_dist = v;
        }
        if let Some(v) = self.domain {
            cfg.keyword_domain = v;
        }
        if let Some(v) = self.kws_per_item {
            cfg.kws_per_item = v;
        }
        if let Some(v) = self.keyword_dist {
            cfg.keyword_dist = v;
        }
        if let Some(v) = self.min_weight {
            cfg.min_weight = v;
        }
        if let Some(v) = self.max_weight {
            cfg.max_weight = v;
        }
        Ok(cfg)
    }
}

/// Graph input shared by the loading subcommands.
#[derive(Args, Debug, Clone)]
struct InputArgs {
    /// Edge file: `user item [weight]` per line.
    #[arg(long)]
    graph: PathBuf,
    /// Item keyword file: `item word...` per line.
    #[arg(long)]
    keywords: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::EdgeList)]
    format: FormatArg,
    /// Sliding-window capacity in stream occurrences.
    #[arg(long, default_value_t = 500)]
    window: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum FormatArg {
    EdgeList,
    Konect,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Format {
        match f {
            FormatArg::EdgeList => Format::EdgeList,
            FormatArg::Konect => Format::Konect,
        }
    }
}

impl InputArgs {
    fn load(&self) -> Result<(StreamingGraph, KeywordTable)> {
        let keywords = match &self.keywords {
            Some(path) => io::read_keywords(path)?,
            None => BTreeMap::new(),
        };
        let mut table = KeywordTable::with_default_width();
        let g = io::read_graph(
            &self.graph,
            self.format.into(),
            &keywords,
            &mut table,
            self.window,
        )?;
        Ok((g, table))
    }
}

/// Query thresholds and keyword selection shared by the retrieval
/// subcommands.
#[derive(Args, Debug, Clone)]
struct QueryArgs {
    /// Minimum butterfly support per community edge.
    #[arg(long, default_value_t = 4)]
    k: u64,
    /// Maximum user hops from the community center.
    #[arg(long, default_value_t = 2)]
    r: u32,
    /// Minimum relationship score between wedge-adjacent users.
    #[arg(long, default_value_t = 3)]
    sigma: u64,
    /// Comma-separated query keywords; omit to sample them.
    #[arg(long, value_delimiter = ',')]
    query_words: Vec<String>,
    /// Keywords per sampled query when --query-words is absent.
    #[arg(long, default_value_t = 5)]
    q: usize,
    /// Number of sampled queries (ignored with --query-words).
    #[arg(long, default_value_t = 1)]
    queries: usize,
}

impl QueryArgs {
    fn specs(&self, g: &StreamingGraph, table: &KeywordTable, seed: u64) -> Result<Vec<QuerySpec>> {
        if !self.query_words.is_empty() {
            let words: Vec<&str> = self.query_words.iter().map(String::as_str).collect();
            return Ok(vec![QuerySpec::new(
                table, &words, self.k, self.r, self.sigma,
            )?]);
        }
        workload::gen_queries(
            g,
            table,
            self.queries,
            self.q,
            (self.k, self.r, self.sigma),
            seed,
        )
    }
}

/// Desk-scale benchmark shape, mirrored onto [`DeskConfig`].
#[derive(Args, Debug, Clone)]
struct DeskArgs {
    #[arg(long, default_value_t = 240)]
    users: usize,
    #[arg(long, default_value_t = 240)]
    items: usize,
    /// Average user degree of the permanent base graph.
    #[arg(long, default_value_t = 2.5)]
    mean_degree: f64,
    /// Average user degree of the extras sample feeding the window.
    #[arg(long, default_value_t = 2.0)]
    stream_degree: f64,
    /// Keyword vocabulary size.
    #[arg(long, default_value_t = 24)]
    domain: u32,
    /// Distinct keywords per item.
    #[arg(long, default_value_t = 3)]
    kws_per_item: usize,
    #[arg(long, default_value_t = 1)]
    min_weight: u32,
    #[arg(long, default_value_t = 2)]
    max_weight: u32,
    /// Sliding-window capacity in stream occurrences.
    #[arg(long, default_value_t = 250)]
    window: usize,
    #[arg(long, default_value_t = 2)]
    k: u64,
    #[arg(long, default_value_t = 1)]
    r: u32,
    #[arg(long, default_value_t = 2)]
    sigma: u64,
    /// Keywords per sampled query.
    #[arg(long, default_value_t = 3)]
    q: usize,
    /// Registered queries per run.
    #[arg(long, default_value_t = 3)]
    queries: usize,
    /// Timed slides per run.
    #[arg(long, default_value_t = 50)]
    slides: usize,
    /// Repetitions averaged per measurement.
    #[arg(long, default_value_t = 4)]
    reps: usize,
    /// Synopsis radius bound; raised to --r when smaller.
    #[arg(long, default_value_t = 1)]
    r_max: u32,
    /// Run without the synopsis: no entry pruning, no maintenance cost.
    #[arg(long)]
    no_synopsis: bool,
}

impl DeskArgs {
    fn config(&self, seed: u64) -> DeskConfig {
        DeskConfig {
            users: self.users,
            items: self.items,
            mean_degree: self.mean_degree,
            stream_degree: self.stream_degree,
            domain: self.domain,
            kws_per_item: self.kws_per_item,
            min_weight: self.min_weight,
            max_weight: self.max_weight,
            window: self.window,
            k: self.k,
            r: self.r,
            sigma: self.sigma,
            q: self.q,
            queries: self.queries,
            slides: self.slides,
            reps: self.reps,
            r_max: self.r_max,
            use_synopsis: !self.no_synopsis,
            seed,
        }
    }
}

fn parse_degree_dist(s: &str) -> std::result::Result<DegreeDist, String> {
    let mut parts = s.split(':');
    let head = parts.next().unwrap_or_default();
    let nums: Vec<f64> = parts
        .map(|t| t.parse().map_err(|_| format!("bad number `{t}` in `{s}`")))
        .collect::<std::result::Result<_, _>>()?;
    match (head, nums.as_slice()) {
        ("powerlaw", []) => Ok(DegreeDist::PowerLaw { alpha: 2.5 }),
        ("powerlaw", [alpha]) => Ok(DegreeDist::PowerLaw { alpha: *alpha }),
        ("beta", [a, b]) => Ok(DegreeDist::Beta { a: *a, b: *b }),
        _ => Err(format!(
            "expected `powerlaw[:alpha]` or `beta:a:b`, got `{s}`"
        )),
    }
}

fn parse_keyword_dist(s: &str) -> std::result::Result<KeywordDist, String> {
    match s {
        "lognormal" => Ok(KeywordDist::LogNormal),
        "pareto" => Ok(KeywordDist::Pareto),
        "uniform" => Ok(KeywordDist::Uniform),
        _ => Err(format!(
            "expected `lognormal`, `pareto`, or `uniform`, got `{s}`"
        )),
    }
}

/// Layer a flat `key=value` file over `base`. Unknown keys are errors so
/// typos do not silently fall back to defaults.
fn read_gen_config(path: &Path, base: GenConfig) -> Result<GenConfig> {
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.display().to_string(),
        line,
        msg,
    };
    let mut cfg = base;
    for (i, raw) in std::fs::read_to_string(path)?.lines().enumerate() {
        let ln = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(ln, "expected key=value".into()))?;
        let (key, value) = (key.trim(), value.trim());
        let num = |msg: &str| parse_err(ln, format!("bad {msg} `{value}`"));
        match key {
            "n_users" | "users" => cfg.n_users = value.parse().map_err(|_| num("count"))?,
            "n_items" | "items" => cfg.n_items = value.parse().map_err(|_| num("count"))?,
            "mean_degree" => cfg.mean_degree = value.parse().map_err(|_| num("degree"))?,
            "degree_dist" => cfg.degree_dist = parse_degree_dist(value).map_err(|e| parse_err(ln, e))?,
            "keyword_domain" | "domain" => {
                cfg.keyword_domain = value.parse().map_err(|_| num("domain size"))?
            }
            "kws_per_item" => cfg.kws_per_item = value.parse().map_err(|_| num("count"))?,
            "keyword_dist" => {
                cfg.keyword_dist = parse_keyword_dist(value).map_err(|e| parse_err(ln, e))?
            }
            "min_weight" => cfg.min_weight = value.parse().map_err(|_| num("weight"))?,
            "max_weight" => cfg.max_weight = value.parse().map_err(|_| num("weight"))?,
            "seed" => cfg.seed = value.parse().map_err(|_| num("seed"))?,
            other => return Err(parse_err(ln, format!("unknown key `{other}`"))),
        }
    }
    Ok(cfg)
}

/// Open `--out` or fall back to stdout.
fn open_out(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn engine_for(g: StreamingGraph, r_max: u32, use_synopsis: bool) -> Engine {
    Engine::new(
        g,
        EngineConfig {
            r_max,
            use_synopsis,
            ..EngineConfig::default()
        },
    )
}

fn max_r(specs: &[QuerySpec]) -> u32 {
    specs.iter().map(|s| s.r).max().unwrap_or(1)
}

fn cmd_generate(gen: &GenArgs, out: &Path, seed: u64) -> Result<()> {
    let cfg = gen.resolve(seed)?;
    let data = workload::generate(&cfg)?;
    std::fs::create_dir_all(out)?;
    let write = |name: &str,
                 f: fn(&mut BufWriter<File>, &workload::Generated) -> std::io::Result<()>|
     -> Result<()> {
        let mut w = BufWriter::new(File::create(out.join(name))?);
        f(&mut w, &data)?;
        Ok(w.flush()?)
    };
    write("graph.txt", io::write_graph)?;
    write("keywords.txt", io::write_keywords)?;
    write("stream.txt", io::write_stream)?;
    println!(
        "wrote {}: {} users, {} items, {} edges, {} occurrences, {} keywords/item",
        out.display(),
        cfg.n_users,
        cfg.n_items,
        data.edges.len(),
        data.stream.len(),
        cfg.kws_per_item,
    );
    Ok(())
}

fn cmd_load(input: &InputArgs) -> Result<()> {
    let started = Instant::now();
    let (g, _table) = input.load()?;
    let total_weight: u64 = g
        .users()
        .map(|u| g.user_neighbors(u).values().map(|&w| w as u64).sum::<u64>())
        .sum();
    let with_keywords = g
        .items()
        .filter(|&v| !g.item_attrs(v).keywords.is_empty())
        .count();
    println!(
        "{}: {} users, {} items ({} with keywords), {} edges, total weight {}, loaded in {:.1} ms",
        input.graph.display(),
        g.num_users(),
        g.num_items(),
        with_keywords,
        g.num_edges(),
        total_weight,
        started.elapsed().as_secs_f64() * 1e3,
    );
    Ok(())
}

fn cmd_build_synopsis(input: &InputArgs, r_max: u32, gamma: usize, dump: bool) -> Result<()> {
    let (g, table) = input.load()?;
    let started = Instant::now();
    let aux = AuxStore::build(&g);
    let aux_ms = started.elapsed().as_secs_f64() * 1e3;
    let started = Instant::now();
    let syn = Synopsis::build(&g, &aux, r_max, gamma, table.width());
    let syn_ms = started.elapsed().as_secs_f64() * 1e3;
    println!(
        "score store: {} pairs in {:.1} ms; synopsis: {} nodes over {} users in {:.1} ms",
        aux.num_pairs(),
        aux_ms,
        syn.num_nodes(),
        syn.num_users(),
        syn_ms,
    );
    let problems = syn.verify_consistency(&g, &aux);
    if problems.is_empty() {
        println!("consistency: ok");
    } else {
        for p in &problems {
            println!("consistency: {p}");
        }
        return Err(Error::InvalidParameter(format!(
            "synopsis failed {} consistency checks",
            problems.len()
        )));
    }
    if dump {
        print!("{}", io::aux_dump(&g, &aux));
    }
    Ok(())
}

fn write_result_sets<W: Write>(
    w: &mut W,
    g: &StreamingGraph,
    table: &KeywordTable,
    sets: &[(ResultSet, f64)],
) -> Result<()> {
    for (rs, wall_ms) in sets {
        io::write_results(w, g, table, rs, *wall_ms)?;
    }
    Ok(())
}

fn cmd_snapshot(
    input: &InputArgs,
    query: &QueryArgs,
    out: &Option<PathBuf>,
    no_synopsis: bool,
    seed: u64,
) -> Result<()> {
    let (g, table) = input.load()?;
    let specs = query.specs(&g, &table, seed)?;
    let engine = engine_for(g, max_r(&specs), !no_synopsis);
    let mut sets = Vec::with_capacity(specs.len());
    for spec in &specs {
        let started = Instant::now();
        let (rs, _) = engine.snapshot(spec)?;
        sets.push((rs, started.elapsed().as_secs_f64() * 1e3));
    }
    let mut w = open_out(out)?;
    write_result_sets(&mut w, engine.graph(), &table, &sets)?;
    w.flush()?;
    for (rs, ms) in &sets {
        eprintln!(
            "k={} r={} sigma={}: {} communities in {:.1} ms",
            rs.spec.k,
            rs.spec.r,
            rs.spec.sigma,
            rs.communities.len(),
            ms,
        );
    }
    Ok(())
}

fn cmd_continuous(
    input: &InputArgs,
    query: &QueryArgs,
    stream: &Path,
    slides: Option<usize>,
    out: &Option<PathBuf>,
    no_synopsis: bool,
    seed: u64,
) -> Result<()> {
    let keywords = match &input.keywords {
        Some(path) => io::read_keywords(path)?,
        None => BTreeMap::new(),
    };
    let (g, mut table) = input.load()?;
    let occurrences = io::read_stream(stream)?;
    let take = slides.unwrap_or(occurrences.len()).min(occurrences.len());

    let specs = query.specs(&g, &table, seed)?;
    let mut engine = engine_for(g, max_r(&specs), !no_synopsis);
    for spec in &specs {
        engine.register(spec)?;
    }

    let base_tick = engine.graph().last_tick();
    for &(tick, u_ext, v_ext) in &occurrences[..take] {
        let u = engine.intern_user(u_ext);
        // Stream items absent from the base graph still get their keyword
        // attributes; new vocabulary widens the table, never the bits.
        let ids = keywords
            .get(&v_ext)
            .map(|words| words.iter().map(|w| table.intern(w)).collect())
            .unwrap_or_default();
        let v = engine.intern_item(v_ext, ItemAttributes::new(ids, &table));
        let started = Instant::now();
        let outcome = engine.slide(u, v, base_tick + tick)?;
        let ms = started.elapsed().as_secs_f64() * 1e3;
        let held: usize = specs
            .iter()
            .map(|s| engine.results(s).map_or(0, |rs| rs.communities.len()))
            .sum();
        println!(
            "tick {}: insert ({u_ext}, {v_ext}), {} expired, {} centers refreshed, {} communities held, {:.2} ms",
            base_tick + tick,
            outcome.expire.is_some() as u8,
            outcome.refreshed_centers,
            held,
            ms,
        );
    }

    let sets: Vec<(ResultSet, f64)> = specs
        .iter()
        .filter_map(|s| engine.results(s).map(|rs| (rs, 0.0)))
        .collect();
    let mut w = open_out(out)?;
    write_result_sets(&mut w, engine.graph(), &table, &sets)?;
    w.flush()?;
    Ok(())
}

fn cmd_bbd(input: &InputArgs, query: &QueryArgs, out: &Option<PathBuf>, seed: u64) -> Result<()> {
    let (g, table) = input.load()?;
    let specs = query.specs(&g, &table, seed)?;
    let mut sets = Vec::with_capacity(specs.len());
    for spec in &specs {
        let started = Instant::now();
        let communities = bbd::snapshot(&g, spec);
        let rs = ResultSet {
            spec: spec.clone(),
            as_of: g.last_tick(),
            communities,
        };
        sets.push((rs, started.elapsed().as_secs_f64() * 1e3));
    }
    let mut w = open_out(out)?;
    write_result_sets(&mut w, &g, &table, &sets)?;
    w.flush()?;
    Ok(())
}

fn cmd_bench(
    desk: &DeskArgs,
    vary: &Option<Vec<String>>,
    compare_baseline: bool,
    out: &Option<PathBuf>,
    seed: u64,
) -> Result<u8> {
    let base = desk.config(seed);
    let sweep: Option<(Param, Vec<f64>)> = match vary {
        Some(tokens) => {
            let param: Param = tokens[0]
                .parse()
                .map_err(Error::InvalidParameter)?;
            Some((param, harness::parse_values(&tokens[1])?))
        }
        None => None,
    };

    let mut records = Vec::new();
    let points: Vec<(Option<(Param, f64)>, DeskConfig)> = match &sweep {
        Some((param, values)) => values
            .iter()
            .map(|&v| (Some((*param, v)), apply_param(&base, *param, v)))
            .collect(),
        None => vec![(None, base.clone())],
    };
    for (tag, cfg) in &points {
        let mut slide_ms = Vec::with_capacity(cfg.reps);
        let mut init_ms = Vec::with_capacity(cfg.reps);
        let mut counters = [0u64; 8];
        let mut results = 0;
        for rep in 0..cfg.reps {
            let m = harness::run_continuous_once(cfg, cfg.seed + 1000 * rep as u64)?;
            slide_ms.push(m.avg_slide_ms());
            init_ms.push(m.init_ms);
            for (acc, c) in counters.iter_mut().zip(m.counters) {
                *acc += c;
            }
            results = m.results;
        }
        let spec = match tag {
            Some((param, v)) => format!("{} {}={v}", cfg.spec_summary(), param.name()),
            None => cfg.spec_summary(),
        };
        records.push(BenchRecord {
            dataset: cfg.dataset_name(),
            spec: spec.clone(),
            phase: Phase::Init,
            wall_ms: bitruss_cli::stats::mean(&init_ms),
            counters: [0; 8],
            results: 0,
        });
        records.push(BenchRecord {
            dataset: cfg.dataset_name(),
            spec,
            phase: Phase::Slide,
            wall_ms: bitruss_cli::stats::mean(&slide_ms),
            counters,
            results,
        });
    }

    let rows: Vec<Vec<String>> = records.iter().map(BenchRecord::csv_row).collect();
    let mut w = open_out(out)?;
    io::write_csv(&mut w, &BenchRecord::csv_columns(), &rows)?;
    w.flush()?;

    if compare_baseline {
        let cmp = harness::baseline_speedup(&base, base.slides)?;
        eprintln!(
            "baseline: engine median {:.3} ms, baseline median {:.3} ms, speedup {:.1}x, results {}",
            cmp.engine_median_ms,
            cmp.baseline_median_ms,
            cmp.speedup,
            if cmp.results_match { "match" } else { "differ" },
        );
        if !cmp.results_match {
            return Ok(2);
        }
    }
    Ok(0)
}

fn cmd_ablation(desk: &DeskArgs, out: &Option<PathBuf>, seed: u64) -> Result<u8> {
    let cfg = desk.config(seed);
    let gen = workload::generate(&cfg.gen_config(cfg.seed))?;
    let mut table = KeywordTable::with_default_width();
    let g = workload::base_graph(&gen, &mut table, cfg.window);
    let specs = workload::gen_queries(
        &g,
        &table,
        cfg.queries,
        cfg.q,
        (cfg.k, cfg.r, cfg.sigma),
        cfg.seed,
    )?;
    let rows = harness::run_ablation(
        g,
        &specs,
        EngineConfig {
            r_max: 3,
            ..EngineConfig::default()
        },
    )?;
    let (columns, data) = harness::ablation_csv(&rows);
    let mut w = open_out(out)?;
    io::write_csv(&mut w, &columns, &data)?;
    w.flush()?;

    let monotone = rows.windows(2).all(|w| w[0].pruned <= w[1].pruned);
    let stable = rows.windows(2).all(|w| w[0].results == w[1].results);
    if monotone && stable {
        eprintln!("ablation: ok ({} groups)", rows.len());
        Ok(0)
    } else {
        eprintln!(
            "ablation: VIOLATION (pruned monotone: {monotone}, results stable: {stable})"
        );
        Ok(2)
    }
}

fn cmd_trends(desk: &DeskArgs, out: &Option<PathBuf>, seed: u64) -> Result<u8> {
    let base = desk.config(seed);
    let outcomes = harness::run_trend_suite(&base)?;
    let (columns, rows) = harness::sweep_csv(&outcomes);
    let mut w = open_out(out)?;
    io::write_csv(&mut w, &columns, &rows)?;
    w.flush()?;

    let mut failed = 0;
    for o in &outcomes {
        let expected = match o.expected_increasing {
            Some(true) => "expect increasing",
            Some(false) => "expect decreasing",
            None => "unasserted",
        };
        eprintln!(
            "{}: rho {:+.3}, p {:.4} ({expected}) {}",
            o.param.name(),
            o.rho,
            o.p_one_sided,
            if o.pass { "ok" } else { "MISMATCH" },
        );
        if !o.pass {
            failed += 1;
        }
    }
    Ok(if failed == 0 { 0 } else { 2 })
}

fn cmd_verify(instances: usize, seed: u64) -> Result<u8> {
    let report = harness::verify_corpus(instances, seed)?;
    if report.ok() {
        println!(
            "MATCH: {} instances, {} specs, snapshot == continuous == baseline == oracle",
            report.instances, report.specs_checked,
        );
        Ok(0)
    } else {
        for m in &report.mismatches {
            eprintln!("mismatch: {m}");
        }
        eprintln!("{} mismatches", report.mismatches.len());
        Ok(2)
    }
}

fn run(cli: Cli) -> Result<u8> {
    match &cli.cmd {
        Cmd::Generate { gen, out } => cmd_generate(gen, out, cli.seed).map(|()| 0),
        Cmd::Load { input } => cmd_load(input).map(|()| 0),
        Cmd::BuildSynopsis {
            input,
            r_max,
            gamma,
            dump,
        } => cmd_build_synopsis(input, *r_max, *gamma, *dump).map(|()| 0),
        Cmd::Snapshot {
            input,
            query,
            out,
            no_synopsis,
        } => cmd_snapshot(input, query, out, *no_synopsis, cli.seed).map(|()| 0),
        Cmd::Continuous {
            input,
            query,
            stream,
            slides,
            out,
            no_synopsis,
        } => cmd_continuous(input, query, stream, *slides, out, *no_synopsis, cli.seed)
            .map(|()| 0),
        Cmd::Bbd { input, query, out } => cmd_bbd(input, query, out, cli.seed).map(|()| 0),
        Cmd::Bench {
            desk,
            vary,
            compare_baseline,
            out,
        } => cmd_bench(desk, vary, *compare_baseline, out, cli.seed),
        Cmd::Ablation { desk, out } => cmd_ablation(desk, out, cli.seed),
        Cmd::Trends { desk, out } => cmd_trends(desk, out, cli.seed),
        Cmd::Verify { instances } => cmd_verify(*instances, cli.seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    if cli.threads > 0 {
        // Fixed worker pool for candidate detection; later calls are a
        // no-op if tests or callers already installed one.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            let code = match &e {
                Error::Io(_) | Error::Parse { .. } => 3,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}

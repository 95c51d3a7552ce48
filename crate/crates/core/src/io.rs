//! On-disk formats: graphs, item keywords, update streams, result records,
//! benchmark CSV, and a debug dump of the score store.
//!
//! Graph files are whitespace-separated edge lists in external ids, one
//! edge per line, `#` comments allowed. The native form carries an optional
//! integer weight in a third column; the compatibility form accepts the
//! common public-dataset layout (`%` comments, extra trailing columns
//! ignored, weight fixed at 1). Duplicate edge lines accumulate weight in
//! both forms.
//!
//! Stream files carry one occurrence per line; an occurrence's tick is its
//! line number, so skipped lines leave gaps but ticks stay increasing.
//! Result records and the score-store dump print external ids, sorted, so
//! diffing two runs is meaningful.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::engine::ResultSet;
use crate::community::Community;
use crate::error::{Error, Result};
use crate::graph::{ItemAttributes, StreamingGraph};
use crate::keywords::{KeywordId, KeywordTable};
use crate::scores::AuxStore;
use crate::workload::Generated;

/// Edge-file dialect.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    /// `user item [weight]`; a missing weight means 1; more than three
    /// columns is an error.
    EdgeList,
    /// `user item ...` with `%` comment lines; only the first two columns
    /// are read and every line weighs 1.
    Konect,
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

fn field<T: std::str::FromStr>(
    tok: &str,
    what: &str,
    path: &Path,
    line: usize,
) -> Result<T> {
    tok.parse()
        .map_err(|_| parse_err(path, line, format!("bad {what} `{tok}`")))
}

fn is_comment(line: &str) -> bool {
    line.starts_with('#') || line.starts_with('%')
}

/// Read an item-keyword file: `item kw1 kw2 ...`, one line per item.
pub fn read_keywords(path: &Path) -> Result<BTreeMap<u64, Vec<String>>> {
    let mut out = BTreeMap::new();
    for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        let ln = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || is_comment(trimmed) {
            continue;
        }
        let mut toks = trimmed.split_whitespace();
        let ext: u64 = field(toks.next().unwrap(), "item id", path, ln)?;
        let words: Vec<String> = toks.map(str::to_string).collect();
        if words.is_empty() {
            return Err(parse_err(path, ln, "item line lists no keywords"));
        }
        if out.insert(ext, words).is_some() {
            return Err(parse_err(path, ln, format!("duplicate keyword line for item {ext}")));
        }
    }
    Ok(out)
}

/// Read an edge file into a fresh graph with the given window capacity.
/// Items pick up their keywords from `keywords`; items absent there get an
/// empty attribute set.
pub fn read_graph(
    path: &Path,
    format: Format,
    keywords: &BTreeMap<u64, Vec<String>>,
    table: &mut KeywordTable,
    window: usize,
) -> Result<StreamingGraph> {
    let mut g = StreamingGraph::new(window);
    for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        let ln = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || is_comment(trimmed) {
            continue;
        }
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        if toks.len() < 2 {
            return Err(parse_err(path, ln, "expected at least two columns"));
        }
        let u_ext: u64 = field(toks[0], "user id", path, ln)?;
        let v_ext: u64 = field(toks[1], "item id", path, ln)?;
        let w: u32 = match format {
            Format::Konect => 1,
            Format::EdgeList => match toks.len() {
                2 => 1,
                3 => field(toks[2], "weight", path, ln)?,
                n => return Err(parse_err(path, ln, format!("expected 2 or 3 columns, got {n}"))),
            },
        };
        if format == Format::EdgeList && w == 0 {
            return Err(parse_err(path, ln, "weight must be positive"));
        }
        let u = g.intern_user(u_ext);
        let v = match g.find_item(v_ext) {
            Some(v) => v,
            None => {
                let ids: Vec<KeywordId> = keywords
                    .get(&v_ext)
                    .map(|words| words.iter().map(|w| table.intern(w)).collect())
                    .unwrap_or_default();
                g.intern_item(v_ext, ItemAttributes::new(ids, table))
            }
        };
        for _ in 0..w {
            g.add_base_edge(u, v);
        }
    }
    Ok(g)
}

/// Read an update stream: `user item` per line, tick = line number.
pub fn read_stream(path: &Path) -> Result<Vec<(u64, u64, u64)>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        let ln = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || is_comment(trimmed) {
            continue;
        }
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(parse_err(path, ln, format!("expected 2 columns, got {}", toks.len())));
        }
        let u: u64 = field(toks[0], "user id", path, ln)?;
        let v: u64 = field(toks[1], "item id", path, ln)?;
        out.push((ln as u64, u, v));
    }
    Ok(out)
}

/// Write a generated edge list in the native format.
pub fn write_graph(w: &mut impl Write, gen: &Generated) -> std::io::Result<()> {
    writeln!(w, "# user item weight")?;
    for &(u, v, weight) in &gen.edges {
        writeln!(w, "{u} {v} {weight}")?;
    }
    Ok(())
}

/// Write the item-keyword file for a generated dataset.
pub fn write_keywords(w: &mut impl Write, gen: &Generated) -> std::io::Result<()> {
    writeln!(w, "# item keywords...")?;
    for (v, words) in &gen.keywords {
        writeln!(w, "{v} {}", words.join(" "))?;
    }
    Ok(())
}

/// Write the update stream for a generated dataset.
pub fn write_stream(w: &mut impl Write, gen: &Generated) -> std::io::Result<()> {
    for &(u, v) in &gen.stream {
        writeln!(w, "{u} {v}")?;
    }
    Ok(())
}

/// One community as a single line of external ids:
/// `center; users; items; edges u:v:w; k=.. r=.. sigma=..; signature`.
/// Members are sorted by external id so records diff cleanly.
pub fn community_record(g: &StreamingGraph, c: &Community) -> String {
    let mut users: Vec<u64> = c.users.iter().map(|&u| g.user_ext(u)).collect();
    users.sort_unstable();
    let mut items: Vec<u64> = c.items.iter().map(|&v| g.item_ext(v)).collect();
    items.sort_unstable();
    let mut edges: Vec<(u64, u64, u32)> = c
        .edges
        .iter()
        .map(|&(u, v, w)| (g.user_ext(u), g.item_ext(v), w))
        .collect();
    edges.sort_unstable();

    let join = |xs: &[u64]| {
        xs.iter()
            .map(u64::to_string)
            .collect::<Vec<_>>()
            .join(" ")
    };
    let edge_str = edges
        .iter()
        .map(|(u, v, w)| format!("{u}:{v}:{w}"))
        .collect::<Vec<_>>()
        .join(" ");
    format!(
        "{}; {}; {}; {}; k={} r={} sigma={}; {:016x}",
        g.user_ext(c.center),
        join(&users),
        join(&items),
        edge_str,
        c.k,
        c.r,
        c.sigma,
        c.signature,
    )
}

/// Write a result set: a summary line, then one record per community.
pub fn write_results(
    w: &mut impl Write,
    g: &StreamingGraph,
    table: &KeywordTable,
    rs: &ResultSet,
    wall_ms: f64,
) -> std::io::Result<()> {
    let words: Vec<&str> = rs.spec.keywords.iter().map(|&id| table.name(id)).collect();
    writeln!(w, "# tick, spec, |R|, wall_ms")?;
    writeln!(
        w,
        "{}, k={} r={} sigma={} q={{{}}}, {}, {:.3}",
        rs.as_of,
        rs.spec.k,
        rs.spec.r,
        rs.spec.sigma,
        words.join(" "),
        rs.communities.len(),
        wall_ms,
    )?;
    for c in rs.communities.values() {
        writeln!(w, "{}", community_record(g, c))?;
    }
    Ok(())
}

/// Debug dump of the score store: every tracked user pair with its X and Y
/// accumulators, then every live edge with its butterfly count. External
/// ids, sorted.
pub fn aux_dump(g: &StreamingGraph, aux: &AuxStore) -> String {
    let mut pairs = Vec::new();
    for a in g.users() {
        if let Some(bs) = aux.partners(a) {
            for &b in bs {
                if a < b {
                    let p = aux.pair(a, b);
                    let (ea, eb) = (g.user_ext(a), g.user_ext(b));
                    pairs.push((ea.min(eb), ea.max(eb), p.x, p.y));
                }
            }
        }
    }
    pairs.sort_unstable();
    let mut edges = Vec::new();
    for u in g.users() {
        for (&v, _) in g.user_neighbors(u) {
            edges.push((g.user_ext(u), g.item_ext(v), aux.edge_ub(u, v)));
        }
    }
    edges.sort_unstable();

    let mut out = String::new();
    for (a, b, x, y) in pairs {
        out.push_str(&format!("pair {a} {b} {x} {y}\n"));
    }
    for (u, v, ub) in edges {
        out.push_str(&format!("edge {u} {v} {ub}\n"));
    }
    out
}

/// Write a benchmark CSV: a version header, a column row, then data rows.
pub fn write_csv(
    w: &mut impl Write,
    columns: &[&str],
    rows: &[Vec<String>],
) -> std::io::Result<()> {
    writeln!(w, "# schema=1")?;
    writeln!(w, "{}", columns.join(","))?;
    for row in rows {
        debug_assert_eq!(row.len(), columns.len());
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

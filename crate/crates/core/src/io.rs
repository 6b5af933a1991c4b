//! Readers and writers for graph, mapping and feature files.
//!
//! Supported graph formats:
//!
//! - MatrixMarket `coordinate` matrices (`real`, `integer` or `pattern`;
//!   `symmetric` or `general`). Diagonal entries are dropped and off-diagonal
//!   magnitudes become edge weights; pattern matrices get unit weights. For
//!   `general` matrices each node pair takes the largest magnitude found in
//!   either triangle.
//! - METIS `.graph`: header `n m [fmt [ncon]]` followed by one 1-based
//!   neighbor line per vertex. Edge weights are read when the last digit of
//!   `fmt` is 1; vertex sizes and weights are skipped.
//! - Edge lists: `u v [w]` per line with 1-based ids, `#` comments. An optional
//!   `# nodes: N` comment fixes the node count so trailing isolated nodes
//!   survive a round trip.
//!
//! All parsers work on `&str` so they can be driven directly by fuzzers.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::aggregate::MappingOperator;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::tsne::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    MatrixMarket,
    Metis,
    EdgeList,
}

impl GraphFormat {
    /// Guess the format from a file extension, defaulting to an edge list.
    pub fn from_path(path: &Path) -> GraphFormat {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("mtx") => GraphFormat::MatrixMarket,
            Some("graph") | Some("metis") => GraphFormat::Metis,
            _ => GraphFormat::EdgeList,
        }
    }
}

impl FromStr for GraphFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "matrix-market" | "mtx" | "mm" => Ok(GraphFormat::MatrixMarket),
            "metis" | "graph" => Ok(GraphFormat::Metis),
            "edge-list" | "edges" | "edgelist" => Ok(GraphFormat::EdgeList),
            other => Err(Error::invalid(format!("unknown graph format '{other}'"))),
        }
    }
}

/// Bounds applied to sizes declared inside untrusted files.
#[derive(Debug, Clone, Copy)]
pub struct ParseLimits {
    pub max_nodes: usize,
}

impl Default for ParseLimits {
    fn default() -> Self {
        ParseLimits {
            max_nodes: 100_000_000,
        }
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_string(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_graph(path: &Path, format: GraphFormat) -> Result<Graph> {
    parse_graph(&read_to_string(path)?, format)
}

pub fn save_graph(path: &Path, g: &Graph, format: GraphFormat) -> Result<()> {
    write_string(path, &write_graph(g, format))
}

pub fn parse_graph(text: &str, format: GraphFormat) -> Result<Graph> {
    parse_graph_with_limits(text, format, ParseLimits::default())
}

pub fn parse_graph_with_limits(text: &str, format: GraphFormat, limits: ParseLimits) -> Result<Graph> {
    match format {
        GraphFormat::MatrixMarket => parse_matrix_market(text, limits),
        GraphFormat::Metis => parse_metis(text, limits),
        GraphFormat::EdgeList => parse_edge_list(text, limits),
    }
}

pub fn write_graph(g: &Graph, format: GraphFormat) -> String {
    match format {
        GraphFormat::MatrixMarket => write_matrix_market(g),
        GraphFormat::Metis => write_metis(g),
        GraphFormat::EdgeList => write_edge_list(g),
    }
}

fn parse_index(tok: &str, line: usize, n: usize) -> Result<usize> {
    let v: usize = tok
        .parse()
        .map_err(|_| Error::parse(line, format!("invalid node index '{tok}'")))?;
    if v == 0 || v > n {
        return Err(Error::parse(
            line,
            format!("node index {v} out of range 1..={n}"),
        ));
    }
    Ok(v - 1)
}

fn parse_count(tok: Option<&str>, line: usize, what: &str) -> Result<usize> {
    let tok = tok.ok_or_else(|| Error::parse(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| Error::parse(line, format!("invalid {what} '{tok}'")))
}

fn parse_weight(tok: &str, line: usize) -> Result<f64> {
    let w: f64 = tok
        .parse()
        .map_err(|_| Error::parse(line, format!("invalid weight '{tok}'")))?;
    if !w.is_finite() {
        return Err(Error::parse(line, format!("non-finite weight '{tok}'")));
    }
    Ok(w)
}

fn check_nodes(n: usize, line: usize, limits: ParseLimits) -> Result<()> {
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    if n > limits.max_nodes {
        return Err(Error::parse(
            line,
            format!("{n} nodes exceeds limit {}", limits.max_nodes),
        ));
    }
    Ok(())
}

fn positive(p: usize, q: usize, w: f64) -> Result<f64> {
    if w > 0.0 {
        Ok(w)
    } else {
        Err(Error::BadWeight { p, q, w })
    }
}

pub fn parse_matrix_market(text: &str, limits: ParseLimits) -> Result<Graph> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, banner) = lines.next().ok_or(Error::EmptyGraph)?;
    let banner_toks: Vec<String> = banner
        .split_whitespace()
        .map(|t| t.to_ascii_lowercase())
        .collect();
    if banner_toks.len() != 5 || banner_toks[0] != "%%matrixmarket" || banner_toks[1] != "matrix" {
        return Err(Error::parse(1, "expected '%%MatrixMarket matrix ...' banner"));
    }
    if banner_toks[2] != "coordinate" {
        return Err(Error::parse(1, "only coordinate matrices are supported"));
    }
    let pattern = match banner_toks[3].as_str() {
        "real" | "integer" => false,
        "pattern" => true,
        other => return Err(Error::parse(1, format!("unsupported field '{other}'"))),
    };
    let symmetric = match banner_toks[4].as_str() {
        "symmetric" => true,
        "general" => false,
        other => return Err(Error::parse(1, format!("unsupported symmetry '{other}'"))),
    };

    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_line, size) = body.next().ok_or(Error::EmptyGraph)?;
    let mut toks = size.split_whitespace();
    let rows = parse_count(toks.next(), size_line, "row count")?;
    let cols = parse_count(toks.next(), size_line, "column count")?;
    let nnz = parse_count(toks.next(), size_line, "entry count")?;
    if toks.next().is_some() {
        return Err(Error::parse(size_line, "trailing tokens on size line"));
    }
    if rows != cols {
        return Err(Error::parse(size_line, format!("matrix is {rows} x {cols}, not square")));
    }
    let n = rows;
    check_nodes(n, size_line, limits)?;

    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    let mut seen = 0usize;
    for (line, l) in body {
        seen += 1;
        if seen > nnz {
            return Err(Error::parse(line, format!("more than the declared {nnz} entries")));
        }
        let mut toks = l.split_whitespace();
        let i = parse_index(toks.next().unwrap_or(""), line, n)?;
        let j = parse_index(
            toks.next()
                .ok_or_else(|| Error::parse(line, "missing column index"))?,
            line,
            n,
        )?;
        let v = if pattern {
            1.0
        } else {
            parse_weight(
                toks.next().ok_or_else(|| Error::parse(line, "missing value"))?,
                line,
            )?
        };
        if toks.next().is_some() {
            return Err(Error::parse(line, "trailing tokens on entry line"));
        }
        if i == j {
            continue;
        }
        let w = positive(i.min(j), i.max(j), v.abs())?;
        entries.push((i, j, w));
    }
    if seen != nnz {
        return Err(Error::parse(
            text.lines().count(),
            format!("declared {nnz} entries, found {seen}"),
        ));
    }
    if !symmetric {
        // one weight per node pair: the larger magnitude of the two triangles
        entries.iter_mut().for_each(|e| {
            if e.0 > e.1 {
                std::mem::swap(&mut e.0, &mut e.1);
            }
        });
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)).then(b.2.total_cmp(&a.2)));
        entries.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);
    }
    Graph::from_edges(n, entries)
}

fn parse_metis_fmt(tok: Option<&str>, line: usize) -> Result<(bool, bool, bool)> {
    let Some(tok) = tok else {
        return Ok((false, false, false));
    };
    if tok.is_empty() || tok.len() > 3 || !tok.bytes().all(|b| b == b'0' || b == b'1') {
        return Err(Error::parse(line, format!("invalid fmt '{tok}'")));
    }
    let padded = format!("{tok:0>3}");
    let b = padded.as_bytes();
    Ok((b[0] == b'1', b[1] == b'1', b[2] == b'1'))
}

pub fn parse_metis(text: &str, limits: ParseLimits) -> Result<Graph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim_start().starts_with('%'));
    let (hline, header) = loop {
        match lines.next() {
            Some((i, l)) if !l.trim().is_empty() => break (i, l),
            Some(_) => continue,
            None => return Err(Error::EmptyGraph),
        }
    };
    let mut toks = header.split_whitespace();
    let n = parse_count(toks.next(), hline, "vertex count")?;
    let m = parse_count(toks.next(), hline, "edge count")?;
    let (has_vsize, has_vwgt, has_ewgt) = parse_metis_fmt(toks.next(), hline)?;
    let ncon = match toks.next() {
        Some(t) => parse_count(Some(t), hline, "ncon")?,
        None => usize::from(has_vwgt),
    };
    if toks.next().is_some() {
        return Err(Error::parse(hline, "trailing tokens in header"));
    }
    check_nodes(n, hline, limits)?;

    let mut directed: Vec<(usize, usize, f64)> = Vec::new();
    let mut vertex = 0usize;
    let mut last_line = hline;
    for (line, l) in lines.by_ref() {
        last_line = line;
        if vertex == n {
            if l.trim().is_empty() {
                continue;
            }
            return Err(Error::parse(line, format!("more than {n} vertex lines")));
        }
        let mut toks = l.split_whitespace();
        let skip = usize::from(has_vsize) + if has_vwgt { ncon } else { 0 };
        for _ in 0..skip {
            let t = toks
                .next()
                .ok_or_else(|| Error::parse(line, "missing vertex size/weight"))?;
            t.parse::<f64>()
                .map_err(|_| Error::parse(line, format!("invalid vertex weight '{t}'")))?;
        }
        while let Some(t) = toks.next() {
            let v = parse_index(t, line, n)?;
            if v == vertex {
                return Err(Error::SelfLoop(vertex));
            }
            let w = if has_ewgt {
                let wt = toks
                    .next()
                    .ok_or_else(|| Error::parse(line, "missing edge weight"))?;
                positive(vertex.min(v), vertex.max(v), parse_weight(wt, line)?)?
            } else {
                1.0
            };
            directed.push((vertex, v, w));
        }
        vertex += 1;
    }
    if vertex < n {
        return Err(Error::parse(
            last_line,
            format!("expected {n} vertex lines, found {vertex}"),
        ));
    }

    // each undirected edge must be listed from both sides with equal weight
    let mut fwd: Vec<(usize, usize, f64)> = Vec::new();
    let mut bwd: Vec<(usize, usize, f64)> = Vec::new();
    for &(u, v, w) in &directed {
        if u < v {
            fwd.push((u, v, w));
        } else {
            bwd.push((v, u, w));
        }
    }
    let merge = |mut es: Vec<(usize, usize, f64)>| {
        es.sort_by_key(|a| (a.0, a.1));
        let mut out: Vec<(usize, usize, f64)> = Vec::with_capacity(es.len());
        for e in es {
            match out.last_mut() {
                Some(l) if l.0 == e.0 && l.1 == e.1 => l.2 += e.2,
                _ => out.push(e),
            }
        }
        out
    };
    let fwd = merge(fwd);
    let bwd = merge(bwd);
    if fwd.len() != bwd.len()
        || fwd.iter().zip(&bwd).any(|(a, b)| {
            a.0 != b.0 || a.1 != b.1 || (a.2 - b.2).abs() > 1e-9 * a.2.abs().max(b.2.abs())
        })
    {
        return Err(Error::parse(hline, "adjacency lists are not symmetric"));
    }
    if fwd.len() != m {
        return Err(Error::parse(
            hline,
            format!("header declares {m} edges, lists contain {}", fwd.len()),
        ));
    }
    Graph::from_edges(n, fwd)
}

pub fn parse_edge_list(text: &str, limits: ParseLimits) -> Result<Graph> {
    let mut declared: Option<usize> = None;
    let mut raw: Vec<(usize, usize, f64, usize)> = Vec::new();
    let mut max_id = 0usize;
    for (i, l) in text.lines().enumerate() {
        let line = i + 1;
        let t = l.trim();
        if let Some(c) = t.strip_prefix('#') {
            if let Some(v) = c.trim().strip_prefix("nodes:") {
                let n = parse_count(Some(v.trim()), line, "node count")?;
                check_nodes(n, line, limits)?;
                declared = Some(n);
            }
            continue;
        }
        if t.is_empty() {
            continue;
        }
        let toks: Vec<&str> = t.split_whitespace().collect();
        if toks.len() < 2 || toks.len() > 3 {
            return Err(Error::parse(line, "expected 'u v [w]'"));
        }
        let mut id = |tok: &str| -> Result<usize> {
            let v: usize = tok
                .parse()
                .map_err(|_| Error::parse(line, format!("invalid node id '{tok}'")))?;
            if v == 0 {
                return Err(Error::parse(line, "node ids are 1-based"));
            }
            if v > limits.max_nodes {
                return Err(Error::parse(line, format!("node id {v} exceeds limit")));
            }
            max_id = max_id.max(v);
            Ok(v - 1)
        };
        let u = id(toks[0])?;
        let v = id(toks[1])?;
        let w = match toks.get(2) {
            Some(tok) => parse_weight(tok, line)?,
            None => 1.0,
        };
        raw.push((u, v, w, line));
    }
    let n = match declared {
        Some(n) if n < max_id => {
            return Err(Error::parse(
                1,
                format!("node id {max_id} exceeds declared node count {n}"),
            ))
        }
        Some(n) => n,
        None => max_id,
    };
    check_nodes(n, 1, limits)?;
    Graph::from_edges(n, raw.into_iter().map(|(u, v, w, _)| (u, v, w)))
}

pub fn write_matrix_market(g: &Graph) -> String {
    let mut s = String::new();
    s.push_str("%%MatrixMarket matrix coordinate real symmetric\n");
    let _ = writeln!(s, "{} {} {}", g.n(), g.n(), g.num_edges());
    for e in g.edges() {
        let _ = writeln!(s, "{} {} {}", e.q + 1, e.p + 1, e.w);
    }
    s
}

pub fn write_metis(g: &Graph) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} {} 001", g.n(), g.num_edges());
    for p in 0..g.n() {
        let mut nbrs: Vec<(usize, f64)> = g.neighbors(p).collect();
        nbrs.sort_by_key(|&(q, _)| q);
        let line: Vec<String> = nbrs.iter().map(|(q, w)| format!("{} {}", q + 1, w)).collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    s
}

pub fn write_edge_list(g: &Graph) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# nodes: {}", g.n());
    for e in g.edges() {
        let _ = writeln!(s, "{} {} {}", e.p + 1, e.q + 1, e.w);
    }
    s
}

/// Mapping files hold one 0-based coarse id per line, line `i` for fine node `i`.
pub fn parse_mapping(text: &str) -> Result<MappingOperator> {
    let mut ids = Vec::new();
    for (i, l) in text.lines().enumerate() {
        let t = l.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let v: usize = t
            .parse()
            .map_err(|_| Error::parse(i + 1, format!("invalid coarse id '{t}'")))?;
        ids.push(v);
    }
    MappingOperator::new(ids)
}

pub fn write_mapping(h: &MappingOperator) -> String {
    let mut s = String::with_capacity(h.n_fine() * 4);
    for &c in h.cluster_of() {
        let _ = writeln!(s, "{c}");
    }
    s
}

pub fn load_mapping(path: &Path) -> Result<MappingOperator> {
    parse_mapping(&read_to_string(path)?)
}

pub fn save_mapping(path: &Path, h: &MappingOperator) -> Result<()> {
    write_string(path, &write_mapping(h))
}

/// Parses a CSV/TSV/whitespace feature matrix, one sample per row.
///
/// The delimiter is detected from the first data line. A first line with any
/// non-numeric feature token is treated as a header. When `label_column` is
/// given, that column is read as a class label instead of a feature.
pub fn parse_features(text: &str, label_column: Option<usize>) -> Result<Dataset> {
    let body: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect();
    let Some(&(_, first)) = body.first() else {
        return Err(Error::invalid("feature file has no rows"));
    };
    let delim = if first.contains(',') {
        Some(',')
    } else if first.contains('\t') {
        Some('\t')
    } else {
        None
    };
    let split = |l: &str| -> Vec<String> {
        match delim {
            Some(d) => l.split(d).map(|t| t.trim().to_string()).collect(),
            None => l.split_whitespace().map(str::to_string).collect(),
        }
    };
    let is_feature = |j: usize| Some(j) != label_column;
    let first_toks = split(first);
    let header = first_toks
        .iter()
        .enumerate()
        .any(|(j, t)| is_feature(j) && t.parse::<f64>().is_err());
    let rows = if header { &body[1..] } else { &body[..] };
    if rows.is_empty() {
        return Err(Error::invalid("feature file has a header but no rows"));
    }

    let mut width: Option<usize> = None;
    let mut data = Vec::new();
    let mut label_names: Vec<String> = Vec::new();
    let mut labels = Vec::new();
    for &(line, l) in rows {
        let toks = split(l);
        match width {
            None => width = Some(toks.len()),
            Some(w) if w != toks.len() => {
                return Err(Error::parse(
                    line,
                    format!("expected {w} columns, found {}", toks.len()),
                ))
            }
            _ => {}
        }
        if let Some(c) = label_column {
            if c >= toks.len() {
                return Err(Error::parse(line, format!("label column {c} out of range")));
            }
        }
        for (j, t) in toks.iter().enumerate() {
            if is_feature(j) {
                let v: f64 = t
                    .parse()
                    .map_err(|_| Error::parse(line, format!("invalid number '{t}'")))?;
                if !v.is_finite() {
                    return Err(Error::parse(line, format!("non-finite value '{t}'")));
                }
                data.push(v);
            } else {
                let id = match label_names.iter().position(|s| s == t) {
                    Some(id) => id,
                    None => {
                        label_names.push(t.clone());
                        label_names.len() - 1
                    }
                };
                labels.push(id);
            }
        }
    }
    let n = rows.len();
    let d = width.unwrap_or(0) - usize::from(label_column.is_some());
    let mut ds = Dataset::new(n, d, data)?;
    if label_column.is_some() {
        ds = ds.with_labels(labels, label_names)?;
    }
    Ok(ds)
}

pub fn load_features(path: &Path, label_column: Option<usize>) -> Result<Dataset> {
    parse_features(&read_to_string(path)?, label_column)
}

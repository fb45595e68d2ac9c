//! Edge-list and MatrixMarket ingestion, and the fixed-format writers shared by
//! the command-line tools.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// How to interpret a plain edge list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeListOptions {
    pub directed: bool,
    /// Node ids in the file start at 1.
    pub one_based: bool,
    /// Declared node count. When absent the largest id seen fixes `n`.
    pub nodes: Option<usize>,
}

impl Default for EdgeListOptions {
    fn default() -> Self {
        Self {
            directed: true,
            one_based: true,
            nodes: None,
        }
    }
}

/// Parses `u v` pairs, one per line. Blank lines and lines starting with `#`
/// or `%` are skipped, except that a `# nodes: N` comment (as written by
/// [`write_edge_list`]) declares the node count when `opts.nodes` is unset.
/// Tokens after the second on a line are ignored.
pub fn parse_edge_list(text: &str, opts: EdgeListOptions) -> Result<Graph> {
    let base = usize::from(opts.one_based);
    let mut pairs = Vec::new();
    let mut max_id = None;
    let mut declared = opts.nodes;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(count) = rest.trim().strip_prefix("nodes:") {
                if opts.nodes.is_none() {
                    declared = Some(count.trim().parse().map_err(|_| Error::Parse {
                        line: lineno + 1,
                        msg: format!("bad node count {:?}", count.trim()),
                    })?);
                }
            }
            continue;
        }
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let line_no = lineno + 1;
        let mut tokens = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty());
        let mut next_id = || -> Result<usize> {
            let tok = tokens.next().ok_or_else(|| Error::Parse {
                line: line_no,
                msg: "expected two node ids".into(),
            })?;
            let id: usize = tok.parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("{tok:?} is not a non-negative integer"),
            })?;
            if id < base {
                return Err(Error::Validation(format!(
                    "line {line_no}: node id {id} below the index base {base}"
                )));
            }
            Ok(id - base)
        };
        let u = next_id()?;
        let v = next_id()?;
        if u == v {
            return Err(Error::Validation(format!(
                "line {line_no}: self-loop at node {}",
                u + base
            )));
        }
        max_id = Some(max_id.unwrap_or(0).max(u).max(v));
        pairs.push((u, v));
    }
    let n = match (declared, max_id) {
        (Some(n), Some(m)) if m >= n => {
            return Err(Error::Validation(format!(
                "node id {} exceeds the declared node count {n}",
                m + base
            )))
        }
        (Some(0), _) => return Err(Error::Validation("node count must be positive".into())),
        (Some(n), _) => n,
        (None, Some(m)) => m + 1,
        (None, None) => return Err(Error::Validation("edge list contains no edges".into())),
    };
    if opts.directed {
        Graph::from_edges(n, pairs)
    } else {
        Graph::from_undirected_edges(n, pairs)
    }
}

/// Parses a MatrixMarket `coordinate pattern` file. `symmetric` files produce
/// an undirected graph; `general` files a directed one.
pub fn parse_matrix_market(text: &str) -> Result<Graph> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Parse {
        line: 1,
        msg: "empty MatrixMarket file".into(),
    })?;
    let fields: Vec<String> = header
        .split_whitespace()
        .map(|s| s.to_ascii_lowercase())
        .collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(Error::Parse {
            line: 1,
            msg: "expected '%%MatrixMarket matrix coordinate pattern general|symmetric'".into(),
        });
    }
    if fields[2] != "coordinate" || fields[3] != "pattern" {
        return Err(Error::Parse {
            line: 1,
            msg: format!(
                "unsupported MatrixMarket format {} {}",
                fields[2], fields[3]
            ),
        });
    }
    let symmetric = match fields[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("unsupported MatrixMarket symmetry {other:?}"),
            })
        }
    };

    let parse_num = |tok: &str, line: usize| -> Result<usize> {
        tok.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("{tok:?} is not a non-negative integer"),
        })
    };

    let mut size = None;
    let mut pairs = Vec::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        match size {
            None => {
                if toks.len() != 3 {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: "expected 'rows cols entries'".into(),
                    });
                }
                let rows = parse_num(toks[0], line_no)?;
                let cols = parse_num(toks[1], line_no)?;
                let nnz = parse_num(toks[2], line_no)?;
                if rows != cols {
                    return Err(Error::Validation(format!(
                        "adjacency must be square, got {rows}x{cols}"
                    )));
                }
                size = Some((rows, nnz));
            }
            Some((n, _)) => {
                if toks.len() < 2 {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: "expected 'row col'".into(),
                    });
                }
                let i = parse_num(toks[0], line_no)?;
                let j = parse_num(toks[1], line_no)?;
                if i == 0 || j == 0 || i > n || j > n {
                    return Err(Error::Validation(format!(
                        "line {line_no}: entry ({i}, {j}) outside 1..={n}"
                    )));
                }
                if i == j {
                    return Err(Error::Validation(format!(
                        "line {line_no}: self-loop at node {i}"
                    )));
                }
                pairs.push((i - 1, j - 1));
            }
        }
    }
    let (n, nnz) = size.ok_or_else(|| Error::Parse {
        line: 1,
        msg: "missing size line".into(),
    })?;
    if pairs.len() != nnz {
        return Err(Error::Validation(format!(
            "size line declares {nnz} entries, found {}",
            pairs.len()
        )));
    }
    if symmetric {
        Graph::from_undirected_edges(n, pairs)
    } else {
        Graph::from_edges(n, pairs)
    }
}

/// Reads a graph file, dispatching on the MatrixMarket banner.
pub fn load_graph(path: &Path, opts: EdgeListOptions) -> Result<Graph> {
    let text = fs::read_to_string(path)?;
    if text.trim_start().starts_with("%%MatrixMarket") {
        parse_matrix_market(&text)
    } else {
        parse_edge_list(&text, opts)
    }
}

/// Writes every directed edge as a `u v` line, with a leading node-count comment.
pub fn write_edge_list(g: &Graph, one_based: bool) -> String {
    let base = usize::from(one_based);
    let mut out = format!("# nodes: {}\n", g.node_count());
    for (i, j) in g.edges() {
        out.push_str(&format!("{} {}\n", i + base, j + base));
    }
    out
}

/// Formats like C's `%.12e`: twelve fractional digits and a signed exponent of
/// at least two digits.
pub fn fmt_sci(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// Node-id/score CSV, one row per node in index order.
pub fn scores_csv(scores: &[f64], one_based: bool) -> String {
    let base = usize::from(one_based);
    let mut out = String::from("node,score\n");
    for (i, s) in scores.iter().enumerate() {
        out.push_str(&format!("{},{}\n", i + base, fmt_sci(*s)));
    }
    out
}

/// Reads a `node,score` CSV (an optional header row is skipped) and returns
/// scores in node order. Every node must appear exactly once with a
/// non-negative score.
pub fn parse_score_file(text: &str, n: usize, one_based: bool) -> Result<Vec<f64>> {
    let base = usize::from(one_based);
    let mut scores: Vec<Option<f64>> = vec![None; n];
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split(',').map(str::trim);
        let (Some(node), Some(score)) = (cols.next(), cols.next()) else {
            return Err(Error::Parse {
                line: line_no,
                msg: "expected 'node,score'".into(),
            });
        };
        let Ok(node) = node.parse::<usize>() else {
            if idx == 0 {
                continue; // header
            }
            return Err(Error::Parse {
                line: line_no,
                msg: format!("{node:?} is not a node id"),
            });
        };
        let score: f64 = score.parse().map_err(|_| Error::Parse {
            line: line_no,
            msg: format!("{score:?} is not a number"),
        })?;
        if node < base || node - base >= n {
            return Err(Error::Validation(format!(
                "line {line_no}: node {node} is not in the graph"
            )));
        }
        if !(score >= 0.0) {
            return Err(Error::Validation(format!(
                "line {line_no}: score {score} is negative"
            )));
        }
        let slot = &mut scores[node - base];
        if slot.is_some() {
            return Err(Error::Validation(format!(
                "line {line_no}: node {node} listed twice"
            )));
        }
        *slot = Some(score);
    }
    scores
        .into_iter()
        .enumerate()
        .map(|(i, s)| s.ok_or_else(|| Error::Validation(format!("node {} has no score", i + base))))
        .collect()
}

//! Plain-text edge lists.
//!
//! One edge per line as `u v` (0-indexed decimal ids). Lines starting with
//! `#` and blank lines are ignored. The first non-comment line may be
//! `n <count>` to declare a vertex count, which lets isolated vertices exist;
//! otherwise the count is one more than the largest id seen.

use std::fmt::Write as _;
use std::io::BufRead;

use crate::error::{Error, Result};
use crate::graph::Graph;

pub fn parse_edge_list(text: &str) -> Result<Graph> {
    read_edge_list(text.as_bytes())
}

pub fn read_edge_list<R: BufRead>(reader: R) -> Result<Graph> {
    let mut declared: Option<usize> = None;
    let mut edges = Vec::new();
    let mut seen_content = false;

    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        let parse = |s: &str| {
            s.parse::<usize>().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("expected a non-negative integer, got {s:?}"),
            })
        };
        if !seen_content && fields.first() == Some(&"n") {
            if fields.len() != 2 {
                return Err(Error::Parse {
                    line: lineno,
                    msg: "expected `n <count>`".into(),
                });
            }
            declared = Some(parse(fields[1])?);
            seen_content = true;
            continue;
        }
        seen_content = true;
        if fields.len() != 2 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected `u v`, got {} fields", fields.len()),
            });
        }
        let (u, v) = (parse(fields[0])?, parse(fields[1])?);
        if u == v {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("self-loop at vertex {u}"),
            });
        }
        if let Some(n) = declared {
            if u >= n || v >= n {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("vertex id {} exceeds declared count {n}", u.max(v)),
                });
            }
        }
        edges.push((u, v));
    }

    let n = declared.unwrap_or_else(|| edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0));
    Graph::from_edges(n, edges)
}

/// Serializes with an explicit `n` header so isolated vertices survive a round trip.
pub fn write_edge_list(g: &Graph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "n {}", g.vertex_count());
    for (u, v) in g.edges() {
        let _ = writeln!(out, "{u} {v}");
    }
    out
}

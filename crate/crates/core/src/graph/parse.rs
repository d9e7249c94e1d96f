use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Edgelist,
}

impl Format {
    /// `.json` files are JSON; anything else is read as an edge list.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Edgelist,
        }
    }
}

pub(super) fn parse(input: &[u8], format: Format, checked: bool) -> Result<Graph> {
    let text = std::str::from_utf8(input).map_err(|e| Error::Parse {
        line: 0,
        message: format!("input is not UTF-8: {e}"),
    })?;
    match format {
        Format::Json => parse_json(text, checked),
        Format::Edgelist => parse_edgelist(text, checked),
    }
}

fn remember(order: &mut Vec<String>, seen: &mut std::collections::HashSet<String>, id: &str) {
    if seen.insert(id.to_string()) {
        order.push(id.to_string());
    }
}

/// `u v c` per line, `#` starts a comment, `!exterior a b ..` declares the
/// exterior. Vertices are numbered in order of first appearance on an edge
/// line.
pub(super) fn parse_edgelist(text: &str, checked: bool) -> Result<Graph> {
    let mut vertices = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut exterior = Vec::new();
    let mut edges = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = body.split_whitespace().collect();
        if let Some(directive) = tokens[0].strip_prefix('!') {
            if directive != "exterior" {
                return Err(Error::Parse {
                    line,
                    message: format!("unknown directive `!{directive}`"),
                });
            }
            exterior.extend(tokens[1..].iter().map(|t| t.to_string()));
            continue;
        }
        if tokens.len() != 3 {
            return Err(Error::Parse {
                line,
                message: format!("expected `u v c`, found {} fields", tokens.len()),
            });
        }
        let c: f64 = tokens[2].parse().map_err(|_| Error::Parse {
            line,
            message: format!("invalid conductance `{}`", tokens[2]),
        })?;
        remember(&mut vertices, &mut seen, tokens[0]);
        remember(&mut vertices, &mut seen, tokens[1]);
        edges.push((tokens[0].to_string(), tokens[1].to_string(), c));
    }
    for t in &exterior {
        remember(&mut vertices, &mut seen, t);
    }
    build(&vertices, &exterior, &edges, checked)
}

fn build(
    vertices: &[String],
    exterior: &[String],
    edges: &[(String, String, f64)],
    checked: bool,
) -> Result<Graph> {
    if checked {
        Graph::new(vertices, exterior, edges)
    } else {
        Graph::new_unchecked(vertices, exterior, edges)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonEdge {
    u: String,
    v: String,
    c: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonGraph {
    #[serde(default)]
    vertices: Option<Vec<String>>,
    #[serde(default)]
    exterior: Vec<String>,
    edges: Vec<JsonEdge>,
}

pub(super) fn parse_json(text: &str, checked: bool) -> Result<Graph> {
    let doc: JsonGraph = serde_json::from_str(text)?;
    let edges: Vec<(String, String, f64)> =
        doc.edges.into_iter().map(|e| (e.u, e.v, e.c)).collect();
    let vertices = match doc.vertices {
        Some(v) => v,
        None => {
            let mut order = Vec::new();
            let mut seen = std::collections::HashSet::new();
            for (u, v, _) in &edges {
                remember(&mut order, &mut seen, u);
                remember(&mut order, &mut seen, v);
            }
            order
        }
    };
    build(&vertices, &doc.exterior, &edges, checked)
}

pub(super) fn to_json(g: &Graph) -> serde_json::Value {
    let doc = JsonGraph {
        vertices: Some(g.ids().to_vec()),
        exterior: g.exterior().iter().map(|&x| g.id(x).to_string()).collect(),
        edges: g
            .edges()
            .iter()
            .map(|e| JsonEdge {
                u: g.id(e.u).to_string(),
                v: g.id(e.v).to_string(),
                c: e.conductance(),
            })
            .collect(),
    };
    serde_json::to_value(doc).expect("graph serializes")
}

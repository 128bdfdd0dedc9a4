//! Text-file ingestion and emission.
//!
//! Formats:
//! - edge list: one `u v` pair of non-negative integers per line, `#` lines
//!   ignored;
//! - features: header line `N d`, then N rows of d decimal numbers;
//! - labels: lines `node_id class_id`.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{Graph, GraphError};

/// Loads a graph, attaching features and labels when paths are given.
pub fn load_dataset(
    edge_path: &Path,
    feature_path: Option<&Path>,
    label_path: Option<&Path>,
) -> Result<Graph, GraphError> {
    let (n_from_edges, edges) = read_edge_list(edge_path)?;
    let mut n = n_from_edges;

    let features = match feature_path {
        Some(p) => {
            let f = read_features(p)?;
            n = n.max(f.len());
            Some(f)
        }
        None => None,
    };

    let labels_raw = match label_path {
        Some(p) => {
            let l = read_labels(p)?;
            if let Some(&(max_id, _)) = l.iter().max_by_key(|(id, _)| *id) {
                n = n.max(max_id as usize + 1);
            }
            Some(l)
        }
        None => None,
    };

    let mut g = Graph::from_edges(n, &edges)?;
    if let Some(f) = features {
        if f.len() != n {
            return Err(GraphError::Ingestion {
                path: feature_path.unwrap().display().to_string(),
                line: f.len() + 1,
                detail: format!("feature matrix has {} rows but the graph has {n} nodes", f.len()),
            });
        }
        g.set_features(f)?;
    }
    if let Some(raw) = labels_raw {
        let mut labels: Vec<Option<u32>> = vec![None; n];
        for (id, class) in raw {
            labels[id as usize] = Some(class);
        }
        g.set_labels(labels)?;
    }
    Ok(g)
}

fn read_to_string(path: &Path) -> Result<String, GraphError> {
    fs::read_to_string(path).map_err(|e| GraphError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Returns (implied node count, edge list).
pub fn read_edge_list(path: &Path) -> Result<(usize, Vec<(u32, u32)>), GraphError> {
    let text = read_to_string(path)?;
    let mut edges = Vec::new();
    let mut max_id: i64 = -1;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let err = |detail: String| GraphError::Ingestion {
            path: path.display().to_string(),
            line: i + 1,
            detail,
        };
        let u: u32 = it
            .next()
            .ok_or_else(|| err("missing source id".into()))?
            .parse()
            .map_err(|e| err(format!("bad source id: {e}")))?;
        let v: u32 = it
            .next()
            .ok_or_else(|| err("missing target id".into()))?
            .parse()
            .map_err(|e| err(format!("bad target id: {e}")))?;
        if it.next().is_some() {
            return Err(err("more than two fields on edge line".into()));
        }
        max_id = max_id.max(u as i64).max(v as i64);
        edges.push((u, v));
    }
    Ok(((max_id + 1) as usize, edges))
}

pub fn read_features(path: &Path) -> Result<Vec<Vec<f64>>, GraphError> {
    let text = read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let err = |line: usize, detail: String| GraphError::Ingestion {
        path: path.display().to_string(),
        line,
        detail,
    };
    let (_, header) = lines
        .next()
        .ok_or_else(|| err(1, "empty feature file".into()))?;
    let mut hw = header.split_whitespace();
    let n: usize = hw
        .next()
        .ok_or_else(|| err(1, "header must be `N d`".into()))?
        .parse()
        .map_err(|e| err(1, format!("bad N in header: {e}")))?;
    let d: usize = hw
        .next()
        .ok_or_else(|| err(1, "header must be `N d`".into()))?
        .parse()
        .map_err(|e| err(1, format!("bad d in header: {e}")))?;

    let mut rows = Vec::with_capacity(n);
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| err(i + 1, format!("bad number: {e}")))?;
        if row.len() != d {
            return Err(err(i + 1, format!("expected {d} values, found {}", row.len())));
        }
        rows.push(row);
    }
    if rows.len() != n {
        return Err(err(
            text.lines().count(),
            format!("header promised {n} rows, found {}", rows.len()),
        ));
    }
    Ok(rows)
}

pub fn read_labels(path: &Path) -> Result<Vec<(u32, u32)>, GraphError> {
    let text = read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |detail: String| GraphError::Ingestion {
            path: path.display().to_string(),
            line: i + 1,
            detail,
        };
        let mut it = line.split_whitespace();
        let id: u32 = it
            .next()
            .ok_or_else(|| err("missing node id".into()))?
            .parse()
            .map_err(|e| err(format!("bad node id: {e}")))?;
        let class: u32 = it
            .next()
            .ok_or_else(|| err("missing class id".into()))?
            .parse()
            .map_err(|e| err(format!("bad class id: {e}")))?;
        out.push((id, class));
    }
    Ok(out)
}

pub fn write_edge_list(path: &Path, g: &Graph) -> Result<(), GraphError> {
    let mut buf = String::new();
    for (u, v) in g.edges() {
        buf.push_str(&format!("{u} {v}\n"));
    }
    write_atomic(path, buf.as_bytes())
}

pub fn write_features(path: &Path, features: &[Vec<f64>]) -> Result<(), GraphError> {
    let d = features.first().map(|r| r.len()).unwrap_or(0);
    let mut buf = format!("{} {}\n", features.len(), d);
    for row in features {
        let cells: Vec<String> = row.iter().map(|x| format!("{x}")).collect();
        buf.push_str(&cells.join(" "));
        buf.push('\n');
    }
    write_atomic(path, buf.as_bytes())
}

pub fn write_labels(path: &Path, labels: &[(u32, u32)]) -> Result<(), GraphError> {
    let mut buf = String::new();
    for (id, class) in labels {
        buf.push_str(&format!("{id} {class}\n"));
    }
    write_atomic(path, buf.as_bytes())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), GraphError> {
    let mut f = fs::File::create(path).map_err(|e| GraphError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    f.write_all(bytes).map_err(|e| GraphError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

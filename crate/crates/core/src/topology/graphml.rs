//! Minimal GraphML reader for Topology Zoo style files.
//!
//! Only `graphml > graph > (node | edge)` is interpreted: node `id`, edge
//! `source` / `target`. Keys, data elements and `edgedefault` are ignored and
//! edges are always undirected. Self-loops and parallel edges are dropped and
//! the largest connected component is kept.

use std::collections::HashMap;
use std::path::Path;

use super::{Topology, TopologyKind};
use crate::error::{Error, Result};

fn err(element: &str, message: impl Into<String>) -> Error {
    Error::GraphMl {
        element: element.to_string(),
        message: message.into(),
    }
}

/// Reads a GraphML file; the topology is named after the file stem.
pub fn load_graphml(path: impl AsRef<Path>) -> Result<Topology> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_graphml(&text, &name)
}

pub fn parse_graphml(text: &str, name: &str) -> Result<Topology> {
    let doc = roxmltree::Document::parse(text).map_err(|e| err("document", e.to_string()))?;
    let root = doc.root_element();
    if root.tag_name().name() != "graphml" {
        return Err(err(
            root.tag_name().name(),
            "root element must be <graphml>",
        ));
    }
    let graph = root
        .children()
        .find(|c| c.is_element() && c.tag_name().name() == "graph")
        .ok_or_else(|| err("graphml", "missing <graph> element"))?;

    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut labels: Vec<String> = Vec::new();
    let mut raw_edges: Vec<(&str, &str)> = Vec::new();
    for child in graph.children().filter(|c| c.is_element()) {
        match child.tag_name().name() {
            "node" => {
                let id = child
                    .attribute("id")
                    .ok_or_else(|| err("node", "missing id attribute"))?;
                if index.insert(id, labels.len()).is_some() {
                    return Err(err("node", format!("duplicate node id {id:?}")));
                }
                labels.push(id.to_string());
            }
            "edge" => {
                let s = child
                    .attribute("source")
                    .ok_or_else(|| err("edge", "missing source attribute"))?;
                let t = child
                    .attribute("target")
                    .ok_or_else(|| err("edge", "missing target attribute"))?;
                raw_edges.push((s, t));
            }
            _ => {}
        }
    }
    if labels.is_empty() {
        return Err(err("graph", "graph has no nodes"));
    }

    let mut edges = Vec::with_capacity(raw_edges.len());
    for (s, t) in raw_edges {
        let u = *index
            .get(s)
            .ok_or_else(|| err("edge", format!("unknown source node {s:?}")))?;
        let v = *index
            .get(t)
            .ok_or_else(|| err("edge", format!("unknown target node {t:?}")))?;
        edges.push((u, v));
    }

    let n = labels.len();
    let (topo, kept) = Topology::giant_component_of(
        n,
        edges,
        TopologyKind::Imported {
            name: name.to_string(),
        },
    );
    if topo.node_count() == 0 {
        return Err(err("graph", "largest connected component is empty"));
    }
    let kept_labels = kept
        .into_iter()
        .map(|i| std::mem::take(&mut labels[i]))
        .collect();
    Ok(topo.with_labels(kept_labels))
}

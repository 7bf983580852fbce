//! Embedding and graph exports for external plotting.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gcn::{argmax, GcnModel, PreparedGraph};
use crate::graph::GraphSample;

/// CSV with one row per sample: `sample_id,true_label,predicted_label,e0,..`
/// where `e*` is the eval-mode readout embedding.
pub fn embeddings_csv(model: &GcnModel, samples: &[GraphSample]) -> Result<String> {
    use rayon::prelude::*;
    let dim = model.config().embedding_dim();
    let rows: Vec<_> = samples
        .par_iter()
        .map(|s| model.forward_eval(&PreparedGraph::new(s)))
        .collect::<Result<_>>()?;
    let mut out = String::from("sample_id,true_label,predicted_label");
    for k in 0..dim {
        write!(out, ",e{k}").unwrap();
    }
    out.push('\n');
    for (s, cache) in samples.iter().zip(&rows) {
        write!(
            out,
            "{},{},{}",
            s.id,
            s.label,
            argmax(cache.probabilities())
        )
        .unwrap();
        for v in cache.embedding() {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn export_embeddings(model: &GcnModel, samples: &[GraphSample], path: &Path) -> Result<()> {
    let csv = embeddings_csv(model, samples)?;
    write_creating_dirs(path, csv)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphFormat {
    #[default]
    Dot,
    Json,
}

impl std::str::FromStr for GraphFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "dot" => Ok(GraphFormat::Dot),
            "json" => Ok(GraphFormat::Json),
            other => Err(format!("unknown graph format `{other}` (dot, json)")),
        }
    }
}

impl GraphFormat {
    pub fn extension(self) -> &'static str {
        match self {
            GraphFormat::Dot => "dot",
            GraphFormat::Json => "json",
        }
    }
}

#[derive(Serialize)]
struct JsonNode {
    id: usize,
    x: f64,
    y: f64,
}

#[derive(Serialize)]
struct JsonGraph<'a> {
    sample_id: &'a str,
    label: usize,
    nodes: Vec<JsonNode>,
    /// Undirected edges `[i, j]` with `i < j`, each listed once.
    edges: Vec<[usize; 2]>,
}

pub fn graph_to_dot(sample: &GraphSample) -> String {
    let mut out = format!("graph \"{}\" {{\n", sample.id.replace('"', "\\\""));
    writeln!(out, "  // label = {}", sample.label).unwrap();
    for (i, p) in sample.landmarks.points().iter().enumerate() {
        writeln!(out, "  n{i} [pos=\"{},{}!\"];", p.x, -p.y).unwrap();
    }
    for (i, j) in sample.adjacency.edges() {
        writeln!(out, "  n{i} -- n{j};").unwrap();
    }
    out.push_str("}\n");
    out
}

pub fn graph_to_json(sample: &GraphSample) -> String {
    let graph = JsonGraph {
        sample_id: &sample.id,
        label: sample.label,
        nodes: sample
            .landmarks
            .points()
            .iter()
            .enumerate()
            .map(|(id, p)| JsonNode { id, x: p.x, y: p.y })
            .collect(),
        edges: sample
            .adjacency
            .edges()
            .into_iter()
            .map(|(i, j)| [i, j])
            .collect(),
    };
    serde_json::to_string_pretty(&graph).expect("graph serializes")
}

pub fn export_graph(sample: &GraphSample, path: &Path, format: GraphFormat) -> Result<()> {
    let text = match format {
        GraphFormat::Dot => graph_to_dot(sample),
        GraphFormat::Json => graph_to_json(sample),
    };
    write_creating_dirs(path, text)
}

fn write_creating_dirs(path: &Path, contents: String) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use super::config::{RunConfig, Subset, SweepParam};
use crate::data::{
    export_embeddings, export_graph, generate_synthetic, load_dataset, split_dataset,
    write_dataset, Dataset, FeatureSource, ImageEncoding, Split,
};
use crate::error::{Error, Result};
use crate::features::ToyEncoder;
use crate::features::DEFAULT_PATCH_GRID;
use crate::gcn::{checkpoint, evaluate, prepare, train_prepared, EpochRecord, GcnModel};
use crate::graph::{GraphSample, DEFAULT_TAU_GRID};
use crate::metrics::MetricsReport;

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    write_file(path, text + "\n")
}

/// Quotes a CSV field when it contains a separator, quote or line break.
fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn history_csv(history: &[EpochRecord]) -> String {
    let mut out = String::from("epoch,lr,loss,accuracy\n");
    for r in history {
        writeln!(out, "{},{},{},{}", r.epoch, r.lr, r.loss, r.accuracy).unwrap();
    }
    out
}

fn mean_edges(graphs: &[GraphSample]) -> f64 {
    if graphs.is_empty() {
        return 0.0;
    }
    graphs
        .iter()
        .map(|g| g.adjacency.edge_count() as f64)
        .sum::<f64>()
        / graphs.len() as f64
}

/// Builds one graph per sample under the configured feature source.
fn build_graphs(cfg: &RunConfig, dataset: &Dataset) -> Result<Vec<GraphSample>> {
    let encoder = match cfg.feature_source {
        FeatureSource::Stored => None,
        _ => Some(ToyEncoder::new(&cfg.encoder_config())?),
    };
    let encoding = encoder.as_ref().map(|encoder| ImageEncoding {
        patch_height: cfg.patch_height,
        patch_width: cfg.patch_width,
        encoder,
    });
    dataset.build_graphs(cfg.tau, cfg.feature_source, encoding.as_ref())
}

fn pick(graphs: &[GraphSample], indices: &[usize]) -> Vec<GraphSample> {
    indices.iter().map(|&i| graphs[i].clone()).collect()
}

fn check_compatible(model: &GcnModel, dataset: &Dataset, graphs: &[GraphSample]) -> Result<()> {
    let config = model.config();
    if config.classes != dataset.classes() {
        return Err(Error::DimensionMismatch {
            context: "checkpoint classes vs dataset classes",
            expected: config.classes,
            found: dataset.classes(),
        });
    }
    if let Some(g) = graphs.iter().find(|g| g.feature_dim() != config.input_dim) {
        return Err(Error::DimensionMismatch {
            context: "checkpoint input dimension vs sample features",
            expected: config.input_dim,
            found: g.feature_dim(),
        });
    }
    Ok(())
}

#[derive(Serialize)]
struct TrainReport<'a> {
    evaluated_on: &'static str,
    train_samples: usize,
    test_samples: usize,
    mean_edges: f64,
    final_train_loss: Option<f64>,
    metrics: &'a MetricsReport,
}

/// Outcome of one train-and-evaluate run.
pub struct RunSummary {
    pub metrics: MetricsReport,
    pub mean_edges: f64,
    pub final_train_loss: Option<f64>,
}

/// Splits, builds graphs, trains and evaluates; writes the checkpoint,
/// history, metrics and effective config into `cfg.out_dir`.
pub fn train_and_evaluate(cfg: &RunConfig, dataset: &Dataset) -> Result<RunSummary> {
    cfg.echo(&cfg.out_dir)?;
    let split = split_dataset(dataset, &cfg.split_spec(), cfg.seed)?;
    let graphs = build_graphs(cfg, dataset)?;
    let train_graphs = prepare(&pick(&graphs, &split.train));
    let test_graphs = prepare(&pick(&graphs, &split.test));

    let input_dim = graphs
        .first()
        .map_or(dataset.feature_dim, GraphSample::feature_dim);
    let model_config = cfg.model_config(input_dim, dataset.classes());
    let outcome = train_prepared(&train_graphs, model_config, &cfg.train_config())?;

    checkpoint::save(&outcome.model, &cfg.out_dir.join("checkpoint.bin"))?;
    write_file(
        &cfg.out_dir.join("history.csv"),
        history_csv(&outcome.history),
    )?;

    let (evaluated_on, eval_graphs) = if test_graphs.is_empty() {
        ("train", &train_graphs)
    } else {
        ("test", &test_graphs)
    };
    let metrics = evaluate(&outcome.model, eval_graphs)?;
    let summary = RunSummary {
        mean_edges: mean_edges(&graphs),
        final_train_loss: outcome.history.last().map(|r| r.loss),
        metrics,
    };
    write_json(
        &cfg.out_dir.join("metrics.json"),
        &TrainReport {
            evaluated_on,
            train_samples: split.train.len(),
            test_samples: split.test.len(),
            mean_edges: summary.mean_edges,
            final_train_loss: summary.final_train_loss,
            metrics: &summary.metrics,
        },
    )?;
    write_file(
        &cfg.out_dir.join("metrics.txt"),
        summary.metrics.to_string(),
    )?;
    Ok(summary)
}

pub fn synth(cfg: &RunConfig) -> Result<()> {
    cfg.echo(&cfg.out_dir)?;
    let synthetic = generate_synthetic(&cfg.synthetic_spec())?;
    let manifest = write_dataset(&cfg.out_dir, &synthetic.dataset, cfg.feature_storage())?;
    println!(
        "wrote {} samples ({} classes) to {}",
        synthetic.dataset.len(),
        synthetic.dataset.classes(),
        manifest.display()
    );
    Ok(())
}

pub fn build_graph(cfg: &RunConfig) -> Result<()> {
    cfg.echo(&cfg.out_dir)?;
    let dataset = load_dataset(cfg.dataset_path()?)?;
    let graphs = build_graphs(cfg, &dataset)?;
    let mut out = String::from("sample_id,label,nodes,edges,mean,std,threshold\n");
    for g in &graphs {
        let t = g.threshold.expect("built graphs carry their threshold");
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            csv_field(&g.id),
            g.label,
            g.node_count(),
            g.adjacency.edge_count(),
            t.mean,
            t.std_dev,
            t.threshold
        )
        .unwrap();
    }
    let path = cfg.out_dir.join("graphs.csv");
    write_file(&path, out)?;
    println!(
        "built {} graphs at tau = {}, mean edge count {:.3}; summary in {}",
        graphs.len(),
        cfg.tau,
        mean_edges(&graphs),
        path.display()
    );
    Ok(())
}

pub fn train(cfg: &RunConfig) -> Result<()> {
    let dataset = load_dataset(cfg.dataset_path()?)?;
    let summary = train_and_evaluate(cfg, &dataset)?;
    if let Some(loss) = summary.final_train_loss {
        println!("final training loss {loss:.6}");
    }
    print!("{}", summary.metrics);
    println!("outputs in {}", cfg.out_dir.display());
    Ok(())
}

fn subset_indices(split: &Split, subset: Subset, n: usize) -> Vec<usize> {
    match subset {
        Subset::Test => split.test.clone(),
        Subset::Train => split.train.clone(),
        Subset::All => (0..n).collect(),
    }
}

pub fn eval(cfg: &RunConfig) -> Result<()> {
    cfg.echo(&cfg.out_dir)?;
    let model = checkpoint::load(cfg.checkpoint_path()?)?;
    let dataset = load_dataset(cfg.dataset_path()?)?;
    let split = split_dataset(&dataset, &cfg.split_spec(), cfg.seed)?;
    let graphs = build_graphs(cfg, &dataset)?;
    check_compatible(&model, &dataset, &graphs)?;
    let indices = subset_indices(&split, cfg.subset, graphs.len());
    if indices.is_empty() {
        return Err(Error::invalid(
            format!("the {:?} subset is empty", cfg.subset).to_lowercase(),
        ));
    }
    let metrics = evaluate(&model, &prepare(&pick(&graphs, &indices)))?;
    write_json(&cfg.out_dir.join("eval_metrics.json"), &metrics)?;
    write_file(&cfg.out_dir.join("eval_metrics.txt"), metrics.to_string())?;
    print!("{metrics}");
    Ok(())
}

struct SweepRow {
    value: f64,
    result: Result<RunSummary>,
}

fn sweep_csv(param: SweepParam, rows: &[SweepRow]) -> String {
    let name = match param {
        SweepParam::Tau => "tau",
        SweepParam::Patch => "patch",
    };
    let mut out = String::from("param,value,Acc,F1-Score,WAR,UAR,loss,mean_edges,status\n");
    for row in rows {
        match &row.result {
            Ok(s) => {
                let m = &s.metrics;
                writeln!(
                    out,
                    "{name},{},{},{},{},{},{},{},ok",
                    row.value, m.accuracy, m.macro_f1, m.war, m.uar, m.loss, s.mean_edges
                )
                .unwrap();
            }
            Err(e) => {
                let status = csv_field(&format!("error: {e}"));
                writeln!(out, "{name},{},,,,,,,{status}", row.value).unwrap();
            }
        }
    }
    out
}

/// Applies one grid value to a copy of the base configuration.
fn sweep_point(base: &RunConfig, index: usize, value: f64) -> Result<RunConfig> {
    let mut cfg = base.clone();
    cfg.grid = None;
    match base.param {
        SweepParam::Tau => {
            cfg.tau = value;
            cfg.out_dir = base.out_dir.join(format!("tau_{index:02}_{value}"));
        }
        SweepParam::Patch => {
            if !(value >= 1.0 && value.fract() == 0.0) {
                return Err(Error::invalid(format!(
                    "patch size {value} is not a positive integer"
                )));
            }
            cfg.patch_height = value as usize;
            cfg.patch_width = value as usize;
            cfg.feature_source = FeatureSource::Image;
            cfg.out_dir = base.out_dir.join(format!("patch_{index:02}_{value}"));
        }
    }
    Ok(cfg)
}

pub fn sweep(cfg: &RunConfig) -> Result<()> {
    cfg.echo(&cfg.out_dir)?;
    let dataset = load_dataset(cfg.dataset_path()?)?;
    let grid: Vec<f64> = match (&cfg.grid, cfg.param) {
        (Some(g), _) => g.clone(),
        (None, SweepParam::Tau) => DEFAULT_TAU_GRID.to_vec(),
        (None, SweepParam::Patch) => DEFAULT_PATCH_GRID.iter().map(|&s| s as f64).collect(),
    };
    if grid.is_empty() {
        return Err(Error::invalid("sweep grid is empty"));
    }
    let mut rows = Vec::with_capacity(grid.len());
    for (i, &value) in grid.iter().enumerate() {
        let result =
            sweep_point(cfg, i, value).and_then(|point| train_and_evaluate(&point, &dataset));
        match &result {
            Ok(s) => println!(
                "{value}: Acc {:.4}  F1 {:.4}  UAR {:.4}  mean edges {:.2}",
                s.metrics.accuracy, s.metrics.macro_f1, s.metrics.uar, s.mean_edges
            ),
            Err(e) => eprintln!("{value}: failed: {e}"),
        }
        rows.push(SweepRow { value, result });
    }
    let path = cfg.out_dir.join("sweep.csv");
    write_file(&path, sweep_csv(cfg.param, &rows))?;
    println!("sweep table in {}", path.display());
    if rows.iter().all(|r| r.result.is_err()) {
        let last = rows.pop().expect("grid is non-empty");
        return last.result.map(|_| ());
    }
    Ok(())
}

pub fn export_embeddings_cmd(cfg: &RunConfig) -> Result<()> {
    cfg.echo(&cfg.out_dir)?;
    let model = checkpoint::load(cfg.checkpoint_path()?)?;
    let dataset = load_dataset(cfg.dataset_path()?)?;
    let graphs = build_graphs(cfg, &dataset)?;
    check_compatible(&model, &dataset, &graphs)?;
    let path = cfg.out_dir.join("embeddings.csv");
    export_embeddings(&model, &graphs, &path)?;
    println!("wrote {} embeddings to {}", graphs.len(), path.display());
    Ok(())
}

pub fn export_graph_cmd(cfg: &RunConfig) -> Result<()> {
    cfg.echo(&cfg.out_dir)?;
    let mut dataset = load_dataset(cfg.dataset_path()?)?;
    if !cfg.samples.is_empty() {
        let mut indices = Vec::with_capacity(cfg.samples.len());
        for id in &cfg.samples {
            let i = dataset
                .samples
                .iter()
                .position(|s| &s.id == id)
                .ok_or_else(|| Error::invalid(format!("no sample with id `{id}`")))?;
            indices.push(i);
        }
        dataset = dataset.subset(&indices);
    }
    let graphs = build_graphs(cfg, &dataset)?;
    let dir = cfg.out_dir.join("graphs");
    for g in &graphs {
        export_graph(
            g,
            &dir.join(format!("{}.{}", g.id, cfg.format.extension())),
            cfg.format,
        )?;
    }
    println!("wrote {} graphs to {}", graphs.len(), dir.display());
    Ok(())
}

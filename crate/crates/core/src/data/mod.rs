//! Dataset formats, synthetic data, splits and exports.

mod blob;
mod export;
mod manifest;
mod split;
mod synthetic;

pub use blob::{decode as decode_feature_blob, encode as encode_feature_blob};
pub use export::{
    embeddings_csv, export_embeddings, export_graph, graph_to_dot, graph_to_json, GraphFormat,
};
pub use manifest::{
    load_dataset, read_manifest, write_dataset, Dataset, DatasetManifest, FeatureSource,
    FeatureStorage, ImageEncoding, LoadedSample, SampleRecord, FORMAT_VERSION,
};
pub use split::{split_dataset, Split, SplitSpec};
pub use synthetic::{
    class_names, generate_synthetic, ClassTemplate, SyntheticDataset, SyntheticSpec, FRAME_SIZE,
    TEMPLATE_CENTER, TEMPLATE_RADIUS,
};

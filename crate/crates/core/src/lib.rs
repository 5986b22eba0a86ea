//! Interaction-typed scenario slicing, scene-graph distances and
//! extreme-scenario labeling for vehicle trajectory data.
//!
//! The pipeline runs [`ingest`] → [`slicing`] → [`scene_graph`] →
//! [`tree_metric`] → [`graph_dtw`] → [`labeling`]; [`synthgen`] produces
//! scripted corpora with known ground truth for every stage.

pub mod geometry;
pub mod graph_dtw;
pub mod ingest;
pub mod labeling;
pub mod scene_graph;
pub mod slicing;
pub mod synthgen;
pub mod tree_metric;

pub use geometry::{Polygon, Polyline, Vec2};
pub use graph_dtw::{dtw, encode, scenario_distance, DtwConfig, DtwError, EncodedScenario, FrameDistanceMatrix, WarpResult};
pub use ingest::{IngestConfig, IngestError, RoadMap, Track, TrackPoint, TrackSet, VehicleId};
pub use labeling::{label_scenarios, DistanceMatrix, LabelConfig, LabelError, LabelReport, VennCounts};
pub use scene_graph::{build_scene, expand_tree, ComputationTree, SceneError, SceneGraph, TreeKind};
pub use slicing::{slice, slice_all, AtomScenario, InteractionType, SliceConfig, SliceError};
pub use synthgen::{generate, GroundTruth, ScriptSpec, SynthError};
pub use tree_metric::{scene_distance, tree_distance, MetricConfig, MetricError, SceneTrees};

/// Any error raised by the pipeline stages.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Slice(#[from] SliceError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Dtw(#[from] DtwError),
    #[error(transparent)]
    Label(#[from] LabelError),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

impl Error {
    /// Short stable name of the variant, for machine-readable reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Ingest(_) => "ingest",
            Error::Slice(_) => "slicing",
            Error::Scene(_) => "scene_graph",
            Error::Metric(_) => "tree_metric",
            Error::Dtw(_) => "graph_dtw",
            Error::Label(_) => "labeling",
            Error::Synth(_) => "synthgen",
        }
    }
}

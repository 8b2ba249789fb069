//! PhiNet backbones for microcontroller-class hardware: build the layer graph
//! for a hyperparameter choice, price it in multiply-accumulates and memory,
//! invert that pricing to fit a platform budget, execute the network for real
//! to cross-check the arithmetic, track detected objects across frames, and
//! translate compute into energy and battery life.

pub mod archgraph;
pub mod energy;
pub mod executor;
pub mod resources;
pub mod tracker;
pub mod tuner;

pub use archgraph::{
    build_phinet, deserialize_graph, serialize_graph, ArchitectureSpec, ComputationGraph,
    GraphError, LayerDescriptor, LayerKind, Shape,
};
pub use energy::{CurrentTrace, EnergyError, EnergyModel, WorkingPoint};
pub use executor::{decode_head, nms, run, DecodedBox, ExecError, ExecutionTrace, Tensor};
pub use resources::{estimate, ResourceError, ResourceReport};
pub use tracker::{Bbox, Detection, SortParams, Track, TrackError};
pub use tuner::{tune, PlatformBudget, TuneError, TuningResult};

//! Networks of quantum neurons: topologies, mixing, feature expansion and
//! end-to-end differentiation.

pub mod checkpoint;
pub mod features;
pub mod mixing;
pub mod model;
pub mod topology;

pub use checkpoint::Checkpoint;
pub use features::{feature_expand, Basis, FeatureMap};
pub use mixing::{mix, MixingRule};
pub use model::{partition, ForwardCache, LayerCache, Network};
pub use topology::{
    count_params, parse_topology, ArchOptions, Architecture, LayerSpec, NetworkSpec,
};

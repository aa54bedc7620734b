//! Event-driven simulator for multimedia flows in a two-layer optical network.
//!
//! The lower layer is a physical topology of nodes and directed fiber links;
//! the upper layer is a virtual topology of lightpaths, each occupying one
//! wavelength on every fiber it traverses. Flows are admitted onto the virtual
//! topology by a staged algorithm that routes over existing lightpaths first
//! and establishes at most one new lightpath per admission (k-shortest paths
//! plus first-fit wavelength assignment). A flow-deviation pass periodically
//! re-routes flows to reduce the network-wide average packet delay under a
//! per-lightpath M/M/1 model.
//!
//! All numeric state is generic over the scalar type via [`Scalar`]; the
//! aliases below fix `f64`, which is what the CLI and the bundled data use.

pub mod admission;
pub mod error;
pub mod fda;
pub mod model;
pub mod report;
pub mod routing;
pub mod scalar;
pub mod sim;
pub mod traffic;

pub use error::Error;
pub use scalar::Scalar;

/// Physical topology with `f64` coordinates and lengths.
pub type Topology = model::PhysicalTopology<f64>;
/// Virtual topology (live lightpath set) over `f64`.
pub type VirtualTopology = model::VirtualTopology<f64>;
/// Lightpath with `f64` capacity and load.
pub type Lightpath = model::Lightpath<f64>;
/// Mutable two-layer network state over `f64`.
pub type NetworkState = admission::NetworkState<f64>;
/// A routed or blocked multimedia flow over `f64`.
pub type Flow = admission::Flow<f64>;
/// Simulation run options over `f64`.
pub type SimOptions = sim::SimOptions<f64>;
/// Full simulation output bundle over `f64`.
pub type SimOutput = sim::SimOutput<f64>;

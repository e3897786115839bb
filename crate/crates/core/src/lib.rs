//! Symbolic analysis, verification, synthesis and placement of route-map
//! stanzas and ACL rules.

pub mod disambiguator;
pub mod engine;
pub mod interval;
pub mod model;
pub mod parser;
pub mod pipeline;
pub mod render;
pub mod symbolic;
pub mod synthesizer;
pub mod verifier;

pub use interval::IntervalSet;

/// Scalar route attributes (local preference, MED, tag, weight, next hop).
pub type ScalarSet = IntervalSet<u32>;
/// Packet addresses.
pub type AddrSet = IntervalSet<u32>;
/// Transport ports.
pub type PortSet = IntervalSet<u16>;

//! Occupancy mapping, topological routing and product search for indoor
//! retail spaces.

pub mod cli;
pub mod ingest;
pub mod localization;
pub mod pipeline;
pub mod render;
pub mod routing;
pub mod search;
pub mod service;
pub mod spatial;
pub mod synthetic;
pub mod topology;
pub mod zones;

/// Version stamped into every persisted artifact.
pub const SCHEMA_VERSION: u32 = 1;

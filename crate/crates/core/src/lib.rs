//! Modeling, validation, and analysis of AttoNet-style residual bottleneck
//! networks.
//!
//! - [`arch`]: layer/module/network data model, validation, channel binding,
//!   and shape propagation.
//! - [`zoo`]: the prototype skeleton and the four published AttoNets.
//! - [`complexity`]: exact parameter and mult-add counts.
//! - [`netscore`]: the NetScore metric and the accuracy indicator.
//! - [`engine`]: reference forward pass and binary tensor/weight formats.
//! - [`explorer`]: seeded progressive search over module micro-architectures.
//! - [`dot`]: Graphviz export.

pub mod arch;
pub mod complexity;
pub mod dot;
pub mod engine;
pub mod explorer;
pub mod netscore;
pub mod zoo;

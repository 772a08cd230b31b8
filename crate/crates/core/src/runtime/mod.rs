//! Dataflow runtime: drops expand into Amines, nodes hold them in a Pine,
//! queue ready drops in a Vokzal by recursion depth, and hand the largest
//! ones to free nodes.

mod graph;
mod message;
mod node;

pub use graph::{
    compute_direct, execute_local, expand, write_results_to_amine, Amine, Arc, Drop, DropState, DropType, Origin,
    OutGrid, Pad, Target, Task, View,
};
pub use message::{Body, Fragment, Message, HEADER_BYTES};
pub use node::{CalcStep, CostModel, NodeState, NodeStatus, Running, RuntimeConfig};

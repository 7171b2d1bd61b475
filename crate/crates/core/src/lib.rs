pub mod data;
pub mod error;
pub mod graph;
pub mod losses;
pub mod metrics;
pub mod model;
pub mod numerics;
pub mod pipeline;
pub mod seed;
pub mod verify;

pub mod action;
pub mod coarse;
pub mod error;
pub mod floyd;
pub mod graph;
pub mod group;
pub mod hyperbolic;
pub mod manifest;
pub mod maps;
pub mod report;
pub mod svg;
pub mod topo;
pub mod verify;
pub mod word;

pub use error::{Error, Result};
pub use word::Word;

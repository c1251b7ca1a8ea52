//! Exact troubleshooting inference by model counting on reduced ordered
//! binary decision diagrams.

pub mod bench;
pub mod counting;
pub mod formula;
pub mod generate;
pub mod inference;
pub mod kernel;
pub mod model;
pub mod oracle;
pub mod robdd;
pub mod session;
pub mod verify;

pub use counting::{Evidence, OpCounter, WeightFunction};
pub use formula::Formula;
pub use inference::{PosteriorResult, Strategy, TsEvidence};
pub use kernel::{CompiledKernel, FaultMode};
pub use model::TroubleshootingModel;
pub use robdd::{Robdd, VarOrder};

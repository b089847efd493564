//! Capacity-expansion planning robust to worst-case regional low-renewable
//! events, solved by column-and-constraint generation.

pub mod ccg;
pub mod error;
pub mod grid;
pub mod master;
pub mod oracle;
pub mod prep;
pub mod report;
pub mod solver;
pub mod subproblem;
pub mod uncertainty;

pub use error::{Error, Result};

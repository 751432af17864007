//! Allgather schedules, execution and cost modelling.
//!
//! The crate builds explicit communication schedules for the classical
//! Allgather algorithms (Ring, Neighbor Exchange, Recursive Doubling, Bruck)
//! and for Sparbit, executes them against in-memory buffers to check the
//! Allgather postcondition, and prices them with a Hockney cost model over
//! hierarchical topologies.

pub mod error;
pub mod executor;
pub mod group;
pub mod netmodel;
pub mod schedule;
pub mod schedules;

pub use error::{Error, Result};
pub use group::{make_group, Block, ProcessGroup, Rank};
pub use schedule::{validate_schedule, CommSchedule, Direction, MessageAction, Step, Violation};
pub use schedules::AlgorithmId;

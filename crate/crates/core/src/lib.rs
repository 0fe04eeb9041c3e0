//! Continuous-time dynamic graphs, the continuous-time 1-WL test, unfolding
//! trees and a small continuous-time message-passing network.

pub mod cdg;
pub mod cgnn;
pub mod decompose;
pub mod harness;
pub mod indexed;
pub mod io;
pub mod iso;
pub mod utree;
pub mod verify;
pub mod wl;

pub use cdg::{
    Attr, Cdg, CdgError, EdgeKey, Event, EventKind, Item, NodeId, Snapshot, StartGraph, Timestamp,
};

//! ringswarm: decentralized multi-agent coordination over a ring topology.
//!
//! The crate covers the full pipeline used by a camera-only drone swarm to
//! monitor a group of individuals:
//!
//! * [`geometry`] — bounding boxes, planar similarity transforms, and
//!   closed-form least-squares alignment.
//! * [`lsa`] — exact rectangular linear sum assignment (Hungarian) plus a
//!   brute-force oracle.
//! * [`boxicp`] — iterative box-set registration with nested assignment
//!   matching, ring-wise identity consensus, and the ring success model.
//! * [`gnn`] — a message-passing network for decentralized goal
//!   assignment, trained with manual reverse-mode differentiation.
//! * [`wire`] — the length-framed binary protocol for box announcements,
//!   hidden-state vectors, and goal claims, with bandwidth accounting.
//! * [`sim`] — an end-to-end mission simulator: spiral scouting, a
//!   synthetic detector, ring registration, decentralized assignment, and
//!   deterministic reporting.
//! * [`cli`] — the command implementations behind the `ringswarm` binary.
//!
//! See the crate examples for one runnable program per capability.

pub mod boxicp;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod gnn;
pub mod lsa;
pub mod sim;
pub mod wire;

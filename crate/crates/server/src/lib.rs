//! HTTP play service and command-line front end for the Monopoly Deal learner.
//!
//! Sessions are event-sourced: a session is its deal plus an append-only action log, and the
//! log is written durably before any response that acknowledges it.

pub mod api;
pub mod cli;
pub mod session;
pub mod store;

//! Command-line entry points and the HTTP session service.

pub mod api;
pub mod cli;
pub mod config;
pub mod error;
pub mod session;

//! Session service and command-line tools over `gazeref-core`.

pub mod api;
pub mod cli;
pub mod config;
pub mod render;

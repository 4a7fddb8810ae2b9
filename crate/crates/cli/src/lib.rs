//! Command implementations and the HTTP session service behind `prefloop`.

pub mod commands;
pub mod server;

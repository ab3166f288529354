//! Command-line front end: file formats, SVG rendering and subcommands.

pub mod commands;
pub mod formats;
pub mod render;

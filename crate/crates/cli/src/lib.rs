//! Scene files and batch commands for lifting snout paths.

pub mod commands;
pub mod error;
pub mod output;
pub mod scene;

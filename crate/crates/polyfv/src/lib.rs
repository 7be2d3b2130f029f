//! File formats, CSV reports and the command-line front end for
//! `polyfv-core`.

pub mod cli;
pub mod meshfile;
pub mod report;

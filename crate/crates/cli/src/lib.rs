//! Library side of the `hmm-ident` command-line tool.

pub mod casestudy;
pub mod commands;
pub mod model;
pub mod report;

//! Library surface of the `isospec` command-line tool; exposed so
//! integration tests can drive scenarios and parsers directly.

pub mod commands;
pub mod scenario;

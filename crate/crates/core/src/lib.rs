//! Sequential equivalence checking between two register-transfer descriptions.

pub mod bench;
pub mod cec;
pub mod config;
pub mod frontend;
pub mod mapper;
pub mod mapping;
pub mod netlist;
pub mod sat;
pub mod sec;
pub mod sim;
pub mod tri;
pub mod xcheck;

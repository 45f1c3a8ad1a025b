//! The configuration language of a trading deployment and the generator
//! that turns a linked configuration into deployment files.

pub mod codegen;
pub mod dsl;

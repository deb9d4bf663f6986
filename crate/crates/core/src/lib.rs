//! Seed-location filtering for DNA read mapping on a simulated
//! compute-in-SRAM associative processor.

pub mod seq;
pub mod sim;
pub mod ucode;
pub mod myers;
pub mod candgen;
pub mod harness;
pub mod par;

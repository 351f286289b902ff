//! Test-only helpers: deterministic image generators and brute-force
//! reference computations that share no code with the library paths they
//! check.

#![allow(dead_code)]

pub mod images;
pub mod oracles;

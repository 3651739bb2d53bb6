//! Oracles shared by the integration tests and the acceptance suite.
#![allow(dead_code)]

pub mod events;
pub mod fits;

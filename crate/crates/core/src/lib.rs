//! Inner and outer confidence sets for inverse sets, obtained by inverting
//! simultaneous confidence bands.
//!
//! The crate is organised bottom-up:
//!
//! * [`domain`]: finite domains, fields, bands and index sets.
//! * [`inversion`]: confidence sets for upper/lower excursion and interval
//!   inverse sets, and the containment events they are judged by.
//! * [`regression`]: OLS and logistic fits with standard errors of linear
//!   functionals on a test design.
//! * [`scb`]: simultaneous bands by pairs bootstrap (regression) and
//!   multiplier bootstrap (dense functional data).
//! * [`datagen`]: the synthetic scenarios used by the Monte Carlo harness.
//! * [`sim`]: coverage experiments.
//! * [`io`]: CSV serialization of fields, sets and bands.

pub mod datagen;
pub mod domain;
pub mod error;
pub mod inversion;
pub mod io;
pub mod linalg;
pub mod regression;
pub mod rng;
pub mod scb;
pub mod sim;

pub use domain::{Band, Direction, Domain, Field, FunctionalSample, IndexSet, Point};
pub use error::{Error, ErrorKind, Result};
pub use inversion::{ExcursionCs, IntervalCs, IntervalGrid, LevelSet};
pub use regression::{CoefFit, DesignMatrix, Model, PredictionField, PredictionTarget};
pub use scb::{BootstrapConfig, MaxStatDistribution, Multiplier};

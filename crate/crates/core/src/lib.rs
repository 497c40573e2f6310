//! Modeling toolkit for fiber-taper-coupled dielectric microdisk resonators:
//! whispering-gallery eigenmodes, cavity-QED rates, coupled-mode transmission
//! spectra, tuning models and spectral fitting.

pub mod cmt;
pub mod config;
pub mod error;
pub mod fitting;
pub mod geometry;
pub mod modesolver;
pub mod perturb;
pub mod qed;
pub mod units;

pub use error::{Error, Result};

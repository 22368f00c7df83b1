//! Market simulator and econometrics toolkit for context disclosure in
//! second-price ad auctions.
//!
//! The crate has five pieces:
//!
//! - [`market`]: bidder valuation draws, second-price auctions, and
//!   scenario simulation under configurable disclosure regimes.
//! - [`econ`]: weighted fixed-effects regression with cluster-robust
//!   standard errors and diff-in-diff design matrices.
//! - [`synth`]: synthetic control fitting on the simplex plus MSPE-ratio
//!   placebo inference.
//! - [`panel`]: aggregation of auction outcomes into site-week panels,
//!   treatment injection, and delimited-text panel I/O.
//! - [`revenue`]: revenue projection from an estimated CPM uplift.

pub mod econ;
pub mod error;
pub mod market;
pub mod panel;
pub mod revenue;
pub mod synth;

pub use error::{Error, Result};

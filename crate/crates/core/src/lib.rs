//! Property testing for ordered structures: strings, black-and-white images
//! and edge-colored graphs on ordered vertex sets.
//!
//! Start with the examples:
//!
//! - `distances`: Hamming, earthmover and mixingness
//! - `er_profile`: random basic moves against a property, and the chessboard
//! - `testers`: canonical, tolerant, piecewise and simulated testers
//! - `string_er`: the histogram test for monotone strings
//! - `boundaries`: shape boundaries and recoloring of an image
//! - `regularity`: regular pairs and regularity instances
//! - `experiment`: one named experiment as a CSV report
//!
//! `ordtest` (the binary) exposes the same through subcommands.

pub mod cli;
pub mod error;
pub mod experiments;
mod geometry;
pub mod imageboundary;
pub mod limits;
pub mod math;
pub mod metrics;
pub mod properties;
pub mod regularity;
pub mod structures;
pub mod testers;

pub use error::{Error, Result};
pub use math::Rational;

//! Exact symplectic twist maps of the annulus whose invariant graph carries a
//! Denjoy-type circle homeomorphism, built at finite truncation, with the
//! checks that go with the construction.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod circle;
pub mod circle_map;
pub mod config;
pub mod error;
pub mod layout;
pub mod profiles;
pub mod quadrature;
pub mod report;
pub mod sequences;
pub mod suite;
pub mod twist_map;

pub use error::{Error, Result};

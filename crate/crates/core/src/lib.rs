//! Canonical two-form on SL(2,ℂ) character varieties, computed from ribbon
//! graphs carrying jump matrices, with builders for shear-coordinate,
//! multi-contour and trinion coordinate systems.

#![allow(clippy::needless_range_loop)]

pub mod builders;
pub mod coords;
pub mod dd;
pub mod error;
pub mod form;
pub mod graph;
pub mod jet;
pub mod mat2;
pub mod specfmt;
pub mod verify;

pub use error::{Error, Result};

//! Numerical toolkit for the regularity theory of Kakeya maps
//! φ(v, t) = (c(v) + t·v, t).
//!
//! Slices of the image are closed loops γ_t; their winding fields, signed
//! volumes and mollified approximants are the objects computed here.

pub mod convergence;
pub mod error;
pub mod geom;
pub mod maps;
pub mod measure;
pub mod mollify;
pub mod regularity;
pub mod slice;
pub mod sphere;
pub mod winding;

pub use error::{KakeyaError, Result};

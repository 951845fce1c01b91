//! Finite-dimensional completely positive maps.
//!
//! The crate covers the Kraus/Choi data model ([`cpmap`]), decomposition of
//! CP isometries into pure isometries with orthogonal images ([`isometry`]),
//! canonicity checks for isometric comonoids ([`frobenius`]), a small string
//! diagram language ([`dsl`]) and seeded verification campaigns
//! ([`campaign`]).

pub mod campaign;
pub mod cpmap;
pub mod dsl;
pub mod error;
pub mod frobenius;
pub mod isometry;
pub mod parallel;
pub mod tensor;

pub use cpmap::{CPMap, CPMapRecord, Purification};
pub use error::{Error, Result};
pub use tensor::{CMatrix, Tolerance, C64};

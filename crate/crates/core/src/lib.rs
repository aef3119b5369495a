//! Unitary orthosymplectic supergroup UOSp(k1/2k2) in angular Gelfand-Tzetlin
//! coordinates: Grassmann arithmetic, supermatrices, the level-by-level coset
//! construction, the USp(2k2) tail, invariant densities, patterns and
//! residual checkers.

pub mod error;
pub mod grassmann;
pub mod gt_core;
pub mod measure;
pub mod pattern;
pub mod superlinear;
pub mod usp_chain;
pub mod verify;

pub use error::{Error, Result};
pub use grassmann::GrassmannElement;
pub use superlinear::SuperMatrix;
pub use usp_chain::{Quaternion, USpChart};
pub use gt_core::{CartanSpectrum, GtChart, LevelModuli};
pub use pattern::{GelfandPattern, PatternKind};
pub use verify::Report;






pub use num_complex::Complex64 as C64;

/// Bodies closer than this are treated as a degenerate orbit.
pub const DEGENERACY_TOL: f64 = 1e-9;

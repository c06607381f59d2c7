//! Topological pressure, Bowen roots and box-dimension bounds for
//! subshift-of-finite-type models of hyperbolic sets.
//!
//! The crate is organised bottom-up:
//!
//! - [`sft`]: subshifts of finite type and admissible words;
//! - [`cocycle`] and [`potential`]: matrix cocycles, singular-value
//!   potentials, and locally constant potentials with exact cylinder
//!   suprema;
//! - [`pressure`]: partition sums, transfer-matrix and sub-additive
//!   pressure, fixed-past sums, equilibrium measures and the doubling
//!   scheme;
//! - [`stopping`]: prefix-free stopping families and their sums;
//! - [`root`]: monotone root finding for pressure functions;
//! - [`geometry`]: self-affine models, cylinder covers and box counting.
//!
//! Hot loops are chunked through [`exec::Exec`]; with the `parallel`
//! feature (default) chunks run on rayon, otherwise sequentially, with
//! identical results.

pub mod cocycle;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod linalg;
pub mod potential;
pub mod pressure;
pub mod root;
pub mod sft;
pub mod stopping;

pub use cocycle::{MatrixCocycle, SvParams};
pub use error::{Error, Result};
pub use exec::Exec;
pub use geometry::AffineModel;
pub use linalg::SmallMat;
pub use potential::{Potential, Side};
pub use pressure::{PressureEstimate, PressureMethod};
pub use root::RootResult;
pub use sft::{Subshift, Word};
pub use stopping::StoppingFamily;

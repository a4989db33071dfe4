//! Stable suboptimal H-infinity controllers for SISO plants with input delay.
//!
//! The plant is `P(s) = exp(-h s) M(s) N_o(s) / m_d(s)`. The crate computes the
//! optimal level, builds the suboptimal controller family parameterized by a
//! free function `U`, and searches `U` for a controller that is itself stable.

pub mod contour;
pub mod controller;
pub mod error;
pub mod finite;
pub mod grid;
pub mod infinite;
pub mod nevanlinna;
pub mod pick;
pub mod plant;
pub mod poly;
pub mod rational;
pub mod roots;
pub mod stability;
pub mod synthesis;

pub use error::{Error, Result};
pub use grid::{sup_norm_on_grid, sup_on_grid, FrequencyGrid};
pub use poly::Poly;
pub use rational::RationalFn;
pub use roots::{poly_roots, RootSet};

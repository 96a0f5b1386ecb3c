//! Zeros of the Gaussian entire function conditioned on rare zero-count
//! events.
//!
//! The crate covers the truncated Taylor series and its zeros, exact potential
//! theory for radial measures, a constrained minimizer for the modified energy
//! functional `I_α`, scalar rate constants, and two conditional samplers (a
//! Metropolis chain on zero configurations and the coefficient-suppression
//! construction).

pub mod constants;
pub mod error;
pub mod optimizer;
pub mod quad;
pub mod radial;
pub mod rng;
pub mod sampler;
pub mod roots;
pub mod series;
pub mod stats;
pub mod testfn;

pub use error::{Error, Result};
pub use optimizer::{Constraint, ShellGrid};
pub use num_complex::Complex64;
pub use rng::{StreamRng, StreamSeed};
pub use radial::{Atom, Annulus, FunctionalReport, RadialMeasure};
pub use roots::{Plane, ZeroConfig, ZeroRecord};
pub use series::{CoeffVector, TruncationPlan};
pub use testfn::TestFunction;

//! Incoherent adiabatic steering of a multilevel atom by a cyclically
//! modulated broad-band squeezed-vacuum reservoir.
//!
//! The crate is `no_std` (it needs `alloc`) and splits into four layers:
//!
//! * [`densemat`]: fixed-capacity complex matrices for dimensions up to 6.
//! * [`squeeze`]: everything parameterized by the squeezing `η = r e^{iφ}`:
//!   jump operators, dark states, frame unitaries, steering generators and
//!   assembled [`squeeze::ModelSpec`]s for the four- and five-level atoms.
//! * [`engine`]: a fixed-step RK4 integrator for the time-dependent Lindblad
//!   equation, with invariant checks and phase tracking.
//! * [`closed_form`]: analytic predictions (eigenrates, coherence evolution,
//!   Berry phase, five-level interferometry, polarization readout).
//!
//! All rates are measured in units of the bare decay rate, so `Γ = 1` fixes
//! the time unit unless a model is built with a different value.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod closed_form;
pub mod densemat;
pub mod engine;
pub mod squeeze;

mod error;

pub use error::{Error, Invariant};

/// Double-precision complex scalar used throughout.
pub type C64 = num_complex::Complex<f64>;

pub type Result<T, E = Error> = core::result::Result<T, E>;

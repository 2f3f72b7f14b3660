//! Frequency-domain network model and reduced pulse dynamics of a gate-tunable
//! superconducting quantum-memory cell.
//!
//! A cell is a half-wave tunable coupling resonator (TCR), cut in the middle by a
//! Josephson field-effect transistor (JJ-FET), that sits between a shunt tap on a
//! feedline and a quarter-wave storage cavity (SC). The crate covers
//!
//! * two-port (ABCD) algebra and notch transmission ([`twoport`]),
//! * the junction element and its gate map ([`jjfet`]),
//! * cell assembly, sweeps, resonance fitting, calibration and mode maps
//!   ([`cell`], [`resonance`], [`calibrate`], [`modemap`], [`offstate`]),
//! * two-mode write/read dynamics ([`dynamics`]),
//! * frequency-multiplexed arrays on a shared feedline ([`array`]).
//!
//! The crate is `no_std` + `alloc` when built without the default `std` feature.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod array;
pub mod calibrate;
pub mod cell;
pub mod constants;
pub mod dynamics;
mod error;
pub mod fit;
pub mod jjfet;
pub mod modemap;
pub mod offstate;
pub mod resonance;
pub mod roots;
pub mod twoport;

pub use error::{CalibrationStage, Error, Result};
pub use num_complex::Complex64;

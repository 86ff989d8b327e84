//! Spin–field dynamics of the Rabi and Jaynes–Cummings models seen through
//! the Floquet states of their semiclassical limit.
//!
//! Four engines compute the excited-state probability `P(+z)(t)`:
//!
//! * [`fullmodel`]: exact evolution in a truncated Fock space.
//! * [`fbrwa::p_excited_fbrwa`]: the Floquet-basis rotating-wave approximation.
//! * [`fbrwa::p_excited_closed_form`]: its closed forms for the resonant JCM.
//! * [`fbrwa::qcfd_integrate`]: the exact field equations in the Floquet basis.
//!
//! [`harness`] wires them to scenario files, figure presets and CSV/SVG output.

// `!(x > 0.0)` is the NaN-rejecting form; index loops walk parallel arrays.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod fbrwa;
pub mod floquet;
pub mod fockspace;
pub mod fullmodel;
pub mod harness;
pub mod ode;

pub use error::{Error, Result};

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chamber;
pub mod counts;
pub mod cp1_sim;
pub mod error;
pub mod exactnum;
pub mod rmt_mc;
pub mod selberg;
pub mod verify;

pub use error::{Error, Result};
pub use exactnum::{PiPower, Rational};

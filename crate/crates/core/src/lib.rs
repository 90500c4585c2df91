// `!(x > 0.0)` deliberately rejects NaN alongside out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod accountant;
pub mod cli;
pub mod dpconvert;
pub mod error;
pub mod noisechan;
pub mod qif;
pub mod rdp;
pub mod specfn;

pub use error::{Error, Result};

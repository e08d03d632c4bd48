pub mod cli;
pub mod error;
pub mod laurent;
pub mod lp;
pub mod par;
pub mod qcalc;
pub mod qms;
pub mod report;
pub mod sample;
pub mod schur;
pub mod verify;

pub use error::{Error, Result};

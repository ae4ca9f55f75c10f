//! Two-process quantum dynamics: unitary evolution punctuated by projective
//! reduction events.

pub mod attention;
pub mod dynamics;
pub mod error;
pub mod hardy;
pub mod harness;
pub mod qcore;
pub mod reduction;
pub mod zeno;

pub use error::{Error, Result};

// `!(x < tol)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channels;
pub mod circuit;
pub mod cli;
pub mod discrim;
pub mod ensembles;
pub mod error;
pub mod protocol;
pub mod qmat;
pub mod random;
pub mod twirl;

pub use error::{Error, Result};

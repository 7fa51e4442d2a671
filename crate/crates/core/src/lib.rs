pub mod error;
pub mod io;
pub mod measurement;
pub mod bases;
pub mod binning;
pub mod pmf;
pub mod rates;
pub mod region;
pub mod simplex;
pub mod state;
pub mod states;

pub use error::{Error, Result};

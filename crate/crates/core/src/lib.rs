pub mod cherenkov;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod langevin_sim;
pub mod medium;
pub mod noise;
pub mod numerics;
pub mod rates;
pub mod tensor;
pub mod units;

pub use error::{Error, Result};

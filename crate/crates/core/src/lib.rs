//! Volatility estimation, noise-stationarity testing and liquidity-risk
//! measurement for high-frequency prices contaminated by microstructure
//! noise, together with the simulator used to check them.

pub mod error;
pub mod estimators;
pub mod grids;
pub mod liquidity;
pub mod mc;
pub mod regress;
pub mod simulate;
pub mod stationarity;
pub mod sum;
pub mod ticks;

pub use error::{Error, Result};
pub use ticks::TickSeries;

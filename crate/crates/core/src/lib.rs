//! Capacity and energy market clearing, strategic bidding and the
//! supporting LP solver.

pub mod auction;
pub mod energy;
pub mod error;
pub mod io;
pub mod lp;
pub mod model;
pub mod strategic;

pub use auction::{clear_greedy, clear_mip, clear_qc, CapacityBid, ClearingResult};
pub use error::{Error, Result};
pub use model::{build_demand_curve, DemandCurve, Generator, Line, SystemNetwork, TimeSeries};

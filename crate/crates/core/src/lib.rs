//! Budget pacing for real-time-bidding campaigns.
//!
//! A campaign with budget `B` over `T` periods submits a bid each period,
//! observes what it spent, and rescales the bid so the remaining budget is
//! spread evenly over the remaining periods. The crate provides:
//!
//! - [`cost`]: latent cost functions mapping a bid to per-period spend,
//! - [`engine`]: the pacing update and campaign loop,
//! - [`analysis`]: closed-form fixed points, stability and convergence bounds,
//! - [`auction`]: a first-price auction simulator and bid-log replay,
//! - [`report`]: spend curves and pacing-quality metrics.

pub mod analysis;
pub mod auction;
pub mod cli;
pub mod cost;
pub mod engine;
pub mod report;

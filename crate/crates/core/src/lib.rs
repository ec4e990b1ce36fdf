//! Monte-Carlo simulator for weighted generalized second-price keyword
//! auctions ranked by `bid * ctr^alpha`, with an optional pollution model
//! that shifts the CTR distribution as alpha changes.

pub mod auction;
pub mod cli;
pub mod error;
pub mod experiment;
pub mod pollution;
pub mod sampling;

pub use auction::{
    equilibrium_bids, gsp_prices, page_efficiency, page_relevance, page_revenue, rank_bidders,
    revenue_from_values, run_single_auction, AuctionConfig, AuctionOutcome, PositionBias,
    RankedBidder,
};
pub use error::{Result, SimError};
pub use experiment::{
    alpha_grid, correlation_sweep, flat_region, normalize_series, run_sweep, sensitivity_sweep,
    Metric, SweepConfig, SweepResult, SweepRow,
};
pub use pollution::PollutionModel;
pub use sampling::{
    empirical_spearman, sample_bidders, spearman_to_pearson, AdvertiserDraw, BetaParams,
    CopulaConfig, LognormalParams, MomentSpace,
};

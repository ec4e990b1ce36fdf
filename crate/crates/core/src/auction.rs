//! Weighted generalized second-price auction over `K` slots.
//!
//! Bidders are ranked by `ctr^alpha * value`. Bids are the smallest
//! symmetric-equilibrium bids, and the winner of slot `i` pays
//! `bid[i+1] * w[i+1] / w[i]` per click. Slot indices in this module are
//! 0-based; slot `K` (one past the page) has zero position bias.
//!
//! In score space (`s = w * bid`) the equilibrium reduces to the unweighted
//! position auction on values `w * value`:
//!
//! ```text
//! s[i+1] * x[i] = sum_{j >= i} (x[j] - x[j+1]) * w[j+1] * value[j+1]
//! ```
//!
//! so slot `i` yields revenue `ctr[i] / w[i] * sum_{j >= i} (...)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, SimError};
use crate::sampling::{clamp_ctr, AdvertiserDraw};

/// Relative slack allowed when checking that scores are non-increasing.
const ORDER_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionBias {
    x: Vec<f64>,
}

impl PositionBias {
    pub const DEFAULT_DECAY: f64 = 0.7;

    /// Requires `1 >= x[0] >= x[1] >= ... >= x[K-1] > 0`.
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(SimError::InvalidBias("need at least one slot".into()));
        }
        for (i, &v) in x.iter().enumerate() {
            if !(v.is_finite() && v > 0.0 && v <= 1.0) {
                return Err(SimError::InvalidBias(format!(
                    "slot {} multiplier {v} must lie in (0, 1]",
                    i + 1
                )));
            }
            if i > 0 && v > x[i - 1] {
                return Err(SimError::InvalidBias(format!(
                    "slot {} multiplier {v} exceeds slot {} ({})",
                    i + 1,
                    i,
                    x[i - 1]
                )));
            }
        }
        Ok(Self { x })
    }

    /// `x[i] = decay^i` for `slots` slots.
    pub fn geometric(slots: usize, decay: f64) -> Result<Self> {
        if !(decay > 0.0 && decay <= 1.0) {
            return Err(invalid("bias_decay", decay, "must lie in (0, 1]"));
        }
        Self::new((0..slots).map(|i| decay.powi(i as i32)).collect())
    }

    pub fn slots(&self) -> usize {
        self.x.len()
    }

    /// Multiplier for 0-based slot `i`; zero past the last slot.
    #[inline]
    pub fn at(&self, i: usize) -> f64 {
        self.x.get(i).copied().unwrap_or(0.0)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuctionConfig {
    pub slots: usize,
    pub bidders: usize,
    pub alpha: f64,
}

impl AuctionConfig {
    pub fn new(slots: usize, bidders: usize, alpha: f64) -> Result<Self> {
        if slots == 0 || bidders <= slots {
            return Err(SimError::TooFewBidders { slots, bidders });
        }
        if !alpha.is_finite() {
            return Err(invalid("alpha", alpha, "must be finite"));
        }
        Ok(Self {
            slots,
            bidders,
            alpha,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedBidder {
    /// Position of this bidder in the input draw list.
    pub index: usize,
    pub value: f64,
    pub ctr: f64,
    pub weight: f64,
    pub equilibrium_bid: f64,
    /// Per-click GSP price; zero for the first excluded bidder.
    pub price: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuctionOutcome {
    /// `K` winners in slot order followed by the first excluded bidder.
    pub ranked: Vec<RankedBidder>,
    pub revenue: f64,
    pub efficiency: f64,
    pub relevance: f64,
}

impl AuctionOutcome {
    pub fn winners(&self) -> &[RankedBidder] {
        &self.ranked[..self.ranked.len() - 1]
    }

    /// Value kept by advertisers: `sum ctr * x * (value - price)`.
    pub fn advertiser_surplus(&self, bias: &PositionBias) -> f64 {
        self.winners()
            .iter()
            .enumerate()
            .map(|(i, b)| b.ctr * bias.at(i) * (b.value - b.price))
            .sum()
    }
}

/// `ctr^alpha`, evaluated as `exp(alpha * ln ctr)` on the clamped CTR.
#[inline]
pub fn weight(ctr: f64, alpha: f64) -> f64 {
    (alpha * clamp_ctr(ctr).ln()).exp()
}

fn scores(draws: &[AdvertiserDraw], alpha: f64) -> Result<Vec<f64>> {
    draws
        .iter()
        .enumerate()
        .map(|(index, d)| {
            let s = weight(d.ctr, alpha) * d.value;
            if s.is_finite() && !d.ctr.is_nan() {
                Ok(s)
            } else {
                Err(SimError::NonFiniteScore { index, alpha })
            }
        })
        .collect()
}

/// Allocation order: decreasing `ctr^alpha * value`, ties broken by higher
/// CTR and then by lower input index.
pub fn rank_bidders(draws: &[AdvertiserDraw], alpha: f64) -> Result<Vec<usize>> {
    if draws.is_empty() {
        return Err(SimError::TooFewSamples { needed: 1, got: 0 });
    }
    let s = scores(draws, alpha)?;
    let mut order: Vec<usize> = (0..draws.len()).collect();
    order.sort_by(|&i, &j| {
        s[j].total_cmp(&s[i])
            .then(draws[j].ctr.total_cmp(&draws[i].ctr))
            .then(i.cmp(&j))
    });
    Ok(order)
}

fn check_rank_order(scores: impl Iterator<Item = f64>) -> Result<()> {
    let mut prev = f64::INFINITY;
    for (slot, s) in scores.enumerate() {
        if s > prev * (1.0 + ORDER_SLACK) {
            return Err(SimError::NotRankOrdered { slot });
        }
        prev = s;
    }
    Ok(())
}

/// Smallest symmetric-equilibrium bids for the top `K + 1` bidders of an
/// allocation-ordered list. The top bid never enters a price and is set to
/// the top bidder's value.
pub fn equilibrium_bids(
    ranked: &[AdvertiserDraw],
    alpha: f64,
    bias: &PositionBias,
) -> Result<Vec<f64>> {
    let k = bias.slots();
    if ranked.len() <= k {
        return Err(SimError::TooFewBidders {
            slots: k,
            bidders: ranked.len(),
        });
    }
    let top = &ranked[..=k];
    let w: Vec<f64> = top.iter().map(|d| weight(d.ctr, alpha)).collect();
    check_rank_order(top.iter().zip(&w).map(|(d, w)| w * d.value))?;

    let mut bids = vec![0.0; k + 1];
    bids[0] = top[0].value;
    let mut tail = 0.0;
    for i in (0..k).rev() {
        tail += (bias.at(i) - bias.at(i + 1)) * w[i + 1] * top[i + 1].value;
        bids[i + 1] = tail / (bias.at(i) * w[i + 1]);
    }
    Ok(bids)
}

/// Per-click prices for the `K = bids.len() - 1` slots:
/// `price[i] = bid[i+1] * w[i+1] / w[i]`.
pub fn gsp_prices(bids: &[f64], ctrs: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if bids.len() != ctrs.len() {
        return Err(invalid("ctrs", ctrs.len() as f64, "length must match bids"));
    }
    if bids.len() < 2 {
        return Err(SimError::TooFewBidders {
            slots: bids.len(),
            bidders: bids.len(),
        });
    }
    let w: Vec<f64> = ctrs.iter().map(|&c| weight(c, alpha)).collect();
    check_rank_order(bids.iter().zip(&w).map(|(b, w)| b * w))?;
    Ok((0..bids.len() - 1)
        .map(|i| bids[i + 1] * w[i + 1] / w[i])
        .collect())
}

/// `sum ctr[i] * x[i] * price[i]` over the winners.
pub fn page_revenue(winners: &[RankedBidder], bias: &PositionBias) -> f64 {
    winners
        .iter()
        .enumerate()
        .map(|(i, b)| b.ctr * bias.at(i) * b.price)
        .sum()
}

/// Revenue straight from values, without going through bids:
/// `sum_i sum_{j >= i} ctr[i] (x[j] - x[j+1]) value[j+1] w[j+1] / w[i]`.
pub fn revenue_from_values(
    ranked: &[AdvertiserDraw],
    alpha: f64,
    bias: &PositionBias,
) -> Result<f64> {
    let k = bias.slots();
    if ranked.len() <= k {
        return Err(SimError::TooFewBidders {
            slots: k,
            bidders: ranked.len(),
        });
    }
    let w: Vec<f64> = ranked[..=k].iter().map(|d| weight(d.ctr, alpha)).collect();
    check_rank_order(ranked[..=k].iter().zip(&w).map(|(d, w)| w * d.value))?;
    let mut total = 0.0;
    for i in 0..k {
        let mut slot = 0.0;
        for j in i..k {
            slot += ranked[i].ctr
                * (bias.at(j) - bias.at(j + 1))
                * ranked[j + 1].value
                * w[j + 1]
                / w[i];
        }
        total += slot;
    }
    Ok(total)
}

/// `sum ctr[i] * x[i] * value[i]`.
pub fn page_efficiency(winners: &[RankedBidder], bias: &PositionBias) -> f64 {
    winners
        .iter()
        .enumerate()
        .map(|(i, b)| b.ctr * bias.at(i) * b.value)
        .sum()
}

/// Expected clicks on the page: `sum ctr[i] * x[i]`.
pub fn page_relevance(winners: &[RankedBidder], bias: &PositionBias) -> f64 {
    winners
        .iter()
        .enumerate()
        .map(|(i, b)| b.ctr * bias.at(i))
        .sum()
}

pub fn run_single_auction(
    draws: &[AdvertiserDraw],
    config: &AuctionConfig,
    bias: &PositionBias,
) -> Result<AuctionOutcome> {
    let k = config.slots;
    if bias.slots() != k {
        return Err(SimError::InvalidBias(format!(
            "bias has {} slots, auction has {k}",
            bias.slots()
        )));
    }
    if draws.len() <= k {
        return Err(SimError::TooFewBidders {
            slots: k,
            bidders: draws.len(),
        });
    }
    let alpha = config.alpha;
    let order = rank_bidders(draws, alpha)?;
    let top: Vec<AdvertiserDraw> = order[..=k].iter().map(|&i| draws[i]).collect();
    let bids = equilibrium_bids(&top, alpha, bias)?;
    let ctrs: Vec<f64> = top.iter().map(|d| d.ctr).collect();
    let prices = gsp_prices(&bids, &ctrs, alpha)?;

    let ranked: Vec<RankedBidder> = order[..=k]
        .iter()
        .zip(&top)
        .enumerate()
        .map(|(slot, (&index, d))| RankedBidder {
            index,
            value: d.value,
            ctr: d.ctr,
            weight: weight(d.ctr, alpha),
            equilibrium_bid: bids[slot],
            price: prices.get(slot).copied().unwrap_or(0.0),
        })
        .collect();
    let winners = &ranked[..k];
    let revenue = page_revenue(winners, bias);
    let efficiency = page_efficiency(winners, bias);
    let relevance = page_relevance(winners, bias);
    if !(revenue.is_finite() && efficiency.is_finite() && relevance.is_finite()) {
        return Err(SimError::NonFiniteScore {
            index: order[0],
            alpha,
        });
    }
    Ok(AuctionOutcome {
        ranked,
        revenue,
        efficiency,
        relevance,
    })
}

//! Monte-Carlo sweep over the ranking exponent.
//!
//! Auction `n` always draws its bidders from `substream(seed, n)`, at every
//! alpha of the grid. The same latent Gaussian pairs are therefore reused
//! across alpha points (common random numbers) and only the marginal maps
//! change when the pollution model moves the CTR distribution.
//!
//! Auctions are split into fixed-size chunks. Each chunk is summed
//! sequentially with compensated summation and chunk totals are reduced in
//! chunk order, so totals are bit-identical for any thread count.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::auction::{run_single_auction, AuctionConfig, AuctionOutcome, PositionBias};
use crate::error::{invalid, Result, SimError};
use crate::pollution::PollutionModel;
use crate::sampling::{
    draw_latent, substream, AdvertiserDraw, BetaParams, CopulaConfig, LatentPair, LognormalParams,
};

/// Auctions per work item. Part of the determinism contract: changing it
/// changes the floating-point reduction order.
pub const CHUNK_SIZE: u64 = 2048;

pub const DEFAULT_AUCTIONS_PER_ALPHA: u64 = 234_000;
pub const DEFAULT_SLOTS: usize = 12;
pub const DEFAULT_BIDDERS: usize = 13;
pub const DEFAULT_FLAT_TOLERANCE: f64 = 0.03;

/// Evenly spaced grid `lo, lo + step, ..., hi`, with points rounded to 1e-9
/// so that decimal steps land on their literal values.
pub fn alpha_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite()) || hi < lo {
        return Err(invalid("alphas", hi, "need finite lo <= hi"));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(invalid("alphas", step, "step must be positive"));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|i| ((lo + i as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Revenue,
    Efficiency,
    Relevance,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Revenue, Metric::Efficiency, Metric::Relevance];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Revenue => "revenue",
            Metric::Efficiency => "efficiency",
            Metric::Relevance => "relevance",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "revenue" => Ok(Metric::Revenue),
            "efficiency" => Ok(Metric::Efficiency),
            "relevance" => Ok(Metric::Relevance),
            other => Err(format!("unknown metric `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub alpha_grid: Vec<f64>,
    pub auctions_per_alpha: u64,
    pub slots: usize,
    pub bidders: usize,
    pub seed: u64,
    pub spearman_rho: f64,
    pub value_params: LognormalParams,
    /// Holds the CTR beta parameters (`base_a`, `anchor_b`) and the shift.
    pub pollution: PollutionModel,
    pub bias: PositionBias,
    pub flat_tolerance: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            alpha_grid: alpha_grid(-2.0, 2.0, 0.1).expect("static grid"),
            auctions_per_alpha: DEFAULT_AUCTIONS_PER_ALPHA,
            slots: DEFAULT_SLOTS,
            bidders: DEFAULT_BIDDERS,
            seed: 0,
            spearman_rho: CopulaConfig::DEFAULT_SPEARMAN,
            value_params: LognormalParams::default(),
            pollution: PollutionModel::default(),
            bias: PositionBias::geometric(DEFAULT_SLOTS, PositionBias::DEFAULT_DECAY)
                .expect("static bias"),
            flat_tolerance: DEFAULT_FLAT_TOLERANCE,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alpha_grid.is_empty() {
            return Err(invalid("alphas", 0.0, "grid is empty"));
        }
        for w in self.alpha_grid.windows(2) {
            if !(w[1] > w[0]) {
                return Err(invalid("alphas", w[1], "grid must be strictly increasing"));
            }
        }
        if let Some(&a) = self.alpha_grid.iter().find(|a| !a.is_finite()) {
            return Err(invalid("alphas", a, "must be finite"));
        }
        if self.auctions_per_alpha == 0 {
            return Err(invalid("auctions", 0.0, "need at least one auction"));
        }
        AuctionConfig::new(self.slots, self.bidders, 0.0)?;
        if self.bias.slots() != self.slots {
            return Err(SimError::InvalidBias(format!(
                "bias has {} slots, config has {}",
                self.bias.slots(),
                self.slots
            )));
        }
        CopulaConfig::new(self.spearman_rho)?;
        LognormalParams::new(self.value_params.mu, self.value_params.sigma)?;
        self.pollution.validate()?;
        self.pollution.validate_range(&self.alpha_grid)?;
        if !(self.flat_tolerance > 0.0 && self.flat_tolerance < 1.0) {
            return Err(invalid("flat_tolerance", self.flat_tolerance, "must lie in (0, 1)"));
        }
        Ok(())
    }

    pub fn total_auctions(&self) -> u64 {
        self.auctions_per_alpha * self.alpha_grid.len() as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub total_revenue: f64,
    pub total_efficiency: f64,
    pub total_relevance: f64,
    pub normalized_revenue: f64,
    pub normalized_efficiency: f64,
    pub normalized_relevance: f64,
    pub auctions: u64,
}

impl SweepRow {
    pub fn total(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Revenue => self.total_revenue,
            Metric::Efficiency => self.total_efficiency,
            Metric::Relevance => self.total_relevance,
        }
    }

    pub fn normalized(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Revenue => self.normalized_revenue,
            Metric::Efficiency => self.normalized_efficiency,
            Metric::Relevance => self.normalized_relevance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub config: SweepConfig,
    pub argmax_revenue_alpha: f64,
    pub revenue_flat_region: (f64, f64),
}

impl SweepResult {
    pub fn alphas(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.alpha).collect()
    }

    pub fn totals(&self, metric: Metric) -> Vec<f64> {
        self.rows.iter().map(|r| r.total(metric)).collect()
    }

    pub fn normalized(&self, metric: Metric) -> Vec<f64> {
        self.rows.iter().map(|r| r.normalized(metric)).collect()
    }

    /// Row whose alpha is within 1e-9 of `alpha`.
    pub fn row_at(&self, alpha: f64) -> Option<&SweepRow> {
        self.rows.iter().find(|r| (r.alpha - alpha).abs() < 1e-9)
    }

    pub fn argmax(&self, metric: Metric) -> f64 {
        self.rows[argmax(&self.totals(metric))].alpha
    }
}

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Index of the first maximum.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Divides every entry by the series maximum.
pub fn normalize_series(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() || values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(SimError::DegenerateSeries);
    }
    let max = values.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return Err(SimError::DegenerateSeries);
    }
    Ok(values.iter().map(|v| v / max).collect())
}

/// Widest contiguous run of grid points around the argmax on which the
/// metric stays at or above `(1 - tolerance) * max`.
pub fn flat_region(rows: &[SweepRow], metric: Metric, tolerance: f64) -> Result<(f64, f64)> {
    if rows.is_empty() {
        return Err(SimError::DegenerateSeries);
    }
    if !(tolerance > 0.0 && tolerance < 1.0) {
        return Err(invalid("tolerance", tolerance, "must lie in (0, 1)"));
    }
    let values: Vec<f64> = rows.iter().map(|r| r.total(metric)).collect();
    let peak = argmax(&values);
    let floor = (1.0 - tolerance) * values[peak];
    let (mut lo, mut hi) = (peak, peak);
    while lo > 0 && values[lo - 1] >= floor {
        lo -= 1;
    }
    while hi + 1 < values.len() && values[hi + 1] >= floor {
        hi += 1;
    }
    Ok((rows[lo].alpha, rows[hi].alpha))
}

struct Prepared {
    copula: CopulaConfig,
    ctr_params: Vec<BetaParams>,
    auction_configs: Vec<AuctionConfig>,
}

fn prepare(config: &SweepConfig) -> Result<Prepared> {
    config.validate()?;
    let mut ctr_params = Vec::with_capacity(config.alpha_grid.len());
    let mut auction_configs = Vec::with_capacity(config.alpha_grid.len());
    for &alpha in &config.alpha_grid {
        let wrap = |source| SimError::Sweep {
            alpha,
            source: Box::new(source),
        };
        ctr_params.push(config.pollution.ctr_params_for_alpha(alpha).map_err(wrap)?);
        auction_configs.push(AuctionConfig::new(config.slots, config.bidders, alpha).map_err(wrap)?);
    }
    Ok(Prepared {
        copula: CopulaConfig::new(config.spearman_rho)?,
        ctr_params,
        auction_configs,
    })
}

fn draws_into(
    latent: &[LatentPair],
    value: &LognormalParams,
    ctr: &BetaParams,
    out: &mut Vec<AdvertiserDraw>,
) {
    out.clear();
    out.extend(latent.iter().map(|p| p.to_draw(value, ctr)));
}

type ChunkTotals = Vec<[CompensatedSum; 3]>;

fn run_chunk(config: &SweepConfig, prep: &Prepared, chunk: u64) -> Result<ChunkTotals> {
    let start = chunk * CHUNK_SIZE;
    let end = (start + CHUNK_SIZE).min(config.auctions_per_alpha);
    let mut totals: ChunkTotals = vec![[CompensatedSum::default(); 3]; config.alpha_grid.len()];
    let mut draws = Vec::with_capacity(config.bidders);
    for auction in start..end {
        let latent = draw_latent(config.bidders, &prep.copula, &mut substream(config.seed, auction));
        for (t, acc) in totals.iter_mut().enumerate() {
            if t == 0 || prep.ctr_params[t] != prep.ctr_params[t - 1] {
                draws_into(&latent, &config.value_params, &prep.ctr_params[t], &mut draws);
            }
            let out = run_single_auction(&draws, &prep.auction_configs[t], &config.bias).map_err(
                |source| SimError::Sweep {
                    alpha: config.alpha_grid[t],
                    source: Box::new(source),
                },
            )?;
            acc[0].add(out.revenue);
            acc[1].add(out.efficiency);
            acc[2].add(out.relevance);
        }
    }
    Ok(totals)
}

pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    let prep = prepare(config)?;
    let chunks = config.auctions_per_alpha.div_ceil(CHUNK_SIZE);
    let per_chunk: Vec<Result<ChunkTotals>> = (0..chunks)
        .into_par_iter()
        .map(|c| run_chunk(config, &prep, c))
        .collect();

    let mut totals = vec![[CompensatedSum::default(); 3]; config.alpha_grid.len()];
    for chunk in per_chunk {
        for (acc, part) in totals.iter_mut().zip(chunk?) {
            for m in 0..3 {
                acc[m].add(part[m].value());
            }
        }
    }
    let series: Vec<Vec<f64>> = (0..3)
        .map(|m| totals.iter().map(|t| t[m].value()).collect())
        .collect();
    let norm: Vec<Vec<f64>> = series
        .iter()
        .map(|s| normalize_series(s))
        .collect::<Result<_>>()?;

    let rows: Vec<SweepRow> = config
        .alpha_grid
        .iter()
        .enumerate()
        .map(|(t, &alpha)| SweepRow {
            alpha,
            total_revenue: series[0][t],
            total_efficiency: series[1][t],
            total_relevance: series[2][t],
            normalized_revenue: norm[0][t],
            normalized_efficiency: norm[1][t],
            normalized_relevance: norm[2][t],
            auctions: config.auctions_per_alpha,
        })
        .collect();
    let argmax_revenue_alpha = rows[argmax(&series[0])].alpha;
    let revenue_flat_region = flat_region(&rows, Metric::Revenue, config.flat_tolerance)?;
    Ok(SweepResult {
        rows,
        config: config.clone(),
        argmax_revenue_alpha,
        revenue_flat_region,
    })
}

/// Recomputes auction `auction` at grid point `alpha_index` exactly as
/// [`run_sweep`] does.
pub fn replay_auction(config: &SweepConfig, alpha_index: usize, auction: u64) -> Result<AuctionOutcome> {
    let prep = prepare(config)?;
    let cfg = prep
        .auction_configs
        .get(alpha_index)
        .ok_or(invalid("alpha_index", alpha_index as f64, "outside the grid"))?;
    let latent = draw_latent(config.bidders, &prep.copula, &mut substream(config.seed, auction));
    let mut draws = Vec::new();
    draws_into(&latent, &config.value_params, &prep.ctr_params[alpha_index], &mut draws);
    run_single_auction(&draws, cfg, &config.bias)
}

/// One pollution-enabled sweep per strength, all under the same seed.
pub fn sensitivity_sweep(config: &SweepConfig, strengths: &[f64]) -> Result<Vec<(f64, SweepResult)>> {
    strengths
        .iter()
        .map(|&s| {
            let mut cfg = config.clone();
            cfg.pollution = PollutionModel {
                enabled: true,
                ..cfg.pollution
            }
            .with_strength(s)?;
            Ok((s, run_sweep(&cfg)?))
        })
        .collect()
}

/// One sweep per Spearman target, all under the same seed.
pub fn correlation_sweep(config: &SweepConfig, rhos: &[f64]) -> Result<Vec<(f64, SweepResult)>> {
    rhos.iter()
        .map(|&rho| {
            if !(rho.abs() < 1.0) {
                return Err(invalid("spearman_rho", rho, "must lie in (-1, 1)"));
            }
            let cfg = SweepConfig {
                spearman_rho: rho,
                ..config.clone()
            };
            Ok((rho, run_sweep(&cfg)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(auctions: u64) -> SweepConfig {
        SweepConfig {
            alpha_grid: alpha_grid(-1.0, 1.0, 0.5).unwrap(),
            auctions_per_alpha: auctions,
            slots: 3,
            bidders: 4,
            bias: PositionBias::geometric(3, 0.7).unwrap(),
            ..SweepConfig::default()
        }
    }

    fn row(alpha: f64, revenue: f64) -> SweepRow {
        SweepRow {
            alpha,
            total_revenue: revenue,
            total_efficiency: 1.0,
            total_relevance: 1.0,
            normalized_revenue: 0.0,
            normalized_efficiency: 1.0,
            normalized_relevance: 1.0,
            auctions: 1,
        }
    }

    #[test]
    fn grid_hits_decimal_points() {
        let g = alpha_grid(-2.0, 2.0, 0.1).unwrap();
        assert_eq!(g.len(), 41);
        assert_eq!(g[0], -2.0);
        assert_eq!(g[3], -1.7);
        assert_eq!(g[20], 0.0);
        assert_eq!(g[23], 0.3);
        assert_eq!(g[40], 2.0);
        assert_eq!(alpha_grid(0.5, 0.5, 0.1).unwrap(), vec![0.5]);
        assert!(alpha_grid(1.0, 0.0, 0.1).is_err());
        assert!(alpha_grid(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_series(&[2.0, 4.0]).unwrap(), vec![0.5, 1.0]);
        assert_eq!(normalize_series(&[3.0; 3]).unwrap(), vec![1.0; 3]);
        let peaked = [0.2, 0.7, 1.3, 0.9, 0.1];
        let n = normalize_series(&peaked).unwrap();
        assert_eq!(n[2], 1.0);
        assert_eq!(argmax(&n), 2);
        assert_eq!(normalize_series(&[0.0, 0.0]), Err(SimError::DegenerateSeries));
        assert_eq!(normalize_series(&[]), Err(SimError::DegenerateSeries));
        assert_eq!(normalize_series(&[-1.0, 2.0]), Err(SimError::DegenerateSeries));
    }

    #[test]
    fn flat_region_examples() {
        let unimodal: Vec<SweepRow> = [1.0, 2.0, 5.0, 2.0, 1.0]
            .iter()
            .enumerate()
            .map(|(i, &v)| row(i as f64, v))
            .collect();
        assert_eq!(flat_region(&unimodal, Metric::Revenue, 0.03).unwrap(), (2.0, 2.0));
        assert_eq!(flat_region(&unimodal, Metric::Revenue, 0.7).unwrap(), (1.0, 3.0));
        let flat: Vec<SweepRow> = (0..4).map(|i| row(i as f64, 2.0)).collect();
        assert_eq!(flat_region(&flat, Metric::Revenue, 0.03).unwrap(), (0.0, 3.0));
        // a dip splits the region; only the side holding the peak counts
        let dip: Vec<SweepRow> = [0.9, 0.5, 0.99, 1.0]
            .iter()
            .enumerate()
            .map(|(i, &v)| row(i as f64, v))
            .collect();
        assert_eq!(flat_region(&dip, Metric::Revenue, 0.03).unwrap(), (2.0, 3.0));
        assert!(flat_region(&flat, Metric::Revenue, 1.0).is_err());
    }

    #[test]
    fn singleton_sweep_normalizes_to_one() {
        let cfg = SweepConfig {
            alpha_grid: vec![0.5],
            auctions_per_alpha: 1,
            ..SweepConfig::default()
        };
        let res = run_sweep(&cfg).unwrap();
        assert_eq!(res.rows.len(), 1);
        let r = &res.rows[0];
        assert_eq!(
            (r.normalized_revenue, r.normalized_efficiency, r.normalized_relevance),
            (1.0, 1.0, 1.0)
        );
        assert_eq!(res.argmax_revenue_alpha, 0.5);
        assert_eq!(res.revenue_flat_region, (0.5, 0.5));
    }

    #[test]
    fn totals_equal_sum_of_replayed_auctions() {
        let cfg = small(CHUNK_SIZE + 37);
        let res = run_sweep(&cfg).unwrap();
        for (t, row) in res.rows.iter().enumerate() {
            let mut sums = [0.0; 3];
            for n in 0..cfg.auctions_per_alpha {
                let out = replay_auction(&cfg, t, n).unwrap();
                sums[0] += out.revenue;
                sums[1] += out.efficiency;
                sums[2] += out.relevance;
            }
            for (m, metric) in Metric::ALL.iter().enumerate() {
                let total = row.total(*metric);
                assert!((total - sums[m]).abs() <= 1e-9 * total, "{metric} at {}", row.alpha);
            }
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = small(10);
        cfg.alpha_grid = vec![0.0, 0.0];
        assert!(run_sweep(&cfg).is_err());
        let mut cfg = small(10);
        cfg.alpha_grid.clear();
        assert!(run_sweep(&cfg).is_err());
        let mut cfg = small(0);
        assert!(run_sweep(&cfg).is_err());
        cfg = small(10);
        cfg.bidders = 3;
        assert!(matches!(run_sweep(&cfg), Err(SimError::TooFewBidders { .. })));
        cfg = small(10);
        cfg.bias = PositionBias::geometric(4, 0.7).unwrap();
        assert!(run_sweep(&cfg).is_err());
        cfg = small(10);
        cfg.pollution = PollutionModel::enabled(BetaParams::default(), 1.0).unwrap();
        cfg.alpha_grid = vec![0.0, 5.0];
        assert!(run_sweep(&cfg).is_err());
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let mut acc = CompensatedSum::default();
        let mut naive = 0.0;
        for x in std::iter::once(1.0).chain(std::iter::repeat_n(1e-16, 100)) {
            acc.add(x);
            naive += x;
        }
        assert_eq!(naive, 1.0);
        assert!((acc.value() - (1.0 + 1e-14)).abs() < 1e-16);
    }

    #[test]
    fn strength_zero_equals_pollution_off() {
        let cfg = small(300);
        let off = run_sweep(&cfg).unwrap();
        let zero = sensitivity_sweep(&cfg, &[0.0]).unwrap().remove(0).1;
        assert_eq!(off.rows, zero.rows);
    }

    #[test]
    fn correlation_sweep_rejects_unit_rho() {
        assert!(correlation_sweep(&small(5), &[1.0]).is_err());
        let res = correlation_sweep(&small(50), &[0.4]).unwrap();
        assert_eq!(res[0].1.rows, run_sweep(&small(50)).unwrap().rows);
    }

    #[test]
    fn metric_names_parse() {
        for m in Metric::ALL {
            assert_eq!(m.name().parse::<Metric>().unwrap(), m);
        }
        assert!("clicks".parse::<Metric>().is_err());
    }
}

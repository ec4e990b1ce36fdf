//! Correlated (value, CTR) draws for the bidders of one auction.
//!
//! Values follow a lognormal marginal and CTRs a beta marginal. The two are
//! joined by a Gaussian copula: a correlated standard-normal pair is drawn,
//! the value coordinate is pushed through `exp(mu + sigma * z)` and the CTR
//! coordinate through the beta quantile of `Phi(z)`. Both maps are strictly
//! increasing, so rank correlation is inherited from the Gaussian pair.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::{beta as beta_fn, erf};

use crate::error::{invalid, Result, SimError};

/// Sampled CTRs are clamped into `[CTR_FLOOR, 1 - CTR_FLOOR]` so that
/// `ctr^alpha` stays finite for negative exponents.
pub const CTR_FLOOR: f64 = 1e-12;

/// Random stream handed to each auction.
pub type Substream = ChaCha8Rng;

/// Independent stream for auction `index` under `master_seed`. The stream
/// depends only on the pair, never on the order auctions are executed in.
pub fn substream(master_seed: u64, index: u64) -> Substream {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

pub fn clamp_ctr(ctr: f64) -> f64 {
    ctr.clamp(CTR_FLOOR, 1.0 - CTR_FLOOR)
}

/// Which space reported lognormal moments live in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MomentSpace {
    /// Mean and standard deviation of the underlying normal.
    #[default]
    Log,
    /// Mean and standard deviation of the lognormal variable itself.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LognormalParams {
    pub mu: f64,
    pub sigma: f64,
}

impl LognormalParams {
    pub const DEFAULT_MEAN: f64 = 0.35;
    pub const DEFAULT_STDDEV: f64 = 0.71;

    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(invalid("value_mu", mu, "must be finite"));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(invalid("value_sigma", sigma, "must be positive"));
        }
        Ok(Self { mu, sigma })
    }

    /// Builds the parameters from a reported (mean, stddev) pair, interpreting
    /// the pair in the given space.
    pub fn from_reported(mean: f64, stddev: f64, space: MomentSpace) -> Result<Self> {
        match space {
            MomentSpace::Log => Self::new(mean, stddev),
            MomentSpace::Linear => {
                if !(mean.is_finite() && mean > 0.0) {
                    return Err(invalid("value_mu", mean, "linear-space mean must be positive"));
                }
                if !(stddev.is_finite() && stddev > 0.0) {
                    return Err(invalid("value_sigma", stddev, "must be positive"));
                }
                let sigma2 = (1.0 + (stddev / mean).powi(2)).ln();
                Self::new(mean.ln() - 0.5 * sigma2, sigma2.sqrt())
            }
        }
    }

    pub fn mean(&self) -> f64 {
        (self.mu + 0.5 * self.sigma * self.sigma).exp()
    }

    pub fn variance(&self) -> f64 {
        let s2 = self.sigma * self.sigma;
        (s2.exp() - 1.0) * (2.0 * self.mu + s2).exp()
    }

    /// Value whose underlying normal sits at standard score `z`.
    #[inline]
    pub fn from_standard_normal(&self, z: f64) -> f64 {
        (self.mu + self.sigma * z).exp()
    }
}

impl Default for LognormalParams {
    fn default() -> Self {
        Self {
            mu: Self::DEFAULT_MEAN,
            sigma: Self::DEFAULT_STDDEV,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    pub a: f64,
    pub b: f64,
}

impl BetaParams {
    pub const DEFAULT_A: f64 = 2.71;
    pub const DEFAULT_B: f64 = 25.43;

    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(invalid("ctr_a", a, "beta shape must be positive"));
        }
        if !(b.is_finite() && b > 0.0) {
            return Err(invalid("ctr_b", b, "beta shape must be positive"));
        }
        Ok(Self { a, b })
    }

    pub fn mean(&self) -> f64 {
        self.a / (self.a + self.b)
    }

    pub fn variance(&self) -> f64 {
        let s = self.a + self.b;
        self.a * self.b / (s * s * (s + 1.0))
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x >= 1.0 {
            1.0
        } else {
            beta_fn::beta_reg(self.a, self.b, x)
        }
    }

    /// Quantile function, solved numerically against the regularized
    /// incomplete beta function.
    pub fn inverse_cdf(&self, p: f64) -> f64 {
        beta_fn::inv_beta_reg(self.a, self.b, p.clamp(0.0, 1.0))
    }
}

impl Default for BetaParams {
    fn default() -> Self {
        Self {
            a: Self::DEFAULT_A,
            b: Self::DEFAULT_B,
        }
    }
}

/// Standard normal CDF.
#[inline]
pub fn standard_normal_cdf(z: f64) -> f64 {
    0.5 * erf::erfc(-z * FRAC_1_SQRT_2)
}

/// Gaussian-copula correlation that produces the given Spearman rank
/// correlation: `2 sin(pi * rho_s / 6)`.
pub fn spearman_to_pearson(spearman_rho: f64) -> Result<f64> {
    if !(spearman_rho.abs() <= 1.0) {
        return Err(invalid("spearman_rho", spearman_rho, "must lie in [-1, 1]"));
    }
    Ok(2.0 * (PI * spearman_rho / 6.0).sin())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CopulaConfig {
    spearman_rho: f64,
    pearson_rho: f64,
}

impl CopulaConfig {
    pub const DEFAULT_SPEARMAN: f64 = 0.4;

    pub fn new(spearman_rho: f64) -> Result<Self> {
        Ok(Self {
            spearman_rho,
            pearson_rho: spearman_to_pearson(spearman_rho)?,
        })
    }

    pub fn spearman_rho(&self) -> f64 {
        self.spearman_rho
    }

    pub fn pearson_rho(&self) -> f64 {
        self.pearson_rho
    }
}

impl Default for CopulaConfig {
    fn default() -> Self {
        Self::new(Self::DEFAULT_SPEARMAN).expect("default spearman is in range")
    }
}

/// One bidder: value per click in dollars and intrinsic clickthrough rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdvertiserDraw {
    pub value: f64,
    pub ctr: f64,
}

impl AdvertiserDraw {
    pub fn new(value: f64, ctr: f64) -> Result<Self> {
        if !(value.is_finite() && value > 0.0) {
            return Err(invalid("value", value, "must be positive and finite"));
        }
        if !(ctr > 0.0 && ctr < 1.0) {
            return Err(invalid("ctr", ctr, "must lie in (0, 1)"));
        }
        Ok(Self { value, ctr })
    }
}

/// The correlated standard-normal pair behind one draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatentPair {
    pub value_z: f64,
    pub ctr_z: f64,
}

impl LatentPair {
    #[inline]
    pub fn to_draw(self, value: &LognormalParams, ctr: &BetaParams) -> AdvertiserDraw {
        AdvertiserDraw {
            value: value.from_standard_normal(self.value_z),
            ctr: clamp_ctr(ctr.inverse_cdf(standard_normal_cdf(self.ctr_z))),
        }
    }
}

pub fn draw_latent<R: Rng + ?Sized>(n: usize, copula: &CopulaConfig, rng: &mut R) -> Vec<LatentPair> {
    let rho = copula.pearson_rho;
    let tail = (1.0 - rho * rho).max(0.0).sqrt();
    (0..n)
        .map(|_| {
            let z1: f64 = rng.sample(StandardNormal);
            let z2: f64 = rng.sample(StandardNormal);
            LatentPair {
                value_z: z1,
                ctr_z: rho * z1 + tail * z2,
            }
        })
        .collect()
}

pub fn sample_bidders<R: Rng + ?Sized>(
    n: usize,
    value_params: &LognormalParams,
    ctr_params: &BetaParams,
    copula: &CopulaConfig,
    rng: &mut R,
) -> Result<Vec<AdvertiserDraw>> {
    if n == 0 {
        return Err(SimError::TooFewSamples { needed: 1, got: 0 });
    }
    Ok(draw_latent(n, copula, rng)
        .into_iter()
        .map(|p| p.to_draw(value_params, ctr_params))
        .collect())
}

/// Average ranks (1-based); tied entries share the mean of their positions.
fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]));
    let mut ranks = vec![0.0; xs.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && xs[order[end]] == xs[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation (Pearson correlation of average ranks).
pub fn empirical_spearman(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.len() < 2 {
        return Err(SimError::TooFewSamples {
            needed: 2,
            got: pairs.len(),
        });
    }
    if let Some(&(x, y)) = pairs.iter().find(|(x, y)| x.is_nan() || y.is_nan()) {
        let bad = if x.is_nan() { x } else { y };
        return Err(invalid("pairs", bad, "NaN in input"));
    }
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let rx = average_ranks(&xs);
    let ry = average_ranks(&ys);
    let mean = (pairs.len() as f64 + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (dx, dy) = (a - mean, b - mean);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(SimError::DegenerateSeries);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spearman_to_pearson_fixed_points() {
        assert_eq!(spearman_to_pearson(0.0).unwrap(), 0.0);
        assert!((spearman_to_pearson(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((spearman_to_pearson(-1.0).unwrap() + 1.0).abs() < 1e-15);
        assert!((spearman_to_pearson(0.4).unwrap() - 0.41582).abs() < 1e-5);
        assert!(spearman_to_pearson(1.01).is_err());
        assert!(spearman_to_pearson(f64::NAN).is_err());
    }

    #[test]
    fn spearman_small_cases() {
        let r = |p: &[(f64, f64)]| empirical_spearman(p).unwrap();
        assert!((r(&[(1., 1.), (2., 2.), (3., 3.)]) - 1.0).abs() < 1e-15);
        assert!((r(&[(1., 3.), (2., 2.), (3., 1.)]) + 1.0).abs() < 1e-15);
        assert!((r(&[(1., 2.), (2., 1.), (3., 3.)]) - 0.5).abs() < 1e-15);
        assert!(matches!(
            empirical_spearman(&[(1., 1.)]),
            Err(SimError::TooFewSamples { .. })
        ));
        assert!(empirical_spearman(&[(1., f64::NAN), (2., 1.)]).is_err());
    }

    #[test]
    fn spearman_handles_ties() {
        // x ranks (1.5, 1.5, 3), y ranks (1, 2, 3)
        let rho = empirical_spearman(&[(1., 1.), (1., 2.), (2., 3.)]).unwrap();
        let expected = 1.5 / (1.5f64 * 2.0).sqrt();
        assert!((rho - expected).abs() < 1e-12);
    }

    #[test]
    fn sample_bidders_respects_invariants() {
        let mut rng = substream(7, 0);
        let draws = sample_bidders(
            13,
            &LognormalParams::default(),
            &BetaParams::default(),
            &CopulaConfig::default(),
            &mut rng,
        )
        .unwrap();
        assert_eq!(draws.len(), 13);
        for d in &draws {
            assert!(AdvertiserDraw::new(d.value, d.ctr).is_ok(), "{d:?}");
        }
    }

    #[test]
    fn substreams_are_deterministic_and_distinct() {
        let cop = CopulaConfig::default();
        let a = draw_latent(5, &cop, &mut substream(1, 3));
        let b = draw_latent(5, &cop, &mut substream(1, 3));
        let c = draw_latent(5, &cop, &mut substream(1, 4));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn beta_quantile_inverts_cdf() {
        let beta = BetaParams::default();
        for &p in &[1e-9, 1e-4, 0.01, 0.2, 0.5, 0.8, 0.99, 0.999999] {
            let x = beta.inverse_cdf(p);
            assert!((beta.cdf(x) - p).abs() < 1e-9, "p = {p}");
        }
        for b in [18.43, 46.43] {
            let beta = BetaParams::new(2.71, b).unwrap();
            for &p in &[1e-6, 0.3, 0.97] {
                assert!((beta.cdf(beta.inverse_cdf(p)) - p).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn linear_space_moments_round_trip() {
        let p = LognormalParams::from_reported(0.35, 0.71, MomentSpace::Linear).unwrap();
        assert!((p.mean() - 0.35).abs() < 1e-12);
        assert!((p.variance().sqrt() - 0.71).abs() < 1e-12);
        let q = LognormalParams::from_reported(0.35, 0.71, MomentSpace::Log).unwrap();
        assert_eq!(q, LognormalParams::default());
    }

    #[test]
    fn parameter_validation() {
        assert!(LognormalParams::new(0.0, 0.0).is_err());
        assert!(BetaParams::new(0.0, 1.0).is_err());
        assert!(BetaParams::new(1.0, -1.0).is_err());
        assert!(AdvertiserDraw::new(1.0, 1.0).is_err());
        assert!(AdvertiserDraw::new(0.0, 0.5).is_err());
        assert!(CopulaConfig::new(-1.5).is_err());
        assert!(matches!(
            sample_bidders(0, &Default::default(), &Default::default(), &Default::default(), &mut substream(0, 0)),
            Err(SimError::TooFewSamples { .. })
        ));
    }

    #[test]
    fn clamp_keeps_weights_finite() {
        assert_eq!(clamp_ctr(0.0), CTR_FLOOR);
        assert!(clamp_ctr(0.0).powf(-2.0).is_finite());
        assert!(clamp_ctr(1.0) < 1.0);
    }
}

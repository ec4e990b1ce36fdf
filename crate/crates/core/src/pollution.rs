//! CTR-distribution shift coupled to the ranking exponent.
//!
//! The beta `b` shape moves linearly with alpha around an anchor at
//! `alpha = 1`: `b(alpha) = anchor_b - slope * strength * (alpha - 1)`.
//! With the default slope of 7 the line passes through 46.43 at
//! `alpha = -2` and 18.43 at `alpha = 2`. Lower alpha means a larger `b`,
//! i.e. a CTR distribution shifted toward zero.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::sampling::BetaParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PollutionModel {
    pub base_a: f64,
    pub anchor_b: f64,
    pub slope: f64,
    pub strength: f64,
    pub enabled: bool,
}

impl PollutionModel {
    pub const DEFAULT_SLOPE: f64 = 7.0;
    pub const ANCHOR_ALPHA: f64 = 1.0;

    /// A model that leaves the CTR distribution at `ctr` for every alpha.
    pub fn disabled(ctr: BetaParams) -> Self {
        Self {
            base_a: ctr.a,
            anchor_b: ctr.b,
            slope: Self::DEFAULT_SLOPE,
            strength: 1.0,
            enabled: false,
        }
    }

    pub fn enabled(ctr: BetaParams, strength: f64) -> Result<Self> {
        let model = Self {
            strength,
            enabled: true,
            ..Self::disabled(ctr)
        };
        model.validate()?;
        Ok(model)
    }

    pub fn with_strength(mut self, strength: f64) -> Result<Self> {
        self.strength = strength;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        BetaParams::new(self.base_a, self.anchor_b)?;
        if !self.slope.is_finite() {
            return Err(invalid("slope", self.slope, "must be finite"));
        }
        if !(self.strength.is_finite() && self.strength >= 0.0) {
            return Err(invalid("strength", self.strength, "must be non-negative"));
        }
        Ok(())
    }

    /// Effective change in `b` per unit alpha.
    pub fn effective_slope(&self) -> f64 {
        self.slope * self.strength
    }

    pub fn b_for_alpha(&self, alpha: f64) -> f64 {
        if self.enabled {
            self.anchor_b - self.effective_slope() * (alpha - Self::ANCHOR_ALPHA)
        } else {
            self.anchor_b
        }
    }

    /// Checks that `b(alpha)` stays positive at every point of a grid.
    pub fn validate_range(&self, alphas: &[f64]) -> Result<()> {
        for &alpha in alphas {
            self.ctr_params_for_alpha(alpha)?;
        }
        Ok(())
    }

    pub fn ctr_params_for_alpha(&self, alpha: f64) -> Result<BetaParams> {
        let b = self.b_for_alpha(alpha);
        if !(b > 0.0) {
            return Err(invalid(
                "ctr_b",
                b,
                "pollution shift drives the beta shape non-positive at this alpha",
            ));
        }
        BetaParams::new(self.base_a, b)
    }

    pub fn mean_ctr_for_alpha(&self, alpha: f64) -> Result<f64> {
        Ok(self.ctr_params_for_alpha(alpha)?.mean())
    }
}

impl Default for PollutionModel {
    fn default() -> Self {
        Self::disabled(BetaParams::default())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn on(strength: f64) -> PollutionModel {
        PollutionModel::enabled(BetaParams::default(), strength).unwrap()
    }

    #[test]
    fn anchors_at_unit_strength() {
        let m = on(1.0);
        assert_eq!(m.b_for_alpha(1.0), 25.43);
        assert_eq!(m.b_for_alpha(-2.0), 46.43);
        assert_eq!(m.b_for_alpha(2.0), 18.43);
        assert!((m.b_for_alpha(0.0) - 32.43).abs() < 1e-12);
    }

    #[test]
    fn mean_ctr_examples() {
        let m = on(1.0);
        assert!((m.mean_ctr_for_alpha(1.0).unwrap() - 0.09630).abs() < 1e-5);
        // 2.71 / 21.14 and 2.71 / 49.14
        assert!((m.mean_ctr_for_alpha(2.0).unwrap() - 0.128193).abs() < 1e-6);
        assert!((m.mean_ctr_for_alpha(-2.0).unwrap() - 0.055149).abs() < 1e-6);
        let flat = on(0.0);
        for alpha in [-2.0, -0.3, 1.0, 1.7] {
            assert!((flat.mean_ctr_for_alpha(alpha).unwrap() - 0.09630).abs() < 1e-5);
        }
    }

    #[test]
    fn disabled_model_ignores_alpha() {
        let m = PollutionModel::default();
        for alpha in [-2.0, 0.0, 2.0, 50.0] {
            assert_eq!(m.ctr_params_for_alpha(alpha).unwrap(), BetaParams::default());
        }
    }

    #[test]
    fn anchor_is_strength_invariant() {
        for s in [0.0, 0.5, 0.8, 1.2, 3.0] {
            assert_eq!(on(s).b_for_alpha(1.0), 25.43);
        }
        assert!((on(1.2).effective_slope() - 8.4).abs() < 1e-12);
    }

    #[test]
    fn rejects_invalid_ranges() {
        assert!(PollutionModel::enabled(BetaParams::default(), -0.1).is_err());
        // b hits zero just above alpha = 1 + 25.43 / 7
        assert!(on(1.0).ctr_params_for_alpha(4.7).is_err());
        assert!(on(1.0).validate_range(&[-2.0, 2.0]).is_ok());
        assert!(on(1.0).validate_range(&[5.0]).is_err());
    }

    #[test]
    fn mean_increases_with_alpha() {
        let m = on(0.8);
        let means: Vec<f64> = (-20..=20)
            .map(|i| m.mean_ctr_for_alpha(i as f64 / 10.0).unwrap())
            .collect();
        assert!(means.windows(2).all(|w| w[1] > w[0]));
    }
}

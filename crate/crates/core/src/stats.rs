// Copyright 2026 QISD Contributors
// SPDX-License-Identifier: Apache-2.0

//! Weighted Monte Carlo estimators with standard errors.
//!
//! Weights may be signed (Wigner ensembles) and are expected to sum to one.
//! An estimate `Σ wᵢ uᵢ` carries the standard error `sqrt(Σ wᵢ² (uᵢ − est)²)`,
//! which reduces to `sqrt(var/n)` for uniform weights.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    /// `|self − target|` in units of the standard error.
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = (self.value - target).abs();
        if self.stderr > 0.0 {
            diff / self.stderr
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    /// True when `self` and `other` differ by at most `k` combined standard errors.
    pub fn agrees_with(&self, other: &Estimate, k: f64) -> bool {
        let se = self.stderr.hypot(other.stderr);
        (self.value - other.value).abs() <= k * se
    }
}

pub fn weighted_estimate(values: &[f64], weights: &[f64]) -> Estimate {
    assert_eq!(values.len(), weights.len());
    let value: f64 = values.iter().zip(weights).map(|(u, w)| u * w).sum();
    let var: f64 = values
        .iter()
        .zip(weights)
        .map(|(u, w)| w * w * (u - value) * (u - value))
        .sum();
    Estimate {
        value,
        stderr: var.sqrt(),
    }
}

pub fn uniform_weights(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

/// First and second phase-space moments of a (weighted) sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseMoments {
    pub mean_x: Estimate,
    pub mean_p: Estimate,
    pub var_x: Estimate,
    pub var_p: Estimate,
    pub cov_xp: Estimate,
}

impl PhaseMoments {
    pub fn from_samples(xs: &[f64], ps: &[f64], weights: &[f64]) -> Self {
        assert_eq!(xs.len(), ps.len());
        let mean_x = weighted_estimate(xs, weights);
        let mean_p = weighted_estimate(ps, weights);
        let dx: Vec<f64> = xs.iter().map(|x| x - mean_x.value).collect();
        let dp: Vec<f64> = ps.iter().map(|p| p - mean_p.value).collect();
        let sq = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(u, v)| u * v).collect() };
        Self {
            mean_x,
            mean_p,
            var_x: weighted_estimate(&sq(&dx, &dx), weights),
            var_p: weighted_estimate(&sq(&dp, &dp), weights),
            cov_xp: weighted_estimate(&sq(&dx, &dp), weights),
        }
    }

    pub fn uniform(xs: &[f64], ps: &[f64]) -> Self {
        Self::from_samples(xs, ps, &uniform_weights(xs.len()))
    }

    /// `[mean_x, mean_p, var_x, var_p, cov_xp]`.
    pub fn as_array(&self) -> [Estimate; 5] {
        [self.mean_x, self.mean_p, self.var_x, self.var_p, self.cov_xp]
    }
}

pub const MOMENT_NAMES: [&str; 5] = ["mean_x", "mean_p", "var_x", "var_p", "cov_xp"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_weights_reduce_to_textbook_formulas() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let e = weighted_estimate(&xs, &uniform_weights(4));
        assert!((e.value - 2.5).abs() < 1e-15);
        // biased variance 1.25, n = 4
        assert!((e.stderr - (1.25f64 / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn z_scores() {
        let e = Estimate { value: 1.0, stderr: 0.5 };
        assert_eq!(e.z_score(2.0), 2.0);
        let exact = Estimate { value: 1.0, stderr: 0.0 };
        assert_eq!(exact.z_score(1.0), 0.0);
        assert!(exact.z_score(1.1).is_infinite());
        assert!(e.agrees_with(&Estimate { value: 2.0, stderr: 0.5 }, 3.0));
    }
}

/// Bivariate normal sampler for a PSD (possibly singular) covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian2 {
    mean: [f64; 2],
    l11: f64,
    l21: f64,
    l22: f64,
}

impl Gaussian2 {
    pub fn new(mean: [f64; 2], cov: [[f64; 2]; 2]) -> Option<Self> {
        let [[a, b], [c, d]] = cov;
        let scale = a.abs().max(d.abs()).max(1e-300);
        if a < 0.0 || d < 0.0 || (b - c).abs() > 1e-12 * scale || a * d - b * b < -1e-12 * scale * scale {
            return None;
        }
        let l11 = a.sqrt();
        let l21 = if l11 > 0.0 { b / l11 } else { 0.0 };
        let l22 = (d - l21 * l21).max(0.0).sqrt();
        Some(Self { mean, l11, l21, l22 })
    }

    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> [f64; 2] {
        let z1: f64 = rng.sample(rand_distr::StandardNormal);
        let z2: f64 = rng.sample(rand_distr::StandardNormal);
        [
            self.mean[0] + self.l11 * z1,
            self.mean[1] + self.l21 * z1 + self.l22 * z2,
        ]
    }
}

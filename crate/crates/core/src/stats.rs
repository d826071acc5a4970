//! Small statistical helpers for Monte-Carlo summaries.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub successes: usize,
    pub trials: usize,
}

impl Proportion {
    pub fn new(successes: usize, trials: usize) -> Self {
        Proportion { successes, trials }
    }

    pub fn rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.successes as f64 / self.trials as f64
        }
    }

    /// Wilson score interval at the given two-sided confidence.
    pub fn wilson(&self, confidence: f64) -> (f64, f64) {
        if self.trials == 0 {
            return (0.0, 1.0);
        }
        let z = z_two_sided(1.0 - confidence);
        let n = self.trials as f64;
        let p = self.rate();
        let denom = 1.0 + z * z / n;
        let centre = (p + z * z / (2.0 * n)) / denom;
        let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
        ((centre - half).max(0.0), (centre + half).min(1.0))
    }
}

fn z_two_sided(alpha: f64) -> f64 {
    Normal::standard().inverse_cdf(1.0 - alpha / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoProportionTest {
    pub z: f64,
    /// Two-sided p-value.
    pub p_two_sided: f64,
    /// One-sided p-value for `a > b`.
    pub p_greater: f64,
}

/// Pooled two-proportion z-test.
pub fn two_proportion_test(a: Proportion, b: Proportion) -> TwoProportionTest {
    let (n1, n2) = (a.trials as f64, b.trials as f64);
    let pooled = (a.successes + b.successes) as f64 / (n1 + n2);
    let se = (pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2)).sqrt();
    let diff = a.rate() - b.rate();
    let z = if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    };
    let normal = Normal::standard();
    TwoProportionTest {
        z,
        p_two_sided: 2.0 * (1.0 - normal.cdf(z.abs())),
        p_greater: 1.0 - normal.cdf(z),
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn z_test_textbook() {
        // 60/100 vs 40/100: pooled 0.5, se = sqrt(0.25 * 0.02), z = 0.2 / 0.0707.
        let t = two_proportion_test(Proportion::new(60, 100), Proportion::new(40, 100));
        assert!((t.z - 2.828427).abs() < 1e-5);
        assert!((t.p_two_sided - 0.004677).abs() < 1e-5);
        assert!(t.p_greater < t.p_two_sided);
    }

    #[test]
    fn degenerate_proportions() {
        let t = two_proportion_test(Proportion::new(10, 10), Proportion::new(0, 10));
        assert!(t.z > 4.0 && t.p_two_sided < 1e-4);
        let same = two_proportion_test(Proportion::new(0, 10), Proportion::new(0, 10));
        assert_eq!(same.z, 0.0);
        assert_eq!(same.p_two_sided, 1.0);
    }

    #[test]
    fn wilson_contains_rate() {
        let p = Proportion::new(30, 200);
        let (lo, hi) = p.wilson(0.95);
        assert!(lo < 0.15 && 0.15 < hi);
        assert!((lo - 0.1072).abs() < 1e-3 && (hi - 0.2064).abs() < 1e-3);
    }
}

//! NetScore: `20 · log10(a^α / (p^β · m^γ))` with accuracy `a` in percent,
//! `p` in millions of parameters, `m` in billions of mult-adds.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricInputs {
    /// Top-1 accuracy, percent.
    pub accuracy: f64,
    pub params_millions: f64,
    pub mult_adds_billions: f64,
}

impl MetricInputs {
    /// From raw counts.
    pub fn from_counts(accuracy: f64, params: u64, mult_adds: u64) -> Self {
        Self {
            accuracy,
            params_millions: params as f64 / 1e6,
            mult_adds_billions: mult_adds as f64 / 1e9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Minimum accuracy (percent) accepted by [`indicator`].
    pub accuracy_floor: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            alpha: 2.0,
            beta: 0.5,
            gamma: 0.5,
            accuracy_floor: 65.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("{field} must be positive and finite, got {value}")]
    Domain { field: &'static str, value: f64 },
    #[error("accuracy {0} exceeds 100%")]
    AccuracyAbove100(f64),
}

fn positive(field: &'static str, value: f64) -> Result<f64, MetricError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(MetricError::Domain { field, value })
    }
}

pub fn netscore(x: &MetricInputs, cfg: &MetricConfig) -> Result<f64, MetricError> {
    let a = positive("accuracy", x.accuracy)?;
    if a > 100.0 {
        return Err(MetricError::AccuracyAbove100(a));
    }
    let p = positive("params_millions", x.params_millions)?;
    let m = positive("mult_adds_billions", x.mult_adds_billions)?;
    // Sum of logs rather than the ratio of powers: no overflow for large α.
    Ok(20.0 * (cfg.alpha * a.log10() - cfg.beta * p.log10() - cfg.gamma * m.log10()))
}

/// Feasibility test: accuracy at or above the configured floor.
pub fn indicator(accuracy: f64, cfg: &MetricConfig) -> bool {
    accuracy >= cfg.accuracy_floor
}

#[cfg(test)]
mod tests {
    use super::*;

    fn score(a: f64, p: f64, m: f64) -> f64 {
        netscore(
            &MetricInputs {
                accuracy: a,
                params_millions: p,
                mult_adds_billions: m,
            },
            &MetricConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn table_rows() {
        assert!((score(64.52, 3.26, 0.5675) - 69.71).abs() <= 0.05);
        assert!((score(65.00, 1.32, 0.1401) - 79.85).abs() <= 0.05);
        assert!((score(66.30, 0.32, 0.0575) - 90.21).abs() <= 0.05);
    }

    #[test]
    fn indicator_boundary() {
        let cfg = MetricConfig::default();
        assert!(indicator(65.0, &cfg));
        assert!(!indicator(64.99, &cfg));
        assert!(indicator(73.00, &cfg));
    }

    #[test]
    fn rejects_non_positive_inputs() {
        let cfg = MetricConfig::default();
        for (a, p, m) in [
            (0.0, 1.0, 1.0),
            (50.0, 0.0, 1.0),
            (50.0, 1.0, -1.0),
            (f64::NAN, 1.0, 1.0),
        ] {
            let x = MetricInputs {
                accuracy: a,
                params_millions: p,
                mult_adds_billions: m,
            };
            assert!(matches!(netscore(&x, &cfg), Err(MetricError::Domain { .. })));
        }
        let x = MetricInputs {
            accuracy: 100.5,
            params_millions: 1.0,
            mult_adds_billions: 1.0,
        };
        assert!(netscore(&x, &cfg).is_err());
    }

    #[test]
    fn zero_complexity_weights_leave_accuracy_term() {
        let cfg = MetricConfig {
            beta: 0.0,
            gamma: 0.0,
            ..MetricConfig::default()
        };
        let x = MetricInputs {
            accuracy: 70.0,
            params_millions: 123.0,
            mult_adds_billions: 4.5,
        };
        let expected = 20.0 * 2.0 * 70f64.log10();
        assert!((netscore(&x, &cfg).unwrap() - expected).abs() < 1e-12);
    }
}

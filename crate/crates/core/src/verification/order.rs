use std::fmt;

use super::VerificationError;

/// Errors at or below this value are treated as round-off.
pub const SATURATION_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairOrder {
    Order(f64),
    /// One of the two errors is at the round-off floor.
    Saturated,
}

impl PairOrder {
    pub fn value(self) -> Option<f64> {
        match self {
            PairOrder::Order(v) => Some(v),
            PairOrder::Saturated => None,
        }
    }
}

impl fmt::Display for PairOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PairOrder::Order(v) => write!(f, "{v:.3}"),
            PairOrder::Saturated => write!(f, "saturated"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderEstimate {
    /// `log(e_l / e_{l+1}) / log(h_l / h_{l+1})` for consecutive levels.
    pub pairwise: Vec<PairOrder>,
    /// Least-squares slope of `log e` against `log h` over the unsaturated
    /// levels; `None` with fewer than two of them.
    pub fit: Option<f64>,
}

impl OrderEstimate {
    /// Smallest of the last `n` pairwise orders. Saturated pairs count as
    /// passing; `None` when all of them are saturated.
    pub fn min_last(&self, n: usize) -> Option<f64> {
        let start = self.pairwise.len().saturating_sub(n);
        self.pairwise[start..].iter().filter_map(|p| p.value()).reduce(f64::min)
    }

    /// True when each of the last `n` pairs is saturated or at least `threshold`.
    pub fn meets(&self, threshold: f64, n: usize) -> bool {
        let start = self.pairwise.len().saturating_sub(n);
        self.pairwise[start..].iter().all(|p| p.value().is_none_or(|v| v >= threshold))
    }
}

pub fn observed_order(errors: &[f64], hs: &[f64]) -> Result<OrderEstimate, VerificationError> {
    if errors.len() != hs.len() {
        return Err(VerificationError::LengthMismatch {
            errors: errors.len(),
            hs: hs.len(),
        });
    }
    if errors.len() < 2 {
        return Err(VerificationError::TooFewLevels {
            required: 2,
            found: errors.len(),
        });
    }
    for (level, &value) in errors.iter().enumerate() {
        if !(value >= 0.0 && value.is_finite()) {
            return Err(VerificationError::NonPositiveError { level, value });
        }
    }
    for (level, &value) in hs.iter().enumerate() {
        if !(value > 0.0 && value.is_finite()) {
            return Err(VerificationError::NonPositiveError { level, value });
        }
    }
    let saturated = |e: f64| e <= SATURATION_FLOOR;
    let pairwise = errors
        .windows(2)
        .zip(hs.windows(2))
        .map(|(e, h)| {
            if saturated(e[0]) || saturated(e[1]) {
                PairOrder::Saturated
            } else {
                PairOrder::Order((e[0] / e[1]).ln() / (h[0] / h[1]).ln())
            }
        })
        .collect();

    let pts: Vec<(f64, f64)> = errors
        .iter()
        .zip(hs)
        .filter(|(e, _)| !saturated(**e))
        .map(|(e, h)| (h.ln(), e.ln()))
        .collect();
    let fit = (pts.len() >= 2).then(|| {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    });
    Ok(OrderEstimate { pairwise, fit })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn orders(e: &OrderEstimate) -> Vec<f64> {
        e.pairwise.iter().map(|p| p.value().unwrap()).collect()
    }

    #[test]
    fn first_order_sequence() {
        let est = observed_order(&[4.0, 2.0, 1.0], &[4.0, 2.0, 1.0]).unwrap();
        assert_eq!(orders(&est), vec![1.0, 1.0]);
        assert!((est.fit.unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn second_order_sequence() {
        let est = observed_order(&[16.0, 4.0, 1.0], &[4.0, 2.0, 1.0]).unwrap();
        assert_eq!(orders(&est), vec![2.0, 2.0]);
        assert!((est.fit.unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn round_off_floor_is_saturated() {
        let est = observed_order(&[1e-3, 5e-4, 1e-16], &[0.4, 0.2, 0.1]).unwrap();
        assert_eq!(est.pairwise[1], PairOrder::Saturated);
        assert!((est.pairwise[0].value().unwrap() - 1.0).abs() < 1e-12);
        assert!((est.fit.unwrap() - 1.0).abs() < 1e-12);
        assert!(est.meets(0.9, 2));
    }

    #[test]
    fn invalid_input() {
        assert!(matches!(
            observed_order(&[1.0], &[1.0]),
            Err(VerificationError::TooFewLevels { .. })
        ));
        assert!(matches!(
            observed_order(&[1.0, -1.0], &[1.0, 0.5]),
            Err(VerificationError::NonPositiveError { level: 1, .. })
        ));
        assert!(matches!(
            observed_order(&[1.0, f64::NAN], &[1.0, 0.5]),
            Err(VerificationError::NonPositiveError { .. })
        ));
    }
}

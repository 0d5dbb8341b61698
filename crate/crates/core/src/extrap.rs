//! Richardson extrapolation of radial limits `lim_{r→∞} f(r)`.

use crate::expr::EvalError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LimitError {
    #[error("radial extrapolation did not settle: successive estimates {previous} and {estimate} differ by {spread:.3e}")]
    NotConverged {
        estimate: f64,
        previous: f64,
        spread: f64,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Geometric radial sequence `r_k = base * ratio^k` and an expansion in
/// powers of `1/r` eliminated column by column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialLimit {
    pub base: f64,
    pub ratio: f64,
    pub count: usize,
    /// Number of `1/r^j` correction terms removed.
    pub columns: usize,
    /// Relative bound on the difference of the last two estimates.
    pub tol: f64,
}

impl Default for RadialLimit {
    fn default() -> Self {
        RadialLimit {
            base: 4.0,
            ratio: 2.0,
            count: 9,
            columns: 3,
            tol: 1e-5,
        }
    }
}

impl RadialLimit {
    pub fn radii(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|k| self.base * self.ratio.powi(k as i32))
    }

    /// Extrapolated limit of `f(r)` as `r → ∞`.
    pub fn limit(&self, mut f: impl FnMut(f64) -> Result<f64, EvalError>) -> Result<f64, LimitError> {
        let samples = self
            .radii()
            .map(&mut f)
            .collect::<Result<Vec<f64>, EvalError>>()?;
        self.extrapolate(&samples)
    }

    /// Same as [`RadialLimit::limit`] for vector-valued sequences, componentwise.
    pub fn limit_vec(
        &self,
        dim: usize,
        mut f: impl FnMut(f64) -> Result<Vec<f64>, EvalError>,
    ) -> Result<Vec<f64>, LimitError> {
        let samples = self
            .radii()
            .map(&mut f)
            .collect::<Result<Vec<Vec<f64>>, EvalError>>()?;
        (0..dim)
            .map(|i| {
                let column: Vec<f64> = samples.iter().map(|v| v[i]).collect();
                self.extrapolate(&column)
            })
            .collect()
    }

    pub fn extrapolate(&self, samples: &[f64]) -> Result<f64, LimitError> {
        let n = samples.len();
        assert!(n >= 2, "need at least two samples");
        let cols = self.columns.min(n - 2);
        let mut row: Vec<f64> = samples.to_vec();
        let mut factor = 1.0;
        for _ in 0..cols {
            factor *= self.ratio;
            row = row
                .windows(2)
                .map(|w| w[1] + (w[1] - w[0]) / (factor - 1.0))
                .collect();
        }
        let estimate = row[row.len() - 1];
        let previous = row[row.len() - 2];
        let spread = (estimate - previous).abs();
        if spread <= self.tol * estimate.abs().max(1.0) && estimate.is_finite() {
            Ok(estimate)
        } else {
            Err(LimitError::NotConverged {
                estimate,
                previous,
                spread,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn removes_inverse_power_corrections() {
        let lim = RadialLimit::default();
        let v = lim.limit(|r| Ok(2.0 + 3.0 / r - 5.0 / (r * r))).unwrap();
        assert!((v - 2.0).abs() < 1e-13, "{v}");
    }

    #[test]
    fn flags_logarithmic_growth() {
        let lim = RadialLimit::default();
        assert!(matches!(
            lim.limit(|r| Ok(r.ln())),
            Err(LimitError::NotConverged { .. })
        ));
    }
}

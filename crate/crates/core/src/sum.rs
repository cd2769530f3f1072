//! Neumaier compensated summation.
//!
//! Every long accumulation in the ledger and calculus kernels goes through
//! [`CompensatedSum`] so that exact algebraic identities survive 10^6 steps
//! well below the 1e-9 currency tolerance.

use std::ops::AddAssign;

#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }
}

impl From<f64> for CompensatedSum {
    fn from(x: f64) -> Self {
        Self { sum: x, carry: 0.0 }
    }
}

impl AddAssign<f64> for CompensatedSum {
    fn add_assign(&mut self, rhs: f64) {
        self.add(rhs);
    }
}

/// Compensated sum of an iterator.
pub fn sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = CompensatedSum::new();
    for v in values {
        acc += v;
    }
    acc.value()
}

/// Running compensated sum: `out[0] = 0`, `out[k+1] = out[k] + steps[k]`.
pub fn cumulative(steps: &[f64]) -> Vec<f64> {
    let mut acc = CompensatedSum::new();
    let mut out = Vec::with_capacity(steps.len() + 1);
    out.push(0.0);
    for &s in steps {
        acc += s;
        out.push(acc.value());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_small_terms_next_to_large_ones() {
        let mut s = CompensatedSum::new();
        s += 1e100;
        s += 1.0;
        s += -1e100;
        assert_eq!(s.value(), 1.0);
    }

    #[test]
    fn tenth_summed_a_million_times() {
        let naive: f64 = (0..1_000_000).map(|_| 0.1).sum();
        let comp = sum((0..1_000_000).map(|_| 0.1));
        assert!((comp - 100_000.0).abs() <= 1e-9);
        assert!((naive - 100_000.0).abs() > (comp - 100_000.0).abs());
    }

    #[test]
    fn cumulative_starts_at_zero() {
        assert_eq!(cumulative(&[1.0, 2.0, 3.0]), vec![0.0, 1.0, 3.0, 6.0]);
        assert_eq!(cumulative(&[]), vec![0.0]);
    }
}

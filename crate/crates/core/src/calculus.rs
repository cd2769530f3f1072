//! Discrete stochastic-calculus kernels. Integrands are always sampled at the
//! left endpoint of each interval.

use crate::error::{invalid, Result};
use crate::paths::{MarketPath, TimeGrid};
use crate::sum::{self, CompensatedSum};

/// One real value per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSeries {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl SampledSeries {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid(format!(
                "series length {} does not match grid length {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: &TimeGrid, c: f64) -> Self {
        Self {
            values: vec![c; grid.len()],
            grid: grid.clone(),
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Pointwise `alpha * self + other`.
    pub fn axpy(&self, alpha: f64, other: &SampledSeries) -> Result<SampledSeries> {
        self.grid.ensure_same(&other.grid, "axpy")?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| alpha * x + y)
            .collect();
        Ok(SampledSeries {
            grid: self.grid.clone(),
            values,
        })
    }

    fn increments(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.windows(2).map(|w| w[1] - w[0])
    }
}

/// Left-point sum `G_{k+1} = G_k + h_k (X_{k+1} - X_k)`, `G_0 = 0`.
pub fn ito_integral(integrand: &SampledSeries, integrator: &SampledSeries) -> Result<SampledSeries> {
    integrand.grid.ensure_same(&integrator.grid, "ito_integral")?;
    let steps: Vec<f64> = integrand
        .values
        .iter()
        .zip(integrator.increments())
        .map(|(h, dx)| h * dx)
        .collect();
    Ok(SampledSeries {
        grid: integrand.grid.clone(),
        values: sum::cumulative(&steps),
    })
}

/// Running sum of increment products `[x, y]_k`.
pub fn quadratic_covariation(x: &SampledSeries, y: &SampledSeries) -> Result<SampledSeries> {
    x.grid.ensure_same(&y.grid, "quadratic_covariation")?;
    let steps: Vec<f64> = x.increments().zip(y.increments()).map(|(a, b)| a * b).collect();
    Ok(SampledSeries {
        grid: x.grid.clone(),
        values: sum::cumulative(&steps),
    })
}

/// A function `f(t, s)` with caller-supplied partial derivatives.
pub trait SmoothFunction {
    fn value(&self, t: f64, s: f64) -> f64;
    fn d_t(&self, t: f64, s: f64) -> f64;
    fn d_s(&self, t: f64, s: f64) -> f64;
    fn d_ss(&self, t: f64, s: f64) -> f64;
}

type Map = Box<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// [`SmoothFunction`] assembled from four closures.
pub struct ClosureFunction {
    f: Map,
    f_t: Map,
    f_s: Map,
    f_ss: Map,
}

impl ClosureFunction {
    pub fn new(
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        f_t: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        f_s: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        f_ss: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            f: Box::new(f),
            f_t: Box::new(f_t),
            f_s: Box::new(f_s),
            f_ss: Box::new(f_ss),
        }
    }
}

impl SmoothFunction for ClosureFunction {
    fn value(&self, t: f64, s: f64) -> f64 {
        (self.f)(t, s)
    }
    fn d_t(&self, t: f64, s: f64) -> f64 {
        (self.f_t)(t, s)
    }
    fn d_s(&self, t: f64, s: f64) -> f64 {
        (self.f_s)(t, s)
    }
    fn d_ss(&self, t: f64, s: f64) -> f64 {
        (self.f_ss)(t, s)
    }
}

/// `f(T, S_T) - f(0, S_0)` minus the discrete Ito-Doblin expansion
/// `sum f_t dt + f_s dS + 1/2 f_ss dS^2`, partials taken at left endpoints.
///
/// Summed step by step: each step contributes its own local residual, which
/// telescopes to the same total with far less cancellation.
pub fn ito_doblin_residual<F: SmoothFunction + ?Sized>(f: &F, path: &MarketPath) -> f64 {
    let t = path.grid().times();
    let s = path.stock();
    let mut acc = CompensatedSum::new();
    for k in 0..path.grid().steps() {
        let (t0, s0) = (t[k], s[k]);
        let dt = t[k + 1] - t0;
        let ds = s[k + 1] - s0;
        let jump = f.value(t[k + 1], s[k + 1]) - f.value(t0, s0);
        let expansion = f.d_t(t0, s0) * dt + f.d_s(t0, s0) * ds + 0.5 * f.d_ss(t0, s0) * ds * ds;
        acc += jump - expansion;
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::{simulate, uniform_grid, GbmParams, Measure};

    fn series(values: &[f64]) -> SampledSeries {
        let g = uniform_grid(1.0, values.len() - 1).unwrap();
        SampledSeries::new(g, values.to_vec()).unwrap()
    }

    #[test]
    fn constant_integrand_telescopes() {
        let x = series(&[100.0, 103.0, 99.5, 101.25]);
        let h = SampledSeries::constant(x.grid(), 2.5);
        let g = ito_integral(&h, &x).unwrap();
        for (k, v) in g.values().iter().enumerate() {
            assert!((v - 2.5 * (x.values()[k] - 100.0)).abs() < 1e-12);
        }
        let zero = ito_integral(&SampledSeries::constant(x.grid(), 0.0), &x).unwrap();
        assert!(zero.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn left_point_hand_example() {
        let x = series(&[100.0, 110.0, 105.0]);
        let h = SampledSeries::new(x.grid().clone(), vec![1.0, 2.0, 99.0]).unwrap();
        assert_eq!(ito_integral(&h, &x).unwrap().values(), &[0.0, 10.0, 0.0]);
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let a = series(&[1.0, 2.0, 3.0]);
        let b = series(&[1.0, 2.0]);
        assert!(ito_integral(&a, &b).is_err());
        assert!(quadratic_covariation(&a, &b).is_err());
    }

    #[test]
    fn covariation_hand_example() {
        let x = series(&[1.0, 1.1, 1.3]);
        let c = quadratic_covariation(&x, &x).unwrap();
        let expect = [0.0, 0.01, 0.05];
        for (v, e) in c.values().iter().zip(expect) {
            assert!((v - e).abs() < 1e-12);
        }
        let flat = SampledSeries::constant(x.grid(), 4.0);
        assert!(quadratic_covariation(&x, &flat).unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gbm_quadratic_variation_matches_integrated_variance() {
        let p = GbmParams::new(100.0, 0.05, 0.2, 0.05).unwrap();
        let g = uniform_grid(1.0, 4096).unwrap();
        let mut rel = 0.0;
        let seeds = 200;
        for seed in 0..seeds {
            let m = simulate(&p, &g, seed, 0, Measure::Physical);
            let s = SampledSeries::new(g.clone(), m.stock().to_vec()).unwrap();
            let qv = quadratic_covariation(&s, &s).unwrap().last();
            // trapezoid rule on sigma^2 S^2
            let f: Vec<f64> = m.stock().iter().map(|x| 0.04 * x * x).collect();
            let integral: f64 = (0..g.steps()).map(|k| 0.5 * (f[k] + f[k + 1]) * g.dt(k)).sum();
            rel += ((qv - integral) / integral).abs();
        }
        let mean_rel = rel / seeds as f64;
        assert!(mean_rel < 0.10, "mean relative error {mean_rel}");
    }

    #[test]
    fn identity_and_square_residuals_vanish() {
        let p = GbmParams::default();
        let g = uniform_grid(1.0, 1000).unwrap();
        let identity = ClosureFunction::new(|_, s| s, |_, _| 0.0, |_, _| 1.0, |_, _| 0.0);
        let square = ClosureFunction::new(|_, s| s * s, |_, _| 0.0, |_, s| 2.0 * s, |_, _| 2.0);
        for seed in 0..20 {
            let m = simulate(&p, &g, seed, 0, Measure::Physical);
            assert!(ito_doblin_residual(&identity, &m).abs() <= 1e-9);
            assert!(ito_doblin_residual(&square, &m).abs() <= 1e-9);
        }
    }

    #[test]
    fn time_dependent_linear_function_is_exact() {
        // f = t*s is bilinear; the discrete expansion misses only dt*dS.
        let p = GbmParams::default();
        let g = uniform_grid(1.0, 64).unwrap();
        let m = simulate(&p, &g, 3, 0, Measure::Physical);
        let f = ClosureFunction::new(|t, s| t * s, |_, s| s, |t, _| t, |_, _| 0.0);
        let cross: f64 = (0..g.steps())
            .map(|k| g.dt(k) * (m.stock()[k + 1] - m.stock()[k]))
            .sum();
        assert!((ito_doblin_residual(&f, &m) - cross).abs() < 1e-10);
    }
}

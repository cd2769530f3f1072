//! Time grids, Brownian increments, GBM stock paths and the deterministic
//! money-market account.
//!
//! Randomness is counter-based: the normal draws of a path are a pure
//! function of `(seed, path_index)` plus a lineage tag that distinguishes
//! the base draw from each Brownian-bridge refinement. Nothing depends on
//! call order, so Monte Carlo loops can run on any thread schedule.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};
use crate::sum;

/// Strictly increasing partition of `[0, T]`, in years.
#[derive(Debug, Clone)]
pub struct TimeGrid {
    times: Arc<[f64]>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(invalid("time grid needs at least 2 points"));
        }
        if times[0] != 0.0 {
            return Err(invalid(format!("time grid must start at 0, got {}", times[0])));
        }
        for (k, w) in times.windows(2).enumerate() {
            let dt = w[1] - w[0];
            if !(dt.is_finite() && dt > 0.0) {
                return Err(invalid(format!(
                    "time grid not strictly increasing at step {k}: {} -> {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self { times: times.into() })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of intervals.
    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn dt(&self, k: usize) -> f64 {
        self.times[k + 1] - self.times[k]
    }

    pub(crate) fn ensure_same(&self, other: &TimeGrid, what: &str) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(invalid(format!("grid mismatch: {what}")))
        }
    }
}

impl PartialEq for TimeGrid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.times, &other.times) || self.times == other.times
    }
}

/// `steps + 1` equally spaced instants from 0 to `horizon`.
pub fn uniform_grid(horizon: f64, steps: usize) -> Result<TimeGrid> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(invalid(format!("horizon must be positive, got {horizon}")));
    }
    if steps == 0 {
        return Err(invalid("steps must be at least 1"));
    }
    let n = steps as f64;
    let mut times: Vec<f64> = (0..=steps).map(|i| horizon * (i as f64) / n).collect();
    times[steps] = horizon;
    TimeGrid::new(times)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbmParams {
    pub s0: f64,
    pub mu: f64,
    pub sigma: f64,
    pub r: f64,
}

impl GbmParams {
    pub fn new(s0: f64, mu: f64, sigma: f64, r: f64) -> Result<Self> {
        let p = Self { s0, mu, sigma, r };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s0.is_finite() && self.s0 > 0.0) {
            return Err(invalid(format!("s0 must be > 0, got {}", self.s0)));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(invalid(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        if !self.mu.is_finite() || !self.r.is_finite() {
            return Err(invalid("mu and r must be finite"));
        }
        Ok(())
    }
}

impl Default for GbmParams {
    fn default() -> Self {
        Self {
            s0: 100.0,
            mu: 0.05,
            sigma: 0.2,
            r: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    Physical,
    RiskNeutral,
}

/// Brownian increments on a grid, tagged with the randomness that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    grid: TimeGrid,
    increments: Vec<f64>,
    seed: u64,
    path_index: u64,
    lineage: u64,
}

impl BrownianPath {
    /// Wraps caller-supplied increments. `(seed, path_index)` drive any later
    /// refinement of this path.
    pub fn from_increments(
        grid: TimeGrid,
        increments: Vec<f64>,
        seed: u64,
        path_index: u64,
    ) -> Result<Self> {
        if increments.len() != grid.steps() {
            return Err(invalid(format!(
                "expected {} increments, got {}",
                grid.steps(),
                increments.len()
            )));
        }
        if increments.iter().any(|x| !x.is_finite()) {
            return Err(invalid("Brownian increments must be finite"));
        }
        Ok(Self {
            grid,
            increments,
            seed,
            path_index,
            lineage: 0,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path_index(&self) -> u64 {
        self.path_index
    }

    /// Cumulative Brownian values `W_k`, with `W_0 = 0`.
    pub fn values(&self) -> Vec<f64> {
        sum::cumulative(&self.increments)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream_rng(seed: u64, lineage: u64, path_index: u64) -> ChaCha20Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&lineage.to_le_bytes());
    let mut rng = ChaCha20Rng::from_seed(key);
    rng.set_stream(path_index);
    rng
}

/// Independent `N(0, dt_k)` increments, fully determined by `(seed, path_index, grid)`.
pub fn generate_brownian(grid: &TimeGrid, seed: u64, path_index: u64) -> BrownianPath {
    let mut rng = stream_rng(seed, 0, path_index);
    let increments = (0..grid.steps())
        .map(|k| {
            let z: f64 = rng.sample(StandardNormal);
            z * grid.dt(k).sqrt()
        })
        .collect();
    BrownianPath {
        grid: grid.clone(),
        increments,
        seed,
        path_index,
        lineage: 0,
    }
}

/// Splits every step into `factor` sub-steps by Brownian-bridge sampling.
///
/// Original instants are kept bit-for-bit in the new grid, and the
/// sub-increments of each original step sum to the original increment
/// (the last sub-increment takes the remainder).
pub fn refine(w: &BrownianPath, factor: usize) -> Result<BrownianPath> {
    if factor < 2 {
        return Err(invalid(format!("refinement factor must be >= 2, got {factor}")));
    }
    let coarse = w.grid.times();
    let m = factor as f64;
    let mut times = Vec::with_capacity(w.grid.steps() * factor + 1);
    for k in 0..w.grid.steps() {
        let (t0, t1) = (coarse[k], coarse[k + 1]);
        times.push(t0);
        for j in 1..factor {
            times.push(t0 + (t1 - t0) * (j as f64) / m);
        }
    }
    times.push(w.grid.horizon());
    let grid = TimeGrid::new(times)?;

    let lineage = splitmix64(w.lineage ^ splitmix64(factor as u64));
    let mut rng = stream_rng(w.seed, lineage, w.path_index);
    let fine = grid.times();
    let mut increments = Vec::with_capacity(grid.steps());
    for (k, &dw) in w.increments.iter().enumerate() {
        let end = coarse[k + 1];
        let mut remaining = dw;
        for j in 0..factor - 1 {
            let i = k * factor + j;
            let delta = fine[i + 1] - fine[i];
            let tau = end - fine[i];
            let mean = remaining * delta / tau;
            let var = delta * (tau - delta) / tau;
            let z: f64 = rng.sample(StandardNormal);
            let inc = mean + var.max(0.0).sqrt() * z;
            increments.push(inc);
            remaining -= inc;
        }
        increments.push(remaining);
    }
    Ok(BrownianPath {
        grid,
        increments,
        seed: w.seed,
        path_index: w.path_index,
        lineage,
    })
}

/// Refines `base` successively so that every level shares one Brownian motion.
///
/// `factors` are cumulative multipliers of the base grid (1 means the base
/// itself). A level is refined from the previous one when its factor is a
/// multiple of the previous factor, otherwise from the base.
pub fn refinement_ladder(base: &BrownianPath, factors: &[usize]) -> Result<Vec<BrownianPath>> {
    let mut out: Vec<BrownianPath> = Vec::with_capacity(factors.len());
    let mut prev: Option<(usize, usize)> = None;
    for (i, &f) in factors.iter().enumerate() {
        if f == 0 {
            return Err(invalid("refinement factors must be >= 1"));
        }
        let level = match prev {
            Some((pf, pi)) if f > pf && f % pf == 0 => {
                let step = f / pf;
                if step == 1 {
                    out[pi].clone()
                } else {
                    refine(&out[pi], step)?
                }
            }
            _ if f == 1 => base.clone(),
            _ => refine(base, f)?,
        };
        out.push(level);
        prev = Some((f, i));
    }
    Ok(out)
}

/// Sampled stock and bond prices on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketPath {
    grid: TimeGrid,
    stock: Vec<f64>,
    bond: Vec<f64>,
    rate: f64,
    brownian: Option<BrownianPath>,
}

impl MarketPath {
    /// Builds a path from explicit prices, e.g. for hand-checked ledgers.
    /// No Brownian driver is attached.
    pub fn from_prices(grid: TimeGrid, stock: Vec<f64>, bond: Vec<f64>, rate: f64) -> Result<Self> {
        if stock.len() != grid.len() || bond.len() != grid.len() {
            return Err(invalid(format!(
                "price series lengths ({}, {}) must equal grid length {}",
                stock.len(),
                bond.len(),
                grid.len()
            )));
        }
        if stock.iter().chain(&bond).any(|&x| !(x.is_finite() && x > 0.0)) {
            return Err(invalid("stock and bond prices must be finite and > 0"));
        }
        Ok(Self {
            grid,
            stock,
            bond,
            rate,
            brownian: None,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn stock(&self) -> &[f64] {
        &self.stock
    }

    pub fn bond(&self) -> &[f64] {
        &self.bond
    }

    /// Risk-free rate of the money-market account.
    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn brownian(&self) -> Option<&BrownianPath> {
        self.brownian.as_ref()
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Exact log-scheme GBM driven by `w`, plus `beta_k = exp(r t_k)`.
///
/// `S_k = s0 exp((d - sigma^2/2) t_k + sigma W_k)` with `d = mu` or `d = r`
/// depending on the measure. Multiplying out consecutive steps gives the
/// usual per-step scheme; evaluating from the cumulative `W_k` keeps shared
/// instants of refined grids in agreement.
pub fn gbm_path(params: &GbmParams, w: &BrownianPath, measure: Measure) -> MarketPath {
    let drift = match measure {
        Measure::Physical => params.mu,
        Measure::RiskNeutral => params.r,
    };
    let nu = drift - 0.5 * params.sigma * params.sigma;
    let times = w.grid.times();
    let stock = if params.sigma == 0.0 {
        times.iter().map(|&t| params.s0 * (nu * t).exp()).collect()
    } else {
        times
            .iter()
            .zip(w.values())
            .map(|(&t, wt)| params.s0 * (nu * t + params.sigma * wt).exp())
            .collect()
    };
    let bond = times.iter().map(|&t| (params.r * t).exp()).collect();
    MarketPath {
        grid: w.grid.clone(),
        stock,
        bond,
        rate: params.r,
        brownian: Some(w.clone()),
    }
}

/// Convenience: Brownian draw plus GBM path in one call.
pub fn simulate(
    params: &GbmParams,
    grid: &TimeGrid,
    seed: u64,
    path_index: u64,
    measure: Measure,
) -> MarketPath {
    gbm_path(params, &generate_brownian(grid, seed, path_index), measure)
}

//! Exact path simulation for the model family.
//!
//! Between jump epochs the path is Brownian motion with drift, so a segment
//! is summarized exactly by its sampled endpoint and a draw from the
//! closed-form conditional law of the segment minimum (the Brownian-bridge
//! minimum). Jumps carry exact phase-type magnitudes. Nothing is
//! time-discretized, so the estimators are unbiased and can arbitrate
//! disagreements between analytic routes.
//!
//! Discounting uses the killing representation: an independent Exp(alpha)
//! horizon is drawn first and `e^{-alpha tau}` becomes the event
//! `tau < e_alpha`, which only requires knowing in which segment the first
//! passage happened, never the exact crossing instant.
//!
//! Sharding: shard `i` runs on its own ChaCha stream seeded by a SplitMix64
//! hash of `(seed, i)`; the merge is an index-ordered reduction, so results
//! are bit-identical for a fixed `(seed, shards, n_paths)` regardless of
//! thread scheduling (and of whether the `parallel` feature is enabled).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{FluctError, Result};
use crate::models::{LevyModel, PhaseType};
use crate::wiener_hopf::phase_type_roots;

/// Simulation budget and determinism knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub n_paths: u64,
    pub seed: u64,
    pub shards: u32,
    /// Truncation error budget for zero-discount runs: the path is abandoned
    /// once a new infimum has probability below this bound.
    pub r0_horizon_epsilon: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_paths: 100_000,
            seed: 0x0bad_5eed_u64,
            shards: 8,
            r0_horizon_epsilon: 1e-6,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths < 100 {
            return Err(FluctError::validation(
                "n_paths",
                format!("need at least 100 paths, got {}", self.n_paths),
            ));
        }
        if self.shards == 0 {
            return Err(FluctError::validation("shards", "need at least one shard"));
        }
        if !(self.r0_horizon_epsilon > 0.0 && self.r0_horizon_epsilon < 1.0) {
            return Err(FluctError::validation(
                "r0_horizon_epsilon",
                "must lie in (0, 1)",
            ));
        }
        Ok(())
    }

    pub fn with_paths(mut self, n: u64) -> Self {
        self.n_paths = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: u64,
}

impl Estimate {
    /// |mean - reference| in units of the standard error.
    pub fn z_score_vs(&self, reference: f64) -> f64 {
        (self.mean - reference).abs() / self.std_error.max(f64::MIN_POSITIVE)
    }
}

/// Running first and second moments; merged across shards in index order.
#[derive(Debug, Clone, Copy, Default)]
pub struct Moments {
    pub sum: f64,
    pub sumsq: f64,
    pub n: u64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.sum += x;
        self.sumsq += x * x;
        self.n += 1;
    }

    pub fn merge(&mut self, other: &Moments) {
        self.sum += other.sum;
        self.sumsq += other.sumsq;
        self.n += other.n;
    }

    pub fn estimate(&self) -> Estimate {
        let n = self.n as f64;
        let mean = self.sum / n;
        let var = if self.n > 1 {
            ((self.sumsq / n - mean * mean) * n / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        Estimate {
            mean,
            std_error: (var / n).sqrt(),
            n: self.n,
        }
    }
}

/// SplitMix64 mix; the documented shard-seed derivation is
/// `shard_seed = mix(seed ^ mix(shard + 1))`.
fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

pub fn shard_seed(seed: u64, shard: u32) -> u64 {
    splitmix64(seed ^ splitmix64(shard as u64 + 1))
}

fn shard_sizes(n_paths: u64, shards: u32) -> Vec<u64> {
    let s = shards as u64;
    let base = n_paths / s;
    let extra = n_paths % s;
    (0..s).map(|i| base + u64::from(i < extra)).collect()
}

/// Runs one closure per shard and returns the results in shard order.
pub fn run_shards<T, F>(cfg: &SimConfig, per_shard: F) -> Vec<T>
where
    T: Send,
    F: Fn(u32, u64, ChaCha8Rng) -> T + Sync,
{
    let sizes = shard_sizes(cfg.n_paths, cfg.shards);
    let job = |i: u32| {
        let rng = ChaCha8Rng::seed_from_u64(shard_seed(cfg.seed, i));
        per_shard(i, sizes[i as usize], rng)
    };
    #[cfg(feature = "parallel")]
    {
        (0..cfg.shards).into_par_iter().map(job).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..cfg.shards).map(job).collect()
    }
}

fn merge_moments(shards: &[Moments]) -> Estimate {
    let mut total = Moments::default();
    for m in shards {
        total.merge(m);
    }
    total.estimate()
}

fn exp_draw<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    -rng.gen::<f64>().max(f64::MIN_POSITIVE).ln() / rate
}

/// Minimum of a Brownian segment with endpoints (x0, x1) and variance `var`,
/// by inverse transform of `P(min <= z) = exp(-2 (x0-z)(x1-z)/var)`.
fn bridge_min<R: Rng + ?Sized>(rng: &mut R, x0: f64, x1: f64, var: f64) -> f64 {
    let u: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    0.5 * (x0 + x1 - ((x0 - x1).powi(2) - 2.0 * var * u.ln()).sqrt())
}

struct JumpStream<'a> {
    up_rate: f64,
    total_rate: f64,
    up: Option<&'a PhaseType>,
    down: Option<&'a PhaseType>,
}

impl<'a> JumpStream<'a> {
    fn new(model: &'a LevyModel) -> Self {
        let up_rate = model.up().map_or(0.0, |j| j.rate());
        let down_rate = model.down().map_or(0.0, |j| j.rate());
        JumpStream {
            up_rate,
            total_rate: up_rate + down_rate,
            up: model.up().map(|j| j.law()),
            down: model.down().map(|j| j.law()),
        }
    }

    fn next_epoch<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.total_rate == 0.0 {
            f64::INFINITY
        } else {
            exp_draw(rng, self.total_rate)
        }
    }

    fn sample_signed_jump<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let pick_up = match (self.up, self.down) {
            (Some(_), Some(_)) => rng.gen::<f64>() * self.total_rate < self.up_rate,
            (Some(_), None) => true,
            _ => false,
        };
        if pick_up {
            self.up.unwrap().sample(rng)
        } else {
            -self.down.unwrap().sample(rng)
        }
    }
}

/// Samples the diffusion segment from `x0` over `dt`: (endpoint, minimum).
fn segment<R: Rng + ?Sized>(rng: &mut R, model: &LevyModel, x0: f64, dt: f64) -> (f64, f64) {
    if dt == 0.0 {
        return (x0, x0);
    }
    if model.gaussian() > 0.0 {
        let z: f64 = rng.sample(StandardNormal);
        let var = model.gaussian() * dt;
        let x1 = x0 + model.drift() * dt + var.sqrt() * z;
        let m = bridge_min(rng, x0, x1, var);
        (x1, m)
    } else {
        let x1 = x0 + model.drift() * dt;
        (x1, x0.min(x1))
    }
}

/// Abandonment distance for zero-discount runs: once the path sits `L` above
/// its record minimum (or the barrier), a new record has probability below
/// epsilon by the exponential bound `P(inf < -L) <= e^{-gamma L}` with gamma
/// the dominant decay rate of the infimum law (the negative of the largest
/// real part among the left roots of the cumulant).
fn lundberg_distance(model: &LevyModel, epsilon: f64) -> Result<f64> {
    if !model.has_downward_movement() {
        return Ok(0.0);
    }
    let roots = phase_type_roots(model, 0.0)?;
    let gamma = roots
        .roots()
        .iter()
        .map(|&(z, _)| -z.re)
        .fold(f64::INFINITY, f64::min);
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(FluctError::UnsupportedLimit {
            detail: "no exponential bound available for the zero-discount horizon".into(),
        });
    }
    Ok((1.0 / epsilon).ln() / gamma)
}

/// Exact samples of `(inf X, X)` at an independent Exp(r) time.
///
/// For r = 0 (positive mean required) the path is truncated once a new
/// infimum has probability below `cfg.r0_horizon_epsilon`; the reported
/// endpoint is then the value at the truncation time and only the infimum
/// column is meaningful.
pub fn sample_inf_and_endpoint(
    model: &LevyModel,
    r: f64,
    cfg: &SimConfig,
) -> Result<Vec<(f64, f64)>> {
    cfg.validate()?;
    if r < 0.0 {
        return Err(FluctError::validation("r", "discount must be >= 0"));
    }
    let lundberg = if r == 0.0 {
        if model.mean() <= 0.0 {
            return Err(FluctError::UnsupportedLimit {
                detail: "r = 0 sampling needs E[X_1] > 0".into(),
            });
        }
        Some(lundberg_distance(model, cfg.r0_horizon_epsilon)?)
    } else {
        None
    };
    let shards = run_shards(cfg, |_, n, mut rng| {
        let stream = JumpStream::new(model);
        let mut out = Vec::with_capacity(n as usize);
        for _ in 0..n {
            out.push(one_inf_path(&mut rng, model, &stream, r, lundberg));
        }
        out
    });
    Ok(shards.into_iter().flatten().collect())
}

/// Same sampler, but keeping the per-shard grouping (for per-shard
/// reporting in the front end).
pub fn sample_inf_and_endpoint_sharded(
    model: &LevyModel,
    r: f64,
    cfg: &SimConfig,
) -> Result<Vec<Vec<(f64, f64)>>> {
    cfg.validate()?;
    if r <= 0.0 {
        return Err(FluctError::validation("r", "sharded sampling needs r > 0"));
    }
    Ok(run_shards(cfg, |_, n, mut rng| {
        let stream = JumpStream::new(model);
        let mut out = Vec::with_capacity(n as usize);
        for _ in 0..n {
            out.push(one_inf_path(&mut rng, model, &stream, r, None));
        }
        out
    }))
}

fn one_inf_path<R: Rng + ?Sized>(
    rng: &mut R,
    model: &LevyModel,
    stream: &JumpStream,
    r: f64,
    lundberg: Option<f64>,
) -> (f64, f64) {
    let horizon = if r > 0.0 { exp_draw(rng, r) } else { f64::INFINITY };
    let mut t = 0.0;
    let mut x = 0.0;
    let mut min = 0.0_f64;
    loop {
        if let Some(l) = lundberg {
            if x - min >= l {
                return (min, x);
            }
        }
        let epoch = stream.next_epoch(rng);
        if epoch.is_infinite() && horizon.is_infinite() {
            // Zero discount, no jumps, positive drift with a Gaussian part:
            // sample the all-time minimum from its exact exponential law.
            let gamma = 2.0 * model.drift() / model.gaussian();
            let m = x - exp_draw(rng, gamma);
            return (min.min(m), x);
        }
        if t + epoch >= horizon {
            let (x1, m) = segment(rng, model, x, horizon - t);
            return (min.min(m), x1);
        }
        let (x1, m) = segment(rng, model, x, epoch);
        min = min.min(m);
        x = x1 + stream.sample_signed_jump(rng);
        min = min.min(x);
        t += epoch;
    }
}

/// Samples of `(sup X, X)` at Exp(r), via the dual model (`sup X` equals the
/// negated infimum of `-X`).
pub fn sample_sup_and_endpoint(
    model: &LevyModel,
    r: f64,
    cfg: &SimConfig,
) -> Result<Vec<(f64, f64)>> {
    let dual = model.dual();
    Ok(sample_inf_and_endpoint(&dual, r, cfg)?
        .into_iter()
        .map(|(inf, end)| (-inf, -end))
        .collect())
}

/// Direction of a first-passage estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Up,
    Down,
}

/// Unbiased estimate of `E[e^{-alpha tau} e^{beta X_tau} 1(tau < inf)]` for
/// the passage strictly below `-level` (Down), or of
/// `E[e^{-alpha tau} e^{-beta X_tau} 1(tau < inf)]` for the passage strictly
/// above `+level` (Up, computed on the dual model).
pub fn estimate_passage(
    model: &LevyModel,
    alpha: f64,
    beta: f64,
    level: f64,
    direction: Direction,
    cfg: &SimConfig,
) -> Result<Estimate> {
    cfg.validate()?;
    if level < 0.0 {
        return Err(FluctError::validation("level", "barrier depth must be >= 0"));
    }
    if beta < 0.0 {
        return Err(FluctError::validation(
            "beta",
            "overshoot exponent must be >= 0",
        ));
    }
    let work = match direction {
        Direction::Down => model.clone(),
        Direction::Up => model.dual(),
    };
    let lundberg = if alpha == 0.0 {
        if work.mean() <= 0.0 {
            return Err(FluctError::UnsupportedLimit {
                detail: "alpha = 0 passage estimates need the mean-drift condition".into(),
            });
        }
        Some(lundberg_distance(&work, cfg.r0_horizon_epsilon)?)
    } else {
        None
    };
    let barrier = -level;
    let shards = run_shards(cfg, |_, n, mut rng| {
        let stream = JumpStream::new(&work);
        let mut acc = Moments::default();
        for _ in 0..n {
            let v = match one_passage_path(&mut rng, &work, &stream, alpha, barrier, lundberg) {
                Some(x_tau) => (beta * x_tau).exp(),
                None => 0.0,
            };
            acc.push(v);
        }
        acc
    });
    Ok(merge_moments(&shards))
}

/// Simulates until the path first goes strictly below `barrier` (returning
/// the exact passage value: the barrier itself for a continuous crossing,
/// the post-jump point otherwise) or until killing/abandonment (None).
fn one_passage_path<R: Rng + ?Sized>(
    rng: &mut R,
    model: &LevyModel,
    stream: &JumpStream,
    alpha: f64,
    barrier: f64,
    lundberg: Option<f64>,
) -> Option<f64> {
    let horizon = if alpha > 0.0 {
        exp_draw(rng, alpha)
    } else {
        f64::INFINITY
    };
    let mut t = 0.0;
    let mut x = 0.0_f64;
    loop {
        if let Some(l) = lundberg {
            if x - barrier >= l {
                return None;
            }
        }
        let epoch = stream.next_epoch(rng);
        if epoch.is_infinite() && horizon.is_infinite() {
            let gamma = 2.0 * model.drift() / model.gaussian();
            let m = x - exp_draw(rng, gamma);
            return if m < barrier { Some(barrier) } else { None };
        }
        let seg_len = (t + epoch).min(horizon) - t;
        let (x1, m) = segment(rng, model, x, seg_len);
        if m < barrier {
            return Some(barrier);
        }
        if t + epoch >= horizon {
            return None;
        }
        let x_after = x1 + stream.sample_signed_jump(rng);
        if x_after < barrier {
            return Some(x_after);
        }
        x = x_after;
        t += epoch;
    }
}

/// Unbiased estimate of the stopped discounted payoff
/// `E_x[e^{-r tau_y} (K - e^{X_tau})^+ 1(tau_y < inf)]`.
pub fn estimate_put_payoff(
    model: &LevyModel,
    strike: f64,
    r: f64,
    x0: f64,
    y: f64,
    cfg: &SimConfig,
) -> Result<Estimate> {
    cfg.validate()?;
    if r == 0.0 && model.mean() <= 0.0 {
        return Err(FluctError::UnsupportedLimit {
            detail: "r = 0 payoff estimates need E[X_1] > 0".into(),
        });
    }
    let lundberg = if r == 0.0 {
        Some(lundberg_distance(model, cfg.r0_horizon_epsilon)?)
    } else {
        None
    };
    if x0 < y {
        // Immediate exercise; no randomness.
        return Ok(Estimate {
            mean: (strike - x0.exp()).max(0.0),
            std_error: 0.0,
            n: cfg.n_paths,
        });
    }
    let barrier = y - x0;
    let shards = run_shards(cfg, |_, n, mut rng| {
        let stream = JumpStream::new(model);
        let mut acc = Moments::default();
        for _ in 0..n {
            let v = match one_passage_path(&mut rng, model, &stream, r, barrier, lundberg) {
                Some(rel) => (strike - (x0 + rel).exp()).max(0.0),
                None => 0.0,
            };
            acc.push(v);
        }
        acc
    });
    Ok(merge_moments(&shards))
}

/// `E_x[e^{-r (t ^ tau_y)} g(X_{t ^ tau_y})]` by the killing representation.
pub fn estimate_stopped_value(
    model: &LevyModel,
    r: f64,
    y: f64,
    x0: f64,
    t: f64,
    g: &(dyn Fn(f64) -> f64 + Sync),
    cfg: &SimConfig,
) -> Result<Estimate> {
    cfg.validate()?;
    if !(r > 0.0) {
        return Err(FluctError::validation("r", "stopped-value check needs r > 0"));
    }
    if x0 < y {
        return Ok(Estimate {
            mean: g(x0),
            std_error: 0.0,
            n: cfg.n_paths,
        });
    }
    let barrier = y - x0;
    let shards = run_shards(cfg, |_, n, mut rng| {
        let stream = JumpStream::new(model);
        let mut acc = Moments::default();
        for _ in 0..n {
            acc.push(one_stopped_path(
                &mut rng, model, &stream, r, barrier, x0, t, g,
            ));
        }
        acc
    });
    Ok(merge_moments(&shards))
}

#[allow(clippy::too_many_arguments)]
fn one_stopped_path<R: Rng + ?Sized>(
    rng: &mut R,
    model: &LevyModel,
    stream: &JumpStream,
    r: f64,
    barrier: f64,
    x0: f64,
    t_cap: f64,
    g: &(dyn Fn(f64) -> f64 + Sync),
) -> f64 {
    let e_r = exp_draw(rng, r);
    let horizon = e_r.min(t_cap);
    let killed_first = e_r < t_cap;
    let mut t = 0.0;
    let mut x = 0.0_f64;
    loop {
        let epoch = stream.next_epoch(rng);
        let seg_len = (t + epoch).min(horizon) - t;
        let (x1, m) = segment(rng, model, x, seg_len);
        if m < barrier {
            // The stop happened before both the cap and the killing time.
            return g(x0 + barrier);
        }
        if t + epoch >= horizon {
            return if killed_first { 0.0 } else { g(x0 + x1) };
        }
        let x_after = x1 + stream.sample_signed_jump(rng);
        if x_after < barrier {
            return g(x0 + x_after);
        }
        x = x_after;
        t += epoch;
    }
}

/// `e^{-r t} E_x[g(X_t)]`; the deterministic discount multiplies the sample
/// mean of `g` at the exactly simulated endpoint.
pub fn estimate_running_value(
    model: &LevyModel,
    r: f64,
    x0: f64,
    t: f64,
    g: &(dyn Fn(f64) -> f64 + Sync),
    cfg: &SimConfig,
) -> Result<Estimate> {
    cfg.validate()?;
    let shards = run_shards(cfg, |_, n, mut rng| {
        let stream = JumpStream::new(model);
        let mut acc = Moments::default();
        for _ in 0..n {
            let mut t_now = 0.0;
            let mut x = 0.0_f64;
            loop {
                let epoch = stream.next_epoch(&mut rng);
                let seg_len = (t_now + epoch).min(t) - t_now;
                let (x1, _) = segment(&mut rng, model, x, seg_len);
                if t_now + epoch >= t {
                    acc.push((-r * t).exp() * g(x0 + x1));
                    break;
                }
                x = x1 + stream.sample_signed_jump(&mut rng);
                t_now += epoch;
            }
        }
        acc
    });
    Ok(merge_moments(&shards))
}

/// Empirical mean of X at Exp(r), for the Wald-identity smoke test
/// `E[X_{e_r}] = E[X_1] / r`.
pub fn endpoint_mean_estimate(model: &LevyModel, r: f64, cfg: &SimConfig) -> Result<Estimate> {
    let samples = sample_inf_and_endpoint(model, r, cfg)?;
    let mut acc = Moments::default();
    for (_, end) in samples {
        acc.push(end);
    }
    Ok(acc.estimate())
}

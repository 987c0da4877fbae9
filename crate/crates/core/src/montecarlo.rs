//! Monte Carlo replica of the heralded teleporter.
//!
//! Each trial draws Alice's outcomes `(x_m, y_m)` from their joint Gaussian
//! marginal, passes them through the filter with a uniform draw and, when
//! accepted, draws Bob's mode from its Gaussian conditional on `(x_m, y_m)`
//! and displaces it by `(φ_x x_m, φ_y y_m)`. Because the accepted outcomes
//! already carry the `g²` amplification, no extra gain is applied to them.
//!
//! Trials are split into fixed-size shards. Shard `k` draws Alice's outcomes
//! and the filter coins from ChaCha8 stream `2k` of the run seed and Bob's
//! noise from stream `2k + 1`. Shards are merged in index order, so a batch
//! is bit-identical for a given seed whatever the number of threads, and two
//! runs that differ only in `g` see the same outcomes and coins.

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::channel::{tv_to_taunu, ChannelParams};
use crate::error::{invalid, Error, Result};
use crate::mbnla::{filter_probability_norm_sqr, FilterSpec};
use crate::teleporter::{measurement_state, TeleporterConfig};

/// Trials per shard.
pub const DEFAULT_SHARD_SIZE: usize = 1 << 16;
/// Bootstrap resamples used for estimator errors.
pub const DEFAULT_RESAMPLES: usize = 200;
/// Accepted trials needed before a channel estimate is attempted.
pub const MIN_CHANNEL_SAMPLES: usize = 100;

/// Which per-trial records a batch keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RecordPolicy {
    /// Keep accepted trials only.
    #[default]
    AcceptedOnly,
    /// Keep every trial, including rejected ones.
    All,
}

/// Execution knobs that do not change the statistics of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub shard_size: usize,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
    pub records: RecordPolicy,
    pub resamples: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            shard_size: DEFAULT_SHARD_SIZE,
            threads: None,
            records: RecordPolicy::AcceptedOnly,
            resamples: DEFAULT_RESAMPLES,
        }
    }
}

/// One simulated trial. `out` holds Bob's `(X_out, Y_out)` when accepted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRecord {
    pub x_m: f64,
    pub y_m: f64,
    pub accepted: bool,
    pub out: Option<(f64, f64)>,
}

/// Count, means and unbiased variances of Alice's two outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MeasurementMoments {
    pub n: u64,
    pub mean: [f64; 2],
    pub var: [f64; 2],
}

/// Running moments, merged with Chan's pairwise update.
#[derive(Debug, Clone, Copy, Default)]
struct Running {
    n: u64,
    mean: [f64; 2],
    m2: [f64; 2],
}

impl Running {
    fn push(&mut self, v: [f64; 2]) {
        self.n += 1;
        let n = self.n as f64;
        for (q, x) in v.into_iter().enumerate() {
            let d = x - self.mean[q];
            self.mean[q] += d / n;
            self.m2[q] += d * (x - self.mean[q]);
        }
    }

    fn merge(&mut self, other: &Running) {
        if other.n == 0 {
            return;
        }
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        for q in 0..2 {
            let d = other.mean[q] - self.mean[q];
            self.mean[q] += d * nb / n;
            self.m2[q] += other.m2[q] + d * d * na * nb / n;
        }
        self.n += other.n;
    }

    fn moments(&self) -> MeasurementMoments {
        let denom = (self.n as f64 - 1.0).max(1.0);
        MeasurementMoments {
            n: self.n,
            mean: self.mean,
            var: [self.m2[0] / denom, self.m2[1] / denom],
        }
    }
}

/// A value and its bootstrap standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
}

/// Moments of the accepted outputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimates {
    pub mean_x: Estimate,
    pub mean_y: Estimate,
    pub var_x: Estimate,
    pub var_y: Estimate,
}

/// Channel figures estimated from the accepted outputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelEstimate {
    pub t_q: Estimate,
    pub v_q: Estimate,
    pub tau: Estimate,
    pub nu: Estimate,
}

impl ChannelEstimate {
    pub fn params(&self) -> Result<ChannelParams> {
        ChannelParams::new(self.tau.value, self.nu.value)
    }
}

/// Result of [`run_trials`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrialBatch {
    pub seed: u64,
    pub config: TeleporterConfig,
    pub filter: FilterSpec,
    pub n_requested: u64,
    pub n_accepted: u64,
    pub p_success_hat: f64,
    /// Moments of every draw of `(x_m, y_m)` before the filter.
    pub prefilter: MeasurementMoments,
    pub records: Vec<TrialRecord>,
    pub moments: Option<MomentEstimates>,
    pub channel: Option<ChannelEstimate>,
    pub warnings: Vec<String>,
}

impl TrialBatch {
    /// Moments of `(x_m, y_m)` over the accepted records.
    pub fn accepted_measurement_moments(&self) -> MeasurementMoments {
        let mut acc = Running::default();
        for r in self.records.iter().filter(|r| r.accepted) {
            acc.push([r.x_m, r.y_m]);
        }
        acc.moments()
    }

    /// Bob's accepted outputs.
    pub fn outputs(&self) -> Vec<(f64, f64)> {
        self.records.iter().filter_map(|r| r.out).collect()
    }

    /// Binomial standard error of [`TrialBatch::p_success_hat`].
    pub fn p_success_std_err(&self) -> f64 {
        let p = self.p_success_hat;
        (p * (1.0 - p) / self.n_requested as f64).sqrt()
    }
}

/// Precomputed sampling law for one configuration.
#[derive(Debug, Clone, Copy)]
struct Sampler {
    meas_mean: Vector2<f64>,
    meas_chol: Matrix2<f64>,
    inv_std: [f64; 2],
    bob_mean: Vector2<f64>,
    bob_gain: Matrix2<f64>,
    bob_chol: Matrix2<f64>,
    phi: [f64; 2],
    filter: FilterSpec,
}

fn cholesky2(m: Matrix2<f64>) -> Result<Matrix2<f64>> {
    m.cholesky().map(|c| c.l()).ok_or(Error::NotPositiveDefinite)
}

impl Sampler {
    fn new(cfg: &TeleporterConfig, filter: &FilterSpec) -> Result<Self> {
        let (mean, cov) = measurement_state(cfg)?;
        let block =
            |r: usize, c: usize| Matrix2::new(cov[(r, c)], cov[(r, c + 1)], cov[(r + 1, c)], cov[(r + 1, c + 1)]);
        let (aa, ba, bb) = (block(0, 0), block(2, 0), block(2, 2));
        let aa_inv = aa.try_inverse().ok_or(Error::NotPositiveDefinite)?;
        let gain = ba * aa_inv;
        let cond = bb - gain * ba.transpose();
        let cond = (cond + cond.transpose()) * 0.5;
        Ok(Self {
            meas_mean: Vector2::new(mean[0], mean[1]),
            meas_chol: cholesky2(aa)?,
            inv_std: [1.0 / aa[(0, 0)].sqrt(), 1.0 / aa[(1, 1)].sqrt()],
            bob_mean: Vector2::new(mean[2], mean[3]),
            bob_gain: gain,
            bob_chol: cholesky2(cond)?,
            phi: [cfg.phi_x, cfg.phi_y],
            filter: *filter,
        })
    }

    /// Standardized filter amplitude of an outcome.
    fn alpha(&self, m: &Vector2<f64>) -> Complex64 {
        Complex64::new(m[0] * self.inv_std[0], m[1] * self.inv_std[1])
    }

    fn run_shard(&self, seed: u64, shard: u64, count: usize, policy: RecordPolicy) -> ShardOut {
        // Bob's draws use their own stream so that acceptance decisions for
        // a given seed do not depend on how many earlier trials were accepted.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(2 * shard);
        let mut bob_rng = ChaCha8Rng::seed_from_u64(seed);
        bob_rng.set_stream(2 * shard + 1);
        let mut out = ShardOut::default();
        for _ in 0..count {
            let z = Vector2::new(
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
            );
            let m = self.meas_mean + self.meas_chol * z;
            let draw: f64 = rng.random();
            out.prefilter.push([m[0], m[1]]);
            let accepted = filter_probability_norm_sqr(&self.filter, self.alpha(&m).norm_sqr()) > draw;
            let bob = if accepted {
                out.n_accepted += 1;
                let w = Vector2::new(
                    bob_rng.sample::<f64, _>(StandardNormal),
                    bob_rng.sample::<f64, _>(StandardNormal),
                );
                let b = self.bob_mean + self.bob_gain * (m - self.meas_mean) + self.bob_chol * w;
                Some((b[0] + self.phi[0] * m[0], b[1] + self.phi[1] * m[1]))
            } else {
                None
            };
            if accepted || policy == RecordPolicy::All {
                out.records.push(TrialRecord {
                    x_m: m[0],
                    y_m: m[1],
                    accepted,
                    out: bob,
                });
            }
        }
        out
    }
}

#[derive(Debug, Default)]
struct ShardOut {
    n_accepted: u64,
    prefilter: Running,
    records: Vec<TrialRecord>,
}

/// Standardized source amplitude `α_m` seen by the filter for `cfg`.
pub fn source_alpha(cfg: &TeleporterConfig) -> Result<Complex64> {
    let (mean, cov) = measurement_state(cfg)?;
    Ok(Complex64::new(
        mean[0] / cov[(0, 0)].sqrt(),
        mean[1] / cov[(1, 1)].sqrt(),
    ))
}

/// Standard deviations of Alice's two measured quadratures.
pub fn measurement_std(cfg: &TeleporterConfig) -> Result<[f64; 2]> {
    let (_, cov) = measurement_state(cfg)?;
    Ok([cov[(0, 0)].sqrt(), cov[(1, 1)].sqrt()])
}

/// Runs `n` trials of the heralded teleporter.
pub fn run_trials(
    cfg: &TeleporterConfig,
    filter: &FilterSpec,
    n: u64,
    seed: u64,
    opts: &RunOptions,
) -> Result<TrialBatch> {
    if n == 0 {
        return Err(invalid("n", "at least one trial is required"));
    }
    if opts.shard_size == 0 {
        return Err(invalid("shard_size", "must be positive"));
    }
    filter.validate()?;
    if (cfg.g - filter.g).abs() > 1e-12 {
        log::warn!(
            "filter gain {} differs from configured gain {}; the filter gain is used",
            filter.g,
            cfg.g
        );
    }
    let sampler = Sampler::new(cfg, filter)?;
    let shard = opts.shard_size as u64;
    let n_shards = n.div_ceil(shard);
    let work = |k: u64| {
        let count = shard.min(n - k * shard) as usize;
        sampler.run_shard(seed, k, count, opts.records)
    };
    let shards: Vec<ShardOut> = match opts.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| invalid("threads", e.to_string()))?
            .install(|| (0..n_shards).into_par_iter().map(work).collect()),
        None => (0..n_shards).into_par_iter().map(work).collect(),
    };

    let mut prefilter = Running::default();
    let mut n_accepted = 0;
    let mut records = Vec::with_capacity(shards.iter().map(|s| s.records.len()).sum());
    for s in shards {
        prefilter.merge(&s.prefilter);
        n_accepted += s.n_accepted;
        records.extend(s.records);
    }

    let mut batch = TrialBatch {
        seed,
        config: *cfg,
        filter: *filter,
        n_requested: n,
        n_accepted,
        p_success_hat: n_accepted as f64 / n as f64,
        prefilter: prefilter.moments(),
        records,
        moments: None,
        channel: None,
        warnings: Vec::new(),
    };
    if n_accepted == 0 {
        log::warn!("no trials accepted out of {n}");
        batch.warnings.push("no accepted trials".into());
        return Ok(batch);
    }
    let outputs = batch.outputs();
    if outputs.len() >= 2 {
        let est = estimate(&outputs, cfg, opts.resamples, seed)?;
        batch.moments = Some(est.moments);
        if outputs.len() >= MIN_CHANNEL_SAMPLES {
            match est.channel {
                Ok(c) => batch.channel = Some(c),
                Err(e) => batch.warnings.push(format!("channel estimate unavailable: {e}")),
            }
        } else {
            batch
                .warnings
                .push(format!("only {} accepted trials; channel not estimated", outputs.len()));
        }
    } else {
        batch
            .warnings
            .push("fewer than 2 accepted trials; no estimators".into());
    }
    Ok(batch)
}

/// Channel parameters of a batch with bootstrap errors. When `cfg` differs
/// from the configuration of the run, the input moments of `cfg` are used.
pub fn estimate_channel(batch: &TrialBatch, cfg: &TeleporterConfig) -> Result<ChannelEstimate> {
    let outputs = batch.outputs();
    if outputs.len() < MIN_CHANNEL_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: MIN_CHANNEL_SAMPLES,
            got: outputs.len(),
        });
    }
    if *cfg == batch.config {
        if let Some(c) = batch.channel {
            return Ok(c);
        }
    }
    estimate(&outputs, cfg, DEFAULT_RESAMPLES, batch.seed)?.channel
}

struct Estimated {
    moments: MomentEstimates,
    channel: Result<ChannelEstimate>,
}

const N_STATS: usize = 8;

fn statistics(sample: &[(f64, f64)], cfg: &TeleporterConfig) -> [f64; N_STATS] {
    let n = sample.len() as f64;
    let (mut sx, mut sy) = (0.0, 0.0);
    for &(x, y) in sample {
        sx += x;
        sy += y;
    }
    let (mx, my) = (sx / n, sy / n);
    let (mut vx, mut vy) = (0.0, 0.0);
    for &(x, y) in sample {
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
    }
    let denom = (n - 1.0).max(1.0);
    let (vx, vy) = (vx / denom, vy / denom);
    let [ix, iy] = cfg.input_mean;
    let [vix, viy] = cfg.input_var;
    let (gx, gy) = (mx / ix, my / iy);
    let t_q = gx * gx * vix / vx + gy * gy * viy / vy;
    let cx = vx - gx * gx * vix;
    let cy = vy - gy * gy * viy;
    let v_q = cx * cy;
    let (tau, nu) = if cx >= 0.0 && cy >= 0.0 {
        tv_to_taunu(t_q, v_q).map_or((f64::NAN, f64::NAN), |p| (p.tau, p.nu))
    } else {
        (f64::NAN, f64::NAN)
    };
    [mx, my, vx, vy, t_q, v_q, tau, nu]
}

fn estimate(outputs: &[(f64, f64)], cfg: &TeleporterConfig, resamples: usize, seed: u64) -> Result<Estimated> {
    let est = bootstrap_many(outputs, |s| statistics(s, cfg), resamples, seed)?;
    let moments = MomentEstimates {
        mean_x: est[0],
        mean_y: est[1],
        var_x: est[2],
        var_y: est[3],
    };
    let channel = if cfg.input_mean.contains(&0.0) {
        Err(Error::UndefinedSnr)
    } else if !(est[6].value.is_finite() && est[7].value.is_finite()) {
        Err(Error::ChannelMap(format!(
            "empirical T_q = {:.4}, V_q = {:.4} have no (τ, ν) image",
            est[4].value, est[5].value
        )))
    } else {
        Ok(ChannelEstimate {
            t_q: est[4],
            v_q: est[5],
            tau: est[6],
            nu: est[7],
        })
    };
    Ok(Estimated { moments, channel })
}

fn resample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5DEE_CE66_D1B0_075A);
    rng.set_stream(index as u64);
    rng
}

fn std_dev(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.filter(|x| x.is_finite()).collect();
    if v.len() < 2 {
        return f64::NAN;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

fn bootstrap_many<T, F, const K: usize>(
    values: &[T],
    statistic: F,
    resamples: usize,
    seed: u64,
) -> Result<[Estimate; K]>
where
    T: Copy + Send + Sync,
    F: Fn(&[T]) -> [f64; K] + Sync,
{
    if values.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: values.len(),
        });
    }
    if resamples < 2 {
        return Err(invalid("resamples", "at least 2 resamples are required"));
    }
    let full = statistic(values);
    let stats: Vec<[f64; K]> = (0..resamples)
        .into_par_iter()
        .map(|i| {
            let mut rng = resample_rng(seed, i);
            let n = values.len();
            let sample: Vec<T> = (0..n).map(|_| values[rng.random_range(0..n)]).collect();
            statistic(&sample)
        })
        .collect();
    Ok(std::array::from_fn(|k| Estimate {
        value: full[k],
        std_err: std_dev(stats.iter().map(|s| s[k])),
    }))
}

/// Nonparametric bootstrap of a scalar statistic.
pub fn bootstrap<T, F>(values: &[T], statistic: F, resamples: usize, seed: u64) -> Result<Estimate>
where
    T: Copy + Send + Sync,
    F: Fn(&[T]) -> f64 + Sync,
{
    if values.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    if values.len() == 1 {
        return Ok(Estimate {
            value: statistic(values),
            std_err: 0.0,
        });
    }
    let [e] = bootstrap_many(values, |s| [statistic(s)], resamples, seed)?;
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    fn mean(v: &[f64]) -> f64 {
        v.iter().sum::<f64>() / v.len() as f64
    }

    #[test]
    fn bootstrap_of_constant_has_zero_error() {
        let e = bootstrap(&[2.5; 50], mean, 100, 1).unwrap();
        assert_eq!(e.value, 2.5);
        assert_eq!(e.std_err, 0.0);
        assert!(bootstrap::<f64, _>(&[], mean, 100, 1).is_err());
    }

    #[test]
    fn bootstrap_mean_error_follows_clt() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v: Vec<f64> = (0..10_000).map(|_| rng.sample(StandardNormal)).collect();
        let e = bootstrap(&v, mean, 200, 3).unwrap();
        assert!((e.std_err - 0.01).abs() < 0.003, "{}", e.std_err);
        assert_eq!(e, bootstrap(&v, mean, 200, 3).unwrap());
    }

    #[test]
    fn classical_run_matches_analytic() {
        let cfg = TeleporterConfig::unity_gain(0.0, [1.5, -0.5]);
        let filter = FilterSpec::new(1.0, 6.0).unwrap();
        let batch = run_trials(&cfg, &filter, 200_000, 11, &RunOptions::default()).unwrap();
        assert_eq!(batch.n_accepted, 200_000);
        let m = batch.moments.unwrap();
        assert!((m.mean_x.value - 1.5).abs() < 4.0 * m.mean_x.std_err);
        assert!((m.var_x.value - 3.0).abs() < 4.0 * m.var_x.std_err);
        let c = batch.channel.unwrap();
        assert!((c.tau.value - 1.0).abs() < 4.0 * c.tau.std_err);
        assert!((c.nu.value - 2.0).abs() < 4.0 * c.nu.std_err);
    }

    #[test]
    fn zero_acceptance_reports_without_estimators() {
        let cfg = TeleporterConfig::unity_gain(0.3, [1.0, 1.0]).with_gain(50.0);
        let filter = FilterSpec::new(50.0, 12.0).unwrap();
        let batch = run_trials(&cfg, &filter, 1000, 5, &RunOptions::default()).unwrap();
        assert_eq!(batch.n_accepted, 0);
        assert!(batch.moments.is_none() && batch.channel.is_none());
        assert!(!batch.warnings.is_empty());
        assert!(matches!(
            estimate_channel(&batch, &cfg),
            Err(Error::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn shard_layout_does_not_depend_on_threads() {
        let cfg = TeleporterConfig::unity_gain(0.4, [1.0, 0.5])
            .with_gain(1.2)
            .with_phi(SQRT_2);
        let filter = FilterSpec::new(1.2, 5.0).unwrap();
        let opts = |t| RunOptions {
            shard_size: 1000,
            threads: Some(t),
            ..RunOptions::default()
        };
        let a = run_trials(&cfg, &filter, 25_500, 77, &opts(1)).unwrap();
        let b = run_trials(&cfg, &filter, 25_500, 77, &opts(3)).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }

    #[test]
    fn record_policy() {
        let cfg = TeleporterConfig::unity_gain(0.4, [1.0, 0.5]).with_gain(1.5);
        let filter = FilterSpec::new(1.5, 4.0).unwrap();
        let all = RunOptions {
            records: RecordPolicy::All,
            ..RunOptions::default()
        };
        let a = run_trials(&cfg, &filter, 5000, 1, &all).unwrap();
        assert_eq!(a.records.len(), 5000);
        let b = run_trials(&cfg, &filter, 5000, 1, &RunOptions::default()).unwrap();
        assert_eq!(b.records.len() as u64, b.n_accepted);
        assert_eq!(a.n_accepted, b.n_accepted);
        assert!(a.n_accepted <= a.n_requested);
    }
}

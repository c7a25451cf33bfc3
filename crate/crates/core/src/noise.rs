//! Photon-counting model of the K-way detector split.
//!
//! One output port carrying `Î·n̄` expected photons is divided into K equal
//! ports. Each port registers an independent Poisson count with mean
//! `Î·n̄/K`, and the product of the K unit-normalized counts is an unbiased
//! estimator of `Î^K`.
//!
//! Random streams are keyed by `(seed, phase index, trial index)`: ChaCha8
//! stream id = phase index, word offset = `trial << 32`. Results do not depend
//! on how work is scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fringe::{normalized_unchecked, FringeCurve, FringeParams, PhaseGrid};
use crate::kpower::{fwhm_grid, KPowerSpec};

pub const BOOTSTRAP_RESAMPLES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseConfig {
    mean_photons: f64,
    trials: usize,
    seed: u64,
    split_k: u32,
}

impl NoiseConfig {
    pub fn new(mean_photons: f64, trials: usize, seed: u64, split_k: u32) -> Result<Self> {
        if !mean_photons.is_finite() || mean_photons < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "mean photon number must be finite and >= 0, got {mean_photons}"
            )));
        }
        if trials == 0 {
            return Err(Error::InvalidParameter("trials must be >= 1".into()));
        }
        KPowerSpec::new(split_k)?;
        Ok(Self {
            mean_photons,
            trials,
            seed,
            split_k,
        })
    }

    pub fn mean_photons(&self) -> f64 {
        self.mean_photons
    }

    pub fn trials(&self) -> usize {
        self.trials
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn split_k(&self) -> u32 {
        self.split_k
    }

    pub fn with_split(self, split_k: u32) -> Result<Self> {
        Self::new(self.mean_photons, self.trials, self.seed, split_k)
    }

    /// Expected count on one of the K ports for normalized intensity `Î`.
    pub fn port_mean(&self, intensity: f64) -> f64 {
        intensity * self.mean_photons / f64::from(self.split_k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleResult {
    pub grid: PhaseGrid,
    pub mean_curve: Vec<f64>,
    pub stderr_curve: Vec<f64>,
    pub trials_used: usize,
}

impl EnsembleResult {
    pub fn mean_as_curve(&self) -> Result<FringeCurve> {
        FringeCurve::new(self.grid, self.mean_curve.clone(), false)
    }
}

/// One Poisson draw with the given mean.
pub fn sample_poisson<R: Rng + ?Sized>(expected: f64, rng: &mut R) -> Result<u64> {
    if !expected.is_finite() || expected < 0.0 {
        return Err(Error::Domain(format!(
            "Poisson mean must be finite and >= 0, got {expected}"
        )));
    }
    if expected == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(expected)
        .map_err(|e| Error::Domain(format!("Poisson mean {expected}: {e}")))?;
    Ok(dist.sample(rng) as u64)
}

/// K port counts for one exposure at normalized intensity `intensity`.
pub fn split_detect<R: Rng + ?Sized>(
    intensity: f64,
    cfg: &NoiseConfig,
    rng: &mut R,
) -> Result<Vec<u64>> {
    if !(0.0..=1.0).contains(&intensity) {
        return Err(Error::Contract(format!(
            "normalized intensity must lie in [0, 1], got {intensity}"
        )));
    }
    let mean = cfg.port_mean(intensity);
    (0..cfg.split_k).map(|_| sample_poisson(mean, rng)).collect()
}

/// `∏ cᵢ / (n̄/K)`, unbiased for `Î^K`.
pub fn product_estimator(counts: &[u64], cfg: &NoiseConfig) -> Result<f64> {
    if cfg.mean_photons == 0.0 {
        return Err(Error::UndefinedEstimator(
            "mean photon number is zero".into(),
        ));
    }
    if counts.len() != cfg.split_k as usize {
        return Err(Error::Contract(format!(
            "expected {} port counts, got {}",
            cfg.split_k,
            counts.len()
        )));
    }
    let unit = cfg.port_mean(1.0);
    Ok(counts.iter().map(|&c| c as f64 / unit).product())
}

fn trial_stream(seed: u64, phase_index: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(phase_index as u64);
    rng.set_word_pos((trial as u128) << 32);
    rng
}

/// Product estimates for every trial at one phase point.
fn phase_estimates(
    params: &FringeParams,
    grid: &PhaseGrid,
    phase_index: usize,
    cfg: &NoiseConfig,
) -> Result<Vec<f64>> {
    let intensity = normalized_unchecked(params, grid.point(phase_index));
    (0..cfg.trials)
        .map(|t| {
            let mut rng = trial_stream(cfg.seed, phase_index, t);
            let counts = split_detect(intensity, cfg, &mut rng)?;
            product_estimator(&counts, cfg)
        })
        .collect()
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Monte Carlo fringe: per grid point, `trials` product estimates reduced to
/// mean and standard error. Bit-reproducible from the seed.
pub fn ensemble_fringe(
    params: &FringeParams,
    grid: &PhaseGrid,
    cfg: &NoiseConfig,
) -> Result<EnsembleResult> {
    if cfg.mean_photons == 0.0 {
        return Err(Error::UndefinedEstimator(
            "mean photon number is zero".into(),
        ));
    }
    let stats: Vec<(f64, f64)> = (0..grid.len())
        .into_par_iter()
        .map(|i| phase_estimates(params, grid, i, cfg).map(|xs| mean_and_stderr(&xs)))
        .collect::<Result<_>>()?;
    let (mean_curve, stderr_curve) = stats.into_iter().unzip();
    Ok(EnsembleResult {
        grid: *grid,
        mean_curve,
        stderr_curve,
        trials_used: cfg.trials,
    })
}

/// Per-trial estimate curves, laid out trial-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialMatrix {
    grid: PhaseGrid,
    rows: Vec<Vec<f64>>,
}

impl TrialMatrix {
    pub fn from_rows(grid: PhaseGrid, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() || rows.iter().any(|r| r.len() != grid.len()) {
            return Err(Error::InvalidParameter(
                "trial rows must be non-empty and match the grid length".into(),
            ));
        }
        Ok(Self { grid, rows })
    }

    pub fn simulate(params: &FringeParams, grid: &PhaseGrid, cfg: &NoiseConfig) -> Result<Self> {
        if cfg.mean_photons == 0.0 {
            return Err(Error::UndefinedEstimator(
                "mean photon number is zero".into(),
            ));
        }
        let by_phase: Vec<Vec<f64>> = (0..grid.len())
            .into_par_iter()
            .map(|i| phase_estimates(params, grid, i, cfg))
            .collect::<Result<_>>()?;
        let rows = (0..cfg.trials)
            .map(|t| by_phase.iter().map(|col| col[t]).collect())
            .collect();
        Ok(Self { grid: *grid, rows })
    }

    pub fn trials(&self) -> usize {
        self.rows.len()
    }

    fn mean_of(&self, picks: impl Iterator<Item = usize>) -> Vec<f64> {
        let mut acc = vec![0.0; self.grid.len()];
        let mut count = 0usize;
        for t in picks {
            for (a, v) in acc.iter_mut().zip(&self.rows[t]) {
                *a += v;
            }
            count += 1;
        }
        acc.iter_mut().for_each(|a| *a /= count as f64);
        acc
    }

    pub fn mean_curve(&self) -> Result<FringeCurve> {
        FringeCurve::new(self.grid, self.mean_of(0..self.trials()), false)
    }

    /// FWHM of the trial-mean curve and its bootstrap standard error.
    pub fn bootstrap_width(&self, resamples: usize, seed: u64) -> Result<(f64, f64)> {
        let width = fwhm_grid(&self.mean_curve()?)?.fwhm;
        let n = self.trials();
        let widths: Vec<f64> = (0..resamples)
            .into_par_iter()
            .map(|b| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(u64::MAX);
                rng.set_word_pos((b as u128) << 32);
                let picks: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                let curve = FringeCurve::new(self.grid, self.mean_of(picks.into_iter()), false)?;
                Ok(fwhm_grid(&curve)?.fwhm)
            })
            .collect::<Result<_>>()?;
        let m = widths.iter().sum::<f64>() / resamples as f64;
        let se = if resamples > 1 {
            (widths.iter().map(|w| (w - m).powi(2)).sum::<f64>() / (resamples - 1) as f64).sqrt()
        } else {
            0.0
        };
        Ok((width, se))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WidthScalingRow {
    pub k: u32,
    pub empirical_fwhm: f64,
    pub fwhm_stderr: f64,
}

/// Empirical FWHM of the ensemble fringe for each split order K, with
/// bootstrap standard errors over trials.
pub fn width_error_scaling(
    params: &FringeParams,
    grid: &PhaseGrid,
    cfg: &NoiseConfig,
    k_list: &[u32],
) -> Result<Vec<WidthScalingRow>> {
    if k_list.is_empty() {
        return Err(Error::InvalidParameter("K list must be non-empty".into()));
    }
    k_list
        .iter()
        .map(|&k| {
            let cfg_k = cfg.with_split(k)?;
            let m = TrialMatrix::simulate(params, grid, &cfg_k)?;
            let (w, se) = m.bootstrap_width(BOOTSTRAP_RESAMPLES, cfg.seed ^ u64::from(k))?;
            Ok(WidthScalingRow {
                k,
                empirical_fwhm: w,
                fwhm_stderr: se,
            })
        })
        .collect()
}

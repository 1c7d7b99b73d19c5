//! Market simulator: latent jump-diffusion, irregular sampling, noise and
//! price rounding, with the latent quantities kept as ground truth.

mod config;
mod latent;
mod noise;
mod sampling;

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use config::{GModel, NoiseKind, SimConfig};
pub use latent::{draw_sigma0_sq, simulate_latent, Jump, LatentPath, SIGMA2_FLOOR};
pub use noise::{fractional_ma_coeffs, make_noise, ushape_weight, NoiseDraw};
pub use sampling::{intensity, sample_times};

use crate::error::Result;
use crate::sum::{csum, CompensatedSum};
use crate::ticks::{TickSeries, SECONDS_PER_DAY, YEARS_PER_SECOND};

#[derive(Debug, Clone)]
pub struct SimTruth {
    /// `∫σ²dt` over the window (left Riemann sum on the fine grid).
    pub iv: f64,
    /// `∫σ⁴dt` over the window.
    pub iq: f64,
    /// Quadratic variation of `g` along the observation times.
    pub gg: f64,
    /// Sum of squared price jumps; part of the quadratic variation of `X`.
    pub jump_qv: f64,
    pub iv_per_day: Vec<f64>,
    /// Conditional noise variance at every observation.
    pub g_path: Vec<f64>,
    /// Latent variance at every observation (previous tick).
    pub sigma2_at_obs: Vec<f64>,
    /// `∫_0^{i·dt} σ²ds` for every fine-grid second `i`.
    pub cum_iv: Vec<f64>,
    pub price_jumps: Vec<Jump>,
    pub vol_jumps: Vec<Jump>,
}

impl SimTruth {
    /// `∫σ²dt` between two observation times (years), matching what the
    /// previous-tick observations of `X` can see.
    pub fn iv_between(&self, t0: f64, t1: f64) -> f64 {
        let idx = |t: f64| ((t / YEARS_PER_SECOND + 1e-6).floor() as usize).min(self.cum_iv.len() - 1);
        self.cum_iv[idx(t1)] - self.cum_iv[idx(t0)]
    }

    /// Writes the `key=value` truth sidecar.
    pub fn write_sidecar<W: Write>(&self, mut sink: W) -> Result<()> {
        writeln!(sink, "iv={:.17e}", self.iv)?;
        writeln!(sink, "iq={:.17e}", self.iq)?;
        writeln!(sink, "gg={:.17e}", self.gg)?;
        writeln!(sink, "jump_qv={:.17e}", self.jump_qv)?;
        writeln!(sink, "price_jumps={}", self.price_jumps.len())?;
        writeln!(sink, "vol_jumps={}", self.vol_jumps.len())?;
        for (d, v) in self.iv_per_day.iter().enumerate() {
            writeln!(sink, "iv_day{}={:.17e}", d + 1, v)?;
        }
        Ok(())
    }
}

/// `⌊(x + ε)/α⌋·α`, or `x + ε` with rounding off.
pub fn observe(x: &[f64], eps: &[f64], alpha_round: f64, rounding: bool) -> Vec<f64> {
    x.iter()
        .zip(eps)
        .map(|(&x, &e)| {
            let y = x + e;
            if rounding {
                (y / alpha_round).floor() * alpha_round
            } else {
                y
            }
        })
        .collect()
}

/// Full pipeline: latent path, sampling times (the window start plus every
/// arrival), previous-tick `X`, noise, rounding.
pub fn simulate_observed<R: rand::Rng + ?Sized>(
    config: &SimConfig,
    rng: &mut R,
) -> Result<(TickSeries, SimTruth)> {
    let latent = simulate_latent(config, rng)?;
    let mut seconds = vec![0.0];
    for day in 0..config.days {
        seconds.extend(sample_times(config, rng, day));
    }
    let draw = make_noise(config, rng, &seconds, &latent)?;

    let fine: Vec<usize> = seconds.iter().map(|&t| noise::fine_index(t, &latent)).collect();
    let x_obs: Vec<f64> = fine.iter().map(|&i| latent.x[i]).collect();
    let prices = observe(&x_obs, &draw.eps, config.alpha_round, config.rounding);
    let times: Vec<f64> = seconds.iter().map(|&s| s * YEARS_PER_SECOND).collect();
    let series = TickSeries::new(times, prices)?;

    let dt = latent.dt;
    let mut cum_iv = Vec::with_capacity(latent.sigma2.len());
    let mut acc = CompensatedSum::new();
    cum_iv.push(0.0);
    for &s2 in &latent.sigma2[..latent.steps()] {
        acc += s2 * dt;
        cum_iv.push(acc.value());
    }
    let per_day = SECONDS_PER_DAY as usize;
    let iv_per_day = (0..config.days)
        .map(|d| cum_iv[(d + 1) * per_day] - cum_iv[d * per_day])
        .collect();
    let truth = SimTruth {
        iv: cum_iv[latent.steps()],
        iq: csum(latent.sigma2[..latent.steps()].iter().map(|v| v * v * dt)),
        gg: csum(draw.g_path.windows(2).map(|w| (w[1] - w[0]).powi(2))),
        jump_qv: csum(latent.price_jumps.iter().map(|j| j.size * j.size)),
        iv_per_day,
        g_path: draw.g_path,
        sigma2_at_obs: fine.iter().map(|&i| latent.sigma2[i]).collect(),
        cum_iv,
        price_jumps: latent.price_jumps,
        vol_jumps: latent.vol_jumps,
    };
    Ok((series, truth))
}

/// Seed of path `index` under `base_seed`.
pub fn path_seed(base_seed: u64, index: u64) -> u64 {
    base_seed ^ index
}

/// Path `index` of a Monte Carlo study, on its own ChaCha8 stream.
pub fn simulate_path(config: &SimConfig, index: u64) -> Result<(TickSeries, SimTruth)> {
    let mut rng = ChaCha8Rng::seed_from_u64(path_seed(config.seed, index));
    simulate_observed(config, &mut rng)
}

/// Runs `f` on paths `0..reps` in parallel; results come back in path order.
pub fn map_paths<T, F>(config: &SimConfig, reps: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, TickSeries, SimTruth) -> Result<T> + Sync,
{
    (0..reps as u64)
        .into_par_iter()
        .map(|i| {
            let (series, truth) = simulate_path(config, i)?;
            f(i, series, truth)
        })
        .collect()
}

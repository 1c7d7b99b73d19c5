//! Jump-diffusion log-price with square-root stochastic variance, stepped
//! by Euler–Maruyama on a one-second grid.

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, Normal, StandardNormal};

use super::config::SimConfig;
use crate::error::{Error, Result};
use crate::ticks::{DAYS_PER_YEAR, SECONDS_PER_DAY, YEARS_PER_SECOND};

/// Variance is reflected back above this level after every step.
pub const SIGMA2_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    /// Jump time in years from the window start.
    pub time: f64,
    pub size: f64,
}

#[derive(Debug, Clone)]
pub struct LatentPath {
    /// `X` at every fine-grid second `0..=N`.
    pub x: Vec<f64>,
    /// `σ²` at every fine-grid second `0..=N`.
    pub sigma2: Vec<f64>,
    /// Fine step in years.
    pub dt: f64,
    pub price_jumps: Vec<Jump>,
    pub vol_jumps: Vec<Jump>,
}

impl LatentPath {
    pub fn steps(&self) -> usize {
        self.x.len() - 1
    }
}

/// Draw from the CIR stationary law `Gamma(2κσ̄²/δ², δ²/(2κ))`, or the
/// configured override. With `δ = 0` or `κ = 0` the law is degenerate at σ̄².
pub fn draw_sigma0_sq<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> Result<f64> {
    if let Some(v) = config.sigma0_sq {
        return Ok(v);
    }
    if config.delta == 0.0 || config.kappa == 0.0 || config.sigma_bar2 == 0.0 {
        return Ok(config.sigma_bar2);
    }
    let d2 = config.delta * config.delta;
    let shape = 2.0 * config.kappa * config.sigma_bar2 / d2;
    let scale = d2 / (2.0 * config.kappa);
    let gamma = Gamma::new(shape, scale)
        .map_err(|e| Error::InvalidConfig(format!("CIR stationary law: {e}")))?;
    Ok(gamma.sample(rng))
}

/// Poisson arrival times (years) on `[0, horizon)` at `rate` per year.
fn poisson_times<R: Rng + ?Sized>(rate: f64, horizon: f64, rng: &mut R) -> Vec<f64> {
    let mut times = Vec::new();
    if rate <= 0.0 {
        return times;
    }
    let exp = Exp::new(rate).expect("positive rate");
    let mut t = exp.sample(rng);
    while t < horizon {
        times.push(t);
        t += exp.sample(rng);
    }
    times
}

fn reflect(v: f64) -> f64 {
    if v < SIGMA2_FLOOR {
        (2.0 * SIGMA2_FLOOR - v).max(SIGMA2_FLOOR)
    } else {
        v
    }
}

pub fn simulate_latent<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> Result<LatentPath> {
    config.validate()?;
    let steps = config.days * SECONDS_PER_DAY as usize;
    let dt = YEARS_PER_SECOND;
    let horizon = config.days as f64 / DAYS_PER_YEAR;
    let sqrt_dt = dt.sqrt();

    let x_jump_times = poisson_times(config.lambda_x, horizon, rng);
    let v_jump_times = poisson_times(config.lambda_v, horizon, rng);
    let x_size = Normal::new(config.theta_x, config.nu_x)
        .map_err(|e| Error::InvalidConfig(format!("price jump law: {e}")))?;
    let v_log = Normal::new(config.theta_v, config.nu_v)
        .map_err(|e| Error::InvalidConfig(format!("vol jump law: {e}")))?;
    let price_jumps: Vec<Jump> = x_jump_times
        .iter()
        .map(|&time| Jump { time, size: x_size.sample(rng) })
        .collect();
    // Multiplied by σ_{t−} when applied.
    let vol_factors: Vec<(f64, f64)> = v_jump_times
        .iter()
        .map(|&time| (time, v_log.sample(rng).exp()))
        .collect();

    // A jump in ((i−1)dt, i·dt] lands on grid value i.
    let landing = |t: f64| ((t / dt).floor() as usize + 1).min(steps);

    let mut x = Vec::with_capacity(steps + 1);
    let mut sigma2 = Vec::with_capacity(steps + 1);
    x.push(config.x0);
    sigma2.push(reflect(draw_sigma0_sq(config, rng)?));

    let rho_perp = (1.0 - config.rho * config.rho).max(0.0).sqrt();
    let mut next_x = price_jumps.iter().peekable();
    let mut next_v = vol_factors.iter().peekable();
    let mut vol_jumps = Vec::with_capacity(vol_factors.len());
    for i in 1..=steps {
        let s2 = sigma2[i - 1];
        let s = s2.sqrt();
        let zw: f64 = StandardNormal.sample(rng);
        let zp: f64 = StandardNormal.sample(rng);
        let zb = config.rho * zw + rho_perp * zp;
        let mut xi = x[i - 1] + config.mu * dt + s * sqrt_dt * zw;
        let mut vi = reflect(
            s2 + config.kappa * (config.sigma_bar2 - s2) * dt + config.delta * s * sqrt_dt * zb,
        );
        while let Some(j) = next_x.next_if(|j| landing(j.time) == i) {
            xi += j.size;
        }
        while let Some(&(time, factor)) = next_v.next_if(|(t, _)| landing(*t) == i) {
            let size = vi.sqrt() * factor;
            vi += size;
            vol_jumps.push(Jump { time, size });
        }
        x.push(xi);
        sigma2.push(vi);
    }

    Ok(LatentPath { x, sigma2, dt, price_jumps, vol_jumps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn deterministic_limit_relaxes_exponentially() {
        let config = SimConfig {
            delta: 0.0,
            lambda_x: 0.0,
            lambda_v: 0.0,
            mu: 0.0,
            sigma0_sq: Some(0.04),
            days: 2,
            ..SimConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let path = simulate_latent(&config, &mut rng).unwrap();
        for (i, &v) in path.sigma2.iter().enumerate().step_by(997) {
            let t = i as f64 * path.dt;
            let exact = 0.16 + (0.04 - 0.16) * (-config.kappa * t).exp();
            assert!((v - exact).abs() < 1e-6, "i={i}");
        }
        assert!(path.price_jumps.is_empty() && path.vol_jumps.is_empty());
    }

    #[test]
    fn stays_above_floor_without_nan() {
        let config = SimConfig { delta: 3.0, sigma0_sq: Some(1e-6), ..SimConfig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let path = simulate_latent(&config, &mut rng).unwrap();
        assert!(path.sigma2.iter().all(|&v| v >= SIGMA2_FLOOR && v.is_finite()));
        assert!(path.x.iter().all(|v| v.is_finite()));
        assert_eq!(path.steps(), 23_400);
    }

    #[test]
    fn initial_variance_has_stationary_mean() {
        let config = SimConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 10_000;
        let mean = (0..n).map(|_| draw_sigma0_sq(&config, &mut rng).unwrap()).sum::<f64>() / n as f64;
        assert!((mean / 0.16 - 1.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn jumps_are_applied_at_their_step() {
        let config = SimConfig { lambda_x: 2520.0, days: 1, ..SimConfig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let path = simulate_latent(&config, &mut rng).unwrap();
        assert!(!path.price_jumps.is_empty());
        let j = path.price_jumps[0];
        let i = (j.time / path.dt).floor() as usize + 1;
        // Diffusive step is O(σ√dt) ≈ 1.6e-4; the jump is O(1e-3).
        let step = path.x[i] - path.x[i - 1];
        assert!((step - j.size).abs() < 2e-3);
    }
}

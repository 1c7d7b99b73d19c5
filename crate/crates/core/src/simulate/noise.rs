//! Microstructure noise: iid Gaussian, U-curve fractional MA, and
//! Gaussian noise with an exogenous variance path `g`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::config::{GModel, NoiseKind, SimConfig};
use super::latent::LatentPath;
use crate::error::{Error, Result};
use crate::sum::cmean;
use crate::ticks::SECONDS_PER_DAY;

/// `ψ_1..ψ_M` of the fractional MA filter, `ψ_j = ψ_{j−1}(u+j−1)/j`,
/// `ψ_0 = 1`.
pub fn fractional_ma_coeffs(u: f64, m: usize) -> Result<Vec<f64>> {
    if !(u > -0.5 && u < 0.5) {
        return Err(Error::InvalidU(u));
    }
    let mut psi = Vec::with_capacity(m);
    let mut prev = 1.0;
    for j in 1..=m {
        prev *= (u + j as f64 - 1.0) / j as f64;
        psi.push(prev);
    }
    Ok(psi)
}

/// U-curve weight `(60/17)·[(x − 0.5)² + 0.2]`; averages to one over `[0,1]`.
pub fn ushape_weight(x: f64) -> f64 {
    60.0 / 17.0 * ((x - 0.5).powi(2) + 0.2)
}

#[derive(Debug, Clone)]
pub struct NoiseDraw {
    pub eps: Vec<f64>,
    /// Conditional noise variance at every observation.
    pub g_path: Vec<f64>,
}

/// Noise at observation times `times` (seconds from the window start).
pub fn make_noise<R: Rng + ?Sized>(
    config: &SimConfig,
    rng: &mut R,
    times: &[f64],
    latent: &LatentPath,
) -> Result<NoiseDraw> {
    match config.noise {
        NoiseKind::Stationary => {
            let g = config.a0 * config.a0;
            let eps = times
                .iter()
                .map(|_| config.a0 * std_normal(rng))
                .collect();
            Ok(NoiseDraw { eps, g_path: vec![g; times.len()] })
        }
        NoiseKind::UShape => ushape_noise(config, rng, times, latent),
        NoiseKind::CustomG => {
            let g_fine = g_fine_path(config, rng, latent);
            let g_path: Vec<f64> = times.iter().map(|&t| g_fine[fine_index(t, latent)]).collect();
            let eps = g_path
                .iter()
                .map(|&g| g.sqrt() * std_normal(rng))
                .collect();
            Ok(NoiseDraw { eps, g_path })
        }
    }
}

fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Previous-tick index on the one-second grid.
pub(crate) fn fine_index(t_seconds: f64, latent: &LatentPath) -> usize {
    (t_seconds.floor() as usize).min(latent.steps())
}

fn ushape_noise<R: Rng + ?Sized>(
    config: &SimConfig,
    rng: &mut R,
    times: &[f64],
    latent: &LatentPath,
) -> Result<NoiseDraw> {
    let psi = fractional_ma_coeffs(config.u, config.m)?;
    let inflation = 1.0 + psi.iter().map(|p| p * p).sum::<f64>();
    let per_day = SECONDS_PER_DAY as usize;
    let mut eps = Vec::with_capacity(times.len());
    let mut g_path = Vec::with_capacity(times.len());
    let mut start = 0;
    while start < times.len() {
        let day = (times[start] / SECONDS_PER_DAY).floor() as usize;
        let end = start + times[start..].partition_point(|&t| ((t / SECONDS_PER_DAY).floor() as usize) == day);
        let count = end - start;

        let lo = day * per_day;
        let hi = ((day + 1) * per_day).min(latent.steps());
        let mean_s4 = cmean(latent.sigma2[lo..=hi].iter().map(|v| v * v));
        let omega2 = config.a1 * mean_s4.sqrt();
        let omega = omega2.sqrt();

        // M pre-sample innovations so every e_i has the full filter.
        let z: Vec<f64> = (0..count + config.m)
            .map(|_| omega * std_normal(rng))
            .collect();
        for p in 0..count {
            let i = p + config.m;
            let e = z[i] + psi.iter().enumerate().map(|(j, c)| c * z[i - j - 1]).sum::<f64>();
            let w = ushape_weight((p + 1) as f64 / count as f64);
            eps.push(w.sqrt() * e);
            g_path.push(w * omega2 * inflation);
        }
        start = end;
    }
    Ok(NoiseDraw { eps, g_path })
}

/// `g` on the fine grid for the custom model.
fn g_fine_path<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R, latent: &LatentPath) -> Vec<f64> {
    let n = latent.steps();
    let dt = latent.dt;
    match config.g_model {
        GModel::Ito { level, drift, vol } => {
            let mut g = Vec::with_capacity(n + 1);
            g.push(level);
            let step_drift = (drift - 0.5 * vol * vol) * dt;
            let step_vol = vol * dt.sqrt();
            for i in 1..=n {
                let z: f64 = StandardNormal.sample(rng);
                g.push(g[i - 1] * (step_drift + step_vol * z).exp());
            }
            g
        }
        GModel::BoundedBrownian { level, amp } => {
            let mut b = Vec::with_capacity(n + 1);
            b.push(0.0);
            let sd = dt.sqrt();
            for i in 1..=n {
                let z: f64 = StandardNormal.sample(rng);
                b.push(b[i - 1] + sd * z);
            }
            let max = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let scale = if max > 0.0 { amp / max } else { 0.0 };
            b.iter().map(|v| level * (1.0 + scale * v)).collect()
        }
        GModel::LinearInVol { beta, alpha } => {
            latent.sigma2.iter().map(|s2| beta * s2 + alpha).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use statrs::function::gamma::ln_gamma;

    #[test]
    fn coefficient_recurrence() {
        let psi = fractional_ma_coeffs(0.3, 3).unwrap();
        assert!((psi[0] - 0.3).abs() < 1e-15);
        assert!((psi[1] - 0.195).abs() < 1e-15);
        assert!((psi[2] - 0.1495).abs() < 1e-15);
        assert!(fractional_ma_coeffs(0.0, 5).unwrap().iter().all(|&p| p == 0.0));
        assert!(fractional_ma_coeffs(0.0, 0).unwrap().is_empty());
        assert!(matches!(fractional_ma_coeffs(0.5, 3), Err(Error::InvalidU(_))));
        assert!(matches!(fractional_ma_coeffs(-0.7, 3), Err(Error::InvalidU(_))));
    }

    #[test]
    fn coefficients_match_gamma_ratio() {
        // ψ_j = Γ(j+u) / (Γ(u)·Γ(j+1))
        let u: f64 = 0.3;
        let psi = fractional_ma_coeffs(u, 10).unwrap();
        let direct: f64 = (1..=10)
            .map(|j| (ln_gamma(j as f64 + u) - ln_gamma(u) - ln_gamma(j as f64 + 1.0)).exp().powi(2))
            .sum();
        let sum: f64 = psi.iter().map(|p| p * p).sum();
        assert!((sum - direct).abs() < 1e-12);
    }

    #[test]
    fn weight_shape() {
        let n = 100_000;
        let mean = (1..=n).map(|i| ushape_weight(i as f64 / n as f64)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 1e-4);
        assert!((ushape_weight(0.0) / ushape_weight(0.5) - 2.25).abs() < 1e-12);
    }

    fn flat_latent(steps: usize, s2: f64) -> LatentPath {
        LatentPath {
            x: vec![0.0; steps + 1],
            sigma2: vec![s2; steps + 1],
            dt: crate::ticks::YEARS_PER_SECOND,
            price_jumps: vec![],
            vol_jumps: vec![],
        }
    }

    #[test]
    fn stationary_noise_variance() {
        let config = SimConfig::default();
        let latent = flat_latent(100_000, 0.16);
        let times: Vec<f64> = (0..100_000).map(|i| i as f64 * 0.2).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = make_noise(&config, &mut rng, &times, &latent).unwrap();
        let var = d.eps.iter().map(|e| e * e).sum::<f64>() / d.eps.len() as f64;
        assert!((var / 2.5e-5 - 1.0).abs() < 0.02);
        assert!(d.g_path.iter().all(|&g| g == 2.5e-5));
    }

    #[test]
    fn ushape_variance_follows_g_path() {
        let config = SimConfig { noise: NoiseKind::UShape, ..SimConfig::default() };
        let latent = flat_latent(23_400, 0.16);
        let times: Vec<f64> = (0..23_400).map(|i| i as f64).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let reps = 40;
        let mut edge = 0.0;
        let mut centre = 0.0;
        for _ in 0..reps {
            let d = make_noise(&config, &mut rng, &times, &latent).unwrap();
            edge += d.eps[..500].iter().map(|e| e * e).sum::<f64>();
            centre += d.eps[11_450..11_950].iter().map(|e| e * e).sum::<f64>();
            let g_mean = d.g_path.iter().sum::<f64>() / d.g_path.len() as f64;
            let omega2 = 1.54e-4 * 0.16;
            let infl = 1.0 + fractional_ma_coeffs(0.3, 10).unwrap().iter().map(|p| p * p).sum::<f64>();
            assert!((g_mean / (omega2 * infl) - 1.0).abs() < 1e-3);
        }
        let ratio = edge / centre;
        assert!((ratio / 2.2 - 1.0).abs() < 0.1, "edge/centre {ratio}");
    }
}

//! Observation times from an inhomogeneous Poisson process with periodic
//! intraday intensity, drawn by thinning.

use rand::Rng;
use rand_distr::{Distribution, Exp};

use super::config::SimConfig;
use crate::ticks::SECONDS_PER_DAY;

/// Relative trading intensity at second `t` of the day.
pub fn intensity(amplitude: f64, t: f64) -> f64 {
    1.0 + amplitude * (2.0 * std::f64::consts::PI * t / SECONDS_PER_DAY).cos()
}

/// Arrival times of day `day`, in seconds from the window start, strictly
/// inside `(day·T, (day+1)·T)`. The expected count is `T / avg_dt_seconds`.
pub fn sample_times<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R, day: usize) -> Vec<f64> {
    let amp = config.intensity_amplitude;
    let majorant = (1.0 + amp) / config.avg_dt_seconds;
    let exp = Exp::new(majorant).expect("positive majorant");
    let offset = day as f64 * SECONDS_PER_DAY;
    let mut times = Vec::with_capacity((SECONDS_PER_DAY / config.avg_dt_seconds * 1.1) as usize);
    let mut t = 0.0;
    loop {
        t += exp.sample(rng);
        if t >= SECONDS_PER_DAY {
            break;
        }
        let accept: f64 = rng.random();
        if accept * (1.0 + amp) < intensity(amp, t) {
            times.push(offset + t);
        }
    }
    times
}

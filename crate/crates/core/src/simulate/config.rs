//! Simulation parameters and their flat `key=value` text form.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseKind {
    /// iid `N(0, a0²)`.
    #[default]
    Stationary,
    /// Intraday U-curve variance on top of a fractional MA(M) filter.
    UShape,
    /// `ε_i ~ N(0, g_{t_i})` with `g` from [`GModel`].
    CustomG,
}

impl NoiseKind {
    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::Stationary => "stationary",
            NoiseKind::UShape => "ushape",
            NoiseKind::CustomG => "custom_g",
        }
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stationary" => Ok(NoiseKind::Stationary),
            "ushape" => Ok(NoiseKind::UShape),
            "custom_g" | "custom" => Ok(NoiseKind::CustomG),
            other => Err(Error::InvalidConfig(format!("unknown noise kind {other:?}"))),
        }
    }
}

/// Exogenous noise-variance path used by [`NoiseKind::CustomG`].
///
/// Rates are per year, like every other intensity in [`SimConfig`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GModel {
    /// Geometric Itô diffusion `dg = drift·g dt + vol·g dB`, `g(0) = level`.
    Ito { level: f64, drift: f64, vol: f64 },
    /// `g = level·(1 + amp·B̃/max|B̃|)` for a standard Brownian path `B̃`
    /// over the window; stays within `level·(1 ± amp)`.
    BoundedBrownian { level: f64, amp: f64 },
    /// `g = beta·σ² + alpha`.
    LinearInVol { beta: f64, alpha: f64 },
}

impl GModel {
    pub fn name(&self) -> &'static str {
        match self {
            GModel::Ito { .. } => "ito",
            GModel::BoundedBrownian { .. } => "bounded_brownian",
            GModel::LinearInVol { .. } => "linear_in_vol",
        }
    }

    fn with_defaults(name: &str, a0: f64, sigma_bar2: f64) -> Result<Self> {
        let g0 = a0 * a0;
        match name {
            "ito" => Ok(GModel::Ito { level: g0, drift: 0.0, vol: 1.0 }),
            "bounded_brownian" => Ok(GModel::BoundedBrownian { level: g0, amp: 0.5 }),
            "linear_in_vol" => Ok(GModel::LinearInVol {
                beta: 0.05 * g0 / sigma_bar2,
                alpha: g0,
            }),
            other => Err(Error::InvalidConfig(format!("unknown g model {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub x0: f64,
    pub mu: f64,
    pub rho: f64,
    pub lambda_x: f64,
    pub theta_x: f64,
    /// Standard deviation of price jump sizes.
    pub nu_x: f64,
    pub kappa: f64,
    pub sigma_bar2: f64,
    pub delta: f64,
    pub lambda_v: f64,
    pub theta_v: f64,
    /// Standard deviation of the log volatility-jump factor.
    pub nu_v: f64,
    pub a0: f64,
    pub a1: f64,
    pub alpha_round: f64,
    pub m: usize,
    pub u: f64,
    pub days: usize,
    pub avg_dt_seconds: f64,
    /// Amplitude of the periodic trading intensity `1 + amp·cos(2πt/T)`.
    pub intensity_amplitude: f64,
    /// Round `X + ε` down to the `alpha_round` grid.
    pub rounding: bool,
    pub noise: NoiseKind,
    pub g_model: GModel,
    /// Fixed initial variance; drawn from the CIR stationary law when unset.
    pub sigma0_sq: Option<f64>,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        let a0 = 5e-3;
        let sigma_bar2 = 0.16;
        Self {
            x0: 100f64.ln(),
            mu: 0.03,
            rho: -0.6,
            lambda_x: 6.0,
            theta_x: 0.0016,
            nu_x: 0.004,
            kappa: 6.0,
            sigma_bar2,
            delta: 0.5,
            lambda_v: 12.0,
            theta_v: -5.0,
            nu_v: 0.8,
            a0,
            a1: 1.54e-4,
            alpha_round: 1e-5,
            m: 10,
            u: 0.3,
            days: 1,
            avg_dt_seconds: 1.0,
            intensity_amplitude: 0.5,
            rounding: true,
            noise: NoiseKind::Stationary,
            g_model: GModel::BoundedBrownian { level: a0 * a0, amp: 0.5 },
            sigma0_sq: None,
            seed: 0,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("cannot parse {key}={value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "on" | "yes" => Ok(true),
        "false" | "0" | "off" | "no" => Ok(false),
        _ => Err(Error::InvalidConfig(format!("cannot parse {key}={value:?} as a flag"))),
    }
}

impl SimConfig {
    /// Sets one field from its textual form. `g_*` parameters must match
    /// the current `g_model`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "x0" => self.x0 = parse(key, value)?,
            "mu" => self.mu = parse(key, value)?,
            "rho" => self.rho = parse(key, value)?,
            "lambda_x" | "lambda_X" => self.lambda_x = parse(key, value)?,
            "theta_x" | "theta_X" => self.theta_x = parse(key, value)?,
            "nu_x" | "nu_X" => self.nu_x = parse(key, value)?,
            "kappa" => self.kappa = parse(key, value)?,
            "sigma_bar2" => self.sigma_bar2 = parse(key, value)?,
            "delta" => self.delta = parse(key, value)?,
            "lambda_v" | "lambda_V" => self.lambda_v = parse(key, value)?,
            "theta_v" | "theta_V" => self.theta_v = parse(key, value)?,
            "nu_v" | "nu_V" => self.nu_v = parse(key, value)?,
            "a0" => self.a0 = parse(key, value)?,
            "a1" => self.a1 = parse(key, value)?,
            "alpha_round" => self.alpha_round = parse(key, value)?,
            "M" | "m" => self.m = parse(key, value)?,
            "u" => self.u = parse(key, value)?,
            "days" => self.days = parse(key, value)?,
            "avg_dt_seconds" | "avg_dt" => self.avg_dt_seconds = parse(key, value)?,
            "intensity_amplitude" => self.intensity_amplitude = parse(key, value)?,
            "rounding" => self.rounding = parse_bool(key, value)?,
            "noise" | "noise_kind" => self.noise = value.parse()?,
            "g_model" => {
                self.g_model = GModel::with_defaults(value, self.a0, self.sigma_bar2)?;
            }
            "sigma0_sq" => {
                self.sigma0_sq = match value {
                    "" | "none" | "stationary" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "seed" => self.seed = parse(key, value)?,
            g if g.starts_with("g_") => self.set_g_param(g, value)?,
            other => return Err(Error::InvalidConfig(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    fn set_g_param(&mut self, key: &str, value: &str) -> Result<()> {
        let v: f64 = parse(key, value)?;
        let slot = match (&mut self.g_model, key) {
            (GModel::Ito { level, .. }, "g_level")
            | (GModel::BoundedBrownian { level, .. }, "g_level") => level,
            (GModel::Ito { drift, .. }, "g_drift") => drift,
            (GModel::Ito { vol, .. }, "g_vol") => vol,
            (GModel::BoundedBrownian { amp, .. }, "g_amp") => amp,
            (GModel::LinearInVol { beta, .. }, "g_beta") => beta,
            (GModel::LinearInVol { alpha, .. }, "g_alpha") => alpha,
            (model, _) => {
                return Err(Error::InvalidConfig(format!(
                    "{key} does not apply to g_model={}",
                    model.name()
                )))
            }
        };
        *slot = v;
        Ok(())
    }

    /// Applies `key=value` pairs. Model selectors (`noise`, `g_model`) and
    /// the scales their defaults depend on go first, so the order of the
    /// pairs does not matter.
    pub fn apply_pairs<'a, I>(&mut self, pairs: I) -> Result<()>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let pairs: Vec<(&str, &str)> = pairs.into_iter().collect();
        let rank = |k: &str| match k.trim() {
            "a0" | "sigma_bar2" => 0,
            "noise" | "noise_kind" | "g_model" => 1,
            _ => 2,
        };
        for stage in 0..3 {
            for &(k, v) in pairs.iter().filter(|(k, _)| rank(k) == stage) {
                self.set(k, v)?;
            }
        }
        Ok(())
    }

    /// Parses the `key=value` text format: one pair per line, `#` comments.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut pairs = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected key=value, got {line:?}", lineno + 1))
            })?;
            pairs.push((k.trim(), v.trim()));
        }
        self.apply_pairs(pairs)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut config = Self::default();
        config.apply_text(text)?;
        config.validate()?;
        Ok(config)
    }

    /// Renders every field in the format [`SimConfig::apply_text`] reads.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(out, "{k}={v}");
        };
        line("x0", format!("{:e}", self.x0));
        line("mu", self.mu.to_string());
        line("rho", self.rho.to_string());
        line("lambda_x", self.lambda_x.to_string());
        line("theta_x", self.theta_x.to_string());
        line("nu_x", self.nu_x.to_string());
        line("kappa", self.kappa.to_string());
        line("sigma_bar2", self.sigma_bar2.to_string());
        line("delta", self.delta.to_string());
        line("lambda_v", self.lambda_v.to_string());
        line("theta_v", self.theta_v.to_string());
        line("nu_v", self.nu_v.to_string());
        line("a0", self.a0.to_string());
        line("a1", self.a1.to_string());
        line("alpha_round", self.alpha_round.to_string());
        line("M", self.m.to_string());
        line("u", self.u.to_string());
        line("days", self.days.to_string());
        line("avg_dt_seconds", self.avg_dt_seconds.to_string());
        line("intensity_amplitude", self.intensity_amplitude.to_string());
        line("rounding", self.rounding.to_string());
        line("noise", self.noise.name().to_string());
        line("g_model", self.g_model.name().to_string());
        match self.g_model {
            GModel::Ito { level, drift, vol } => {
                line("g_level", level.to_string());
                line("g_drift", drift.to_string());
                line("g_vol", vol.to_string());
            }
            GModel::BoundedBrownian { level, amp } => {
                line("g_level", level.to_string());
                line("g_amp", amp.to_string());
            }
            GModel::LinearInVol { beta, alpha } => {
                line("g_beta", beta.to_string());
                line("g_alpha", alpha.to_string());
            }
        }
        line(
            "sigma0_sq",
            self.sigma0_sq.map_or("none".to_string(), |v| v.to_string()),
        );
        line("seed", self.seed.to_string());
        out
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        let finite = [
            ("x0", self.x0),
            ("mu", self.mu),
            ("theta_x", self.theta_x),
            ("theta_v", self.theta_v),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        let nonneg = [
            ("lambda_x", self.lambda_x),
            ("nu_x", self.nu_x),
            ("kappa", self.kappa),
            ("sigma_bar2", self.sigma_bar2),
            ("delta", self.delta),
            ("lambda_v", self.lambda_v),
            ("nu_v", self.nu_v),
            ("a0", self.a0),
            ("a1", self.a1),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        if !(self.rho.abs() <= 1.0) {
            return bad(format!("|rho| must be <= 1, got {}", self.rho));
        }
        if !(self.u > -0.5 && self.u < 0.5) {
            return Err(Error::InvalidU(self.u));
        }
        if !(self.alpha_round > 0.0 && self.alpha_round.is_finite()) {
            return bad(format!("alpha_round must be > 0, got {}", self.alpha_round));
        }
        if self.days == 0 {
            return bad("days must be >= 1".into());
        }
        if !(self.avg_dt_seconds > 0.0 && self.avg_dt_seconds.is_finite()) {
            return bad(format!("avg_dt_seconds must be > 0, got {}", self.avg_dt_seconds));
        }
        if !(0.0..=1.0).contains(&self.intensity_amplitude) {
            return bad(format!(
                "intensity_amplitude must lie in [0, 1], got {}",
                self.intensity_amplitude
            ));
        }
        if let Some(v) = self.sigma0_sq {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("sigma0_sq must be finite and >= 0, got {v}"));
            }
        }
        match self.g_model {
            GModel::Ito { level, drift, vol } => {
                if !(level > 0.0 && drift.is_finite() && vol >= 0.0 && vol.is_finite()) {
                    return bad("ito g model needs g_level > 0, finite drift, g_vol >= 0".into());
                }
            }
            GModel::BoundedBrownian { level, amp } => {
                if !(level > 0.0 && (0.0..1.0).contains(&amp)) {
                    return bad("bounded_brownian g model needs g_level > 0, 0 <= g_amp < 1".into());
                }
            }
            GModel::LinearInVol { beta, alpha } => {
                if !(beta >= 0.0 && alpha >= 0.0 && beta.is_finite() && alpha.is_finite()) {
                    return bad("linear_in_vol g model needs g_beta >= 0 and g_alpha >= 0".into());
                }
            }
        }
        Ok(())
    }
}

use crate::error::{Error, Result};

/// Largest allowed `(⟨n⟩ + 1)·γ_w·dt` for the linear-order radiative Kraus set.
pub const MAX_JUMP_PROBABILITY: f64 = 0.05;

/// Physical rates of the emitter and its environment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rates {
    /// Level splitting Ω.
    pub omega: f64,
    /// Spontaneous emission rate γ_w.
    pub gamma_w: f64,
    /// Spin (σ_x) measurement rate γ_m.
    pub gamma_m: f64,
    /// Mean environment occupation ⟨n⟩.
    pub n_avg: f64,
}

impl Default for Rates {
    fn default() -> Self {
        Rates { omega: 1.0, gamma_w: 4.0, gamma_m: 1.0, n_avg: 1.0 }
    }
}

impl Rates {
    pub fn new(omega: f64, gamma_w: f64, gamma_m: f64, n_avg: f64) -> Result<Self> {
        let r = Rates { omega, gamma_w, gamma_m, n_avg };
        r.validate()?;
        Ok(r)
    }

    pub fn with_gamma_m(self, gamma_m: f64) -> Self {
        Rates { gamma_m, ..self }
    }

    pub fn with_n_avg(self, n_avg: f64) -> Self {
        Rates { n_avg, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.omega.is_finite() {
            return Err(Error::param("omega", "must be finite"));
        }
        if !(self.gamma_w > 0.0 && self.gamma_w.is_finite()) {
            return Err(Error::param("gamma_w", format!("must be > 0 (got {})", self.gamma_w)));
        }
        if !(self.gamma_m >= 0.0 && self.gamma_m.is_finite()) {
            return Err(Error::param("gamma_m", format!("must be >= 0 (got {})", self.gamma_m)));
        }
        if !(self.n_avg >= 0.0 && self.n_avg.is_finite()) {
            return Err(Error::param("n_avg", format!("must be >= 0 (got {})", self.n_avg)));
        }
        Ok(())
    }

    /// Absorption weight `x_a = ⟨n⟩`.
    pub fn x_a(&self) -> f64 {
        self.n_avg
    }

    /// Emission weight `x_e = ⟨n⟩ + 1`.
    pub fn x_e(&self) -> f64 {
        self.n_avg + 1.0
    }

    /// Total relaxation rate `4γ_m + γ_w(2⟨n⟩ + 1)`.
    pub fn relaxation(&self) -> f64 {
        4.0 * self.gamma_m + self.gamma_w * (2.0 * self.n_avg + 1.0)
    }
}

/// How the continuous σ_x readout enters a trajectory step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SpinMode {
    /// Readouts averaged out exactly (σ_x dephasing channel).
    #[default]
    SemiConditional,
    /// Readouts sampled and the conditional Kraus operator applied.
    Conditional,
}

impl std::str::FromStr for SpinMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "semi" | "semi_conditional" | "semi-conditional" => Ok(SpinMode::SemiConditional),
            "conditional" => Ok(SpinMode::Conditional),
            other => Err(Error::param("mode", format!("expected `semi` or `conditional`, got `{other}`"))),
        }
    }
}

impl std::fmt::Display for SpinMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SpinMode::SemiConditional => "semi",
            SpinMode::Conditional => "conditional",
        })
    }
}

/// Rates plus discretization and ensemble settings for a Monte Carlo run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub rates: Rates,
    pub dt: f64,
    pub steps: usize,
    pub trajectories: usize,
    pub seed: u64,
    pub mode: SpinMode,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            rates: Rates::default(),
            dt: 5e-4,
            steps: 2000,
            trajectories: 20_000,
            seed: 0x5eed_0001,
            mode: SpinMode::SemiConditional,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        self.rates.validate()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", format!("must be > 0 (got {})", self.dt)));
        }
        if self.steps == 0 {
            return Err(Error::param("steps", "must be positive"));
        }
        if self.trajectories == 0 {
            return Err(Error::param("trajectories", "must be positive"));
        }
        let jump = self.max_jump_probability();
        if jump > MAX_JUMP_PROBABILITY {
            return Err(Error::param(
                "dt",
                format!(
                    "(n_avg + 1) * gamma_w * dt = {jump} exceeds {MAX_JUMP_PROBABILITY}; reduce dt below {}",
                    MAX_JUMP_PROBABILITY / ((self.rates.n_avg + 1.0) * self.rates.gamma_w)
                ),
            ));
        }
        Ok(())
    }

    /// `(⟨n⟩ + 1)·γ_w·dt`, the largest single-step jump probability.
    pub fn max_jump_probability(&self) -> f64 {
        (self.rates.n_avg + 1.0) * self.rates.gamma_w * self.dt
    }

    /// Total simulated time `steps·dt`.
    pub fn total_time(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub fn with_gamma_m(self, gamma_m: f64) -> Self {
        ModelParams { rates: self.rates.with_gamma_m(gamma_m), ..self }
    }
}

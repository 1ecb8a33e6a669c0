//! Single-step emitter channels: the continuous σ_x measurement, the
//! three-outcome radiative Kraus set, and the free Hamiltonian phase.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::qcore::{DensityMatrix, Operator2, C64};

/// Default upper bound on `ε_m = γ_m·dt`.
pub const DEFAULT_EPS_M_LIMIT: f64 = 0.05;
/// Probabilities above this negative roundoff floor are clamped to zero.
pub const PROBABILITY_FLOOR: f64 = -1e-14;

/// Continuous measurement of σ_x at rate γ_m over one step dt.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinChannel {
    gamma_m: f64,
    dt: f64,
}

impl SpinChannel {
    pub fn new(gamma_m: f64, dt: f64) -> Result<Self> {
        Self::with_limit(gamma_m, dt, DEFAULT_EPS_M_LIMIT)
    }

    /// Like [`SpinChannel::new`] with a custom ceiling on `ε_m`.
    pub fn with_limit(gamma_m: f64, dt: f64, eps_limit: f64) -> Result<Self> {
        if !(gamma_m >= 0.0 && gamma_m.is_finite()) {
            return Err(Error::param("gamma_m", format!("must be >= 0 (got {gamma_m})")));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::param("dt", format!("must be > 0 (got {dt})")));
        }
        let eps = gamma_m * dt;
        if eps > eps_limit {
            return Err(Error::param(
                "gamma_m",
                format!("eps_m = gamma_m * dt = {eps} exceeds {eps_limit}"),
            ));
        }
        Ok(SpinChannel { gamma_m, dt })
    }

    pub fn gamma_m(&self) -> f64 {
        self.gamma_m
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Measurement strength `ε_m = γ_m·dt`.
    pub fn eps(&self) -> f64 {
        self.gamma_m * self.dt
    }

    /// Readout variance of each mixture component, `1/(8ε_m)`.
    pub fn readout_variance(&self) -> f64 {
        1.0 / (8.0 * self.eps())
    }

    /// Weight `p = (1 + e^{−4γ_m dt})/2` of the identity in the averaged
    /// dephasing channel.
    pub fn identity_weight(&self) -> f64 {
        0.5 * (1.0 + (-4.0 * self.eps()).exp())
    }
}

/// Continuous readout value r.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Readout(pub f64);

/// Kraus operator `M(r) = (4ε_m/π)^{1/4} exp[−2ε_m(r − σ_x)²]`.
///
/// Diagonal in the σ_x eigenbasis with eigenvalues
/// `(4ε_m/π)^{1/4} e^{−2ε_m(r ∓ 1)²}` on `|±⟩`.
pub fn spin_kraus(channel: &SpinChannel, r: Readout) -> Operator2 {
    let eps = channel.eps();
    let pre = (4.0 * eps / PI).powf(0.25);
    let plus = pre * (-2.0 * eps * (r.0 - 1.0).powi(2)).exp();
    let minus = pre * (-2.0 * eps * (r.0 + 1.0).powi(2)).exp();
    let s = 0.5 * (plus + minus);
    let d = 0.5 * (plus - minus);
    Operator2::from_entries([
        [C64::new(s, 0.0), C64::new(d, 0.0)],
        [C64::new(d, 0.0), C64::new(s, 0.0)],
    ])
}

/// Draws r from `P(r) = tr{M(r)ρM(r)†}`: a two-Gaussian mixture with
/// weights `⟨±|ρ|±⟩`, means ±1 and variance `1/(8ε_m)` each.
pub fn sample_readout<R: Rng + ?Sized>(
    channel: &SpinChannel,
    rho: &DensityMatrix,
    rng: &mut R,
) -> Result<Readout> {
    if channel.gamma_m == 0.0 {
        return Err(Error::ZeroMeasurementStrength);
    }
    let w_plus = (0.5 * (1.0 + rho.sigma_x_expectation())).clamp(0.0, 1.0);
    let mean = if rng.random::<f64>() < w_plus { 1.0 } else { -1.0 };
    let noise = Normal::new(0.0, channel.readout_variance().sqrt())
        .map_err(|e| Error::param("gamma_m", e.to_string()))?;
    Ok(Readout(mean + noise.sample(rng)))
}

/// Applies `M(r)` and renormalizes.
pub fn conditional_spin_update(
    channel: &SpinChannel,
    rho: &DensityMatrix,
    r: Readout,
) -> Option<DensityMatrix> {
    let m = spin_kraus(channel, r);
    let out = m.sandwich(rho.op());
    let tr = out.trace().re;
    (tr > 0.0 && tr.is_finite()).then(|| DensityMatrix::from_unnormalized(&out, tr))
}

/// Exact readout average of the spin update: σ_x-basis coherences shrink by
/// `e^{−4γ_m dt}`, implemented as the Kraus pair `{√p·I, √(1−p)·σ_x}`.
pub fn averaged_spin_channel(channel: &SpinChannel, rho: &DensityMatrix) -> DensityMatrix {
    let p = channel.identity_weight();
    let flipped = Operator2::sigma_x().sandwich(rho.op());
    DensityMatrix::from_channel_output(rho.op().scale_re(p) + flipped.scale_re(1.0 - p))
}

/// Radiative event of one time step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    Absorption,
    Emission,
    Null,
}

/// The three radiative measurement operators for one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrausSet {
    m_a: Operator2,
    m_e: Operator2,
    m_o: Operator2,
    gamma_w: f64,
    n_avg: f64,
    dt: f64,
}

/// Builds `{M_a, M_e, M_o}` for emission rate `gamma_w`, environment
/// occupation `n_avg` and step `dt`:
///
/// * `M_e = −i√((⟨n⟩+1)ε_w) |g⟩⟨e|`
/// * `M_a = −i√(⟨n⟩ε_w) |e⟩⟨g|`
/// * `M_o = diag(√(1 − (⟨n⟩+1)ε_w), √(1 − ⟨n⟩ε_w))`
pub fn radiative_kraus(gamma_w: f64, n_avg: f64, dt: f64) -> Result<KrausSet> {
    if !(gamma_w > 0.0 && gamma_w.is_finite()) {
        return Err(Error::param("gamma_w", format!("must be > 0 (got {gamma_w})")));
    }
    if !(n_avg >= 0.0 && n_avg.is_finite()) {
        return Err(Error::param("n_avg", format!("must be >= 0 (got {n_avg})")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param("dt", format!("must be > 0 (got {dt})")));
    }
    let eps = gamma_w * dt;
    if (n_avg + 1.0) * eps >= 1.0 {
        return Err(Error::param(
            "dt",
            format!("(n_avg + 1) * gamma_w * dt = {} must be < 1", (n_avg + 1.0) * eps),
        ));
    }
    let mi = C64::new(0.0, -1.0);
    let zero = C64::new(0.0, 0.0);
    let m_e = Operator2::from_entries([[zero, zero], [mi * ((n_avg + 1.0) * eps).sqrt(), zero]]);
    let m_a = Operator2::from_entries([[zero, mi * (n_avg * eps).sqrt()], [zero, zero]]);
    let m_o = Operator2::diag(
        C64::new((1.0 - (n_avg + 1.0) * eps).sqrt(), 0.0),
        C64::new((1.0 - n_avg * eps).sqrt(), 0.0),
    );
    Ok(KrausSet { m_a, m_e, m_o, gamma_w, n_avg, dt })
}

impl KrausSet {
    pub fn m_a(&self) -> &Operator2 {
        &self.m_a
    }

    pub fn m_e(&self) -> &Operator2 {
        &self.m_e
    }

    pub fn m_o(&self) -> &Operator2 {
        &self.m_o
    }

    pub fn operator(&self, outcome: Outcome) -> &Operator2 {
        match outcome {
            Outcome::Absorption => &self.m_a,
            Outcome::Emission => &self.m_e,
            Outcome::Null => &self.m_o,
        }
    }

    pub fn gamma_w(&self) -> f64 {
        self.gamma_w
    }

    pub fn n_avg(&self) -> f64 {
        self.n_avg
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `ε_w = γ_w·dt`
    pub fn eps(&self) -> f64 {
        self.gamma_w * self.dt
    }

    /// `Σ_k M_k†M_k`
    pub fn completeness_sum(&self) -> Operator2 {
        [self.m_a, self.m_e, self.m_o]
            .iter()
            .map(|m| m.adjoint() * *m)
            .fold(Operator2::zero(), |acc, e| acc + e)
    }

    /// Outcome-averaged map `Σ_k M_k ρ M_k†`.
    pub fn average(&self, rho: &DensityMatrix) -> DensityMatrix {
        let out = self.m_a.sandwich(rho.op()) + self.m_e.sandwich(rho.op()) + self.m_o.sandwich(rho.op());
        DensityMatrix::from_channel_output(out)
    }
}

/// Probabilities `p_k = tr{M_k ρ M_k†}` of the three radiative outcomes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutcomeProbabilities {
    pub absorption: f64,
    pub emission: f64,
    pub null: f64,
}

impl OutcomeProbabilities {
    pub fn total(&self) -> f64 {
        self.absorption + self.emission + self.null
    }

    /// Maps a uniform draw `u ∈ [0, 1)` to an outcome.
    pub fn select(&self, u: f64) -> Outcome {
        let x = u * self.total();
        if x < self.absorption {
            Outcome::Absorption
        } else if x < self.absorption + self.emission {
            Outcome::Emission
        } else {
            Outcome::Null
        }
    }

    pub fn get(&self, outcome: Outcome) -> f64 {
        match outcome {
            Outcome::Absorption => self.absorption,
            Outcome::Emission => self.emission,
            Outcome::Null => self.null,
        }
    }
}

fn clamp_probability(p: f64) -> f64 {
    if (PROBABILITY_FLOOR..0.0).contains(&p) {
        0.0
    } else {
        p
    }
}

pub fn outcome_probabilities(rho: &DensityMatrix, set: &KrausSet) -> OutcomeProbabilities {
    let p = |m: &Operator2| clamp_probability(m.sandwich(rho.op()).trace().re);
    OutcomeProbabilities {
        absorption: p(&set.m_a),
        emission: p(&set.m_e),
        null: p(&set.m_o),
    }
}

/// Post-outcome state `M_k ρ M_k† / p_k`; `None` if `p_k` is not positive.
pub fn apply_outcome(rho: &DensityMatrix, set: &KrausSet, outcome: Outcome) -> Option<DensityMatrix> {
    let out = set.operator(outcome).sandwich(rho.op());
    let p = out.trace().re;
    (p > 0.0 && p.is_finite()).then(|| DensityMatrix::from_unnormalized(&out, p))
}

/// Conjugation by `e^{−iĤ₀dt} = diag(e^{−iΩdt}, 1)`.
pub fn hamiltonian_step(rho: &DensityMatrix, omega: f64, dt: f64) -> DensityMatrix {
    let u = Operator2::diag(C64::from_polar(1.0, -omega * dt), C64::new(1.0, 0.0));
    DensityMatrix::from_channel_output(u.sandwich(rho.op()))
}

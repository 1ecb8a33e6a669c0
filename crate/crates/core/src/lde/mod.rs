//! Large-deviation analytics for the jump counts: the tilted generator,
//! its scaled cumulant generating function θ(s_a, s_e), and the closed-form
//! cumulants, Mandel Q values, transition point, steady state and clock
//! metrics that follow from it.
//!
//! Sign convention: `⟨N⟩ = −∂_s θ · t`, `Var N = ∂²_s θ · t`,
//! `Cov(N_a, N_e) = ∂_{s_a}∂_{s_e} θ · t`.

mod perturbative;

use crate::error::{Error, Result};
use crate::params::Rates;
use crate::qcore::{
    anticommutator_superop, commutator_superop, leading_real_eigenvalue, sandwich_superop,
    vectorize, DensityMatrix, Operator2, Superoperator4, C64,
};

pub use perturbative::{scgf_derivatives_fd, theta_near_zero, DEFAULT_FD_STEP};

/// Counting-field tilts `(s_a, s_e)`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct TiltParams {
    pub s_a: f64,
    pub s_e: f64,
}

impl TiltParams {
    pub fn new(s_a: f64, s_e: f64) -> Result<Self> {
        if !s_a.is_finite() || !s_e.is_finite() {
            return Err(Error::param("tilt", "tilts must be finite"));
        }
        Ok(TiltParams { s_a, s_e })
    }

    pub const ZERO: TiltParams = TiltParams { s_a: 0.0, s_e: 0.0 };
}

/// Which jump record a statistic refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Counter {
    /// Absorption events N_a.
    Absorption,
    /// Emission events N_e.
    Emission,
    /// All jumps N_a + N_e (the complement of the null record).
    Sum,
}

impl Counter {
    pub const ALL: [Counter; 3] = [Counter::Absorption, Counter::Emission, Counter::Sum];

    pub fn label(&self) -> &'static str {
        match self {
            Counter::Absorption => "a",
            Counter::Emission => "e",
            Counter::Sum => "sum",
        }
    }
}

/// The part of the generator without jump sandwiches, plus the two jump
/// superoperators `J_a = γ_w⟨n⟩ σ₊·σ₋` and `J_e = γ_w(⟨n⟩+1) σ₋·σ₊`.
pub(crate) struct GeneratorParts {
    pub base: Superoperator4,
    pub jump_a: Superoperator4,
    pub jump_e: Superoperator4,
}

pub(crate) fn generator_parts(rates: &Rates) -> GeneratorParts {
    let h0 = Operator2::proj_excited().scale_re(rates.omega);
    let sx = commutator_superop(&Operator2::sigma_x());
    let sp = Operator2::sigma_plus();
    let sm = Operator2::sigma_minus();
    let ee = sp * sm;
    let gg = sm * sp;
    let base = commutator_superop(&h0).scale(C64::new(0.0, -1.0))
        + (sx * sx).scale_re(-rates.gamma_m)
        + anticommutator_superop(&ee).scale_re(-0.5 * rates.gamma_w * rates.x_e())
        + anticommutator_superop(&gg).scale_re(-0.5 * rates.gamma_w * rates.x_a());
    GeneratorParts {
        base,
        jump_a: sandwich_superop(&sp, &sm).scale_re(rates.gamma_w * rates.x_a()),
        jump_e: sandwich_superop(&sm, &sp).scale_re(rates.gamma_w * rates.x_e()),
    }
}

/// Vectorized tilted generator `W(s_a, s_e)`: the unconditional Lindblad
/// generator with the emission sandwich weighted by `e^{−s_e}` and the
/// absorption sandwich by `e^{−s_a}`.
pub fn tilted_generator(tilts: TiltParams, rates: &Rates) -> Superoperator4 {
    let p = generator_parts(rates);
    p.base + p.jump_a.scale_re((-tilts.s_a).exp()) + p.jump_e.scale_re((-tilts.s_e).exp())
}

/// θ(s_a, s_e) as the leading real eigenvalue of the tilted generator.
pub fn theta_numeric(tilts: TiltParams, rates: &Rates) -> Result<f64> {
    leading_real_eigenvalue(&tilted_generator(tilts, rates))
}

/// Closed-form θ(s_a, s_e) = ½[−(4γ_m + γ_w + 2γ_w⟨n⟩) + e^{−(s_a+s_e)}√g].
pub fn scgf_closed_form(tilts: TiltParams, rates: &Rates) -> Result<f64> {
    let Rates { gamma_w: gw, gamma_m: gm, n_avg: n, .. } = *rates;
    let (sa, se) = (tilts.s_a, tilts.s_e);
    let g = (sa + se).exp()
        * (4.0 * gw * (n + 1.0) * (2.0 * sa.exp() * gm + gw * n)
            + se.exp() * (sa.exp() * (16.0 * gm * gm + gw * gw) + 8.0 * gm * gw * n));
    if g < 0.0 || !g.is_finite() {
        return Err(Error::NegativeDiscriminant(g));
    }
    Ok(0.5 * (-(4.0 * gm + gw + 2.0 * gw * n) + (-(sa + se)).exp() * g.sqrt()))
}

/// Scaled cumulants per unit time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CountingCumulants {
    pub mean_a: f64,
    pub mean_e: f64,
    pub var_a: f64,
    pub var_e: f64,
    pub cov_ae: f64,
}

/// Large-deviation moments of the jump counts at time t.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentReport {
    pub t: f64,
    pub mean_a: f64,
    pub mean_e: f64,
    pub var_a: f64,
    pub var_e: f64,
    pub cov_ae: f64,
    pub mean_sum: f64,
    pub var_sum: f64,
    /// `None` where the corresponding mean vanishes.
    pub q_a: Option<f64>,
    pub q_e: Option<f64>,
    pub q_sum: Option<f64>,
    /// Per-unit-time rates the values above were scaled from.
    pub rates: CountingCumulants,
}

fn mandel(var: f64, mean: f64) -> Option<f64> {
    (mean > 0.0).then(|| (var - mean) / mean)
}

impl MomentReport {
    /// Scales cumulant rates to time t; Mandel Q values from the ratios.
    pub fn from_cumulants(c: CountingCumulants, t: f64) -> Self {
        let mean_sum = c.mean_a + c.mean_e;
        let var_sum = c.var_a + c.var_e + 2.0 * c.cov_ae;
        MomentReport {
            t,
            mean_a: c.mean_a * t,
            mean_e: c.mean_e * t,
            var_a: c.var_a * t,
            var_e: c.var_e * t,
            cov_ae: c.cov_ae * t,
            mean_sum: mean_sum * t,
            var_sum: var_sum * t,
            q_a: mandel(c.var_a, c.mean_a),
            q_e: mandel(c.var_e, c.mean_e),
            q_sum: mandel(var_sum, mean_sum),
            rates: c,
        }
    }

    pub fn mean(&self, which: Counter) -> f64 {
        match which {
            Counter::Absorption => self.mean_a,
            Counter::Emission => self.mean_e,
            Counter::Sum => self.mean_sum,
        }
    }

    pub fn variance(&self, which: Counter) -> f64 {
        match which {
            Counter::Absorption => self.var_a,
            Counter::Emission => self.var_e,
            Counter::Sum => self.var_sum,
        }
    }

    pub fn q(&self, which: Counter) -> Option<f64> {
        match which {
            Counter::Absorption => self.q_a,
            Counter::Emission => self.q_e,
            Counter::Sum => self.q_sum,
        }
    }
}

/// Closed-form cumulant rates.
pub fn cumulant_rates(rates: &Rates) -> CountingCumulants {
    let Rates { gamma_w: gw, gamma_m: gm, n_avg: n, .. } = *rates;
    let (xa, xe) = (rates.x_a(), rates.x_e());
    let d = 4.0 * gm + 2.0 * n * gw + gw;
    let d3 = d * d * d;
    let mean_a = gw * xa * (2.0 * gm + gw * xe) / d;
    let mean_e = gw * xe * (2.0 * gm + gw * xa) / d;
    let var_a = mean_a - 2.0 * gw * gw * xa * xa * (2.0 * gm + gw * xe).powi(2) / d3;
    let var_e = mean_e - 2.0 * gw * gw * xe * xe * (2.0 * gm + gw * xa).powi(2) / d3;
    let cov_ae = gw * gw * xa * xe
        * (8.0 * gm * gm + 4.0 * gm * (2.0 * gw * n + gw) + gw * gw * (2.0 * xa * xe + 1.0))
        / d3;
    CountingCumulants { mean_a, mean_e, var_a, var_e, cov_ae }
}

/// Closed-form Mandel Q for one record (`None` where its mean vanishes).
pub fn q_closed_form(rates: &Rates, which: Counter) -> Option<f64> {
    let Rates { gamma_w: gw, gamma_m: gm, n_avg: n, .. } = *rates;
    let (xa, xe) = (rates.x_a(), rates.x_e());
    let d = 4.0 * gm + 2.0 * n * gw + gw;
    let c = cumulant_rates(rates);
    match which {
        Counter::Absorption => {
            (c.mean_a > 0.0).then(|| -2.0 * gw * xa * (2.0 * gm + gw * xe) / (d * d))
        }
        Counter::Emission => {
            (c.mean_e > 0.0).then(|| -2.0 * gw * xe * (2.0 * gm + gw * xa) / (d * d))
        }
        Counter::Sum => (c.mean_a + c.mean_e > 0.0).then(|| {
            (-4.0 * gm * gm * gw + xa * xe * gw.powi(3))
                / ((gm * (2.0 * n + 1.0) + xa * xe * gw) * d * d)
        }),
    }
}

/// All closed-form moments at time `t ≥ 0`.
pub fn moments(rates: &Rates, t: f64) -> Result<MomentReport> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::param("t", format!("must be >= 0 (got {t})")));
    }
    let mut report = MomentReport::from_cumulants(cumulant_rates(rates), t);
    report.q_a = q_closed_form(rates, Counter::Absorption);
    report.q_e = q_closed_form(rates, Counter::Emission);
    report.q_sum = q_closed_form(rates, Counter::Sum);
    Ok(report)
}

/// Excited population of the unconditional steady state and the state
/// `diag(p, 1 − p)` itself.
pub fn steady_state(rates: &Rates) -> (f64, DensityMatrix) {
    let p = (2.0 * rates.gamma_m + rates.gamma_w * rates.n_avg) / rates.relaxation();
    let rho = DensityMatrix::diagonal(p).expect("steady-state population lies in [0, 1]");
    (p, rho)
}

/// Steady state as the trace-normalized null vector of the untilted
/// generator, found by replacing one row of `W(0)` with the trace functional.
pub fn steady_state_numeric(rates: &Rates) -> Result<[C64; 4]> {
    let w = tilted_generator(TiltParams::ZERO, rates);
    let mut a = *w.entries();
    a[0] = vectorize(&Operator2::identity());
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    Superoperator4::new(a)?
        .solve(&[one, zero, zero, zero])
        .ok_or(Error::InvalidState("untilted generator has a degenerate null space".into()))
}

/// γ_m* where q_sum crosses zero: `2γ_m* = γ_w √(⟨n⟩² + ⟨n⟩)`.
pub fn transition_rate(gamma_w: f64, n_avg: f64) -> Result<f64> {
    if !(n_avg > 0.0) {
        return Err(Error::NoTransition);
    }
    Ok(0.5 * gamma_w * (n_avg * n_avg + n_avg).sqrt())
}

/// Root of `γ_m ↦ q_sum` by bisection, independent of [`transition_rate`].
pub fn transition_rate_bisect(gamma_w: f64, n_avg: f64, tol: f64) -> Result<f64> {
    if !(n_avg > 0.0) {
        return Err(Error::NoTransition);
    }
    let base = Rates { omega: 1.0, gamma_w, gamma_m: 0.0, n_avg };
    let q = |gm: f64| q_closed_form(&base.with_gamma_m(gm), Counter::Sum).unwrap_or(f64::NAN);
    let mut lo = 0.0;
    let mut hi = gamma_w * (n_avg + 1.0);
    if !(q(lo) > 0.0) {
        return Err(Error::Bracket(format!("q_sum(0) = {} is not positive", q(lo))));
    }
    let mut expand = 0;
    while q(hi) >= 0.0 {
        hi *= 2.0;
        expand += 1;
        if expand > 60 {
            return Err(Error::Bracket("q_sum stays non-negative".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol {
            break;
        }
        if q(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// γ_m → 0 limit of q_sum: `(2⟨n⟩ + 1)^{−2}`.
pub fn q_sum_asymptote(n_avg: f64) -> Result<f64> {
    if !(n_avg >= 0.0) {
        return Err(Error::param("n_avg", "must be >= 0"));
    }
    Ok((2.0 * n_avg + 1.0).powi(-2))
}

/// Precision of a jump-counting clock.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClockMetrics {
    /// `ΔN/⟨N⟩ = √(1+Q)/√⟨N⟩`
    pub relative_error: f64,
    /// `(⟨N⟩²/ΔN²) / ⟨N⟩ = 1/(1+Q)`, the gain over a Poissonian clock.
    pub precision_gain: f64,
}

impl ClockMetrics {
    pub fn from_q(q: f64, mean: f64) -> Result<Self> {
        if !(mean > 0.0) {
            return Err(Error::Undefined("clock precision"));
        }
        Ok(ClockMetrics {
            relative_error: (1.0 + q).sqrt() / mean.sqrt(),
            precision_gain: 1.0 / (1.0 + q),
        })
    }
}

pub fn clock_metrics(rates: &Rates, which: Counter, t: f64) -> Result<ClockMetrics> {
    let m = moments(rates, t)?;
    let q = m.q(which).ok_or(Error::Undefined("Mandel Q"))?;
    ClockMetrics::from_q(q, m.mean(which))
}

//! Per-time-step ensemble moments of the jump counts.
//!
//! Sums of integer powers are kept exactly in `u128`, so merging partial
//! results is associative and the totals do not depend on the order in
//! which workers finish.

use crate::error::{Error, Result};
use crate::lde::Counter;

/// Exact power sums of (n_a, n_e, n_a + n_e) at one time step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PowerSums {
    pub a: [u128; 4],
    pub e: [u128; 4],
    pub s: [u128; 4],
    /// Σ a e, Σ a² e, Σ a e², Σ a² e²
    pub cross: [u128; 4],
}

fn powers(x: u32) -> [u128; 4] {
    let x = x as u128;
    [x, x * x, x * x * x, x * x * x * x]
}

impl PowerSums {
    pub fn push(&mut self, n_a: u32, n_e: u32) {
        let (pa, pe, ps) = (powers(n_a), powers(n_e), powers(n_a + n_e));
        for k in 0..4 {
            self.a[k] += pa[k];
            self.e[k] += pe[k];
            self.s[k] += ps[k];
        }
        self.cross[0] += pa[0] * pe[0];
        self.cross[1] += pa[1] * pe[0];
        self.cross[2] += pa[0] * pe[1];
        self.cross[3] += pa[1] * pe[1];
    }

    pub fn merge(&mut self, other: &PowerSums) {
        for k in 0..4 {
            self.a[k] += other.a[k];
            self.e[k] += other.e[k];
            self.s[k] += other.s[k];
            self.cross[k] += other.cross[k];
        }
    }

    fn sums(&self, which: Counter) -> &[u128; 4] {
        match which {
            Counter::Absorption => &self.a,
            Counter::Emission => &self.e,
            Counter::Sum => &self.s,
        }
    }
}

/// A point estimate with its standard error (`None` when it cannot be
/// estimated, e.g. from a single trajectory).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub se: Option<f64>,
}

impl Estimate {
    /// |value − target| measured in standard errors.
    pub fn z_score(&self, target: f64) -> Option<f64> {
        self.se.map(|se| {
            let d = (self.value - target).abs();
            if se > 0.0 {
                d / se
            } else if d == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        })
    }
}

/// Sample statistics at one time step. Variances, covariances and Mandel Q
/// are `None` when fewer than two trajectories were recorded; Q is also
/// `None` when the mean count is zero.
#[derive(Clone, Debug, PartialEq)]
pub struct StepSummary {
    pub step: usize,
    pub t: f64,
    pub mean_a: Estimate,
    pub mean_e: Estimate,
    pub mean_sum: Estimate,
    pub var_a: Option<Estimate>,
    pub var_e: Option<Estimate>,
    pub var_sum: Option<Estimate>,
    pub cov_ae: Option<Estimate>,
    pub q_a: Option<Estimate>,
    pub q_e: Option<Estimate>,
    pub q_sum: Option<Estimate>,
}

impl StepSummary {
    pub fn mean(&self, which: Counter) -> Estimate {
        match which {
            Counter::Absorption => self.mean_a,
            Counter::Emission => self.mean_e,
            Counter::Sum => self.mean_sum,
        }
    }

    pub fn variance(&self, which: Counter) -> Option<Estimate> {
        match which {
            Counter::Absorption => self.var_a,
            Counter::Emission => self.var_e,
            Counter::Sum => self.var_sum,
        }
    }

    pub fn q(&self, which: Counter) -> Option<Estimate> {
        match which {
            Counter::Absorption => self.q_a,
            Counter::Emission => self.q_e,
            Counter::Sum => self.q_sum,
        }
    }
}

/// Exact accumulators for every time step 0..=steps.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleStats {
    count: u64,
    dt: f64,
    steps: Vec<PowerSums>,
}

impl EnsembleStats {
    pub fn new(steps: usize, dt: f64) -> Self {
        EnsembleStats { count: 0, dt, steps: vec![PowerSums::default(); steps + 1] }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of recorded time points (steps + 1).
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn power_sums(&self, step: usize) -> Option<&PowerSums> {
        self.steps.get(step)
    }

    /// Adds one trajectory given as full count records.
    pub fn push_record(&mut self, n_a: &[u32], n_e: &[u32]) -> Result<()> {
        if n_a.len() != self.steps.len() || n_e.len() != self.steps.len() {
            return Err(Error::param(
                "record",
                format!("expected {} time points, got {}/{}", self.steps.len(), n_a.len(), n_e.len()),
            ));
        }
        for (k, acc) in self.steps.iter_mut().enumerate() {
            acc.push(n_a[k], n_e[k]);
        }
        self.count += 1;
        Ok(())
    }

    /// Adds one trajectory fed step by step through the sink handed to `run`.
    pub fn record_with<F>(&mut self, run: F) -> Result<()>
    where
        F: FnOnce(&mut dyn FnMut(usize, u32, u32)) -> Result<()>,
    {
        let steps = &mut self.steps;
        run(&mut |k, a, e| steps[k].push(a, e))?;
        self.count += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: &EnsembleStats) -> Result<()> {
        if other.steps.len() != self.steps.len() {
            return Err(Error::param("merge", "step counts differ".to_string()));
        }
        for (a, b) in self.steps.iter_mut().zip(&other.steps) {
            a.merge(b);
        }
        self.count += other.count;
        Ok(())
    }

    /// Summary at time step `step`.
    pub fn summary(&self, step: usize) -> Option<StepSummary> {
        let ps = self.steps.get(step)?;
        let n = self.count;
        let mean = |w: Counter| mean_estimate(ps.sums(w), n);
        let var = |w: Counter| variance_estimate(ps.sums(w), n);
        let (mean_a, mean_e, mean_sum) =
            (mean(Counter::Absorption), mean(Counter::Emission), mean(Counter::Sum));
        let (var_a, var_e, var_sum) =
            (var(Counter::Absorption), var(Counter::Emission), var(Counter::Sum));
        let cov_ae = covariance_estimate(ps, n);
        Some(StepSummary {
            step,
            t: step as f64 * self.dt,
            mean_a,
            mean_e,
            mean_sum,
            var_a,
            var_e,
            var_sum,
            cov_ae,
            q_a: mandel(mean_a, var_a),
            q_e: mandel(mean_e, var_e),
            q_sum: mandel(mean_sum, var_sum),
        })
    }

    /// Summary at the final time.
    pub fn final_summary(&self) -> Option<StepSummary> {
        self.summary(self.steps.len().checked_sub(1)?)
    }

    /// Summaries at steps 0, every, 2·every, … and always the last step.
    pub fn decimated(&self, every: usize) -> Vec<StepSummary> {
        let every = every.max(1);
        let last = self.steps.len().saturating_sub(1);
        let mut out: Vec<_> = (0..=last).step_by(every).filter_map(|k| self.summary(k)).collect();
        if !last.is_multiple_of(every) {
            out.extend(self.summary(last));
        }
        out
    }
}

/// (N Σx² − (Σx)²) exactly; non-negative by Cauchy–Schwarz.
fn centered_sq(s1: u128, s2: u128, n: u64) -> u128 {
    (n as u128) * s2 - s1 * s1
}

fn mean_estimate(s: &[u128; 4], n: u64) -> Estimate {
    if n == 0 {
        return Estimate { value: 0.0, se: None };
    }
    let value = s[0] as f64 / n as f64;
    let se = (n >= 2).then(|| {
        let var = centered_sq(s[0], s[1], n) as f64 / (n as f64 * (n as f64 - 1.0));
        (var / n as f64).sqrt()
    });
    Estimate { value, se }
}

fn variance_estimate(s: &[u128; 4], n: u64) -> Option<Estimate> {
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let var = centered_sq(s[0], s[1], n) as f64 / (nf * (nf - 1.0));
    let m = s[0] as f64 / nf;
    let (r2, r3, r4) = (s[1] as f64 / nf, s[2] as f64 / nf, s[3] as f64 / nf);
    let m4 = r4 - 4.0 * m * r3 + 6.0 * m * m * r2 - 3.0 * m.powi(4);
    let se = ((m4 - var * var * (nf - 3.0) / (nf - 1.0)).max(0.0) / nf).sqrt();
    Some(Estimate { value: var, se: Some(se) })
}

fn covariance_estimate(ps: &PowerSums, n: u64) -> Option<Estimate> {
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let num = (n as i128) * ps.cross[0] as i128 - (ps.a[0] as i128) * (ps.e[0] as i128);
    let cov = num as f64 / (nf * (nf - 1.0));
    let (ma, me) = (ps.a[0] as f64 / nf, ps.e[0] as f64 / nf);
    let f = |x: u128| x as f64 / nf;
    // fourth mixed central moment E[(a−ā)²(e−ē)²]
    let m22 = f(ps.cross[3]) - 2.0 * me * f(ps.cross[1]) + me * me * f(ps.a[1])
        - 2.0 * ma * f(ps.cross[2])
        + 4.0 * ma * me * f(ps.cross[0])
        - 2.0 * ma * me * me * ma
        + ma * ma * f(ps.e[1])
        - 2.0 * ma * ma * me * me
        + ma * ma * me * me;
    let se = ((m22 - cov * cov).max(0.0) / nf).sqrt();
    Some(Estimate { value: cov, se: Some(se) })
}

fn mandel(mean: Estimate, var: Option<Estimate>) -> Option<Estimate> {
    let var = var?;
    if mean.value <= 0.0 {
        return None;
    }
    let value = (var.value - mean.value) / mean.value;
    let se = match (var.se, mean.se) {
        (Some(sv), Some(sm)) => {
            let a = sv / mean.value;
            let b = var.value * sm / (mean.value * mean.value);
            Some((a * a + b * b).sqrt())
        }
        _ => None,
    };
    Some(Estimate { value, se })
}

/// Mandel Q of a plain sample of counts; `None` for fewer than two samples
/// or zero mean.
pub fn empirical_mandel_q(counts: &[u32]) -> Option<f64> {
    let mut s = [0u128; 4];
    for &c in counts {
        let p = powers(c);
        for k in 0..4 {
            s[k] += p[k];
        }
    }
    let n = counts.len() as u64;
    mandel(mean_estimate(&s, n), variance_estimate(&s, n)).map(|q| q.value)
}

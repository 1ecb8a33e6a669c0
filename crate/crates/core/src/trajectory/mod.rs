//! Conditional quantum-jump trajectories and ensemble statistics.
//!
//! Each trajectory draws from its own ChaCha8 stream selected by
//! `(seed, trajectory index)`, so results do not depend on how trajectories
//! are scheduled across workers.

mod consistency;
mod stats;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channels::{
    apply_outcome, averaged_spin_channel, conditional_spin_update, hamiltonian_step,
    outcome_probabilities, radiative_kraus, sample_readout, KrausSet, Outcome, SpinChannel,
};
use crate::error::{Error, Result};
use crate::lde::steady_state;
use crate::params::{ModelParams, SpinMode};
use crate::qcore::DensityMatrix;

pub use consistency::{unconditional_consistency, ConsistencyReport, ConsistencyRow};
pub use stats::{empirical_mandel_q, EnsembleStats, Estimate, PowerSums, StepSummary};

/// Cumulative jump counts of one trajectory; entry k holds the counts after
/// k steps (entry 0 is always zero).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountRecord {
    pub index: u64,
    pub n_a: Vec<u32>,
    pub n_e: Vec<u32>,
}

/// Random stream for trajectory `index` under master seed `seed`.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One time step of the semi-conditional or conditional dynamics.
pub(crate) struct Stepper {
    params: ModelParams,
    kraus: KrausSet,
    spin: Option<SpinChannel>,
}

impl Stepper {
    pub(crate) fn new(params: &ModelParams) -> Result<Self> {
        params.validate()?;
        let r = &params.rates;
        let kraus = radiative_kraus(r.gamma_w, r.n_avg, params.dt)?;
        let spin = if r.gamma_m > 0.0 {
            Some(SpinChannel::new(r.gamma_m, params.dt)?)
        } else {
            None
        };
        Ok(Stepper { params: *params, kraus, spin })
    }

    /// Spin treatment → radiative outcome → Hamiltonian phase.
    pub(crate) fn step<R: Rng>(
        &self,
        rho: &DensityMatrix,
        rng: &mut R,
        step: usize,
    ) -> Result<(DensityMatrix, Outcome)> {
        let fail = |rho: &DensityMatrix, total: f64| Error::Normalization {
            step,
            total,
            state: format!("{rho:?}"),
        };
        let rho = match (self.spin, self.params.mode) {
            (None, _) => *rho,
            (Some(ch), SpinMode::SemiConditional) => averaged_spin_channel(&ch, rho),
            (Some(ch), SpinMode::Conditional) => {
                let r = sample_readout(&ch, rho, rng)?;
                conditional_spin_update(&ch, rho, r).ok_or_else(|| fail(rho, 0.0))?
            }
        };
        let probs = outcome_probabilities(&rho, &self.kraus);
        let total = probs.total();
        if !(total > 0.0) || !total.is_finite() {
            return Err(fail(&rho, total));
        }
        let outcome = probs.select(rng.random::<f64>());
        let rho = apply_outcome(&rho, &self.kraus, outcome)
            .ok_or_else(|| fail(&rho, probs.get(outcome)))?;
        let rho = hamiltonian_step(&rho, self.params.rates.omega, self.params.dt);
        rho.debug_validate();
        Ok((rho, outcome))
    }
}

/// Runs one trajectory from `rho0`, calling `observe(k, ρ_k, n_a, n_e)` for
/// k = 0..=steps.
pub(crate) fn simulate<F>(
    stepper: &Stepper,
    index: u64,
    rho0: DensityMatrix,
    mut observe: F,
) -> Result<()>
where
    F: FnMut(usize, &DensityMatrix, u32, u32),
{
    let params = &stepper.params;
    let mut rng = trajectory_rng(params.seed, index);
    let mut rho = rho0;
    let (mut n_a, mut n_e) = (0u32, 0u32);
    observe(0, &rho, 0, 0);
    for k in 1..=params.steps {
        let (next, outcome) = stepper
            .step(&rho, &mut rng, k)
            .map_err(|e| Error::Trajectory { index, source: Box::new(e) })?;
        match outcome {
            Outcome::Absorption => n_a += 1,
            Outcome::Emission => n_e += 1,
            Outcome::Null => {}
        }
        rho = next;
        observe(k, &rho, n_a, n_e);
    }
    Ok(())
}

/// Runs trajectory `index` from the unconditional steady state.
pub fn run_trajectory(params: &ModelParams, index: u64) -> Result<CountRecord> {
    let (_, rho_s) = steady_state(&params.rates);
    run_trajectory_from(params, index, rho_s)
}

/// Runs trajectory `index` from an arbitrary initial state.
pub fn run_trajectory_from(
    params: &ModelParams,
    index: u64,
    rho0: DensityMatrix,
) -> Result<CountRecord> {
    let stepper = Stepper::new(params)?;
    let mut n_a = Vec::with_capacity(params.steps + 1);
    let mut n_e = Vec::with_capacity(params.steps + 1);
    simulate(&stepper, index, rho0, |_, _, a, e| {
        n_a.push(a);
        n_e.push(e);
    })?;
    Ok(CountRecord { index, n_a, n_e })
}

/// Ensemble statistics over `params.trajectories` steady-state trajectories
/// on the global worker pool.
pub fn run_ensemble(params: &ModelParams) -> Result<EnsembleStats> {
    ensemble_inner(params)
}

/// Same as [`run_ensemble`] on a dedicated pool of `workers` threads.
pub fn run_ensemble_with_workers(params: &ModelParams, workers: usize) -> Result<EnsembleStats> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::param("workers", e.to_string()))?;
    pool.install(|| ensemble_inner(params))
}

fn ensemble_inner(params: &ModelParams) -> Result<EnsembleStats> {
    let stepper = Stepper::new(params)?;
    let (_, rho_s) = steady_state(&params.rates);
    let steps = params.steps;
    let dt = params.dt;
    (0..params.trajectories)
        .into_par_iter()
        .with_min_len(32)
        .try_fold(
            || EnsembleStats::new(steps, dt),
            |mut acc, index| {
                let index = index as u64;
                acc.record_with(|sink| simulate(&stepper, index, rho_s, |k, _, a, e| sink(k, a, e)))?;
                Ok(acc)
            },
        )
        .try_reduce(
            || EnsembleStats::new(steps, dt),
            |mut a, b| {
                a.merge(&b)?;
                Ok(a)
            },
        )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Rates;

    fn small(gamma_m: f64) -> ModelParams {
        ModelParams {
            rates: Rates { gamma_m, ..Rates::default() },
            steps: 400,
            trajectories: 200,
            ..ModelParams::default()
        }
    }

    #[test]
    fn deterministic_per_index() {
        let p = small(1.0);
        let a = run_trajectory(&p, 17).unwrap();
        let b = run_trajectory(&p, 17).unwrap();
        assert_eq!(a, b);
        let c = run_trajectory(&p, 18).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn counts_are_monotone_single_jumps() {
        for mode in [SpinMode::SemiConditional, SpinMode::Conditional] {
            let p = ModelParams { mode, ..small(2.0) };
            for idx in 0..20 {
                let rec = run_trajectory(&p, idx).unwrap();
                assert_eq!(rec.n_a.len(), p.steps + 1);
                assert_eq!((rec.n_a[0], rec.n_e[0]), (0, 0));
                for k in 1..rec.n_a.len() {
                    let da = rec.n_a[k] - rec.n_a[k - 1];
                    let de = rec.n_e[k] - rec.n_e[k - 1];
                    assert!(da + de <= 1);
                }
            }
        }
    }

    #[test]
    fn dark_ground_state_never_jumps() {
        let p = ModelParams {
            rates: Rates { omega: 1.0, gamma_w: 4.0, gamma_m: 0.0, n_avg: 0.0 },
            steps: 2000,
            ..ModelParams::default()
        };
        for idx in 0..10 {
            let rec = run_trajectory_from(&p, idx, DensityMatrix::ground()).unwrap();
            assert!(rec.n_a.iter().chain(&rec.n_e).all(|&n| n == 0));
        }
    }

    #[test]
    fn states_stay_valid_in_conditional_mode() {
        let p = ModelParams { mode: SpinMode::Conditional, ..small(5.0) };
        let stepper = Stepper::new(&p).unwrap();
        let rho0 = DensityMatrix::pure(
            crate::qcore::C64::new(0.6, 0.2),
            crate::qcore::C64::new(0.1, -0.7),
        )
        .unwrap();
        for idx in 0..10 {
            simulate(&stepper, idx, rho0, |_, rho, _, _| rho.validate().unwrap()).unwrap();
        }
    }

    #[test]
    fn worker_count_does_not_change_statistics() {
        let p = small(1.0);
        let one = run_ensemble_with_workers(&p, 1).unwrap();
        let four = run_ensemble_with_workers(&p, 4).unwrap();
        assert_eq!(one, four);
        assert_eq!(one.count(), 200);
    }
}

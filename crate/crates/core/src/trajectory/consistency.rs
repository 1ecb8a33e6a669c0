//! Averaged conditional states against the integrated master equation.

use rayon::prelude::*;

use super::{simulate, Stepper};
use crate::dynamics::integrate_master;
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::qcore::{DensityMatrix, Operator2, C64};

/// Trajectories per block; blocks are summed in index order so the result
/// is independent of thread scheduling.
const BLOCK: u64 = 256;
/// RK4 step for the reference solution.
const REFERENCE_H: f64 = 1e-3;

#[derive(Clone, Debug)]
pub struct ConsistencyRow {
    pub step: usize,
    pub t: f64,
    pub averaged: DensityMatrix,
    pub reference: DensityMatrix,
    pub trace_distance: f64,
    /// Statistical floor: standard error of the averaged populations and
    /// coherence added in quadrature.
    pub floor: f64,
}

#[derive(Clone, Debug)]
pub struct ConsistencyReport {
    pub trajectories: u64,
    pub rows: Vec<ConsistencyRow>,
}

impl ConsistencyReport {
    pub fn max_trace_distance(&self) -> f64 {
        self.rows.iter().map(|r| r.trace_distance).fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Default)]
struct Moments {
    // Σρ_ee, Σρ_ee², ΣRe ρ_eg, Σ(Re)², ΣIm ρ_eg, Σ(Im)²
    s: [f64; 6],
}

impl Moments {
    fn push(&mut self, rho: &DensityMatrix) {
        let d = rho.excited_population();
        let c = rho.get(0, 1);
        let v = [d, d * d, c.re, c.re * c.re, c.im, c.im * c.im];
        for (acc, x) in self.s.iter_mut().zip(v) {
            *acc += x;
        }
    }

    fn merge(&mut self, o: &Moments) {
        for (a, b) in self.s.iter_mut().zip(o.s) {
            *a += b;
        }
    }
}

/// Runs `params.trajectories` trajectories from `rho0`, averages the
/// conditional states at each checkpoint step and compares them with the
/// master equation integrated from the same initial state.
pub fn unconditional_consistency(
    params: &ModelParams,
    rho0: DensityMatrix,
    checkpoints: &[usize],
) -> Result<ConsistencyReport> {
    let stepper = Stepper::new(params)?;
    if let Some(&bad) = checkpoints.iter().find(|&&k| k > params.steps) {
        return Err(Error::param("checkpoints", format!("step {bad} exceeds {}", params.steps)));
    }
    let n = params.trajectories as u64;
    let slot: Vec<Option<usize>> = (0..=params.steps)
        .map(|k| checkpoints.iter().position(|&c| c == k))
        .collect();
    let blocks: Vec<Vec<Moments>> = (0..n.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut acc = vec![Moments::default(); checkpoints.len()];
            for index in b * BLOCK..((b + 1) * BLOCK).min(n) {
                simulate(&stepper, index, rho0, |k, rho, _, _| {
                    if let Some(i) = slot[k] {
                        acc[i].push(rho);
                    }
                })?;
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = vec![Moments::default(); checkpoints.len()];
    for block in &blocks {
        for (t, b) in total.iter_mut().zip(block) {
            t.merge(b);
        }
    }

    let nf = n as f64;
    let rows = checkpoints
        .iter()
        .zip(&total)
        .map(|(&step, m)| {
            let mean = |i: usize| m.s[i] / nf;
            let se = |i: usize| {
                if n < 2 {
                    return 0.0;
                }
                let mu = mean(i);
                ((m.s[i + 1] / nf - mu * mu).max(0.0) / (nf - 1.0)).sqrt()
            };
            let (d, cr, ci) = (mean(0), mean(2), mean(4));
            let coh = C64::new(cr, ci);
            let op = Operator2::new([[C64::new(d, 0.0), coh], [coh.conj(), C64::new(1.0 - d, 0.0)]])?;
            let averaged = DensityMatrix::from_unnormalized(&op, 1.0);
            let t = step as f64 * params.dt;
            let rk_steps = ((t / REFERENCE_H).ceil() as usize).max(1);
            let reference = integrate_master(&params.rates, &rho0, t, rk_steps);
            let floor = (se(0).powi(2) + se(2).powi(2) + se(4).powi(2)).sqrt();
            Ok(ConsistencyRow {
                step,
                t,
                trace_distance: averaged.trace_distance(&reference),
                averaged,
                reference,
                floor,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ConsistencyReport { trajectories: n, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Rates;

    #[test]
    fn average_tracks_master_equation() {
        let p = ModelParams {
            rates: Rates { gamma_m: 1.0, ..Rates::default() },
            steps: 1000,
            trajectories: 2000,
            ..ModelParams::default()
        };
        let rep = unconditional_consistency(&p, DensityMatrix::excited(), &[0, 500, 1000]).unwrap();
        assert_eq!(rep.rows[0].trace_distance, 0.0);
        for row in &rep.rows {
            assert!(row.trace_distance < 4.0 * row.floor + 2e-3, "{row:?}");
        }
    }

    #[test]
    fn rejects_out_of_range_checkpoint() {
        let p = ModelParams { steps: 10, trajectories: 2, ..ModelParams::default() };
        assert!(unconditional_consistency(&p, DensityMatrix::ground(), &[11]).is_err());
    }
}

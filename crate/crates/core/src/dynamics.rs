//! Unconditional (outcome-averaged) emitter dynamics: the Lindblad
//! right-hand side in direct 2×2 form and an RK4 integrator for it.

use crate::params::Rates;
use crate::qcore::{DensityMatrix, Operator2, C64};

fn dissipator(l: &Operator2, rho: &Operator2) -> Operator2 {
    let ldl = l.adjoint() * *l;
    l.sandwich(rho) - ldl.anticommutator(rho).scale_re(0.5)
}

/// `dρ/dt = −i[H₀,ρ] − γ_m[σ_x,[σ_x,ρ]] + γ_w(⟨n⟩+1)D[σ₋]ρ + γ_w⟨n⟩D[σ₊]ρ`
pub fn lindblad_rhs(rates: &Rates, rho: &Operator2) -> Operator2 {
    let h0 = Operator2::proj_excited().scale_re(rates.omega);
    let sx = Operator2::sigma_x();
    let coherent = h0.commutator(rho).scale(C64::new(0.0, -1.0));
    let dephase = sx.commutator(&sx.commutator(rho)).scale_re(-rates.gamma_m);
    let emit = dissipator(&Operator2::sigma_minus(), rho).scale_re(rates.gamma_w * rates.x_e());
    let absorb = dissipator(&Operator2::sigma_plus(), rho).scale_re(rates.gamma_w * rates.x_a());
    coherent + dephase + emit + absorb
}

/// Classical fourth-order Runge–Kutta from `rho0` over `t` in `steps` steps.
pub fn integrate_master(rates: &Rates, rho0: &DensityMatrix, t: f64, steps: usize) -> DensityMatrix {
    let mut rho = *rho0.op();
    if steps == 0 {
        return *rho0;
    }
    let h = t / steps as f64;
    for _ in 0..steps {
        let k1 = lindblad_rhs(rates, &rho);
        let k2 = lindblad_rhs(rates, &(rho + k1.scale_re(0.5 * h)));
        let k3 = lindblad_rhs(rates, &(rho + k2.scale_re(0.5 * h)));
        let k4 = lindblad_rhs(rates, &(rho + k3.scale_re(h)));
        rho = rho + (k1 + k2.scale_re(2.0) + k3.scale_re(2.0) + k4).scale_re(h / 6.0);
    }
    let tr = rho.trace().re;
    DensityMatrix::from_unnormalized(&rho, tr)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_is_trace_preserving() {
        let rates = Rates { omega: 1.3, gamma_w: 4.0, gamma_m: 2.0, n_avg: 0.7 };
        let rho = DensityMatrix::pure(C64::new(0.3, 0.2), C64::new(-0.5, 0.9)).unwrap();
        let d = lindblad_rhs(&rates, rho.op());
        assert!(d.trace().norm() < 1e-15);
        assert!(d.hermiticity_defect() < 1e-15);
    }

    #[test]
    fn vacuum_decay_matches_exponential() {
        let rates = Rates { omega: 1.0, gamma_w: 4.0, gamma_m: 0.0, n_avg: 0.0 };
        for t in [0.1, 0.5, 1.0] {
            let rho = integrate_master(&rates, &DensityMatrix::excited(), t, 2000);
            assert!((rho.excited_population() - (-4.0 * t).exp()).abs() < 1e-12);
        }
    }
}

//! θ(s) near s = 0 from the eigenvalue branch that continues the zero mode
//! of the untilted generator, and finite differences built on it.
//!
//! Writing `W(s) = W(0) + V(s)` with `V = expm1(−s_a)J_a + expm1(−s_e)J_e`,
//! the branch satisfies `θ = l₀·V(r₀ + x)`, `(θ − W(0) + r₀l₀ᵀ)x = P V(r₀ + x)`
//! where `l₀ = vec(I)`, `r₀ = vec(ρ_s)` and `P = I − r₀l₀ᵀ`. Every term is
//! O(s), so θ comes out with small *relative* error. A dense eigensolver
//! only reaches absolute error ~1e-15, which swamps second differences at
//! step 1e-5.

use super::{generator_parts, steady_state_numeric, CountingCumulants, MomentReport, TiltParams};
use crate::error::{Error, Result};
use crate::params::Rates;
use crate::qcore::{vectorize, Operator2, Superoperator4, C64};

pub const DEFAULT_FD_STEP: f64 = 1e-5;
const MAX_ITER: usize = 200;

fn dot(a: &[C64; 4], b: &[C64; 4]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn add(a: &[C64; 4], b: &[C64; 4]) -> [C64; 4] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

/// Leading θ(s_a, s_e) for small tilts, continued from θ(0, 0) = 0.
pub fn theta_near_zero(tilts: TiltParams, rates: &Rates) -> Result<f64> {
    let parts = generator_parts(rates);
    let w0 = parts.base + parts.jump_a + parts.jump_e;
    let v = parts.jump_a.scale_re((-tilts.s_a).exp_m1()) + parts.jump_e.scale_re((-tilts.s_e).exp_m1());
    let r0 = steady_state_numeric(rates)?;
    let l0 = vectorize(&Operator2::identity());

    let project = |z: [C64; 4]| {
        let c = dot(&l0, &z);
        [z[0] - r0[0] * c, z[1] - r0[1] * c, z[2] - r0[2] * c, z[3] - r0[3] * c]
    };
    let mut x = [C64::new(0.0, 0.0); 4];
    let mut theta = dot(&l0, &v.apply_vec(&r0));
    for _ in 0..MAX_ITER {
        let rhs = project(v.apply_vec(&add(&r0, &x)));
        let mut a = w0.scale_re(-1.0);
        let mut m = *a.entries();
        for (i, row) in m.iter_mut().enumerate() {
            row[i] += theta;
            for (j, z) in row.iter_mut().enumerate() {
                *z += r0[i] * l0[j];
            }
        }
        a = Superoperator4::new(m)?;
        let x_new = a.solve(&rhs).ok_or(Error::EigenNoConvergence { iterations: 0 })?;
        let theta_new = dot(&l0, &v.apply_vec(&add(&r0, &x_new)));
        let change = (theta_new - theta).norm();
        x = x_new;
        theta = theta_new;
        if change <= 4.0 * f64::EPSILON * theta.norm() || theta.norm() == 0.0 {
            if theta.im.abs() > 1e-9 * (1.0 + theta.re.abs()) {
                return Err(Error::NonRealLeading { re: theta.re, im: theta.im });
            }
            return Ok(theta.re);
        }
    }
    Err(Error::EigenNoConvergence { iterations: MAX_ITER })
}

/// Central finite differences of the numerically computed θ at s = 0:
/// first derivatives give the mean rates, second and mixed derivatives the
/// variance and covariance rates. Scaled to time `t`.
pub fn scgf_derivatives_fd(rates: &Rates, step: f64, t: f64) -> Result<MomentReport> {
    if !(1e-6..=1e-3).contains(&step) {
        return Err(Error::param("step", format!("must lie in [1e-6, 1e-3] (got {step})")));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::param("t", format!("must be >= 0 (got {t})")));
    }
    let h = step;
    let th = |a: f64, e: f64| theta_near_zero(TiltParams { s_a: a, s_e: e }, rates);
    let t0 = th(0.0, 0.0)?;
    let (ap, am) = (th(h, 0.0)?, th(-h, 0.0)?);
    let (ep, em) = (th(0.0, h)?, th(0.0, -h)?);
    let (pp, pm) = (th(h, h)?, th(h, -h)?);
    let (mp, mm) = (th(-h, h)?, th(-h, -h)?);
    let c = CountingCumulants {
        mean_a: -(ap - am) / (2.0 * h),
        mean_e: -(ep - em) / (2.0 * h),
        var_a: (ap - 2.0 * t0 + am) / (h * h),
        var_e: (ep - 2.0 * t0 + em) / (h * h),
        cov_ae: (pp - pm - mp + mm) / (4.0 * h * h),
    };
    Ok(MomentReport::from_cumulants(c, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lde::{cumulant_rates, theta_numeric};

    #[test]
    fn matches_dense_eigensolver_at_moderate_tilt() {
        for (gm, n) in [(1.0, 1.0), (0.0, 0.5), (3.0, 0.0)] {
            let r = Rates { omega: 1.0, gamma_w: 4.0, gamma_m: gm, n_avg: n };
            for (sa, se) in [(0.05, -0.02), (-0.1, 0.1), (1e-4, 3e-4)] {
                let t = TiltParams { s_a: sa, s_e: se };
                let a = theta_near_zero(t, &r).unwrap();
                let b = theta_numeric(t, &r).unwrap();
                assert!((a - b).abs() < 1e-13, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn zero_tilt_is_exactly_zero() {
        let r = Rates::default();
        assert_eq!(theta_near_zero(TiltParams::ZERO, &r).unwrap(), 0.0);
    }

    #[test]
    fn fd_rates_at_figure_point() {
        let r = Rates::default();
        let fd = scgf_derivatives_fd(&r, DEFAULT_FD_STEP, 1.0).unwrap();
        assert!((fd.mean_a - 2.5).abs() < 1e-9);
        assert!((fd.mean_e - 3.0).abs() < 1e-9);
        assert!((fd.cov_ae - 1.0625).abs() < 1e-6);
        let cf = cumulant_rates(&r);
        assert!((fd.var_a - cf.var_a).abs() < 1e-6 * cf.var_a);
    }

    #[test]
    fn vacuum_absorption_slope_vanishes() {
        let r = Rates { n_avg: 0.0, ..Rates::default() };
        let fd = scgf_derivatives_fd(&r, DEFAULT_FD_STEP, 1.0).unwrap();
        assert_eq!(fd.mean_a, 0.0);
    }

    #[test]
    fn step_range_enforced() {
        assert!(scgf_derivatives_fd(&Rates::default(), 1e-2, 1.0).is_err());
        assert!(scgf_derivatives_fd(&Rates::default(), 1e-7, 1.0).is_err());
    }
}

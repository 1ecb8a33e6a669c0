//! Truncated Fock-space derivation of the radiative Kraus operators.
//!
//! The emitter is coupled to a probe field mode for one step of length dt,
//! the field is projected on an outcome, and the resulting emitter map is
//! reconstructed from its Choi matrix. Two field preparations are supported:
//! a number state |n⟩ (one mode), and a two-mode squeezed vacuum whose
//! second mode serves as a reference that the probe occupation is compared
//! against.

use crate::channels::{radiative_kraus, KrausSet, Outcome};
use crate::error::{Error, Result};
use crate::params::MAX_JUMP_PROBABILITY;
use crate::qcore::{Operator2, C64};

/// Verification runs use a step far below the trajectory dt.
pub const DEFAULT_VERIFY_DT: f64 = 1e-6;
/// Bound on the neglected squeezed-state tail Σ_{n > N_max} P_n.
pub const TAIL_BOUND: f64 = 1e-12;
/// Largest tolerated weight on the top retained probe level of the input.
pub const LEAKAGE_TOL: f64 = 1e-10;

const E: usize = 0;
const G: usize = 1;

/// How the joint emitter–probe propagator for one step is built.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Expansion {
    /// `1 − i√x(σ₊a + σ₋a†) − (x/2)(|e⟩⟨e|(a†a+1) + |g⟩⟨g|a†a)` with x = γ_w dt.
    #[default]
    Truncated,
    /// Exact exponential on each block {|e,k⟩, |g,k+1⟩}.
    Exact,
}

/// Field amplitudes over probe ⊗ reference, probe levels 0..=N_max.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldState {
    probe_dim: usize,
    ref_dim: usize,
    amps: Vec<C64>,
}

impl FieldState {
    pub fn new(probe_dim: usize, ref_dim: usize, amps: Vec<C64>) -> Result<Self> {
        if probe_dim == 0 || ref_dim == 0 || amps.len() != probe_dim * ref_dim {
            return Err(Error::param("field", "amplitude count does not match dimensions"));
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::param("field", "non-finite amplitude"));
        }
        Ok(FieldState { probe_dim, ref_dim, amps })
    }

    /// Single-mode number state |n⟩ truncated at `n_max` ≥ n.
    pub fn number(n: usize, n_max: usize) -> Result<Self> {
        if n > n_max {
            return Err(Error::param("n_max", format!("must be >= n = {n}")));
        }
        let mut amps = vec![C64::new(0.0, 0.0); n_max + 1];
        amps[n] = C64::new(1.0, 0.0);
        FieldState::new(n_max + 1, 1, amps)
    }

    pub fn n_max(&self) -> usize {
        self.probe_dim - 1
    }

    pub fn ref_dim(&self) -> usize {
        self.ref_dim
    }

    pub fn amplitude(&self, probe: usize, reference: usize) -> C64 {
        self.amps[probe * self.ref_dim + reference]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Probe-mode density matrix with the reference mode traced out.
    pub fn reduced_probe(&self) -> Vec<Vec<C64>> {
        let mut out = vec![vec![C64::new(0.0, 0.0); self.probe_dim]; self.probe_dim];
        for (p, row) in out.iter_mut().enumerate() {
            for (p2, z) in row.iter_mut().enumerate() {
                *z = (0..self.ref_dim)
                    .map(|q| self.amplitude(p, q) * self.amplitude(p2, q).conj())
                    .sum();
            }
        }
        out
    }

    fn top_level_weight(&self) -> f64 {
        (0..self.ref_dim).map(|q| self.amplitude(self.n_max(), q).norm_sqr()).sum()
    }
}

/// Emitter ⊗ probe ⊗ reference amplitudes after one step. The probe
/// dimension is one larger than the input's so emission from the top
/// level is not cut off.
#[derive(Clone, Debug, PartialEq)]
pub struct JointState {
    probe_dim: usize,
    ref_dim: usize,
    amps: Vec<C64>,
}

impl JointState {
    fn zeros(probe_dim: usize, ref_dim: usize) -> Self {
        JointState { probe_dim, ref_dim, amps: vec![C64::new(0.0, 0.0); 2 * probe_dim * ref_dim] }
    }

    fn idx(&self, emitter: usize, probe: usize, reference: usize) -> usize {
        (emitter * self.probe_dim + probe) * self.ref_dim + reference
    }

    pub fn amplitude(&self, emitter: usize, probe: usize, reference: usize) -> C64 {
        self.amps[self.idx(emitter, probe, reference)]
    }

    /// Largest probe level held (input N_max + 1).
    pub fn probe_max(&self) -> usize {
        self.probe_dim - 1
    }

    pub fn ref_dim(&self) -> usize {
        self.ref_dim
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// One step of the emitter–probe interaction with x = γ_w dt applied to
/// the product state `emitter ⊗ field`.
pub fn joint_step(
    emitter: [C64; 2],
    field: &FieldState,
    gamma_w: f64,
    dt: f64,
    expansion: Expansion,
) -> Result<JointState> {
    if !(gamma_w >= 0.0 && gamma_w.is_finite()) {
        return Err(Error::param("gamma_w", format!("must be finite and >= 0 (got {gamma_w})")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param("dt", format!("must be finite and > 0 (got {dt})")));
    }
    let x = gamma_w * dt;
    let n_max = field.n_max();
    if (n_max + 1) as f64 * x > MAX_JUMP_PROBABILITY {
        return Err(Error::param(
            "dt",
            format!("(N_max+1)·gamma_w·dt = {:e} exceeds {MAX_JUMP_PROBABILITY}", (n_max + 1) as f64 * x),
        ));
    }
    let leak = field.top_level_weight();
    if n_max > 0 && leak > LEAKAGE_TOL {
        return Err(Error::Truncation { weight: leak, n_max, suggested: 2 * n_max + 1 });
    }

    // (stay, hop) amplitudes for |e,p⟩ → |e,p⟩, |g,p+1⟩ and |g,p⟩ → |g,p⟩, |e,p−1⟩
    let coeffs = |photons: usize| -> (C64, C64) {
        let k = photons as f64;
        match expansion {
            Expansion::Truncated => (C64::new(1.0 - 0.5 * x * k, 0.0), C64::new(0.0, -(x * k).sqrt())),
            Expansion::Exact => {
                let th = (x * k).sqrt();
                (C64::new(th.cos(), 0.0), C64::new(0.0, -th.sin()))
            }
        }
    };

    let mut out = JointState::zeros(field.probe_dim + 1, field.ref_dim);
    for p in 0..field.probe_dim {
        for q in 0..field.ref_dim {
            let f = field.amplitude(p, q);
            if f == C64::new(0.0, 0.0) {
                continue;
            }
            let (stay_e, hop_e) = coeffs(p + 1);
            let ae = emitter[E] * f;
            let i = out.idx(E, p, q);
            out.amps[i] += stay_e * ae;
            let i = out.idx(G, p + 1, q);
            out.amps[i] += hop_e * ae;

            let (stay_g, hop_g) = coeffs(p);
            let ag = emitter[G] * f;
            let i = out.idx(G, p, q);
            out.amps[i] += stay_g * ag;
            if p > 0 {
                let i = out.idx(E, p - 1, q);
                out.amps[i] += hop_g * ag;
            }
        }
    }
    Ok(out)
}

/// Two-mode squeezed vacuum Σ √P_n |n⟩|n⟩ truncated at N_max.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoModeSqueezed {
    pub r: f64,
    pub n_max: usize,
    pub weights: Vec<f64>,
}

impl TwoModeSqueezed {
    /// tanh²(r)
    pub fn ratio(&self) -> f64 {
        self.r.tanh().powi(2)
    }

    /// Neglected weight Σ_{n > N_max} P_n = tanh^{2(N_max+1)}(r).
    pub fn tail(&self) -> f64 {
        self.ratio().powi(self.n_max as i32 + 1)
    }

    pub fn mean_occupation(&self) -> f64 {
        self.weights.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    /// Joint probe ⊗ reference state, renormalized over the retained levels
    /// so the neglected tail does not appear as a dt-independent offset in
    /// the reconstructed operators.
    pub fn field_state(&self) -> FieldState {
        let d = self.n_max + 1;
        let total: f64 = self.weights.iter().sum();
        let mut amps = vec![C64::new(0.0, 0.0); d * d];
        for (n, p) in self.weights.iter().enumerate() {
            amps[n * d + n] = C64::new((p / total).sqrt(), 0.0);
        }
        FieldState { probe_dim: d, ref_dim: d, amps }
    }
}

/// Smallest N_max with tanh^{2(N_max+1)}(r) below the tail bound.
pub fn auto_n_max(n_avg: f64) -> usize {
    let q = n_avg / (n_avg + 1.0);
    if q <= 0.0 {
        return 0;
    }
    let mut n = 0usize;
    while q.powi(n as i32 + 1) >= TAIL_BOUND {
        n += 1;
    }
    n
}

/// Squeezed state with ⟨n⟩ = sinh²(r) = `n_avg`; `n_max = None` picks the
/// smallest truncation meeting the tail bound.
pub fn tmss_prepare(n_avg: f64, n_max: Option<usize>) -> Result<TwoModeSqueezed> {
    if !(n_avg > 0.0 && n_avg.is_finite()) {
        return Err(Error::param("n_avg", format!("must be finite and > 0 (got {n_avg})")));
    }
    let r = n_avg.sqrt().asinh();
    let suggested = auto_n_max(n_avg);
    let n_max = n_max.unwrap_or(suggested);
    let c2 = r.cosh().powi(2);
    let t2 = r.tanh().powi(2);
    let weights: Vec<f64> = (0..=n_max).map(|n| t2.powi(n as i32) / c2).collect();
    let state = TwoModeSqueezed { r, n_max, weights };
    let tail = state.tail();
    if tail >= TAIL_BOUND {
        return Err(Error::Truncation { weight: tail, n_max, suggested });
    }
    Ok(state)
}

/// Emitter operators recovered from the projected joint evolution, with
/// diagnostics. Completeness holds only to O(dt²), so this is kept apart
/// from [`KrausSet`].
#[derive(Clone, Debug)]
pub struct ReconstructedKraus {
    pub m_a: Operator2,
    pub m_e: Operator2,
    pub m_o: Operator2,
    /// max |Σ M†M − I|
    pub completeness_defect: f64,
    /// Largest deviation of an outcome map from the single-operator form M·M†.
    pub rank1_residual: f64,
    /// Weight falling outside all three projectors.
    pub orthogonal_weight: f64,
    /// max |‖Ψ_dt‖² − 1| over emitter basis inputs.
    pub norm_defect: f64,
}

/// Elementwise deviations from a reference Kraus set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrausDeviation {
    pub absorption: f64,
    pub emission: f64,
    pub null: f64,
}

impl KrausDeviation {
    pub fn jumps(&self) -> f64 {
        self.absorption.max(self.emission)
    }
}

impl ReconstructedKraus {
    pub fn operator(&self, outcome: Outcome) -> &Operator2 {
        match outcome {
            Outcome::Absorption => &self.m_a,
            Outcome::Emission => &self.m_e,
            Outcome::Null => &self.m_o,
        }
    }

    pub fn deviation_from(&self, set: &KrausSet) -> KrausDeviation {
        KrausDeviation {
            absorption: self.m_a.max_abs_diff(set.m_a()),
            emission: self.m_e.max_abs_diff(set.m_e()),
            null: self.m_o.max_abs_diff(set.m_o()),
        }
    }

    /// Σ_k M_k ρ M_k† on an arbitrary 2×2 operator.
    pub fn average(&self, rho: &Operator2) -> Operator2 {
        self.m_a.sandwich(rho) + self.m_e.sandwich(rho) + self.m_o.sandwich(rho)
    }
}

fn reconstruct(
    field: &FieldState,
    gamma_w: f64,
    dt: f64,
    expansion: Expansion,
    classify: impl Fn(usize, usize) -> Option<Outcome>,
) -> Result<ReconstructedKraus> {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let psi = [
        joint_step([one, zero], field, gamma_w, dt, expansion)?,
        joint_step([zero, one], field, gamma_w, dt, expansion)?,
    ];
    let f0 = field.norm_sqr();
    let norm_defect = psi.iter().map(|s| (s.norm_sqr() - f0).abs()).fold(0.0, f64::max);

    let (pd, rd) = (psi[0].probe_dim, psi[0].ref_dim);
    let mut orthogonal_weight: f64 = 0.0;
    for s in &psi {
        let mut w = 0.0;
        for i in 0..2 {
            for p in 0..pd {
                for q in 0..rd {
                    if classify(p, q).is_none() {
                        w += s.amplitude(i, p, q).norm_sqr();
                    }
                }
            }
        }
        orthogonal_weight = orthogonal_weight.max(w);
    }

    let mut ops = [Operator2::zero(); 3];
    let mut rank1_residual: f64 = 0.0;
    for (slot, outcome) in [Outcome::Absorption, Outcome::Emission, Outcome::Null].into_iter().enumerate() {
        let cells: Vec<(usize, usize)> = (0..pd)
            .flat_map(|p| (0..rd).map(move |q| (p, q)))
            .filter(|&(p, q)| classify(p, q) == Some(outcome))
            .collect();
        // Choi entries C[(i,j),(i2,l)] = ⟨i|Φ(|j⟩⟨l|)|i2⟩
        let choi = |i: usize, j: usize, i2: usize, l: usize| -> C64 {
            cells
                .iter()
                .map(|&(p, q)| psi[j].amplitude(i, p, q) * psi[l].amplitude(i2, p, q).conj())
                .sum()
        };
        let mut best = (0, 0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                let d = choi(i, j, i, j).re;
                if d > best.2 {
                    best = (i, j, d);
                }
            }
        }
        let (is, js, d) = best;
        let mut m = [[zero; 2]; 2];
        if d > 0.0 {
            // global phase taken from the dominant joint amplitude
            let lead = cells
                .iter()
                .map(|&(p, q)| psi[js].amplitude(is, p, q))
                .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
                .unwrap_or(one);
            let pivot = C64::from_polar(d.sqrt(), lead.arg());
            for (i, row) in m.iter_mut().enumerate() {
                for (j, z) in row.iter_mut().enumerate() {
                    *z = choi(i, j, is, js) / pivot.conj();
                }
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                for i2 in 0..2 {
                    for l in 0..2 {
                        let r = (choi(i, j, i2, l) - m[i][j] * m[i2][l].conj()).norm();
                        rank1_residual = rank1_residual.max(r);
                    }
                }
            }
        }
        ops[slot] = Operator2::new(m)?;
    }
    let [m_a, m_e, m_o] = ops;
    let sum = m_a.adjoint() * m_a + m_e.adjoint() * m_e + m_o.adjoint() * m_o;
    let completeness_defect = sum.max_abs_diff(&Operator2::identity().scale_re(f0));
    Ok(ReconstructedKraus { m_a, m_e, m_o, completeness_defect, rank1_residual, orthogonal_weight, norm_defect })
}

/// Kraus operators for a number-state environment |n⟩: the probe is
/// projected on |n−1⟩ (absorption), |n+1⟩ (emission) and |n⟩ (null).
pub fn effective_kraus_single_mode(
    n: usize,
    gamma_w: f64,
    dt: f64,
    expansion: Expansion,
) -> Result<ReconstructedKraus> {
    let field = FieldState::number(n, n + 1)?;
    reconstruct(&field, gamma_w, dt, expansion, |p, _| {
        if p + 1 == n {
            Some(Outcome::Absorption)
        } else if p == n + 1 {
            Some(Outcome::Emission)
        } else if p == n {
            Some(Outcome::Null)
        } else {
            None
        }
    })
}

/// Kraus operators for a squeezed-vacuum probe compared against its
/// reference beam: probe one below the reference is an absorption, one
/// above an emission, equal occupation the null outcome.
pub fn effective_kraus_tmss(
    n_avg: f64,
    gamma_w: f64,
    dt: f64,
    n_max: Option<usize>,
    expansion: Expansion,
) -> Result<ReconstructedKraus> {
    let tmss = tmss_prepare(n_avg, n_max)?;
    reconstruct(&tmss.field_state(), gamma_w, dt, expansion, |p, q| {
        if p + 1 == q {
            Some(Outcome::Absorption)
        } else if p == q + 1 {
            Some(Outcome::Emission)
        } else if p == q {
            Some(Outcome::Null)
        } else {
            None
        }
    })
}

/// Reconstruction compared with [`radiative_kraus`] at the same parameters.
pub fn tmss_deviation(
    n_avg: f64,
    gamma_w: f64,
    dt: f64,
    n_max: Option<usize>,
) -> Result<(ReconstructedKraus, KrausDeviation)> {
    let rec = effective_kraus_tmss(n_avg, gamma_w, dt, n_max, Expansion::Truncated)?;
    let dev = rec.deviation_from(&radiative_kraus(gamma_w, n_avg, dt)?);
    Ok((rec, dev))
}

#[cfg(test)]
mod tests {
    use super::*;

    const X: f64 = 4.0 * 1e-6;

    #[test]
    fn dark_state_is_stationary() {
        let f = FieldState::number(0, 1).unwrap();
        let s = joint_step([C64::new(0.0, 0.0), C64::new(1.0, 0.0)], &f, 4.0, 1e-6, Expansion::Truncated).unwrap();
        assert_eq!(s.amplitude(G, 0, 0), C64::new(1.0, 0.0));
        assert_eq!(s.norm_sqr(), 1.0);
    }

    #[test]
    fn single_photon_absorption_amplitude() {
        let f = FieldState::number(1, 2).unwrap();
        let s = joint_step([C64::new(0.0, 0.0), C64::new(1.0, 0.0)], &f, 4.0, 1e-6, Expansion::Truncated).unwrap();
        let a = s.amplitude(E, 0, 0);
        assert!(a.re == 0.0 && (a.im + X.sqrt()).abs() < 1e-18);
    }

    #[test]
    fn vacuum_has_no_absorption() {
        let k = effective_kraus_single_mode(0, 4.0, 1e-6, Expansion::Truncated).unwrap();
        assert_eq!(k.m_a.max_abs(), 0.0);
        let me = k.m_e.get(1, 0);
        assert!((me - C64::new(0.0, -X.sqrt())).norm() < 1e-15);
    }

    #[test]
    fn figure_point_magnitudes() {
        let k = effective_kraus_single_mode(1, 4.0, 5e-4, Expansion::Truncated).unwrap();
        assert!((k.m_e.get(1, 0).norm() - 0.004f64.sqrt()).abs() < 1e-12);
        assert!((k.m_a.get(0, 1).norm() - 0.002f64.sqrt()).abs() < 1e-12);
        assert_eq!(k.orthogonal_weight, 0.0);
    }

    #[test]
    fn tmss_example_values() {
        let t = tmss_prepare(1.0, None).unwrap();
        assert!((t.r - 0.881373587019543).abs() < 1e-12);
        assert!((t.ratio() - 0.5).abs() < 1e-15);
        assert!(t.n_max <= 45);
        assert!((t.mean_occupation() - 1.0).abs() < 1e-10);
        assert!((tmss_prepare(0.5, None).unwrap().r - 0.658478948462408).abs() < 1e-12);
    }

    #[test]
    fn tmss_rejects_short_truncation() {
        match tmss_prepare(1.0, Some(10)) {
            Err(Error::Truncation { suggested, .. }) => assert_eq!(suggested, auto_n_max(1.0)),
            other => panic!("{other:?}"),
        }
        assert!(tmss_prepare(0.0, None).is_err());
    }

    #[test]
    fn reduced_probe_is_diagonal_thermal() {
        let t = tmss_prepare(0.5, None).unwrap();
        let red = t.field_state().reduced_probe();
        for (p, row) in red.iter().enumerate() {
            for (p2, z) in row.iter().enumerate() {
                if p == p2 {
                    assert!((z.re - t.weights[p]).abs() < 1e-15 + 2.0 * t.tail());
                } else {
                    assert_eq!(*z, C64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn exact_expansion_is_unitary() {
        let f = FieldState::number(2, 3).unwrap();
        let c = C64::new(0.6, 0.0);
        let s = joint_step([c, C64::new(0.0, 0.8)], &f, 4.0, 1e-3, Expansion::Exact).unwrap();
        assert!((s.norm_sqr() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn leakage_at_top_level_is_an_error() {
        let f = FieldState::number(3, 3).unwrap();
        let one = C64::new(1.0, 0.0);
        assert!(matches!(
            joint_step([one, C64::new(0.0, 0.0)], &f, 4.0, 1e-6, Expansion::Truncated),
            Err(Error::Truncation { .. })
        ));
    }
}

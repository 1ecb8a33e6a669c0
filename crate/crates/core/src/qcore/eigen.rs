//! Eigenvalues of a general complex 4×4 matrix: Householder reduction to
//! upper Hessenberg form followed by single-shift complex QR with deflation.
//! Eigenvectors come from inverse iteration and every pair is checked
//! against the residual bound `‖(M − λI)v‖ ≤ 1e-9·‖M‖`.

use super::{lu_solve, Superoperator4, C64, ONE, ZERO};
use crate::error::{Error, Result};

const N: usize = 4;
/// QR sweeps allowed per deflated eigenvalue.
const MAX_SWEEPS: usize = 60;
pub const RESIDUAL_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct Eigen4 {
    pub values: [C64; 4],
    /// Unit-norm eigenvectors; `vectors[k]` belongs to `values[k]`.
    pub vectors: [[C64; 4]; 4],
    /// Largest residual `‖(M − λI)v‖` over the four pairs.
    pub max_residual: f64,
}

pub fn eigenvalues4(m: &Superoperator4) -> Result<[C64; 4]> {
    Ok(eigen4(m)?.values)
}

pub fn eigen4(m: &Superoperator4) -> Result<Eigen4> {
    let norm = m.norm();
    if norm == 0.0 {
        let mut vectors = [[ZERO; 4]; 4];
        for (k, v) in vectors.iter_mut().enumerate() {
            v[k] = ONE;
        }
        return Ok(Eigen4 { values: [ZERO; 4], vectors, max_residual: 0.0 });
    }
    let values = qr_eigenvalues(*m.entries())?;
    let bound = RESIDUAL_TOL * norm;
    let mut vectors = [[ZERO; 4]; 4];
    let mut max_residual: f64 = 0.0;
    for (k, &lambda) in values.iter().enumerate() {
        let v = inverse_iteration(m, lambda, norm);
        let r = residual(m, lambda, &v);
        if !(r <= bound) {
            return Err(Error::EigenResidual { residual: r, bound });
        }
        max_residual = max_residual.max(r);
        vectors[k] = v;
    }
    Ok(Eigen4 { values, vectors, max_residual })
}

/// The eigenvalue with the largest real part, required to be real to within
/// `1e-9·(1 + |Re λ|)`.
pub fn leading_real_eigenvalue(m: &Superoperator4) -> Result<f64> {
    let values = eigenvalues4(m)?;
    let lead = values
        .iter()
        .copied()
        .max_by(|a, b| a.re.total_cmp(&b.re))
        .expect("four eigenvalues");
    if lead.im.abs() > 1e-9 * (1.0 + lead.re.abs()) {
        return Err(Error::NonRealLeading { re: lead.re, im: lead.im });
    }
    Ok(lead.re)
}

fn residual(m: &Superoperator4, lambda: C64, v: &[C64; 4]) -> f64 {
    let mv = m.apply_vec(v);
    mv.iter()
        .zip(v)
        .map(|(a, b)| (a - lambda * b).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

fn normalize(v: &mut [C64; 4]) -> f64 {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|z| *z /= n);
    }
    n
}

fn inverse_iteration(m: &Superoperator4, lambda: C64, norm: f64) -> [C64; 4] {
    // A shift just off λ keeps the system solvable; the residual stays ~|δ|.
    let delta = C64::new(1e-13 * norm, 1e-13 * norm);
    let mut a = *m.entries();
    for (i, row) in a.iter_mut().enumerate() {
        row[i] -= lambda + delta;
    }
    let mut v = [
        C64::new(1.0, 0.0),
        C64::new(0.8, 0.3),
        C64::new(-0.6, 0.5),
        C64::new(0.4, -0.7),
    ];
    normalize(&mut v);
    for _ in 0..3 {
        match lu_solve(a, v) {
            Some(mut x) => {
                if normalize(&mut x) == 0.0 || x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    break;
                }
                v = x;
            }
            None => {
                // exactly singular: λ + δ is itself an eigenvalue, take a null vector
                return null_vector(a).unwrap_or(v);
            }
        }
    }
    v
}

fn null_vector(mut a: [[C64; 4]; 4]) -> Option<[C64; 4]> {
    // Gaussian elimination to row echelon form; free variable set to one.
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..N {
        let p = (row..N).max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))?;
        if a[p][col].norm() == 0.0 {
            continue;
        }
        a.swap(p, row);
        for i in 0..N {
            if i != row {
                let f = a[i][col] / a[row][col];
                for j in 0..N {
                    let t = a[row][j];
                    a[i][j] -= f * t;
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == N {
            return None;
        }
    }
    let free = (0..N).find(|c| !pivots.contains(c))?;
    let mut v = [ZERO; 4];
    v[free] = ONE;
    for (r, &c) in pivots.iter().enumerate() {
        v[c] = -a[r][free] / a[r][c];
    }
    normalize(&mut v);
    Some(v)
}

/// Householder reduction to upper Hessenberg form (similarity transform).
fn hessenberg(a: &mut [[C64; 4]; 4]) {
    for k in 0..N - 2 {
        let alpha = (k + 1..N).map(|i| a[i][k].norm_sqr()).sum::<f64>().sqrt();
        if alpha == 0.0 {
            continue;
        }
        let x0 = a[k + 1][k];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { ONE };
        let mut v = [ZERO; 4];
        for i in k + 1..N {
            v[i] = a[i][k];
        }
        v[k + 1] += phase * alpha;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // A ← (I − 2vv†/v†v) A
        for j in 0..N {
            let s: C64 = (k + 1..N).map(|i| v[i].conj() * a[i][j]).sum();
            let f = s * (2.0 / vnorm2);
            for i in k + 1..N {
                a[i][j] -= v[i] * f;
            }
        }
        // A ← A (I − 2vv†/v†v)
        for row in a.iter_mut() {
            let s: C64 = (k + 1..N).map(|j| row[j] * v[j]).sum();
            let f = s * (2.0 / vnorm2);
            for j in k + 1..N {
                row[j] -= f * v[j].conj();
            }
        }
        for i in k + 2..N {
            a[i][k] = ZERO;
        }
    }
}

/// Eigenvalue of the trailing 2×2 block nearer to its bottom-right entry.
fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mid = (a + d) * 0.5;
    let l1 = mid + disc;
    let l2 = mid - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

fn qr_eigenvalues(mut h: [[C64; 4]; 4]) -> Result<[C64; 4]> {
    hessenberg(&mut h);
    let mut values = [ZERO; 4];
    let mut hi = N - 1;
    let mut sweeps = 0usize;
    let mut total = 0usize;
    loop {
        if hi == 0 {
            values[0] = h[0][0];
            break;
        }
        // locate the start of the active unreduced block
        let mut lo = hi;
        while lo > 0 {
            let scale = h[lo][lo].norm() + h[lo - 1][lo - 1].norm();
            let scale = if scale == 0.0 { 1.0 } else { scale };
            if h[lo][lo - 1].norm() <= f64::EPSILON * scale {
                h[lo][lo - 1] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            values[hi] = h[hi][hi];
            hi -= 1;
            sweeps = 0;
            continue;
        }
        sweeps += 1;
        total += 1;
        if sweeps > MAX_SWEEPS {
            return Err(Error::EigenNoConvergence { iterations: total });
        }
        let mu = if sweeps.is_multiple_of(11) {
            // exceptional shift to break symmetric stalls
            h[hi][hi] + C64::new(h[hi][hi - 1].norm(), 0.0) * 0.75
        } else {
            wilkinson_shift(h[hi - 1][hi - 1], h[hi - 1][hi], h[hi][hi - 1], h[hi][hi])
        };
        qr_sweep(&mut h, lo, hi, mu);
    }
    Ok(values)
}

/// One explicit shifted QR step `H − μI = QR, H ← RQ + μI` on rows/columns
/// `lo..=hi` using Givens rotations.
fn qr_sweep(h: &mut [[C64; 4]; 4], lo: usize, hi: usize, mu: C64) {
    for i in lo..=hi {
        h[i][i] -= mu;
    }
    let mut rots = [(0.0f64, ZERO); N];
    for k in lo..hi {
        let a = h[k][k];
        let b = h[k + 1][k];
        let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
        let (c, s) = if r == 0.0 {
            (1.0, ZERO)
        } else if a.norm() == 0.0 {
            (0.0, ONE)
        } else {
            let an = a.norm();
            (an / r, (a / an) * b.conj() / r)
        };
        rots[k] = (c, s);
        // rows k, k+1 ← G [row k; row k+1], G = [[c, s], [−s̄, c]]
        for j in k..=hi {
            let x = h[k][j];
            let y = h[k + 1][j];
            h[k][j] = x * c + s * y;
            h[k + 1][j] = -s.conj() * x + y * c;
        }
    }
    for k in lo..hi {
        let (c, s) = rots[k];
        // columns k, k+1 ← [col k, col k+1] G†
        for row in h.iter_mut().take(hi + 1).skip(lo) {
            let x = row[k];
            let y = row[k + 1];
            row[k] = x * c + y * s.conj();
            row[k + 1] = -x * s + y * c;
        }
    }
    for i in lo..=hi {
        h[i][i] += mu;
    }
}

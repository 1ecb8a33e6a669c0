//! Acceptance checks. Each check prints one PASS/FAIL line; the process
//! exits non-zero if any check fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use qjump_cli::commands;
use qjump_cli::config::{FileConfig, Overrides, RunConfig};
use qjump_core::channels::{
    apply_outcome, averaged_spin_channel, conditional_spin_update, hamiltonian_step,
    outcome_probabilities, radiative_kraus, sample_readout, SpinChannel,
};
use qjump_core::fockcheck::{effective_kraus_single_mode, tmss_deviation, tmss_prepare, Expansion};
use qjump_core::lde::{
    clock_metrics, cumulant_rates, moments, q_closed_form, scgf_closed_form, scgf_derivatives_fd,
    steady_state, steady_state_numeric, tilted_generator, transition_rate, transition_rate_bisect,
    Counter, TiltParams, DEFAULT_FD_STEP,
};
use qjump_core::params::{ModelParams, Rates};
use qjump_core::qcore::{leading_real_eigenvalue, DensityMatrix, Operator2, C64};
use qjump_core::trajectory::{run_ensemble, unconditional_consistency, EnsembleStats, Estimate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

const TILTS: [f64; 5] = [-0.5, -0.1, 0.0, 0.1, 0.5];
const N_GRID: [f64; 3] = [0.0, 0.5, 1.0];

fn gamma_m_grid() -> [f64; 4] {
    [0.0, 1.0, 2.0 * 2f64.sqrt(), 5.0]
}

fn grid_rates() -> Vec<Rates> {
    let mut out = Vec::new();
    for gm in gamma_m_grid() {
        for n in N_GRID {
            out.push(Rates { omega: 1.0, gamma_w: 4.0, gamma_m: gm, n_avg: n });
        }
    }
    out
}

fn reference_run(gamma_m: f64) -> ModelParams {
    ModelParams {
        rates: Rates { omega: 1.0, gamma_w: 4.0, gamma_m, n_avg: 1.0 },
        dt: 5e-4,
        steps: 2000,
        trajectories: 20_000,
        ..ModelParams::default()
    }
}

fn verdict(fails: Vec<String>, summary: String) -> Check {
    if fails.is_empty() {
        Ok(summary)
    } else {
        Err(format!("{summary}; {}", fails.join("; ")))
    }
}

fn scgf_equivalence() -> Check {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut fails = Vec::new();
    for r in grid_rates() {
        for sa in TILTS {
            for se in TILTS {
                let tilt = TiltParams { s_a: sa, s_e: se };
                let closed = scgf_closed_form(tilt, &r).map_err(|e| e.to_string())?;
                let numeric = leading_real_eigenvalue(&tilted_generator(tilt, &r)).map_err(|e| e.to_string())?;
                let d = (closed - numeric).abs();
                worst = worst.max(d);
                if d > 1e-9 {
                    fails.push(format!("{r:?} s=({sa},{se}) diff {d:e}"));
                }
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    if elapsed >= 1.0 {
        fails.push(format!("runtime {elapsed:.3}s"));
    }
    verdict(fails, format!("max |Δθ| = {worst:.2e} over 300 points in {elapsed:.3}s (tol 1e-9, < 1s)"))
}

/// Relative error; an exactly vanishing rate is measured against the
/// largest rate of the same set.
fn rel_ok(fd: f64, cf: f64, scale: f64, tol: f64) -> bool {
    let denom = if cf == 0.0 { scale } else { cf.abs() };
    (fd - cf).abs() <= tol * denom
}

fn derivative_consistency() -> Check {
    let mut worst: f64 = 0.0;
    let mut fails = Vec::new();
    for r in grid_rates() {
        let fd = scgf_derivatives_fd(&r, DEFAULT_FD_STEP, 1.0).map_err(|e| e.to_string())?;
        let cf = cumulant_rates(&r);
        let scale = [cf.mean_a, cf.mean_e, cf.var_a, cf.var_e, cf.cov_ae]
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        for (name, a, b) in [
            ("mean_a", fd.mean_a, cf.mean_a),
            ("mean_e", fd.mean_e, cf.mean_e),
            ("var_a", fd.var_a, cf.var_a),
            ("var_e", fd.var_e, cf.var_e),
            ("cov_ae", fd.cov_ae, cf.cov_ae),
        ] {
            if b != 0.0 {
                worst = worst.max(((a - b) / b).abs());
            }
            if !rel_ok(a, b, scale, 1e-6) {
                fails.push(format!("gm={} n={} {name}: fd {a} vs {b}", r.gamma_m, r.n_avg));
            }
        }
    }
    verdict(fails, format!("max relative deviation {worst:.2e} over 12 rate sets (tol 1e-6)"))
}

fn point_values() -> Check {
    let r = Rates { omega: 1.0, gamma_w: 4.0, gamma_m: 1.0, n_avg: 1.0 };
    let cf = moments(&r, 1.0).map_err(|e| e.to_string())?;
    let fd = scgf_derivatives_fd(&r, DEFAULT_FD_STEP, 1.0).map_err(|e| e.to_string())?;
    let expected = [
        ("mean_a", 2.5, cf.mean_a, fd.mean_a),
        ("mean_e", 3.0, cf.mean_e, fd.mean_e),
        ("var_a", 1.71875, cf.var_a, fd.var_a),
        ("var_e", 1.875, cf.var_e, fd.var_e),
        ("cov_ae", 1.0625, cf.cov_ae, fd.cov_ae),
        ("q_a", -0.3125, cf.q_a.unwrap_or(f64::NAN), fd.q_a.unwrap_or(f64::NAN)),
        ("q_e", -0.375, cf.q_e.unwrap_or(f64::NAN), fd.q_e.unwrap_or(f64::NAN)),
        ("q_sum", 7.0 / 176.0, cf.q_sum.unwrap_or(f64::NAN), fd.q_sum.unwrap_or(f64::NAN)),
    ];
    let mut fails = Vec::new();
    let mut worst: f64 = 0.0;
    for (name, want, a, b) in expected {
        let da = ((a - want) / want).abs();
        let db = ((b - want) / want).abs();
        let dab = ((a - b) / want).abs();
        worst = worst.max(da).max(db).max(dab);
        if !(da <= 1e-6 && db <= 1e-6 && dab <= 1e-6) {
            fails.push(format!("{name}: closed {a}, fd {b}, expected {want}"));
        }
    }
    verdict(fails, format!("q_sum = {:.6}; worst relative disagreement {worst:.2e} (tol 1e-6)", cf.q_sum.unwrap_or(f64::NAN)))
}

fn transition_points() -> Check {
    let mut fails = Vec::new();
    let mut parts = Vec::new();
    for (n, quoted) in [(1.0, 2.83), (0.5, 1.73)] {
        let root = transition_rate_bisect(4.0, n, 1e-12).map_err(|e| e.to_string())?;
        let exact = transition_rate(4.0, n).map_err(|e| e.to_string())?;
        parts.push(format!("n={n}: {root:.10}"));
        if (root - exact).abs() > 1e-8 {
            fails.push(format!("n={n}: bisection {root} vs {exact}"));
        }
        if (root - quoted).abs() > 0.005 {
            fails.push(format!("n={n}: {root} not within 0.005 of {quoted}"));
        }
    }
    verdict(fails, parts.join(", "))
}

fn limit_values() -> Check {
    let r = Rates { omega: 1.0, gamma_w: 4.0, gamma_m: 0.0, n_avg: 1.0 };
    let q_a = q_closed_form(&r, Counter::Absorption).ok_or("q_a undefined")?;
    let q_sum0 = q_closed_form(&r, Counter::Sum).ok_or("q_sum undefined")?;
    let q_sum_small = q_closed_form(&r.with_gamma_m(1e-9), Counter::Sum).ok_or("q_sum undefined")?;
    let gain = clock_metrics(&r, Counter::Absorption, 1.0).map_err(|e| e.to_string())?.precision_gain;
    let mut fails = Vec::new();
    if (q_a + 4.0 / 9.0).abs() > 1e-12 {
        fails.push(format!("q_a = {q_a}"));
    }
    if (q_sum0 - 1.0 / 9.0).abs() > 1e-12 {
        fails.push(format!("q_sum(0) = {q_sum0}"));
    }
    if (q_sum_small - 1.0 / 9.0).abs() > 1e-8 {
        fails.push(format!("q_sum(1e-9) = {q_sum_small}"));
    }
    if (gain - 1.8).abs() > 1e-12 {
        fails.push(format!("precision gain {gain}"));
    }
    verdict(fails, format!("q_a = {q_a:.15}, q_sum = {q_sum0:.15}, gain = {gain:.15}"))
}

fn within(e: Option<Estimate>, theory: Option<f64>, k: f64, floor: f64) -> Result<(f64, f64, f64), String> {
    let e = e.ok_or("estimate undefined")?;
    let t = theory.ok_or("theory undefined")?;
    let se = e.se.ok_or("no standard error")?;
    let allowed = (k * se).max(floor);
    let d = (e.value - t).abs();
    if d <= allowed {
        Ok((e.value, se, t))
    } else {
        Err(format!("{:.4} ± {:.4} vs {:.4} (|Δ| {:.4} > {:.4})", e.value, se, t, d, allowed))
    }
}

fn monte_carlo_vs_theory() -> Check {
    let mut fails = Vec::new();
    let mut signs = Vec::new();
    for gm in [0.0, 1.0, 2.0, 2.83, 4.0, 6.0] {
        let p = reference_run(gm);
        let stats = run_ensemble(&p).map_err(|e| e.to_string())?;
        let s = stats.final_summary().ok_or("empty ensemble")?;
        let th = moments(&p.rates, s.t).map_err(|e| e.to_string())?;
        let checks = [
            ("mean_a", within(Some(s.mean_a), Some(th.mean_a), 3.0, 0.0)),
            ("mean_e", within(Some(s.mean_e), Some(th.mean_e), 3.0, 0.0)),
            ("q_a", within(s.q_a, th.q_a, 3.0, 0.03)),
            ("q_e", within(s.q_e, th.q_e, 3.0, 0.03)),
            ("q_sum", within(s.q_sum, th.q_sum, 3.0, 0.0)),
        ];
        for (name, c) in checks {
            if let Err(msg) = c {
                fails.push(format!("gm={gm} {name}: {msg}"));
            }
        }
        let q = s.q_sum.ok_or("q_sum undefined")?;
        let se = q.se.unwrap_or(f64::INFINITY);
        signs.push(format!("gm={gm}: q_sum {:+.4}±{:.4}", q.value, se));
        let sign_ok = match gm {
            2.0 => q.value > 0.0,
            2.83 => q.value.abs() <= 3.0 * se,
            4.0 => q.value < 0.0,
            _ => true,
        };
        if !sign_ok {
            fails.push(format!("gm={gm}: q_sum sign {:+.4}", q.value));
        }
    }
    verdict(fails, signs.join(", "))
}

fn unconditional_consistency_check() -> Check {
    let mut fails = Vec::new();
    let mut parts = Vec::new();
    let p = reference_run(1.0);
    let (_, rho_s) = steady_state(&p.rates);
    for (label, rho0) in [("steady state", rho_s), ("excited", DensityMatrix::excited())] {
        let rep = unconditional_consistency(&p, rho0, &[p.steps]).map_err(|e| e.to_string())?;
        let row = &rep.rows[0];
        let tol = (3.0 * row.floor).max(0.01);
        parts.push(format!("{label}: D = {:.2e} (floor {:.2e})", row.trace_distance, row.floor));
        if row.trace_distance > tol {
            fails.push(format!("{label}: {} > {tol}", row.trace_distance));
        }
    }
    verdict(fails, parts.join(", "))
}

fn steady_state_agreement() -> Check {
    let mut worst: f64 = 0.0;
    for r in grid_rates() {
        let (p, _) = steady_state(&r);
        let v = steady_state_numeric(&r).map_err(|e| e.to_string())?;
        worst = worst.max((v[0].re - p).abs()).max(v[0].im.abs());
    }
    verdict(
        if worst <= 1e-12 { vec![] } else { vec!["exceeds 1e-12".into()] },
        format!("max |p_closed − p_null| = {worst:.2e} (tol 1e-12)"),
    )
}

/// Hand-projected single-mode forms with x = γ_w dt.
fn projected_forms(n: usize, x: f64) -> [Operator2; 3] {
    let z = C64::new(0.0, 0.0);
    let nf = n as f64;
    [
        Operator2::new([[z, C64::new(0.0, -(x * nf).sqrt())], [z, z]]).unwrap(),
        Operator2::new([[z, z], [C64::new(0.0, -(x * (nf + 1.0)).sqrt()), z]]).unwrap(),
        Operator2::new([[C64::new(1.0 - x * (nf + 1.0) / 2.0, 0.0), z], [z, C64::new(1.0 - x * nf / 2.0, 0.0)]])
            .unwrap(),
    ]
}

fn appendix_verification() -> Check {
    let (gw, dt) = (4.0, 1e-6);
    let x = gw * dt;
    let mut fails = Vec::new();
    let mut parts = Vec::new();
    let mut single: f64 = 0.0;
    for n in [0usize, 1, 2] {
        let rec = effective_kraus_single_mode(n, gw, dt, Expansion::Truncated).map_err(|e| e.to_string())?;
        let [ma, me, mo] = projected_forms(n, x);
        single = single
            .max(rec.m_a.max_abs_diff(&ma))
            .max(rec.m_e.max_abs_diff(&me))
            .max(rec.m_o.max_abs_diff(&mo));
    }
    if single > 1e-12 {
        fails.push(format!("single-mode deviation {single:e}"));
    }
    parts.push(format!("single-mode {single:.1e}"));
    for n_avg in [0.5, 1.0] {
        let t = tmss_prepare(n_avg, None).map_err(|e| e.to_string())?;
        let (_, dev) = tmss_deviation(n_avg, gw, dt, None).map_err(|e| e.to_string())?;
        let (_, half) = tmss_deviation(n_avg, gw, dt / 2.0, None).map_err(|e| e.to_string())?;
        let ratio = dev.null / half.null;
        parts.push(format!(
            "<n>={n_avg}: N_max {} jumps {:.1e} null {:.1e} ratio {ratio:.3}",
            t.n_max,
            dev.jumps(),
            dev.null
        ));
        if dev.jumps() > 1e-10 {
            fails.push(format!("<n>={n_avg}: jump deviation {:e}", dev.jumps()));
        }
        if dev.null > 10.0 * x * x {
            fails.push(format!("<n>={n_avg}: null deviation {:e}", dev.null));
        }
        if !(3.5..=4.5).contains(&ratio) {
            fails.push(format!("<n>={n_avg}: halving ratio {ratio}"));
        }
    }
    verdict(fails, parts.join(", "))
}

fn config(json: &str, o: Overrides) -> RunConfig {
    RunConfig::resolve(FileConfig::parse(json).unwrap(), o).unwrap()
}

fn property_suites() -> Check {
    let mut fails = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0010);

    // completeness of the radiative Kraus set
    let mut worst_c: f64 = 0.0;
    for _ in 0..1000 {
        let gw = rng.random_range(0.1..10.0);
        let n = rng.random_range(0.0..3.0);
        let dt = rng.random_range(1e-6..0.05) / (gw * (n + 1.0));
        let k = radiative_kraus(gw, n, dt).map_err(|e| e.to_string())?;
        worst_c = worst_c.max(k.completeness_sum().max_abs_diff(&Operator2::identity()));
    }
    if worst_c > 4.0 * f64::EPSILON {
        fails.push(format!("completeness {worst_c:e}"));
    }

    // 1e5 random channel applications keep a valid density matrix
    let kraus = radiative_kraus(4.0, 1.0, 5e-4).unwrap();
    let spin = SpinChannel::new(3.0, 5e-4).unwrap();
    let mut rho = DensityMatrix::pure(C64::new(0.6, 0.0), C64::new(0.0, 0.8)).unwrap();
    for i in 0..100_000 {
        rho = match rng.random_range(0..4) {
            0 => {
                let probs = outcome_probabilities(&rho, &kraus);
                let o = probs.select(rng.random());
                apply_outcome(&rho, &kraus, o).ok_or("zero-probability outcome")?
            }
            1 => averaged_spin_channel(&spin, &rho),
            2 => {
                let r = sample_readout(&spin, &rho, &mut rng).map_err(|e| e.to_string())?;
                conditional_spin_update(&spin, &rho, r).ok_or("readout update failed")?
            }
            _ => hamiltonian_step(&rho, 1.0, 5e-4),
        };
        if let Err(e) = rho.validate() {
            fails.push(format!("step {i}: {e}"));
            break;
        }
    }

    // determinism across worker counts
    let base = Overrides { steps: Some(200), trajectories: Some(2000), gamma_m: Some(vec![1.0, 2.83]), ..Overrides::default() };
    let mut csvs = Vec::new();
    for w in [1usize, 2, 8] {
        let cfg = config("", Overrides { workers: Some(w), ..base.clone() });
        csvs.push(commands::simulate(&cfg, false).map_err(|e| e.to_string())?.table.render());
    }
    if csvs.windows(2).any(|w| w[0] != w[1]) {
        fails.push("CSV differs across worker counts".into());
    }

    // synthetic counts through the Q estimator
    let mut poisson = EnsembleStats::new(0, 1.0);
    let dist = Poisson::new(5.5).unwrap();
    for _ in 0..20_000 {
        let a = dist.sample(&mut rng) as u32;
        let e = dist.sample(&mut rng) as u32;
        poisson.push_record(&[a], &[e]).map_err(|e| e.to_string())?;
    }
    let s = poisson.final_summary().unwrap();
    let q = s.q_a.ok_or("Poisson Q undefined")?;
    let z = q.z_score(0.0).unwrap_or(f64::INFINITY);
    if z > 3.0 {
        fails.push(format!("Poisson Q = {:.4} ± {:.4}", q.value, q.se.unwrap_or(0.0)));
    }
    let mut fixed = EnsembleStats::new(0, 1.0);
    for _ in 0..100 {
        fixed.push_record(&[4], &[4]).unwrap();
    }
    let qd = fixed.final_summary().unwrap().q_a.ok_or("deterministic Q undefined")?.value;
    if qd != -1.0 {
        fails.push(format!("deterministic Q = {qd}"));
    }

    verdict(
        fails,
        format!("completeness {worst_c:.1e}, 1e5 channel steps valid, CSV identical for 1/2/8 workers, Poisson Q {:.4} ({z:.2} s.e.), deterministic Q {qd}", q.value),
    )
}

fn main() {
    let checks: [Criterion; 10] = [
        ("1 SCGF closed form vs leading eigenvalue", scgf_equivalence),
        ("2 finite-difference derivatives vs closed-form rates", derivative_consistency),
        ("3 point values, closed form and finite differences", point_values),
        ("4 transition points by bisection", transition_points),
        ("5 limit values of Q and precision gain", limit_values),
        ("6 Monte Carlo ensembles vs closed forms", monte_carlo_vs_theory),
        ("7 averaged trajectories vs master equation", unconditional_consistency_check),
        ("8 steady state vs generator null vector", steady_state_agreement),
        ("9 Kraus operators from truncated Fock space", appendix_verification),
        ("10 property suites", property_suites),
    ];
    let mut failed = 0;
    for (name, f) in checks {
        let start = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match res {
            Ok(detail) => println!("PASS  criterion {name} [{secs:.1}s]: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  criterion {name} [{secs:.1}s]: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.
//!
//! Runs without the libtest harness so the criteria execute in order and the
//! front-invariant check can aggregate every run made by the others.

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use wnv_cli::scenario::parse_scenario;
use wnv_cli::simulate;
use wnv_core::analysis::{
    build_lower_solution, build_upper_solution, classify_with, endemic_deviation, estimate_speed,
    vanishing_mu_bracket, ClassifyConfig, DominanceAudit,
};
use wnv_core::eigen_oracle::r0_dirichlet_oracle;
use wnv_core::front::{run, run_logistic, run_observed, FrontAudit, InitialData, LogisticProblem, SimulationTrace, SolverConfig};
use wnv_core::ode::{integrate_ode2, OdeState2};
use wnv_core::thresholds::{r0_dirichlet, DomainInterval};
use wnv_core::wavespeed::{c_min_logistic, k0_logistic, RelaxationConfig};
use wnv_core::EpidemicParams;

struct Outcome {
    passed: bool,
    detail: String,
    /// Front audits of every free-boundary run made while checking.
    audits: Vec<(String, FrontAudit)>,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self { passed, detail: detail.into(), audits: Vec::new() }
    }

    fn with_runs(mut self, runs: impl IntoIterator<Item = (String, FrontAudit)>) -> Self {
        self.audits.extend(runs);
        self
    }
}

fn fail(detail: impl std::fmt::Display) -> Outcome {
    Outcome::new(false, detail.to_string())
}

fn repo_file(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn audited(label: &str, trace: &SimulationTrace) -> (String, FrontAudit) {
    (label.to_string(), trace.audit())
}

/// A valid simplified-mode parameter set with moderate rates.
fn random_params(rng: &mut ChaCha8Rng) -> EpidemicParams {
    let r_v = rng.gen_range(0.1..0.5);
    let d_h = rng.gen_range(0.05..0.3);
    EpidemicParams {
        beta_v: rng.gen_range(0.05..1.0),
        beta_h: rng.gen_range(0.05..1.0),
        r_v,
        d_v: r_v,
        r_h: d_h,
        d_h,
        gamma_h: rng.gen_range(0.05..0.3),
        q: rng.gen_range(0.0..0.8),
        n_v_star: rng.gen_range(0.5..5.0),
        n_h_star: rng.gen_range(0.5..3.0),
        dv: rng.gen_range(0.001..1.0),
        dh: rng.gen_range(0.1..2.0),
        mu: rng.gen_range(0.5..2.0),
        k_v: None,
    }
}

/// Rescales both transmission rates so that `R0 = target`.
fn with_r0(p: EpidemicParams, target: f64) -> EpidemicParams {
    let f = target / p.r0();
    EpidemicParams { beta_v: p.beta_v * f, beta_h: p.beta_h * f, ..p }
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

fn closed_form_thresholds() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let params: Vec<EpidemicParams> = (0..20).map(|_| random_params(&mut rng)).collect();
    let cases: Vec<(EpidemicParams, f64)> =
        params.iter().flat_map(|p| [0.2, 1.0, 2.0].map(|h0| (*p, h0))).collect();
    let results: Vec<Result<(f64, bool, bool), String>> = cases
        .par_iter()
        .map(|(p, h0)| {
            let omega = DomainInterval::symmetric(*h0).map_err(|e| e.to_string())?;
            let eig = r0_dirichlet(p, &omega).map_err(|e| e.to_string())?;
            let oracle = r0_dirichlet_oracle(p, &omega, 2000, 1e-10).map_err(|e| e.to_string())?;
            let gap = (oracle.r0d - eig.r0d).abs() / eig.r0d;
            Ok((gap, sign(eig.lambda0) == sign(1.0 - eig.r0d), eig.r0d < 1.0))
        })
        .collect();
    let mut worst = 0.0f64;
    let mut below_one = 0;
    for (r, (p, h0)) in results.iter().zip(&cases) {
        match r {
            Err(e) => return fail(format!("oracle failed at h0 = {h0}: {e}")),
            Ok((gap, sign_ok, below)) => {
                if !sign_ok {
                    return fail(format!("sign of lambda0 disagrees with 1 - R0^D at h0 = {h0} for {p:?}"));
                }
                worst = worst.max(*gap);
                below_one += usize::from(*below);
            }
        }
    }
    Outcome::new(
        worst <= 1e-3,
        format!("{} cases ({below_one} with R0^D < 1), max relative gap {worst:.2e}", cases.len()),
    )
}

fn ode_dichotomy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_decay = 0.0f64;
    let mut worst_endemic = 0.0f64;
    for i in 0..20 {
        let base = random_params(&mut rng);
        let target = if i % 2 == 0 { rng.gen_range(0.2..0.8) } else { rng.gen_range(1.5..5.0) };
        let p = with_r0(base, target);
        let init = OdeState2 {
            v_i: rng.gen_range(0.05..1.0) * p.n_v_star,
            h_i: rng.gen_range(0.05..1.0) * p.n_h_star,
        };
        let (_, end) = match integrate_ode2(&p, init, 2000.0, 0.01) {
            Ok(tr) => tr.last(),
            Err(e) => return fail(format!("integration failed: {e}")),
        };
        if p.r0() <= 1.0 {
            worst_decay = worst_decay.max(end.v_i.abs().max(end.h_i.abs()));
        } else {
            let eq = p.endemic_equilibrium();
            worst_endemic = worst_endemic.max((end.v_i - eq.v_i_star).abs().max((end.h_i - eq.h_i_star).abs()));
        }
    }
    Outcome::new(
        worst_decay < 1e-8 && worst_endemic < 1e-6,
        format!("R0 < 1: max |state| {worst_decay:.1e}; R0 > 1: max distance to endemic state {worst_endemic:.1e}"),
    )
}

fn vanishing_run() -> Outcome {
    let text = std::fs::read_to_string(repo_file("scenarios/s2_vanishing.toml")).unwrap();
    let scenario = parse_scenario(&text).unwrap();
    if scenario.solver.n_xi != 401 {
        return fail("scenario must use n_xi = 401");
    }
    let out = match simulate(&scenario, 0) {
        Ok(o) => o,
        Err(e) => return fail(e),
    };
    let trace = &out.trace;
    let w1 = trace.sample_at(1.0).map_or(f64::NAN, |s| s.width);
    let last = trace.last();
    let sup_limit = 1e-6 * scenario.params.n_h_star;
    Outcome::new(
        out.report.verdict == "vanishing" && last.width < 1.2 * w1 && last.sup_hi < sup_limit,
        format!(
            "verdict {}, final width {:.4} vs 1.2 x {:.4}, sup H_i {:.1e}",
            out.report.verdict, last.width, w1, last.sup_hi
        ),
    )
    .with_runs([audited("vanishing S2", trace)])
}

fn spreading_run() -> Outcome {
    let text = std::fs::read_to_string(repo_file("scenarios/s1_spreading.toml")).unwrap();
    let scenario = parse_scenario(&text).unwrap();
    let out = match simulate(&scenario, 0) {
        Ok(o) => o,
        Err(e) => return fail(e),
    };
    let dev = endemic_deviation(&out.trace.final_state, &scenario.params, 5.0);
    let r0f0 = out.report.r0f_initial;
    Outcome::new(
        out.report.verdict == "spreading" && (r0f0 - 2.56).abs() < 0.01 && dev.is_some_and(|d| d <= 0.02),
        format!(
            "verdict {}, R0^F(0) {r0f0:.4}, max relative deviation on [-5, 5] {:.1e}, k0 {:.4}",
            out.report.verdict,
            dev.unwrap_or(f64::NAN),
            out.report.k0_right.unwrap_or(f64::NAN)
        ),
    )
    .with_runs([audited("spreading S1", &out.trace)])
}

fn logistic_chain() -> Outcome {
    let (a, b, d) = (1.0, 1.0, 1.0);
    let c = c_min_logistic(a, d);
    // The analytic value against a direct minimisation of (d s^2 + a) / s.
    let scanned = (1..100_000).map(|i| i as f64 * 1e-4).map(|s| (d * s * s + a) / s).fold(f64::INFINITY, f64::min);
    let relax = RelaxationConfig::default();
    let mut measured = Vec::new();
    let mut bvp = Vec::new();
    let mut runs = Vec::new();
    for mu in [2.0, 4.0] {
        let k0 = match k0_logistic(a, b, d, mu, &relax) {
            Ok(k) => k,
            Err(e) => return fail(e),
        };
        let problem = LogisticProblem { a, b, d, mu };
        let init = InitialData::cosine(1.0, 1001, 0.0, 0.5);
        let config = SolverConfig { n_xi: 1001, t_max: 40.0, record_every: 0.5, ..Default::default() };
        let trace = match run_logistic(&problem, 1.0, &init.h_i0, &config) {
            Ok(t) => t,
            Err(e) => return fail(e),
        };
        let cl = classify_with(&trace, Some((0.0, a / b)), 1.0, &ClassifyConfig::default());
        let slope = match estimate_speed(&trace, &cl, 0.25) {
            Ok(s) => s.k0_right,
            Err(e) => return fail(format!("mu = {mu}: {e}")),
        };
        runs.push(audited(&format!("logistic mu = {mu}"), &trace));
        measured.push(slope);
        bvp.push(k0);
    }
    let rel = (measured[0] - bvp[0]).abs() / bvp[0];
    Outcome::new(
        c == 2.0
            && (scanned - 2.0).abs() < 1e-6
            && bvp[0] > 0.0
            && bvp[0] < c
            && rel <= 0.05
            && bvp[1] > bvp[0]
            && measured[1] > measured[0],
        format!(
            "c_min {c}, k0(mu=2) {:.5} vs measured {:.5} ({:.2}%), k0(mu=4) {:.5}",
            bvp[0],
            measured[0],
            100.0 * rel,
            bvp[1]
        ),
    )
    .with_runs(runs)
}

fn comparison_audits() -> Outcome {
    let p = EpidemicParams::endemic_example();
    let config = |t_max| SolverConfig { n_xi: 401, t_max, record_every: 0.5, ..Default::default() };

    let upper = match build_upper_solution(&p, 0.2) {
        Ok(u) => u,
        Err(e) => return fail(e),
    };
    let upper_ineq = upper.audit(201, 201, 50.0);
    let init = upper.dominated_initial_data(401, 0.5);
    let mut upper_dom = DominanceAudit::new();
    let mut fronts_inside = true;
    let upper_trace = match run_observed(&p, &init, &config(50.0), |s| {
        upper_dom.observe_upper(&upper, s);
        fronts_inside &= s.h <= upper.sigma(s.t) && s.g >= -upper.sigma(s.t);
    }) {
        Ok(t) => t,
        Err(e) => return fail(e),
    };

    let lower = match build_lower_solution(&p, 2.0) {
        Ok(l) => l,
        Err(e) => return fail(e),
    };
    let lower_ineq = lower.audit(201);
    let mut lower_dom = DominanceAudit::new();
    let lower_trace = match run_observed(&p, &lower.initial_data(401), &config(60.0), |s| lower_dom.observe_lower(&lower, s)) {
        Ok(t) => t,
        Err(e) => return fail(e),
    };

    let violations = upper_ineq.violations + lower_ineq.violations + upper_dom.violations + lower_dom.violations;
    Outcome::new(
        upper_ineq.passed() && lower_ineq.passed() && upper_dom.passed() && lower_dom.passed() && fronts_inside,
        format!(
            "upper: {} states, max excess {:.1e}, fronts inside sigma: {fronts_inside}; lower: {} states, max excess {:.1e}; violations {violations}",
            upper_dom.states, upper_dom.max_excess, lower_dom.states, lower_dom.max_excess
        ),
    )
    .with_runs([audited("upper-solution S3", &upper_trace), audited("lower-solution S1", &lower_trace)])
}

fn grid_convergence() -> Outcome {
    let p = EpidemicParams::endemic_example();
    let mut h5 = Vec::new();
    let mut runs = Vec::new();
    for n in [201, 401, 801] {
        let init = InitialData::cosine(2.0, n, 0.1, 0.1);
        let config = SolverConfig { n_xi: n, dt_init: 1e-3, t_max: 5.0, record_every: 1.0, ..Default::default() };
        let trace = match run(&p, &init, &config) {
            Ok(t) => t,
            Err(e) => return fail(e),
        };
        h5.push(trace.last().h);
        runs.push(audited(&format!("grid n_xi = {n}"), &trace));
    }
    let order = ((h5[0] - h5[1]) / (h5[1] - h5[2])).log2();
    Outcome::new(
        (1.5..=2.5).contains(&order),
        format!("h(5) = {:.8}, {:.8}, {:.8}; observed order {order:.3}", h5[0], h5[1], h5[2]),
    )
    .with_runs(runs)
}

fn small_mu_vanishing() -> Outcome {
    let p = EpidemicParams::endemic_example();
    let init = InitialData::cosine(0.2, 401, 1.0, 0.5);
    let config = SolverConfig { n_xi: 401, t_max: 60.0, record_every: 0.5, ..Default::default() };
    let cfg = ClassifyConfig::default();
    let bracket = match vanishing_mu_bracket(&p, &init, &config, &cfg, (0.01, 10.0), 4) {
        Ok(b) => b,
        Err(e) => return fail(e),
    };
    // Repeat the bracket's runs so their fronts enter the invariant audit.
    let runs: Vec<(String, FrontAudit)> = bracket
        .runs
        .par_iter()
        .filter_map(|(mu, _)| {
            let q = EpidemicParams { mu: *mu, ..p };
            run(&q, &init, &config).ok().map(|t| audited(&format!("mu bracket mu = {mu:.4}"), &t))
        })
        .collect();
    let complete = runs.len() == bracket.runs.len();
    let verdicts: Vec<String> = bracket.runs.iter().map(|(mu, v)| format!("{mu:.3}:{}", v.as_str())).collect();
    Outcome::new(
        bracket.certified() && complete,
        format!(
            "vanishing for mu <= {:.4}, first non-vanishing {:?}; runs {}",
            bracket.vanishing_mu,
            bracket.non_vanishing_mu,
            verdicts.join(" ")
        ),
    )
    .with_runs(runs)
}

fn sweep_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_wnv-lab");
    let spec = repo_file("scenarios/sweep_mu.toml");
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (i, workers) in [1, 1, 4, 4].into_iter().enumerate() {
        let out = dir.path().join(format!("run{i}"));
        let status = Command::new(bin)
            .args(["sweep", "--scenario"])
            .arg(&spec)
            .arg("--out")
            .arg(&out)
            .args(["--seed", "11", "--workers", &workers.to_string()])
            .status();
        match status {
            Ok(s) if s.success() => {}
            other => return fail(format!("sweep with {workers} workers: {other:?}")),
        }
        outputs.push(std::fs::read(out.join("summary.csv")).unwrap());
    }
    let identical = outputs.windows(2).all(|w| w[0] == w[1]);
    let rows = String::from_utf8_lossy(&outputs[0]).lines().count() - 1;
    Outcome::new(identical, format!("4 invocations (workers 1, 1, 4, 4), {rows} rows, identical bytes: {identical}"))
}

fn front_invariants(audits: &[(String, FrontAudit)]) -> Outcome {
    let failures: Vec<String> = audits
        .iter()
        .filter(|(_, a)| !a.all_ok())
        .map(|(label, a)| format!("{label}: {}", a.violations.join("; ")))
        .collect();
    if failures.is_empty() {
        Outcome::new(true, format!("{} runs audited, zero violations", audits.len()))
    } else {
        fail(failures.join(" | "))
    }
}

fn main() -> ExitCode {
    type Check = fn() -> Outcome;
    let checks: [(u32, &str, Check, Duration); 9] = [
        (1, "closed-form thresholds vs eigen-oracle", closed_form_thresholds, Duration::from_secs(60)),
        (2, "ODE dichotomy", ode_dichotomy, Duration::from_secs(60)),
        (3, "vanishing run", vanishing_run, Duration::from_secs(120)),
        (4, "spreading run", spreading_run, Duration::from_secs(300)),
        (6, "logistic speed chain", logistic_chain, Duration::from_secs(180)),
        (7, "upper/lower solution audits", comparison_audits, Duration::from_secs(600)),
        (8, "grid convergence", grid_convergence, Duration::from_secs(600)),
        (9, "small-mu vanishing bracket", small_mu_vanishing, Duration::from_secs(600)),
        (10, "sweep determinism", sweep_determinism, Duration::from_secs(600)),
    ];
    let mut lines = Vec::new();
    let mut all_audits = Vec::new();
    for (id, name, check, limit) in checks {
        let start = Instant::now();
        let mut outcome = check();
        let elapsed = start.elapsed();
        if elapsed > limit {
            outcome.passed = false;
            outcome.detail.push_str(&format!("; exceeded {} s budget", limit.as_secs()));
        }
        all_audits.append(&mut outcome.audits);
        lines.push((id, name, outcome, elapsed));
    }
    let invariants = front_invariants(&all_audits);
    lines.insert(4, (5, "front invariants across all runs", invariants, Duration::ZERO));

    let mut failed = 0;
    for (id, name, outcome, elapsed) in &lines {
        let status = if outcome.passed { "PASS" } else { "FAIL" };
        failed += usize::from(!outcome.passed);
        println!("criterion {id:>2} {status} {name} ({:.1} s): {}", elapsed.as_secs_f64(), outcome.detail);
    }
    println!("{} of {} criteria passed", lines.len() - failed, lines.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

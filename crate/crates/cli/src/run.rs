//! Single-scenario commands and their artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wnv_core::analysis::{
    build_lower_solution, build_upper_solution, classify, estimate_speed, DominanceAudit, Evidence, InequalityAudit,
    SpeedEstimate, Verdict,
};
use wnv_core::eigen_oracle::{r0_dirichlet_oracle, OracleEstimate};
use wnv_core::front::{run_observed, FrontAudit, SimulationTrace};
use wnv_core::thresholds::{r0_free, DomainInterval, ThresholdReport};
use wnv_core::wavespeed::{self, RelaxationConfig};
use wnv_core::EpidemicParams;

use crate::error::CliError;
use crate::scenario::{Analysis, Scenario};

pub const EXIT_DECIDED: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_UNDECIDED: i32 = 2;

pub const TRACE_COLUMNS: [&str; 11] = [
    "t", "g", "h", "width", "sup_vi", "sup_hi", "int_vi", "int_hi", "r0f", "gdot", "hdot",
];

/// Samples drawn for the `c_min` certificate.
pub const CERTIFICATE_SAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsOk {
    #[serde(rename = "box")]
    pub box_ok: bool,
    pub monotone: bool,
    pub symmetry: bool,
    pub speed_bound: bool,
    pub all: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<String>,
}

impl From<FrontAudit> for BoundsOk {
    fn from(a: FrontAudit) -> Self {
        Self {
            all: a.all_ok(),
            box_ok: a.box_ok,
            monotone: a.monotone_ok,
            symmetry: a.symmetry_ok,
            speed_bound: a.speed_bound_ok,
            violations: a.violations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WavespeedReport {
    pub c_min: f64,
    pub s_star: f64,
    pub c0: f64,
    /// Smallest `λ_p(s)/s - c_min` over seeded random `s`.
    pub certificate_margin: f64,
    /// Speed from `μ D_h H'(0) = k` on the semi-wavefront (an extension rule).
    pub k0_selected: Option<f64>,
    pub selection_rule: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k0_error: Option<String>,
}

pub const SELECTION_RULE: &str = "extension: mu * D_h * H'(0) = k, by analogy with the scalar problem";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub inequalities: Option<InequalityAudit>,
    /// Whether the run's initial data lie on the correct side of the comparison function.
    pub initially_ordered: bool,
    pub dominance: Option<DominanceAudit>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ComparisonReport {
    fn failed(error: String) -> Self {
        Self {
            inequalities: None,
            initially_ordered: false,
            dominance: None,
            passed: false,
            error: Some(error),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub r0: f64,
    pub r0d_initial: f64,
    pub r0f_initial: f64,
    pub verdict: &'static str,
    pub t_decided: Option<f64>,
    pub k0_right: Option<f64>,
    pub k0_left: Option<f64>,
    pub c_min: Option<f64>,
    pub bounds_ok: BoundsOk,
    pub params: EpidemicParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evidence: Option<Evidence>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<ThresholdReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub speed_fit: Option<SpeedEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wavespeed: Option<WavespeedReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper_audit: Option<ComparisonReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower_audit: Option<ComparisonReport>,
    pub t_end: f64,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        if self.verdict == Verdict::Undecided.as_str() {
            EXIT_UNDECIDED
        } else {
            EXIT_DECIDED
        }
    }
}

/// Log-uniform decay rates over the scan range of the `c_min` search.
pub fn certificate_samples(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (wavespeed::SCAN_MIN_EXP as f64, wavespeed::SCAN_MAX_EXP as f64);
    (0..n).map(|_| 2f64.powf(rng.gen_range(lo..hi))).collect()
}

pub fn wavespeed_report(params: &EpidemicParams, seed: u64) -> Result<WavespeedReport, CliError> {
    let r = wavespeed::c_min(params)?;
    let margin = r.certificate_margin(params, certificate_samples(seed, CERTIFICATE_SAMPLES));
    let (k0_selected, k0_error) = match wavespeed::k0_wnv(params, &RelaxationConfig::default()) {
        Ok((k, _)) => (Some(k), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(WavespeedReport {
        c_min: r.c_min,
        s_star: r.s_star,
        c0: r.c0,
        certificate_margin: margin,
        k0_selected,
        selection_rule: SELECTION_RULE,
        k0_error,
    })
}

fn comparison_report(
    inequalities: Result<InequalityAudit, &wnv_core::WnvError>,
    initial: Option<bool>,
    dominance: DominanceAudit,
) -> ComparisonReport {
    match inequalities {
        Err(e) => ComparisonReport::failed(e.to_string()),
        Ok(ineq) => {
            let ordered = initial.unwrap_or(false);
            let dominance = ordered.then_some(dominance);
            ComparisonReport {
                passed: ineq.passed() && dominance.is_none_or(|d| d.passed()),
                inequalities: Some(ineq),
                initially_ordered: ordered,
                dominance,
                error: None,
            }
        }
    }
}

/// Everything a simulation produces, before anything is written.
pub struct SimulationOutput {
    pub report: Report,
    pub trace: SimulationTrace,
}

/// Runs the scenario's simulation and requested analyses.
pub fn simulate(scenario: &Scenario, seed: u64) -> Result<SimulationOutput, CliError> {
    scenario.validate()?;
    let params = &scenario.params;
    let init = scenario.initial_data()?;
    let h0 = init.h0;
    let omega = DomainInterval::symmetric(h0)?;
    let r0d = r0_free(params, -h0, h0)?;

    let upper = scenario.wants(Analysis::UpperAudit).then(|| build_upper_solution(params, h0));
    let lower = scenario.wants(Analysis::LowerAudit).then(|| build_lower_solution(params, h0));
    let upper_ok = upper.as_ref().and_then(|u| u.as_ref().ok());
    let lower_ok = lower.as_ref().and_then(|l| l.as_ref().ok());
    let mut upper_dom = DominanceAudit::new();
    let mut lower_dom = DominanceAudit::new();
    let mut upper_initial = None;
    let mut lower_initial = None;
    let trace = run_observed(params, &init, &scenario.solver, |state| {
        if let Some(u) = upper_ok {
            if upper_initial.is_none() {
                let mut first = DominanceAudit::new();
                first.observe_upper(u, state);
                upper_initial = Some(first.passed());
            }
            upper_dom.observe_upper(u, state);
        }
        if let Some(l) = lower_ok {
            if lower_initial.is_none() {
                let mut first = DominanceAudit::new();
                first.observe_lower(l, state);
                lower_initial = Some(first.passed());
            }
            lower_dom.observe_lower(l, state);
        }
    })?;
    let t_end = trace.last().t;

    let classification = classify(&trace, params, &scenario.classify);
    let mut warnings = trace.warnings.clone();
    let speed_fit = if scenario.wants(Analysis::Speed) && classification.verdict == Verdict::Spreading {
        match estimate_speed(&trace, &classification, scenario.speed.fit_fraction) {
            Ok(s) => Some(s),
            Err(e) => {
                warnings.push(format!("speed fit skipped: {e}"));
                None
            }
        }
    } else {
        None
    };
    let thresholds = if scenario.wants(Analysis::Thresholds) {
        let fronts: Vec<(f64, f64, f64)> = trace.samples.iter().map(|s| (s.t, s.g, s.h)).collect();
        Some(ThresholdReport::closed_form(params, &omega, &fronts)?)
    } else {
        None
    };
    let wavespeed = if scenario.wants(Analysis::Wavespeed) && params.r0() > 1.0 {
        Some(wavespeed_report(params, seed)?)
    } else {
        None
    };

    let upper_audit = upper.as_ref().map(|u| {
        comparison_report(
            u.as_ref().map(|u| u.audit(101, 101, t_end.max(1.0 / u.delta))),
            upper_initial,
            upper_dom,
        )
    });
    let lower_audit = lower
        .as_ref()
        .map(|l| comparison_report(l.as_ref().map(|l| l.audit(101)), lower_initial, lower_dom));

    let report = Report {
        r0: params.r0(),
        r0d_initial: r0d,
        r0f_initial: trace.samples[0].r0f,
        verdict: classification.verdict.as_str(),
        t_decided: classification.t_decided,
        k0_right: speed_fit.map(|s| s.k0_right),
        k0_left: speed_fit.map(|s| s.k0_left),
        c_min: wavespeed.as_ref().map(|w| w.c_min),
        bounds_ok: trace.audit().into(),
        params: *params,
        evidence: scenario.wants(Analysis::Classify).then_some(classification.evidence),
        thresholds,
        speed_fit,
        wavespeed,
        upper_audit,
        lower_audit,
        t_end,
        warnings,
    };
    Ok(SimulationOutput { report, trace })
}

/// CSV with [`TRACE_COLUMNS`]; numbers use shortest round-trip formatting.
pub fn trace_csv(trace: &SimulationTrace) -> String {
    let mut out = TRACE_COLUMNS.join(",");
    out.push('\n');
    for s in &trace.samples {
        let row = [s.t, s.g, s.h, s.width, s.sup_vi, s.sup_hi, s.int_vi, s.int_hi, s.r0f, s.gdot, s.hdot];
        let cells: Vec<String> = row.iter().map(|v| format_number(*v)).collect();
        writeln!(out, "{}", cells.join(",")).expect("writing to a String");
    }
    out
}

/// Shortest decimal that parses back to the same `f64`.
pub fn format_number(v: f64) -> String {
    format!("{v:?}")
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::io(&path, e))
}

/// Simulates, writes `trace.csv` and `report.json` to `out`, and returns the
/// exit code (0 decided, 2 undecided).
pub fn run_scenario(scenario: &Scenario, out: &Path, seed: u64) -> Result<i32, CliError> {
    let output = simulate(scenario, seed)?;
    write_file(out, "trace.csv", &trace_csv(&output.trace))?;
    write_file(out, "report.json", &to_json(&output.report))?;
    Ok(output.report.exit_code())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdsOutput {
    pub closed_form: ThresholdReport,
    pub oracle: Option<OracleEstimate>,
    pub oracle_relative_gap: Option<f64>,
}

/// Closed-form thresholds on `(-h0, h0)` with the discrete eigen-oracle as a check.
pub fn thresholds(scenario: &Scenario, oracle_grid: usize) -> Result<ThresholdsOutput, CliError> {
    scenario.validate()?;
    let omega = DomainInterval::symmetric(scenario.init.h0)?;
    let closed_form = ThresholdReport::closed_form(&scenario.params, &omega, &[])?;
    let oracle = if oracle_grid > 0 {
        Some(r0_dirichlet_oracle(&scenario.params, &omega, oracle_grid, 1e-10)?)
    } else {
        None
    };
    let gap = oracle.as_ref().map(|o| (o.r0d - closed_form.r0d).abs() / closed_form.r0d);
    Ok(ThresholdsOutput {
        closed_form,
        oracle,
        oracle_relative_gap: gap,
    })
}

//! Spreading/vanishing classification, front-speed fits and the explicit
//! comparison functions used to audit simulations.

use serde::{Deserialize, Serialize};

use crate::error::{Result, WnvError};
use crate::front::{self, FrontState, InitialData, SimulationTrace, SolverConfig};
use crate::model::EpidemicParams;
use crate::thresholds::{r0_dirichlet, DomainInterval, EigenConstruction};

/// Finite-horizon surrogates for the asymptotic spreading/vanishing criteria.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifyConfig {
    /// Vanishing needs `sup H_i < vanish_sup * N_h*`.
    pub vanish_sup: f64,
    /// Vanishing needs width growth below `vanish_growth * h0` over the window.
    pub vanish_growth: f64,
    /// Trailing fraction of the horizon used as the vanishing window.
    pub window_fraction: f64,
    /// Spreading once the width exceeds `spread_width * h0`.
    pub spread_width: f64,
    /// Spreading once the centre node is this close (relative) to the endemic state.
    pub endemic_tolerance: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            vanish_sup: 1e-6,
            vanish_growth: 1e-6,
            window_fraction: 0.1,
            spread_width: 50.0,
            endemic_tolerance: 0.02,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Spreading,
    Vanishing,
    Undecided,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Spreading => "spreading",
            Verdict::Vanishing => "vanishing",
            Verdict::Undecided => "undecided",
        }
    }
}

/// Rule that produced a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Evidence {
    DecayedWithBoundedWidth { sup_hi: f64, width_growth: f64 },
    WidthBeyondHorizon { width: f64 },
    EndemicProximity { relative_deviation: f64 },
    Inconclusive { sup_hi: f64, width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub verdict: Verdict,
    pub evidence: Evidence,
    /// Earliest sample from which the deciding rule holds.
    pub t_decided: Option<f64>,
}

/// Largest relative deviation of `(v, h)` from `(v_star, h_star)`.
fn relative_deviation(v: f64, h: f64, v_star: f64, h_star: f64) -> f64 {
    ((v - v_star) / v_star).abs().max(((h - h_star) / h_star).abs())
}

/// Classifies a trace of either kind. `equilibrium` is the interior state
/// that signals spreading (`None` disables that rule); `n_h` scales the
/// vanishing threshold.
pub fn classify_with(
    trace: &SimulationTrace,
    equilibrium: Option<(f64, f64)>,
    n_h: f64,
    config: &ClassifyConfig,
) -> Classification {
    let samples = &trace.samples;
    let last = trace.last();
    let horizon = last.t;
    let sup_limit = config.vanish_sup * n_h;
    let growth_limit = config.vanish_growth * trace.h0;
    let window = config.window_fraction * horizon;
    let growth_at = |k: usize| {
        let t = samples[k].t;
        samples[..=k]
            .iter()
            .find(|s| s.t >= t - window)
            .map(|s| samples[k].width - s.width)
            .unwrap_or(f64::INFINITY)
    };
    let vanishing_at = |k: usize| horizon > 0.0 && samples[k].sup_hi < sup_limit && growth_at(k) < growth_limit;

    let n = samples.len();
    if vanishing_at(n - 1) {
        let mut first = n - 1;
        while first > 0 && vanishing_at(first - 1) {
            first -= 1;
        }
        return Classification {
            verdict: Verdict::Vanishing,
            evidence: Evidence::DecayedWithBoundedWidth {
                sup_hi: last.sup_hi,
                width_growth: growth_at(n - 1),
            },
            t_decided: Some(samples[first].t),
        };
    }
    for s in samples {
        if s.width > config.spread_width * trace.h0 {
            return Classification {
                verdict: Verdict::Spreading,
                evidence: Evidence::WidthBeyondHorizon { width: s.width },
                t_decided: Some(s.t),
            };
        }
        if let Some((v_star, h_star)) = equilibrium {
            let dev = match trace.kind {
                front::TraceKind::Wnv => relative_deviation(s.center_vi, s.center_hi, v_star, h_star),
                front::TraceKind::Logistic => ((s.center_hi - h_star) / h_star).abs(),
            };
            if dev <= config.endemic_tolerance {
                return Classification {
                    verdict: Verdict::Spreading,
                    evidence: Evidence::EndemicProximity { relative_deviation: dev },
                    t_decided: Some(s.t),
                };
            }
        }
    }
    Classification {
        verdict: Verdict::Undecided,
        evidence: Evidence::Inconclusive {
            sup_hi: last.sup_hi,
            width: last.width,
        },
        t_decided: None,
    }
}

/// Classifies a two-species trace against the endemic equilibrium of `params`.
pub fn classify(trace: &SimulationTrace, params: &EpidemicParams, config: &ClassifyConfig) -> Classification {
    let eq = params.endemic_equilibrium();
    let equilibrium = eq.exists.then_some((eq.v_i_star, eq.h_i_star));
    classify_with(trace, equilibrium, params.n_h_star, config)
}

/// A vanishing run must also have `sup V_i` controlled by `sup H_i`:
/// `sup V_i < β_v N_v*/(N_h* r_v (1-q)) sup H_i + 1e-6` at the last sample.
pub fn vector_decay_consistent(trace: &SimulationTrace, params: &EpidemicParams) -> bool {
    let last = trace.last();
    let factor = params.vector_gain() / params.vector_loss();
    last.sup_vi < factor * last.sup_hi + 1e-6
}

/// `∫V_i + κ∫H_i + (κ/μ)(h - g)` with `κ = r_v(1-q)/β_h`; non-increasing in
/// time when `R0 <= 1`.
pub fn mass_functional(sample: &front::TraceSample, params: &EpidemicParams) -> f64 {
    let kappa = params.vector_loss() / params.beta_h;
    sample.int_vi + kappa * sample.int_hi + kappa / params.mu * sample.width
}

/// Largest relative increase of [`mass_functional`] between consecutive samples.
pub fn mass_functional_max_increase(trace: &SimulationTrace, params: &EpidemicParams) -> f64 {
    trace
        .samples
        .windows(2)
        .map(|w| {
            let (a, b) = (mass_functional(&w[0], params), mass_functional(&w[1], params));
            (b - a) / a.abs().max(f64::MIN_POSITIVE)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Largest relative deviation from `(V_i*, H_i*)` over nodes in `[-m, m]`.
/// `None` if `[-m, m]` is not inside the current interval.
pub fn endemic_deviation(state: &FrontState, params: &EpidemicParams, m: f64) -> Option<f64> {
    if !(state.g < -m && state.h > m) {
        return None;
    }
    let eq = params.endemic_equilibrium();
    if !eq.exists {
        return None;
    }
    let worst = (0..state.xi_grid.len())
        .filter(|&j| state.position(j).abs() <= m)
        .map(|j| relative_deviation(state.v_i[j], state.h_i[j], eq.v_i_star, eq.h_i_star))
        .fold(0.0, f64::max);
    Some(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedEstimate {
    pub k0_right: f64,
    pub k0_left: f64,
    pub fit_window: (f64, f64),
    /// Smaller of the two fits' coefficients of determination.
    pub r_squared: f64,
}

/// Least-squares slope and `r²` of `y` against `x`.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, r2)
}

/// Fits `h(t)` and `-g(t)` over the final `fit_fraction` of a spreading trace.
pub fn estimate_speed(trace: &SimulationTrace, classification: &Classification, fit_fraction: f64) -> Result<SpeedEstimate> {
    if classification.verdict != Verdict::Spreading {
        return Err(WnvError::Precondition(format!(
            "speed fits need a spreading run, verdict is {}",
            classification.verdict.as_str()
        )));
    }
    if !(fit_fraction > 0.0 && fit_fraction <= 1.0) {
        return Err(WnvError::InvalidInput("fit_fraction must lie in (0, 1]".into()));
    }
    let horizon = trace.last().t;
    let t_lo = horizon * (1.0 - fit_fraction);
    let window: Vec<_> = trace.samples.iter().filter(|s| s.t >= t_lo).collect();
    if window.len() < 3 {
        return Err(WnvError::InvalidInput(format!(
            "only {} samples in the fit window; record more often",
            window.len()
        )));
    }
    let t: Vec<f64> = window.iter().map(|s| s.t).collect();
    let right: Vec<f64> = window.iter().map(|s| s.h).collect();
    let left: Vec<f64> = window.iter().map(|s| -s.g).collect();
    let (k0_right, r2r) = linear_fit(&t, &right);
    let (k0_left, r2l) = linear_fit(&t, &left);
    Ok(SpeedEstimate {
        k0_right,
        k0_left,
        fit_window: (t[0], horizon),
        r_squared: r2r.min(r2l),
    })
}

/// Minimum residual found by an inequality audit. A comparison function
/// passes when every scaled residual is at least `-tolerance`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityAudit {
    pub points: usize,
    /// Smallest residual in the direction the inequality requires.
    pub min_residual: f64,
    /// Same, divided by the amplitude of the comparison function.
    pub min_scaled_residual: f64,
    /// Smallest margin in the front conditions (upper solutions only).
    pub min_front_margin: f64,
    pub violations: usize,
}

impl InequalityAudit {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

pub const AUDIT_TOLERANCE: f64 = 1e-8;

/// Decaying upper solution on the expanding interval `(-σ(t), σ(t))`:
/// `ε e^{-δt} (φ, ψ)(x h0/σ(t))` with `σ(t) = h0 (1 + δ - (δ/2) e^{-δt})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpperSolution {
    pub params: EpidemicParams,
    pub h0: f64,
    pub delta: f64,
    /// `δ² h0 / (4 μ D_h |ψ'(h0)|)`.
    pub epsilon: f64,
    pub eigen: EigenConstruction,
}

/// `-δ + ((1+δ)^{-2} - 1) c + λ0 (1+δ)^{-2}`.
fn decay_margin(delta: f64, c: f64, lambda0: f64) -> f64 {
    let s = 1.0 / ((1.0 + delta) * (1.0 + delta));
    -delta + (s - 1.0) * c + s * lambda0
}

/// Builds the upper solution for `(-h0, h0)`. Requires `R0^F(0) < 1`.
pub fn build_upper_solution(params: &EpidemicParams, h0: f64) -> Result<UpperSolution> {
    let eigen = r0_dirichlet(params, &DomainInterval::symmetric(h0)?)?;
    if eigen.r0d >= 1.0 {
        return Err(WnvError::Precondition(format!(
            "decaying upper solution needs R0^F(0) < 1, found {}",
            eigen.r0d
        )));
    }
    let p = params;
    let lambda0 = eigen.lambda0;
    let c_v = p.vector_gain() / eigen.delta0 - p.vector_loss();
    let c_h = p.beta_h * eigen.delta0 - p.host_loss();
    let feasible = |d: f64| decay_margin(d, c_v, lambda0) >= 0.0 && decay_margin(d, c_h, lambda0) >= 0.0;
    let delta = if feasible(1.0) {
        1.0
    } else {
        let (mut lo, mut hi) = (0.0, 1.0);
        while hi - lo > 1e-10 {
            let mid = 0.5 * (lo + hi);
            if feasible(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    if delta <= 0.0 {
        return Err(WnvError::Precondition(format!(
            "no positive decay rate found for lambda0 = {lambda0:e}"
        )));
    }
    let slope = eigen.psi_prime(h0).abs();
    let epsilon = delta * delta * h0 / (4.0 * p.mu * p.dh * slope);
    Ok(UpperSolution {
        params: *params,
        h0,
        delta,
        epsilon,
        eigen,
    })
}

impl UpperSolution {
    pub fn sigma(&self, t: f64) -> f64 {
        self.h0 * (1.0 + self.delta - 0.5 * self.delta * (-self.delta * t).exp())
    }

    fn sigma_prime(&self, t: f64) -> f64 {
        0.5 * self.h0 * self.delta * self.delta * (-self.delta * t).exp()
    }

    fn amplitude(&self, t: f64) -> f64 {
        self.epsilon * (-self.delta * t).exp()
    }

    /// `(V̄, H̄)` at `(x, t)`; zero outside `(-σ(t), σ(t))`.
    pub fn profiles(&self, x: f64, t: f64) -> (f64, f64) {
        let s = self.sigma(t);
        if x.abs() >= s {
            return (0.0, 0.0);
        }
        let y = x * self.h0 / s;
        let e = self.amplitude(t);
        (e * self.eigen.phi(y), e * self.eigen.psi(y))
    }

    /// `(V̄_t - D_v V̄_xx - f1, H̄_t - D_h H̄_xx - f2)`, both required `>= 0`.
    pub fn residuals(&self, x: f64, t: f64) -> (f64, f64) {
        let p = &self.params;
        let s = self.sigma(t);
        let sp = self.sigma_prime(t);
        let y = x * self.h0 / s;
        let e = self.amplitude(t);
        let ls = self.eigen.lambda_star;
        let scale = self.h0 / s;
        let (psi, dpsi) = (self.eigen.psi(y), self.eigen.psi_prime(y));
        let d0 = self.eigen.delta0;
        let (v, h) = (e * d0 * psi, e * psi);
        let (vt, ht) = (
            e * d0 * (-self.delta * psi - dpsi * y * sp / s),
            e * (-self.delta * psi - dpsi * y * sp / s),
        );
        let (vxx, hxx) = (-e * d0 * ls * psi * scale * scale, -e * ls * psi * scale * scale);
        let (f1, f2) = p.reaction(v, h);
        (vt - p.dv * vxx - f1, ht - p.dh * hxx - f2)
    }

    /// `σ'(t) + μ D_h H̄_x(σ(t), t)`, required `>= 0` (the left end mirrors it).
    pub fn front_margin(&self, t: f64) -> f64 {
        let s = self.sigma(t);
        let hx = self.amplitude(t) * self.h0 / s * self.eigen.psi_prime(self.h0);
        self.sigma_prime(t) + self.params.mu * self.params.dh * hx
    }

    /// Evaluates the inequalities on an `nx × nt` grid over `x ∈ [-σ(t), σ(t)]`,
    /// `t ∈ [0, t_end]`.
    pub fn audit(&self, nx: usize, nt: usize, t_end: f64) -> InequalityAudit {
        let mut audit = InequalityAudit {
            points: 0,
            min_residual: f64::INFINITY,
            min_scaled_residual: f64::INFINITY,
            min_front_margin: f64::INFINITY,
            violations: 0,
        };
        for i in 0..nt {
            let t = t_end * i as f64 / (nt - 1).max(1) as f64;
            let s = self.sigma(t);
            let e = self.amplitude(t);
            let margin = self.front_margin(t);
            audit.min_front_margin = audit.min_front_margin.min(margin);
            if margin < -AUDIT_TOLERANCE * e {
                audit.violations += 1;
            }
            for j in 0..nx {
                let x = -s + 2.0 * s * j as f64 / (nx - 1) as f64;
                let (r1, r2) = self.residuals(x, t);
                let r = r1.min(r2);
                audit.points += 1;
                audit.min_residual = audit.min_residual.min(r);
                audit.min_scaled_residual = audit.min_scaled_residual.min(r / e);
                if r / e < -AUDIT_TOLERANCE {
                    audit.violations += 1;
                }
            }
        }
        if self.sigma(0.0) <= self.h0 {
            audit.violations += 1;
        }
        audit
    }

    /// Initial data lying below the upper solution at `t = 0`:
    /// `fraction · ε (φ, ψ)(x)` on `[-h0, h0]`.
    pub fn dominated_initial_data(&self, n_xi: usize, fraction: f64) -> InitialData {
        let e = fraction * self.epsilon;
        InitialData::from_profiles(
            self.h0,
            n_xi,
            |x| e * self.eigen.phi(x),
            |x| e * self.eigen.psi(x),
        )
    }
}

/// Result of comparing a simulated state against a comparison function at
/// its grid nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominanceAudit {
    pub states: usize,
    /// Largest amount by which the required ordering failed (`<= 0` when it held).
    pub max_excess: f64,
    /// Front-ordering failures (upper solution only).
    pub front_violations: usize,
    pub violations: usize,
}

impl DominanceAudit {
    pub fn new() -> Self {
        Self {
            states: 0,
            max_excess: f64::NEG_INFINITY,
            front_violations: 0,
            violations: 0,
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0 && self.front_violations == 0
    }

    /// Checks `state <= upper` at every node and `-σ(t) <= g`, `h <= σ(t)`.
    pub fn observe_upper(&mut self, upper: &UpperSolution, state: &FrontState) {
        self.states += 1;
        let s = upper.sigma(state.t);
        if state.h > s || state.g < -s {
            self.front_violations += 1;
        }
        for j in 0..state.xi_grid.len() {
            let (vb, hb) = upper.profiles(state.position(j), state.t);
            let excess = (state.v_i[j] - vb).max(state.h_i[j] - hb);
            self.max_excess = self.max_excess.max(excess);
            if excess > AUDIT_TOLERANCE {
                self.violations += 1;
            }
        }
    }

    /// Checks `state >= lower` at every node inside `[-h0, h0]`.
    pub fn observe_lower(&mut self, lower: &LowerSolution, state: &FrontState) {
        self.states += 1;
        for j in 0..state.xi_grid.len() {
            let x = state.position(j);
            if x.abs() > lower.h0 {
                continue;
            }
            let (vl, hl) = lower.profiles(x);
            let excess = (vl - state.v_i[j]).max(hl - state.h_i[j]);
            self.max_excess = self.max_excess.max(excess);
            if excess > AUDIT_TOLERANCE {
                self.violations += 1;
            }
        }
    }
}

impl Default for DominanceAudit {
    fn default() -> Self {
        Self::new()
    }
}

/// Static lower solution `δ (φ, ψ)` on `[-h0, h0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerSolution {
    pub params: EpidemicParams,
    pub h0: f64,
    pub delta_small: f64,
    pub eigen: EigenConstruction,
}

/// Builds the lower solution for `(-h0, h0)`. Requires `R0^F(0) > 1`.
pub fn build_lower_solution(params: &EpidemicParams, h0: f64) -> Result<LowerSolution> {
    let eigen = r0_dirichlet(params, &DomainInterval::symmetric(h0)?)?;
    if eigen.r0d <= 1.0 || eigen.lambda0 >= 0.0 {
        return Err(WnvError::Precondition(format!(
            "stationary lower solution needs R0^F(0) > 1, found {}",
            eigen.r0d
        )));
    }
    let p = params;
    let nh = p.n_h_star;
    // max ψ = 1, max φ = δ0.
    let by_vector = -eigen.lambda0 * nh / p.beta_v;
    let by_host = -eigen.lambda0 * nh / (p.beta_h * eigen.delta0);
    Ok(LowerSolution {
        params: *params,
        h0,
        delta_small: 0.5 * by_vector.min(by_host),
        eigen,
    })
}

impl LowerSolution {
    pub fn profiles(&self, x: f64) -> (f64, f64) {
        if x.abs() >= self.h0 {
            return (0.0, 0.0);
        }
        (self.delta_small * self.eigen.phi(x), self.delta_small * self.eigen.psi(x))
    }

    /// `(-D_v V_xx - f1, -D_h H_xx - f2)`, both required `<= 0`.
    pub fn residuals(&self, x: f64) -> (f64, f64) {
        let p = &self.params;
        let (v, h) = self.profiles(x);
        let ls = self.eigen.lambda_star;
        let (f1, f2) = p.reaction(v, h);
        (p.dv * ls * v - f1, p.dh * ls * h - f2)
    }

    /// Evaluates the reversed inequalities at `n` interior nodes of `(-h0, h0)`.
    pub fn audit(&self, n: usize) -> InequalityAudit {
        let mut audit = InequalityAudit {
            points: 0,
            min_residual: f64::INFINITY,
            min_scaled_residual: f64::INFINITY,
            min_front_margin: f64::INFINITY,
            violations: 0,
        };
        for j in 1..=n {
            let x = -self.h0 + 2.0 * self.h0 * j as f64 / (n + 1) as f64;
            let (r1, r2) = self.residuals(x);
            let r = (-r1).min(-r2);
            audit.points += 1;
            audit.min_residual = audit.min_residual.min(r);
            audit.min_scaled_residual = audit.min_scaled_residual.min(r / self.delta_small);
            if r / self.delta_small < -AUDIT_TOLERANCE {
                audit.violations += 1;
            }
        }
        audit
    }

    /// Initial data equal to the lower solution on `[-h0, h0]`.
    pub fn initial_data(&self, n_xi: usize) -> InitialData {
        InitialData::from_profiles(self.h0, n_xi, |x| self.profiles(x).0, |x| self.profiles(x).1)
    }
}

/// Outcome of the small-μ search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuBracket {
    /// Largest tested μ whose run vanished, with every smaller tested μ also vanishing.
    pub vanishing_mu: f64,
    /// Smallest tested μ whose run did not vanish, if any.
    pub non_vanishing_mu: Option<f64>,
    /// Every run, in the order performed.
    pub runs: Vec<(f64, Verdict)>,
}

impl MuBracket {
    /// A vanishing interval `(0, vanishing_mu]` was located.
    pub fn certified(&self) -> bool {
        self.vanishing_mu > 0.0
            && self
                .runs
                .iter()
                .filter(|(mu, _)| *mu <= self.vanishing_mu)
                .all(|(_, v)| *v == Verdict::Vanishing)
    }
}

/// Locates the transition in μ between vanishing and non-vanishing runs by
/// bisection on `[mu_lo, mu_hi]`, all other inputs fixed. If `mu_lo` does not
/// vanish it is divided by 10 up to `max_refinements` times. Reports brackets
/// only; a sharp threshold is not assumed to exist.
pub fn vanishing_mu_bracket(
    params: &EpidemicParams,
    init: &InitialData,
    config: &SolverConfig,
    classify_config: &ClassifyConfig,
    (mu_lo, mu_hi): (f64, f64),
    bisections: usize,
) -> Result<MuBracket> {
    if !(mu_lo > 0.0 && mu_hi > mu_lo) {
        return Err(WnvError::InvalidInput("need 0 < mu_lo < mu_hi".into()));
    }
    let mut runs = Vec::new();
    let mut verdict_at = |mu: f64| -> Result<Verdict> {
        let p = EpidemicParams { mu, ..*params };
        let trace = front::run(&p, init, config)?;
        let v = classify(&trace, &p, classify_config).verdict;
        runs.push((mu, v));
        Ok(v)
    };
    let mut lo = mu_lo;
    let mut found = false;
    for _ in 0..8 {
        if verdict_at(lo)? == Verdict::Vanishing {
            found = true;
            break;
        }
        lo /= 10.0;
    }
    if !found {
        return Err(WnvError::BracketFailure("vanishing at small mu"));
    }
    let mut hi = mu_hi;
    if verdict_at(hi)? == Verdict::Vanishing {
        return Ok(MuBracket {
            vanishing_mu: hi,
            non_vanishing_mu: None,
            runs,
        });
    }
    for _ in 0..bisections {
        let mid = (lo * hi).sqrt();
        if verdict_at(mid)? == Verdict::Vanishing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(MuBracket {
        vanishing_mu: lo,
        non_vanishing_mu: Some(hi),
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::front::{TraceKind, TraceSample};

    fn s1() -> EpidemicParams {
        EpidemicParams::endemic_example()
    }

    fn synthetic(samples: Vec<TraceSample>, h0: f64) -> SimulationTrace {
        let state = FrontState::initial(&InitialData::cosine(h0, 101, 0.0, 0.0));
        SimulationTrace {
            kind: TraceKind::Wnv,
            h0,
            samples,
            final_state: state,
            stats: quiet_stats(),
            speed_bound: None,
            degenerate: false,
            warnings: vec![],
        }
    }

    fn quiet_stats() -> front::StepStatistics {
        front::StepStatistics {
            accepted: 0,
            rejected: 0,
            max_box_excess: 0.0,
            min_hdot: 1.0,
            max_gdot: -1.0,
            max_front_speed: 0.0,
            min_center_sum: 0.0,
            max_center_sum: 0.0,
            receding_front_steps: 0,
        }
    }

    fn sample(t: f64, g: f64, h: f64, sup_hi: f64, center: (f64, f64)) -> TraceSample {
        TraceSample {
            t,
            g,
            h,
            width: h - g,
            sup_vi: sup_hi,
            sup_hi,
            int_vi: 0.0,
            int_hi: 0.0,
            r0f: 0.0,
            gdot: -1.0,
            hdot: 1.0,
            center_vi: center.0,
            center_hi: center.1,
        }
    }

    #[test]
    fn linear_trace_fits_exactly() {
        let samples = (0..=100)
            .map(|k| {
                let t = k as f64 * 0.1;
                sample(t, -2.0 * t - 1.0, 3.0 * t + 1.0, 0.5, (0.0, 0.0))
            })
            .collect();
        let trace = synthetic(samples, 1.0);
        let spreading = Classification {
            verdict: Verdict::Spreading,
            evidence: Evidence::WidthBeyondHorizon { width: 0.0 },
            t_decided: Some(0.0),
        };
        let est = estimate_speed(&trace, &spreading, 0.5).unwrap();
        assert!((est.k0_right - 3.0).abs() < 1e-12);
        assert!((est.k0_left - 2.0).abs() < 1e-12);
        assert!((est.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(est.fit_window, (5.0, 10.0));
        let undecided = Classification {
            verdict: Verdict::Undecided,
            ..spreading
        };
        assert!(estimate_speed(&trace, &undecided, 0.5).is_err());
        assert!(estimate_speed(&trace, &spreading, 0.0).is_err());
    }

    #[test]
    fn classification_rules() {
        let p = s1();
        let config = ClassifyConfig::default();
        let eq = p.endemic_equilibrium();

        // Decayed and frozen for the whole horizon.
        let vanish = synthetic(
            (0..=10)
                .map(|k| sample(k as f64, -1.0, 1.0, if k < 5 { 0.1 } else { 1e-9 }, (0.0, 0.0)))
                .collect(),
            1.0,
        );
        let c = classify(&vanish, &p, &config);
        assert_eq!(c.verdict, Verdict::Vanishing);
        assert_eq!(c.t_decided, Some(5.0));

        let wide = synthetic((0..=10).map(|k| sample(k as f64, -(k as f64) * 3.0 - 1.0, k as f64 * 3.0 + 1.0, 0.5, (0.0, 0.0))).collect(), 1.0);
        let c = classify(&wide, &p, &config);
        assert_eq!(c.verdict, Verdict::Spreading);
        assert_eq!(c.t_decided, Some(9.0));

        let near = synthetic(
            (0..=10)
                .map(|k| {
                    let f = if k >= 4 { 1.01 } else { 0.5 };
                    sample(k as f64, -1.0 - k as f64 * 0.01, 1.0 + k as f64 * 0.01, 0.5, (f * eq.v_i_star, f * eq.h_i_star))
                })
                .collect(),
            1.0,
        );
        let c = classify(&near, &p, &config);
        assert_eq!(c.verdict, Verdict::Spreading);
        assert_eq!(c.t_decided, Some(4.0));
        assert!(matches!(c.evidence, Evidence::EndemicProximity { .. }));

        let short = synthetic(vec![sample(0.0, -1.0, 1.0, 0.5, (0.0, 0.0)), sample(0.001, -1.0, 1.0, 0.5, (0.0, 0.0))], 1.0);
        assert_eq!(classify(&short, &p, &config).verdict, Verdict::Undecided);
    }

    #[test]
    fn growing_width_blocks_vanishing() {
        let trace = synthetic((0..=10).map(|k| sample(k as f64, -1.0, 1.0 + k as f64 * 1e-3, 1e-9, (0.0, 0.0))).collect(), 1.0);
        assert_eq!(classify(&trace, &s1(), &ClassifyConfig::default()).verdict, Verdict::Undecided);
    }

    #[test]
    fn upper_solution_on_small_interval() {
        let p = s1();
        let up = build_upper_solution(&p, 0.2).unwrap();
        assert!(up.delta > 0.0 && up.delta <= 1.0);
        let c_v = p.vector_gain() / up.eigen.delta0 - p.vector_loss();
        let c_h = p.beta_h * up.eigen.delta0 - p.host_loss();
        // δ is the largest feasible value: one inequality is (nearly) tight.
        let tight = decay_margin(up.delta, c_v, up.eigen.lambda0).min(decay_margin(up.delta, c_h, up.eigen.lambda0));
        assert!((0.0..1e-8).contains(&tight), "{tight}");
        // The bracketed constants equal D λ* - λ0.
        assert!((c_h - (p.dh * up.eigen.lambda_star - up.eigen.lambda0)).abs() < 1e-9);
        assert!((c_v - (p.dv * up.eigen.lambda_star - up.eigen.lambda0)).abs() < 1e-9);
        assert!((up.epsilon - up.delta * up.delta * 0.04 / (2.0 * std::f64::consts::PI)).abs() < 1e-15);
        assert!((up.sigma(0.0) - 0.2 * (1.0 + up.delta / 2.0)).abs() < 1e-15);
        let audit = up.audit(101, 101, 20.0 / up.delta);
        assert!(audit.passed(), "{audit:?}");
        assert_eq!(audit.points, 101 * 101);
    }

    #[test]
    fn upper_solution_rejects_supercritical_interval() {
        assert!(build_upper_solution(&s1(), 2.0).is_err());
        assert!(build_lower_solution(&s1(), 0.2).is_err());
    }

    /// Half-width at which `R0^D = 1` for S1, by bisection.
    fn critical_half_width(p: &EpidemicParams) -> f64 {
        let (mut lo, mut hi) = (0.2, 2.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if r0_dirichlet(p, &DomainInterval::symmetric(mid).unwrap()).unwrap().r0d > 1.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    #[test]
    fn upper_solution_delta_vanishes_with_lambda0() {
        let p = s1();
        let hc = critical_half_width(&p);
        let mut last = f64::INFINITY;
        for gap in [1e-1, 1e-2, 1e-3, 1e-4] {
            let up = build_upper_solution(&p, hc - gap).unwrap();
            assert!(up.eigen.lambda0 > 0.0);
            assert!(up.delta <= up.eigen.lambda0);
            assert!(up.delta < last);
            last = up.delta;
            assert!(up.audit(21, 21, 5.0 / up.delta).passed());
        }
        assert!(last < 1e-4);
    }

    #[test]
    fn lower_solution_on_wide_interval() {
        let p = s1();
        let low = build_lower_solution(&p, 2.0).unwrap();
        let expected = 0.5 * (0.35870685135057258 / 0.5f64).min(0.35870685135057258 / (0.5 * 2.151_114_252_837_315));
        assert!((low.delta_small - expected).abs() < 1e-12);
        let audit = low.audit(101);
        assert!(audit.passed(), "{audit:?}");
        assert!(audit.min_residual > 0.0);
        assert_eq!(low.profiles(2.0), (0.0, 0.0));
    }

    #[test]
    fn lower_solution_vanishes_as_lambda0_approaches_zero() {
        let p = s1();
        let hi = critical_half_width(&p);
        let mut last = f64::INFINITY;
        for gap in [1e-1, 1e-2, 1e-3, 1e-4] {
            let low = build_lower_solution(&p, hi + gap).unwrap();
            assert!(low.delta_small < last);
            last = low.delta_small;
        }
        assert!(last < 1e-3);
    }

    #[test]
    fn mass_functional_of_sample() {
        let p = EpidemicParams::subcritical_example();
        let mut s = sample(0.0, -1.0, 1.0, 0.0, (0.0, 0.0));
        s.int_vi = 0.3;
        s.int_hi = 0.4;
        let kappa = 0.2 / 0.1;
        assert!((mass_functional(&s, &p) - (0.3 + kappa * 0.4 + kappa * 2.0)).abs() < 1e-15);
    }
}

//! Moving-front solver for the infected densities on `(g(t), h(t))`.
//!
//! States live on a fixed grid `ξ ∈ [0, 1]` with `x = g + ξ (h - g)`. The
//! host-infected flux at each end drives the fronts; the vector density is
//! pinned to zero at both ends and has no front condition of its own.
//! [`run_logistic`] integrates the scalar logistic problem with the same
//! front conditions and is used to validate speeds against a boundary-value
//! solve.

mod engine;

use serde::{Deserialize, Serialize};

use crate::error::{Result, WnvError};
use crate::model::{EpidemicParams, ModelMode};
use crate::ode::BOX_TOLERANCE;
use crate::thresholds::r0_free;
use engine::{Kinetics, MAX_SPECIES};

/// Maximum number of consecutive step halvings before a step is abandoned.
pub const MAX_HALVINGS: u32 = 20;

/// Grid and time-stepping controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Grid nodes on `[0, 1]`; odd and at least 101.
    pub n_xi: usize,
    /// Upper bound on the time step.
    pub dt_init: f64,
    /// Fraction of the front-advection and reaction step limits.
    pub cfl_safety: f64,
    pub t_max: f64,
    /// Time between recorded samples.
    pub record_every: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            n_xi: 401,
            dt_init: 0.01,
            cfl_safety: 0.5,
            t_max: 100.0,
            record_every: 0.5,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: &str| {
            Err(WnvError::InvalidParameter {
                name,
                reason: reason.to_string(),
            })
        };
        if self.n_xi < 101 || self.n_xi.is_multiple_of(2) {
            return bad("n_xi", "must be odd and at least 101");
        }
        if !(self.dt_init.is_finite() && self.dt_init > 0.0) {
            return bad("dt_init", "must be positive");
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 0.5) {
            return bad("cfl_safety", "must lie in (0, 0.5]");
        }
        if !(self.t_max.is_finite() && self.t_max >= 0.0) {
            return bad("t_max", "must be finite and non-negative");
        }
        if !(self.record_every.is_finite() && self.record_every > 0.0) {
            return bad("record_every", "must be positive");
        }
        Ok(())
    }

    fn xi_grid(&self) -> Vec<f64> {
        uniform_grid(self.n_xi)
    }
}

fn uniform_grid(n: usize) -> Vec<f64> {
    let last = (n - 1) as f64;
    (0..n).map(|j| j as f64 / last).collect()
}

/// Initial half-width and profiles sampled at `x_j = -h0 + 2 h0 j/(n-1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    pub h0: f64,
    pub v_i0: Vec<f64>,
    pub h_i0: Vec<f64>,
}

impl InitialData {
    /// Samples the given profiles of `x ∈ [-h0, h0]` on `n_xi` nodes. End
    /// values are forced to zero. Node positions are exactly mirror
    /// symmetric about `x = 0`.
    pub fn from_profiles(h0: f64, n_xi: usize, v: impl Fn(f64) -> f64, h: impl Fn(f64) -> f64) -> Self {
        let last = (n_xi - 1) as f64;
        let xs: Vec<f64> = (0..n_xi)
            .map(|j| h0 * (2.0 * j as f64 - last) / last)
            .collect();
        let sample = |f: &dyn Fn(f64) -> f64| {
            let mut out: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
            out[0] = 0.0;
            out[n_xi - 1] = 0.0;
            out
        };
        Self {
            h0,
            v_i0: sample(&v),
            h_i0: sample(&h),
        }
    }

    /// `(amp_v, amp_h) · cos(xπ/(2h0))`.
    pub fn cosine(h0: f64, n_xi: usize, amp_v: f64, amp_h: f64) -> Self {
        let k = std::f64::consts::FRAC_PI_2 / h0;
        Self::from_profiles(h0, n_xi, |x| amp_v * (k * x).cos(), |x| amp_h * (k * x).cos())
    }

    /// Checks the profile constraints. Returns warnings for accepted but
    /// degenerate data.
    pub fn validate(&self, params: &EpidemicParams, n_xi: usize) -> Result<Vec<String>> {
        if !(self.h0.is_finite() && self.h0 > 0.0) {
            return Err(WnvError::InvalidParameter {
                name: "h0",
                reason: "must be positive".into(),
            });
        }
        check_profile("v_i0", &self.v_i0, n_xi, params.n_v_star)?;
        check_profile("h_i0", &self.h_i0, n_xi, params.n_h_star)?;
        let mut warnings = Vec::new();
        let inner = &self.h_i0[1..n_xi - 1];
        if inner.iter().all(|&v| v == 0.0) {
            warnings.push("h_i0 vanishes identically; the fronts stay at their initial positions".to_string());
        } else if inner.contains(&0.0) {
            warnings.push("h_i0 is not strictly positive inside (-h0, h0)".to_string());
        }
        Ok(warnings)
    }
}

fn check_profile(name: &'static str, values: &[f64], n_xi: usize, upper: f64) -> Result<()> {
    let fail = |reason: String| Err(WnvError::InvalidParameter { name, reason });
    if values.len() != n_xi {
        return fail(format!("expected {n_xi} samples, found {}", values.len()));
    }
    if values[0] != 0.0 || values[n_xi - 1] != 0.0 {
        return fail("must vanish at both ends".into());
    }
    if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0 && **v <= upper)) {
        return fail(format!("value {v} outside [0, {upper}]"));
    }
    Ok(())
}

/// Snapshot of the moving-domain solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontState {
    pub t: f64,
    pub g: f64,
    pub h: f64,
    pub xi_grid: Vec<f64>,
    pub v_i: Vec<f64>,
    pub h_i: Vec<f64>,
}

impl FrontState {
    pub fn initial(init: &InitialData) -> Self {
        Self {
            t: 0.0,
            g: -init.h0,
            h: init.h0,
            xi_grid: uniform_grid(init.h_i0.len()),
            v_i: init.v_i0.clone(),
            h_i: init.h_i0.clone(),
        }
    }

    pub fn width(&self) -> f64 {
        self.h - self.g
    }

    pub fn dxi(&self) -> f64 {
        self.xi_grid[1] - self.xi_grid[0]
    }

    /// Physical position of node `j`.
    pub fn position(&self, j: usize) -> f64 {
        self.g + self.xi_grid[j] * self.width()
    }

    /// Index of the node closest to `x`, clamped to the grid.
    pub fn nearest_node(&self, x: f64) -> usize {
        let s = ((x - self.g) / self.width()).clamp(0.0, 1.0);
        let last = self.xi_grid.len() - 1;
        ((s * last as f64).round() as usize).min(last)
    }

    fn fields(&self) -> Vec<Vec<f64>> {
        vec![self.v_i.clone(), self.h_i.clone()]
    }
}

struct Wnv<'a>(&'a EpidemicParams);

impl Kinetics for Wnv<'_> {
    fn species(&self) -> usize {
        2
    }
    fn diffusivity(&self, k: usize) -> f64 {
        if k == 0 {
            self.0.dv
        } else {
            self.0.dh
        }
    }
    fn driver(&self) -> usize {
        1
    }
    fn front_coefficient(&self) -> f64 {
        self.0.mu * self.0.dh
    }
    fn react(&self, u: [f64; MAX_SPECIES]) -> [f64; MAX_SPECIES] {
        let (f1, f2) = self.0.reaction(u[0], u[1]);
        [f1, f2]
    }
    fn upper(&self) -> [f64; MAX_SPECIES] {
        [self.0.n_v_star, self.0.n_h_star]
    }
    fn reaction_rate_bound(&self) -> f64 {
        let p = self.0;
        (p.beta_v + p.vector_loss()).max(p.beta_h * p.n_v_star / p.n_h_star + p.host_loss())
    }
}

/// Scalar logistic problem `u_t = d u_xx + u (a - b u)` with `h' = -μ d u_x(h)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticProblem {
    pub a: f64,
    pub b: f64,
    pub d: f64,
    pub mu: f64,
}

impl LogisticProblem {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("a", self.a), ("b", self.b), ("d", self.d), ("mu", self.mu)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(WnvError::InvalidParameter {
                    name,
                    reason: "must be positive".into(),
                });
            }
        }
        Ok(())
    }

    /// Dirichlet threshold `a / (d λ*)` on an interval of the given width.
    pub fn threshold(&self, width: f64) -> f64 {
        let k = std::f64::consts::PI / width;
        self.a / (self.d * k * k)
    }
}

struct Logistic {
    problem: LogisticProblem,
    ceiling: f64,
}

impl Kinetics for Logistic {
    fn species(&self) -> usize {
        1
    }
    fn diffusivity(&self, _k: usize) -> f64 {
        self.problem.d
    }
    fn driver(&self) -> usize {
        0
    }
    fn front_coefficient(&self) -> f64 {
        self.problem.mu * self.problem.d
    }
    fn react(&self, u: [f64; MAX_SPECIES]) -> [f64; MAX_SPECIES] {
        let p = &self.problem;
        [u[0] * (p.a - p.b * u[0]), 0.0]
    }
    fn upper(&self) -> [f64; MAX_SPECIES] {
        [self.ceiling, 0.0]
    }
    fn reaction_rate_bound(&self) -> f64 {
        let p = &self.problem;
        p.a.max(2.0 * p.b * self.ceiling - p.a)
    }
}

/// `(g', h')` for the current state.
pub fn front_flux(state: &FrontState, params: &EpidemicParams) -> (f64, f64) {
    engine::front_velocities(&Wnv(params), &state.fields(), state.width(), state.dxi())
}

/// Advances one step of the largest stable size (capped by `dt_init`),
/// halving on box violations.
pub fn step(state: &FrontState, params: &EpidemicParams, config: &SolverConfig) -> Result<FrontState> {
    let kin = Wnv(params);
    let fields = state.fields();
    let dt = engine::stable_dt(&kin, &fields, state.g, state.h, state.dxi(), config.cfl_safety, config.dt_init);
    let (acc, dt_used, _) = advance_with_halving(&kin, &state.xi_grid, &fields, state.g, state.h, state.t, dt)?;
    Ok(wnv_state(state.t + dt_used, &state.xi_grid, acc))
}

fn wnv_state(t: f64, xi: &[f64], acc: engine::Accepted) -> FrontState {
    let mut fields = acc.fields.into_iter();
    FrontState {
        t,
        g: acc.g,
        h: acc.h,
        xi_grid: xi.to_vec(),
        v_i: fields.next().unwrap_or_default(),
        h_i: fields.next().unwrap_or_default(),
    }
}

fn advance_with_halving<K: Kinetics>(
    kin: &K,
    xi: &[f64],
    fields: &[Vec<f64>],
    g: f64,
    h: f64,
    t: f64,
    dt: f64,
) -> Result<(engine::Accepted, f64, u32)> {
    let mut dt = dt;
    for halvings in 0..=MAX_HALVINGS {
        match engine::advance(kin, xi, fields, g, h, dt) {
            Ok(acc) => return Ok((acc, dt, halvings)),
            Err(rej) if halvings == MAX_HALVINGS => {
                return Err(WnvError::StepFailure {
                    t,
                    dt,
                    halvings,
                    reason: format!("state left the invariant box by {:e}", rej.excess),
                })
            }
            Err(_) => dt *= 0.5,
        }
    }
    unreachable!("loop returns on the last halving")
}

/// One recorded point of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    pub g: f64,
    pub h: f64,
    pub width: f64,
    pub sup_vi: f64,
    pub sup_hi: f64,
    pub int_vi: f64,
    pub int_hi: f64,
    /// Dirichlet threshold on the current interval.
    pub r0f: f64,
    pub gdot: f64,
    pub hdot: f64,
    /// Densities at the node nearest `x = 0`.
    pub center_vi: f64,
    pub center_hi: f64,
}

/// Extremes over every accepted step, not only recorded samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepStatistics {
    pub accepted: usize,
    pub rejected: usize,
    /// Largest excursion outside the box before clamping.
    pub max_box_excess: f64,
    /// Smallest `h'` and largest `g'` used by any step.
    pub min_hdot: f64,
    pub max_gdot: f64,
    /// Largest `|g'|` or `h'` used by any step.
    pub max_front_speed: f64,
    /// Extremes of `g + h` over all steps.
    pub min_center_sum: f64,
    pub max_center_sum: f64,
    /// Steps that moved a front inward.
    pub receding_front_steps: usize,
}

impl StepStatistics {
    fn new(g: f64, h: f64) -> Self {
        Self {
            accepted: 0,
            rejected: 0,
            max_box_excess: 0.0,
            min_hdot: f64::INFINITY,
            max_gdot: f64::NEG_INFINITY,
            max_front_speed: 0.0,
            min_center_sum: g + h,
            max_center_sum: g + h,
            receding_front_steps: 0,
        }
    }
}

/// Which problem produced a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    Wnv,
    /// Scalar logistic density stored in the `h_i` slot; `v_i` is zero.
    Logistic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTrace {
    pub kind: TraceKind,
    pub h0: f64,
    pub samples: Vec<TraceSample>,
    pub final_state: FrontState,
    pub stats: StepStatistics,
    /// A-priori bound on `|g'|` and `h'`, when one is available.
    pub speed_bound: Option<f64>,
    /// Initial data had no interior infection, so the fronts are static.
    pub degenerate: bool,
    pub warnings: Vec<String>,
}

/// Outcome of the front invariant checks on a trace.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FrontAudit {
    pub monotone_ok: bool,
    pub symmetry_ok: bool,
    pub box_ok: bool,
    pub speed_bound_ok: bool,
    pub violations: Vec<String>,
}

impl FrontAudit {
    pub fn all_ok(&self) -> bool {
        self.monotone_ok && self.symmetry_ok && self.box_ok && self.speed_bound_ok
    }
}

impl SimulationTrace {
    pub fn last(&self) -> &TraceSample {
        self.samples.last().expect("traces hold at least the initial sample")
    }

    /// First sample with `t >= time`.
    pub fn sample_at(&self, time: f64) -> Option<&TraceSample> {
        self.samples.iter().find(|s| s.t >= time)
    }

    /// Checks fronts, box and speed bound over all steps and samples.
    ///
    /// Front velocities must be strictly signed at every step. Positions are
    /// only required not to move inward, since in long vanishing runs the
    /// per-step increment drops below the float resolution of `h`.
    pub fn audit(&self) -> FrontAudit {
        let mut a = FrontAudit {
            monotone_ok: true,
            symmetry_ok: true,
            box_ok: true,
            speed_bound_ok: true,
            violations: Vec::new(),
        };
        let st = &self.stats;
        if !self.degenerate && st.accepted > 0 {
            if st.min_hdot <= 0.0 || st.max_gdot >= 0.0 || st.receding_front_steps > 0 {
                a.monotone_ok = false;
                a.violations.push(format!(
                    "fronts not strictly monotone: min h' = {:e}, max g' = {:e}, receding steps = {}",
                    st.min_hdot, st.max_gdot, st.receding_front_steps
                ));
            }
            for w in self.samples.windows(2) {
                if w[1].h < w[0].h || w[1].g > w[0].g || w[1].hdot <= 0.0 || w[1].gdot >= 0.0 {
                    a.monotone_ok = false;
                    a.violations.push(format!("fronts not strictly monotone between t = {} and t = {}", w[0].t, w[1].t));
                    break;
                }
            }
        }
        let limit = 2.0 * self.h0;
        if !(st.min_center_sum > -limit && st.max_center_sum < limit) {
            a.symmetry_ok = false;
            a.violations.push(format!(
                "g + h left (-2h0, 2h0): range [{}, {}]",
                st.min_center_sum, st.max_center_sum
            ));
        }
        if st.max_box_excess > BOX_TOLERANCE {
            a.box_ok = false;
            a.violations.push(format!("box exceeded by {:e}", st.max_box_excess));
        }
        if let Some(bound) = self.speed_bound {
            let sampled = self
                .samples
                .iter()
                .map(|s| s.gdot.abs().max(s.hdot.abs()))
                .fold(st.max_front_speed, f64::max);
            if sampled > bound {
                a.speed_bound_ok = false;
                a.violations.push(format!("front speed {sampled} exceeds bound {bound}"));
            }
        }
        a
    }
}

/// `C1 = 2 M N_h μ D_h` with `M = max(sqrt(β_h N_v N_h/(2 D_h)), 4‖H0‖_C1/(3 N_h))`;
/// the `C¹` norm is estimated from finite-difference slopes of the samples.
pub fn front_speed_bound(params: &EpidemicParams, init: &InitialData) -> f64 {
    let n = init.h_i0.len();
    let dx = 2.0 * init.h0 / (n - 1) as f64;
    let sup = init.h_i0.iter().cloned().fold(0.0, f64::max);
    let slope = init.h_i0.windows(2).map(|w| ((w[1] - w[0]) / dx).abs()).fold(0.0, f64::max);
    let norm = sup + slope;
    let p = params;
    let m = (p.beta_h * p.n_v_star * p.n_h_star / (2.0 * p.dh))
        .sqrt()
        .max(4.0 * norm / (3.0 * p.n_h_star));
    2.0 * m * p.n_h_star * p.mu * p.dh
}

/// Runs the two-species problem to `config.t_max`.
pub fn run(params: &EpidemicParams, init: &InitialData, config: &SolverConfig) -> Result<SimulationTrace> {
    run_observed(params, init, config, |_| {})
}

/// As [`run`], calling `observer` with every recorded state (including the
/// initial one).
pub fn run_observed(
    params: &EpidemicParams,
    init: &InitialData,
    config: &SolverConfig,
    mut observer: impl FnMut(&FrontState),
) -> Result<SimulationTrace> {
    params.validate(ModelMode::Simplified)?;
    config.validate()?;
    let warnings = init.validate(params, config.n_xi)?;
    let kin = Wnv(params);
    let sample = |state: &FrontState, fields: &[Vec<f64>], dxi: f64| -> Result<TraceSample> {
        let (gdot, hdot) = engine::front_velocities(&kin, fields, state.width(), dxi);
        Ok(make_sample(state, r0_free(params, state.g, state.h)?, gdot, hdot))
    };
    let degenerate = init.h_i0.iter().all(|&v| v == 0.0);
    let mut trace = integrate(&kin, init, config, TraceKind::Wnv, |s| s.fields(), sample, &mut observer)?;
    trace.speed_bound = Some(front_speed_bound(params, init));
    trace.degenerate = degenerate;
    trace.warnings = warnings;
    Ok(trace)
}

/// Runs the scalar logistic problem from samples `u0` on `[-h0, h0]`.
pub fn run_logistic(problem: &LogisticProblem, h0: f64, u0: &[f64], config: &SolverConfig) -> Result<SimulationTrace> {
    run_logistic_observed(problem, h0, u0, config, |_| {})
}

pub fn run_logistic_observed(
    problem: &LogisticProblem,
    h0: f64,
    u0: &[f64],
    config: &SolverConfig,
    mut observer: impl FnMut(&FrontState),
) -> Result<SimulationTrace> {
    problem.validate()?;
    config.validate()?;
    let sup = u0.iter().cloned().fold(0.0, f64::max);
    let ceiling = (problem.a / problem.b).max(sup);
    if !(h0.is_finite() && h0 > 0.0) {
        return Err(WnvError::InvalidParameter {
            name: "h0",
            reason: "must be positive".into(),
        });
    }
    check_profile("u0", u0, config.n_xi, ceiling)?;
    let init = InitialData {
        h0,
        v_i0: vec![0.0; u0.len()],
        h_i0: u0.to_vec(),
    };
    let kin = Logistic {
        problem: *problem,
        ceiling,
    };
    let sample = |state: &FrontState, fields: &[Vec<f64>], dxi: f64| -> Result<TraceSample> {
        let (gdot, hdot) = engine::front_velocities(&kin, fields, state.width(), dxi);
        Ok(make_sample(state, problem.threshold(state.width()), gdot, hdot))
    };
    let mut trace = integrate(
        &kin,
        &init,
        config,
        TraceKind::Logistic,
        |s| vec![s.h_i.clone()],
        sample,
        &mut observer,
    )?;
    trace.degenerate = u0.iter().all(|&v| v == 0.0);
    Ok(trace)
}

fn make_sample(state: &FrontState, r0f: f64, gdot: f64, hdot: f64) -> TraceSample {
    let dxi = state.dxi();
    let width = state.width();
    let sup = |v: &[f64]| v.iter().cloned().fold(0.0, f64::max);
    let c = state.nearest_node(0.0);
    TraceSample {
        t: state.t,
        g: state.g,
        h: state.h,
        width,
        sup_vi: sup(&state.v_i),
        sup_hi: sup(&state.h_i),
        int_vi: engine::integrate(&state.v_i, dxi, width),
        int_hi: engine::integrate(&state.h_i, dxi, width),
        r0f,
        gdot,
        hdot,
        center_vi: state.v_i[c],
        center_hi: state.h_i[c],
    }
}

fn to_state(kind: TraceKind, t: f64, g: f64, h: f64, xi: &[f64], fields: &[Vec<f64>]) -> FrontState {
    let (v_i, h_i) = match kind {
        TraceKind::Wnv => (fields[0].clone(), fields[1].clone()),
        TraceKind::Logistic => (vec![0.0; xi.len()], fields[0].clone()),
    };
    FrontState {
        t,
        g,
        h,
        xi_grid: xi.to_vec(),
        v_i,
        h_i,
    }
}

fn integrate<K: Kinetics>(
    kin: &K,
    init: &InitialData,
    config: &SolverConfig,
    kind: TraceKind,
    fields_of: impl Fn(&FrontState) -> Vec<Vec<f64>>,
    sample: impl Fn(&FrontState, &[Vec<f64>], f64) -> Result<TraceSample>,
    observer: &mut dyn FnMut(&FrontState),
) -> Result<SimulationTrace> {
    let xi = config.xi_grid();
    let dxi = xi[1] - xi[0];
    let initial = FrontState::initial(init);
    let mut fields = fields_of(&initial);
    let (mut g, mut h, mut t) = (initial.g, initial.h, 0.0);
    let mut stats = StepStatistics::new(g, h);
    observer(&initial);
    let mut samples = vec![sample(&initial, &fields, dxi)?];
    let mut record_index = 1u64;
    let mut state = initial;

    while t < config.t_max {
        let next_record = (record_index as f64 * config.record_every).min(config.t_max);
        let target_gap = next_record - t;
        let stable = engine::stable_dt(kin, &fields, g, h, dxi, config.cfl_safety, config.dt_init);
        let (dt, lands) = if stable >= target_gap { (target_gap, true) } else { (stable, false) };
        let (gdot, hdot) = engine::front_velocities(kin, &fields, h - g, dxi);
        let (acc, dt_used, halvings) = advance_with_halving(kin, &xi, &fields, g, h, t, dt)?;
        stats.rejected += halvings as usize;
        stats.accepted += 1;
        stats.min_hdot = stats.min_hdot.min(hdot);
        stats.max_gdot = stats.max_gdot.max(gdot);
        stats.max_front_speed = stats.max_front_speed.max(gdot.abs()).max(hdot.abs());
        if acc.h < h || acc.g > g {
            stats.receding_front_steps += 1;
        }
        stats.max_box_excess = stats.max_box_excess.max(acc.excess);
        t = if lands && halvings == 0 { next_record } else { t + dt_used };
        g = acc.g;
        h = acc.h;
        fields = acc.fields;
        stats.min_center_sum = stats.min_center_sum.min(g + h);
        stats.max_center_sum = stats.max_center_sum.max(g + h);
        if t >= next_record {
            record_index += 1;
            state = to_state(kind, t, g, h, &xi, &fields);
            observer(&state);
            samples.push(sample(&state, &fields, dxi)?);
        }
    }
    if state.t != t {
        state = to_state(kind, t, g, h, &xi, &fields);
    }
    Ok(SimulationTrace {
        kind,
        h0: init.h0,
        samples,
        final_state: state,
        stats,
        speed_bound: None,
        degenerate: false,
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests;

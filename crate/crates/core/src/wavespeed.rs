//! Traveling-front speeds: the linear-determinacy minimum `c_min`, the
//! logistic semi-wavefront and its free-boundary speed `k0`, and the
//! two-species semi-wavefront.
//!
//! The two-species speed selection `μ D_h H'(0) = k` mirrors the logistic
//! condition and is an extension: no existence theory backs it.

use serde::{Deserialize, Serialize};

use crate::error::{Result, WnvError};
use crate::linalg::{solve_tridiagonal, Block, BlockTridiagonal};
use crate::model::{EpidemicParams, ModelMode};

/// `s`, the principal eigenvalue of `s² diag(D_v, D_h) + J(0)`, and their ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionPoint {
    pub s: f64,
    pub lambda_p: f64,
    pub speed: f64,
}

/// Larger root of the characteristic quadratic of `s² D + J(0)`.
pub fn dispersion(params: &EpidemicParams, s: f64) -> DispersionPoint {
    let p = params;
    let m11 = p.dv * s * s - p.vector_loss();
    let m22 = p.dh * s * s - p.host_loss();
    let off = p.vector_gain() * p.beta_h;
    let half_gap = 0.5 * (m11 - m22);
    let lambda_p = 0.5 * (m11 + m22) + (half_gap * half_gap + off).sqrt();
    DispersionPoint {
        s,
        lambda_p,
        speed: lambda_p / s,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveSpeedResult {
    pub c_min: f64,
    pub s_star: f64,
    /// Free-boundary speed, when computed.
    pub k0: Option<f64>,
    /// Spread speed of the Cauchy problem; equal to `c_min`.
    pub c0: f64,
}

impl WaveSpeedResult {
    /// Smallest `speed(s) - c_min` over the given decay rates; a valid
    /// minimum keeps this above `-1e-9`.
    pub fn certificate_margin(&self, params: &EpidemicParams, s_values: impl IntoIterator<Item = f64>) -> f64 {
        s_values
            .into_iter()
            .map(|s| dispersion(params, s).speed - self.c_min)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Smallest exponent of the geometric scan `s = 2^k`.
pub const SCAN_MIN_EXP: i32 = -10;
pub const SCAN_MAX_EXP: i32 = 10;

/// Golden-section minimisation of a unimodal `f` on `[a, b]`.
fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol * (a.abs() + b.abs()) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Minimises `λ_p(s)/s` over `s > 0`.
pub fn c_min(params: &EpidemicParams) -> Result<WaveSpeedResult> {
    params.validate(ModelMode::Simplified)?;
    let r0 = params.r0();
    if r0 <= 1.0 {
        return Err(WnvError::NoTravelingFront { r0 });
    }
    let scan: Vec<(f64, f64)> = (SCAN_MIN_EXP..=SCAN_MAX_EXP)
        .map(|k| {
            let s = 2f64.powi(k);
            (s, dispersion(params, s).speed)
        })
        .collect();
    let best = (1..scan.len() - 1)
        .filter(|&i| scan[i].1 <= scan[i - 1].1 && scan[i].1 <= scan[i + 1].1)
        .min_by(|&i, &j| scan[i].1.total_cmp(&scan[j].1))
        .ok_or(WnvError::BracketFailure("minimum of the dispersion speed"))?;
    let s_star = golden_min(|s| dispersion(params, s).speed, scan[best - 1].0, scan[best + 1].0, 1e-12);
    let c = dispersion(params, s_star).speed;
    Ok(WaveSpeedResult {
        c_min: c,
        s_star,
        k0: None,
        c0: c,
    })
}

/// Uniform-grid profile on `[0, L]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarProfile {
    pub k: f64,
    pub grid: Vec<f64>,
    pub u: Vec<f64>,
    /// Second-order one-sided `U'(0)`.
    pub slope_at_origin: f64,
    /// Max-norm residual of the discrete equations at convergence.
    pub residual: f64,
    pub newton_iterations: usize,
}

/// Controls for the boundary-value relaxations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxationConfig {
    pub dx: f64,
    /// First truncation length; doubled until the profile settles.
    pub initial_length: f64,
    pub max_length: f64,
    /// Max change at shared nodes between successive truncations.
    pub truncation_tol: f64,
    pub newton_tol: f64,
    pub max_newton: usize,
}

impl Default for RelaxationConfig {
    fn default() -> Self {
        Self {
            dx: 0.01,
            initial_length: 20.0,
            max_length: 1280.0,
            truncation_tol: 1e-8,
            newton_tol: 1e-11,
            max_newton: 100,
        }
    }
}

fn one_sided_slope(u0: f64, u1: f64, u2: f64, dx: f64) -> f64 {
    (-3.0 * u0 + 4.0 * u1 - u2) / (2.0 * dx)
}

fn logistic_residual(u: &[f64], a: f64, b: f64, d: f64, k: f64, dx: f64, out: &mut [f64]) -> f64 {
    let mut worst = 0.0f64;
    for i in 1..u.len() - 1 {
        let r = -d * (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (dx * dx) + k * (u[i + 1] - u[i - 1]) / (2.0 * dx)
            - u[i] * (a - b * u[i]);
        out[i - 1] = r;
        worst = worst.max(r.abs());
    }
    worst
}

/// Damped Newton for `-d U'' + k U' = aU - bU²`, `U(0) = 0`, `U(L) = a/b` on
/// a fixed grid, starting from `guess` (interior and end values included).
fn logistic_newton(a: f64, b: f64, d: f64, k: f64, dx: f64, mut u: Vec<f64>, config: &RelaxationConfig) -> Result<(Vec<f64>, f64, usize)> {
    let n = u.len();
    let m = n - 2;
    let mut res = vec![0.0; m];
    let mut norm = logistic_residual(&u, a, b, d, k, dx, &mut res);
    let (mut lower, mut diag, mut upper) = (vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    let off_lo = -d / (dx * dx) - k / (2.0 * dx);
    let off_hi = -d / (dx * dx) + k / (2.0 * dx);
    let scale = a * a / b;
    for it in 0..config.max_newton {
        if norm <= config.newton_tol * scale {
            return Ok((u, norm, it));
        }
        for i in 0..m {
            let ui = u[i + 1];
            lower[i] = off_lo;
            upper[i] = off_hi;
            diag[i] = 2.0 * d / (dx * dx) - a + 2.0 * b * ui;
        }
        let mut step = res.clone();
        solve_tridiagonal(&lower, &diag, &upper, &mut step);
        let mut damping = 1.0;
        loop {
            let mut trial = u.clone();
            for i in 0..m {
                trial[i + 1] -= damping * step[i];
            }
            let mut trial_res = vec![0.0; m];
            let trial_norm = logistic_residual(&trial, a, b, d, k, dx, &mut trial_res);
            if trial_norm < norm || damping < 1e-6 {
                u = trial;
                res = trial_res;
                norm = trial_norm;
                break;
            }
            damping *= 0.5;
        }
    }
    if norm <= config.newton_tol * scale {
        return Ok((u, norm, config.max_newton));
    }
    Err(WnvError::NonConvergence {
        what: "logistic semi-wavefront relaxation",
        iterations: config.max_newton,
        residual: norm,
    })
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(WnvError::InvalidParameter {
            name,
            reason: "must be positive".into(),
        })
    }
}

/// Minimal traveling-wave speed `2√(ad)` of `u_t = d u_xx + u(a - bu)`.
pub fn c_min_logistic(a: f64, d: f64) -> f64 {
    2.0 * (a * d).sqrt()
}

/// Solves `-d U'' + k U' = aU - bU²` on `[0, L]` with `U(0) = 0`,
/// `U(L) = a/b`, doubling `L` until the profile settles.
pub fn semi_wavefront_logistic(a: f64, b: f64, d: f64, k: f64, config: &RelaxationConfig) -> Result<ScalarProfile> {
    semi_wavefront_logistic_from(a, b, d, k, config, None)
}

fn semi_wavefront_logistic_from(
    a: f64,
    b: f64,
    d: f64,
    k: f64,
    config: &RelaxationConfig,
    warm: Option<&ScalarProfile>,
) -> Result<ScalarProfile> {
    positive("a", a)?;
    positive("b", b)?;
    positive("d", d)?;
    let c = c_min_logistic(a, d);
    if !(k > 0.0 && k < c) {
        return Err(WnvError::InvalidParameter {
            name: "k",
            reason: format!("must lie in (0, {c})"),
        });
    }
    let dx = config.dx;
    let top = a / b;
    let rate = (a / d).sqrt();
    let mut length = config.initial_length;
    let mut previous: Option<Vec<f64>> = None;
    let mut total_iterations = 0;
    loop {
        let n = (length / dx).round() as usize + 1;
        let guess: Vec<f64> = (0..n)
            .map(|i| {
                let x = i as f64 * dx;
                if x >= length {
                    return top;
                }
                match (&previous, warm) {
                    (Some(prev), _) if i < prev.len() => prev[i],
                    (_, Some(w)) if i < w.u.len() => w.u[i],
                    _ => top * (1.0 - (-rate * x).exp()),
                }
            })
            .collect();
        let mut guess = guess;
        guess[0] = 0.0;
        guess[n - 1] = top;
        let (u, residual, its) = logistic_newton(a, b, d, k, dx, guess, config)?;
        total_iterations += its;
        let settled = previous
            .as_ref()
            .map(|prev| prev.iter().zip(&u).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max) < config.truncation_tol)
            .unwrap_or(false);
        if settled {
            let slope = one_sided_slope(u[0], u[1], u[2], dx);
            return Ok(ScalarProfile {
                k,
                grid: (0..n).map(|i| i as f64 * dx).collect(),
                u,
                slope_at_origin: slope,
                residual,
                newton_iterations: total_iterations,
            });
        }
        if 2.0 * length > config.max_length {
            return Err(WnvError::NonConvergence {
                what: "semi-wavefront truncation length",
                iterations: total_iterations,
                residual,
            });
        }
        previous = Some(u);
        length *= 2.0;
    }
}

/// Free-boundary speed of the logistic problem: the root of
/// `μ U_k'(0) = k` on `(0, 2√(ad))`, by bisection.
pub fn k0_logistic(a: f64, b: f64, d: f64, mu: f64, config: &RelaxationConfig) -> Result<f64> {
    positive("mu", mu)?;
    let c = c_min_logistic(a, d);
    let mut profile_lo = None;
    let f = |k: f64, warm: Option<&ScalarProfile>| -> Result<(f64, ScalarProfile)> {
        let prof = semi_wavefront_logistic_from(a, b, d, k, config, warm)?;
        Ok((mu * prof.slope_at_origin - k, prof))
    };
    let mut lo = 1e-6 * c;
    let (f_lo, p_lo) = f(lo, None)?;
    if f_lo <= 0.0 {
        return Err(WnvError::BracketFailure("k0: mu U'(0) - k at the lower end"));
    }
    profile_lo.replace(p_lo);
    let mut hi = None;
    for m in 3..=30 {
        let k = c * (1.0 - 2f64.powi(-m));
        if let Ok((v, _)) = f(k, profile_lo.as_ref()) {
            if v < 0.0 {
                hi = Some(k);
                break;
            }
            lo = k;
        }
    }
    let mut hi = hi.ok_or(WnvError::BracketFailure("k0: mu U'(0) - k below c_min"))?;
    while hi - lo > 1e-10 * c {
        let mid = 0.5 * (lo + hi);
        let (v, prof) = f(mid, profile_lo.as_ref())?;
        if v > 0.0 {
            lo = mid;
            profile_lo = Some(prof);
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Two-species semi-wavefront on `[0, L]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemiWavefrontProfile {
    pub k0_candidate: f64,
    pub grid: Vec<f64>,
    pub v_profile: Vec<f64>,
    pub h_profile: Vec<f64>,
    /// Second-order one-sided `H'(0)`.
    pub boundary_slope: f64,
    pub residual: f64,
    pub newton_iterations: usize,
}

impl SemiWavefrontProfile {
    /// Both profiles non-decreasing up to `tol`.
    pub fn is_monotone(&self, tol: f64) -> bool {
        let mono = |v: &[f64]| v.windows(2).all(|w| w[1] >= w[0] - tol);
        mono(&self.v_profile) && mono(&self.h_profile)
    }
}

fn wnv_residual(p: &EpidemicParams, k: f64, dx: f64, u: &[[f64; 2]], out: &mut [[f64; 2]]) -> f64 {
    let mut worst = 0.0f64;
    let diff = [p.dv, p.dh];
    for i in 1..u.len() - 1 {
        let (f1, f2) = p.reaction(u[i][0], u[i][1]);
        let f = [f1, f2];
        for s in 0..2 {
            let r = -diff[s] * (u[i + 1][s] - 2.0 * u[i][s] + u[i - 1][s]) / (dx * dx)
                + k * (u[i + 1][s] - u[i - 1][s]) / (2.0 * dx)
                - f[s];
            out[i - 1][s] = r;
            worst = worst.max(r.abs());
        }
    }
    worst
}

fn wnv_newton(p: &EpidemicParams, k: f64, dx: f64, mut u: Vec<[f64; 2]>, config: &RelaxationConfig) -> Result<(Vec<[f64; 2]>, f64, usize)> {
    let n = u.len();
    let m = n - 2;
    let mut res = vec![[0.0; 2]; m];
    let mut norm = wnv_residual(p, k, dx, &u, &mut res);
    let scale = p.vector_gain() * p.n_h_star;
    let diff = [p.dv, p.dh];
    let lo_block: Block = [
        [-diff[0] / (dx * dx) - k / (2.0 * dx), 0.0],
        [0.0, -diff[1] / (dx * dx) - k / (2.0 * dx)],
    ];
    let hi_block: Block = [
        [-diff[0] / (dx * dx) + k / (2.0 * dx), 0.0],
        [0.0, -diff[1] / (dx * dx) + k / (2.0 * dx)],
    ];
    for it in 0..config.max_newton {
        if norm <= config.newton_tol * scale {
            return Ok((u, norm, it));
        }
        let diag: Vec<Block> = (0..m)
            .map(|i| {
                let j = p.reaction_jacobian(u[i + 1][0], u[i + 1][1]);
                [
                    [2.0 * diff[0] / (dx * dx) - j[0][0], -j[0][1]],
                    [-j[1][0], 2.0 * diff[1] / (dx * dx) - j[1][1]],
                ]
            })
            .collect();
        let fact = BlockTridiagonal::factor(vec![lo_block; m], &diag, &vec![hi_block; m]);
        let mut step = res.clone();
        fact.solve(&mut step);
        let mut damping = 1.0;
        loop {
            let mut trial = u.clone();
            for i in 0..m {
                trial[i + 1][0] -= damping * step[i][0];
                trial[i + 1][1] -= damping * step[i][1];
            }
            let mut trial_res = vec![[0.0; 2]; m];
            let trial_norm = wnv_residual(p, k, dx, &trial, &mut trial_res);
            if trial_norm < norm || damping < 1e-6 {
                u = trial;
                res = trial_res;
                norm = trial_norm;
                break;
            }
            damping *= 0.5;
        }
    }
    if norm <= config.newton_tol * scale {
        return Ok((u, norm, config.max_newton));
    }
    Err(WnvError::NonConvergence {
        what: "two-species semi-wavefront relaxation",
        iterations: config.max_newton,
        residual: norm,
    })
}

/// Solves `-D U'' + k U' = f(U)` for `U = (V_i, H_i)` with `U(0) = 0` and the
/// right end pinned to `(V_i*, H_i*)`. The grid step is reduced so that the
/// cell Péclet number `k dx / D_v` stays at most 1.
pub fn semi_wavefront_wnv(params: &EpidemicParams, k: f64, config: &RelaxationConfig) -> Result<SemiWavefrontProfile> {
    let speeds = c_min(params)?;
    if !(k > 0.0 && k < speeds.c_min) {
        return Err(WnvError::InvalidParameter {
            name: "k",
            reason: format!("must lie in (0, {})", speeds.c_min),
        });
    }
    let eq = params.endemic_equilibrium();
    let top = [eq.v_i_star, eq.h_i_star];
    let dx = config.dx.min(params.dv.min(params.dh) / k);
    let rate = (params.host_loss() / params.dh).sqrt().max(0.1);
    let mut length = config.initial_length;
    let mut previous: Option<Vec<[f64; 2]>> = None;
    let mut total = 0;
    loop {
        let n = (length / dx).round() as usize + 1;
        let mut guess: Vec<[f64; 2]> = (0..n)
            .map(|i| {
                let x = i as f64 * dx;
                match &previous {
                    Some(prev) if i < prev.len() => prev[i],
                    _ => {
                        let s = 1.0 - (-rate * x).exp();
                        [top[0] * s, top[1] * s]
                    }
                }
            })
            .collect();
        guess[0] = [0.0, 0.0];
        guess[n - 1] = top;
        let (u, residual, its) = wnv_newton(params, k, dx, guess, config)?;
        total += its;
        let settled = previous
            .as_ref()
            .map(|prev| {
                prev.iter()
                    .zip(&u)
                    .map(|(a, b)| (a[0] - b[0]).abs().max((a[1] - b[1]).abs()))
                    .fold(0.0, f64::max)
                    < config.truncation_tol
            })
            .unwrap_or(false);
        if settled {
            let slope = one_sided_slope(u[0][1], u[1][1], u[2][1], dx);
            return Ok(SemiWavefrontProfile {
                k0_candidate: k,
                grid: (0..n).map(|i| i as f64 * dx).collect(),
                v_profile: u.iter().map(|w| w[0]).collect(),
                h_profile: u.iter().map(|w| w[1]).collect(),
                boundary_slope: slope,
                residual,
                newton_iterations: total,
            });
        }
        if 2.0 * length > config.max_length {
            return Err(WnvError::NonConvergence {
                what: "semi-wavefront truncation length",
                iterations: total,
                residual,
            });
        }
        previous = Some(u);
        length *= 2.0;
    }
}

/// Speed selected by `μ D_h H'(0) = k` on `(0, c_min)`, by bisection.
/// This selection rule is an extension by analogy with the scalar problem.
pub fn k0_wnv(params: &EpidemicParams, config: &RelaxationConfig) -> Result<(f64, SemiWavefrontProfile)> {
    let c = c_min(params)?.c_min;
    let coef = params.mu * params.dh;
    let f = |k: f64| -> Result<f64> { Ok(coef * semi_wavefront_wnv(params, k, config)?.boundary_slope - k) };
    let mut lo = 1e-3 * c;
    if f(lo)? <= 0.0 {
        return Err(WnvError::BracketFailure("k0: mu D_h H'(0) - k at the lower end"));
    }
    let mut hi = None;
    for m in 2..=20 {
        let k = c * (1.0 - 2f64.powi(-m));
        if let Ok(v) = f(k) {
            if v < 0.0 {
                hi = Some(k);
                break;
            }
            lo = k;
        }
    }
    let mut hi = hi.ok_or(WnvError::BracketFailure("k0: mu D_h H'(0) - k below c_min"))?;
    while hi - lo > 1e-8 * c {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let k0 = 0.5 * (lo + hi);
    Ok((k0, semi_wavefront_wnv(params, k0, config)?))
}

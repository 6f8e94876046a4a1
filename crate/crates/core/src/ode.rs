//! Fixed-step RK4 integration of the homogeneous (non-spatial) systems.
//!
//! Steps that leave the invariant box by more than [`BOX_TOLERANCE`] are
//! retried with half the step; excursions below the tolerance are clamped.
//! A run stops early once the relative change per step stays below
//! [`STEADY_TOLERANCE`] for [`STEADY_STEPS`] consecutive steps.

use serde::{Deserialize, Serialize};

use crate::error::{Result, WnvError};
use crate::model::{EpidemicParams, ModelMode};

pub const BOX_TOLERANCE: f64 = 1e-9;
pub const STEADY_TOLERANCE: f64 = 1e-10;
pub const STEADY_STEPS: usize = 100;
const MAX_HALVINGS: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OdeState2 {
    pub v_i: f64,
    pub h_i: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OdeState4 {
    pub v_s: f64,
    pub v_i: f64,
    pub h_s: f64,
    pub h_i: f64,
}

/// Mosquito per-capita reproduction `G(V_s, V_i)` in the full model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GrowthMode {
    /// `G = r_v`.
    Constant,
    /// `G = r_v (1 - (V_s + V_i) / K_v)`.
    Logistic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    pub samples: Vec<(f64, S)>,
    /// Time at which the steady-state detector stopped the run, if it did.
    pub converged_at: Option<f64>,
}

impl<S: Copy> Trajectory<S> {
    pub fn last(&self) -> (f64, S) {
        *self.samples.last().expect("trajectory always holds the initial state")
    }
}

trait OdeSystem {
    type State: Copy;
    const DIM: usize;
    fn to_vec(s: &Self::State) -> [f64; 4];
    fn from_vec(v: &[f64; 4]) -> Self::State;
    fn rhs(&self, y: &[f64; 4]) -> [f64; 4];
    /// Largest excursion outside the invariant box; zero or negative when inside.
    fn excess(&self, y: &[f64; 4]) -> f64;
    fn clamp(&self, y: &mut [f64; 4]);
}

struct Simplified<'a>(&'a EpidemicParams);

impl OdeSystem for Simplified<'_> {
    type State = OdeState2;
    const DIM: usize = 2;

    fn to_vec(s: &OdeState2) -> [f64; 4] {
        [s.v_i, s.h_i, 0.0, 0.0]
    }
    fn from_vec(v: &[f64; 4]) -> OdeState2 {
        OdeState2 { v_i: v[0], h_i: v[1] }
    }
    fn rhs(&self, y: &[f64; 4]) -> [f64; 4] {
        let (f1, f2) = self.0.reaction(y[0], y[1]);
        [f1, f2, 0.0, 0.0]
    }
    fn excess(&self, y: &[f64; 4]) -> f64 {
        let p = self.0;
        (-y[0])
            .max(-y[1])
            .max(y[0] - p.n_v_star)
            .max(y[1] - p.n_h_star)
    }
    fn clamp(&self, y: &mut [f64; 4]) {
        y[0] = y[0].clamp(0.0, self.0.n_v_star);
        y[1] = y[1].clamp(0.0, self.0.n_h_star);
    }
}

struct Full<'a> {
    p: &'a EpidemicParams,
    growth: GrowthMode,
}

impl OdeSystem for Full<'_> {
    type State = OdeState4;
    const DIM: usize = 4;

    fn to_vec(s: &OdeState4) -> [f64; 4] {
        [s.v_s, s.v_i, s.h_s, s.h_i]
    }
    fn from_vec(v: &[f64; 4]) -> OdeState4 {
        OdeState4 {
            v_s: v[0],
            v_i: v[1],
            h_s: v[2],
            h_i: v[3],
        }
    }
    fn rhs(&self, y: &[f64; 4]) -> [f64; 4] {
        let p = self.p;
        let [vs, vi, hs, hi] = *y;
        let g = match self.growth {
            GrowthMode::Constant => p.r_v,
            GrowthMode::Logistic => p.r_v * (1.0 - (vs + vi) / p.k_v.unwrap_or(f64::INFINITY)),
        };
        let n_h = hs + hi;
        let (bite_v, bite_h) = if n_h > 0.0 {
            (p.beta_v * vs * hi / n_h, p.beta_h * vi * hs / n_h)
        } else {
            (0.0, 0.0)
        };
        [
            (vs + (1.0 - p.q) * vi) * g - bite_v - p.d_v * vs,
            p.q * vi * g + bite_v - p.d_v * vi,
            p.r_h * n_h - bite_h - p.d_h * hs + p.gamma_h * hi,
            bite_h - p.d_h * hi - p.gamma_h * hi,
        ]
    }
    fn excess(&self, y: &[f64; 4]) -> f64 {
        y.iter().fold(f64::NEG_INFINITY, |m, &c| m.max(-c))
    }
    fn clamp(&self, y: &mut [f64; 4]) {
        for c in y.iter_mut() {
            *c = c.max(0.0);
        }
    }
}

fn rk4_step<S: OdeSystem>(sys: &S, y: &[f64; 4], dt: f64) -> [f64; 4] {
    let axpy = |a: &[f64; 4], k: &[f64; 4], s: f64| {
        let mut out = *a;
        for i in 0..S::DIM {
            out[i] += s * k[i];
        }
        out
    };
    let k1 = sys.rhs(y);
    let k2 = sys.rhs(&axpy(y, &k1, dt / 2.0));
    let k3 = sys.rhs(&axpy(y, &k2, dt / 2.0));
    let k4 = sys.rhs(&axpy(y, &k3, dt));
    let mut out = *y;
    for i in 0..S::DIM {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

fn integrate<S: OdeSystem>(
    sys: &S,
    init: &S::State,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory<S::State>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(WnvError::InvalidInput(format!("dt must be positive, got {dt}")));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(WnvError::InvalidInput(format!("t_end must be non-negative, got {t_end}")));
    }
    let mut y = S::to_vec(init);
    if sys.excess(&y) > 0.0 {
        return Err(WnvError::InvalidInput(
            "initial state lies outside the invariant box".into(),
        ));
    }
    let mut t = 0.0;
    let mut samples = vec![(t, *init)];
    let mut quiet_steps = 0usize;
    let mut step_index = 0u64;

    while t < t_end {
        let target = (t_end).min(dt * (step_index + 1) as f64);
        let full = target - t;
        // Advance to `target`, subdividing when the box is violated.
        let mut sub = full;
        let mut halvings = 0u32;
        let mut local_t = t;
        let mut z = y;
        while local_t < target {
            let h = sub.min(target - local_t);
            let cand = rk4_step(sys, &z, h);
            let excess = sys.excess(&cand);
            if excess > BOX_TOLERANCE || cand.iter().any(|c| !c.is_finite()) {
                halvings += 1;
                if halvings > MAX_HALVINGS {
                    return Err(WnvError::BoxViolation { t: local_t, excess });
                }
                sub /= 2.0;
                continue;
            }
            z = cand;
            sys.clamp(&mut z);
            local_t = if h == target - local_t { target } else { local_t + h };
        }

        let mut change = 0.0f64;
        let mut scale = 0.0f64;
        for i in 0..S::DIM {
            change = change.max((z[i] - y[i]).abs());
            scale = scale.max(z[i].abs());
        }
        y = z;
        t = target;
        step_index += 1;
        samples.push((t, S::from_vec(&y)));

        let relative = if scale > 0.0 { change / scale } else { change };
        if relative < STEADY_TOLERANCE {
            quiet_steps += 1;
            if quiet_steps >= STEADY_STEPS && t < t_end {
                return Ok(Trajectory {
                    samples,
                    converged_at: Some(t),
                });
            }
        } else {
            quiet_steps = 0;
        }
    }
    Ok(Trajectory {
        samples,
        converged_at: None,
    })
}

/// Integrates the infected-compartment system from `init` to `t_end`.
pub fn integrate_ode2(
    params: &EpidemicParams,
    init: OdeState2,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory<OdeState2>> {
    params.validate(ModelMode::Simplified)?;
    integrate(&Simplified(params), &init, t_end, dt)
}

/// Integrates the four-compartment system from `init` to `t_end`.
pub fn integrate_ode4(
    params: &EpidemicParams,
    init: OdeState4,
    growth: GrowthMode,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory<OdeState4>> {
    params.validate(ModelMode::Full)?;
    if growth == GrowthMode::Logistic && params.k_v.is_none() {
        return Err(WnvError::InvalidParameter {
            name: "k_v",
            reason: "logistic recruitment requires a carrying capacity".into(),
        });
    }
    integrate(&Full { p: params, growth }, &init, t_end, dt)
}

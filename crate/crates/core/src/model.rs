//! Model parameters, the homogeneous reproduction number and the endemic
//! equilibrium of the two-compartment vector-host system.
//!
//! The simplified system tracks infected mosquitoes `V_i` and infected birds
//! `H_i` with constant totals `N_v*`, `N_h*`:
//!
//! ```text
//! f1(V, H) = beta_v (N_v* - V) H / N_h* - r_v (1 - q) V
//! f2(V, H) = beta_h V (N_h* - H) / N_h* - (d_h + gamma_h) H
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Result, WnvError};

/// Which system a parameter set is meant for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelMode {
    /// Four compartments `V_s, V_i, H_s, H_i`.
    Full,
    /// Infected compartments only; needs `r_v = d_v` and `r_h = d_h`.
    Simplified,
}

/// Biological and transport constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpidemicParams {
    /// Host to vector transmission rate.
    pub beta_v: f64,
    /// Vector to host transmission rate.
    pub beta_h: f64,
    /// Mosquito recruitment rate.
    pub r_v: f64,
    /// Mosquito death rate.
    pub d_v: f64,
    /// Bird recruitment rate.
    pub r_h: f64,
    /// Bird death rate.
    pub d_h: f64,
    /// Bird recovery rate.
    pub gamma_h: f64,
    /// Vertical transmission fraction, `0 <= q < 1`.
    pub q: f64,
    /// Total vector density `N_v*`.
    pub n_v_star: f64,
    /// Total host density `N_h*`.
    pub n_h_star: f64,
    /// Vector diffusivity.
    pub dv: f64,
    /// Host diffusivity.
    pub dh: f64,
    /// Front expansion coefficient.
    pub mu: f64,
    /// Mosquito carrying capacity for logistic recruitment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_v: Option<f64>,
}

fn check(cond: bool, name: &'static str, reason: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(WnvError::InvalidParameter {
            name,
            reason: reason.to_string(),
        })
    }
}

impl EpidemicParams {
    /// An endemic configuration: `R0 = sqrt(50)`, strongly spreading on `(-2, 2)`.
    pub fn endemic_example() -> Self {
        Self {
            beta_v: 0.5,
            beta_h: 0.5,
            r_v: 0.1,
            d_v: 0.1,
            r_h: 0.05,
            d_h: 0.05,
            gamma_h: 0.05,
            q: 0.0,
            n_v_star: 2.0,
            n_h_star: 1.0,
            dv: 0.01,
            dh: 1.0,
            mu: 1.0,
            k_v: None,
        }
    }

    /// A configuration with `R0 = 0.5`; the infection dies out everywhere.
    pub fn subcritical_example() -> Self {
        Self {
            beta_v: 0.1,
            beta_h: 0.1,
            r_v: 0.2,
            d_v: 0.2,
            r_h: 0.1,
            d_h: 0.1,
            gamma_h: 0.1,
            q: 0.0,
            n_v_star: 1.0,
            n_h_star: 1.0,
            dv: 0.01,
            dh: 1.0,
            mu: 1.0,
            k_v: None,
        }
    }

    pub fn validate(&self, mode: ModelMode) -> Result<()> {
        let finite = [
            ("beta_v", self.beta_v),
            ("beta_h", self.beta_h),
            ("r_v", self.r_v),
            ("d_v", self.d_v),
            ("r_h", self.r_h),
            ("d_h", self.d_h),
            ("gamma_h", self.gamma_h),
            ("q", self.q),
            ("n_v_star", self.n_v_star),
            ("n_h_star", self.n_h_star),
            ("dv", self.dv),
            ("dh", self.dh),
            ("mu", self.mu),
        ];
        for (name, value) in finite {
            check(value.is_finite(), name, "must be finite")?;
        }
        for (name, value) in &finite[..7] {
            check(*value >= 0.0, name, "rates must be non-negative")?;
        }
        check((0.0..1.0).contains(&self.q), "q", "must satisfy 0 <= q < 1")?;
        check(self.n_v_star > 0.0, "n_v_star", "must be positive")?;
        check(self.n_h_star > 0.0, "n_h_star", "must be positive")?;
        check(self.dv > 0.0, "dv", "must be positive")?;
        check(self.dh > 0.0, "dh", "must be positive")?;
        check(self.mu > 0.0, "mu", "must be positive")?;
        if let Some(k) = self.k_v {
            check(k.is_finite() && k > 0.0, "k_v", "must be positive")?;
        }
        if mode == ModelMode::Simplified {
            check(self.r_v == self.d_v, "d_v", "simplified model requires r_v = d_v")?;
            check(self.r_h == self.d_h, "d_h", "simplified model requires r_h = d_h")?;
            // R0 is only defined for positive transmission and losses.
            check(self.beta_v > 0.0, "beta_v", "must be positive in the simplified model")?;
            check(self.beta_h > 0.0, "beta_h", "must be positive in the simplified model")?;
            check(self.r_v > 0.0, "r_v", "must be positive in the simplified model")?;
            check(
                self.d_h + self.gamma_h > 0.0,
                "gamma_h",
                "d_h + gamma_h must be positive in the simplified model",
            )?;
        }
        Ok(())
    }

    /// Per-capita loss rate of infected vectors, `r_v (1 - q)`.
    pub fn vector_loss(&self) -> f64 {
        self.r_v * (1.0 - self.q)
    }

    /// Per-capita loss rate of infected hosts, `d_h + gamma_h`.
    pub fn host_loss(&self) -> f64 {
        self.d_h + self.gamma_h
    }

    /// Linear infection pressure on vectors from infected hosts, `beta_v N_v* / N_h*`.
    pub fn vector_gain(&self) -> f64 {
        self.beta_v * self.n_v_star / self.n_h_star
    }

    /// Reaction terms `(f1, f2)` of the simplified system.
    #[inline]
    pub fn reaction(&self, v: f64, h: f64) -> (f64, f64) {
        let f1 = self.beta_v * (self.n_v_star - v) * h / self.n_h_star - self.vector_loss() * v;
        let f2 = self.beta_h * v * (self.n_h_star - h) / self.n_h_star - self.host_loss() * h;
        (f1, f2)
    }

    /// Jacobian of `(f1, f2)` at `(v, h)`, row-major.
    pub fn reaction_jacobian(&self, v: f64, h: f64) -> [[f64; 2]; 2] {
        let nh = self.n_h_star;
        [
            [
                -self.beta_v * h / nh - self.vector_loss(),
                self.beta_v * (self.n_v_star - v) / nh,
            ],
            [
                self.beta_h * (nh - h) / nh,
                -self.beta_h * v / nh - self.host_loss(),
            ],
        ]
    }

    /// Basic reproduction number of the homogeneous system.
    pub fn r0(&self) -> f64 {
        (self.beta_v * self.beta_h * self.n_v_star
            / (self.vector_loss() * self.n_h_star * self.host_loss()))
        .sqrt()
    }

    /// R0 in the Neumann (no-flux) bounded setting. Constant coefficients make
    /// the principal eigenfunction constant, so it coincides with [`Self::r0`].
    pub fn r0_neumann(&self) -> f64 {
        self.r0()
    }

    pub fn endemic_equilibrium(&self) -> EndemicEquilibrium {
        if self.r0() <= 1.0 {
            return EndemicEquilibrium {
                v_i_star: 0.0,
                h_i_star: 0.0,
                exists: false,
            };
        }
        let num = self.beta_v * self.beta_h * self.n_v_star
            - self.vector_loss() * self.n_h_star * self.host_loss();
        let den = self.beta_v * self.beta_h + self.vector_loss() * self.beta_h;
        let v = num / den;
        let h = self.beta_h * v / (self.beta_h * v / self.n_h_star + self.host_loss());
        EndemicEquilibrium {
            v_i_star: v,
            h_i_star: h,
            exists: true,
        }
    }
}

/// Positive steady state of the homogeneous system, zero when `R0 <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndemicEquilibrium {
    pub v_i_star: f64,
    pub h_i_star: f64,
    pub exists: bool,
}

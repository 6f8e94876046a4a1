//! Reproduction-number thresholds on bounded and expanding domains.
//!
//! With constant coefficients the Dirichlet eigenfunction of `-Δ` on an
//! interval diagonalises the coupled principal eigenproblem, so `R0^D` and
//! the auxiliary constants `λ0`, `δ0` have closed forms. An independent
//! discrete check lives in [`crate::eigen_oracle`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, WnvError};
use crate::model::{EpidemicParams, ModelMode};

/// An open interval `(left, right)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainInterval {
    pub left: f64,
    pub right: f64,
}

impl DomainInterval {
    pub fn new(left: f64, right: f64) -> Result<Self> {
        if !(left.is_finite() && right.is_finite() && left < right) {
            return Err(WnvError::InvalidInput(format!(
                "interval requires left < right, got ({left}, {right})"
            )));
        }
        Ok(Self { left, right })
    }

    /// `(-h0, h0)`.
    pub fn symmetric(h0: f64) -> Result<Self> {
        Self::new(-h0, h0)
    }

    pub fn width(&self) -> f64 {
        self.right - self.left
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.left + self.right)
    }
}

/// Principal Dirichlet eigenvalue of `-d²/dx²`; depends only on the width.
pub fn lambda_star(omega: &DomainInterval) -> f64 {
    (PI / omega.width()).powi(2)
}

/// Closed-form principal eigen-data of the linearised Dirichlet problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenConstruction {
    pub omega: DomainInterval,
    pub lambda_star: f64,
    /// `A = D_v λ* + r_v (1 - q)`.
    pub a_const: f64,
    /// `B = D_h λ* + d_h + γ_h`.
    pub b_const: f64,
    pub r_star: f64,
    pub lambda0: f64,
    pub delta0: f64,
    pub r0d: f64,
}

impl EigenConstruction {
    /// Dirichlet eigenfunction `ψ*` of `-Δ` on the interval, normalised to 1 at the centre.
    pub fn psi(&self, x: f64) -> f64 {
        (PI * (x - self.omega.center()) / self.omega.width()).cos()
    }

    pub fn psi_prime(&self, x: f64) -> f64 {
        let k = PI / self.omega.width();
        -k * (k * (x - self.omega.center())).sin()
    }

    /// `φ = δ0 ψ*`.
    pub fn phi(&self, x: f64) -> f64 {
        self.delta0 * self.psi(x)
    }
}

pub fn r0_dirichlet(params: &EpidemicParams, omega: &DomainInterval) -> Result<EigenConstruction> {
    params.validate(ModelMode::Simplified)?;
    let lambda_star = lambda_star(omega);
    let a = params.dv * lambda_star + params.vector_loss();
    let b = params.dh * lambda_star + params.host_loss();
    let r_star = params.beta_v * params.beta_h * params.n_v_star / params.n_h_star / (a * b);
    // Smaller root of λ² - (A + B) λ + AB (1 - R*) = 0, written to avoid
    // cancellation when R* is close to 1.
    let disc = ((a - b) * (a - b) + 4.0 * a * b * r_star).sqrt();
    let lambda0 = 2.0 * a * b * (1.0 - r_star) / ((a + b) + disc);
    let delta0 = (b - lambda0) / params.beta_h;
    Ok(EigenConstruction {
        omega: *omega,
        lambda_star,
        a_const: a,
        b_const: b,
        r_star,
        lambda0,
        delta0,
        r0d: r_star.sqrt(),
    })
}

/// Spatial-temporal risk index on the current infected interval `(g, h)`.
pub fn r0_free(params: &EpidemicParams, g: f64, h: f64) -> Result<f64> {
    Ok(r0_dirichlet(params, &DomainInterval::new(g, h)?)?.r0d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMethod {
    ClosedForm,
    Oracle,
}

/// All thresholds for one parameter set and initial interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub r0: f64,
    pub r0n: f64,
    pub r0d: f64,
    /// `(t, R0^F(t))` along a front trajectory.
    pub r0f_at: Vec<(f64, f64)>,
    pub lambda_star: f64,
    pub lambda0: f64,
    pub delta0: f64,
    pub method: ThresholdMethod,
}

impl ThresholdReport {
    /// Closed-form report on `omega`, with `R0^F` evaluated along `fronts`
    /// given as `(t, g, h)`.
    pub fn closed_form(
        params: &EpidemicParams,
        omega: &DomainInterval,
        fronts: &[(f64, f64, f64)],
    ) -> Result<Self> {
        let eig = r0_dirichlet(params, omega)?;
        let r0f_at = fronts
            .iter()
            .map(|&(t, g, h)| r0_free(params, g, h).map(|r| (t, r)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            r0: params.r0(),
            r0n: params.r0_neumann(),
            r0d: eig.r0d,
            r0f_at,
            lambda_star: eig.lambda_star,
            lambda0: eig.lambda0,
            delta0: eig.delta0,
            method: ThresholdMethod::ClosedForm,
        })
    }
}

//! Discrete check of `R0^D`: the principal eigenvalue `μ1(R)` of the coupled
//! Dirichlet operator
//!
//! ```text
//! -D_v φ'' + r_v (1-q) φ - (β_v N_v*/(N_h* R)) ψ = μ φ
//! -D_h ψ'' + (d_h+γ_h) ψ - (β_h / R) φ          = μ ψ
//! ```
//!
//! is computed on a uniform grid by shifted inverse iteration, and `R0^D` is
//! recovered as the root of `μ1(R) = 0`. Nothing here uses the closed forms
//! in [`crate::thresholds`].
//!
//! The operator is a Z-matrix (non-positive off-diagonals), so `L - σI` is a
//! nonsingular M-matrix for every shift `σ` below `μ1`. Its inverse is
//! positive, iterates stay positive, and the Collatz–Wielandt ratios
//! `x_i / ((L - σI)^{-1} x)_i` bracket `μ1 - σ` at every iteration. The shift
//! starts below the Gershgorin bound and is raised to the running lower
//! bracket, which keeps the M-matrix property and speeds convergence.

use serde::{Deserialize, Serialize};

use crate::error::{Result, WnvError};
use crate::linalg::{Block, BlockTridiagonal};
use crate::model::{EpidemicParams, ModelMode};
use crate::thresholds::DomainInterval;

pub const MIN_GRID: usize = 64;
const MAX_ITERATIONS: usize = 10_000;
const MAX_BRACKET_STEPS: usize = 200;

/// Principal eigenvalue with a certified enclosure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrincipalEigen {
    pub mu1: f64,
    pub lower: f64,
    pub upper: f64,
    /// `(φ_j, ψ_j)` at interior nodes, max-normalised.
    pub eigenvector: Vec<[f64; 2]>,
    pub iterations: usize,
}

struct CoupledOperator {
    n_interior: usize,
    off: Block,
    diag: Block,
}

impl CoupledOperator {
    fn new(params: &EpidemicParams, omega: &DomainInterval, r: f64, grid_n: usize) -> Self {
        let dx = omega.width() / grid_n as f64;
        let kv = params.dv / (dx * dx);
        let kh = params.dh / (dx * dx);
        Self {
            n_interior: grid_n - 1,
            off: [[-kv, 0.0], [0.0, -kh]],
            diag: [
                [2.0 * kv + params.vector_loss(), -params.vector_gain() / r],
                [-params.beta_h / r, 2.0 * kh + params.host_loss()],
            ],
        }
    }

    /// Lower Gershgorin bound over all rows.
    fn gershgorin_lower(&self) -> f64 {
        let row0 = self.diag[0][0] - self.diag[0][1].abs() - 2.0 * self.off[0][0].abs();
        let row1 = self.diag[1][1] - self.diag[1][0].abs() - 2.0 * self.off[1][1].abs();
        row0.min(row1)
    }

    fn shifted(&self, sigma: f64) -> BlockTridiagonal {
        let n = self.n_interior;
        let mut diag = self.diag;
        diag[0][0] -= sigma;
        diag[1][1] -= sigma;
        BlockTridiagonal::factor(vec![self.off; n], &vec![diag; n], &vec![self.off; n])
    }
}

/// Runs inverse iteration until the enclosure of `μ1` is narrower than
/// `tol` or, when `stop_on_sign` is set, until the sign of `μ1` is certain.
fn iterate(
    op: &CoupledOperator,
    start: &mut Vec<[f64; 2]>,
    tol: f64,
    stop_on_sign: bool,
) -> Result<(f64, f64, usize)> {
    let n = op.n_interior;
    let scale = op.diag[0][0].abs().max(op.diag[1][1].abs()).max(1.0);
    let g = op.gershgorin_lower();
    let mut sigma = g - 1e-3 * (1.0 + g.abs());
    let mut factored = op.shifted(sigma);
    let mut x = std::mem::take(start);
    if x.len() != n || x.iter().any(|v| !(v[0] > 0.0 && v[1] > 0.0)) {
        x = (0..n)
            .map(|j| {
                let s = (std::f64::consts::PI * (j + 1) as f64 / (n + 1) as f64).sin();
                [s, s]
            })
            .collect();
    }
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    for it in 1..=MAX_ITERATIONS {
        let mut y = x.clone();
        factored.solve(&mut y);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut norm = 0.0f64;
        for (xi, yi) in x.iter().zip(&y) {
            for c in 0..2 {
                if !(yi[c] > 0.0) {
                    return Err(WnvError::NonConvergence {
                        what: "inverse iteration (lost positivity)",
                        iterations: it,
                        residual: yi[c],
                    });
                }
                let ratio = xi[c] / yi[c];
                lo = lo.min(ratio);
                hi = hi.max(ratio);
                norm = norm.max(yi[c]);
            }
        }
        lower = lower.max(sigma + lo);
        upper = upper.min(sigma + hi);
        for v in y.iter_mut() {
            v[0] /= norm;
            v[1] /= norm;
        }
        x = y;
        let width = upper - lower;
        let done = width <= tol * scale || (stop_on_sign && (lower > 0.0 || upper < 0.0));
        if done {
            *start = x;
            return Ok((lower, upper, it));
        }
        // Raise the shift towards μ1 while staying strictly below it.
        let candidate = lower - width.max(1e-14 * scale);
        if candidate > sigma {
            sigma = candidate;
            factored = op.shifted(sigma);
        }
    }
    Err(WnvError::NonConvergence {
        what: "inverse iteration",
        iterations: MAX_ITERATIONS,
        residual: upper - lower,
    })
}

fn check_inputs(params: &EpidemicParams, r: f64, grid_n: usize) -> Result<()> {
    params.validate(ModelMode::Simplified)?;
    if grid_n < MIN_GRID {
        return Err(WnvError::InvalidInput(format!(
            "grid_n must be at least {MIN_GRID}, got {grid_n}"
        )));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(WnvError::InvalidInput(format!("R must be positive, got {r}")));
    }
    Ok(())
}

/// Principal eigenvalue `μ1(R)` of the discretised coupled operator with
/// `grid_n` uniform intervals.
pub fn mu1_of_r(
    params: &EpidemicParams,
    omega: &DomainInterval,
    r: f64,
    grid_n: usize,
) -> Result<PrincipalEigen> {
    check_inputs(params, r, grid_n)?;
    let op = CoupledOperator::new(params, omega, r, grid_n);
    let mut x = Vec::new();
    let (lower, upper, iterations) = iterate(&op, &mut x, 1e-13, false)?;
    Ok(PrincipalEigen {
        mu1: 0.5 * (lower + upper),
        lower,
        upper,
        eigenvector: x,
        iterations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleEstimate {
    pub r0d: f64,
    /// Final bisection bracket `[lo, hi]` with `μ1(lo) < 0 < μ1(hi)`.
    pub bracket: (f64, f64),
    pub grid_n: usize,
}

/// `R0^D` as the root of `μ1(R)`, found by geometric bisection to relative
/// width `tol`. The bracket is located by doubling or halving from `R = 1`.
pub fn r0_dirichlet_oracle(
    params: &EpidemicParams,
    omega: &DomainInterval,
    grid_n: usize,
    tol: f64,
) -> Result<OracleEstimate> {
    check_inputs(params, 1.0, grid_n)?;
    if !(tol > 0.0) {
        return Err(WnvError::InvalidInput(format!("tol must be positive, got {tol}")));
    }
    let mut warm = Vec::new();
    // +1 when μ1(R) > 0, -1 when negative, 0 when indistinguishable from zero.
    let mut sign_at = |r: f64| -> Result<i8> {
        let op = CoupledOperator::new(params, omega, r, grid_n);
        let (lower, upper, _) = iterate(&op, &mut warm, 1e-14, true)?;
        Ok(if lower > 0.0 {
            1
        } else if upper < 0.0 {
            -1
        } else {
            0
        })
    };

    let (mut lo, mut hi) = match sign_at(1.0)? {
        0 => {
            return Ok(OracleEstimate {
                r0d: 1.0,
                bracket: (1.0, 1.0),
                grid_n,
            })
        }
        s if s > 0 => {
            let mut hi = 1.0;
            let mut lo = 0.5;
            let mut steps = 0;
            loop {
                match sign_at(lo)? {
                    s if s < 0 => break,
                    0 => return Ok(OracleEstimate { r0d: lo, bracket: (lo, lo), grid_n }),
                    _ => {
                        hi = lo;
                        lo *= 0.5;
                    }
                }
                steps += 1;
                if steps > MAX_BRACKET_STEPS {
                    return Err(WnvError::BracketFailure("mu1(R)"));
                }
            }
            (lo, hi)
        }
        _ => {
            let mut lo = 1.0;
            let mut hi = 2.0;
            let mut steps = 0;
            loop {
                match sign_at(hi)? {
                    s if s > 0 => break,
                    0 => return Ok(OracleEstimate { r0d: hi, bracket: (hi, hi), grid_n }),
                    _ => {
                        lo = hi;
                        hi *= 2.0;
                    }
                }
                steps += 1;
                if steps > MAX_BRACKET_STEPS {
                    return Err(WnvError::BracketFailure("mu1(R)"));
                }
            }
            (lo, hi)
        }
    };

    while hi / lo - 1.0 > tol {
        let mid = (lo * hi).sqrt();
        match sign_at(mid)? {
            s if s > 0 => hi = mid,
            s if s < 0 => lo = mid,
            _ => {
                lo = mid;
                hi = mid;
            }
        }
    }
    Ok(OracleEstimate {
        r0d: (lo * hi).sqrt(),
        bracket: (lo, hi),
        grid_n,
    })
}

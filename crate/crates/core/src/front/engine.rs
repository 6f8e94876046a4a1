//! Front-fixed stepping shared by the two-species and scalar solvers.
//!
//! With `x = g + ξ (h - g)` and `L = h - g`, each density obeys
//!
//! ```text
//! U_t = D/L² U_ξξ + (g' + ξ (h' - g'))/L U_ξ + f(U)
//! ```
//!
//! on the fixed interval `ξ ∈ [0, 1]` with `U = 0` at both ends. Fronts move
//! with `h' = -μ D_d ∂ₓU_d(h)`, `g' = -μ D_d ∂ₓU_d(g)` for the driving species
//! `d`. One step: fronts and reactions explicit, diffusion and grid-motion
//! advection implicit in a single tridiagonal solve per species. The implicit
//! matrix is kept an M-matrix with unit row sums (central differences, or
//! upwind where the cell Péclet number exceeds 2), so together with a
//! reaction step that maps the box into itself, every accepted step stays in
//! the invariant box.

use crate::linalg::solve_tridiagonal;

pub const MAX_SPECIES: usize = 2;

pub(crate) trait Kinetics {
    fn species(&self) -> usize;
    fn diffusivity(&self, k: usize) -> f64;
    /// Index of the species whose flux moves the fronts.
    fn driver(&self) -> usize;
    /// `μ D_d`.
    fn front_coefficient(&self) -> f64;
    fn react(&self, u: [f64; MAX_SPECIES]) -> [f64; MAX_SPECIES];
    /// Upper corner of the invariant box.
    fn upper(&self) -> [f64; MAX_SPECIES];
    /// Step bound making the explicit reaction map monotone and box-preserving.
    fn reaction_rate_bound(&self) -> f64;
}

/// Second-order one-sided ξ-derivatives at ξ = 0 and ξ = 1.
pub(crate) fn boundary_slopes(u: &[f64], dxi: f64) -> (f64, f64) {
    let n = u.len();
    let left = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * dxi);
    let right = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * dxi);
    (left, right)
}

/// `(g', h')` from the driving density.
pub(crate) fn front_velocities<K: Kinetics>(kin: &K, fields: &[Vec<f64>], width: f64, dxi: f64) -> (f64, f64) {
    let (sl, sr) = boundary_slopes(&fields[kin.driver()], dxi);
    let c = kin.front_coefficient();
    // The fronts cannot recede; a wrong-signed one-sided slope is rounding noise.
    let gdot = (-c * sl / width).min(0.0);
    let hdot = (-c * sr / width).max(0.0);
    (gdot, hdot)
}

pub(crate) struct Accepted {
    pub fields: Vec<Vec<f64>>,
    pub g: f64,
    pub h: f64,
    /// Largest excursion outside the box before clamping.
    pub excess: f64,
}

pub(crate) struct Rejected {
    pub excess: f64,
}

pub(crate) fn stable_dt<K: Kinetics>(
    kin: &K,
    fields: &[Vec<f64>],
    g: f64,
    h: f64,
    dxi: f64,
    cfl_safety: f64,
    dt_cap: f64,
) -> f64 {
    let width = h - g;
    let (gd, hd) = front_velocities(kin, fields, width, dxi);
    let speed = gd.abs().max(hd.abs());
    let mut dt = dt_cap;
    if speed > 0.0 {
        dt = dt.min(cfl_safety * dxi * width / speed);
    }
    let rate = kin.reaction_rate_bound();
    if rate > 0.0 {
        dt = dt.min(cfl_safety / rate);
    }
    dt
}

pub(crate) fn advance<K: Kinetics>(
    kin: &K,
    xi: &[f64],
    fields: &[Vec<f64>],
    g: f64,
    h: f64,
    dt: f64,
) -> Result<Accepted, Rejected> {
    let n = xi.len();
    let dxi = xi[1] - xi[0];
    let width = h - g;
    let (gd, hd) = front_velocities(kin, fields, width, dxi);
    let g1 = g + dt * gd;
    let h1 = h + dt * hd;
    let width1 = h1 - g1;
    let m = n - 2;
    let species = kin.species();

    // Explicit reactions at interior nodes.
    let mut rhs: Vec<Vec<f64>> = vec![vec![0.0; m]; species];
    for j in 1..n - 1 {
        let mut u = [0.0; MAX_SPECIES];
        for k in 0..species {
            u[k] = fields[k][j];
        }
        let f = kin.react(u);
        for k in 0..species {
            rhs[k][j - 1] = u[k] + dt * f[k];
        }
    }

    let mut lower = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut upper = vec![0.0; m];
    let box_upper = kin.upper();
    let mut excess = 0.0f64;
    let mut out = Vec::with_capacity(species);
    for (k, mut sol) in rhs.into_iter().enumerate() {
        let nu = kin.diffusivity(k) / (width1 * width1);
        let diff = dt * nu / (dxi * dxi);
        for (j, &x) in xi.iter().enumerate().take(n - 1).skip(1) {
            let a = (gd + x * (hd - gd)) / width1;
            let i = j - 1;
            if a.abs() * dxi <= 2.0 * nu {
                let adv = dt * a / (2.0 * dxi);
                lower[i] = -(diff - adv);
                upper[i] = -(diff + adv);
                diag[i] = 1.0 + 2.0 * diff;
            } else {
                let adv = dt * a.abs() / dxi;
                if a > 0.0 {
                    lower[i] = -diff;
                    upper[i] = -(diff + adv);
                } else {
                    lower[i] = -(diff + adv);
                    upper[i] = -diff;
                }
                diag[i] = 1.0 + 2.0 * diff + adv;
            }
        }
        solve_tridiagonal(&lower, &diag, &upper, &mut sol);
        let mut full = Vec::with_capacity(n);
        full.push(0.0);
        for v in sol {
            if !v.is_finite() {
                return Err(Rejected { excess: f64::INFINITY });
            }
            excess = excess.max(-v).max(v - box_upper[k]);
            full.push(v);
        }
        full.push(0.0);
        out.push(full);
    }
    if excess > crate::ode::BOX_TOLERANCE {
        return Err(Rejected { excess });
    }
    for (k, field) in out.iter_mut().enumerate() {
        for v in field.iter_mut() {
            *v = v.clamp(0.0, box_upper[k]);
        }
    }
    Ok(Accepted {
        fields: out,
        g: g1,
        h: h1,
        excess,
    })
}

/// Trapezoidal integral over `[g, h]` of a field sampled on the uniform ξ grid.
pub(crate) fn integrate(field: &[f64], dxi: f64, width: f64) -> f64 {
    let n = field.len();
    let inner: f64 = field[1..n - 1].iter().sum();
    (inner + 0.5 * (field[0] + field[n - 1])) * dxi * width
}

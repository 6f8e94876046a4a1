//! Banded solvers used by the implicit diffusion step, the eigen-oracle and
//! the boundary-value relaxations. No pivoting: every caller assembles
//! diagonally dominant or M-matrix systems.

pub type Block = [[f64; 2]; 2];

/// Solves `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]` in place
/// of `rhs`. `lower[0]` and `upper[n-1]` are ignored.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    debug_assert!(lower.len() == n && upper.len() == n && rhs.len() == n);
    if n == 0 {
        return;
    }
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    c[0] = upper[0] / beta;
    rhs[0] /= beta;
    for i in 1..n {
        beta = diag[i] - lower[i] * c[i - 1];
        c[i] = upper[i] / beta;
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
}

#[inline]
fn mat_mul(a: &Block, b: &Block) -> Block {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

#[inline]
fn mat_vec(a: &Block, x: [f64; 2]) -> [f64; 2] {
    [
        a[0][0] * x[0] + a[0][1] * x[1],
        a[1][0] * x[0] + a[1][1] * x[1],
    ]
}

#[inline]
fn mat_sub(a: &Block, b: &Block) -> Block {
    [
        [a[0][0] - b[0][0], a[0][1] - b[0][1]],
        [a[1][0] - b[1][0], a[1][1] - b[1][1]],
    ]
}

#[inline]
fn inverse(a: &Block) -> Block {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    [
        [a[1][1] / det, -a[0][1] / det],
        [-a[1][0] / det, a[0][0] / det],
    ]
}

/// Factored block-tridiagonal matrix with 2x2 blocks, reusable across
/// right-hand sides (block Thomas algorithm).
#[derive(Debug, Clone)]
pub struct BlockTridiagonal {
    lower: Vec<Block>,
    /// Inverses of the eliminated diagonal blocks.
    pivot_inv: Vec<Block>,
    /// `pivot_inv[i] * upper[i]`.
    gain: Vec<Block>,
}

impl BlockTridiagonal {
    pub fn factor(lower: Vec<Block>, diag: &[Block], upper: &[Block]) -> Self {
        let n = diag.len();
        debug_assert!(lower.len() == n && upper.len() == n);
        let mut pivot_inv = Vec::with_capacity(n);
        let mut gain = Vec::with_capacity(n);
        for i in 0..n {
            let pivot = if i == 0 {
                diag[0]
            } else {
                mat_sub(&diag[i], &mat_mul(&lower[i], &gain[i - 1]))
            };
            let inv = inverse(&pivot);
            gain.push(mat_mul(&inv, &upper[i]));
            pivot_inv.push(inv);
        }
        Self {
            lower,
            pivot_inv,
            gain,
        }
    }

    pub fn len(&self) -> usize {
        self.pivot_inv.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pivot_inv.is_empty()
    }

    pub fn solve(&self, rhs: &mut [[f64; 2]]) {
        let n = self.len();
        debug_assert_eq!(rhs.len(), n);
        for i in 0..n {
            let mut r = rhs[i];
            if i > 0 {
                let l = mat_vec(&self.lower[i], rhs[i - 1]);
                r = [r[0] - l[0], r[1] - l[1]];
            }
            rhs[i] = mat_vec(&self.pivot_inv[i], r);
        }
        for i in (0..n.saturating_sub(1)).rev() {
            let c = mat_vec(&self.gain[i], rhs[i + 1]);
            rhs[i] = [rhs[i][0] - c[0], rhs[i][1] - c[1]];
        }
    }
}

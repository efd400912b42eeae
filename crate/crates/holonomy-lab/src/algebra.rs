//! SU(2) and su(2) primitives shared by all other modules.
//!
//! Group elements are stored as the complex pair `(a, b)` of the first row of
//! `((a, b), (-b̄, ā))`; the unit-norm constraint `|a|² + |b|² = 1` is then the
//! single invariant and `det = 1` follows. Full 2×2 matrices appear only at
//! API edges (conjugation, the τ generators).

use num_complex::Complex64;
use thiserror::Error;

/// Tolerance for the norm invariant at construction.
pub const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum AlgebraError {
    #[error("not an SU(2) element: |a|^2 + |b|^2 deviates from 1 by {0:e}")]
    NotUnitary(f64),
}

/// A 2×2 complex matrix in row-major order.
pub type Mat2 = [[Complex64; 2]; 2];

/// SU(2) element stored as the pair (a, b) of the first matrix row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Su2 {
    pub a: Complex64,
    pub b: Complex64,
}

impl Su2 {
    pub fn identity() -> Self {
        Su2 {
            a: Complex64::new(1.0, 0.0),
            b: Complex64::new(0.0, 0.0),
        }
    }

    /// Construct, enforcing the norm invariant within [`NORM_TOL`].
    pub fn new(a: Complex64, b: Complex64) -> Result<Self, AlgebraError> {
        let g = Su2 { a, b };
        let drift = g.unitarity_drift();
        if drift > NORM_TOL {
            return Err(AlgebraError::NotUnitary(drift));
        }
        Ok(g)
    }

    /// Construct without checking the invariant.
    pub fn new_unchecked(a: Complex64, b: Complex64) -> Self {
        Su2 { a, b }
    }

    pub fn norm_sq(&self) -> f64 {
        self.a.norm_sqr() + self.b.norm_sqr()
    }

    /// `| |a|² + |b|² − 1 |`.
    pub fn unitarity_drift(&self) -> f64 {
        (self.norm_sq() - 1.0).abs()
    }

    /// Project back onto the unit sphere in ℂ².
    pub fn renormalize(&self) -> Self {
        let s = 1.0 / self.norm_sq().sqrt();
        Su2 {
            a: self.a * s,
            b: self.b * s,
        }
    }

    pub fn inverse(&self) -> Self {
        Su2 {
            a: self.a.conj(),
            b: -self.b,
        }
    }

    pub fn to_matrix(&self) -> Mat2 {
        [[self.a, self.b], [-self.b.conj(), self.a.conj()]]
    }
}

/// Group law in (a, b) coordinates.
pub fn su2_mul(g: &Su2, h: &Su2) -> Su2 {
    Su2 {
        a: g.a * h.a - g.b * h.b.conj(),
        b: g.a * h.b + g.b * h.a.conj(),
    }
}

/// Frobenius distance between the full 2×2 matrices.
pub fn su2_distance(g: &Su2, h: &Su2) -> f64 {
    let da = g.a - h.a;
    let db = g.b - h.b;
    (2.0 * (da.norm_sqr() + db.norm_sqr())).sqrt()
}

/// h · X · h⁻¹ for h ∈ SU(2) and an arbitrary 2×2 complex matrix X.
pub fn su2_conjugate(h: &Su2, x: &Mat2) -> Mat2 {
    let hm = h.to_matrix();
    let hinv = h.inverse().to_matrix();
    mat_mul(&mat_mul(&hm, x), &hinv)
}

pub fn mat_mul(x: &Mat2, y: &Mat2) -> Mat2 {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
        }
    }
    out
}

pub fn mat_sub(x: &Mat2, y: &Mat2) -> Mat2 {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = x[i][j] - y[i][j];
        }
    }
    out
}

pub fn mat_trace(x: &Mat2) -> Complex64 {
    x[0][0] + x[1][1]
}

pub fn mat_det(x: &Mat2) -> Complex64 {
    x[0][0] * x[1][1] - x[0][1] * x[1][0]
}

pub fn mat_frobenius(x: &Mat2) -> f64 {
    x.iter()
        .flatten()
        .map(|z| z.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// τ₁ = ((0, −i), (−i, 0)).
pub fn tau1() -> Mat2 {
    let i = Complex64::i();
    let z = Complex64::new(0.0, 0.0);
    [[z, -i], [-i, z]]
}

/// τ₂ = ((0, −1), (1, 0)).
pub fn tau2() -> Mat2 {
    let one = Complex64::new(1.0, 0.0);
    let z = Complex64::new(0.0, 0.0);
    [[z, -one], [one, z]]
}

/// τ₃ = ((−i, 0), (0, i)).
pub fn tau3() -> Mat2 {
    let i = Complex64::i();
    let z = Complex64::new(0.0, 0.0);
    [[-i, z], [z, i]]
}

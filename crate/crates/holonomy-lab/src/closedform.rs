//! Closed-form transport solutions for constant-coefficient curves
//! (m(t) = m₀e^{iλt}, n(t) ≡ n₀), plus the derived objects built on them:
//! the frequency Δ, the scale profile f and its envelope φ, the lattice of
//! scales where b vanishes, and the decomposition of the solution into a
//! periodic part plus a decaying remainder.

use num_complex::Complex64;
use thiserror::Error;

use crate::algebra::Su2;
use crate::curve::SpiralParams;

#[derive(Debug, Error)]
pub enum ClosedFormError {
    #[error("scale must be positive (got {0})")]
    NonPositiveC(f64),
    #[error("lambda = 0 degenerates to the line case with no isolated lattice")]
    DegenerateLine,
}

/// sinc x = sin(x)/x with a Taylor guard at the removable singularity
/// (avoids cancellation near the lattice vertex c = ϰ/2 when |ϰ| = |λ|).
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Δ(c) = √(λ²/4 + c(c − ϰ)) = √((c − ϰ/2)² + (λ² − ϰ²)/4);
/// real for all c since |ϰ| ≤ |λ|.
pub fn delta(c: f64, p: &SpiralParams) -> f64 {
    (0.25 * p.lambda * p.lambda + c * (c - p.varkappa)).max(0.0).sqrt()
}

/// Transport along a line (λ = 0): a = cos ct + i·n₀ sin ct, b = i·m₀ sin ct.
/// Periodic in c with period 2π/t for t ≠ 0.
pub fn line_solution(m0: Complex64, n0: f64, c: f64, t: f64) -> Su2 {
    let (s, co) = (c * t).sin_cos();
    Su2::new_unchecked(
        Complex64::new(co, n0 * s),
        Complex64::new(0.0, s) * m0,
    )
}

/// Transport for constant coefficients:
/// a = e^{iλt/2}(cos Δt + i(c·n₀ − λ/2)·t·sinc Δt),
/// b = e^{iλt/2}·i·c·m₀·t·sinc Δt,
/// with λ the phase rate of m (M = iλ) and the sign convention fixed by
/// validation against the integrator ([`crate::curve::fit_varkappa`]).
/// The removable singularity at Δ = 0 is handled through sinc.
pub fn spiral_solution(p: &SpiralParams, c: f64, t: f64) -> Su2 {
    let d = delta(c, p);
    let phase = Complex64::from_polar(1.0, 0.5 * p.lambda * t);
    let ts = t * sinc(d * t);
    let a = phase * Complex64::new((d * t).cos(), (c * p.n0 - 0.5 * p.lambda) * ts);
    let b = phase * Complex64::new(0.0, c * ts) * p.m0;
    Su2::new_unchecked(a, b)
}

/// f(c) = (c/Δ)·sin(Δt) = c·t·sinc(Δt), the scale profile of |b| up to the
/// factor |m₀|; f(ϰ/2) = c·t at the lattice vertex.
pub fn f_function(c: f64, p: &SpiralParams, t: f64) -> f64 {
    c * t * sinc(delta(c, p) * t)
}

/// Envelope φ(c) = c/Δ(c) of |f(c, ·)|, strictly increasing to 1 on c > 0.
pub fn envelope_phi(c: f64, p: &SpiralParams) -> Result<f64, ClosedFormError> {
    if c <= 0.0 {
        return Err(ClosedFormError::NonPositiveC(c));
    }
    Ok(c / delta(c, p))
}

/// Scales where sin(Δ(c)t) = 0: for each integer k ≥ k₀,
/// c₊ₖ, c₋ₖ = ϰ/2 ± √(π²k²/t² − (λ² − ϰ²)/4), with
/// k₀ = ⌈(t/2π)√(λ² − ϰ²)⌉ the smallest index with a real root.
#[derive(Debug, Clone)]
pub struct ZeroLattice {
    pub lambda: f64,
    pub varkappa: f64,
    pub t: f64,
    pub k0: u64,
    /// (k, c₋ₖ, c₊ₖ) for k₀ ≤ k ≤ k_max.
    pub zeros: Vec<(u64, f64, f64)>,
}

pub fn zero_lattice(p: &SpiralParams, t: f64, k_max: u64) -> Result<ZeroLattice, ClosedFormError> {
    if p.lambda == 0.0 {
        return Err(ClosedFormError::DegenerateLine);
    }
    assert!(t > 0.0, "zero lattice needs t > 0");
    let gap2 = 0.25 * (p.lambda * p.lambda - p.varkappa * p.varkappa);
    let k0 = ((t / std::f64::consts::TAU)
        * (p.lambda * p.lambda - p.varkappa * p.varkappa).max(0.0).sqrt())
    .ceil()
    .max(1.0) as u64;
    let mut zeros = Vec::new();
    for k in k0..=k_max.max(k0) {
        let rad = ((std::f64::consts::PI * k as f64 / t).powi(2) - gap2).max(0.0);
        let root = rad.sqrt();
        zeros.push((k, 0.5 * p.varkappa - root, 0.5 * p.varkappa + root));
    }
    Ok(ZeroLattice {
        lambda: p.lambda,
        varkappa: p.varkappa,
        t,
        k0,
        zeros,
    })
}

/// Closed-form samples over a c-grid split into an exactly periodic part and
/// a remainder that dies off at large c.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub c_grid: Vec<f64>,
    pub periodic: Vec<Su2>,
    pub residual: Vec<(Complex64, Complex64)>,
    /// sup of the residual norm over the top decade of the grid.
    pub residual_sup_tail: f64,
}

/// The periodic part at a single scale: Δ(c) replaced by its large-c
/// linearization c − ϰ/2 and the amplitude factor c/Δ by 1, which keeps the
/// result exactly unit norm and exactly 2π/t-periodic in c.
pub fn periodic_part(p: &SpiralParams, c: f64, t: f64) -> Su2 {
    let d_hat = c - 0.5 * p.varkappa;
    let phase = Complex64::from_polar(1.0, 0.5 * p.lambda * t);
    let (s, co) = (d_hat * t).sin_cos();
    Su2::new_unchecked(
        phase * Complex64::new(co, p.n0 * s),
        phase * Complex64::new(0.0, s) * p.m0,
    )
}

/// Decompose the closed-form solution over `c_grid` as periodic + residual.
/// λ = 0 is allowed (the solution is already periodic; residual ≡ 0).
pub fn ap_plus_decay_decompose(
    p: &SpiralParams,
    t: f64,
    c_grid: &[f64],
) -> Decomposition {
    let mut periodic = Vec::with_capacity(c_grid.len());
    let mut residual = Vec::with_capacity(c_grid.len());
    for &c in c_grid {
        let full = spiral_solution(p, c, t);
        let per = periodic_part(p, c, t);
        residual.push((full.a - per.a, full.b - per.b));
        periodic.push(per);
    }
    let c_max = c_grid.iter().cloned().fold(0.0f64, f64::max);
    let residual_sup_tail = c_grid
        .iter()
        .zip(&residual)
        .filter(|(&c, _)| c >= 0.1 * c_max)
        .map(|(_, (ra, rb))| (ra.norm_sqr() + rb.norm_sqr()).sqrt())
        .fold(0.0f64, f64::max);
    Decomposition {
        c_grid: c_grid.to_vec(),
        periodic,
        residual,
        residual_sup_tail,
    }
}

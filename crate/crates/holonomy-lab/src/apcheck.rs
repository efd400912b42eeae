//! Numerical almost-periodicity analysis of sampled functions of the scale
//! c: Bohr ε-almost-period search, the non-AP witness criterion
//! (sup_J|f| − sup_I|f| ≥ ε for all late windows J), limit-constancy
//! diagnostics, and the diagonal-restriction utility for anisotropic scans.
//!
//! All verdicts are range-qualified evidence, never proofs: sampling cannot
//! decide a definition that quantifies over all of ℝ. Every verdict carries
//! the tested range and grid spacing.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ApError {
    #[error("grid too coarse for epsilon {epsilon:e}: max sample-to-sample change {max_delta:e}")]
    GridTooCoarse { epsilon: f64, max_delta: f64 },
    #[error("sampled range {range:.3} shorter than 20 window lengths ({window_len:.3})")]
    RangeTooShort { range: f64, window_len: f64 },
}

/// Uniformly sampled function of c.
#[derive(Debug, Clone)]
pub struct SampledFunction {
    pub c0: f64,
    pub spacing: f64,
    pub values: Vec<Complex64>,
    pub source: String,
}

impl SampledFunction {
    pub fn new(c0: f64, spacing: f64, values: Vec<Complex64>, source: impl Into<String>) -> Self {
        assert!(spacing > 0.0 && values.len() >= 2);
        assert!(
            values.iter().all(|v| v.re.is_finite() && v.im.is_finite()),
            "samples must be finite"
        );
        SampledFunction {
            c0,
            spacing,
            values,
            source: source.into(),
        }
    }

    pub fn from_fn(
        f: impl Fn(f64) -> Complex64,
        c0: f64,
        spacing: f64,
        count: usize,
        source: impl Into<String>,
    ) -> Self {
        let values = (0..count).map(|k| f(c0 + spacing * k as f64)).collect();
        SampledFunction::new(c0, spacing, values, source)
    }

    pub fn c_at(&self, idx: usize) -> f64 {
        self.c0 + self.spacing * idx as f64
    }

    pub fn range(&self) -> [f64; 2] {
        [self.c0, self.c_at(self.values.len() - 1)]
    }

    fn sup_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0f64, f64::max)
    }

    fn max_consecutive_delta(&self) -> f64 {
        self.values
            .windows(2)
            .map(|w| (w[1] - w[0]).norm())
            .fold(0.0f64, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    ApEvidence,
    NotApWitness,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind")]
pub enum Witness {
    /// Qualifying shifts: every length-L window of shift space contains one.
    AlmostPeriods {
        almost_periods: Vec<f64>,
        epsilon: f64,
        l_window: f64,
    },
    /// Low window I whose sup is undercut by at least ε on every window
    /// beyond r.
    Gap { interval: [f64; 2], r: f64, epsilon: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct APVerdict {
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    pub range: [f64; 2],
    pub grid_spacing: f64,
    pub source: String,
}

/// Bohr almost-period search: scan shifts ξ on the grid, qualifying when
/// sup_x|f(x+ξ) − f(x)| ≤ ε over the overlap. Returns AP evidence when every
/// length-L window of shift space contains a qualifying ξ; otherwise
/// Inconclusive (absence of found periods is not proof of non-AP).
pub fn find_almost_periods(
    f: &SampledFunction,
    epsilon: f64,
    l_window: f64,
) -> Result<APVerdict, ApError> {
    assert!(epsilon > 0.0, "epsilon must be positive");
    assert!(
        l_window >= 10.0 * f.spacing,
        "L must be at least 10 grid spacings"
    );
    let n = f.values.len();
    let max_shift_idx = n / 2;
    let mut qualifying: Vec<(usize, f64)> = Vec::new();
    for j in 1..=max_shift_idx {
        let mut d = 0.0f64;
        for i in 0..(n - j) {
            d = d.max((f.values[i + j] - f.values[i]).norm());
            if d > epsilon {
                break;
            }
        }
        if d <= epsilon {
            qualifying.push((j, d));
        }
    }

    // Evidence requires qualifying shifts to be L-dense over shift space.
    let shift_max = max_shift_idx as f64 * f.spacing;
    let dense = !qualifying.is_empty() && {
        let mut prev = 0.0;
        let mut ok = true;
        for &(j, _) in &qualifying {
            let xi = j as f64 * f.spacing;
            if xi - prev > l_window {
                ok = false;
                break;
            }
            prev = xi;
        }
        ok && shift_max - prev <= l_window
    };

    if dense {
        // Thin the report to local minima of the discrepancy among
        // qualifying shifts (the distinguished near-periods).
        let minima: Vec<f64> = qualifying
            .iter()
            .enumerate()
            .filter(|(idx, (j, d))| {
                let left_ok = match idx.checked_sub(1).and_then(|i| qualifying.get(i)) {
                    Some((jl, dl)) => *jl != j - 1 || d <= dl,
                    None => true,
                };
                let right_ok = match qualifying.get(idx + 1) {
                    Some((jr, dr)) => *jr != j + 1 || d <= dr,
                    None => true,
                };
                left_ok && right_ok
            })
            .map(|(_, (j, _))| *j as f64 * f.spacing)
            .collect();
        return Ok(APVerdict {
            verdict: Verdict::ApEvidence,
            witness: Some(Witness::AlmostPeriods {
                almost_periods: minima,
                epsilon,
                l_window,
            }),
            range: f.range(),
            grid_spacing: f.spacing,
            source: f.source.clone(),
        });
    }

    // No evidence: if the sampling is too coarse to resolve ε-level
    // structure, refuse to answer rather than report Inconclusive.
    let max_delta = f.max_consecutive_delta();
    if qualifying.is_empty() && max_delta > epsilon / 10.0 {
        return Err(ApError::GridTooCoarse {
            epsilon,
            max_delta,
        });
    }
    Ok(APVerdict {
        verdict: Verdict::Inconclusive,
        witness: None,
        range: f.range(),
        grid_spacing: f.spacing,
        source: f.source.clone(),
    })
}

/// Sliding-window sup of |values| with window of `w` samples, via a
/// monotonic deque; result[j] = max over [j, j + w).
fn window_sups(abs: &[f64], w: usize) -> Vec<f64> {
    let n = abs.len();
    assert!(w >= 1 && w <= n);
    let mut out = Vec::with_capacity(n - w + 1);
    let mut deque: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
    for i in 0..n {
        while let Some(&back) = deque.back() {
            if abs[back] <= abs[i] {
                deque.pop_back();
            } else {
                break;
            }
        }
        deque.push_back(i);
        if i + 1 >= w {
            let j = i + 1 - w;
            while *deque.front().unwrap() < j {
                deque.pop_front();
            }
            out.push(abs[*deque.front().unwrap()]);
            // keep front for next iteration
        }
    }
    out
}

const MIN_LATE_WINDOWS: usize = 200;

/// Non-almost-periodicity witness search: find a window I near the low end
/// and a threshold r such that sup_J|f| − sup_I|f| ≥ ε for every window J of
/// the same length with inf J > r, with at least 200 such windows tested.
/// The reported ε is 95% of the measured gap so the witness survives
/// re-evaluation on finer grids.
pub fn non_ap_witness(f: &SampledFunction, window_len: f64) -> Result<APVerdict, ApError> {
    let range = f.range()[1] - f.range()[0];
    if range < 20.0 * window_len {
        return Err(ApError::RangeTooShort {
            range,
            window_len,
        });
    }
    let abs: Vec<f64> = f.values.iter().map(|v| v.norm()).collect();
    let w = ((window_len / f.spacing).round() as usize).max(2).min(abs.len());
    let sups = window_sups(&abs, w);
    let n_anchor = sups.len();

    // I: the first window at the low end of the range (mirrors the
    // construction in the analytic criterion, where I is the first arch).
    let i_idx = 0;
    let sup_i = sups[0];

    // Suffix minima: t[j] = min over anchors k ≥ j of sups[k].
    let mut suffix_min = sups.clone();
    for j in (0..n_anchor - 1).rev() {
        suffix_min[j] = suffix_min[j].min(suffix_min[j + 1]);
    }

    // Pick r so the tested windows cover the last 10% of the range (at
    // least MIN_LATE_WINDOWS of them): long enough to be representative —
    // a shorter tail could sit between low windows of an AP function and
    // fake a gap.
    let late = (n_anchor / 10).max(MIN_LATE_WINDOWS);
    if late >= n_anchor {
        return Err(ApError::RangeTooShort { range, window_len });
    }
    let jr = n_anchor - late;
    let raw_gap = suffix_min[jr] - sup_i;
    let epsilon = 0.95 * raw_gap;
    let eps_min = 1e-3 * f.sup_abs();

    if epsilon > eps_min {
        Ok(APVerdict {
            verdict: Verdict::NotApWitness,
            witness: Some(Witness::Gap {
                interval: [f.c_at(i_idx), f.c_at(i_idx) + w as f64 * f.spacing],
                r: f.c_at(jr),
                epsilon,
            }),
            range: f.range(),
            grid_spacing: f.spacing,
            source: f.source.clone(),
        })
    } else {
        Ok(APVerdict {
            verdict: Verdict::Inconclusive,
            witness: None,
            range: f.range(),
            grid_spacing: f.spacing,
            source: f.source.clone(),
        })
    }
}

/// Re-evaluate a gap witness against (possibly finer) samples: every window
/// of length |I| anchored past r must exceed sup_I|f| by at least ε.
pub fn verify_witness(f: &SampledFunction, witness: &Witness) -> bool {
    let Witness::Gap { interval, r, epsilon } = witness else {
        return false;
    };
    let abs: Vec<f64> = f.values.iter().map(|v| v.norm()).collect();
    let w = (((interval[1] - interval[0]) / f.spacing).round() as usize)
        .max(2)
        .min(abs.len());
    let sups = window_sups(&abs, w);
    let i_idx = ((interval[0] - f.c0) / f.spacing).round().max(0.0) as usize;
    if i_idx >= sups.len() {
        return false;
    }
    let sup_i = sups[i_idx];
    let jr = (((r - f.c0) / f.spacing).ceil().max(0.0) as usize).min(sups.len());
    sups[jr..].iter().all(|&s| s - sup_i >= *epsilon)
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitCheck {
    pub converges: bool,
    pub limit: Complex64,
    pub max_dev_from_limit: f64,
}

/// Estimate f(∞) as the tail mean and report how far the full range strays
/// from it. Converged means the tail already hugs the limit (tail deviation
/// at most a tenth of the full-range deviation, or no variation at all).
pub fn limit_constancy_check(f: &SampledFunction, tail_fraction: f64) -> LimitCheck {
    assert!(
        tail_fraction > 0.0 && tail_fraction <= 0.5,
        "tail_fraction in (0, 1/2]"
    );
    let n = f.values.len();
    let start = ((1.0 - tail_fraction) * n as f64) as usize;
    let tail = &f.values[start.min(n - 1)..];
    let limit = tail.iter().sum::<Complex64>() / tail.len() as f64;
    let dev = |vs: &[Complex64]| {
        vs.iter()
            .map(|v| (v - limit).norm())
            .fold(0.0f64, f64::max)
    };
    let tail_dev = dev(tail);
    let full_dev = dev(&f.values);
    LimitCheck {
        converges: full_dev < 1e-12 || tail_dev <= 0.1 * full_dev,
        limit,
        max_dev_from_limit: full_dev,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CTimesFCheck {
    pub flag_zero: bool,
    pub sup_f_tail: f64,
}

/// If both f and g(c) = c·f(c) pass boundedness screening (no growth trend
/// across the range halves), flag that f must be ≈ 0 and report the tail sup
/// of |f| as the contradiction measure.
pub fn c_times_f_check(f: &SampledFunction) -> CTimesFCheck {
    let n = f.values.len();
    let grows = |vals: &dyn Fn(usize) -> f64| {
        let first: f64 = (0..n / 2).map(vals).fold(0.0f64, f64::max);
        let second: f64 = (n / 2..n).map(vals).fold(0.0f64, f64::max);
        second > 1.5 * first + 1e-12
    };
    let f_abs = |i: usize| f.values[i].norm();
    let g_abs = |i: usize| f.c_at(i).abs() * f.values[i].norm();
    let flag_zero = !grows(&f_abs) && !grows(&g_abs);
    let tail_start = n - (n / 10).max(1);
    let sup_f_tail = (tail_start..n).map(f_abs).fold(0.0f64, f64::max);
    CTimesFCheck {
        flag_zero,
        sup_f_tail,
    }
}

/// Restrict a function of (c₁, c₂, c₃) to the diagonal (x, x, x), sampled on
/// a uniform grid; used to carry isotropic non-AP verdicts to the
/// anisotropic setting (diagonal non-AP ⇒ full non-AP).
pub fn diag_restrict(
    f3: impl Fn([f64; 3]) -> Complex64,
    c0: f64,
    spacing: f64,
    count: usize,
    source: &str,
) -> SampledFunction {
    SampledFunction::from_fn(
        |x| f3([x, x, x]),
        c0,
        spacing,
        count,
        format!("{source}|diag"),
    )
}

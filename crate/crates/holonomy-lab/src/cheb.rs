//! Chebyshev series on an interval, used to represent reparametrized curve
//! components analytically (evaluation and derivatives via Clenshaw).

/// Truncated Chebyshev expansion f(t) = Σ cₖ Tₖ(x(t)) on [a, b].
#[derive(Debug, Clone)]
pub struct ChebSeries {
    pub a: f64,
    pub b: f64,
    pub coeffs: Vec<f64>,
}

impl ChebSeries {
    /// Interpolate `f` at the N+1 Chebyshev–Lobatto nodes of [a, b].
    pub fn fit(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> Self {
        assert!(n >= 2 && b > a);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let vals: Vec<f64> = (0..=n)
            .map(|j| f(mid + half * (std::f64::consts::PI * j as f64 / n as f64).cos()))
            .collect();
        let mut coeffs = vec![0.0; n + 1];
        for (k, ck) in coeffs.iter_mut().enumerate() {
            let mut s = 0.5 * (vals[0] + if k % 2 == 0 { vals[n] } else { -vals[n] });
            for (j, v) in vals.iter().enumerate().take(n).skip(1) {
                s += v * (std::f64::consts::PI * (j * k) as f64 / n as f64).cos();
            }
            *ck = 2.0 * s / n as f64;
        }
        coeffs[0] *= 0.5;
        coeffs[n] *= 0.5;
        ChebSeries { a, b, coeffs }
    }

    /// Clenshaw evaluation.
    pub fn eval(&self, t: f64) -> f64 {
        let x = (2.0 * t - (self.a + self.b)) / (self.b - self.a);
        let mut b1 = 0.0;
        let mut b2 = 0.0;
        for &ck in self.coeffs.iter().skip(1).rev() {
            let tmp = 2.0 * x * b1 - b2 + ck;
            b2 = b1;
            b1 = tmp;
        }
        self.coeffs[0] + x * b1 - b2
    }

    /// Series of the derivative (exact coefficient recurrence).
    pub fn derivative(&self) -> ChebSeries {
        let n = self.coeffs.len() - 1;
        let mut d = vec![0.0; n + 1];
        if n >= 1 {
            // Recurrence with the convention that coeffs[0] is already halved.
            let mut c = self.coeffs.clone();
            c[0] *= 2.0;
            d[n] = 0.0;
            if n >= 1 {
                d[n - 1] = 2.0 * n as f64 * c[n];
            }
            for k in (1..n).rev() {
                d[k - 1] = d[k + 1] + 2.0 * k as f64 * c[k];
            }
            d[0] *= 0.5;
        }
        let scale = 2.0 / (self.b - self.a);
        for v in d.iter_mut() {
            *v *= scale;
        }
        d.pop();
        if d.is_empty() {
            d.push(0.0);
        }
        ChebSeries {
            a: self.a,
            b: self.b,
            coeffs: d,
        }
    }

    /// Largest |cₖ| over the top `frac` fraction of the coefficient tail.
    pub fn tail_max(&self, frac: f64) -> f64 {
        let n = self.coeffs.len();
        let start = ((1.0 - frac) * n as f64).floor() as usize;
        self.coeffs[start.min(n - 1)..]
            .iter()
            .fold(0.0f64, |m, c| m.max(c.abs()))
    }
}

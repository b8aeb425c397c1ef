//! Cubic smoothing splines with knots at every sample.
//!
//! Minimises `Σ (yᵢ − g(tᵢ))² + λ ∫ g''(t)² dt` over natural cubic splines
//! using the Reinsch normal equations `(R + λ QᵀQ) γ = Qᵀ y`,
//! `g = y − λ Q γ`, where `γ` holds the interior second derivatives. For a
//! uniform grid `R + λ QᵀQ` is a symmetric pentadiagonal SPD matrix and is
//! solved by banded Cholesky in O(n).

use crate::error::{Error, Result};

/// Symmetric positive-definite band matrix; stores the lower band row by row.
#[derive(Debug, Clone)]
pub struct SymBandMatrix {
    n: usize,
    bw: usize,
    // data[i * (bw + 1) + k] = A[i][i - k]
    data: Vec<f64>,
}

impl SymBandMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Set `A[i][i-k]` (and its mirror).
    pub fn set(&mut self, i: usize, k: usize, value: f64) {
        debug_assert!(k <= self.bw && k <= i);
        self.data[i * (self.bw + 1) + k] = value;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let k = hi - lo;
        if k > self.bw {
            0.0
        } else {
            self.data[hi * (self.bw + 1) + k]
        }
    }

    /// In-place banded Cholesky, then forward/back substitution.
    pub fn solve(mut self, rhs: &[f64]) -> Result<Vec<f64>> {
        let (n, bw) = (self.n, self.bw);
        if rhs.len() != n {
            return Err(Error::Numerical(format!(
                "band solve: rhs length {} != {}",
                rhs.len(),
                n
            )));
        }
        let w = bw + 1;
        // L[i][i-k] overwrites A[i][i-k].
        for i in 0..n {
            for k in (0..=bw.min(i)).rev() {
                let j = i - k;
                let mut s = self.data[i * w + k];
                // Σ_{p} L[i][p] L[j][p] for p in max(i,j)-bw ..< j
                let start = i.saturating_sub(bw);
                for p in start..j {
                    s -= self.data[i * w + (i - p)] * self.data[j * w + (j - p)];
                }
                if k == 0 {
                    if !(s > 0.0) {
                        return Err(Error::Numerical(format!(
                            "band Cholesky: matrix not positive definite at row {i}"
                        )));
                    }
                    self.data[i * w] = s.sqrt();
                } else {
                    self.data[i * w + k] = s / self.data[j * w];
                }
            }
        }
        let mut z = rhs.to_vec();
        for i in 0..n {
            let mut s = z[i];
            for p in i.saturating_sub(bw)..i {
                s -= self.data[i * w + (i - p)] * z[p];
            }
            z[i] = s / self.data[i * w];
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for q in (i + 1)..n.min(i + bw + 1) {
                s -= self.data[q * w + (q - i)] * z[q];
            }
            z[i] = s / self.data[i * w];
        }
        Ok(z)
    }
}

/// A natural cubic spline on a uniform grid, given by knot values and knot
/// second derivatives (zero at both ends).
#[derive(Debug, Clone, PartialEq)]
pub struct NaturalSpline {
    pub h: f64,
    pub values: Vec<f64>,
    pub second_derivs: Vec<f64>,
}

impl NaturalSpline {
    /// First derivative at every knot, from the piecewise-cubic form.
    pub fn knot_slopes(&self) -> Vec<f64> {
        let (g, m, h) = (&self.values, &self.second_derivs, self.h);
        let n = g.len();
        let mut d = Vec::with_capacity(n);
        for i in 0..n - 1 {
            d.push((g[i + 1] - g[i]) / h - h * (2.0 * m[i] + m[i + 1]) / 6.0);
        }
        d.push((g[n - 1] - g[n - 2]) / h + h * (m[n - 2] + 2.0 * m[n - 1]) / 6.0);
        d
    }

    /// `∫ g''(t)² dt`; exact for piecewise-linear `g''`.
    pub fn roughness(&self) -> f64 {
        let h = self.h;
        self.second_derivs
            .windows(2)
            .map(|w| h * (w[0] * w[0] + w[0] * w[1] + w[1] * w[1]) / 3.0)
            .sum()
    }

    /// Evaluate at `t` measured from the first knot.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.values.len();
        let pos = (t / self.h).clamp(0.0, (n - 1) as f64);
        let i = (pos.floor() as usize).min(n - 2);
        let a = (i + 1) as f64 - pos;
        let b = pos - i as f64;
        let (g, m, h) = (&self.values, &self.second_derivs, self.h);
        a * g[i] + b * g[i + 1] + ((a * a * a - a) * m[i] + (b * b * b - b) * m[i + 1]) * h * h / 6.0
    }
}

/// Second differences scaled by `1/h`, i.e. `Qᵀ y`.
fn second_differences(y: &[f64], h: f64) -> Vec<f64> {
    y.windows(3).map(|w| (w[0] - 2.0 * w[1] + w[2]) / h).collect()
}

/// Assemble `R + λ QᵀQ` for `m` interior knots on a uniform grid.
fn reinsch_matrix(m: usize, h: f64, lambda: f64) -> SymBandMatrix {
    let mut a = SymBandMatrix::zeros(m, 2);
    let h2 = h * h;
    for i in 0..m {
        a.set(i, 0, 2.0 * h / 3.0 + lambda * 6.0 / h2);
        if i >= 1 {
            a.set(i, 1, h / 6.0 - lambda * 4.0 / h2);
        }
        if i >= 2 {
            a.set(i, 2, lambda / h2);
        }
    }
    a
}

/// Fit the smoothing spline to `y` sampled every `h`. `lambda = 0` gives the
/// natural interpolating spline.
pub fn fit_smoothing_spline(y: &[f64], h: f64, lambda: f64) -> Result<NaturalSpline> {
    let n = y.len();
    if n < 4 {
        return Err(Error::invalid("spline data", format!("need at least 4 samples, got {n}")));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid("lambda", format!("must be finite and >= 0, got {lambda}")));
    }
    let m = n - 2;
    let gamma = reinsch_matrix(m, h, lambda).solve(&second_differences(y, h))?;
    // g = y − λ Q γ
    let mut values = y.to_vec();
    if lambda > 0.0 {
        for (j, &c) in gamma.iter().enumerate() {
            let s = lambda * c / h;
            values[j] -= s;
            values[j + 1] += 2.0 * s;
            values[j + 2] -= s;
        }
    }
    let mut second_derivs = Vec::with_capacity(n);
    second_derivs.push(0.0);
    second_derivs.extend_from_slice(&gamma);
    second_derivs.push(0.0);
    Ok(NaturalSpline {
        h,
        values,
        second_derivs,
    })
}

pub fn interpolating_spline(y: &[f64], h: f64) -> Result<NaturalSpline> {
    fit_smoothing_spline(y, h, 0.0)
}

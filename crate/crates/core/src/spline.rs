//! Cubic spline with not-a-knot end conditions on a strictly increasing grid.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    // second derivatives at the knots
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 4 || y.len() != n {
            return Err(Error::invalid("grid", format!("need >= 4 matching points, got {} and {}", n, y.len())));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("grid", "abscissae must be strictly increasing"));
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let d: Vec<f64> = (1..n - 1)
            .map(|i| 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]))
            .collect();
        // Tridiagonal system for m[1..n-1]; the not-a-knot conditions (continuous
        // third derivative at x[1] and x[n-2]) eliminate m[0] and m[n-1].
        let k = n - 2;
        let mut sub = vec![0.0; k];
        let mut diag = vec![0.0; k];
        let mut sup = vec![0.0; k];
        for r in 0..k {
            let i = r + 1;
            sub[r] = h[i - 1];
            diag[r] = 2.0 * (h[i - 1] + h[i]);
            sup[r] = h[i];
        }
        let (h0, h1) = (h[0], h[1]);
        diag[0] += h0 + h0 * h0 / h1;
        sup[0] -= h0 * h0 / h1;
        let (ha, hb) = (h[n - 2], h[n - 3]);
        diag[k - 1] += ha + ha * ha / hb;
        sub[k - 1] -= ha * ha / hb;
        let mut rhs = d;
        for r in 1..k {
            let w = sub[r] / diag[r - 1];
            diag[r] -= w * sup[r - 1];
            rhs[r] -= w * rhs[r - 1];
        }
        let mut m = vec![0.0; n];
        m[k] = rhs[k - 1] / diag[k - 1];
        for r in (0..k - 1).rev() {
            m[r + 1] = (rhs[r] - sup[r] * m[r + 2]) / diag[r];
        }
        m[0] = m[1] - h0 * (m[2] - m[1]) / h1;
        m[n - 1] = m[n - 2] + ha * (m[n - 2] - m[n - 3]) / hb;
        Ok(CubicSpline { x, y, m })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Evaluates the spline; outside the grid the end cubics are extended.
    pub fn eval(&self, t: f64) -> f64 {
        self.eval_in(self.locate(t), t)
    }

    /// Index of the interval holding `t`, clamped to the end intervals.
    pub(crate) fn locate(&self, t: f64) -> usize {
        let n = self.x.len();
        match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        }
    }

    /// Evaluates on interval `i`; splines sharing knots can share one `locate`.
    pub(crate) fn eval_in(&self, i: usize, t: f64) -> f64 {
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reproduces_knots_and_lines() {
        let x: Vec<f64> = (0..10).map(|i| i as f64 * 0.3).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v - 1.0).collect();
        let s = CubicSpline::new(x.clone(), y.clone()).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert_relative_eq!(s.eval(*xi), *yi, epsilon = 1e-14);
        }
        assert_relative_eq!(s.eval(1.05), 1.1, epsilon = 1e-14);
    }

    #[test]
    fn reproduces_cubics_exactly() {
        let x: Vec<f64> = [0.0, 0.4, 1.0, 1.3, 2.2, 3.0].to_vec();
        let f = |v: f64| 1.0 - 2.0 * v + 0.5 * v * v - 0.3 * v * v * v;
        let s = CubicSpline::new(x.clone(), x.iter().map(|&v| f(v)).collect()).unwrap();
        for t in [0.05, 0.7, 1.9, 2.95] {
            assert_relative_eq!(s.eval(t), f(t), epsilon = 1e-12);
        }
    }

    #[test]
    fn converges_fourth_order_up_to_the_ends() {
        let err = |n: usize| {
            let x: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64 * 6.0).collect();
            let y = x.iter().map(|v| v.sin()).collect();
            let s = CubicSpline::new(x, y).unwrap();
            (0..600).map(|k| 0.01 * k as f64).map(|t| (s.eval(t) - t.sin()).abs()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(41), err(81));
        assert!(e1 / e2 > 12.0, "ratio {}", e1 / e2);
    }

    #[test]
    fn converges_fourth_order_in_the_interior() {
        let err = |n: usize| {
            let x: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64 * 6.0).collect();
            let y = x.iter().map(|v| v.sin()).collect();
            let s = CubicSpline::new(x, y).unwrap();
            (0..200).map(|k| 2.0 + 2.0 * k as f64 / 200.0).map(|t| (s.eval(t) - t.sin()).abs()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(41), err(81));
        assert!(e1 / e2 > 12.0, "ratio {}", e1 / e2);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(CubicSpline::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 2.0]).is_err());
        assert!(CubicSpline::new(vec![0.0, 1.0, 1.0, 2.0], vec![0.0, 1.0, 2.0, 3.0]).is_err());
    }
}

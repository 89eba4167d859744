//! Explicit Runge–Kutta integrators for 2×2 complex matrix ODEs.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat2::Mat2C;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Classical fixed-step fourth-order Runge–Kutta.
    Rk4,
    /// Dormand–Prince 5(4) with local error control.
    Rk45,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub method: Method,
    /// Initial step for RK45, the step for RK4.
    pub h0: f64,
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { method: Method::Rk45, h0: 1e-2, rtol: 1e-8, atol: 1e-10, max_step: 1.0 }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.h0 > 0.0 && self.h0.is_finite()) {
            return Err(Error::invalid("h0", format!("must be > 0, got {}", self.h0)));
        }
        if !(self.rtol > 1e-12 && self.rtol < 1e-2) {
            return Err(Error::invalid("rtol", format!("must lie in (1e-12, 1e-2), got {}", self.rtol)));
        }
        if !(self.atol > 0.0) {
            return Err(Error::invalid("atol", format!("must be > 0, got {}", self.atol)));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::invalid("max_step", format!("must be > 0, got {}", self.max_step)));
        }
        Ok(())
    }
}

// Dormand–Prince coefficients
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b − b̂ (fifth minus embedded fourth order)
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Vector-space operations the integrators need from a state.
pub trait OdeState: Clone {
    /// base + h Σ cᵢ kᵢ, or just h Σ cᵢ kᵢ without a base.
    fn lincomb(base: Option<&Self>, h: f64, terms: &[(f64, &Self)]) -> Self;
    /// max |err| / (atol + rtol·max(|y0|, |y1|)) over all components.
    fn scaled_error(err: &Self, y0: &Self, y1: &Self, atol: f64, rtol: f64) -> f64;
    fn all_finite(&self) -> bool;
}

impl OdeState for Mat2C {
    fn lincomb(base: Option<&Self>, h: f64, terms: &[(f64, &Self)]) -> Self {
        let mut acc = Mat2C::zero();
        for (c, k) in terms {
            acc += **k * *c;
        }
        match base {
            Some(b) => *b + acc * h,
            None => acc * h,
        }
    }

    fn scaled_error(err: &Self, y0: &Self, y1: &Self, atol: f64, rtol: f64) -> f64 {
        let mut m = 0.0f64;
        for r in 0..2 {
            for c in 0..2 {
                let scale = atol + rtol * y0.0[r][c].norm().max(y1.0[r][c].norm());
                m = m.max(err.0[r][c].norm() / scale);
            }
        }
        m
    }

    fn all_finite(&self) -> bool {
        self.is_finite()
    }
}

/// A batch of matrices advanced on one shared step sequence.
impl OdeState for Vec<Mat2C> {
    fn lincomb(base: Option<&Self>, h: f64, terms: &[(f64, &Self)]) -> Self {
        let n = terms.first().map_or(0, |t| t.1.len());
        (0..n)
            .map(|j| {
                let mut acc = Mat2C::zero();
                for (c, k) in terms {
                    acc += k[j] * *c;
                }
                match base {
                    Some(b) => b[j] + acc * h,
                    None => acc * h,
                }
            })
            .collect()
    }

    fn scaled_error(err: &Self, y0: &Self, y1: &Self, atol: f64, rtol: f64) -> f64 {
        (0..err.len()).map(|j| Mat2C::scaled_error(&err[j], &y0[j], &y1[j], atol, rtol)).fold(0.0, f64::max)
    }

    fn all_finite(&self) -> bool {
        self.iter().all(Mat2C::is_finite)
    }
}

/// Integrator state that can be advanced through a sequence of output times.
pub struct Stepper<S, F> {
    f: F,
    opts: SolverOptions,
    t: f64,
    y: S,
    h: f64,
    // derivative at (t, y), reused first-same-as-last
    k1: Option<S>,
    steps: usize,
    rejected: usize,
}

impl<S, F> Stepper<S, F>
where
    S: OdeState,
    F: FnMut(f64, &S) -> Result<S>,
{
    pub fn new(f: F, t0: f64, y0: S, opts: SolverOptions) -> Result<Self> {
        opts.validate()?;
        Ok(Stepper { f, opts, t: t0, y: y0, h: opts.h0.min(opts.max_step), k1: None, steps: 0, rejected: 0 })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> &S {
        &self.y
    }

    /// Accepted and rejected step counts so far.
    pub fn stats(&self) -> (usize, usize) {
        (self.steps, self.rejected)
    }

    /// Advances to `t_end` exactly, leaving the state there.
    pub fn advance_to(&mut self, t_end: f64) -> Result<S> {
        match self.opts.method {
            Method::Rk4 => self.rk4_to(t_end),
            Method::Rk45 => self.dopri_to(t_end),
        }
    }

    fn rk4_to(&mut self, t_end: f64) -> Result<S> {
        let span = t_end - self.t;
        if span <= 0.0 {
            return Ok(self.y.clone());
        }
        let h_nom = self.opts.h0.min(self.opts.max_step);
        let n = (span / h_nom).ceil().max(1.0) as usize;
        let h = span / n as f64;
        let t0 = self.t;
        for k in 0..n {
            let t = t0 + k as f64 * h;
            let y = &self.y;
            let k1 = (self.f)(t, y)?;
            let k2 = (self.f)(t + 0.5 * h, &S::lincomb(Some(y), 0.5 * h, &[(1.0, &k1)]))?;
            let k3 = (self.f)(t + 0.5 * h, &S::lincomb(Some(y), 0.5 * h, &[(1.0, &k2)]))?;
            let k4 = (self.f)(t + h, &S::lincomb(Some(y), h, &[(1.0, &k3)]))?;
            self.y = S::lincomb(Some(y), h / 6.0, &[(1.0, &k1), (2.0, &k2), (2.0, &k3), (1.0, &k4)]);
            if !self.y.all_finite() {
                return Err(Error::NonFinite { t: t + h, eta: Complex64::default() });
            }
            self.steps += 1;
        }
        self.t = t_end;
        Ok(self.y.clone())
    }

    fn dopri_to(&mut self, t_end: f64) -> Result<S> {
        let opts = self.opts;
        while self.t < t_end {
            let remaining = t_end - self.t;
            let mut h = self.h.min(opts.max_step);
            let last = h >= remaining;
            if last {
                h = remaining;
            }
            let t = self.t;
            if h <= 1e-13 * t.abs().max(1.0) && !last {
                return Err(Error::StepUnderflow { t, eta: Complex64::default() });
            }
            let y = &self.y;
            let k1 = match self.k1.take() {
                Some(k) => k,
                None => (self.f)(t, y)?,
            };
            let k2 = (self.f)(t + C2 * h, &S::lincomb(Some(y), h, &[(A21, &k1)]))?;
            let k3 = (self.f)(t + C3 * h, &S::lincomb(Some(y), h, &[(A31, &k1), (A32, &k2)]))?;
            let k4 = (self.f)(t + C4 * h, &S::lincomb(Some(y), h, &[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
            let k5 = (self.f)(
                t + C5 * h,
                &S::lincomb(Some(y), h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            )?;
            let k6 = (self.f)(
                t + h,
                &S::lincomb(Some(y), h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            )?;
            let y1 = S::lincomb(Some(y), h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
            let t1 = if last { t_end } else { t + h };
            let k7 = (self.f)(t1, &y1)?;
            let err = S::lincomb(None, h, &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)]);
            let en = S::scaled_error(&err, y, &y1, opts.atol, opts.rtol);
            if !en.is_finite() || !y1.all_finite() {
                if h <= 1e-13 * t.abs().max(1.0) {
                    return Err(Error::NonFinite { t, eta: Complex64::default() });
                }
                self.h = 0.1 * h;
                self.k1 = Some(k1);
                self.rejected += 1;
                continue;
            }
            let factor = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
            if en <= 1.0 {
                self.t = t1;
                self.y = y1;
                self.k1 = Some(k7);
                self.steps += 1;
                // keep the unclipped step size when the last step was shortened
                if !last || h * factor > self.h {
                    self.h = h * factor;
                }
            } else {
                self.k1 = Some(k1);
                self.rejected += 1;
                self.h = h * factor.min(1.0);
                if self.h <= 1e-13 * t.abs().max(1.0) {
                    return Err(Error::StepUnderflow { t, eta: Complex64::default() });
                }
            }
        }
        Ok(self.y.clone())
    }
}

/// Integrates y′ = f(t, y) from `t0` to `t1`.
pub fn integrate<S, F>(f: F, t0: f64, t1: f64, y0: S, opts: SolverOptions) -> Result<S>
where
    S: OdeState,
    F: FnMut(f64, &S) -> Result<S>,
{
    Stepper::new(f, t0, y0, opts)?.advance_to(t1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn exponential_growth_and_rotation() {
        let a = Mat2C::new(c(0.3, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, -2.0));
        for method in [Method::Rk4, Method::Rk45] {
            let opts = SolverOptions { method, h0: 1e-3, rtol: 1e-10, atol: 1e-12, ..Default::default() };
            let y = integrate(|_, y| Ok(a * *y), 0.0, 3.0, Mat2C::identity(), opts).unwrap();
            assert!((y.get(0, 0) - c(0.9f64.exp(), 0.0)).norm() < 1e-8);
            let e = (y.get(1, 1) - c(0.0, -6.0).exp()).norm();
            assert!(e < 1e-8, "{method:?}: {e}");
        }
    }

    #[test]
    fn time_dependent_rhs_and_order() {
        // y′ = i t σ_z y  →  y(t) = exp(i t²/2 σ_z)
        let f = |t: f64, y: &Mat2C| Ok(Mat2C::sigma_z() * c(0.0, t) * *y);
        let exact = c(0.0, 2.0).exp();
        let err = |h: f64| {
            let opts = SolverOptions { method: Method::Rk4, h0: h, ..Default::default() };
            (integrate(f, 0.0, 2.0, Mat2C::identity(), opts).unwrap().get(0, 0) - exact).norm()
        };
        let ratio = err(0.02) / err(0.01);
        assert!((ratio - 16.0).abs() < 1.0, "rk4 order ratio {ratio}");
        let opts = SolverOptions { rtol: 1e-10, atol: 1e-12, ..Default::default() };
        let y = integrate(f, 0.0, 2.0, Mat2C::identity(), opts).unwrap();
        assert!((y.get(0, 0) - exact).norm() < 1e-8);
    }

    #[test]
    fn stepper_hits_output_times_exactly() {
        let mut s = Stepper::new(|_, y: &Mat2C| Ok(*y * -1.0), 0.0, Mat2C::identity(), SolverOptions::default()).unwrap();
        for k in 1..=10 {
            let t = 0.37 * k as f64;
            let y = s.advance_to(t).unwrap();
            assert_eq!(s.t(), t);
            assert!((y.get(0, 0).re - (-t).exp()).abs() < 1e-8);
        }
    }

    #[test]
    fn blow_up_is_reported() {
        let r = integrate(|_, y: &Mat2C| Ok(*y * *y), 0.0, 2.0, Mat2C::identity(), SolverOptions::default());
        assert!(matches!(r, Err(Error::StepUnderflow { .. }) | Err(Error::NonFinite { .. })));
    }

    #[test]
    fn batches_share_steps_and_meet_tolerance() {
        let rate = |j: usize| c(-0.1 * j as f64, 1.0 + j as f64);
        let f = |_: f64, ys: &Vec<Mat2C>| Ok(ys.iter().enumerate().map(|(j, y)| *y * rate(j)).collect::<Vec<_>>());
        let y0 = vec![Mat2C::identity(); 4];
        let opts = SolverOptions { rtol: 1e-10, atol: 1e-12, ..Default::default() };
        let ys = integrate(f, 0.0, 2.0, y0, opts).unwrap();
        for (j, y) in ys.iter().enumerate() {
            assert!((y.get(1, 1) - (rate(j) * 2.0).exp()).norm() < 1e-8);
        }
        // identical members follow the single-state step sequence exactly
        let g = |_: f64, y: &Mat2C| Ok(*y * rate(2));
        let single = integrate(g, 0.0, 2.0, Mat2C::identity(), opts).unwrap();
        let twin = integrate(
            |_, ys: &Vec<Mat2C>| Ok(ys.iter().map(|y| *y * rate(2)).collect()),
            0.0,
            2.0,
            vec![Mat2C::identity(); 3],
            opts,
        )
        .unwrap();
        assert!(twin.iter().all(|y| *y == single));
    }

    #[test]
    fn options_are_validated() {
        assert!(SolverOptions { rtol: 0.5, ..Default::default() }.validate().is_err());
        assert!(SolverOptions { h0: 0.0, ..Default::default() }.validate().is_err());
    }
}

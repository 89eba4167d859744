//! Reservoir quantities: spectral density, polaron renormalisation, bath propagator,
//! correlation functions, rates γ(ω), Lamb-shift integrals S(ω) and rate tables.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, Panels};
use crate::specfun::{trigamma_unchecked, x_one_plus_n};
use crate::spline::CubicSpline;
use crate::system::Frame;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathParams {
    pub alpha: f64,
    pub omega_c: f64,
    pub beta: f64,
    #[serde(default = "default_true")]
    pub include_lamb_shift: bool,
}

fn default_true() -> bool {
    true
}

impl BathParams {
    pub fn new(alpha: f64, omega_c: f64, beta: f64) -> Result<Self> {
        let b = BathParams { alpha, omega_c, beta, include_lamb_shift: true };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid("alpha", format!("must be >= 0, got {}", self.alpha)));
        }
        if !(self.omega_c > 0.0 && self.omega_c.is_finite()) {
            return Err(Error::invalid("omega_c", format!("must be > 0, got {}", self.omega_c)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::invalid("beta", format!("must be > 0, got {}", self.beta)));
        }
        Ok(())
    }

    /// ε = 1/(βω_c)
    pub fn epsilon(&self) -> f64 {
        1.0 / (self.beta * self.omega_c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Xx,
    Yy,
}

impl Channel {
    pub const ALL: [Channel; 2] = [Channel::Xx, Channel::Yy];
}

/// J(ω) = α ω³ ω_c⁻² e^{−ω/ω_c} for ω ≥ 0.
pub fn spectral_density(omega: f64, bath: &BathParams) -> f64 {
    if omega <= 0.0 {
        return 0.0;
    }
    bath.alpha * omega.powi(3) / (bath.omega_c * bath.omega_c) * (-omega / bath.omega_c).exp()
}

/// Polaron renormalisation κ = exp(−2α(2ε²ψ⁽¹⁾(ε) − 1)).
pub fn kappa(bath: &BathParams) -> f64 {
    let eps = bath.epsilon();
    let psi = trigamma_unchecked(Complex64::new(eps, 0.0)).re;
    (-2.0 * bath.alpha * (2.0 * eps * eps * psi - 1.0)).exp()
}

/// κ from direct quadrature of exp(−2∫ J(ω)/ω² coth(βω/2) dω).
pub fn kappa_quadrature(bath: &BathParams) -> Result<f64> {
    if bath.alpha == 0.0 {
        return Ok(1.0);
    }
    let wc = bath.omega_c;
    let beta = bath.beta;
    // J/ω² · coth(βω/2) with the ω → 0 limit 2α/(βω_c²)
    let f = |w: f64| {
        let pref = bath.alpha / (wc * wc) * (-w / wc).exp();
        pref * (2.0 / beta * x_one_plus_n(beta * w) - w)
    };
    let head = quad::integrate(f, 0.0, 40.0 * wc, 1e-15, 1e-13)?;
    let tail = quad::integrate_outward(f, 40.0 * wc, 10.0 * wc, 1e-16, 1e4 * wc)?;
    Ok((-2.0 * (head.value + tail.value)).exp())
}

/// Bath propagator φ(t) at complex time, written as
/// 4αε²[ψ⁽¹⁾(ε + it/β) + ψ⁽¹⁾(1 + ε − it/β)]; analytic for −(β + 1/ω_c) < Im t < 1/ω_c.
pub(crate) fn propagator_complex(t: Complex64, bath: &BathParams) -> Complex64 {
    if bath.alpha == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let eps = bath.epsilon();
    let x = Complex64::i() * t / bath.beta;
    let s = trigamma_unchecked(eps + x) + trigamma_unchecked(1.0 + eps - x);
    4.0 * bath.alpha * eps * eps * s
}

/// φ(t) = −4α[(1 − iω_c t)⁻² − ε²(ψ⁽¹⁾(ε + it/β) + ψ⁽¹⁾(ε − it/β))].
///
/// Evaluated in the equivalent form with the second trigamma shifted by one, which
/// avoids the cancellation between the rational and ψ⁽¹⁾ terms near t = 0.
pub fn bath_propagator(t: f64, bath: &BathParams) -> Complex64 {
    propagator_complex(Complex64::new(t, 0.0), bath)
}

/// Correlation functions C_xx = κ²(cosh φ − 1), C_yy = κ² sinh φ.
pub fn corr(t: f64, channel: Channel, bath: &BathParams) -> Complex64 {
    let k2 = kappa(bath).powi(2);
    let phi = bath_propagator(t, bath);
    match channel {
        Channel::Xx => k2 * (phi.cosh() - 1.0),
        Channel::Yy => k2 * phi.sinh(),
    }
}

/// F(ω) = (α/ω_c²) e^{−|ω|/ω_c} ω (1 + N(ω)); the transform of φ is 8πF.
fn linear_spectrum(omega: f64, bath: &BathParams) -> f64 {
    let wc = bath.omega_c;
    bath.alpha / (wc * wc) * (-omega.abs() / wc).exp() * x_one_plus_n(bath.beta * omega) / bath.beta
}

/// Contribution of the part of C_yy linear in φ: κ²·8π F(ω), exact.
fn gamma_linear(omega: f64, bath: &BathParams, kappa: f64) -> f64 {
    kappa * kappa * 8.0 * PI * linear_spectrum(omega, bath)
}

/// Principal-value Lamb shift of the linear part: κ²·4 p.v.∫ F(ω′)/(ω − ω′) dω′.
fn lamb_linear(omega: f64, bath: &BathParams, kappa: f64) -> Result<f64> {
    if bath.alpha == 0.0 {
        return Ok(0.0);
    }
    let half = 5.0 * omega.abs().max(bath.omega_c);
    let scale = bath.alpha / bath.omega_c;
    let r = quad::principal_value(
        |w| linear_spectrum(w, bath),
        omega,
        half,
        1e-13 * scale.max(1e-300),
        1e3 * bath.omega_c + 20.0 * half,
    )?;
    Ok(4.0 * kappa * kappa * r.value)
}

/// WCME rate 2π J(ω)(1 + N(ω)) with J extended as an odd function.
pub fn gamma_weak(omega: f64, bath: &BathParams) -> f64 {
    let wc = bath.omega_c;
    2.0 * PI * bath.alpha / (wc * wc) * (-omega.abs() / wc).exp() * omega * omega * x_one_plus_n(bath.beta * omega)
        / bath.beta
}

/// WCME Lamb shift p.v.∫ J(ω′)(1 + N(ω′))/(ω − ω′) dω′.
pub fn lamb_weak(omega: f64, bath: &BathParams) -> Result<f64> {
    if bath.alpha == 0.0 {
        return Ok(0.0);
    }
    let half = 5.0 * omega.abs().max(bath.omega_c);
    let r = quad::principal_value(
        |w| gamma_weak(w, bath) / (2.0 * PI),
        omega,
        half,
        1e-12 * bath.alpha * bath.omega_c,
        1e3 * bath.omega_c + 20.0 * half,
    )?;
    Ok(r.value)
}

/// Half-sided transforms of the correlation remainders on a fixed set of
/// Gauss–Kronrod panels.
///
/// The remainders are C_xx itself and C_yy − κ²φ; the φ-linear piece of C_yy is
/// handled in closed form (its slow 1/τ² tail makes real-axis quadrature of
/// negative frequencies inaccurate).
#[derive(Debug, Clone)]
pub struct CorrelationTransform {
    bath: BathParams,
    kappa: f64,
    t_max: f64,
    panels: Panels,
    rem_xx: Vec<Complex64>,
    rem_yy: Vec<Complex64>,
}

/// Γ(+ω) and Γ(−ω) for ω ≥ 0 together with an error estimate.
#[derive(Debug, Clone, Copy)]
struct HalfTransform {
    plus: Complex64,
    minus: Complex64,
    err: f64,
}

const TRANSFORM_TOL: f64 = 1e-9;

impl CorrelationTransform {
    /// Prepares samples adequate for |ω| ≤ `omega_max`.
    pub fn new(bath: &BathParams, omega_max: f64) -> Result<Self> {
        bath.validate()?;
        let kappa = kappa(bath);
        let scale = (1.0 / bath.omega_c).max(bath.beta);
        let cap = 2000.0 * scale;
        let mut t_max = 20.0 * scale;
        let k2 = kappa * kappa;
        while t_max < cap {
            let phi = bath_propagator(t_max, bath).norm();
            if k2 * phi * phi * t_max / 6.0 < 1e-12 {
                break;
            }
            t_max = (2.0 * t_max).min(cap);
        }
        let width = (0.5 / bath.omega_c).min(0.5 * PI / omega_max.abs().max(1e-300));
        let panels = Panels::new(t_max, width);
        let mut rem_xx = Vec::with_capacity(panels.len());
        let mut rem_yy = Vec::with_capacity(panels.len());
        for &tau in &panels.nodes {
            let phi = bath_propagator(tau, bath);
            rem_xx.push(k2 * (phi.cosh() - 1.0));
            rem_yy.push(k2 * (phi.sinh() - phi));
        }
        Ok(CorrelationTransform { bath: *bath, kappa, t_max, panels, rem_xx, rem_yy })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    fn half(&self, channel: Channel, omega: f64) -> HalfTransform {
        debug_assert!(omega >= 0.0);
        let c = match channel {
            Channel::Xx => &self.rem_xx,
            Channel::Yy => &self.rem_yy,
        };
        // Γ(±ω) = ∫ (cos ωτ ± i sin ωτ) C(τ) dτ
        let (mut ck, mut sk, mut cg, mut sg) = (Complex64::default(), Complex64::default(), Complex64::default(), Complex64::default());
        for j in 0..self.panels.len() {
            let (s, co) = (omega * self.panels.nodes[j]).sin_cos();
            let cc = c[j] * co;
            let sc = c[j] * s;
            ck += cc * self.panels.wk[j];
            sk += sc * self.panels.wk[j];
            cg += cc * self.panels.wg[j];
            sg += sc * self.panels.wg[j];
        }
        let i = Complex64::i();
        let plus = ck + i * sk;
        let minus = ck - i * sk;
        let err = ((ck - cg).norm() + (sk - sg).norm()) * 2.0;
        HalfTransform { plus, minus, err }
    }

    fn check(&self, err: f64) -> Result<()> {
        if err > TRANSFORM_TOL {
            return Err(Error::Quadrature { achieved: err, requested: TRANSFORM_TOL });
        }
        Ok(())
    }

    /// e^{−βω/2} γ_rem(ω), an even function of ω by detailed balance.
    fn balanced_remainder(&self, channel: Channel, omega: f64) -> Result<f64> {
        let w = omega.abs();
        let h = self.half(channel, w);
        self.check(h.err)?;
        Ok((-0.5 * self.bath.beta * w).exp() * 2.0 * h.plus.re)
    }

    /// γ_aa(ω) = ∫ e^{iωτ} C_aa(τ) dτ.
    ///
    /// Computed on the real axis for ω ≥ 0; negative frequencies follow from
    /// detailed balance, which the real-axis integral only satisfies up to the
    /// truncation of the correlation tail.
    pub fn gamma(&self, channel: Channel, omega: f64) -> Result<f64> {
        let g = (0.5 * self.bath.beta * omega).exp() * self.balanced_remainder(channel, omega)?;
        Ok(match channel {
            Channel::Xx => g,
            Channel::Yy => g + gamma_linear(omega, &self.bath, self.kappa),
        })
    }

    /// S_aa(ω) = (1/2π) p.v.∫ γ_aa(ω′)/(ω − ω′) dω′, via S = Im ∫₀^∞ e^{iωτ} C(τ) dτ.
    pub fn lamb(&self, channel: Channel, omega: f64) -> Result<f64> {
        let h = self.half(channel, omega.abs());
        self.check(h.err)?;
        let rem = if omega >= 0.0 { h.plus.im } else { h.minus.im };
        Ok(match channel {
            Channel::Xx => rem,
            Channel::Yy => rem + lamb_linear(omega, &self.bath, self.kappa)?,
        })
    }
}

/// γ_aa(ω) for a single frequency; see [`CorrelationTransform::gamma`].
pub fn gamma(omega: f64, channel: Channel, bath: &BathParams) -> Result<f64> {
    CorrelationTransform::new(bath, omega.abs().max(1.0))?.gamma(channel, omega)
}

/// S_aa(ω) for a single frequency; see [`CorrelationTransform::lamb`].
pub fn lamb_s(omega: f64, channel: Channel, bath: &BathParams) -> Result<f64> {
    CorrelationTransform::new(bath, omega.abs().max(1.0))?.lamb(channel, omega)
}

/// Frequency grid for a rate table: uniform, with ×4 refinement inside
/// |ω| ≤ `dense_halfwidth`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub omega_min: f64,
    pub omega_max: f64,
    pub n_points: usize,
    pub dense_halfwidth: f64,
}

pub const MIN_TABLE_POINTS: usize = 64;

impl GridSpec {
    pub fn uniform(omega_min: f64, omega_max: f64, n_points: usize) -> Self {
        GridSpec { omega_min, omega_max, n_points, dense_halfwidth: 0.0 }
    }

    pub fn nodes(&self) -> Result<Vec<f64>> {
        if self.n_points < MIN_TABLE_POINTS {
            return Err(Error::invalid(
                "n_points",
                format!("need at least {MIN_TABLE_POINTS}, got {}", self.n_points),
            ));
        }
        if !(self.omega_min < self.omega_max) || !self.omega_min.is_finite() || !self.omega_max.is_finite() {
            return Err(Error::invalid(
                "omega window",
                format!("need omega_min < omega_max, got [{}, {}]", self.omega_min, self.omega_max),
            ));
        }
        let n = self.n_points;
        let h = (self.omega_max - self.omega_min) / (n - 1) as f64;
        let base: Vec<f64> = (0..n).map(|k| self.omega_min + h * k as f64).collect();
        let mut out = Vec::with_capacity(n + 64);
        for k in 0..n {
            out.push(base[k]);
            if k + 1 < n {
                let mid = 0.5 * (base[k] + base[k + 1]);
                if mid.abs() <= self.dense_halfwidth {
                    for j in 1..4 {
                        out.push(base[k] + h * j as f64 / 4.0);
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Tabulated γ and S for both channels on a frequency grid, with cubic interpolation.
///
/// Polaron rates are interpolated through e^{−βω/2}γ(ω) evaluated at |ω|, so the
/// interpolant obeys detailed balance exactly; the closed-form part of γ_yy is
/// added back at evaluation time. Weak-coupling tables keep γ in closed form and
/// store the WCME Lamb shift in the xx columns (yy columns are zero).
#[derive(Debug, Clone)]
pub struct RateTable {
    frame: Frame,
    bath: BathParams,
    kappa: f64,
    omega: Vec<f64>,
    gamma_xx: Vec<f64>,
    gamma_yy: Vec<f64>,
    s_xx: Vec<f64>,
    s_yy: Vec<f64>,
    balanced_xx: CubicSpline,
    balanced_yy: CubicSpline,
    s_xx_spline: CubicSpline,
    s_yy_spline: CubicSpline,
}

/// Interpolated rates at (+ω, −ω).
#[derive(Debug, Clone, Copy)]
pub(crate) struct Transitions {
    pub gamma_xx: [f64; 2],
    pub gamma_yy: [f64; 2],
    pub s_xx: [f64; 2],
    pub s_yy: [f64; 2],
}

#[derive(Debug, Serialize, Deserialize)]
struct TableRow {
    omega: f64,
    gamma_xx: f64,
    gamma_yy: f64,
    s_xx: f64,
    s_yy: f64,
}

/// Polaron-frame rate table on a uniform grid.
pub fn build_rate_table(bath: &BathParams, omega_min: f64, omega_max: f64, n_points: usize) -> Result<RateTable> {
    RateTable::build(bath, Frame::Polaron, &GridSpec::uniform(omega_min, omega_max, n_points))
}

impl RateTable {
    pub fn build(bath: &BathParams, frame: Frame, grid: &GridSpec) -> Result<Self> {
        bath.validate()?;
        let omega = grid.nodes()?;
        let n = omega.len();
        let mut gamma_xx = vec![0.0; n];
        let mut gamma_yy = vec![0.0; n];
        let mut s_xx = vec![0.0; n];
        let mut s_yy = vec![0.0; n];
        match frame {
            Frame::Polaron => {
                let w_max = omega.iter().fold(0.0f64, |m, w| m.max(w.abs()));
                let tr = CorrelationTransform::new(bath, w_max)?;
                for (k, &w) in omega.iter().enumerate() {
                    gamma_xx[k] = tr.gamma(Channel::Xx, w)?;
                    gamma_yy[k] = tr.gamma(Channel::Yy, w)?;
                    s_xx[k] = tr.lamb(Channel::Xx, w)?;
                    s_yy[k] = tr.lamb(Channel::Yy, w)?;
                }
            }
            Frame::WeakCoupling => {
                for (k, &w) in omega.iter().enumerate() {
                    gamma_xx[k] = gamma_weak(w, bath);
                    s_xx[k] = lamb_weak(w, bath)?;
                }
            }
        }
        Self::from_columns(frame, *bath, omega, gamma_xx, gamma_yy, s_xx, s_yy)
    }

    fn from_columns(
        frame: Frame,
        bath: BathParams,
        omega: Vec<f64>,
        gamma_xx: Vec<f64>,
        gamma_yy: Vec<f64>,
        s_xx: Vec<f64>,
        s_yy: Vec<f64>,
    ) -> Result<Self> {
        bath.validate()?;
        let n = omega.len();
        if n < MIN_TABLE_POINTS {
            return Err(Error::invalid("n_points", format!("need at least {MIN_TABLE_POINTS}, got {n}")));
        }
        if omega.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Malformed("rate-table grid is not strictly increasing".into()));
        }
        let kappa = kappa(&bath);
        let beta = bath.beta;
        // balanced remainders on the mirrored |ω| grid
        let mut pairs: Vec<(f64, f64, f64)> = omega
            .iter()
            .enumerate()
            .map(|(k, &w)| {
                let damp = (-0.5 * beta * w).exp();
                let lin = match frame {
                    Frame::Polaron => gamma_linear(w, &bath, kappa),
                    Frame::WeakCoupling => 0.0,
                };
                (w.abs(), damp * gamma_xx[k], damp * (gamma_yy[k] - lin))
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let tol = 1e-12 * pairs.last().map_or(1.0, |p| p.0.max(1.0));
        pairs.dedup_by(|b, a| (b.0 - a.0).abs() <= tol);
        let mut ax = Vec::with_capacity(2 * pairs.len());
        let mut bx = Vec::with_capacity(2 * pairs.len());
        let mut by = Vec::with_capacity(2 * pairs.len());
        for p in pairs.iter().rev().filter(|p| p.0 > tol) {
            ax.push(-p.0);
            bx.push(p.1);
            by.push(p.2);
        }
        for p in pairs.iter() {
            if p.0 <= tol {
                ax.push(0.0);
            } else {
                ax.push(p.0);
            }
            bx.push(p.1);
            by.push(p.2);
        }
        let balanced_xx = CubicSpline::new(ax.clone(), bx)?;
        let balanced_yy = CubicSpline::new(ax, by)?;
        let s_xx_spline = CubicSpline::new(omega.clone(), s_xx.clone())?;
        let s_yy_spline = CubicSpline::new(omega.clone(), s_yy.clone())?;
        Ok(RateTable {
            frame,
            bath,
            kappa,
            omega,
            gamma_xx,
            gamma_yy,
            s_xx,
            s_yy,
            balanced_xx,
            balanced_yy,
            s_xx_spline,
            s_yy_spline,
        })
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn bath(&self) -> &BathParams {
        &self.bath
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn omega_grid(&self) -> &[f64] {
        &self.omega
    }

    pub fn gamma_column(&self, channel: Channel) -> &[f64] {
        match channel {
            Channel::Xx => &self.gamma_xx,
            Channel::Yy => &self.gamma_yy,
        }
    }

    pub fn s_column(&self, channel: Channel) -> &[f64] {
        match channel {
            Channel::Xx => &self.s_xx,
            Channel::Yy => &self.s_yy,
        }
    }

    pub fn window(&self) -> (f64, f64) {
        (self.omega[0], self.omega[self.omega.len() - 1])
    }

    /// Fails with [`Error::WindowTooSmall`] unless [−needed, needed] is covered.
    pub fn check_covers(&self, needed: f64) -> Result<()> {
        let (min, max) = self.window();
        if min > -needed || max < needed {
            return Err(Error::WindowTooSmall { min, max, needed });
        }
        Ok(())
    }

    fn check_window(&self, omega: f64) -> Result<()> {
        let (min, max) = self.window();
        let slack = 1e-9 * (max - min);
        if omega < min - slack || omega > max + slack || !omega.is_finite() {
            return Err(Error::OutsideWindow { omega, min, max });
        }
        Ok(())
    }

    /// Interpolated γ_aa(ω).
    pub fn gamma(&self, channel: Channel, omega: f64) -> Result<f64> {
        self.check_window(omega)?;
        Ok(self.gamma_unchecked(channel, omega))
    }

    /// Interpolated S_aa(ω).
    pub fn lamb(&self, channel: Channel, omega: f64) -> Result<f64> {
        self.check_window(omega)?;
        Ok(self.lamb_unchecked(channel, omega))
    }

    /// Rates and shifts at ±ω for ω ≥ 0 inside the window, sharing the
    /// interpolation lookups between channels.
    pub(crate) fn transitions(&self, omega: f64) -> Transitions {
        let b = &self.bath;
        let boost = (0.5 * b.beta * omega).exp();
        let (gamma_xx, gamma_yy) = match self.frame {
            Frame::WeakCoupling => {
                let up = gamma_weak(omega, b);
                ([up, up / (boost * boost)], [0.0; 2])
            }
            Frame::Polaron => {
                let i = self.balanced_xx.locate(omega);
                let gx = self.balanced_xx.eval_in(i, omega);
                let gy = self.balanced_yy.eval_in(i, omega);
                let lin = gamma_linear(omega, b, self.kappa);
                ([gx * boost, gx / boost], [gy * boost + lin, gy / boost + lin / (boost * boost)])
            }
        };
        let (ip, im) = (self.s_xx_spline.locate(omega), self.s_xx_spline.locate(-omega));
        Transitions {
            gamma_xx,
            gamma_yy,
            s_xx: [self.s_xx_spline.eval_in(ip, omega), self.s_xx_spline.eval_in(im, -omega)],
            s_yy: [self.s_yy_spline.eval_in(ip, omega), self.s_yy_spline.eval_in(im, -omega)],
        }
    }

    pub(crate) fn gamma_unchecked(&self, channel: Channel, omega: f64) -> f64 {
        match (self.frame, channel) {
            (Frame::WeakCoupling, Channel::Xx) => gamma_weak(omega, &self.bath),
            (Frame::WeakCoupling, Channel::Yy) => 0.0,
            (Frame::Polaron, Channel::Xx) => {
                (0.5 * self.bath.beta * omega).exp() * self.balanced_xx.eval(omega.abs())
            }
            (Frame::Polaron, Channel::Yy) => {
                (0.5 * self.bath.beta * omega).exp() * self.balanced_yy.eval(omega.abs())
                    + gamma_linear(omega, &self.bath, self.kappa)
            }
        }
    }

    pub(crate) fn lamb_unchecked(&self, channel: Channel, omega: f64) -> f64 {
        match channel {
            Channel::Xx => self.s_xx_spline.eval(omega),
            Channel::Yy => self.s_yy_spline.eval(omega),
        }
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for k in 0..self.omega.len() {
            w.serialize(TableRow {
                omega: self.omega[k],
                gamma_xx: self.gamma_xx[k],
                gamma_yy: self.gamma_yy[k],
                s_xx: self.s_xx[k],
                s_yy: self.s_yy[k],
            })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    /// Reads a table written by [`RateTable::write_csv`]; the bath parameters and
    /// frame it was built for must be supplied.
    pub fn read_csv<R: std::io::Read>(reader: R, bath: &BathParams, frame: Frame) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        let expected = ["omega", "gamma_xx", "gamma_yy", "s_xx", "s_yy"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(Error::Malformed(format!("rate-table columns must be {expected:?}, got {headers:?}")));
        }
        let mut cols: [Vec<f64>; 5] = Default::default();
        for row in r.deserialize() {
            let row: TableRow = row?;
            for (c, v) in cols.iter_mut().zip([row.omega, row.gamma_xx, row.gamma_yy, row.s_xx, row.s_yy]) {
                if !v.is_finite() {
                    return Err(Error::Malformed("non-finite entry in rate table".into()));
                }
                c.push(v);
            }
        }
        let [omega, gxx, gyy, sxx, syy] = cols;
        Self::from_columns(frame, *bath, omega, gxx, gyy, sxx, syy)
    }

    pub fn load_csv(path: &Path, bath: &BathParams, frame: Frame) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?, bath, frame)
    }
}

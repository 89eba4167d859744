//! Right-hand side of the generalised master equation for the work characteristic
//! operator: adiabatic Lindbladian plus the work term.

use num_complex::Complex64;

use crate::bath::{BathParams, Channel, GridSpec, RateTable};
use crate::error::{Error, Result};
use crate::mat2::Mat2C;
use crate::system::{
    eigenframe, hamiltonian, jump_operators, thermal_state, DriveProtocol, EigenFrame, Frame,
    JumpIndex,
};

/// Default number of uniform rate-table points.
pub const DEFAULT_TABLE_POINTS: usize = 512;
/// Default rate-table half-width relative to the largest protocol splitting.
pub const DEFAULT_TABLE_MARGIN: f64 = 1.5;

/// Everything the generator needs; immutable once built.
#[derive(Debug, Clone)]
pub struct GeneratorContext {
    frame: Frame,
    protocol: DriveProtocol,
    bath: BathParams,
    table: RateTable,
    kappa: f64,
    lamb_shift: bool,
    /// γ_xx(0), the dephasing rate per unit |c|²
    gamma_zero: f64,
}

/// Rate-table grid covering a protocol: symmetric window of `margin` times the
/// largest splitting, refined inside |ω| ≤ 2κΔ.
pub fn protocol_grid(protocol: &DriveProtocol, frame: Frame, kappa: f64, n_points: usize, margin: f64) -> GridSpec {
    let w = margin * protocol.max_splitting(frame.kappa_eff(kappa));
    GridSpec { omega_min: -w, omega_max: w, n_points, dense_halfwidth: 2.0 * kappa * protocol.delta }
}

impl GeneratorContext {
    /// Uses a precomputed table; fails if it does not cover the protocol.
    pub fn new(frame: Frame, protocol: DriveProtocol, bath: BathParams, table: RateTable) -> Result<Self> {
        protocol.validate()?;
        bath.validate()?;
        if table.frame() != frame {
            return Err(Error::invalid("table", format!("built for {:?}, needed {:?}", table.frame(), frame)));
        }
        let tb = table.bath();
        if (tb.alpha, tb.omega_c, tb.beta) != (bath.alpha, bath.omega_c, bath.beta) {
            return Err(Error::invalid("table", "built for different bath parameters"));
        }
        let kappa = table.kappa();
        table.check_covers(protocol.max_splitting(frame.kappa_eff(kappa)))?;
        let gamma_zero = table.gamma_unchecked(Channel::Xx, 0.0).max(0.0);
        Ok(GeneratorContext { frame, protocol, bath, table, kappa, lamb_shift: bath.include_lamb_shift, gamma_zero })
    }

    /// Builds the rate table with the default window and resolution.
    pub fn build(frame: Frame, protocol: DriveProtocol, bath: BathParams) -> Result<Self> {
        Self::build_with(frame, protocol, bath, DEFAULT_TABLE_POINTS, DEFAULT_TABLE_MARGIN)
    }

    pub fn build_with(
        frame: Frame,
        protocol: DriveProtocol,
        bath: BathParams,
        n_points: usize,
        margin: f64,
    ) -> Result<Self> {
        protocol.validate()?;
        bath.validate()?;
        if !(margin >= 1.0) {
            return Err(Error::invalid("margin", format!("must be >= 1, got {margin}")));
        }
        let kappa = crate::bath::kappa(&bath);
        let grid = protocol_grid(&protocol, frame, kappa, n_points, margin);
        let table = RateTable::build(&bath, frame, &grid)?;
        Self::new(frame, protocol, bath, table)
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn protocol(&self) -> &DriveProtocol {
        &self.protocol
    }

    pub fn bath(&self) -> &BathParams {
        &self.bath
    }

    pub fn table(&self) -> &RateTable {
        &self.table
    }

    /// Bath renormalisation κ (also for the weak-coupling frame, where it is unused).
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn kappa_eff(&self) -> f64 {
        self.frame.kappa_eff(self.kappa)
    }

    pub fn lamb_shift(&self) -> bool {
        self.lamb_shift
    }

    /// Same context with the Lamb shift switched on or off.
    pub fn with_lamb_shift(mut self, on: bool) -> Self {
        self.lamb_shift = on;
        self
    }

    /// Same context with a different protocol; the table must still cover it.
    pub fn with_protocol(&self, protocol: DriveProtocol) -> Result<Self> {
        protocol.validate()?;
        self.table.check_covers(protocol.max_splitting(self.kappa_eff()))?;
        Ok(GeneratorContext { protocol, ..self.clone() })
    }

    pub fn eigenframe(&self, t: f64) -> EigenFrame {
        eigenframe(t, &self.protocol, self.frame, self.kappa)
    }

    pub fn hamiltonian(&self, t: f64) -> Mat2C {
        hamiltonian(t, &self.protocol, self.frame, self.kappa)
    }

    /// Frozen generator at time `t`.
    pub fn at(&self, t: f64) -> Result<Instant> {
        let eig = self.eigenframe(t);
        let (min, max) = self.table.window();
        if eig.omega > max.min(-min) * (1.0 + 1e-9) {
            return Err(Error::OutsideWindow { omega: eig.omega, min, max });
        }
        let w = eig.omega;
        let quarter = 0.25 * self.protocol.delta * self.protocol.delta;
        let (sin, cos) = eig.theta.sin_cos();
        // |c_a|² of the transition operators, per channel
        let (cx, cy) = match self.frame {
            Frame::Polaron => (quarter * cos * cos, quarter),
            Frame::WeakCoupling => (sin * sin, 0.0),
        };
        let r = self.table.transitions(w);
        let mut down = cx * r.gamma_xx[0].max(0.0);
        let mut up = cx * r.gamma_xx[1].max(0.0);
        let mut dephasing = 0.0;
        let mut split = w;
        if self.frame == Frame::Polaron {
            down += cy * r.gamma_yy[0].max(0.0);
            up += cy * r.gamma_yy[1].max(0.0);
            dephasing = quarter * sin * sin * self.gamma_zero;
        }
        if self.lamb_shift {
            // the dephasing part of H_LS is proportional to the identity
            split += cx * (r.s_xx[0] - r.s_xx[1]) + cy * (r.s_yy[0] - r.s_yy[1]);
        }
        // θ ∈ [0, π], so both half-angle functions are non-negative
        let ch = (0.5 * (1.0 + cos)).sqrt();
        let sh = if cos > 0.0 { 0.5 * sin / ch } else { (0.5 * (1.0 - cos)).sqrt() };
        Ok(Instant { t, eig, cos_half: ch, sin_half: sh, split, down, up, dephasing })
    }

    /// Right-hand side L_t[K] + M(t, η)K.
    pub fn rhs(&self, t: f64, k: &Mat2C, eta: Complex64) -> Result<Mat2C> {
        Ok(self.at(t)?.rhs(k, eta))
    }

    pub fn lindbladian_apply(&self, t: f64, x: &Mat2C) -> Result<Mat2C> {
        Ok(self.at(t)?.lindbladian(x))
    }

    /// Instantaneous Gibbs state e^{−βH(t)}/Z(t).
    pub fn equilibrium_state(&self, t: f64) -> Mat2C {
        thermal_state(&self.eigenframe(t), self.bath.beta)
    }

    /// All rates γ_{a,n}(t) with their labels.
    pub fn rates(&self, t: f64) -> Vec<(Channel, JumpIndex, f64)> {
        let eig = self.eigenframe(t);
        jump_operators(self.frame, &eig, self.protocol.delta)
            .iter()
            .map(|j| (j.channel, j.index, self.table.gamma_unchecked(j.channel, j.frequency)))
            .collect()
    }
}

/// Generator frozen at one time, stored in the instantaneous eigenbasis where
/// the secular dissipator only couples populations to populations.
#[derive(Debug, Clone)]
pub struct Instant {
    pub t: f64,
    pub eig: EigenFrame,
    cos_half: f64,
    sin_half: f64,
    /// ω plus the Lamb-shift correction to the splitting
    split: f64,
    /// total rates ε₊ → ε₋, ε₋ → ε₊ and pure dephasing
    down: f64,
    up: f64,
    dephasing: f64,
}

/// Rᵀ X R for the real rotation R = [[c, −s], [s, c]].
fn rotate(x: &Mat2C, c: f64, s: f64) -> Mat2C {
    let m = &x.0;
    let z = [[m[0][0] * c + m[0][1] * s, m[0][1] * c - m[0][0] * s], [m[1][0] * c + m[1][1] * s, m[1][1] * c - m[1][0] * s]];
    Mat2C([
        [z[0][0] * c + z[1][0] * s, z[0][1] * c + z[1][1] * s],
        [z[1][0] * c - z[0][0] * s, z[1][1] * c - z[0][1] * s],
    ])
}

impl Instant {
    fn to_eigen(&self, x: &Mat2C) -> Mat2C {
        rotate(x, self.cos_half, self.sin_half)
    }

    fn from_eigen(&self, y: &Mat2C) -> Mat2C {
        rotate(y, self.cos_half, -self.sin_half)
    }

    fn lindbladian_eigen(&self, y: &Mat2C) -> Mat2C {
        let m = &y.0;
        let flow = self.down * m[0][0] - self.up * m[1][1];
        let decay = -0.5 * (self.down + self.up) - 2.0 * self.dephasing;
        let coh = Complex64::new(decay, -self.split);
        Mat2C([[-flow, coh * m[0][1]], [coh.conj() * m[1][0], flow]])
    }

    pub fn lindbladian(&self, x: &Mat2C) -> Mat2C {
        self.from_eigen(&self.lindbladian_eigen(&self.to_eigen(x)))
    }

    pub fn rhs(&self, k: &Mat2C, eta: Complex64) -> Mat2C {
        let y = self.to_eigen(k);
        let mut out = self.lindbladian_eigen(&y);
        if eta != Complex64::new(0.0, 0.0) {
            out += work_generator_eigen(&self.eig, eta) * y;
        }
        self.from_eigen(&out)
    }

    /// Largest total rate, a scale for tolerances.
    pub fn max_rate(&self) -> f64 {
        self.down.max(self.up).max(self.dephasing)
    }
}

/// Work generator in the instantaneous eigenbasis, where n·σ → σ_z and m·σ → σ_x.
fn work_generator_eigen(e: &EigenFrame, eta: Complex64) -> Mat2C {
    let i = Complex64::i();
    let half = eta * (0.5 * e.omega);
    let (s, c) = half.re.sin_cos();
    let (sh, ch) = if half.im == 0.0 {
        (Complex64::new(s, 0.0), Complex64::new(c, 0.0))
    } else {
        let (u, v) = (half.im.cosh(), half.im.sinh());
        (Complex64::new(s * u, c * v), Complex64::new(c * u, -s * v))
    };
    let a = i * eta * (0.5 * e.domega_dt);
    let b = i * e.dtheta_dt * sh * ch;
    let d = -i * e.dtheta_dt * sh * sh;
    Mat2C([[a, b - i * d], [b + i * d, -a]])
}

//! Two-level system: drive protocol, instantaneous eigenbasis, Hamiltonians, jump
//! operators, the work generator, free energies and validity diagnostics.

use arrayvec::ArrayVec;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bath::{BathParams, Channel};
use crate::error::{Error, Result};
use crate::mat2::Mat2C;

/// Frame of the master equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Frame {
    /// κ-renormalised tunnelling, polaron dissipator.
    Polaron,
    /// Bare tunnelling, standard weak-coupling dissipator.
    WeakCoupling,
}

impl Frame {
    pub fn kappa_eff(self, kappa: f64) -> f64 {
        match self {
            Frame::Polaron => kappa,
            Frame::WeakCoupling => 1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Frame::Polaron => "PME",
            Frame::WeakCoupling => "WCME",
        }
    }
}

/// Linear Landau–Zener ramp ω₀(t) = νt over [t_i, t_f] with tunnelling Δ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveProtocol {
    pub nu: f64,
    pub t_i: f64,
    pub t_f: f64,
    pub delta: f64,
}

impl DriveProtocol {
    pub fn new(nu: f64, t_i: f64, t_f: f64, delta: f64) -> Result<Self> {
        let p = DriveProtocol { nu, t_i, t_f, delta };
        p.validate()?;
        Ok(p)
    }

    /// ν = 0 is accepted: it describes a static Hamiltonian.
    pub fn validate(&self) -> Result<()> {
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return Err(Error::invalid("nu", format!("must be >= 0, got {}", self.nu)));
        }
        if !(self.t_i < self.t_f) || !self.t_i.is_finite() || !self.t_f.is_finite() {
            return Err(Error::invalid("t_f", format!("need t_i < t_f, got [{}, {}]", self.t_i, self.t_f)));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::invalid("delta", format!("must be > 0, got {}", self.delta)));
        }
        Ok(())
    }

    pub fn omega0(&self, t: f64) -> f64 {
        self.nu * t
    }

    pub fn duration(&self) -> f64 {
        self.t_f - self.t_i
    }

    /// Largest transition frequency reached over the protocol.
    pub fn max_splitting(&self, kappa_eff: f64) -> f64 {
        let a = kappa_eff * self.delta;
        let w0 = self.omega0(self.t_i).abs().max(self.omega0(self.t_f).abs());
        (w0 * w0 + a * a).sqrt()
    }

    /// Adiabatic parameter κΔν / (2ω(t)³) of the ramp at time `t`.
    pub fn adiabatic_parameter(&self, t: f64, kappa_eff: f64) -> f64 {
        let a = kappa_eff * self.delta;
        let w0 = self.omega0(t);
        a * self.nu / (2.0 * (w0 * w0 + a * a).powf(1.5))
    }
}

/// Instantaneous eigenbasis data: mixing angle, splitting and their rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenFrame {
    pub theta: f64,
    pub omega: f64,
    pub dtheta_dt: f64,
    pub domega_dt: f64,
}

impl EigenFrame {
    /// |ε₊⟩ = (cos θ/2, sin θ/2)
    pub fn plus(&self) -> [Complex64; 2] {
        let (s, c) = (0.5 * self.theta).sin_cos();
        [c.into(), s.into()]
    }

    /// |ε₋⟩ = (−sin θ/2, cos θ/2)
    pub fn minus(&self) -> [Complex64; 2] {
        let (s, c) = (0.5 * self.theta).sin_cos();
        [(-s).into(), c.into()]
    }
}

pub fn eigenframe(t: f64, protocol: &DriveProtocol, frame: Frame, kappa: f64) -> EigenFrame {
    let a = frame.kappa_eff(kappa) * protocol.delta;
    let w0 = protocol.omega0(t);
    let omega = w0.hypot(a);
    EigenFrame {
        theta: a.atan2(w0),
        omega,
        dtheta_dt: -a * protocol.nu / (omega * omega),
        domega_dt: protocol.nu * protocol.nu * t / omega,
    }
}

/// ½ω₀(t)σ_z + ½κ_eff Δ σ_x
pub fn hamiltonian(t: f64, protocol: &DriveProtocol, frame: Frame, kappa: f64) -> Mat2C {
    let a = frame.kappa_eff(kappa) * protocol.delta;
    let w0 = protocol.omega0(t);
    Mat2C::from_real(0.5 * w0, 0.5 * a, 0.5 * a, -0.5 * w0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum JumpIndex {
    Plus,
    Minus,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpOperator {
    pub channel: Channel,
    pub index: JumpIndex,
    pub op: Mat2C,
    /// Frequency at which the rate is read: −ω for `Plus`, +ω for `Minus`, 0 for `Zero`.
    pub frequency: f64,
}

/// Eigenoperators of the system–bath coupling in the instantaneous eigenbasis.
///
/// Polaron frame: A_{x,±} = (Δ/2)cosθ|ε±⟩⟨ε∓|, A_{x,0} = (Δ/2)sinθ(|ε₊⟩⟨ε₊| − |ε₋⟩⟨ε₋|),
/// A_{y,+} = −i(Δ/2)|ε₊⟩⟨ε₋| and its adjoint. Weak-coupling frame: A₊ = sinθ|ε₊⟩⟨ε₋|
/// and its adjoint, reported on the xx channel.
pub fn jump_operators(frame: Frame, eig: &EigenFrame, delta: f64) -> ArrayVec<JumpOperator, 5> {
    let up = Mat2C::outer(eig.plus(), eig.minus());
    let down = up.adjoint();
    let w = eig.omega;
    let mut out = ArrayVec::new();
    let mut push = |channel, index, op, frequency| out.push(JumpOperator { channel, index, op, frequency });
    match frame {
        Frame::Polaron => {
            let half = 0.5 * delta;
            let (s, c) = eig.theta.sin_cos();
            let pz = Mat2C::outer(eig.plus(), eig.plus()) - Mat2C::outer(eig.minus(), eig.minus());
            push(Channel::Xx, JumpIndex::Plus, up * (half * c), -w);
            push(Channel::Xx, JumpIndex::Minus, down * (half * c), w);
            push(Channel::Xx, JumpIndex::Zero, pz * (half * s), 0.0);
            push(Channel::Yy, JumpIndex::Plus, up * Complex64::new(0.0, -half), -w);
            push(Channel::Yy, JumpIndex::Minus, down * Complex64::new(0.0, half), w);
        }
        Frame::WeakCoupling => {
            let s = eig.theta.sin();
            push(Channel::Xx, JumpIndex::Plus, up * s, -w);
            push(Channel::Xx, JumpIndex::Minus, down * s, w);
        }
    }
    out
}

/// Work generator M(t, η) = [∂_t e^{iηH(t)}] e^{−iηH(t)}.
///
/// With e^{iηH} = cos(ηω/2) + i sin(ηω/2) n·σ, n = (sin θ, 0, cos θ) and
/// m = ∂_θ n = (cos θ, 0, −sin θ):
/// M = i(ηω̇/2) n·σ + i(θ̇/2) sin(ηω) m·σ − iθ̇ sin²(ηω/2) σ_y.
pub fn work_generator(t: f64, eta: Complex64, protocol: &DriveProtocol, frame: Frame, kappa: f64) -> Mat2C {
    let e = eigenframe(t, protocol, frame, kappa);
    work_generator_from(&e, eta)
}

pub(crate) fn work_generator_from(e: &EigenFrame, eta: Complex64) -> Mat2C {
    let i = Complex64::i();
    let (s, c) = e.theta.sin_cos();
    let x = eta * e.omega;
    let a = i * eta * (0.5 * e.domega_dt);
    let b = i * (0.5 * e.dtheta_dt) * x.sin();
    let half = (0.5 * x).sin();
    let d = -i * e.dtheta_dt * half * half;
    // a n·σ + b m·σ + d σ_y
    let zc = a * c - b * s;
    let xc = a * s + b * c;
    Mat2C::new(zc, xc - i * d, xc + i * d, -zc)
}

/// Polaron system free energy −(1/β) ln(2 cosh(βω(t)/2)).
pub fn free_energy_ps(t: f64, protocol: &DriveProtocol, kappa: f64, beta: f64) -> f64 {
    let w = eigenframe(t, protocol, Frame::Polaron, kappa).omega;
    -0.5 * w - (-beta * w).exp().ln_1p() / beta
}

/// Gibbs state e^{−βH}/Z of the instantaneous Hamiltonian described by `eig`.
pub fn thermal_state(eig: &EigenFrame, beta: f64) -> Mat2C {
    // p₊ = 1/(1 + e^{βω}), written to stay finite for any β ≥ 0
    let p_plus = 1.0 / (1.0 + (beta * eig.omega).exp());
    let p_minus = 1.0 - p_plus;
    Mat2C::outer(eig.plus(), eig.plus()) * p_plus + Mat2C::outer(eig.minus(), eig.minus()) * p_minus
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Warn,
    Fail,
}

impl CheckStatus {
    pub fn from_ratio(r: f64) -> Self {
        if r < 0.1 {
            CheckStatus::Pass
        } else if r < 0.5 {
            CheckStatus::Warn
        } else {
            CheckStatus::Fail
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityCheck {
    pub name: String,
    pub value: f64,
    pub status: CheckStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub kappa: f64,
    pub g: f64,
    pub checks: Vec<ValidityCheck>,
}

impl ValidityReport {
    pub fn worst(&self) -> CheckStatus {
        self.checks.iter().map(|c| c.status).max_by_key(|s| *s as u8).unwrap_or(CheckStatus::Pass)
    }
}

/// Perturbation parameter g = (Δ/2)√((1 + κ⁴)/2) and the ratios that must be small
/// for the polaron master equation: g/ω_c, ν/(2Δ²κ²), ν/(2ω_c) and β²g².
pub fn validity_report(protocol: &DriveProtocol, bath: &BathParams, kappa: f64) -> ValidityReport {
    let d = protocol.delta;
    let g = 0.5 * d * ((1.0 + kappa.powi(4)) / 2.0).sqrt();
    let ratios = [
        ("g/omega_c", g / bath.omega_c),
        ("nu/(2 delta^2 kappa^2)", protocol.nu / (2.0 * d * d * kappa * kappa)),
        ("nu/(2 omega_c)", protocol.nu / (2.0 * bath.omega_c)),
        ("beta^2 g^2", bath.beta * bath.beta * g * g),
    ];
    ValidityReport {
        kappa,
        g,
        checks: ratios
            .iter()
            .map(|&(name, value)| ValidityCheck { name: name.into(), value, status: CheckStatus::from_ratio(value) })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn lz(nu: f64) -> DriveProtocol {
        DriveProtocol::new(nu, -100.0, 100.0, 1.0).unwrap()
    }

    /// e^{iηH} by the 2×2 spectral formula, computed from the matrix itself.
    fn expm_i_eta(h: &Mat2C, eta: Complex64) -> Mat2C {
        // H traceless: H² = r² 1 with r² = −det H
        let r = (-h.det()).sqrt();
        let arg = eta * r;
        let sinc = if r.norm() < 1e-300 { eta } else { arg.sin() / r };
        Mat2C::identity() * arg.cos() + *h * (Complex64::i() * sinc)
    }

    #[test]
    fn avoided_crossing_geometry() {
        let e = eigenframe(0.0, &lz(0.1), Frame::Polaron, 0.44);
        assert_relative_eq!(e.theta, PI / 2.0, epsilon = 1e-15);
        assert_relative_eq!(e.omega, 0.44, epsilon = 1e-15);
        let far = eigenframe(-100.0, &lz(0.1), Frame::Polaron, 0.44);
        assert_relative_eq!(far.omega, (100.0f64 + 0.1936).sqrt(), epsilon = 1e-12);
        assert_relative_eq!(far.omega, 10.00968, epsilon = 1e-5);
        assert!(eigenframe(1e9, &lz(0.1), Frame::Polaron, 0.44).theta < 1e-8);
        assert!(PI - eigenframe(-1e9, &lz(0.1), Frame::Polaron, 0.44).theta < 1e-8);
        assert_eq!(eigenframe(3.0, &lz(0.1), Frame::WeakCoupling, 0.44).omega, 0.3f64.hypot(1.0));
    }

    #[test]
    fn hamiltonian_spectrum() {
        let h = hamiltonian(0.0, &lz(0.1), Frame::Polaron, 1.0);
        assert_eq!(h, Mat2C::sigma_x() * 0.5);
        let h = hamiltonian(-100.0, &lz(0.1), Frame::Polaron, 0.44);
        assert_eq!(h.trace(), Complex64::new(0.0, 0.0));
        let ev = h.hermitian_eigenvalues();
        assert_relative_eq!(ev[1], 5.00484, epsilon = 1e-5);
        assert_relative_eq!(ev[0], -ev[1], epsilon = 1e-14);
    }

    #[test]
    fn eigenvectors_diagonalise_the_hamiltonian() {
        let p = lz(0.1);
        for t in [-100.0, -3.0, 0.0, 0.7, 100.0] {
            let e = eigenframe(t, &p, Frame::Polaron, 0.44);
            let h = hamiltonian(t, &p, Frame::Polaron, 0.44);
            let hp = h.apply(e.plus());
            let hm = h.apply(e.minus());
            for k in 0..2 {
                assert!((hp[k] - e.plus()[k] * (0.5 * e.omega)).norm() < 1e-12);
                assert!((hm[k] + e.minus()[k] * (0.5 * e.omega)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn eigenvectors_are_continuous_through_the_crossing() {
        let p = lz(0.1);
        let h = 1e-3;
        let mut t = -5.0;
        while t < 5.0 {
            let a = eigenframe(t, &p, Frame::Polaron, 0.44);
            let b = eigenframe(t + h, &p, Frame::Polaron, 0.44);
            let dot = |u: [Complex64; 2], v: [Complex64; 2]| u[0].conj() * v[0] + u[1].conj() * v[1];
            assert!(dot(a.plus(), b.plus()).re > 0.0);
            assert!(dot(a.minus(), b.minus()).re > 0.0);
            t += h;
        }
    }

    #[test]
    fn jump_operators_at_the_crossing() {
        let e = eigenframe(0.0, &lz(0.1), Frame::Polaron, 0.44);
        let ops = jump_operators(Frame::Polaron, &e, 1.0);
        assert_eq!(ops.len(), 5);
        assert!(ops[0].op.max_abs() < 1e-16 && ops[1].op.max_abs() < 1e-16);
        // (Δ/2)(Π₊ − Π₋) has eigenvalues ±Δ/2
        let ev = ops[2].op.hermitian_eigenvalues();
        assert_relative_eq!(ev[1], 0.5, epsilon = 1e-15);
        let wc = jump_operators(Frame::WeakCoupling, &eigenframe(0.0, &lz(0.1), Frame::WeakCoupling, 0.44), 1.0);
        assert_eq!(wc.len(), 2);
        let bare = Mat2C::outer(e.plus(), e.minus());
        for r in 0..2 {
            for c in 0..2 {
                assert_relative_eq!(wc[0].op.get(r, c).norm(), bare.get(r, c).norm(), epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn jump_operator_pairs_are_adjoint() {
        for t in [-50.0, -0.3, 0.0, 2.0] {
            for frame in [Frame::Polaron, Frame::WeakCoupling] {
                let e = eigenframe(t, &lz(0.1), frame, 0.44);
                let ops = jump_operators(frame, &e, 1.0);
                for ch in Channel::ALL {
                    let find = |ix| ops.iter().find(|o| o.channel == ch && o.index == ix);
                    if let (Some(p), Some(m)) = (find(JumpIndex::Plus), find(JumpIndex::Minus)) {
                        assert!((p.op - m.op.adjoint()).max_abs() < 1e-15);
                        assert_eq!(p.frequency, -m.frequency);
                    }
                }
            }
        }
    }

    #[test]
    fn work_generator_trivial_cases() {
        let p = lz(0.1);
        assert_eq!(work_generator(3.0, Complex64::new(0.0, 0.0), &p, Frame::Polaron, 0.44), Mat2C::zero());
        let still = lz(0.0);
        for eta in [Complex64::new(2.0, 0.0), Complex64::new(0.0, 1.0)] {
            assert!(work_generator(-7.0, eta, &still, Frame::Polaron, 0.44).max_abs() < 1e-16);
        }
    }

    proptest! {
        #[test]
        fn work_generator_matches_finite_difference(
            t in -100.0f64..100.0,
            re in -20.0f64..20.0,
            im in -1.0f64..1.0,
            kappa in 0.2f64..1.0,
        ) {
            let p = lz(0.1);
            let eta = Complex64::new(re, im);
            // fourth-order stencil keeps roundoff in e^{±iηH} well below the tolerance
            let d = 1e-3;
            let u = |s: f64| expm_i_eta(&hamiltonian(s, &p, Frame::Polaron, kappa), eta);
            let du = ((u(t + d) - u(t - d)) * 8.0 - (u(t + 2.0 * d) - u(t - 2.0 * d))) * (1.0 / (12.0 * d));
            let fd = du * expm_i_eta(&hamiltonian(t, &p, Frame::Polaron, kappa), -eta);
            let m = work_generator(t, eta, &p, Frame::Polaron, kappa);
            prop_assert!((fd - m).max_abs() < 1e-6, "diff {}", (fd - m).max_abs());
        }

        #[test]
        fn hamiltonian_is_hermitian(t in -200.0f64..200.0, nu in 0.0f64..2.0) {
            let h = hamiltonian(t, &lz(nu), Frame::Polaron, 0.5);
            prop_assert_eq!(h, h.adjoint());
        }
    }

    #[test]
    fn free_energy_values() {
        let p = lz(0.1);
        let k = 0.44;
        assert_relative_eq!(free_energy_ps(100.0, &p, k, 1.0), free_energy_ps(-100.0, &p, k, 1.0), epsilon = 0.0);
        let w = (100.0f64 + k * k).sqrt();
        assert_relative_eq!(free_energy_ps(100.0, &p, k, 1.0), -0.5 * w - (1.0 + (-w).exp()).ln(), epsilon = 1e-14);
        assert_relative_eq!(free_energy_ps(100.0, &p, k, 1.0), -5.00489, epsilon = 1e-5);
        assert_relative_eq!(free_energy_ps(100.0, &p, k, 1e6), -0.5 * w, epsilon = 1e-12);
    }

    #[test]
    fn validity_report_bands() {
        let p = lz(0.1);
        let bath = BathParams::new(0.4, 10.0, 1.0).unwrap();
        let r = validity_report(&p, &bath, 0.44);
        let adiabatic = &r.checks[1];
        assert_relative_eq!(adiabatic.value, 0.1 / (2.0 * 0.44 * 0.44), epsilon = 1e-14);
        assert_eq!(adiabatic.status, CheckStatus::Warn);
        let r = validity_report(&p, &BathParams::new(0.0, 10.0, 1.0).unwrap(), 1.0);
        assert_relative_eq!(r.checks[0].value, 0.05, epsilon = 1e-15);
        assert_eq!(r.checks[0].status, CheckStatus::Pass);
        let r = validity_report(&lz(0.0), &bath, 0.44);
        assert_eq!(r.checks[1].value, 0.0);
        assert_eq!(CheckStatus::from_ratio(0.7), CheckStatus::Fail);
    }

    #[test]
    fn adiabatic_parameter_peaks_at_the_crossing() {
        let p = lz(0.1);
        let k = 0.44;
        let peak = p.adiabatic_parameter(0.0, k);
        assert_relative_eq!(peak, 0.1 / (2.0 * k * k), epsilon = 1e-14);
        for i in 1..1000 {
            let t = -100.0 + 0.2 * i as f64;
            assert!(p.adiabatic_parameter(t, k) <= peak);
        }
    }
}

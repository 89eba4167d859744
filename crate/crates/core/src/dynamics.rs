//! Population dynamics of the driven two-level system under the polaron and
//! weak-coupling master equations and the closed system, with comparison
//! against externally computed reference trajectories.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bath::BathParams;
use crate::error::{Error, Result};
use crate::evolve::{evolve_density, validate_density};
use crate::generator::GeneratorContext;
use crate::mat2::Mat2C;
use crate::ode::{SolverOptions, Stepper};
use crate::system::{hamiltonian, DriveProtocol, Frame};
use crate::Complex64;

/// Allowed overshoot of |⟨σ_z⟩| beyond 1.
pub const SIGMA_Z_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Pme,
    Wcme,
    Closed,
    External,
}

impl Source {
    pub fn label(self) -> &'static str {
        match self {
            Source::Pme => "PME",
            Source::Wcme => "WCME",
            Source::Closed => "closed",
            Source::External => "external",
        }
    }
}

/// ⟨σ_z⟩(t) in the diabatic basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub source: Source,
    pub times: Vec<f64>,
    pub sigma_z: Vec<f64>,
}

impl Trajectory {
    pub fn new(source: Source, times: Vec<f64>, sigma_z: Vec<f64>) -> Result<Self> {
        let t = Trajectory { source, times, sigma_z };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.times.len() != self.sigma_z.len() || self.times.is_empty() {
            return Err(Error::Malformed("trajectory needs matching, non-empty time and sigma_z columns".into()));
        }
        if let Some(k) = self.times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Malformed(format!("times not strictly increasing at row {}", k + 1)));
        }
        if let Some(s) = self.sigma_z.iter().find(|s| !(s.abs() <= 1.0 + SIGMA_Z_SLACK)) {
            return Err(Error::Malformed(format!("|sigma_z| = {} exceeds 1", s.abs())));
        }
        Ok(())
    }

    /// Linear interpolation onto `times`, which must lie inside the covered range.
    pub fn resample(&self, times: &[f64]) -> Result<Trajectory> {
        let (lo, hi) = (self.times[0], self.times[self.times.len() - 1]);
        let mut out = Vec::with_capacity(times.len());
        for &t in times {
            if t < lo || t > hi {
                return Err(Error::invalid("times", format!("{t} outside the reference range [{lo}, {hi}]")));
            }
            let j = self.times.partition_point(|&s| s <= t).clamp(1, self.times.len() - 1);
            let (t0, t1) = (self.times[j - 1], self.times[j]);
            let f = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
            out.push((1.0 - f) * self.sigma_z[j - 1] + f * self.sigma_z[j]);
        }
        Trajectory::new(self.source, times.to_vec(), out)
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for (t, s) in self.times.iter().zip(&self.sigma_z) {
            wr.serialize(Row { t: *t, sigma_z: *s })?;
        }
        wr.flush()?;
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    t: f64,
    sigma_z: f64,
}

/// Reads a two-column (t, sigma_z) CSV.
pub fn read_reference<R: std::io::Read>(r: R) -> Result<Trajectory> {
    let mut rd = csv::Reader::from_reader(r);
    let mut times = Vec::new();
    let mut sz = Vec::new();
    for row in rd.deserialize() {
        let row: Row = row?;
        times.push(row.t);
        sz.push(row.sigma_z);
    }
    Trajectory::new(Source::External, times, sz)
}

/// Loads an external trajectory and resamples it onto `times`.
pub fn import_reference(path: &Path, times: &[f64]) -> Result<Trajectory> {
    read_reference(std::fs::File::open(path)?)?.resample(times)
}

/// ρ(t) under the bare Hamiltonian (tunnelling Δ, no bath).
fn closed_density(protocol: &DriveProtocol, rho0: Mat2C, times: &[f64], opts: &SolverOptions) -> Result<Vec<Mat2C>> {
    let i = Complex64::i();
    let f = |t, r: &Mat2C| Ok(hamiltonian(t, protocol, Frame::WeakCoupling, 1.0).commutator(r) * (-i));
    let o = SolverOptions { max_step: opts.max_step.min(0.1), ..*opts };
    let mut s = Stepper::new(f, protocol.t_i, rho0, o)?;
    times.iter().map(|&t| s.advance_to(t)).collect()
}

/// One trajectory from `rho0` at t_i, sampled at `times`.
pub fn simulate(
    source: Source,
    protocol: &DriveProtocol,
    bath: &BathParams,
    rho0: Mat2C,
    times: &[f64],
    opts: &SolverOptions,
) -> Result<Trajectory> {
    validate_density(&rho0, 1e-10)?;
    let states: Vec<Mat2C> = match source {
        Source::Pme | Source::Wcme => {
            let frame = if source == Source::Pme { Frame::Polaron } else { Frame::WeakCoupling };
            let ctx = GeneratorContext::build(frame, *protocol, *bath)?;
            evolve_density(&ctx, opts, rho0, times)?.into_iter().map(|p| p.rho).collect()
        }
        Source::Closed => closed_density(protocol, rho0, times, opts)?,
        Source::External => return Err(Error::invalid("source", "external trajectories are imported, not simulated")),
    };
    for (t, r) in times.iter().zip(&states) {
        let tr = r.trace();
        if (tr - 1.0).norm() > 1e-8 {
            return Err(Error::Domain(format!("trace drifted to {tr} at t = {t}")));
        }
    }
    let sz = states.iter().map(|r| (r.get(0, 0) - r.get(1, 1)).re).collect();
    Trajectory::new(source, times.to_vec(), sz)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDeviation {
    pub a: Source,
    pub b: Source,
    pub max_abs: f64,
    /// Time at which the largest deviation occurs.
    pub at: f64,
}

/// Trajectories on a common grid with their pairwise maximum deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub protocol: DriveProtocol,
    pub bath: BathParams,
    pub times: Vec<f64>,
    pub trajectories: Vec<Trajectory>,
    pub deviations: Vec<PairDeviation>,
    pub version: String,
}

impl Comparison {
    fn refresh(&mut self) {
        let mut dev = Vec::new();
        for (i, a) in self.trajectories.iter().enumerate() {
            for b in &self.trajectories[i + 1..] {
                let (k, d) = a
                    .sigma_z
                    .iter()
                    .zip(&b.sigma_z)
                    .map(|(x, y)| (x - y).abs())
                    .enumerate()
                    .fold((0, 0.0), |m, (k, d)| if d > m.1 { (k, d) } else { m });
                dev.push(PairDeviation { a: a.source, b: b.source, max_abs: d, at: self.times[k] });
            }
        }
        self.deviations = dev;
    }

    /// Adds a trajectory already sampled on the comparison grid.
    pub fn add(&mut self, traj: Trajectory) -> Result<()> {
        if traj.times != self.times {
            return Err(Error::invalid("trajectory", "not sampled on the comparison grid"));
        }
        self.trajectories.push(traj);
        self.refresh();
        Ok(())
    }

    pub fn deviation(&self, a: Source, b: Source) -> Option<f64> {
        self.deviations.iter().find(|d| (d.a, d.b) == (a, b) || (d.a, d.b) == (b, a)).map(|d| d.max_abs)
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        serde_json::to_writer_pretty(std::fs::File::create(path)?, self)?;
        Ok(())
    }
}

/// Simulates every requested source concurrently; the output keeps the request order.
pub fn run_comparison(
    protocol: &DriveProtocol,
    bath: &BathParams,
    rho0: Mat2C,
    sources: &[Source],
    times: &[f64],
    opts: &SolverOptions,
) -> Result<Comparison> {
    let trajectories = sources
        .par_iter()
        .map(|&s| simulate(s, protocol, bath, rho0, times, opts))
        .collect::<Result<Vec<_>>>()?;
    let mut c = Comparison {
        protocol: *protocol,
        bath: *bath,
        times: times.to_vec(),
        trajectories,
        deviations: Vec::new(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    c.refresh();
    Ok(c)
}

/// `n` equally spaced times spanning the protocol.
pub fn uniform_times(protocol: &DriveProtocol, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|k| protocol.t_i + protocol.duration() * k as f64 / (n - 1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_trajectories() {
        assert!(Trajectory::new(Source::External, vec![0.0, 1.0, 0.5], vec![0.0; 3]).is_err());
        assert!(Trajectory::new(Source::External, vec![0.0, 1.0], vec![0.0, 1.1]).is_err());
        assert!(Trajectory::new(Source::External, vec![0.0, 1.0], vec![0.0, 1.0 + 1e-9]).is_ok());
    }

    #[test]
    fn reference_csv_is_resampled() {
        let text = "t,sigma_z\n0,1\n1,0\n3,-1\n";
        let r = read_reference(text.as_bytes()).unwrap();
        assert_eq!(r.times.len(), 3);
        let s = r.resample(&[0.0, 0.5, 2.0, 3.0]).unwrap();
        assert_eq!(s.sigma_z, vec![1.0, 0.5, -0.5, -1.0]);
        assert!(r.resample(&[3.5]).is_err());
        assert!(read_reference("t,sigma_z\n0,1\n0,0\n".as_bytes()).is_err());
        assert!(read_reference("t\n0\n".as_bytes()).is_err());
    }

    #[test]
    fn closed_system_conserves_purity() {
        let p = DriveProtocol::new(0.5, -10.0, 10.0, 1.0).unwrap();
        let times = uniform_times(&p, 11);
        let rho0 = Mat2C::from_real(1.0, 0.0, 0.0, 0.0);
        let states = closed_density(&p, rho0, &times, &SolverOptions::default()).unwrap();
        for r in states {
            let purity = (r * r).trace().re;
            assert!((purity - 1.0).abs() < 1e-7);
        }
    }
}

//! Time integration of the work characteristic operator and of the density matrix,
//! and sampling of the characteristic function over a counting-field grid.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bath::BathParams;
use crate::error::{Error, Result};
use crate::generator::GeneratorContext;
use crate::mat2::Mat2C;
use crate::ode::{SolverOptions, Stepper};
use crate::system::{DriveProtocol, Frame};

/// Prefactor c of the counting-field step cap c/(1 + |η|ν).
pub const PHASE_STEP_FACTOR: f64 = 0.1;
/// Allowed excess of |Φ(η)| over 1.
pub const PHI_BOUND_SLACK: f64 = 1e-6;
/// Neighbouring η points integrated together on one step sequence by [`sample_cf`].
pub const CF_BATCH: usize = 16;

fn tag_eta(e: Error, eta: Complex64) -> Error {
    match e {
        Error::StepUnderflow { t, .. } => Error::StepUnderflow { t, eta },
        Error::NonFinite { t, .. } => Error::NonFinite { t, eta },
        other => other,
    }
}

/// Solver options with the step additionally capped to resolve the counting-field phase.
pub fn capped_options(eta: Complex64, ctx: &GeneratorContext, opts: &SolverOptions) -> SolverOptions {
    let cap = PHASE_STEP_FACTOR / (1.0 + eta.norm() * ctx.protocol().nu);
    SolverOptions { max_step: opts.max_step.min(cap), h0: opts.h0.min(cap), ..*opts }
}

/// K(t_f, η) from K(t_i, η) = π_eq(t_i).
pub fn integrate_wco(eta: Complex64, ctx: &GeneratorContext, opts: &SolverOptions) -> Result<Mat2C> {
    let p = ctx.protocol();
    let k0 = ctx.equilibrium_state(p.t_i);
    let o = capped_options(eta, ctx, opts);
    let mut s = Stepper::new(|t, k: &Mat2C| Ok(ctx.at(t)?.rhs(k, eta)), p.t_i, k0, o)?;
    let k = s.advance_to(p.t_f).map_err(|e| tag_eta(e, eta))?;
    let (acc, rej) = s.stats();
    log::trace!("eta = {eta}: {acc} steps, {rej} rejected");
    Ok(k)
}

/// K(t_f, η) for several η at once. The members share one step sequence, capped
/// for the largest |η|, and every member satisfies the local error test; the frozen
/// generator is evaluated once per stage for the whole batch.
pub fn integrate_wco_batch(etas: &[Complex64], ctx: &GeneratorContext, opts: &SolverOptions) -> Result<Vec<Mat2C>> {
    let Some(widest) = etas.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())) else {
        return Ok(Vec::new());
    };
    let p = ctx.protocol();
    let k0 = vec![ctx.equilibrium_state(p.t_i); etas.len()];
    let o = capped_options(widest, ctx, opts);
    let f = |t: f64, ks: &Vec<Mat2C>| {
        let inst = ctx.at(t)?;
        Ok(ks.iter().zip(etas).map(|(k, &eta)| inst.rhs(k, eta)).collect())
    };
    let mut s = Stepper::new(f, p.t_i, k0, o)?;
    let ks = s.advance_to(p.t_f).map_err(|e| tag_eta(e, widest))?;
    let (acc, rej) = s.stats();
    log::trace!("batch of {} up to |eta| = {}: {acc} steps, {rej} rejected", etas.len(), widest.norm());
    Ok(ks)
}

/// Φ(η) = tr K(t_f, η).
pub fn characteristic_function(eta: Complex64, ctx: &GeneratorContext, opts: &SolverOptions) -> Result<Complex64> {
    Ok(integrate_wco(eta, ctx, opts)?.trace())
}

/// Provenance stored next to a sampled characteristic function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfMetadata {
    pub frame: Frame,
    pub protocol: DriveProtocol,
    pub bath: BathParams,
    pub kappa: f64,
    pub lamb_shift: bool,
    pub solver: SolverOptions,
    pub table_points: usize,
    pub delta_eta: f64,
    pub eta_max: f64,
    pub version: String,
}

/// Φ(η) on η = 0, δη, …, η_max.
#[derive(Debug, Clone, PartialEq)]
pub struct CFGrid {
    pub eta: Vec<f64>,
    pub phi: Vec<Complex64>,
    pub meta: CfMetadata,
}

#[derive(Debug, Serialize, Deserialize)]
struct CfRow {
    eta: f64,
    re_phi: f64,
    im_phi: f64,
}

/// Number of intervals of width `delta` in [0, `max`]; `max` must be a multiple of `delta`.
fn grid_intervals(max: f64, delta: f64) -> Result<usize> {
    if !(max > 0.0 && max.is_finite()) {
        return Err(Error::invalid("eta_max", format!("must be > 0, got {max}")));
    }
    if !(delta > 0.0 && delta <= max) {
        return Err(Error::invalid("delta_eta", format!("must lie in (0, eta_max], got {delta}")));
    }
    let n = (max / delta).round();
    if ((n * delta - max) / max).abs() > 1e-9 {
        return Err(Error::invalid("eta_max", format!("{max} is not a multiple of delta_eta = {delta}")));
    }
    Ok(n as usize)
}

/// Samples the characteristic function. Fixed batches of [`CF_BATCH`] consecutive
/// η points are solved in parallel on the current rayon pool and merged in grid
/// order, so the result does not depend on the schedule or thread count.
pub fn sample_cf(eta_max: f64, delta_eta: f64, ctx: &GeneratorContext, opts: &SolverOptions) -> Result<CFGrid> {
    opts.validate()?;
    let n = grid_intervals(eta_max, delta_eta)?;
    let eta: Vec<f64> = (0..=n).map(|k| k as f64 * delta_eta).collect();
    let results: Vec<Result<Complex64>> = eta
        .par_chunks(CF_BATCH)
        .flat_map_iter(|chunk| {
            let etas: Vec<Complex64> = chunk.iter().map(|&e| Complex64::new(e, 0.0)).collect();
            match integrate_wco_batch(&etas, ctx, opts) {
                Ok(ks) => ks.into_iter().map(|k| Ok(k.trace())).collect::<Vec<_>>(),
                // solve the members one by one to find out which of them fail
                Err(_) => etas.iter().map(|&e| characteristic_function(e, ctx, opts)).collect(),
            }
        })
        .collect();
    let mut phi = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => phi.push(v),
            Err(e) => {
                failures.push((k, e.to_string()));
                phi.push(Complex64::new(f64::NAN, f64::NAN));
            }
        }
    }
    if !failures.is_empty() {
        return Err(Error::CfFailures { failures });
    }
    let meta = CfMetadata {
        frame: ctx.frame(),
        protocol: *ctx.protocol(),
        bath: *ctx.bath(),
        kappa: ctx.kappa(),
        lamb_shift: ctx.lamb_shift(),
        solver: *opts,
        table_points: ctx.table().omega_grid().len(),
        delta_eta,
        eta_max,
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    Ok(CFGrid { eta, phi, meta })
}

impl CFGrid {
    pub fn delta_eta(&self) -> f64 {
        self.meta.delta_eta
    }

    pub fn len(&self) -> usize {
        self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta.is_empty()
    }

    /// Φ at signed grid index `k`, using Φ(−η) = conj Φ(η).
    pub fn phi_signed(&self, k: i64) -> Complex64 {
        let v = self.phi[k.unsigned_abs() as usize];
        if k < 0 {
            v.conj()
        } else {
            v
        }
    }

    /// Builds a grid from raw samples (used for synthetic characteristic functions).
    pub fn from_samples(delta_eta: f64, phi: Vec<Complex64>, meta: CfMetadata) -> Result<Self> {
        if phi.len() < 2 {
            return Err(Error::invalid("phi", "need at least two samples"));
        }
        let n = phi.len();
        let eta = (0..n).map(|k| k as f64 * delta_eta).collect();
        let grid = CFGrid { eta, phi, meta: CfMetadata { delta_eta, eta_max: (n - 1) as f64 * delta_eta, ..meta } };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.eta.len() != self.phi.len() || self.eta.len() < 2 {
            return Err(Error::Malformed("characteristic-function grid needs matching eta/phi of length >= 2".into()));
        }
        if self.eta[0] != 0.0 {
            return Err(Error::Malformed("characteristic-function grid must start at eta = 0".into()));
        }
        let d = self.meta.delta_eta;
        for (k, &e) in self.eta.iter().enumerate() {
            if (e - k as f64 * d).abs() > 1e-9 * d.max(1.0) * (k as f64).max(1.0) {
                return Err(Error::Malformed(format!("eta[{k}] = {e} is off the uniform grid with spacing {d}")));
            }
        }
        if self.phi.iter().any(|p| !p.is_finite()) {
            return Err(Error::Malformed("non-finite characteristic-function sample".into()));
        }
        if let Some(k) = self.phi.iter().position(|p| p.norm() > 1.0 + PHI_BOUND_SLACK) {
            return Err(Error::Malformed(format!("|phi| = {} > 1 at eta = {}", self.phi[k].norm(), self.eta[k])));
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for (e, p) in self.eta.iter().zip(&self.phi) {
            wr.serialize(CfRow { eta: *e, re_phi: p.re, im_phi: p.im })?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R, meta: CfMetadata) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut eta = Vec::new();
        let mut phi = Vec::new();
        for row in rd.deserialize() {
            let row: CfRow = row?;
            eta.push(row.eta);
            phi.push(Complex64::new(row.re_phi, row.im_phi));
        }
        let g = CFGrid { eta, phi, meta };
        g.validate()?;
        Ok(g)
    }

    /// Writes `<path>` (CSV) and the metadata sidecar `<path>.json`.
    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)?;
        let f = std::fs::File::create(sidecar_path(path))?;
        serde_json::to_writer_pretty(f, &self.meta)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let meta: CfMetadata = serde_json::from_reader(std::fs::File::open(sidecar_path(path))?)?;
        Self::read_csv(std::fs::File::open(path)?, meta)
    }
}

/// `data.csv` → `data.csv.json`
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// One stored point of a density-matrix trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityPoint {
    pub t: f64,
    pub rho: Mat2C,
    pub sigma_z: f64,
}

const STATE_TOL: f64 = 1e-8;

/// Checks that `rho` is a density matrix within `tol`.
pub fn validate_density(rho: &Mat2C, tol: f64) -> Result<()> {
    if (*rho - rho.adjoint()).max_abs() > tol {
        return Err(Error::invalid("rho0", "not Hermitian"));
    }
    if (rho.trace() - 1.0).norm() > tol {
        return Err(Error::invalid("rho0", format!("trace {} != 1", rho.trace())));
    }
    let ev = rho.hermitian_eigenvalues();
    if ev[0] < -tol {
        return Err(Error::invalid("rho0", format!("negative eigenvalue {}", ev[0])));
    }
    Ok(())
}

/// Evolves a density matrix (η = 0) and stores it at the requested times, which
/// must be increasing and lie in [t_i, t_f].
pub fn evolve_density(
    ctx: &GeneratorContext,
    opts: &SolverOptions,
    rho0: Mat2C,
    times: &[f64],
) -> Result<Vec<DensityPoint>> {
    validate_density(&rho0, 1e-10)?;
    let p = ctx.protocol();
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("times", "must be strictly increasing"));
    }
    if let (Some(&a), Some(&b)) = (times.first(), times.last()) {
        if a < p.t_i || b > p.t_f {
            return Err(Error::invalid("times", format!("must lie in [{}, {}]", p.t_i, p.t_f)));
        }
    }
    let zero = Complex64::new(0.0, 0.0);
    let o = capped_options(zero, ctx, opts);
    let mut s = Stepper::new(|t, r: &Mat2C| Ok(ctx.at(t)?.lindbladian(r)), p.t_i, rho0, o)?;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let rho = s.advance_to(t).map_err(|e| tag_eta(e, zero))?;
        let ev = rho.hermitian_eigenvalues();
        if ev[0] < -STATE_TOL {
            return Err(Error::Positivity { t, min_eigenvalue: ev[0] });
        }
        let sigma_z = (rho.get(0, 0) - rho.get(1, 1)).re;
        out.push(DensityPoint { t, rho, sigma_z });
    }
    Ok(out)
}

use std::io::Write;
use std::path::{Path, PathBuf};

use log::{info, warn};
use polwork_core::bath::{kappa, kappa_quadrature};
use polwork_core::dynamics::{uniform_times, Source};
use polwork_core::generator::protocol_grid;
use polwork_core::system::{eigenframe, thermal_state, validity_report, CheckStatus};
use polwork_core::workdist::{moments_from_context, moments_from_distribution, moments_from_grid, MomentComparison};
use polwork_core::*;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{InitialState, RunConfig};
use crate::error::{CliError, Result};

/// File-name tag of a frame.
pub fn tag(frame: Frame) -> &'static str {
    match frame {
        Frame::Polaron => "pme",
        Frame::WeakCoupling => "wcme",
    }
}

pub fn cf_path(dir: &Path, frame: Frame) -> PathBuf {
    dir.join(format!("cf_{}.csv", tag(frame)))
}

pub fn dist_path(dir: &Path, frame: Frame) -> PathBuf {
    dir.join(format!("dist_{}.csv", tag(frame)))
}

/// Provenance for outputs whose owning module defines no metadata of its own.
#[derive(Serialize)]
struct RunMeta<'a> {
    config: &'a RunConfig,
    kappa: f64,
    version: &'static str,
}

fn meta(cfg: &RunConfig) -> RunMeta<'_> {
    RunMeta { config: cfg, kappa: kappa(&cfg.bath_params()), version: env!("CARGO_PKG_VERSION") }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| CliError::io(format!("creating {}", path.display()), e))?;
    serde_json::to_writer_pretty(f, value).map_err(|e| CliError::Core(e.into()))
}

fn sidecar(path: &Path, cfg: &RunConfig) -> Result<()> {
    write_json(&polwork_core::evolve::sidecar_path(path), &meta(cfg))
}

/// Creates the output directory and stores the configuration in it.
pub fn prepare_output(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.output.dir.clone();
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))?;
    cfg.persist(&dir)?;
    Ok(dir)
}

fn context(cfg: &RunConfig, frame: Frame) -> Result<GeneratorContext> {
    Ok(GeneratorContext::build_with(frame, cfg.drive(), cfg.bath_params(), cfg.table.points, cfg.table.margin)?)
}

fn log_validity(cfg: &RunConfig) {
    let report = validity_report(&cfg.drive(), &cfg.bath_params(), kappa(&cfg.bath_params()));
    for c in report.checks.iter().filter(|c| c.status != CheckStatus::Pass) {
        warn!("validity: {} = {:.4} ({:?})", c.name, c.value, c.status);
    }
}

pub fn kappa_cmd(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let dir = prepare_output(cfg)?;
    let bath = cfg.bath_params();
    let k = kappa(&bath);
    let kq = kappa_quadrature(&bath)?;
    let report = validity_report(&cfg.drive(), &bath, k);
    let w = |r: std::io::Result<()>| r.map_err(|e| CliError::io("stdout", e));
    w(writeln!(out, "kappa            {k:.12}"))?;
    w(writeln!(out, "kappa (quad)     {kq:.12}  rel diff {:.2e}", (k - kq).abs() / k))?;
    w(writeln!(out, "g                {:.6}", report.g))?;
    for c in &report.checks {
        w(writeln!(out, "{:<24} {:>10.4}  {:?}", c.name, c.value, c.status))?;
    }
    #[derive(Serialize)]
    struct Out<'a> {
        kappa_quadrature: f64,
        report: &'a polwork_core::system::ValidityReport,
        #[serde(flatten)]
        meta: RunMeta<'a>,
    }
    write_json(&dir.join("kappa.json"), &Out { kappa_quadrature: kq, report: &report, meta: meta(cfg) })
}

pub fn bath_tables_cmd(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let dir = prepare_output(cfg)?;
    let bath = cfg.bath_params();
    let k = kappa(&bath);
    for &frame in &cfg.cf.frames {
        let grid = protocol_grid(&cfg.drive(), frame, k, cfg.table.points, cfg.table.margin);
        let table = RateTable::build(&bath, frame, &grid)?;
        let path = dir.join(format!("rates_{}.csv", tag(frame)));
        table.save_csv(&path)?;
        sidecar(&path, cfg)?;
        let (lo, hi) = table.window();
        writeln!(out, "{}: {} nodes on [{lo:.3}, {hi:.3}] -> {}", frame.label(), table.omega_grid().len(), path.display())
            .map_err(|e| CliError::io("stdout", e))?;
    }
    Ok(())
}

pub fn cf_cmd(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let dir = prepare_output(cfg)?;
    log_validity(cfg);
    for &frame in &cfg.cf.frames {
        let ctx = context(cfg, frame)?;
        let start = std::time::Instant::now();
        let grid = sample_cf(cfg.cf.eta_max, cfg.cf.delta_eta, &ctx, &cfg.solver_options())?;
        let path = cf_path(&dir, frame);
        grid.save(&path)?;
        info!("{} CF: {} samples in {:.1?}", frame.label(), grid.len(), start.elapsed());
        let last = grid.phi[grid.len() - 1];
        writeln!(out, "{}: {} samples, |Phi(eta_max)| = {:.3e} -> {}", frame.label(), grid.len(), last.norm(), path.display())
            .map_err(|e| CliError::io("stdout", e))?;
    }
    Ok(())
}

/// Everything `dist` reports for one frame.
#[derive(Debug, Clone, Serialize)]
pub struct DistSummary {
    pub frame: Frame,
    pub total: f64,
    pub negativity: f64,
    pub density_negativity_ratio: f64,
    pub moments: MomentComparison,
    /// (W, P) of the largest local maxima, in order of W.
    pub peaks: Vec<(f64, f64)>,
}

pub fn summarize(cfg: &RunConfig, grid: &CFGrid, dist: &WorkDistribution) -> Result<DistSummary> {
    let cf_moments = match moments_from_grid(grid) {
        Ok(m) => m,
        Err(_) => {
            // the grid is too coarse for derivatives at η = 0; solve there directly
            let ctx = GeneratorContext::build_with(
                grid.meta.frame,
                grid.meta.protocol,
                grid.meta.bath,
                grid.meta.table_points,
                cfg.table.margin,
            )?;
            moments_from_context(&ctx, &grid.meta.solver, cfg.moments.step)?
        }
    };
    let mut peaks: Vec<(f64, f64)> =
        dist.local_maxima(1e-4).into_iter().map(|j| (dist.centers()[j], dist.probability[j])).collect();
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1));
    peaks.truncate(8);
    peaks.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(DistSummary {
        frame: grid.meta.frame,
        total: dist.total(),
        negativity: dist.negativity,
        density_negativity_ratio: dist.density.negativity_ratio(),
        moments: MomentComparison::new(cf_moments, moments_from_distribution(dist)),
        peaks,
    })
}

pub fn dist_cmd(cfg: &RunConfig, input: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let dir = prepare_output(cfg)?;
    let inputs: Vec<PathBuf> = match input {
        Some(p) => vec![p.to_path_buf()],
        None => cfg.cf.frames.iter().map(|&f| cf_path(&dir, f)).collect(),
    };
    for path in inputs {
        let grid = CFGrid::load(&path).map_err(|e| match e {
            polwork_core::Error::Io(io) => CliError::io(format!("reading {}", path.display()), io),
            e => e.into(),
        })?;
        let mut opts = cfg.dist_options();
        if grid.delta_eta() != cfg.cf.delta_eta {
            let full = DistOptions::full_range(opts.delta_w, grid.delta_eta());
            opts.w_min = cfg.dist.w_min.unwrap_or(full.w_min);
            opts.w_max = cfg.dist.w_max.unwrap_or(full.w_max);
        }
        let dist = work_distribution(&grid, &opts)?;
        let target = dist_path(&dir, grid.meta.frame);
        dist.save(&target, &dist.metadata(&grid.meta, &opts))?;
        let s = summarize(cfg, &grid, &dist)?;
        write_json(&target.with_extension("summary.json"), &s)?;
        let w = |r: std::io::Result<()>| r.map_err(|e| CliError::io("stdout", e));
        w(writeln!(out, "{} -> {}", s.frame.label(), target.display()))?;
        w(writeln!(out, "  total {:.6}  bin negativity {:.3e}  density negativity/peak {:.3e}", s.total, s.negativity, s.density_negativity_ratio))?;
        let m = &s.moments;
        w(writeln!(out, "  <W> cf {:.6} dist {:.6}   var cf {:.6} dist {:.6}", m.cf.mean, m.dist.mean, m.cf.variance, m.dist.variance))?;
        for (wv, p) in &s.peaks {
            w(writeln!(out, "  peak W = {wv:8.3}  P = {p:.4e}"))?;
        }
    }
    Ok(())
}

/// One row of the moment sweep.
#[derive(Debug, Clone, Serialize)]
pub struct MomentRow {
    pub frame: Frame,
    pub alpha: f64,
    pub beta: f64,
    pub mean: f64,
    pub variance: f64,
    /// β⟨W⟩
    pub mean_over_kt: f64,
    /// β² var(W)
    pub variance_over_kt2: f64,
}

pub fn moment_sweep(cfg: &RunConfig) -> Result<Vec<MomentRow>> {
    let frames = [Frame::Polaron, Frame::WeakCoupling];
    let mut points = Vec::new();
    for &frame in &frames {
        for &alpha in &cfg.moments.alphas {
            for &beta in &cfg.moments.betas {
                points.push((frame, alpha, beta));
            }
        }
    }
    points
        .par_iter()
        .map(|&(frame, alpha, beta)| {
            let bath = BathParams { alpha, beta, ..cfg.bath_params() };
            let ctx = GeneratorContext::build_with(frame, cfg.drive(), bath, cfg.table.points, cfg.table.margin)?;
            let m = moments_from_context(&ctx, &cfg.solver_options(), cfg.moments.step)?;
            Ok(MomentRow {
                frame,
                alpha,
                beta,
                mean: m.mean,
                variance: m.variance,
                mean_over_kt: beta * m.mean,
                variance_over_kt2: beta * beta * m.variance,
            })
        })
        .collect()
}

pub fn moments_cmd(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let dir = prepare_output(cfg)?;
    let rows = moment_sweep(cfg)?;
    let path = dir.join("moments.csv");
    let file = std::fs::File::create(&path).map_err(|e| CliError::io(format!("creating {}", path.display()), e))?;
    let mut wr = csv::Writer::from_writer(file);
    for r in &rows {
        wr.serialize(r).map_err(|e| CliError::Core(e.into()))?;
    }
    wr.flush().map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
    sidecar(&path, cfg)?;
    let w = |r: std::io::Result<()>| r.map_err(|e| CliError::io("stdout", e));
    w(writeln!(out, "{:<6} {:>6} {:>6} {:>12} {:>12}", "frame", "alpha", "beta", "<W>/kT", "var/(kT)^2"))?;
    for r in &rows {
        w(writeln!(out, "{:<6} {:>6} {:>6} {:>12.6} {:>12.6}", r.frame.label(), r.alpha, r.beta, r.mean_over_kt, r.variance_over_kt2))?;
    }
    Ok(())
}

pub fn jarzynski_cmd(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let dir = prepare_output(cfg)?;
    let mut results = Vec::new();
    for &frame in &cfg.cf.frames {
        let r = jarzynski_check(&context(cfg, frame)?, &cfg.solver_options())?;
        writeln!(out, "{}: <exp(-beta W)> = {:.9} {:+.2e}i   exp(-beta dF) = {:.9}   deviation {:.2e}", frame.label(), r.lhs.re, r.lhs.im, r.rhs, r.deviation)
            .map_err(|e| CliError::io("stdout", e))?;
        results.push((frame, r));
    }
    #[derive(Serialize)]
    struct Out<'a> {
        results: Vec<(Frame, JarzynskiResult)>,
        #[serde(flatten)]
        meta: RunMeta<'a>,
    }
    write_json(&dir.join("jarzynski.json"), &Out { results, meta: meta(cfg) })
}

pub fn initial_state(cfg: &RunConfig) -> Mat2C {
    let p = cfg.drive();
    let k = kappa(&cfg.bath_params());
    let eig = eigenframe(p.t_i, &p, Frame::Polaron, k);
    match cfg.dynamics.initial {
        InitialState::Thermal => thermal_state(&eig, cfg.bath.beta),
        InitialState::Ground => {
            let v = eig.minus();
            Mat2C::new(v[0] * v[0].conj(), v[0] * v[1].conj(), v[1] * v[0].conj(), v[1] * v[1].conj())
        }
    }
}

pub fn dynamics_cmd(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let dir = prepare_output(cfg)?;
    let p = cfg.drive();
    let times = uniform_times(&p, cfg.dynamics.points);
    let sources: Vec<Source> = cfg.dynamics.sources.clone();
    let mut cmp = run_comparison(&p, &cfg.bath_params(), initial_state(cfg), &sources, &times, &cfg.solver_options())?;
    if let Some(r) = &cfg.dynamics.reference {
        cmp.add(import_reference(r, &times)?)?;
    }
    for t in &cmp.trajectories {
        let path = dir.join(format!("sigma_z_{}.csv", t.source.label().to_lowercase()));
        let f = std::fs::File::create(&path).map_err(|e| CliError::io(format!("creating {}", path.display()), e))?;
        t.write_csv(f)?;
        sidecar(&path, cfg)?;
    }
    cmp.save_json(&dir.join("dynamics.json"))?;
    for d in &cmp.deviations {
        writeln!(out, "{:>8} vs {:<8} max |d sigma_z| = {:.4e} at t = {:.2}", d.a.label(), d.b.label(), d.max_abs, d.at)
            .map_err(|e| CliError::io("stdout", e))?;
    }
    Ok(())
}

pub fn closed_lz_cmd(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let dir = prepare_output(cfg)?;
    let p = cfg.drive();
    let k = kappa(&cfg.bath_params());
    #[derive(Serialize)]
    struct Case {
        kappa_eff: f64,
        unitary: ClosedLZResult,
        asymptotic: LzAsymptotic,
    }
    let mut cases = Vec::new();
    for (name, ke) in [("renormalised", k), ("bare", 1.0)] {
        let unitary = closed_lz_unitary(&p, ke, cfg.bath.beta)?;
        let asymptotic = lz_asymptotic(&p, ke);
        writeln!(
            out,
            "{name:<13} kappa_eff {ke:.6}  P_LZ unitary {:.6e}  exp(-pi D^2 k^2 / 2nu) {:.6e}  1 - exp(..) {:.6e}",
            unitary.transition_probability, asymptotic.complement, asymptotic.printed
        )
        .map_err(|e| CliError::io("stdout", e))?;
        writeln!(
            out,
            "{:<13} masses at W = -{2:.3}, 0, +{2:.3}: {1:?}",
            "",
            unitary.masses,
            unitary.delta_e
        )
        .map_err(|e| CliError::io("stdout", e))?;
        cases.push(Case { kappa_eff: ke, unitary, asymptotic });
    }
    #[derive(Serialize)]
    struct Out<'a> {
        cases: Vec<Case>,
        #[serde(flatten)]
        meta: RunMeta<'a>,
    }
    write_json(&dir.join("closed_lz.json"), &Out { cases, meta: meta(cfg) })
}

/// One line of the `validate` report.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check { name: name.into(), value, tolerance, pass: value.abs() <= tolerance }
    }
}

/// Property checks on the configured parameters.
pub fn property_checks(cfg: &RunConfig) -> Result<Vec<Check>> {
    let bath = cfg.bath_params();
    let p = cfg.drive();
    let opts = cfg.solver_options();
    let k = kappa(&bath);
    let mut checks = vec![Check::new("kappa closed form vs quadrature (rel)", (k - kappa_quadrature(&bath)?) / k, 1e-6)];

    let pme = context(cfg, Frame::Polaron)?;
    let (_, hi) = pme.table().window();
    for channel in Channel::ALL {
        let worst = [0.5f64, 1.0, 2.0, 5.0]
            .iter()
            .map(|&w| w.min(0.9 * hi))
            .map(|w| -> Result<f64> {
                let up = pme.table().gamma(channel, w)?;
                let down = pme.table().gamma(channel, -w)?;
                Ok(((down - (-bath.beta * w).exp() * up) / down).abs())
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        checks.push(Check::new(format!("KMS detailed balance {channel:?} (rel)"), worst, 1e-4));
    }

    let still = DriveProtocol { nu: 0.0, ..p };
    for frame in [Frame::Polaron, Frame::WeakCoupling] {
        let ctx = if frame == Frame::Polaron { pme.clone() } else { context(cfg, frame)? };
        let l = frame.label();
        let phi0 = characteristic_function(Complex64::new(0.0, 0.0), &ctx, &opts)?;
        checks.push(Check::new(format!("{l} Phi(0) - 1"), (phi0 - 1.0).norm(), 1e-8));
        let j = jarzynski_check(&ctx, &opts)?;
        checks.push(Check::new(format!("{l} Jarzynski |<e^-bW> - e^-bdF|"), j.deviation, 1e-3));
        let e = Complex64::new(cfg.cf.eta_max, 0.0);
        let a = characteristic_function(e, &ctx, &opts)?;
        checks.push(Check::new(format!("{l} |Phi(eta_max)| - 1 (<= 0)"), (a.norm() - 1.0).max(0.0), 1e-6));
        // halve the initial step and the step cap together; RK45 otherwise restarts from the cap
        let capped = polwork_core::evolve::capped_options(e, &ctx, &opts);
        let halved = SolverOptions { h0: 0.5 * capped.h0, max_step: 0.5 * capped.max_step, ..opts };
        let b = characteristic_function(e, &ctx, &halved)?;
        checks.push(Check::new(format!("{l} step halving at eta_max"), (a - b).norm(), 1e-6));
        let still_ctx = ctx.with_protocol(still)?;
        let pi = still_ctx.equilibrium_state(still.t_i);
        let traj = polwork_core::evolve::evolve_density(&still_ctx, &opts, pi, &[still.t_f])?;
        checks.push(Check::new(format!("{l} thermal fixed point at nu = 0"), (traj[0].rho - pi).max_abs(), 1e-6));
    }
    Ok(checks)
}

pub fn validate_cmd(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let dir = prepare_output(cfg)?;
    let checks = property_checks(cfg)?;
    for c in &checks {
        writeln!(out, "{} {:<44} {:>10.3e}  (tol {:.0e})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.tolerance)
            .map_err(|e| CliError::io("stdout", e))?;
    }
    #[derive(Serialize)]
    struct Out<'a> {
        checks: &'a [Check],
        #[serde(flatten)]
        meta: RunMeta<'a>,
    }
    write_json(&dir.join("validate.json"), &Out { checks: &checks, meta: meta(cfg) })?;
    match checks.iter().filter(|c| !c.pass).count() {
        0 => Ok(()),
        n => Err(CliError::Checks(n)),
    }
}

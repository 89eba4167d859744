//! Run configuration: one TOML file with flat sections, overridable from the command line.

use std::path::{Path, PathBuf};

use clap::Args;
use polwork_core::dynamics::Source;
use polwork_core::{BathParams, DistOptions, DriveProtocol, Frame, Method, SolverOptions, Window};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// The shipped default, matching the strong-coupling sweep of the reference figure.
pub const FIG1_TOML: &str = include_str!("../configs/fig1.toml");

/// File name under which every run stores the configuration it used.
pub const PERSISTED_NAME: &str = "config.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathSection {
    pub alpha: f64,
    pub omega_c: f64,
    pub beta: f64,
    #[serde(default = "yes")]
    pub lamb_shift: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    pub nu: f64,
    pub t_i: f64,
    pub t_f: f64,
    #[serde(default = "one")]
    pub delta: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub method: Method,
    pub h0: f64,
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let o = SolverOptions::default();
        SolverSection { method: o.method, h0: o.h0, rtol: o.rtol, atol: o.atol, max_step: o.max_step }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TableSection {
    pub points: usize,
    pub margin: f64,
}

impl Default for TableSection {
    fn default() -> Self {
        TableSection {
            points: polwork_core::generator::DEFAULT_TABLE_POINTS,
            margin: polwork_core::generator::DEFAULT_TABLE_MARGIN,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CfSection {
    pub frames: Vec<Frame>,
    pub delta_eta: f64,
    pub eta_max: f64,
}

impl Default for CfSection {
    fn default() -> Self {
        CfSection { frames: vec![Frame::Polaron, Frame::WeakCoupling], delta_eta: 0.05, eta_max: 500.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistSection {
    pub delta_w: f64,
    pub window: Window,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_max: Option<f64>,
}

impl Default for DistSection {
    fn default() -> Self {
        DistSection { delta_w: 0.05, window: Window::Rectangular, w_min: None, w_max: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MomentsSection {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    /// Finite-difference spacing in η.
    pub step: f64,
}

impl Default for MomentsSection {
    fn default() -> Self {
        MomentsSection { alphas: vec![0.1, 0.25, 0.4], betas: vec![1.0], step: 0.01 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialState {
    /// Thermal state of the frame's system Hamiltonian at t_i.
    Thermal,
    /// Adiabatic ground state at t_i.
    Ground,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsSection {
    pub sources: Vec<Source>,
    pub points: usize,
    pub initial: InitialState,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<PathBuf>,
}

impl Default for DynamicsSection {
    fn default() -> Self {
        DynamicsSection {
            sources: vec![Source::Pme, Source::Wcme, Source::Closed],
            points: 401,
            initial: InitialState::Thermal,
            reference: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Worker threads; 0 lets the pool pick one per core.
    pub threads: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: PathBuf::from("out"), threads: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub bath: BathSection,
    pub protocol: ProtocolSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub table: TableSection,
    #[serde(default)]
    pub cf: CfSection,
    #[serde(default)]
    pub dist: DistSection,
    #[serde(default)]
    pub moments: MomentsSection,
    #[serde(default)]
    pub dynamics: DynamicsSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::parse(FIG1_TOML).expect("shipped config parses")
    }
}

/// Command-line values that replace the corresponding file entries.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub omega_c: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub nu: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub t_i: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub t_f: Option<f64>,
    /// Frame(s) for `cf`, `dist` and `jarzynski`; repeat for both.
    #[arg(long, global = true, value_parser = parse_frame)]
    pub frame: Vec<Frame>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub delta_eta: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub eta_max: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub delta_w: Option<f64>,
    #[arg(long, global = true, value_parser = parse_window)]
    pub window: Option<Window>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub rtol: Option<f64>,
    #[arg(long, global = true)]
    pub lamb_shift: Option<bool>,
    /// Output directory.
    #[arg(long, short, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, short = 'j', global = true)]
    pub threads: Option<usize>,
}

fn parse_frame(s: &str) -> std::result::Result<Frame, String> {
    match s {
        "polaron" | "pme" => Ok(Frame::Polaron),
        "weak-coupling" | "weak" | "wcme" => Ok(Frame::WeakCoupling),
        _ => Err(format!("unknown frame `{s}` (polaron, weak-coupling)")),
    }
}

fn parse_window(s: &str) -> std::result::Result<Window, String> {
    match s {
        "rectangular" => Ok(Window::Rectangular),
        "hann" => Ok(Window::Hann),
        _ => Err(format!("unknown window `{s}` (rectangular, hann)")),
    }
}

fn field(section: &str, e: polwork_core::Error) -> CliError {
    match e {
        polwork_core::Error::InvalidParameter { field, reason } => CliError::Config(format!("{section}.{field}: {reason}")),
        other => CliError::Config(format!("{section}: {other}")),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn apply(&mut self, o: &Overrides) {
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut self.bath.alpha, o.alpha);
        set(&mut self.bath.beta, o.beta);
        set(&mut self.bath.omega_c, o.omega_c);
        set(&mut self.protocol.nu, o.nu);
        set(&mut self.protocol.t_i, o.t_i);
        set(&mut self.protocol.t_f, o.t_f);
        set(&mut self.cf.delta_eta, o.delta_eta);
        set(&mut self.cf.eta_max, o.eta_max);
        set(&mut self.dist.delta_w, o.delta_w);
        set(&mut self.solver.rtol, o.rtol);
        if !o.frame.is_empty() {
            self.cf.frames = o.frame.clone();
        }
        if let Some(w) = o.window {
            self.dist.window = w;
        }
        if let Some(l) = o.lamb_shift {
            self.bath.lamb_shift = l;
        }
        if let Some(d) = &o.out {
            self.output.dir = d.clone();
        }
        if let Some(t) = o.threads {
            self.output.threads = t;
        }
    }

    pub fn bath_params(&self) -> BathParams {
        BathParams {
            alpha: self.bath.alpha,
            omega_c: self.bath.omega_c,
            beta: self.bath.beta,
            include_lamb_shift: self.bath.lamb_shift,
        }
    }

    pub fn drive(&self) -> DriveProtocol {
        let p = &self.protocol;
        DriveProtocol { nu: p.nu, t_i: p.t_i, t_f: p.t_f, delta: p.delta }
    }

    pub fn solver_options(&self) -> SolverOptions {
        let s = &self.solver;
        SolverOptions { method: s.method, h0: s.h0, rtol: s.rtol, atol: s.atol, max_step: s.max_step }
    }

    pub fn dist_options(&self) -> DistOptions {
        let full = DistOptions::full_range(self.dist.delta_w, self.cf.delta_eta);
        DistOptions {
            delta_w: self.dist.delta_w,
            w_min: self.dist.w_min.unwrap_or(full.w_min),
            w_max: self.dist.w_max.unwrap_or(full.w_max),
            window: self.dist.window,
        }
    }

    /// Checks every section against the library preconditions, naming the offending field.
    pub fn validate(&self) -> Result<()> {
        self.bath_params().validate().map_err(|e| field("bath", e))?;
        self.drive().validate().map_err(|e| field("protocol", e))?;
        self.solver_options().validate().map_err(|e| field("solver", e))?;
        let bad = |m: String| Err(CliError::Config(m));
        if self.table.points < polwork_core::bath::MIN_TABLE_POINTS {
            return bad(format!("table.points: need at least {}, got {}", polwork_core::bath::MIN_TABLE_POINTS, self.table.points));
        }
        if !(self.table.margin >= 1.0) {
            return bad(format!("table.margin: must be >= 1, got {}", self.table.margin));
        }
        if self.cf.frames.is_empty() {
            return bad("cf.frames: list at least one frame".into());
        }
        if !(self.cf.delta_eta > 0.0 && self.cf.delta_eta.is_finite()) {
            return bad(format!("cf.delta_eta: must be > 0, got {}", self.cf.delta_eta));
        }
        if !(self.cf.eta_max >= 0.0 && self.cf.eta_max.is_finite()) {
            return bad(format!("cf.eta_max: must be >= 0, got {}", self.cf.eta_max));
        }
        if !(self.dist.delta_w > 0.0) {
            return bad(format!("dist.delta_w: must be > 0, got {}", self.dist.delta_w));
        }
        let d = self.dist_options();
        let bound = polwork_core::workdist::alias_bound(self.cf.delta_eta);
        if !(d.w_min < d.w_max) {
            return bad(format!("dist.w_min: must lie below w_max ({} >= {})", d.w_min, d.w_max));
        }
        if d.w_min <= -bound || d.w_max >= bound {
            return bad(format!("dist.w_max: range [{}, {}] exceeds the aliasing bound {bound:.4} of cf.delta_eta", d.w_min, d.w_max));
        }
        if self.moments.alphas.is_empty() || self.moments.betas.is_empty() {
            return bad("moments.alphas: both alphas and betas need at least one value".into());
        }
        for &a in &self.moments.alphas {
            if !(a >= 0.0 && a.is_finite()) {
                return bad(format!("moments.alphas: must be >= 0, got {a}"));
            }
        }
        for &b in &self.moments.betas {
            if !(b > 0.0 && b.is_finite()) {
                return bad(format!("moments.betas: must be > 0, got {b}"));
            }
        }
        if !(self.moments.step > 0.0 && self.moments.step <= polwork_core::workdist::MOMENT_MAX_SPACING) {
            return bad(format!(
                "moments.step: must lie in (0, {}], got {}",
                polwork_core::workdist::MOMENT_MAX_SPACING,
                self.moments.step
            ));
        }
        if self.dynamics.points < 2 {
            return bad(format!("dynamics.points: need at least 2, got {}", self.dynamics.points));
        }
        if self.dynamics.sources.contains(&Source::External) {
            return bad("dynamics.sources: external trajectories come from dynamics.reference".into());
        }
        Ok(())
    }

    /// Writes the configuration into the output directory.
    pub fn persist(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(PERSISTED_NAME);
        std::fs::write(&path, self.to_toml()).map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
        Ok(path)
    }
}

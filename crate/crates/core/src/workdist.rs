//! From a sampled characteristic function to a binned work distribution, plus
//! work moments and the Jarzynski check.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::{integrate_wco_batch, sidecar_path, CFGrid, CfMetadata};
use crate::generator::GeneratorContext;
use crate::ode::SolverOptions;
use crate::system::free_energy_ps;

/// Fraction of the Nyquist range π/δη a W range may use.
pub const ALIAS_FRACTION: f64 = 0.9;
/// Density samples per bin before binning.
pub const DENSITY_OVERSAMPLE: usize = 8;
/// Largest counting-field spacing accepted for finite-difference moments.
pub const MOMENT_MAX_SPACING: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    #[default]
    Rectangular,
    /// 0.5(1 + cos(πη/η_max)), suppresses ringing around sharp peaks.
    Hann,
}

/// Largest |W| representable without aliasing on a grid with spacing `delta_eta`.
pub fn alias_bound(delta_eta: f64) -> f64 {
    ALIAS_FRACTION * std::f64::consts::PI / delta_eta
}

/// Work density p(W) on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensitySamples {
    pub w: Vec<f64>,
    pub p: Vec<f64>,
}

impl DensitySamples {
    pub fn spacing(&self) -> f64 {
        self.w[1] - self.w[0]
    }

    /// ∫ p over [lo, hi] with p linear between samples.
    pub fn integrate(&self, lo: f64, hi: f64) -> f64 {
        let (w, p) = (&self.w, &self.p);
        let lo = lo.max(w[0]);
        let hi = hi.min(w[w.len() - 1]);
        if hi <= lo {
            return 0.0;
        }
        let h = self.spacing();
        let at = |x: f64| {
            let i = (((x - w[0]) / h).floor() as usize).min(w.len() - 2);
            let f = (x - w[i]) / h;
            (1.0 - f) * p[i] + f * p[i + 1]
        };
        let i0 = ((lo - w[0]) / h).ceil() as usize;
        let i1 = (((hi - w[0]) / h).floor() as usize).min(w.len() - 1);
        if i0 > i1 {
            return 0.5 * (at(lo) + at(hi)) * (hi - lo);
        }
        let mut s = 0.5 * (at(lo) + p[i0]) * (w[i0] - lo) + 0.5 * (p[i1] + at(hi)) * (hi - w[i1]);
        for i in i0..i1 {
            s += 0.5 * (p[i] + p[i + 1]) * h;
        }
        s
    }

    pub fn peak(&self) -> f64 {
        self.p.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Most negative density value relative to the peak, 0 if p ≥ 0 everywhere.
    pub fn negativity_ratio(&self) -> f64 {
        let min = self.p.iter().copied().fold(0.0, f64::min);
        -min / self.peak()
    }

    /// Two columns `W p(W)` with a comment header, readable by gnuplot.
    pub fn write_plot_data<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# W  p(W)")?;
        for (w, p) in self.w.iter().zip(&self.p) {
            writeln!(out, "{w:.10e} {p:.10e}")?;
        }
        Ok(())
    }
}

/// p(W) = (1/π) Re Σ'_k g_k e^{−iη_k W} Φ(η_k) δη on `n_points` uniform W values in
/// [w_min, w_max], with half weights at both grid ends and optional window g.
pub fn invert_cf(grid: &CFGrid, w_min: f64, w_max: f64, n_points: usize, window: Window) -> Result<DensitySamples> {
    grid.validate()?;
    let d = grid.delta_eta();
    let bound = alias_bound(d);
    if !(w_min < w_max) || w_min.abs() >= bound || w_max.abs() >= bound {
        return Err(Error::Aliasing { w_min, w_max, bound });
    }
    if n_points < 2 {
        return Err(Error::invalid("n_points", "need at least two density points"));
    }
    let n = grid.len();
    let eta_max = grid.eta[n - 1];
    let weights: Vec<Complex64> = (0..n)
        .map(|k| {
            let trap = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
            let g = match window {
                Window::Rectangular => 1.0,
                Window::Hann => 0.5 * (1.0 + (std::f64::consts::PI * grid.eta[k] / eta_max).cos()),
            };
            grid.phi[k] * (trap * g * d / std::f64::consts::PI)
        })
        .collect();
    let h = (w_max - w_min) / (n_points - 1) as f64;
    let w: Vec<f64> = (0..n_points).map(|i| w_min + i as f64 * h).collect();
    let p = w
        .par_iter()
        .map(|&x| {
            // e^{−iη_k W} by repeated rotation, resynchronised every 64 terms
            let step = Complex64::from_polar(1.0, -d * x);
            let mut acc = 0.0;
            let mut z = Complex64::new(1.0, 0.0);
            for (k, wk) in weights.iter().enumerate() {
                if k % 64 == 0 {
                    z = Complex64::from_polar(1.0, -(k as f64) * d * x);
                }
                acc += (z * wk).re;
                z *= step;
            }
            acc
        })
        .collect();
    Ok(DensitySamples { w, p })
}

/// Binned work distribution; bin edges sit on multiples of δW.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkDistribution {
    pub delta_w: f64,
    pub edges: Vec<f64>,
    pub probability: Vec<f64>,
    pub density: DensitySamples,
    /// |1 − Σ P|
    pub normalization_deficit: f64,
    /// Σ |min(P, 0)|
    pub negativity: f64,
}

/// Integrates the density over every whole bin [jδW, (j+1)δW] inside its range.
pub fn bin_distribution(density: DensitySamples, delta_w: f64) -> Result<WorkDistribution> {
    if !(delta_w > 0.0) {
        return Err(Error::invalid("delta_w", format!("must be > 0, got {delta_w}")));
    }
    if density.w.len() < 2 || density.w.len() != density.p.len() {
        return Err(Error::invalid("density", "need matching W and p samples, at least two"));
    }
    let (lo, hi) = (density.w[0], density.w[density.w.len() - 1]);
    let slack = 1e-9 * delta_w;
    let j0 = ((lo - slack) / delta_w).ceil() as i64;
    let j1 = ((hi + slack) / delta_w).floor() as i64;
    if j1 <= j0 {
        return Err(Error::invalid("delta_w", "density range holds no whole bin"));
    }
    let edges: Vec<f64> = (j0..=j1).map(|j| j as f64 * delta_w).collect();
    let probability: Vec<f64> = edges.windows(2).map(|e| density.integrate(e[0], e[1])).collect();
    let total: f64 = probability.iter().sum();
    let negativity = probability.iter().map(|p| (-p).max(0.0)).sum();
    Ok(WorkDistribution { delta_w, edges, probability, density, normalization_deficit: (1.0 - total).abs(), negativity })
}

/// How to turn a characteristic function into a distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistOptions {
    pub delta_w: f64,
    pub w_min: f64,
    pub w_max: f64,
    #[serde(default)]
    pub window: Window,
}

impl DistOptions {
    /// Bin width δW over the largest alias-free range of the grid, trimmed to whole bins.
    pub fn full_range(delta_w: f64, delta_eta: f64) -> Self {
        let b = (alias_bound(delta_eta) / delta_w).floor() * delta_w;
        DistOptions { delta_w, w_min: -b, w_max: b, window: Window::Rectangular }
    }
}

/// Inversion at spacing δW/8 followed by binning.
pub fn work_distribution(grid: &CFGrid, opts: &DistOptions) -> Result<WorkDistribution> {
    let bins = ((opts.w_max - opts.w_min) / opts.delta_w).round() as usize;
    if bins == 0 {
        return Err(Error::invalid("w_max", "W range is narrower than one bin"));
    }
    let density = invert_cf(grid, opts.w_min, opts.w_max, bins * DENSITY_OVERSAMPLE + 1, opts.window)?;
    bin_distribution(density, opts.delta_w)
}

#[derive(Debug, Serialize, Deserialize)]
struct BinRow {
    w_center: f64,
    probability: f64,
}

/// Provenance stored next to a distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistMetadata {
    pub cf: CfMetadata,
    pub options: DistOptions,
    pub density_points: usize,
    pub normalization_deficit: f64,
    pub negativity: f64,
    pub density_negativity_ratio: f64,
    pub version: String,
}

impl WorkDistribution {
    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect()
    }

    pub fn total(&self) -> f64 {
        self.probability.iter().sum()
    }

    /// Σ P over bins lying inside [lo, hi].
    pub fn mass_between(&self, lo: f64, hi: f64) -> f64 {
        let eps = 1e-9 * self.delta_w;
        self.edges
            .windows(2)
            .zip(&self.probability)
            .filter(|(e, _)| e[0] >= lo - eps && e[1] <= hi + eps)
            .map(|(_, p)| p)
            .sum()
    }

    /// Indices of bins holding at least `floor` and more than both neighbours.
    pub fn local_maxima(&self, floor: f64) -> Vec<usize> {
        let p = &self.probability;
        (1..p.len().saturating_sub(1)).filter(|&j| p[j] >= floor && p[j] > p[j - 1] && p[j] > p[j + 1]).collect()
    }

    pub fn index_of(&self, w: f64) -> Option<usize> {
        let j = ((w - self.edges[0]) / self.delta_w).floor();
        (j >= 0.0 && (j as usize) < self.probability.len()).then_some(j as usize)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for (c, p) in self.centers().into_iter().zip(&self.probability) {
            wr.serialize(BinRow { w_center: c, probability: *p })?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn metadata(&self, cf: &CfMetadata, options: &DistOptions) -> DistMetadata {
        DistMetadata {
            cf: cf.clone(),
            options: *options,
            density_points: self.density.w.len(),
            normalization_deficit: self.normalization_deficit,
            negativity: self.negativity,
            density_negativity_ratio: self.density.negativity_ratio(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    /// Writes `<path>` (bins), `<path>.json` and the density next to it as `<stem>.density.dat`.
    pub fn save(&self, path: &Path, meta: &DistMetadata) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)?;
        serde_json::to_writer_pretty(std::fs::File::create(sidecar_path(path))?, meta)?;
        let dat = path.with_extension("density.dat");
        self.density.write_plot_data(std::io::BufWriter::new(std::fs::File::create(dat)?))?;
        Ok(())
    }
}

/// Mean and variance of W.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
}

/// Both estimates and their difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentComparison {
    pub cf: Moments,
    pub dist: Moments,
    pub mean_difference: f64,
    pub variance_difference: f64,
}

impl MomentComparison {
    pub fn new(cf: Moments, dist: Moments) -> Self {
        MomentComparison {
            cf,
            dist,
            mean_difference: cf.mean - dist.mean,
            variance_difference: cf.variance - dist.variance,
        }
    }
}

/// Five-point central differences at η = 0 from Φ(h), Φ(2h) and Φ(0) = `phi0`,
/// using Φ(−η) = conj Φ(η).
pub fn moments_from_samples(h: f64, phi0: Complex64, phi1: Complex64, phi2: Complex64) -> Moments {
    // Φ′(0) = i⟨W⟩, Φ″(0) = −⟨W²⟩
    let mean = (16.0 * phi1.im - 2.0 * phi2.im) / (12.0 * h);
    let second = -(32.0 * phi1.re - 2.0 * phi2.re - 30.0 * phi0.re) / (12.0 * h * h);
    Moments { mean, variance: second - mean * mean }
}

/// CF-route moments from the first samples of a grid with δη ≤ 0.01.
pub fn moments_from_grid(grid: &CFGrid) -> Result<Moments> {
    let d = grid.delta_eta();
    if d > MOMENT_MAX_SPACING * (1.0 + 1e-12) || grid.len() < 3 {
        return Err(Error::Resolution(format!(
            "need spacing <= {MOMENT_MAX_SPACING} and three samples near zero, got spacing {d} with {} samples",
            grid.len()
        )));
    }
    Ok(moments_from_samples(d, grid.phi[0], grid.phi[1], grid.phi[2]))
}

/// CF-route moments solving directly at η = 0, h, 2h.
pub fn moments_from_context(ctx: &GeneratorContext, opts: &SolverOptions, h: f64) -> Result<Moments> {
    if !(h > 0.0 && h <= MOMENT_MAX_SPACING) {
        return Err(Error::Resolution(format!("finite-difference spacing must lie in (0, {MOMENT_MAX_SPACING}]")));
    }
    let etas = [0.0, h, 2.0 * h].map(|e| Complex64::new(e, 0.0));
    let k = integrate_wco_batch(&etas, ctx, opts)?;
    Ok(moments_from_samples(h, k[0].trace(), k[1].trace(), k[2].trace()))
}

/// Distribution-route moments Σ W_b P_b and Σ W_b² P_b − (Σ W_b P_b)².
pub fn moments_from_distribution(dist: &WorkDistribution) -> Moments {
    let c = dist.centers();
    let mean: f64 = c.iter().zip(&dist.probability).map(|(w, p)| w * p).sum();
    let second: f64 = c.iter().zip(&dist.probability).map(|(w, p)| w * w * p).sum();
    Moments { mean, variance: second - mean * mean }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JarzynskiResult {
    /// ⟨e^{−βW}⟩ = Φ(iβ)
    pub lhs: Complex64,
    /// e^{−βΔF}
    pub rhs: f64,
    pub deviation: f64,
}

/// Compares Φ(iβ) with e^{−βΔF} built from the system free energy of the frame
/// (κ-renormalised for the polaron frame, bare for weak coupling).
pub fn jarzynski_check(ctx: &GeneratorContext, opts: &SolverOptions) -> Result<JarzynskiResult> {
    let beta = ctx.bath().beta;
    let lhs = crate::evolve::characteristic_function(Complex64::new(0.0, beta), ctx, opts)?;
    let p = ctx.protocol();
    let k = ctx.kappa_eff();
    let df = free_energy_ps(p.t_f, p, k, beta) - free_energy_ps(p.t_i, p, k, beta);
    let rhs = (-beta * df).exp();
    Ok(JarzynskiResult { lhs, rhs, deviation: (lhs - rhs).norm() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::BathParams;
    use crate::ode::SolverOptions;
    use crate::system::{DriveProtocol, Frame};
    use approx::assert_relative_eq;

    fn meta() -> CfMetadata {
        CfMetadata {
            frame: Frame::Polaron,
            protocol: DriveProtocol::new(0.1, -100.0, 100.0, 1.0).unwrap(),
            bath: BathParams::new(0.4, 10.0, 1.0).unwrap(),
            kappa: 1.0,
            lamb_shift: true,
            solver: SolverOptions::default(),
            table_points: 0,
            delta_eta: 0.0,
            eta_max: 0.0,
            version: "test".into(),
        }
    }

    fn synthetic(d: f64, eta_max: f64, f: impl Fn(f64) -> Complex64) -> CFGrid {
        let n = (eta_max / d).round() as usize;
        CFGrid::from_samples(d, (0..=n).map(|k| f(k as f64 * d)).collect(), meta()).unwrap()
    }

    #[test]
    fn delta_at_zero_integrates_to_one() {
        let g = synthetic(0.05, 100.0, |_| Complex64::new(1.0, 0.0));
        let d = invert_cf(&g, -50.0, 50.0, 40001, Window::Rectangular).unwrap();
        assert!((d.integrate(-50.0, 50.0) - 1.0).abs() < 1e-3);
        let top = d.p.iter().cloned().enumerate().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0;
        assert!(d.w[top].abs() < 1e-9);
    }

    #[test]
    fn shift_theorem() {
        let w0 = 3.3;
        let g = synthetic(0.05, 100.0, |e| Complex64::new(0.0, e * w0).exp());
        let d = invert_cf(&g, -10.0, 10.0, 8001, Window::Hann).unwrap();
        let top = d.p.iter().cloned().enumerate().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0;
        assert!((d.w[top] - w0).abs() < 0.003);
    }

    #[test]
    fn gaussian_is_recovered() {
        let g = synthetic(0.01, 10.0, |e| Complex64::new((-0.5 * e * e).exp(), 0.0));
        let d = invert_cf(&g, -5.0, 5.0, 1001, Window::Rectangular).unwrap();
        for (w, p) in d.w.iter().zip(&d.p) {
            let exact = (-0.5 * w * w).exp() / (2.0 * std::f64::consts::PI).sqrt();
            assert!((p - exact).abs() < 1e-4, "W = {w}: {p} vs {exact}");
        }
    }

    #[test]
    fn aliasing_bound_is_enforced() {
        let g = synthetic(0.05, 10.0, |_| Complex64::new(1.0, 0.0));
        assert!(matches!(invert_cf(&g, -60.0, 10.0, 100, Window::Rectangular), Err(Error::Aliasing { .. })));
        assert!(invert_cf(&g, -56.0, 56.0, 100, Window::Rectangular).is_ok());
    }

    #[test]
    fn uniform_density_gives_equal_bins() {
        let w: Vec<f64> = (0..=800).map(|i| -1.0 + i as f64 * 0.0025).collect();
        let p = vec![0.5; w.len()];
        let dist = bin_distribution(DensitySamples { w, p }, 0.05).unwrap();
        assert_eq!(dist.probability.len(), 40);
        for q in &dist.probability {
            assert_relative_eq!(*q, 0.025, epsilon = 1e-14);
        }
        assert!(dist.normalization_deficit < 1e-12);
        assert_eq!(dist.negativity, 0.0);
        assert_relative_eq!(dist.mass_between(-0.5, 0.5), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn partial_interval_integration() {
        let w: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        let p = w.clone();
        let d = DensitySamples { w, p };
        assert_relative_eq!(d.integrate(0.05, 0.73), 0.5 * (0.73f64.powi(2) - 0.05f64.powi(2)), epsilon = 1e-14);
        assert_relative_eq!(d.integrate(0.31, 0.33), 0.5 * (0.33f64.powi(2) - 0.31f64.powi(2)), epsilon = 1e-14);
        assert_relative_eq!(d.integrate(-5.0, 5.0), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn moments_of_closed_forms() {
        let (mu, s) = (1.7, 0.6);
        let gauss = |e: f64| Complex64::new(-0.5 * e * e * s * s, e * mu).exp();
        let g = synthetic(0.01, 1.0, gauss);
        // stencil truncation is O(h⁴ μ⁵)
        let m = moments_from_grid(&g).unwrap();
        assert_relative_eq!(m.mean, mu, epsilon = 1e-7);
        assert_relative_eq!(m.variance, s * s, epsilon = 1e-6);
        let shift = synthetic(0.01, 1.0, |e| Complex64::new(0.0, 2.5 * e).exp());
        let m = moments_from_grid(&shift).unwrap();
        assert_relative_eq!(m.mean, 2.5, epsilon = 1e-7);
        assert!(m.variance.abs() < 1e-6);
        let coarse = synthetic(0.05, 1.0, gauss);
        assert!(matches!(moments_from_grid(&coarse), Err(Error::Resolution(_))));
    }

    #[test]
    fn distribution_route_matches_gaussian() {
        let (mu, s) = (1.01, 0.8);
        let g = synthetic(0.02, 40.0, |e| Complex64::new(-0.5 * e * e * s * s, e * mu).exp());
        let opts = DistOptions { delta_w: 0.05, w_min: -8.0, w_max: 10.0, window: Window::Rectangular };
        let dist = work_distribution(&g, &opts).unwrap();
        assert!(dist.normalization_deficit < 1e-6);
        let m = moments_from_distribution(&dist);
        assert_relative_eq!(m.mean, mu, epsilon = 1e-6);
        // binning adds δW²/12 to the variance
        assert_relative_eq!(m.variance, s * s + 0.05 * 0.05 / 12.0, epsilon = 1e-5);
        assert_eq!(dist.local_maxima(1e-6), vec![dist.index_of(mu).unwrap()]);
    }

    #[test]
    fn csv_and_plot_files() {
        let w: Vec<f64> = (0..=80).map(|i| i as f64 * 0.0125).collect();
        let p = vec![1.0; w.len()];
        let dist = bin_distribution(DensitySamples { w, p }, 0.1).unwrap();
        let mut buf = Vec::new();
        dist.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("w_center,probability\n0.05,"));
        assert_eq!(text.lines().count(), 11);
        let mut buf = Vec::new();
        dist.density.write_plot_data(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 82);
    }
}

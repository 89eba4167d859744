use polwork_core::workdist::{moments_from_context, moments_from_distribution};
use polwork_core::*;

fn short_sweep() -> DriveProtocol {
    DriveProtocol::new(0.5, -10.0, 10.0, 1.0).unwrap()
}

#[test]
fn isolated_sweep_gives_three_atoms_with_closed_masses() {
    let p = short_sweep();
    let ctx = GeneratorContext::build(Frame::Polaron, p, BathParams::new(0.0, 10.0, 0.2).unwrap()).unwrap();
    let grid = sample_cf(100.0, 0.1, &ctx, &SolverOptions::default()).unwrap();
    let opts = DistOptions { delta_w: 0.05, w_min: -20.0, w_max: 20.0, window: Window::Hann };
    let dist = work_distribution(&grid, &opts).unwrap();
    let closed = closed_lz_unitary(&p, 1.0, 0.2).unwrap();
    assert!(closed.masses[0] > 0.01 && closed.masses[2] > 0.01, "{:?}", closed.masses);
    for (w, m) in closed.work_values().iter().zip(closed.masses) {
        let got = dist.mass_between(w - 0.5, w + 0.5);
        assert!((got - m).abs() < 0.02, "W = {w}: {got} vs {m}");
    }
    assert!(dist.normalization_deficit < 0.02);
    // the atoms sit at ±(ω(t_i) + ω(t_f))/2, slightly outside ±ΔE
    let e = 0.5 * (system::eigenframe(p.t_i, &p, Frame::Polaron, 1.0).omega + system::eigenframe(p.t_f, &p, Frame::Polaron, 1.0).omega);
    let peaks: Vec<f64> = dist.local_maxima(0.005).iter().map(|&j| dist.centers()[j]).collect();
    for w in [-e, 0.0, e] {
        assert!(peaks.iter().any(|c| (c - w).abs() <= 0.05), "no peak near {w}: {peaks:?}");
    }
}

#[test]
fn both_moment_routes_agree() {
    let ctx = GeneratorContext::build(Frame::Polaron, short_sweep(), BathParams::new(0.1, 10.0, 1.0).unwrap()).unwrap();
    let solver = SolverOptions::default();
    let grid = sample_cf(100.0, 0.1, &ctx, &solver).unwrap();
    let dist = work_distribution(&grid, &DistOptions::full_range(0.05, 0.1)).unwrap();
    let a = moments_from_context(&ctx, &solver, 0.01).unwrap();
    let b = moments_from_distribution(&dist);
    assert!(a.mean.abs() > 0.1, "{a:?}");
    assert!((a.mean - b.mean).abs() < 0.01 * a.mean.abs(), "{a:?} vs {b:?}");
    assert!((a.variance - b.variance).abs() < 0.05 * a.variance, "{a:?} vs {b:?}");
}

#[test]
fn coarse_grids_refuse_moment_estimates() {
    let ctx = GeneratorContext::build(Frame::Polaron, short_sweep(), BathParams::new(0.1, 10.0, 1.0).unwrap()).unwrap();
    let grid = sample_cf(1.0, 0.05, &ctx, &SolverOptions::default()).unwrap();
    assert!(matches!(workdist::moments_from_grid(&grid), Err(Error::Resolution(_))));
    let dist = work_distribution(&grid, &DistOptions::full_range(0.05, 0.05)).unwrap();
    assert!(dist.edges.iter().all(|e| ((e / 0.05).round() * 0.05 - e).abs() < 1e-12));
    let too_wide = DistOptions { delta_w: 0.05, w_min: -60.0, w_max: 60.0, window: Window::Rectangular };
    assert!(work_distribution(&grid, &too_wide).is_err());
}

#[test]
fn distribution_round_trips_to_disk() {
    let ctx = GeneratorContext::build(Frame::WeakCoupling, short_sweep(), BathParams::new(0.1, 10.0, 1.0).unwrap()).unwrap();
    let grid = sample_cf(20.0, 0.1, &ctx, &SolverOptions::default()).unwrap();
    let opts = DistOptions { delta_w: 0.25, w_min: -10.0, w_max: 10.0, window: Window::Hann };
    let dist = work_distribution(&grid, &opts).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.csv");
    dist.save(&path, &dist.metadata(&grid.meta, &opts)).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), dist.probability.len() + 1);
    assert!(text.starts_with("w_center,probability"));
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("p.csv.json")).unwrap()).unwrap();
    assert_eq!(meta["options"]["delta_w"], 0.25);
    assert!(dir.path().join("p.density.dat").exists());
}

//! Scratch numeric probes (deleted before delivery).

use mvp_core::benchmarks::gaussian_block_task;
use mvp_core::interpolants::DdbiNoiseConfig;
use mvp_core::kmm::init_diverse;
use mvp_core::path::PathSchedule;
use mvp_core::schedules::{ConstraintKind, FixedScheduleKind};
use mvp_core::train::task_moments;
use mvp_core::variance::{optimize_path, path_variance, InterpolantKind, VarianceConfig};

#[test]
fn probe_criterion3_numbers() {
    let task = gaussian_block_task(2, 0.5).unwrap();
    let m = task_moments(&task, 1234, 200_000).unwrap();
    println!("moments: d={} c0={} c1={} c01={}", m.d, m.c0, m.c1, m.c01);

    println!("--- DI variance vs t_clamp ---");
    for kind in FixedScheduleKind::all_defaults() {
        let sched = PathSchedule::Fixed(kind);
        let mut row = format!("{:12}", kind.name());
        let mut prev = None;
        for clamp in [1e-2, 1e-3, 1e-4, 1e-5] {
            let mut cfg = VarianceConfig::new(InterpolantKind::Di);
            cfg.t_clamp = clamp;
            let v = path_variance(&sched, &cfg, &m).unwrap();
            let ratio = prev.map(|p: f64| v / p).unwrap_or(f64::NAN);
            row.push_str(&format!("  {v:12.4e} (x{ratio:8.3})"));
            prev = Some(v);
        }
        println!("{row}");
    }

    println!("--- DDBI variance vs t_clamp (gamma=1, eps=1e-3) ---");
    for kind in FixedScheduleKind::all_defaults() {
        let sched = PathSchedule::Fixed(kind);
        let mut row = format!("{:12}", kind.name());
        let mut first = None;
        for clamp in [1e-3, 1e-4, 1e-5] {
            let mut cfg = VarianceConfig::new(InterpolantKind::Ddbi(DdbiNoiseConfig::default()));
            cfg.t_clamp = clamp;
            let v = path_variance(&sched, &cfg, &m).unwrap();
            let rel = first.map(|f: f64| (v - f).abs() / f).unwrap_or(0.0);
            row.push_str(&format!("  {v:12.4e} (d{rel:8.4})"));
            first = first.or(Some(v));
        }
        println!("{row}");
    }
}

#[test]
fn probe_criterion6_optimizer() {
    let task = gaussian_block_task(8, 0.5).unwrap();
    let m = task_moments(&task, 1234, 200_000).unwrap();
    let cfg = VarianceConfig::new(InterpolantKind::Ddbi(DdbiNoiseConfig::default()));

    let mut min_fixed = f64::INFINITY;
    for kind in FixedScheduleKind::all_defaults() {
        let v = path_variance(&PathSchedule::Fixed(kind), &cfg, &m).unwrap();
        println!("fixed {:14} V = {v:.4}", kind.name());
        min_fixed = min_fixed.min(v);
    }

    for constraint in [ConstraintKind::Affine, ConstraintKind::Spherical] {
        let init = init_diverse(5).unwrap();
        let v0 = path_variance(&PathSchedule::kmm(init.clone(), constraint), &cfg, &m).unwrap();
        let t0 = std::time::Instant::now();
        let (opt, trace) = optimize_path(&init, constraint, &cfg, &m, 200, 0.05).unwrap();
        let v1 = path_variance(&PathSchedule::kmm(opt, constraint), &cfg, &m).unwrap();
        println!(
            "kmm {:?}: init V = {v0:.4}, optimized V = {v1:.4} (min fixed {min_fixed:.4}) steps={} time={:?}",
            constraint,
            trace.len() - 1,
            t0.elapsed()
        );
    }
}

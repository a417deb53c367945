//! Scratch probes round 2 (deleted before delivery).

use mvp_core::benchmarks::{gaussian_block_task, gaussian_isotropic_task};
use mvp_core::interpolants::{
    ddbi_targets, di_targets, sample_ddbi, DdbiNoiseConfig, DdbiTimeForm,
};
use mvp_core::rng::{standard_normal_matrix, stream_rng};
use mvp_core::schedules::{eval_fixed, FixedScheduleKind};
use mvp_core::train::{task_moments, train, PathMode, TrainConfig};
use mvp_core::variance::{vddbi_integrand, vdi_integrand, InterpolantKind};

#[test]
fn probe_second_moment_tightness() {
    let task = gaussian_block_task(2, 0.5).unwrap();
    let m = task_moments(&task, 7, 200_000).unwrap();
    let n = 100_000;
    let d = 2;
    let cfg = DdbiNoiseConfig::default();
    let ts: Vec<f64> = (1..=10).map(|i| i as f64 / 11.0).collect();

    for seed in [42u64, 43, 44] {
        let mut worst_di: f64 = 0.0;
        let mut worst_db: f64 = 0.0;
        for &t in &ts {
            let s_di = eval_fixed(FixedScheduleKind::Trigonometric, t);
            let s_db = eval_fixed(FixedScheduleKind::Linear, t);
            let x0 = (task.sampler_p0)(&mut stream_rng(seed, "p.x0"), n);
            let x1 = (task.sampler_p1)(&mut stream_rng(seed, "p.x1"), n);
            let z = standard_normal_matrix(&mut stream_rng(seed, "p.z"), n, d);
            let mut m2_di = 0.0;
            let mut m2_db = 0.0;
            for i in 0..n {
                let x0i = &x0[i * d..(i + 1) * d];
                let x1i = &x1[i * d..(i + 1) * d];
                let tv = di_targets(&s_di, x0i, x1i).unwrap().time_score;
                m2_di += tv * tv;
                let zi = &z[i * d..(i + 1) * d];
                let b = sample_ddbi(&s_db, &cfg, x0i, x1i, zi).unwrap();
                let tv = ddbi_targets(&s_db, &cfg, &b, DdbiTimeForm::UnitNoise)
                    .unwrap()
                    .time_score;
                m2_db += tv * tv;
            }
            m2_di /= n as f64;
            m2_db /= n as f64;
            let v_di = vdi_integrand(&s_di, &m).unwrap();
            let v_db = vddbi_integrand(&s_db, &cfg, &m).unwrap();
            worst_di = worst_di.max(((m2_di - v_di) / v_di).abs());
            worst_db = worst_db.max(((m2_db - v_db) / v_db).abs());
        }
        println!("seed {seed}: worst DI rel {worst_di:.4}, worst DDBI rel {worst_db:.4}");
    }
}

#[test]
fn probe_zero_model_loss_ratio() {
    let task = gaussian_isotropic_task(2, 4.0).unwrap();
    let mut cfg = TrainConfig::new(21, 5000);
    cfg.path_update_every = usize::MAX;
    cfg.batch_size = 256;
    cfg.hidden = vec![64, 64];
    let t0 = std::time::Instant::now();
    let out = train(
        &task,
        InterpolantKind::Di,
        PathMode::Fixed(FixedScheduleKind::Trigonometric),
        &cfg,
    )
    .unwrap();
    let head: f64 = out.trace[..30].iter().map(|r| r.cjsm).sum::<f64>() / 30.0;
    let tail: f64 =
        out.trace[out.trace.len() - 200..].iter().map(|r| r.cjsm).sum::<f64>() / 200.0;
    println!(
        "zero-ish loss {head:.3} final {tail:.3} ratio {:.4} time {:?}",
        tail / head,
        t0.elapsed()
    );
}

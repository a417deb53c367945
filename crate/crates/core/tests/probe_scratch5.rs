//! Scratch: error structure of the trained DI time head.

use mvp_core::benchmarks::gaussian_block_task;
use mvp_core::interpolants::sample_di;
use mvp_core::quad::linspace;
use mvp_core::rng::{standard_normal_matrix, stream_rng};
use mvp_core::schedules::FixedScheduleKind;
use mvp_core::train::{train, LrDecay, PathMode, TrainConfig};
use mvp_core::variance::InterpolantKind;

#[test]
fn probe_error_structure() {
    let task = gaussian_block_task(2, 0.5).unwrap();
    let mut cfg = TrainConfig::new(1001, 6000);
    cfg.batch_size = 512;
    cfg.eps_w = 300.0;
    cfg.lr_decay = LrDecay::Cosine;
    let out = train(
        &task,
        InterpolantKind::Di,
        PathMode::Fixed(FixedScheduleKind::Trigonometric),
        &cfg,
    )
    .unwrap();
    let marginal = task.gaussian_marginal.as_ref().unwrap();
    let compiled = out.path.compile().unwrap();

    // (a) x drawn from p1 (as in inference)
    let xs_p1 = (task.sampler_p1)(&mut stream_rng(2002, "es.x"), 512);
    // (b) x drawn from the path marginal at each t (as in training)
    let x0s = (task.sampler_p0)(&mut stream_rng(2003, "es.x0"), 512);

    for &t in &linspace(0.1, 0.9, 9) {
        let sched = compiled.eval(t);
        let (mut n1, mut d1) = (0.0, 0.0);
        let mut dot = 0.0;
        let mut tt = 0.0;
        for x in xs_p1.chunks_exact(2) {
            let truth = marginal.time_score(&sched, x);
            let got = out.model.forward(x, t).unwrap()[2];
            n1 += (got - truth) * (got - truth);
            d1 += truth * truth;
            dot += got * truth;
            tt += truth * truth;
        }
        let c = dot / tt; // least-squares scale of model on truth
        // residual after rescaling truth -> c*truth
        let mut resid = 0.0;
        for x in xs_p1.chunks_exact(2) {
            let truth = marginal.time_score(&sched, x);
            let got = out.model.forward(x, t).unwrap()[2];
            resid += (got - c * truth) * (got - c * truth);
        }

        // marginal-x probe
        let (mut n2, mut d2) = (0.0, 0.0);
        for i in 0..512 {
            let x0 = &x0s[2 * i..2 * i + 2];
            let x1 = &xs_p1[2 * i..2 * i + 2];
            let xt = sample_di(&sched, x0, x1).unwrap().x_t;
            let truth = marginal.time_score(&sched, &xt);
            let got = out.model.forward(&xt, t).unwrap()[2];
            n2 += (got - truth) * (got - truth);
            d2 += truth * truth;
        }
        println!(
            "t={t:.2}: rel_p1={:.4} scale_c={c:.4} resid_after_c={:.4} rel_marg={:.4}",
            (n1 / d1).sqrt(),
            (resid / d1).sqrt(),
            (n2 / d2).sqrt()
        );
    }
}

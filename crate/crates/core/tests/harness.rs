mod common;

use common::rng;
use fimopt::harness::*;
use fimopt::matlib::{inv_sqrt, random, sym_pow, Matrix};
use fimopt::optim::{AdamConfig, AliceConfig, OptimizerConfig, RacsConfig};
use fimopt::Execution;

fn fd_check(loss: impl Fn(&[Matrix]) -> f64, grads: &[Matrix], at: &[Matrix]) {
    let h = 1e-5;
    for (k, g) in grads.iter().enumerate() {
        for idx in 0..g.as_slice().len() {
            let mut plus = at.to_vec();
            let mut minus = at.to_vec();
            plus[k].as_mut_slice()[idx] += h;
            minus[k].as_mut_slice()[idx] -= h;
            let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
            let an = g.as_slice()[idx];
            assert!(
                (fd - an).abs() <= 1e-4 * an.abs().max(1e-3),
                "param {k} entry {idx}: fd {fd} analytic {an}"
            );
        }
    }
}

#[test]
fn regression_gradient_matches_finite_differences() {
    let p = MatrixRegression::random(1, 40, 5, 3, 10.0).unwrap();
    let mut r = rng(2);
    for _ in 0..5 {
        let w = random::gaussian(&mut r, 5, 3);
        fd_check(|ps| p.loss(&ps[0]).unwrap(), &[p.grad(&w).unwrap()], &[w]);
    }
}

#[test]
fn mlp_gradient_matches_finite_differences() {
    let p = TinyMlp::blobs(3, 4, 6, 3, 5, 1.0).unwrap();
    for seed in 0..5 {
        let at = p.init(seed);
        let (_, grads) = p.loss_grad(&at).unwrap();
        fd_check(|ps| p.loss(ps).unwrap(), &grads, &at);
    }
}

#[test]
fn normal_equations_are_stationary() {
    let p = MatrixRegression::random(4, 50, 6, 4, 30.0).unwrap();
    let xtx = p.x.t_matmul(&p.x).unwrap();
    let w = sym_pow(&xtx, -1.0)
        .unwrap()
        .matmul(&p.x.t_matmul(&p.y).unwrap())
        .unwrap();
    assert!(p.grad(&w).unwrap().max_abs() < 1e-8);
    let _ = inv_sqrt(&Matrix::identity(1)).unwrap();
}

#[test]
fn stream_covariance_matches_closed_form() {
    let s = SyntheticGradientStream::random(5, 4, 6, 3, 0.5);
    let mut r = rng(6);
    let draws = 10_000;
    let mut acc = Matrix::zeros(4, 4);
    for _ in 0..draws {
        let g = s.sample(&mut r);
        acc.axpby(1.0, 1.0 / draws as f64, &g.gram_rows()).unwrap();
    }
    let want = s.expected_ggt();
    let err = acc.sub(&want).unwrap().frobenius() / want.frobenius();
    assert!(err < 0.05, "relative error {err}");
}

fn regression() -> Problem {
    Problem::MatrixRegression(MatrixRegression::random(7, 64, 8, 6, 10.0).unwrap())
}

#[test]
fn sgd_with_tiny_lr_is_monotone() {
    let p = regression();
    let sch = Schedule {
        base_lr: 1e-3,
        total_steps: 300,
        ..Schedule::default()
    };
    let out = train(&p, &OptimizerConfig::Sgd, &sch, &TrainOptions::new(300, 1)).unwrap();
    let rows = &out.record.rows;
    for w in rows.windows(2) {
        assert!(w[1].loss <= w[0].loss + 1e-9);
    }
    assert!(out.record.final_loss < rows[0].loss);
}

#[test]
fn training_is_deterministic() {
    let p = Problem::TinyMlp(TinyMlp::blobs(8, 5, 8, 3, 10, 1.0).unwrap());
    let cfg = OptimizerConfig::Alice(AliceConfig {
        rank: 3,
        leading: 1,
        refresh_interval: 5,
        ..AliceConfig::default()
    });
    let sch = Schedule {
        base_lr: 0.02,
        total_steps: 60,
        ..Schedule::default()
    };
    let mut opts = TrainOptions::new(60, 11);
    opts.record_time = false;
    let a = train(&p, &cfg, &sch, &opts).unwrap();
    let b = train(&p, &cfg, &sch, &opts).unwrap();
    assert_eq!(a.record, b.record);
    assert_eq!(a.params, b.params);
    opts.exec = Execution::Sequential;
    let c = train(&p, &cfg, &sch, &opts).unwrap();
    assert_eq!(a.record, c.record);
    opts.record_time = true;
    let d = train(&p, &cfg, &sch, &opts).unwrap();
    assert!(a.record.same_trajectory(&d.record));
}

#[test]
fn divergence_is_detected() {
    let p = regression();
    let sch = Schedule::constant(1e3, 100);
    let out = train(&p, &OptimizerConfig::Sgd, &sch, &TrainOptions::new(100, 1)).unwrap();
    let at = out.record.diverged_at.expect("should diverge");
    assert_eq!(out.record.rows.last().unwrap().step, at);
    let mut csv = Vec::new();
    out.record.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with(CSV_HEADER));
    assert!(text.ends_with(&format!("# diverged at step {at}\n")));
}

#[test]
fn mlp_trains_with_every_optimizer_family() {
    let p = Problem::TinyMlp(TinyMlp::blobs(9, 6, 12, 4, 16, 0.7).unwrap());
    let cfgs = [
        (OptimizerConfig::Adam(AdamConfig::default()), 0.01),
        (OptimizerConfig::Racs(RacsConfig::default()), 0.05),
        (
            OptimizerConfig::Alice(AliceConfig {
                rank: 4,
                leading: 1,
                refresh_interval: 10,
                ..AliceConfig::default()
            }),
            0.02,
        ),
    ];
    for (cfg, lr) in cfgs {
        let sch = Schedule {
            base_lr: lr,
            total_steps: 300,
            ..Schedule::default()
        };
        let out = train(&p, &cfg, &sch, &TrainOptions::new(300, 3)).unwrap();
        let init = out.record.initial_loss().unwrap();
        assert!(
            out.record.final_loss < 0.5 * init,
            "{}: {} -> {}",
            cfg.kind().name(),
            init,
            out.record.final_loss
        );
    }
}

#[test]
fn bad_configs_are_rejected() {
    let p = regression();
    let sch = Schedule::constant(0.1, 10);
    assert!(train(&p, &OptimizerConfig::Sgd, &sch, &TrainOptions::new(11, 1)).is_err());
    let bad = Schedule {
        warmup_frac: 1.0,
        ..Schedule::default()
    };
    assert!(train(&p, &OptimizerConfig::Sgd, &bad, &TrainOptions::new(5, 1)).is_err());
    let spec: ProblemSpec =
        serde_json::from_str(r#"{"kind":"matrix_regression","rows":0,"cols":2}"#).unwrap();
    assert!(spec.build(1).is_err());
}

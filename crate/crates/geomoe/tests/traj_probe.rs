//! Temporary diagnostic (deleted before final).
use geomoe::graph::synth::{generate_heterogeneous, structural_node_features, SyntheticSpec};
use geomoe::training::{train, TrainConfig};

#[test]
#[ignore]
fn val_trajectory() {
    let spec = SyntheticSpec::from_mix(400, "tree:0.4,cycle:0.4,inter:0.3", 11).unwrap();
    let mut g = generate_heterogeneous(&spec).unwrap();
    let feats = structural_node_features(&g, 32, 11);
    g.set_features(feats).unwrap();
    let cfg = TrainConfig {
        seed: 11,
        epochs: 200,
        lambda: 0.1,
        lr: 0.01,
        tau: 0.1,
        pair_budget: 1500,
        d_h: Some(8),
        d_out: Some(8),
        d_t: 8,
        ..TrainConfig::default()
    };
    let out = train(&g, &cfg).unwrap();
    for r in out.log.iter().take(10) {
        println!("epoch {:3} task {:.4} dist {:.4} val {:.4}", r.epoch, r.task_loss, r.distortion_loss, r.val_metric);
    }
    for r in out.log.iter().skip(10).step_by(10) {
        println!("epoch {:3} task {:.4} dist {:.4} val {:.4}", r.epoch, r.task_loss, r.distortion_loss, r.val_metric);
    }
    println!("best epoch {} auc {:?} dist {:.4}", out.best_epoch, out.report.auc, out.report.avg_distortion);
}

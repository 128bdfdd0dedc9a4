//! Temporary diagnostic (deleted before final).
use geomoe::graph::sample::sample_multi_resolution;
use geomoe::graph::synth::{generate_heterogeneous, structural_node_features, SyntheticSpec};
use geomoe::graph::{Graph, UNREACHABLE};
use geomoe::mixture;
use geomoe::training::*;
use geomoe::{ParamStore, Tape};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn bench(seed: u64) -> Graph {
    let spec = SyntheticSpec::from_mix(400, "tree:0.4@4,cycle:0.4@6,inter:0.3", seed).unwrap();
    let mut g = generate_heterogeneous(&spec).unwrap();
    let feats = structural_node_features(&g, 32, seed);
    g.set_features(feats).unwrap();
    g
}

/// Distortion-only training ceiling: no BCE, no snapshot, final params.
fn distortion_ceiling(g: &Graph, k: usize, epochs: usize, seed: u64) -> f64 {
    let cfg = TrainConfig {
        seed,
        tau: 0.1,
        d_h: Some(8),
        d_out: Some(8),
        d_t: 8,
        k,
        init_curvatures: if k == 1 { vec![0.0] } else { vec![-3.0, -1.0, 0.0, 1.0, 3.0] },
        ..TrainConfig::default()
    }
    .resolve(g.n_nodes(), 32);
    let mut store = ParamStore::new();
    let model = build_model(&mut store, &cfg, None).unwrap();
    let clamps = model.bank.curvature_clamps();
    let mut adam = AdamState::new(&store);
    let subs: Vec<_> = (0..g.n_nodes() as u32)
        .map(|v| sample_multi_resolution(g, v, &cfg.radii))
        .collect();
    let features = g.features().unwrap().clone();
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0xABCD);
    let sampler = PairSampler::new(g, 3000, 512, &mut rng);
    for _ in 0..epochs {
        let mut tape = Tape::new();
        let fwd = build_forward(&mut tape, &store, &model, g, &features, &subs).unwrap();
        let pairs = sampler.epoch_pairs(&mut rng);
        let mut terms = Vec::new();
        for (u, v, gd) in pairs {
            let d2 = pair_distance_sq_t(&mut tape, &fwd, u as usize, v as usize, cfg.tau).unwrap();
            terms.push((d2, gd));
        }
        let loss = distortion_loss_t(&mut tape, &terms).unwrap();
        let grads = tape.backward(loss).unwrap();
        adam_step(&mut store, &mut adam, &grads, 0.01, 0.0, &clamps);
    }
    // Evaluate full-pair distortion from the final parameters.
    let values = forward_values(&store, &model, g, &features, &subs).unwrap();
    let spaces = model.bank.spaces(&store);
    let opts = geomoe::report::DistortionOptions {
        mode: geomoe::report::PairMode::Full,
        budget: 0,
        seed,
        tau: cfg.tau,
    };
    let rep =
        geomoe::report::average_distortion(&spaces, &values.z, &values.gates, g, &opts).unwrap();

    if k > 1 {
        // Autopsy: gate sharpness, curvatures, per-bucket error.
        let kappas: Vec<f64> = spaces.iter().map(|s| s.kappa).collect();
        println!("  kappas: {kappas:?}");
        let mean_max_gate: f64 = values
            .gates
            .iter()
            .map(|row| row.iter().cloned().fold(0.0, f64::max))
            .sum::<f64>()
            / values.gates.len() as f64;
        let mean_gate: Vec<f64> = (0..k)
            .map(|i| values.gates.iter().map(|r| r[i]).sum::<f64>() / values.gates.len() as f64)
            .collect();
        println!("  mean gate {mean_gate:?} mean max-gate {mean_max_gate:.3}");
        let mut bucket_err = vec![0.0f64; 16];
        let mut bucket_n = vec![0usize; 16];
        for u in 0..g.n_nodes() as u32 {
            let row = g.bfs_from(u);
            for v in (u + 1)..g.n_nodes() as u32 {
                let gd = row[v as usize];
                if gd == UNREACHABLE {
                    continue;
                }
                let aligned =
                    mixture::align_weights(&values.gates[u as usize], &values.gates[v as usize], 0.1);
                let zu: Vec<&[f64]> =
                    values.z.iter().map(|ze| ze[u as usize].as_slice()).collect();
                let zv: Vec<&[f64]> =
                    values.z.iter().map(|ze| ze[v as usize].as_slice()).collect();
                let d2 = mixture::pairwise_distance_sq(&spaces, &zu, &zv, &aligned).unwrap();
                let t = (d2 / (gd as f64 * gd as f64) - 1.0).abs();
                let b = (gd as usize).min(15);
                bucket_err[b] += t;
                bucket_n[b] += 1;
            }
        }
        for b in 1..16 {
            if bucket_n[b] > 0 {
                println!(
                    "  g={b:<2} pairs {:>6} mean |d2/g2-1| {:.3}",
                    bucket_n[b],
                    bucket_err[b] / bucket_n[b] as f64
                );
            }
        }
    }
    rep.mean
}

#[test]
#[ignore]
fn ceilings() {
    let g = bench(11);
    println!("--- K=5 distortion-only ceiling:");
    let full = distortion_ceiling(&g, 5, 300, 11);
    println!("K5 ceiling: {full:.4}");
    let euclid = distortion_ceiling(&g, 1, 300, 11);
    println!("K1 ceiling: {euclid:.4}");
}

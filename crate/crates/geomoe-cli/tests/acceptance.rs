//! Acceptance suite. Each criterion is one test that prints a single
//! `criterion N: PASS/FAIL` line (run with `--nocapture` to see them on
//! success). Criteria 4-6 share one benchmark matrix of 20 training runs
//! (5 seeds x {full, single-Euclidean, lambda=0, same-curvature}).

use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use geomoe::gradcheck::{self, GradTarget};
use geomoe::graph::curvature::{curvature_histogram, sectional_curvature};
use geomoe::graph::split::split_edges;
use geomoe::graph::synth::{
    generate_heterogeneous, structural_node_features, Substructure, SyntheticSpec,
};
use geomoe::graph::{Graph, UNREACHABLE};
use geomoe::manifold::ManifoldSpace;
use geomoe::report::{auc, average_precision};
use geomoe::training::{train, TrainConfig};

fn verdict(criterion: &str, ok: bool, detail: &str) {
    println!("criterion {criterion}: {} — {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {criterion} failed: {detail}");
}

// ---- criterion 1: manifold suite ---------------------------------------------

#[test]
fn criterion_1_manifold_suite() {
    let t0 = Instant::now();
    let mut rng = ChaCha20Rng::seed_from_u64(0xACCE5501);
    let kappas = [-3.0, -1.0, -0.5, 0.5, 1.0, 3.0];
    let mut worst_roundtrip = 0.0f64;
    let mut worst_mobius = 0.0f64;
    let mut worst_triangle = 0.0f64;
    let mut worst_continuity = 0.0f64;

    let rand_point = |rng: &mut ChaCha20Rng, space: &ManifoldSpace, scale: f64| -> Vec<f64> {
        let raw: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n: f64 = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        let limit = space.domain_radius().map(|r| 0.9 * r).unwrap_or(1.0) * scale;
        let target = rng.gen_range(0.0..limit);
        raw.iter().map(|x| x * target / n.max(1e-12)).collect()
    };

    for &kappa in &kappas {
        let space = ManifoldSpace::new(kappa);
        for _ in 0..1000 {
            // exp/log round trip within 0.9x the domain radius.
            let y = rand_point(&mut rng, &space, 1.0);
            let back = space.exp0(&space.log0(&y));
            let norm: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            for (a, b) in back.iter().zip(&y) {
                worst_roundtrip = worst_roundtrip.max((a - b).abs() / norm.max(1e-12));
            }

            // Mobius identity and inverse.
            let x = rand_point(&mut rng, &space, 0.8);
            let zero = vec![0.0; 3];
            for (a, b) in space.mobius_add(&zero, &x).unwrap().iter().zip(&x) {
                worst_mobius = worst_mobius.max((a - b).abs());
            }
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            for v in space.mobius_add(&neg, &x).unwrap() {
                worst_mobius = worst_mobius.max(v.abs());
            }

            // Triangle inequality.
            let a = rand_point(&mut rng, &space, 0.8);
            let b = rand_point(&mut rng, &space, 0.8);
            let c = rand_point(&mut rng, &space, 0.8);
            let dab = space.dist(&a, &b).unwrap();
            let dbc = space.dist(&b, &c).unwrap();
            let dac = space.dist(&a, &c).unwrap();
            worst_triangle = worst_triangle.max(dac - (dab + dbc));
        }
    }

    // kappa = 0: vector-addition degeneration plus continuity in kappa.
    let flat = ManifoldSpace::euclidean();
    for _ in 0..1000 {
        let x = rand_point(&mut rng, &flat, 0.5);
        let y = rand_point(&mut rng, &flat, 0.5);
        let d0 = flat.dist(&x, &y).unwrap();
        if d0 > 1e-6 {
            for kappa in [1e-6, -1e-6] {
                let d = ManifoldSpace::new(kappa).dist(&x, &y).unwrap();
                worst_continuity = worst_continuity.max((d - d0).abs() / d0);
            }
        }
        let s = flat.mobius_add(&x, &y).unwrap();
        for i in 0..3 {
            worst_mobius = worst_mobius.max((s[i] - (x[i] + y[i])).abs());
        }
    }

    let elapsed = t0.elapsed();
    let ok = worst_roundtrip <= 1e-9
        && worst_mobius <= 1e-12
        && worst_triangle <= 1e-9
        && worst_continuity <= 1e-4
        && elapsed.as_secs_f64() < 10.0;
    verdict(
        "1 (manifold suite)",
        ok,
        &format!(
            "roundtrip {worst_roundtrip:.2e} (<=1e-9), mobius {worst_mobius:.2e} (<=1e-12), \
             triangle {worst_triangle:.2e} (<=1e-9), continuity {worst_continuity:.2e} (<=1e-4), \
             {elapsed:.2?} (<10s)"
        ),
    );
}

// ---- criterion 2: gradient suite ----------------------------------------------

#[test]
fn criterion_2_gradient_suite() {
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    let mut worst_op = "none";
    let mut coords = 0usize;
    for target in gradcheck::ALL_TARGETS {
        let instances = match target {
            // Composite losses carry hundreds of coordinates each; the
            // per-op instance floor is 100 everywhere.
            GradTarget::DistortionLoss
            | GradTarget::LinkPredictionLoss
            | GradTarget::NodeClassificationLoss => 100,
            _ => 120,
        };
        let report = gradcheck::sweep(target, instances, 0xACCE5502).unwrap();
        coords += report.coords_checked;
        if report.max_rel_err > worst {
            worst = report.max_rel_err;
            worst_op = target.name();
        }
    }
    let elapsed = t0.elapsed();
    let ok = worst <= gradcheck::FD_TOLERANCE && elapsed.as_secs_f64() < 120.0;
    verdict(
        "2 (gradient suite)",
        ok,
        &format!(
            "max rel err {worst:.2e} (<=1e-4, worst at {worst_op}), {coords} coordinates, \
             {elapsed:.2?} (<2min)"
        ),
    );
}

// ---- criterion 3: oracle equivalence -------------------------------------------

fn floyd_warshall(g: &Graph) -> Vec<Vec<u64>> {
    const INF: u64 = 1 << 40;
    let n = g.n_nodes();
    let mut d = vec![vec![INF; n]; n];
    for i in 0..n {
        d[i][i] = 0;
    }
    for (u, v) in g.edges() {
        d[u as usize][v as usize] = 1;
        d[v as usize][u as usize] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

fn curvature_oracle(d: &[Vec<u64>], m: u32, b: u32, c: u32) -> f64 {
    const INF: u64 = 1 << 40;
    let mut sum: i64 = 0;
    let mut cnt: i64 = 0;
    let g_bc = d[b as usize][c as usize] as i64;
    for a in 0..d.len() {
        if d[a][m as usize] >= INF {
            continue;
        }
        cnt += 1;
        let am = d[a][m as usize] as i64;
        let ab = d[a][b as usize] as i64;
        let ac = d[a][c as usize] as i64;
        sum += 4 * am * am + g_bc * g_bc - 2 * ab * ab - 2 * ac * ac;
    }
    sum as f64 / (4.0 * cnt as f64)
}

fn auc_oracle(scores: &[f64], labels: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut total = 0.0;
    for (i, &li) in labels.iter().enumerate() {
        if !li {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj {
                continue;
            }
            total += 1.0;
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    wins / total
}

fn ap_oracle(scores: &[f64], labels: &[bool]) -> f64 {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    let n_pos = labels.iter().filter(|&&l| l).count();
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (k, &idx) in order.iter().enumerate() {
        if labels[idx] {
            hits += 1;
            sum += hits as f64 / (k + 1) as f64;
        }
    }
    sum / n_pos as f64
}

#[test]
fn criterion_3_oracle_equivalence() {
    let mut rng = ChaCha20Rng::seed_from_u64(0xACCE5503);
    let mut checks = 0usize;

    // Fixed hand-derived values.
    let k3 = Graph::from_edges(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
    assert_eq!(sectional_curvature(&k3, 0, 1, 2).unwrap(), 0.25);
    let star = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
    assert_eq!(sectional_curvature(&star, 0, 1, 2).unwrap(), -0.5);

    // Random graphs up to 30 nodes: BFS rows and curvature triples match
    // brute force exactly.
    for trial in 0..20 {
        let n = rng.gen_range(5..=30);
        let mut edges = Vec::new();
        for u in 0..n as u32 {
            for v in (u + 1)..n as u32 {
                if rng.gen_bool(0.15) {
                    edges.push((u, v));
                }
            }
        }
        let g = Graph::from_edges(n, &edges).unwrap();
        let d = floyd_warshall(&g);
        for src in 0..n {
            let row = g.bfs_from(src as u32);
            for j in 0..n {
                let expect =
                    if d[src][j] >= (1 << 40) { UNREACHABLE } else { d[src][j] as u32 };
                assert_eq!(row[j], expect, "bfs mismatch trial {trial}");
                checks += 1;
            }
        }
        for m in 0..n as u32 {
            let nbrs = g.neighbors(m).to_vec();
            for i in 0..nbrs.len().min(3) {
                for j in (i + 1)..nbrs.len().min(3) {
                    let got = sectional_curvature(&g, m, nbrs[i], nbrs[j]).unwrap();
                    let want = curvature_oracle(&d, m, nbrs[i], nbrs[j]);
                    assert_eq!(got, want, "curvature mismatch trial {trial}");
                    checks += 1;
                }
            }
        }
    }

    // AUC/AP against brute force on up to 1000 items, ties included.
    for trial in 0..30 {
        let n = rng.gen_range(10..=1000);
        let quantized = rng.gen_bool(0.5);
        let scores: Vec<f64> = (0..n)
            .map(|_| {
                if quantized {
                    (rng.gen_range(0..9) as f64) / 9.0
                } else {
                    rng.gen::<f64>()
                }
            })
            .collect();
        let mut labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
        labels[0] = true;
        labels[1] = false;
        assert_eq!(
            auc(&scores, &labels).unwrap(),
            auc_oracle(&scores, &labels),
            "auc mismatch trial {trial}"
        );
        assert_eq!(
            average_precision(&scores, &labels).unwrap(),
            ap_oracle(&scores, &labels),
            "ap mismatch trial {trial}"
        );
        checks += 2;
    }

    verdict(
        "3 (oracle equivalence)",
        true,
        &format!("{checks} exact comparisons (BFS, sectional curvature, AUC, AP)"),
    );
}

// ---- criteria 4-6: shared benchmark matrix -------------------------------------

const BENCH_SEEDS: [u64; 5] = [11, 22, 33, 44, 55];

#[derive(Clone, Copy, Debug)]
struct RunScore {
    auc: f64,
    distortion: f64,
}

#[derive(Clone, Debug)]
struct SeedRuns {
    seed: u64,
    full: RunScore,
    euclidean: RunScore,
    no_distortion: RunScore,
    same_curvature: RunScore,
}

fn bench_graph(seed: u64) -> Graph {
    let spec = SyntheticSpec::from_mix(400, "tree:0.4,cycle:0.4,inter:0.3", seed).unwrap();
    let mut g = generate_heterogeneous(&spec).unwrap();
    let feats = structural_node_features(&g, 32, seed);
    g.set_features(feats).unwrap();
    g
}

fn bench_config(seed: u64) -> TrainConfig {
    TrainConfig {
        seed,
        epochs: 200,
        patience: 100,
        lambda: 0.1,
        lr: 0.01,
        k: 5,
        init_curvatures: vec![-3.0, -1.0, 0.0, 1.0, 3.0],
        d_h: Some(16),
        d_out: Some(16),
        d_t: 16,
        tau: 0.1,
        pair_budget: 1500,
        ..TrainConfig::default()
    }
}

fn run_one(g: &Graph, cfg: &TrainConfig) -> RunScore {
    let t0 = Instant::now();
    let out = train(g, cfg).expect("benchmark run trains");
    assert!(!out.diverged, "benchmark run diverged");
    let dt = t0.elapsed();
    assert!(dt.as_secs_f64() < 300.0, "run exceeded the 5 min budget: {dt:?}");
    RunScore { auc: out.report.auc.unwrap(), distortion: out.report.avg_distortion }
}

static BENCH: OnceLock<Vec<SeedRuns>> = OnceLock::new();

fn bench_runs() -> &'static Vec<SeedRuns> {
    BENCH.get_or_init(|| {
        BENCH_SEEDS
            .iter()
            .map(|&seed| {
                let g = bench_graph(seed);
                let full_cfg = bench_config(seed);
                let full = run_one(&g, &full_cfg);
                let euclidean = run_one(
                    &g,
                    &TrainConfig {
                        k: 1,
                        init_curvatures: vec![0.0],
                        ..full_cfg.clone()
                    },
                );
                let no_distortion = run_one(&g, &TrainConfig { lambda: 0.0, ..full_cfg.clone() });
                let same_curvature = run_one(
                    &g,
                    &TrainConfig {
                        init_curvatures: vec![-1.0; 5],
                        ..full_cfg.clone()
                    },
                );
                let runs = SeedRuns { seed, full, euclidean, no_distortion, same_curvature };
                println!(
                    "bench seed {seed}: full auc {:.4}/dist {:.4} | euclid {:.4}/{:.4} | \
                     no-dist {:.4}/{:.4} | same-curv {:.4}/{:.4}",
                    runs.full.auc,
                    runs.full.distortion,
                    runs.euclidean.auc,
                    runs.euclidean.distortion,
                    runs.no_distortion.auc,
                    runs.no_distortion.distortion,
                    runs.same_curvature.auc,
                    runs.same_curvature.distortion,
                );
                runs
            })
            .collect()
    })
}

#[test]
fn criterion_4_distortion_directionality() {
    let runs = bench_runs();
    let wins = runs
        .iter()
        .filter(|r| r.full.distortion <= 0.9 * r.euclidean.distortion)
        .count();
    let detail = runs
        .iter()
        .map(|r| format!("seed {}: {:.4} vs {:.4}", r.seed, r.full.distortion, r.euclidean.distortion))
        .collect::<Vec<_>>()
        .join("; ");
    verdict(
        "4 (distortion directionality)",
        wins >= 4,
        &format!(">=10% lower on {wins}/5 seeds (need >=4) [{detail}]"),
    );
}

#[test]
fn criterion_5_lp_directionality() {
    let runs = bench_runs();
    let order_wins = runs.iter().filter(|r| r.full.auc >= r.euclidean.auc).count();
    let strong = runs.iter().filter(|r| r.full.auc >= 0.85).count();
    let detail = runs
        .iter()
        .map(|r| format!("seed {}: {:.4} vs {:.4}", r.seed, r.full.auc, r.euclidean.auc))
        .collect::<Vec<_>>()
        .join("; ");
    verdict(
        "5 (LP directionality)",
        order_wins >= 4 && strong >= 3,
        &format!(
            "full >= euclidean on {order_wins}/5 (need >=4), auc >= 0.85 on {strong}/5 (need >=3) \
             [{detail}]"
        ),
    );
}

#[test]
fn criterion_6_ablation_ordering() {
    let runs = bench_runs();
    let no_dist_wins = runs.iter().filter(|r| r.no_distortion.auc <= r.full.auc).count();
    let same_curv_wins = runs.iter().filter(|r| r.same_curvature.auc <= r.full.auc).count();
    let detail = runs
        .iter()
        .map(|r| {
            format!(
                "seed {}: full {:.4}, no-dist {:.4}, same-curv {:.4}",
                r.seed, r.full.auc, r.no_distortion.auc, r.same_curvature.auc
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    verdict(
        "6 (ablation ordering)",
        no_dist_wins >= 3 && same_curv_wins >= 3,
        &format!(
            "no-distortion <= full on {no_dist_wins}/5, same-curvature <= full on \
             {same_curv_wins}/5 (need majority) [{detail}]"
        ),
    );
}

// ---- criterion 7: protocol fidelity ---------------------------------------------

#[test]
fn criterion_7_protocol_fidelity() {
    // 85/5/10 positives with equal-count negatives on a 100-edge graph.
    let mut edges = Vec::new();
    'outer: for u in 0..30u32 {
        for v in (u + 1)..30u32 {
            if (u + v) % 3 != 0 {
                edges.push((u, v));
                if edges.len() == 100 {
                    break 'outer;
                }
            }
        }
    }
    let g = Graph::from_edges(30, &edges).unwrap();
    let s = split_edges(&g, (0.85, 0.05, 0.10), 7).unwrap();
    let counts_ok = s.train_pos.len() == 85
        && s.valid_pos.len() == 5
        && s.test_pos.len() == 10
        && s.train_neg.len() == 85
        && s.valid_neg.len() == 5
        && s.test_neg.len() == 10;

    // Config defaults pin the documented protocol.
    let cfg = TrainConfig::default();
    let defaults_ok = cfg.split_ratios == (0.85, 0.05, 0.10)
        && cfg.epochs >= 200
        && cfg.patience == 100
        && [1.0, 0.5, 0.1, 0.05, 0.01].contains(&cfg.lambda)
        && [0.1, 0.01, 0.001].contains(&cfg.lr)
        && [0.0, 5e-4, 1e-3].contains(&cfg.weight_decay);

    verdict(
        "7 (protocol fidelity)",
        counts_ok && defaults_ok,
        &format!(
            "split 85/5/10 with matched negatives: {counts_ok}; defaults (ratios, epochs >= 200, \
             patience 100, grids): {defaults_ok}"
        ),
    );
}

// ---- criterion 8: CLI determinism ------------------------------------------------

#[test]
fn criterion_8_cli_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_geomoe");
    let data = tmp.path().join("data");
    let status = Command::new(bin)
        .args([
            "generate",
            "--nodes",
            "150",
            "--mix",
            "tree:0.4,cycle:0.4,inter:0.3",
            "--seed",
            "9",
            "--out",
            data.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let cfg = tmp.path().join("cfg.toml");
    std::fs::write(
        &cfg,
        "train.epochs = 40\ntrain.patience = 40\npairs.budget = 300\n\
         dims.d_h = 8\ndims.d_out = 8\ndims.d_t = 8\n",
    )
    .unwrap();

    let mut artifacts: Vec<(Vec<u8>, Vec<u8>)> = Vec::new();
    for run_name in ["run_a", "run_b"] {
        let run = tmp.path().join(run_name);
        let status = Command::new(bin)
            .args([
                "train",
                "--task",
                "lp",
                "--graph",
                data.join("edges.txt").to_str().unwrap(),
                "--features",
                data.join("features.txt").to_str().unwrap(),
                "--config",
                cfg.to_str().unwrap(),
                "--seed",
                "9",
                "--deterministic",
                "--out",
                run.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success(), "train run failed");
        artifacts.push((
            std::fs::read(run.join("log.csv")).unwrap(),
            std::fs::read(run.join("report.json")).unwrap(),
        ));
    }
    let logs_equal = artifacts[0].0 == artifacts[1].0;
    let reports_equal = artifacts[0].1 == artifacts[1].1;
    verdict(
        "8 (determinism)",
        logs_equal && reports_equal,
        &format!("log.csv byte-identical: {logs_equal}; report.json byte-identical: {reports_equal}"),
    );
}

// ---- criterion 9: curvature-sign sanity -------------------------------------------

#[test]
fn criterion_9_curvature_sign_sanity() {
    let tree = generate_heterogeneous(&SyntheticSpec {
        parts: vec![Substructure::Tree { branching: 2, depth: 6 }],
        inter_edges: 0,
        seed: 0,
    })
    .unwrap();
    let tree_hist = curvature_histogram(&tree, None, 0);

    let cycle = generate_heterogeneous(&SyntheticSpec {
        parts: vec![Substructure::Cycle { len: 50 }],
        inter_edges: 0,
        seed: 0,
    })
    .unwrap();
    let cycle_hist = curvature_histogram(&cycle, None, 0);

    let ok = tree_hist.fraction_negative > 0.5 && cycle_hist.fraction_nonnegative > 0.5;
    verdict(
        "9 (curvature-sign sanity)",
        ok,
        &format!(
            "depth-6 tree fraction_negative {:.3} (>0.5), C50 fraction_nonnegative {:.3} (>0.5)",
            tree_hist.fraction_negative, cycle_hist.fraction_nonnegative
        ),
    );
}

//! Property checks for every module invariant. Each check runs its own
//! deterministic proptest runner for the requested number of cases.

use std::collections::BTreeSet;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRng, TestRunner};
use rand::SeedableRng;

use clcrec::cli;
use clcrec::config::{EncoderName, TrainConfig};
use clcrec::corpus::{gen_synthetic, make_split, sample_negatives, SplitBundle, SyntheticConfig};
use clcrec::eval::{
    candidates, evaluate, rank_metrics, ColdScoring, ScenarioKind, ScenarioSpec, Scorer, SplitKind,
};
use clcrec::model::{encode_feature, encode_lightgcn, encode_mf, xavier_init, GraphAdjacency, ModelDims, ParameterSet};
use clcrec::objective::{
    density_g, loss_bpr, loss_re, loss_ui, softmax, Batch, BatchEntry, Gradients, Representations,
};
use clcrec::optim::adam::{adam_step, AdamState};
use clcrec::optim::gradcheck::{finite_diff_check, tiny_instance};
use clcrec::optim::train::{train, train_with};
use clcrec::rng::{stream, Rng, Stream};
use clcrec::tensor::{dot, Matrix};

use super::oracle::brute_metrics;

pub type Check = fn(u32) -> Result<(), String>;

pub const ALL: &[(&str, Check)] = &[
    ("corpus: cold items never in training", cold_items_never_in_training),
    ("corpus: per-user train share in [0.7, 0.9]", split_ratio),
    ("corpus: negatives are never training positives", negatives_never_positive),
    ("corpus: operations are deterministic", corpus_deterministic),
    ("model: MF encoder is the identity", mf_identity),
    ("model: LightGCN is linear", lightgcn_linear),
    ("model: LightGCN maps zeros to zeros", lightgcn_zero),
    ("model: zero input and biases give f = 0", feature_zero),
    ("model: encoder outputs are finite", encoders_finite),
    ("objective: BPR identity", bpr_identity),
    ("objective: loss bounds and ties", loss_bounds),
    ("objective: softmax sums to one", softmax_normalized),
    ("objective: negative order is irrelevant", negative_permutation),
    ("objective: raising the positive score lowers the loss", positive_monotonicity),
    ("objective: temperature keeps the score order", temperature_order),
    ("objective: gradients match finite differences", gradient_exactness),
    ("optim: Adam is permutation-equivariant", adam_equivariant),
    ("optim: best snapshot dominates the history", early_stopping),
    ("optim: training leaves the corpus untouched", training_pure),
    ("optim: default run has finite losses", default_run_finite),
    ("eval: metrics are bounded, NDCG = 1 iff ideal", metric_bounds),
    ("eval: candidates exclude training positives", candidate_exclusion),
    ("eval: evaluation is repeatable", evaluate_repeatable),
    ("eval: a -inf candidate changes nothing", neg_infinity_candidate),
    ("eval: metrics agree with the brute-force oracle", metric_oracle),
    ("cli: config round-trips through TOML", config_round_trip),
    ("cli: commands are byte-deterministic", cli_deterministic),
    ("cli: exit codes", cli_exit_codes),
];

fn run<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> std::result::Result<(), TestCaseError>,
) -> Result<(), String> {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let rng = TestRng::deterministic_rng(config.rng_algorithm);
    TestRunner::new_with_rng(config, rng)
        .run(&strategy, test)
        .map_err(|e| e.to_string())
}

fn fail(e: impl std::fmt::Display) -> TestCaseError {
    TestCaseError::fail(e.to_string())
}

fn rng(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

fn uniform(rng: &mut Rng, lo: f64, hi: f64) -> f64 {
    use rand::Rng as _;
    rng.gen_range(lo..hi)
}

fn random_matrix(rng: &mut Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    let data = (0..rows * cols).map(|_| uniform(rng, -scale, scale)).collect();
    Matrix::from_vec(rows, cols, data)
}

/// Synthetic corpus with a random cold fraction.
fn corpus() -> impl Strategy<Value = (SyntheticConfig, f64)> {
    (any::<u64>(), 5usize..30, 10usize..50, 3usize..15, 2usize..12, 0.05f64..0.5).prop_map(
        |(seed, n_users, n_warm, n_cold, per_user, frac)| {
            let syn = SyntheticConfig {
                n_users,
                n_warm,
                n_cold,
                latent: 3,
                feat_dim: 4,
                per_user,
                noise: 0.5,
                seed,
            };
            (syn, frac)
        },
    )
}

fn bundle_of(syn: &SyntheticConfig, frac: f64) -> SplitBundle {
    let (log, _, _) = gen_synthetic(syn).unwrap();
    make_split(&log, frac, syn.seed).unwrap()
}

fn cold_items_never_in_training(cases: u32) -> Result<(), String> {
    run(cases, corpus(), |(syn, frac)| {
        let b = bundle_of(&syn, frac);
        for &(_, i) in b.train.iter().chain(&b.warm_val).chain(&b.warm_test) {
            prop_assert!(!b.is_cold(i), "cold item {i} in a warm split");
        }
        for &(_, i) in &b.cold_interactions {
            prop_assert!(b.is_cold(i));
        }
        Ok(())
    })
}

fn split_ratio(cases: u32) -> Result<(), String> {
    let strategy = (any::<u64>(), 10usize..30, 0.05f64..0.3);
    run(cases, strategy, |(seed, per_user, frac)| {
        let syn = SyntheticConfig {
            n_users: 15,
            n_warm: 60,
            n_cold: 10,
            latent: 3,
            feat_dim: 4,
            per_user,
            noise: 0.5,
            seed,
        };
        let b = bundle_of(&syn, frac);
        let mut counts = vec![(0usize, 0usize); b.n_users];
        for &(u, _) in &b.train {
            counts[u].0 += 1;
        }
        for &(u, _) in b.train.iter().chain(&b.warm_val).chain(&b.warm_test) {
            counts[u].1 += 1;
        }
        for (u, &(train, total)) in counts.iter().enumerate() {
            if total >= 10 {
                let share = train as f64 / total as f64;
                prop_assert!((0.7..=0.9).contains(&share), "user {u}: {train}/{total}");
            }
        }
        Ok(())
    })
}

fn negatives_never_positive(cases: u32) -> Result<(), String> {
    run(cases, (corpus(), any::<u64>(), 1usize..64), |((syn, frac), seed, k)| {
        let b = bundle_of(&syn, frac);
        let mut r = rng(seed);
        for u in 0..b.n_users {
            match sample_negatives(&b, u, k, &mut r) {
                Ok(neg) => {
                    prop_assert_eq!(neg.len(), k);
                    for i in neg {
                        prop_assert!(!b.is_train_positive(u, i) && !b.is_cold(i));
                    }
                }
                Err(clcrec::Error::NoNegative(_)) => {}
                Err(e) => return Err(fail(e)),
            }
        }
        Ok(())
    })
}

fn corpus_deterministic(cases: u32) -> Result<(), String> {
    run(cases, corpus(), |(syn, frac)| {
        let a = gen_synthetic(&syn).unwrap();
        let b = gen_synthetic(&syn).unwrap();
        prop_assert_eq!(&a.0, &b.0);
        prop_assert_eq!(&a.1, &b.1);
        prop_assert_eq!(&a.2, &b.2);
        let s1 = make_split(&a.0, frac, syn.seed).unwrap();
        let s2 = make_split(&b.0, frac, syn.seed).unwrap();
        prop_assert_eq!(&s1, &s2);
        let n1 = sample_negatives(&s1, 0, 16, &mut stream(syn.seed, Stream::Negatives));
        let n2 = sample_negatives(&s2, 0, 16, &mut stream(syn.seed, Stream::Negatives));
        prop_assert_eq!(format!("{n1:?}"), format!("{n2:?}"));
        Ok(())
    })
}

fn random_params(seed: u64, n_users: usize, n_items: usize, dim: usize) -> ParameterSet {
    let dims = ModelDims {
        n_users,
        n_items,
        dim,
        hidden: 5,
        feat_dim: 3,
    };
    xavier_init(dims, &mut rng(seed)).unwrap()
}

fn mf_identity(cases: u32) -> Result<(), String> {
    run(cases, (any::<u64>(), 1usize..6, 1usize..6, 1usize..5), |(seed, nu, ni, d)| {
        let p = random_params(seed, nu, ni, d);
        for row in 0..nu + ni {
            prop_assert_eq!(encode_mf(&p, row).unwrap(), p.embed.row(row).to_vec());
        }
        Ok(())
    })
}

/// Random bipartite graph on up to 6 users and 6 items.
pub fn graph() -> impl Strategy<Value = (usize, usize, Vec<(usize, usize)>)> {
    (1usize..6, 1usize..6).prop_flat_map(|(nu, ni)| {
        let edges = prop::collection::btree_set((0..nu, 0..ni), 0..=nu * ni);
        (Just(nu), Just(ni), edges.prop_map(|s| s.into_iter().collect::<Vec<_>>()))
    })
}

fn lightgcn_linear(cases: u32) -> Result<(), String> {
    let strategy = (graph(), any::<u64>(), 1usize..4, -2.0f64..2.0, -2.0f64..2.0);
    run(cases, strategy, |((nu, ni, edges), seed, layers, alpha, beta)| {
        let g = GraphAdjacency::from_train(nu, ni, &edges);
        let mut r = rng(seed);
        let e1 = random_matrix(&mut r, nu + ni, 3, 1.0);
        let e2 = random_matrix(&mut r, nu + ni, 3, 1.0);
        let mix: Vec<f64> = e1
            .as_slice()
            .iter()
            .zip(e2.as_slice())
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        let lhs = encode_lightgcn(&Matrix::from_vec(nu + ni, 3, mix), &g, layers).unwrap();
        let z1 = encode_lightgcn(&e1, &g, layers).unwrap();
        let z2 = encode_lightgcn(&e2, &g, layers).unwrap();
        for (k, &l) in lhs.as_slice().iter().enumerate() {
            let rhs = alpha * z1.as_slice()[k] + beta * z2.as_slice()[k];
            prop_assert!((l - rhs).abs() < 1e-10, "{l} vs {rhs}");
        }
        Ok(())
    })
}

fn lightgcn_zero(cases: u32) -> Result<(), String> {
    run(cases, (graph(), 1usize..4), |((nu, ni, edges), layers)| {
        let g = GraphAdjacency::from_train(nu, ni, &edges);
        let z = encode_lightgcn(&Matrix::zeros(nu + ni, 4), &g, layers).unwrap();
        prop_assert!(z.as_slice().iter().all(|&v| v == 0.0));
        Ok(())
    })
}

fn feature_zero(cases: u32) -> Result<(), String> {
    run(cases, any::<u64>(), |seed| {
        let mut p = random_params(seed, 1, 1, 4);
        p.b1.iter_mut().for_each(|b| *b = 0.0);
        p.b2.iter_mut().for_each(|b| *b = 0.0);
        let f = encode_feature(&p, &[0.0; 3]).unwrap();
        prop_assert!(f.iter().all(|&v| v == 0.0), "{f:?}");
        Ok(())
    })
}

fn encoders_finite(cases: u32) -> Result<(), String> {
    let strategy = (graph(), any::<u64>(), prop::collection::vec(-1e3f64..1e3, 3));
    run(cases, strategy, |((nu, ni, edges), seed, x)| {
        let p = random_params(seed, nu, ni, 4);
        let g = GraphAdjacency::from_train(nu, ni, &edges);
        prop_assert!(encode_mf(&p, 0).unwrap().iter().all(|v| v.is_finite()));
        prop_assert!(encode_lightgcn(&p.embed, &g, 3).unwrap().as_slice().iter().all(|v| v.is_finite()));
        prop_assert!(encode_feature(&p, &x).unwrap().iter().all(|v| v.is_finite()));
        Ok(())
    })
}

/// Batch over `n_users` users and `n_items` items with random z and f, every
/// entry holding `k` negatives distinct from its positive.
pub struct LossCase {
    pub batch: Batch,
    pub z: Matrix,
    pub f: Vec<(usize, Vec<f64>)>,
    pub n_users: usize,
}

impl LossCase {
    pub fn reps(&self) -> Representations<'static> {
        Representations::from_parts(self.z.clone(), self.n_users, &self.f)
    }
}

pub fn loss_case(seed: u64, k: usize, entries: usize, scale: f64, rho: f64, with_re: bool) -> LossCase {
    use rand::Rng as _;
    let mut r = rng(seed);
    let (n_users, n_items, d) = (3, k + 4, 3);
    let z = random_matrix(&mut r, n_users + n_items, d, scale);
    let f = (0..n_items).map(|i| (i, (0..d).map(|_| uniform(&mut r, -scale, scale)).collect())).collect();
    let mut batch = Batch { entries: Vec::new() };
    for _ in 0..entries {
        let item = r.gen_range(0..n_items);
        let others: Vec<usize> = (0..n_items).filter(|&j| j != item).collect();
        let pick = |r: &mut Rng| (0..k).map(|_| others[r.gen_range(0..others.len())]).collect::<Vec<_>>();
        let ui_negatives = pick(&mut r);
        let re_negatives = if with_re { pick(&mut r) } else { Vec::new() };
        let hybrid = (0..=k).map(|_| r.gen_bool(rho)).collect();
        batch.entries.push(BatchEntry {
            user: r.gen_range(0..n_users),
            item,
            ui_negatives,
            re_negatives,
            hybrid,
        });
    }
    LossCase { batch, z, f, n_users }
}

fn bpr_identity(cases: u32) -> Result<(), String> {
    run(cases, (any::<u64>(), 1usize..8, 0.1f64..3.0), |(seed, entries, scale)| {
        let c = loss_case(seed, 1, entries, scale, 0.0, false);
        let reps = c.reps();
        let ui = loss_ui(&c.batch, &reps, 1.0);
        let bpr = loss_bpr(&c.batch, &reps).map_err(fail)?;
        prop_assert!((ui - bpr).abs() < 1e-10, "{ui} vs {bpr}");
        Ok(())
    })
}

fn loss_bounds(cases: u32) -> Result<(), String> {
    run(cases, (any::<u64>(), 1usize..64, 0.2f64..2.0), |(seed, k, tau)| {
        // entries in [-1, 1] with d = 3 keep every logit within ±15
        let c = loss_case(seed, k, 4, 1.0, 0.5, true);
        let reps = c.reps();
        let margin = 2.0 * 3.0 / tau;
        let bound = ((k + 1) as f64).ln() + margin;
        let ui = loss_ui(&c.batch, &reps, tau);
        let re = loss_re(&c.batch, &reps, tau);
        prop_assert!(ui > 0.0 && ui <= bound, "ui {ui} bound {bound}");
        prop_assert!(re > 0.0 && re <= ((k + 1) as f64).ln() + 2.0 / tau, "re {re}");

        // every item vector identical: all scores tie
        let mut tied = c;
        let v = tied.z.row(tied.n_users).to_vec();
        for i in 0..tied.z.rows() - tied.n_users {
            tied.z.row_mut(tied.n_users + i).copy_from_slice(&v);
        }
        for (_, f) in &mut tied.f {
            f.copy_from_slice(&v);
        }
        let reps = tied.reps();
        let expect = ((k + 1) as f64).ln();
        let ui = loss_ui(&tied.batch, &reps, tau);
        let re = loss_re(&tied.batch, &reps, tau);
        prop_assert!((ui - expect).abs() < 1e-12, "tied ui {ui} vs {expect}");
        prop_assert!((re - expect).abs() < 1e-12, "tied re {re} vs {expect}");
        Ok(())
    })
}

fn softmax_normalized(cases: u32) -> Result<(), String> {
    run(cases, prop::collection::vec(-50.0f64..50.0, 1..300), |logits| {
        let mut p = Vec::new();
        softmax(&logits, &mut p);
        let sum: f64 = p.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12, "sum {sum}");
        prop_assert!(p.iter().all(|&x| (0.0..=1.0).contains(&x)));
        Ok(())
    })
}

fn negative_permutation(cases: u32) -> Result<(), String> {
    run(cases, (any::<u64>(), 2usize..40, 0.1f64..2.0, any::<u64>()), |(seed, k, tau, perm_seed)| {
        use rand::seq::SliceRandom;
        let c = loss_case(seed, k, 3, 1.5, 0.5, true);
        let (ui, re) = (loss_ui(&c.batch, &c.reps(), tau), loss_re(&c.batch, &c.reps(), tau));
        let mut shuffled = c;
        let mut r = rng(perm_seed);
        for e in &mut shuffled.batch.entries {
            let mut order: Vec<usize> = (0..k).collect();
            order.shuffle(&mut r);
            let negs = e.ui_negatives.clone();
            let flags = e.hybrid.clone();
            for (slot, &from) in order.iter().enumerate() {
                e.ui_negatives[slot] = negs[from];
                e.hybrid[slot + 1] = flags[from + 1];
            }
            e.re_negatives.shuffle(&mut r);
        }
        let reps = shuffled.reps();
        prop_assert_eq!(ui, loss_ui(&shuffled.batch, &reps, tau));
        prop_assert_eq!(re, loss_re(&shuffled.batch, &reps, tau));
        Ok(())
    })
}

fn positive_monotonicity(cases: u32) -> Result<(), String> {
    run(cases, (any::<u64>(), 1usize..32, 0.2f64..2.0, 0.05f64..1.0), |(seed, k, tau, delta)| {
        let c = loss_case(seed, k, 1, 1.0, 0.0, true);
        let e = c.batch.entries[0].clone();
        let reps = c.reps();
        let (ui, re) = (loss_ui(&c.batch, &reps, tau), loss_re(&c.batch, &reps, tau));

        // U-I: move z_i along z_u so z_u·z_i grows by `delta`.
        let zu = c.z.row(e.user).to_vec();
        let nn = dot(&zu, &zu);
        prop_assume!(nn > 1e-3);
        let mut up = LossCase { batch: c.batch.clone(), z: c.z.clone(), f: c.f.clone(), n_users: c.n_users };
        let row = up.z.row_mut(c.n_users + e.item);
        for (x, u) in row.iter_mut().zip(&zu) {
            *x += delta * u / nn;
        }
        prop_assert!(loss_ui(&up.batch, &up.reps(), tau) < ui);

        // R-E: rotate f_i toward z_i, which raises their cosine.
        let zi = c.z.row(c.n_users + e.item).to_vec();
        let fi = c.f[e.item].1.clone();
        let cos = clcrec::objective::cosine(&zi, &fi);
        prop_assume!(cos < 0.999);
        let mut up = LossCase { batch: c.batch.clone(), z: c.z.clone(), f: c.f.clone(), n_users: c.n_users };
        let scale = clcrec::tensor::norm(&fi) / clcrec::tensor::norm(&zi).max(1e-9);
        for (x, z) in up.f[e.item].1.iter_mut().zip(&zi) {
            *x += delta * scale * z;
        }
        prop_assert!(loss_re(&up.batch, &up.reps(), tau) < re);
        Ok(())
    })
}

fn temperature_order(cases: u32) -> Result<(), String> {
    run(cases, (any::<u64>(), 0.05f64..5.0, 0.05f64..5.0), |(seed, t1, t2)| {
        let mut r = rng(seed);
        let zu: Vec<f64> = (0..4).map(|_| uniform(&mut r, -1.0, 1.0)).collect();
        let items: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..4).map(|_| uniform(&mut r, -1.0, 1.0)).collect())
            .collect();
        let s: Vec<f64> = items.iter().map(|v| dot(&zu, v)).collect();
        for t in [t1, t2] {
            let g: Vec<f64> = items.iter().map(|v| density_g(&zu, v, t)).collect();
            for a in 0..s.len() {
                for b in 0..s.len() {
                    if s[a] < s[b] {
                        prop_assert!(g[a] <= g[b]);
                    }
                }
            }
        }
        Ok(())
    })
}

fn gradient_exactness(cases: u32) -> Result<(), String> {
    let strategy = (0..i64::MAX as u64, any::<bool>(), prop::sample::select(vec![0.0, 0.5, 1.0]), prop::sample::select(vec![0.0, 0.5, 1.0]));
    run(cases.min(8), strategy, |(seed, gcn, rho, lambda)| {
        let (b, f, mut cfg) = tiny_instance(seed).map_err(fail)?;
        if gcn {
            cfg.model.encoder = EncoderName::Lightgcn;
        }
        cfg.objective.rho = rho;
        cfg.objective.lambda = lambda;
        let report = finite_diff_check(&b, &f, &cfg, 2).map_err(fail)?;
        prop_assert!(report.max_rel_error < 1e-4, "{report:?}");
        Ok(())
    })
}

fn adam_equivariant(cases: u32) -> Result<(), String> {
    let strategy = (any::<u64>(), any::<u64>(), 2usize..12, 1usize..5);
    run(cases, strategy, |(seed, perm_seed, hidden, steps)| {
        use rand::seq::SliceRandom;
        let dims = ModelDims { n_users: 1, n_items: 1, dim: 1, hidden, feat_dim: 1 };
        let mut r = rng(seed);
        let mut p = xavier_init(dims, &mut r).unwrap();
        let mut order: Vec<usize> = (0..hidden).collect();
        order.shuffle(&mut rng(perm_seed));
        let permute = |v: &[f64]| order.iter().map(|&j| v[j]).collect::<Vec<f64>>();

        let mut q = p.clone();
        q.b1 = permute(&p.b1);
        let (mut sp, mut sq) = (AdamState::new(&p), AdamState::new(&q));
        for _ in 0..steps {
            let mut gp = Gradients::zeros(&p);
            gp.mlp.b1 = (0..hidden).map(|_| uniform(&mut r, -1.0, 1.0)).collect();
            let mut gq = Gradients::zeros(&q);
            gq.mlp.b1 = permute(&gp.mlp.b1);
            adam_step(&mut p, &gp, &mut sp, 0.05).map_err(fail)?;
            adam_step(&mut q, &gq, &mut sq, 0.05).map_err(fail)?;
        }
        prop_assert_eq!(permute(&p.b1), q.b1);
        Ok(())
    })
}

fn early_stopping(cases: u32) -> Result<(), String> {
    run(cases.min(6), (0..i64::MAX as u64, 1usize..4), |(seed, patience)| {
        let (b, f, mut cfg) = tiny_instance(seed).map_err(fail)?;
        cfg.optim.max_epochs = 15;
        cfg.optim.patience = patience;
        cfg.optim.lr = 0.05;
        let report = train(&b, &f, &cfg).map_err(fail)?;
        let best = report.best_val_recall;
        prop_assert!(report.baseline_val_recall <= best);
        prop_assert!(report.history.iter().all(|h| h.val_recall_all <= best));
        let first = std::iter::once((0, report.baseline_val_recall))
            .chain(report.history.iter().map(|h| (h.epoch, h.val_recall_all)))
            .find(|&(_, v)| v == best)
            .map(|(e, _)| e);
        prop_assert_eq!(first, Some(report.best_epoch));
        prop_assert!(report.stopped_epoch == cfg.optim.max_epochs || report.stopped_epoch - report.best_epoch == patience);
        Ok(())
    })
}

fn training_pure(cases: u32) -> Result<(), String> {
    run(cases.min(4), 0..i64::MAX as u64, |seed| {
        let (b, f, mut cfg) = tiny_instance(seed).map_err(fail)?;
        cfg.optim.max_epochs = 3;
        cfg.model.encoder = EncoderName::Lightgcn;
        let (b0, f0) = (b.clone(), f.clone());
        train(&b, &f, &cfg).map_err(fail)?;
        prop_assert_eq!(&b, &b0);
        prop_assert_eq!(&f, &f0);
        Ok(())
    })
}

fn default_run_finite(_cases: u32) -> Result<(), String> {
    let (log, features, truth) = gen_synthetic(&SyntheticConfig::default()).map_err(|e| e.to_string())?;
    let bundle = clcrec::corpus::make_split_with_cold(&log, &truth.cold_items, 0).map_err(|e| e.to_string())?;
    let mut cfg = TrainConfig::default();
    cfg.optim.max_epochs = 1;
    let mut steps = 0;
    let mut bad = None;
    train_with(&bundle, &features, &cfg, |s| {
        steps += 1;
        if !s.total.is_finite() && bad.is_none() {
            bad = Some(s.step);
        }
    })
    .map_err(|e| e.to_string())?;
    match bad {
        Some(step) => Err(format!("non-finite loss at step {step}")),
        None if steps == 0 => Err("no steps recorded".into()),
        None => Ok(()),
    }
}

/// Up to 50 candidates with scores drawn from a small set so ties are common.
fn ranking() -> impl Strategy<Value = (Vec<usize>, Vec<f64>, Vec<usize>, usize)> {
    (1usize..50, any::<u64>(), 1usize..15, 0u32..3).prop_map(|(n, seed, k, tie_mode)| {
        use rand::seq::SliceRandom;
        use rand::Rng as _;
        let mut r = rng(seed);
        let mut cands: Vec<usize> = (0..100).collect();
        cands.shuffle(&mut r);
        cands.truncate(n);
        let scores = cands
            .iter()
            .map(|_| match tie_mode {
                0 => uniform(&mut r, -1.0, 1.0),
                1 => r.gen_range(0..4) as f64,
                _ => 0.5,
            })
            .collect();
        let n_rel = r.gen_range(1..=n);
        let mut rel: Vec<usize> = cands.choose_multiple(&mut r, n_rel).copied().collect();
        rel.sort_unstable();
        (cands, scores, rel, k)
    })
}

fn metric_bounds(cases: u32) -> Result<(), String> {
    run(cases, ranking(), |(cands, scores, rel, k)| {
        let (recall, ndcg) = rank_metrics(&cands, &scores, &rel, k).map_err(fail)?;
        prop_assert!((0.0..=1.0).contains(&recall) && (0.0..=1.0 + 1e-12).contains(&ndcg));
        let top = clcrec::eval::top_k(&cands, &scores, k.min(rel.len()));
        let ideal = top.iter().all(|i| rel.binary_search(i).is_ok());
        prop_assert_eq!((ndcg - 1.0).abs() < 1e-12, ideal, "ndcg {} top {:?} rel {:?}", ndcg, top, rel);
        Ok(())
    })
}

fn candidate_exclusion(cases: u32) -> Result<(), String> {
    run(cases, corpus(), |(syn, frac)| {
        let b = bundle_of(&syn, frac);
        for u in 0..b.n_users {
            for spec in ScenarioSpec::all(10) {
                let c = candidates(&b, u, &spec);
                let distinct: BTreeSet<usize> = c.iter().copied().collect();
                prop_assert_eq!(distinct.len(), c.len());
                for &i in &c {
                    prop_assert!(!b.is_train_positive(u, i));
                    match spec.kind {
                        ScenarioKind::Warm => prop_assert!(!b.is_cold(i)),
                        ScenarioKind::Cold => prop_assert!(b.is_cold(i)),
                        ScenarioKind::All => {}
                    }
                    if b.is_cold(i) {
                        let split_items = match spec.split {
                            SplitKind::Val => &b.cold_val_items,
                            SplitKind::Test => &b.cold_test_items,
                        };
                        prop_assert!(split_items.binary_search(&i).is_ok());
                    }
                }
            }
        }
        Ok(())
    })
}

fn random_scorer(b: &SplitBundle, seed: u64) -> Scorer {
    let mut r = rng(seed);
    let z = random_matrix(&mut r, b.n_users + b.n_items, 3, 1.0);
    let f = random_matrix(&mut r, b.n_items, 3, 1.0);
    let is_cold = (0..b.n_items).map(|i| b.is_cold(i)).collect();
    Scorer::from_parts(b.n_users, z, f, is_cold, ColdScoring::Raw)
}

fn evaluate_repeatable(cases: u32) -> Result<(), String> {
    run(cases, (corpus(), any::<u64>()), |((syn, frac), seed)| {
        let b = bundle_of(&syn, frac);
        let scorer = random_scorer(&b, seed);
        for spec in ScenarioSpec::all(5) {
            let first = evaluate(&scorer, &b, &spec);
            let second = evaluate(&scorer, &b, &spec);
            prop_assert_eq!(format!("{first:?}"), format!("{second:?}"));
        }
        Ok(())
    })
}

fn neg_infinity_candidate(cases: u32) -> Result<(), String> {
    run(cases, ranking(), |(cands, scores, rel, k)| {
        let base = rank_metrics(&cands, &scores, &rel, k).map_err(fail)?;
        let extra = (0..).find(|i| !cands.contains(i)).unwrap();
        let mut c2 = cands.clone();
        let mut s2 = scores.clone();
        c2.push(extra);
        s2.push(f64::NEG_INFINITY);
        prop_assert_eq!(base, rank_metrics(&c2, &s2, &rel, k).map_err(fail)?);
        Ok(())
    })
}

pub fn metric_oracle(cases: u32) -> Result<(), String> {
    run(cases, ranking(), |(cands, scores, rel, k)| {
        let got = rank_metrics(&cands, &scores, &rel, k).map_err(fail)?;
        prop_assert_eq!(got, brute_metrics(&cands, &scores, &rel, k));
        Ok(())
    })
}

fn config_round_trip(cases: u32) -> Result<(), String> {
    let strategy = (
        0..i64::MAX as u64,
        0.0f64..=1.0,
        0.0f64..=1.0,
        1e-3f64..10.0,
        1usize..500,
        any::<bool>(),
        1e-6f64..1.0,
    );
    run(cases, strategy, |(seed, lambda, rho, tau, k, gcn, lr)| {
        let mut cfg = TrainConfig::default();
        cfg.seed = seed;
        cfg.objective.lambda = lambda;
        cfg.objective.rho = rho;
        cfg.objective.tau_ui = tau;
        cfg.objective.k_re = k;
        cfg.optim.lr = lr;
        if gcn {
            cfg.model.encoder = EncoderName::Lightgcn;
        }
        let dir = tempfile::tempdir().map_err(fail)?;
        let path = dir.path().join("c.toml");
        cfg.save(&path).map_err(fail)?;
        let back = TrainConfig::load(&path).map_err(fail)?;
        prop_assert_eq!(&back, &cfg);
        back.save(&path).map_err(fail)?;
        prop_assert_eq!(TrainConfig::load(&path).map_err(fail)?, cfg);
        Ok(())
    })
}

/// Runs the built binary with output captured and returns its exit code.
pub fn cli_run(args: &[&str]) -> i32 {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_clcrec"))
        .args(args)
        .output()
        .expect("spawn clcrec");
    out.status.code().unwrap_or(-1)
}

fn read_all(dir: &std::path::Path, files: &[&str]) -> Vec<Vec<u8>> {
    files.iter().map(|f| std::fs::read(dir.join(f)).unwrap_or_default()).collect()
}

fn cli_deterministic(_cases: u32) -> Result<(), String> {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |s: &str| tmp.path().join(s).display().to_string();
    let mut outputs = Vec::new();
    for round in ["a", "b"] {
        let data = p(&format!("data_{round}"));
        let split = p(&format!("split_{round}"));
        let run_dir = p(&format!("run_{round}"));
        let synth = ["synth", "--out", &data, "--seed", "4", "--n-users", "20", "--n-warm", "30", "--n-cold", "8"];
        let synth_tail = ["--latent", "3", "--feat-dim", "5", "--per-user", "6"];
        let args: Vec<&str> = synth.iter().chain(&synth_tail).copied().collect();
        if cli_run(&args) != 0 {
            return Err("synth failed".into());
        }
        let inter = format!("{data}/interactions.tsv");
        if cli_run(&["split", "--interactions", &inter, "--cold-fraction", "0.2", "--seed", "4", "--out", &split]) != 0 {
            return Err("split failed".into());
        }
        let feats = format!("{data}/features.tsv");
        let train_args = [
            "train", "--interactions", &inter, "--features", &feats, "--seed", "4", "--dim", "6", "--hidden", "8",
            "--k-ui", "5", "--k-re", "5", "--max-epochs", "3", "--batch-size", "16", "--out", &run_dir,
        ];
        if cli_run(&train_args) != 0 {
            return Err("train failed".into());
        }
        let mut bytes = read_all(tmp.path().join(format!("data_{round}")).as_path(), &["interactions.tsv", "features.tsv", "truth.json", "cold_items.txt"]);
        bytes.extend(read_all(tmp.path().join(format!("split_{round}")).as_path(), &["train.tsv", "warm_val.tsv", "warm_test.tsv"]));
        bytes.extend(read_all(tmp.path().join(format!("run_{round}")).as_path(), &["report.json", "snapshot.bin", "metrics.jsonl"]));
        outputs.push(bytes);
    }
    if outputs[0] != outputs[1] {
        return Err("outputs differ between identical invocations".into());
    }
    if outputs[0].iter().any(Vec::is_empty) {
        return Err("an expected output file is missing or empty".into());
    }
    Ok(())
}

fn cli_exit_codes(_cases: u32) -> Result<(), String> {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |s: &str| tmp.path().join(s).display().to_string();
    let data = p("data");
    let inter = format!("{data}/interactions.tsv");
    let feats = format!("{data}/features.tsv");
    let base = ["--interactions", inter.as_str(), "--features", feats.as_str(), "--dim", "4", "--hidden", "4", "--k-ui", "3", "--k-re", "3"];
    let with = |extra: &[&str]| -> Vec<String> { extra.iter().chain(&base).map(|s| s.to_string()).collect() };
    let call = |args: Vec<String>| cli_run(&args.iter().map(String::as_str).collect::<Vec<_>>());

    let mut checks = vec![
        ("synth", cli_run(&["synth", "--out", &data, "--n-users", "15", "--n-warm", "20", "--n-cold", "5", "--latent", "2", "--feat-dim", "4", "--per-user", "5"]), 0),
        ("bad cold fraction", cli_run(&["split", "--interactions", &inter, "--cold-fraction", "1.5", "--out", &p("s")]), 2),
        ("bad rho", call(with(&["train", "--rho", "2", "--out", &p("r0")])), 2),
        ("train", call(with(&["train", "--max-epochs", "1", "--out", &p("run")])), 0),
        ("eval", cli_run(&["eval", "--run", &p("run"), "--all", "--out", &p("eval.json")]), 0),
        ("diverging lr", call(with(&["train", "--lr", "1e300", "--max-epochs", "5", "--out", &p("nan")])), 3),
        ("gradcheck", cli_run(&["gradcheck", "--trials", "2"]), 0),
    ];
    let cfg_path = tmp.path().join("run").join(cli::CONFIG_FILE);
    let text = std::fs::read_to_string(&cfg_path).map_err(|e| e.to_string())?;
    std::fs::write(&cfg_path, text.replace("lambda = 0.5", "lambda = 0.25")).map_err(|e| e.to_string())?;
    checks.push(("edited config", cli_run(&["eval", "--run", &p("run")]), 4));
    checks.push(("missing run", cli_run(&["export-figs", "--runs", &p("nowhere"), "--out", &p("figs")]), 1));

    let wrong: Vec<String> = checks
        .iter()
        .filter(|(_, got, want)| got != want)
        .map(|(name, got, want)| format!("{name}: exit {got}, expected {want}"))
        .collect();
    if wrong.is_empty() {
        Ok(())
    } else {
        Err(wrong.join("; "))
    }
}

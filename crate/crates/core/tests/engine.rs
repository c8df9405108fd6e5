//! Round loop, experiment driver and FedPSD trainer behaviour.

use fedpsd::config::{Algorithm, DatasetConfig, ExperimentConfig, PartitionConfig};
use fedpsd::data::{ClassPrior, TestSplitMode};
use fedpsd::engine::{
    local_train_baseline, run_experiment, run_round, sample_count, train_local, Federation,
    LocalContext, LocalObjective, LocalTrainConfig, ServerState,
};
use fedpsd::fedpsd::{ClientHistory, PsdConfig, PsdObjective, TeacherSource};
use fedpsd::nn::{softmax_rows, Mlp};
use fedpsd::rng::{purpose, stream};
use ndarray::Array2;
use rand::Rng as _;

fn small_config(algorithm: Algorithm) -> ExperimentConfig {
    ExperimentConfig {
        dataset: DatasetConfig::Synthetic {
            classes: 4,
            dim: 8,
            train_per_class: 60,
            test_per_class: 20,
            spread: 0.4,
            data_seed: 3,
        },
        partition: PartitionConfig::Sharding { shards_per_client: 2 },
        clients: 6,
        fraction: 0.5,
        rounds: 6,
        epochs: 2,
        batch_size: 10,
        lr: 0.05,
        hidden: vec![8],
        algorithm,
        client_test_size: 40,
        sweep_every: 2,
        ..ExperimentConfig::default()
    }
}

fn start(cfg: &ExperimentConfig) -> (ServerState<f64>, Federation<f64>) {
    let federation = Federation::<f64>::build(cfg).unwrap();
    let sizes = federation.model_sizes(&cfg.hidden);
    let global = Mlp::init(&sizes, &mut stream(cfg.seed, &[purpose::MODEL_INIT])).unwrap();
    (ServerState { global, round: 0 }, federation)
}

#[test]
fn single_client_round_returns_its_update() {
    let cfg = ExperimentConfig {
        clients: 1,
        fraction: 1.0,
        partition: PartitionConfig::Sharding { shards_per_client: 4 },
        ..small_config(Algorithm::FedAvg)
    };
    let (mut server, mut federation) = start(&cfg);
    let before = server.global.clone();
    let client = &federation.clients[0];
    let (x, y) = federation.train.gather(&client.partition.train_indices);
    let ctx = LocalContext {
        round: 0,
        client: 0,
        features: &x,
        labels: &y,
        num_classes: 4,
    };
    let train = LocalTrainConfig {
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        learning_rate: cfg.lr,
        momentum: cfg.momentum,
        weight_decay: cfg.weight_decay,
    };
    let mut rng = stream(cfg.seed, &[purpose::LOCAL_TRAINING, 0, 0]);
    let expected = local_train_baseline(&before, &ctx, &train, &cfg.algorithm, &mut rng).unwrap();
    let report = run_round(&mut server, &mut federation, &cfg, None).unwrap();
    assert_eq!(report.sampled, vec![0]);
    assert_eq!(server.global, expected.params);
    assert_eq!(server.round, 1);
}

#[test]
fn report_shape_and_client_average() {
    let cfg = small_config(Algorithm::FedPsd(PsdConfig::default()));
    let (mut server, mut federation) = start(&cfg);
    for t in 0..3 {
        let report = run_round(&mut server, &mut federation, &cfg, None).unwrap();
        assert_eq!(report.round, t);
        assert_eq!(report.sampled.len(), sample_count(cfg.clients, cfg.fraction));
        assert_eq!(report.client_accuracies.len(), report.sampled.len());
        let manual = report.client_accuracies.iter().sum::<f64>() / report.sampled.len() as f64;
        assert!((report.avg_client_accuracy() - manual).abs() < 1e-15);
        assert!(report.client_accuracies.iter().all(|a| (0.0..=1.0).contains(a)));
        assert!((0.0..=1.0).contains(&report.server_accuracy));
        for trace in &report.loss_traces {
            assert_eq!(trace.len(), cfg.epochs);
        }
    }
}

#[test]
fn history_exists_exactly_for_participants() {
    let cfg = small_config(Algorithm::FedPsd(PsdConfig::default()));
    let (mut server, mut federation) = start(&cfg);
    let report = run_round(&mut server, &mut federation, &cfg, None).unwrap();
    for client in &federation.clients {
        let sampled = report.sampled.contains(&client.client_id());
        assert_eq!(client.history.is_some(), sampled);
        assert_eq!(client.last_participation.is_some(), sampled);
        if let Some(h) = &client.history {
            assert_eq!(h.num_samples(), client.partition.train_indices.len());
            assert_eq!(h.recorded_round, 0);
        }
    }
}

#[test]
fn disabled_components_reproduce_fedavg_bit_for_bit() {
    let avg = small_config(Algorithm::FedAvg);
    let off = small_config(Algorithm::FedPsd(PsdConfig::with_flags(false, false, false)));
    let (mut s1, mut f1) = start(&avg);
    let (mut s2, mut f2) = start(&off);
    for _ in 0..avg.rounds {
        let r1 = run_round(&mut s1, &mut f1, &avg, None).unwrap();
        let r2 = run_round(&mut s2, &mut f2, &off, None).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(s1.global, s2.global);
    }
}

#[test]
fn series_is_independent_of_thread_count() {
    let base = small_config(Algorithm::FedPsd(PsdConfig::default()));
    let one = run_experiment::<f64>(&base).unwrap();
    let again = run_experiment::<f64>(&base).unwrap();
    let many = run_experiment::<f64>(&ExperimentConfig { threads: 3, ..base.clone() }).unwrap();
    assert_eq!(one, again);
    assert_eq!(one, many);
    assert_eq!(one.rounds.len(), base.rounds);
    assert_eq!(one.sweeps.len(), base.rounds / base.sweep_every);
}

#[test]
fn one_round_gives_one_record() {
    let cfg = ExperimentConfig {
        rounds: 1,
        ..small_config(Algorithm::FedProx { mu: 0.1 })
    };
    let series = run_experiment::<f64>(&cfg).unwrap();
    assert_eq!(series.rounds.len(), 1);
    assert_eq!(series.rounds[0].round, 1);
}

#[test]
fn near_iid_fedavg_converges() {
    let cfg = ExperimentConfig {
        dataset: DatasetConfig::Synthetic {
            classes: 5,
            dim: 16,
            train_per_class: 200,
            test_per_class: 100,
            spread: 0.2,
            data_seed: 1,
        },
        partition: PartitionConfig::Dirichlet { alpha: 1e6 },
        clients: 10,
        fraction: 0.3,
        rounds: 30,
        hidden: vec![16],
        algorithm: Algorithm::FedAvg,
        client_test: TestSplitMode::Global,
        ..ExperimentConfig::default()
    };
    let series = run_experiment::<f64>(&cfg).unwrap();
    assert!(series.final_server_top1().unwrap() >= 0.9, "{series:?}");
}

fn toy_client(seed: u64) -> (Array2<f64>, Vec<usize>) {
    let mut rng = stream(seed, &[5]);
    let x = Array2::from_shape_fn((12, 3), |_| rng.random_range(-1.0..1.0));
    let y = (0..12).map(|i| i % 3).collect();
    (x, y)
}

#[test]
fn psd_objective_gradient_matches_finite_differences() {
    let (x, y) = toy_client(1);
    let ctx = LocalContext {
        round: 3,
        client: 0,
        features: &x,
        labels: &y,
        num_classes: 3,
    };
    let model = Mlp::init(&[3, 5, 3], &mut stream(2, &[1])).unwrap();
    let history = ClientHistory::new(0, 2, softmax_rows(model.forward(x.view()).unwrap().view())).unwrap();
    let prior = ClassPrior::from_probabilities(vec![0.5, 0.3, 0.2]).unwrap();
    let rows: Vec<usize> = vec![1, 4, 7, 10];
    let labels: Vec<usize> = rows.iter().map(|&r| y[r]).collect();
    let logits = model.forward(x.select(ndarray::Axis(0), &rows).view()).unwrap();
    let eval = |l: &Array2<f64>| {
        let mut obj = PsdObjective::new(PsdConfig::default(), 0.4, Some(&prior), Some(&history)).unwrap();
        obj.begin_epoch(1, &model, &ctx).unwrap();
        obj.batch_loss(1, &rows, &labels, l).unwrap()
    };
    let (_, grad) = eval(&logits);
    let h = 1e-6;
    for i in 0..logits.nrows() {
        for j in 0..logits.ncols() {
            let mut plus = logits.clone();
            plus[[i, j]] += h;
            let mut minus = logits.clone();
            minus[[i, j]] -= h;
            let numeric = (eval(&plus).0 - eval(&minus).0) / (2.0 * h);
            assert!((numeric - grad[[i, j]]).abs() < 1e-6, "{i},{j}: {numeric} vs {}", grad[[i, j]]);
        }
    }
}

#[test]
fn teacher_sources_differ_but_stay_finite() {
    let (x, y) = toy_client(3);
    let ctx = LocalContext {
        round: 1,
        client: 0,
        features: &x,
        labels: &y,
        num_classes: 3,
    };
    let train = LocalTrainConfig {
        epochs: 3,
        batch_size: 4,
        learning_rate: 0.1,
        momentum: 0.9,
        weight_decay: 0.0,
    };
    let global = Mlp::init(&[3, 4, 3], &mut stream(0, &[1])).unwrap();
    let prior = ClassPrior::uniform(3);
    let run = |source| {
        let cfg = PsdConfig {
            teacher_source: source,
            ..PsdConfig::default()
        };
        let mut obj = PsdObjective::new(cfg, 0.5, Some(&prior), None).unwrap();
        train_local(&global, &ctx, &train, &mut obj, &mut stream(0, &[2])).unwrap()
    };
    let cached = run(TeacherSource::Cached);
    let sweep = run(TeacherSource::Sweep);
    assert!(cached.params.all_finite() && sweep.params.all_finite());
    assert_ne!(cached.params, sweep.params);
}

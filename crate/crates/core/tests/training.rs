use inception_core::data::synthetic_mixture;
use inception_core::engine::{build_quadtree, init_model, mean_nll, Mode};
use inception_core::train::{fit, split_train_valid, train_loop, StopReason, TrainConfig};

#[test]
fn small_steps_rarely_increase_the_training_nll() {
    let (data, _) = synthetic_mixture(3, 256, 2, 2, 2, 2).unwrap();
    let (train, valid) = split_train_valid(&data, 0.75, 0).unwrap();
    let rg = build_quadtree(2, 2).unwrap();
    let mut monotone_runs = 0;
    for seed in 0..20u64 {
        let mode = Mode::ALL[seed as usize % 4];
        let k_u = if mode == Mode::Inception { 2 } else { 1 };
        let model = init_model(&rg, mode, 3, k_u, 2, seed).unwrap();
        let config = TrainConfig { learning_rate: 1e-4, batch_size: 256, max_epochs: 10, patience: 10, seed, ..Default::default() };
        let (_, report) = fit(&model, &train, &valid, &config, &mut ()).unwrap();
        let start = mean_nll(&model, &train.row_refs()).unwrap();
        let curve: Vec<f64> = std::iter::once(start).chain(report.epochs.iter().map(|r| r.train_nll)).collect();
        if curve.windows(2).all(|w| w[1] <= w[0]) {
            monotone_runs += 1;
        }
    }
    assert!(monotone_runs >= 19, "{monotone_runs} of 20 runs were non-increasing");
}

#[test]
fn best_epoch_is_restored() {
    let (data, _) = synthetic_mixture(9, 400, 2, 2, 3, 3).unwrap();
    let model = init_model(&build_quadtree(2, 2).unwrap(), Mode::SquaredComplex, 3, 1, 3, 2).unwrap();
    // A large rate makes the validation curve noisy, so the best epoch is
    // usually not the last one.
    let config = TrainConfig { learning_rate: 0.3, batch_size: 16, max_epochs: 15, patience: 4, seed: 1, ..Default::default() };
    let (best, report) = train_loop(&model, &data, &config, &mut ()).unwrap();
    let (_, valid) = split_train_valid(&data, config.split_fraction, config.seed).unwrap();
    let min = report.epochs.iter().map(|r| r.valid_nll).fold(f64::INFINITY, f64::min);
    assert_eq!(report.best_valid_nll, min);
    assert_eq!(mean_nll(&best, &valid.row_refs()).unwrap(), min);
    if report.stop == StopReason::Patience {
        assert_eq!(report.epochs.len(), report.best_epoch + config.patience);
    }
}

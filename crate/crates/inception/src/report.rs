//! Training outputs: the per-epoch CSV log and the final JSON report.
//!
//! Wall-clock times appear in the CSV `seconds` column and in the report's
//! `wall_clock` object; every other field is a function of the inputs.

use std::path::Path;

use inception_core::engine::TensorizedModel;
use inception_core::train::{EpochRecord, StopReason, TrainReport};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::{write_file, Error, Result};

pub fn csv_log(epochs: &[EpochRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::format("CSV log", e);
    w.write_record(["epoch", "train_nll", "valid_nll", "seconds"]).map_err(err)?;
    for r in epochs {
        w.write_record([r.epoch.to_string(), r.train_nll.to_string(), r.valid_nll.to_string(), r.seconds.to_string()])
            .map_err(err)?;
    }
    w.into_inner().map_err(|e| Error::format("CSV log", e.error()))
}

pub fn write_csv_log(path: &Path, epochs: &[EpochRecord]) -> Result<()> {
    write_file(path, &csv_log(epochs)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub mode: String,
    pub height: usize,
    pub width: usize,
    pub cardinality: u32,
    pub n_s: usize,
    pub k_u: usize,
    pub init_seed: u64,
    pub num_params: usize,
}

impl ModelSummary {
    pub fn of(model: &TensorizedModel) -> Self {
        Self {
            mode: model.mode.name().into(),
            height: model.rg.height,
            width: model.rg.width,
            cardinality: model.cardinality,
            n_s: model.n_s,
            k_u: model.k_u,
            init_seed: model.seed,
            num_params: model.num_params(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochSummary {
    pub epoch: usize,
    pub train_nll: f64,
    pub valid_nll: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallClock {
    pub epoch_seconds: Vec<f64>,
    pub total_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub model: ModelSummary,
    pub train_rows: usize,
    pub valid_rows: usize,
    pub epochs: Vec<EpochSummary>,
    pub best_epoch: usize,
    pub best_valid_nll: f64,
    pub best_valid_bpd: f64,
    pub final_valid_nll: f64,
    pub stop: StopReason,
    pub wall_clock: WallClock,
}

impl RunReport {
    pub fn new(
        config: &ExperimentConfig,
        model: &TensorizedModel,
        rows: (usize, usize),
        report: &TrainReport,
        total_seconds: f64,
    ) -> Self {
        let dims = model.num_vars();
        Self {
            config: config.clone(),
            model: ModelSummary::of(model),
            train_rows: rows.0,
            valid_rows: rows.1,
            epochs: report
                .epochs
                .iter()
                .map(|r| EpochSummary { epoch: r.epoch, train_nll: r.train_nll, valid_nll: r.valid_nll })
                .collect(),
            best_epoch: report.best_epoch,
            best_valid_nll: report.best_valid_nll,
            best_valid_bpd: inception_core::train::bits_per_dimension(report.best_valid_nll, dims),
            final_valid_nll: report.final_valid_nll,
            stop: report.stop,
            wall_clock: WallClock { epoch_seconds: report.epochs.iter().map(|r| r.seconds).collect(), total_seconds },
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::format("report", e))?;
        s.push('\n');
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_header_and_rows() {
        let rows = [EpochRecord { epoch: 1, train_nll: 2.5, valid_nll: 2.75, seconds: 0.5 }];
        let text = String::from_utf8(csv_log(&rows).unwrap()).unwrap();
        assert_eq!(text, "epoch,train_nll,valid_nll,seconds\n1,2.5,2.75,0.5\n");
    }
}

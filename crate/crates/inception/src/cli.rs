//! The `inception` command-line front end.
//!
//! Exit codes: 0 on success, 1 on usage or validation errors, 2 on runtime
//! failures (including failed verification criteria).

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use inception_core::circuit::validate_structure;
use inception_core::data::reduce;
use inception_core::engine::{self, build_quadtree, init_model};
use inception_core::train::{self, bits_per_dimension, EpochRecord, Monitor};
use inception_core::transform::{conjugate, inception_circuit, multiply_compatible};

use crate::config::ExperimentConfig;
use crate::ranklab::{self, RankFn};
use crate::report::{write_csv_log, RunReport};
use crate::verify::{self, Budget, VerifyOptions};
use crate::{checkpoint, circuit_io, idx, write_file, Error, Result};

pub const THREADS_ENV: &str = "INCEPTION_PC_THREADS";

#[derive(Debug, Parser)]
#[command(name = "inception", version, about = "Probabilistic circuits with squared and Inception layers")]
pub struct Cli {
    /// Worker thread cap; falls back to INCEPTION_PC_THREADS.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransformOp {
    Conjugate,
    Product,
    Inception,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BudgetArg {
    Quick,
    Full,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Report smoothness, decomposability and structured decomposability.
    Check { circuit: PathBuf },
    /// Apply a circuit transformation and write the result.
    Transform {
        #[arg(value_enum)]
        op: TransformOp,
        input: PathBuf,
        /// Second operand for `product`.
        #[arg(long)]
        with: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        k_u: usize,
        #[arg(long, default_value_t = 2)]
        k_w: usize,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Train a tensorized model; writes best.ckpt, log.csv and report.json.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// IDX image file (gzip allowed).
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Print one line per epoch.
        #[arg(long)]
        verbose: bool,
    },
    /// Print the test bits per dimension of a checkpoint.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Run the cross-check suite.
    Verify {
        #[arg(long, value_enum, default_value_t = BudgetArg::Quick)]
        budget: BudgetArg,
        /// Directory with MNIST IDX files for the comparative run.
        #[arg(long)]
        mnist: Option<PathBuf>,
        /// Criteria to run, e.g. `--only 1,4,7`.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
    /// Sweep value-matrix ranks over balanced partitions.
    Ranklab {
        #[arg(long, default_value_t = 4)]
        d_min: usize,
        #[arg(long, default_value_t = 10)]
        d_max: usize,
        #[arg(long, default_value_t = inception_core::oracle::RANK_TOL)]
        tol: f64,
        /// Cap on partitions per d.
        #[arg(long)]
        max_partitions: Option<usize>,
        #[arg(long, short)]
        out: PathBuf,
    },
}

struct Progress<'a> {
    start: Instant,
    out: Option<&'a mut dyn Write>,
}

impl Monitor for Progress<'_> {
    fn now(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    fn on_epoch(&mut self, r: &EpochRecord) {
        if let Some(out) = self.out.as_mut() {
            let _ = writeln!(out, "epoch {} train_nll={:.6} valid_nll={:.6} ({:.1}s)", r.epoch, r.train_nll, r.valid_nll, r.seconds);
        }
    }
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>> {
    let n = match flag {
        Some(n) => n,
        None => match std::env::var(THREADS_ENV) {
            Ok(s) => s.trim().parse().map_err(|_| Error::Invalid(format!("{THREADS_ENV} must be a positive integer, got {s:?}")))?,
            Err(_) => return Ok(None),
        },
    };
    if n == 0 {
        return Err(Error::Invalid("thread count must be positive".into()));
    }
    Ok(Some(n))
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<bool> {
    if let Some(n) = thread_count(cli.threads)? {
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let w = |e: std::io::Error| Error::io("<stdout>", e);
    match cli.command {
        Command::Check { circuit } => {
            let c = circuit_io::read_circuit(&circuit)?;
            writeln!(out, "{}", validate_structure(&c)).map_err(w)?;
        }
        Command::Transform { op, input, with, k_u, k_w, out: path } => {
            let c = circuit_io::read_circuit(&input)?;
            let result = match op {
                TransformOp::Conjugate => conjugate(&c),
                TransformOp::Product => {
                    let other = with.ok_or_else(|| Error::Invalid("product needs --with <circuit>".into()))?;
                    multiply_compatible(&c, &circuit_io::read_circuit(&other)?)?
                }
                TransformOp::Inception => inception_circuit(&c, k_u, k_w)?,
            };
            circuit_io::write_circuit(&path, &result)?;
            writeln!(out, "wrote {} ({} nodes, {} edges)", path.display(), result.num_nodes(), result.num_edges()).map_err(w)?;
        }
        Command::Train { config, data, out: dir, verbose } => {
            let start = Instant::now();
            let cfg = ExperimentConfig::load(&config)?;
            let ds = cfg.data.apply(&idx::load_idx(&data)?)?;
            let rg = build_quadtree(ds.height(), ds.width())?;
            let model = init_model(&rg, cfg.model.mode()?, cfg.model.n_s, cfg.model.k_u, ds.cardinality(), cfg.init_seed())?;
            let (train_split, valid_split) = train::split_train_valid(&ds, cfg.train.split_fraction, cfg.train.seed)?;
            let mut progress = Progress { start, out: if verbose { Some(&mut *out) } else { None } };
            let (best, report) = train::fit(&model, &train_split, &valid_split, &cfg.train, &mut progress)?;
            checkpoint::save(&dir.join("best.ckpt"), &best)?;
            write_csv_log(&dir.join("log.csv"), &report.epochs)?;
            let run = RunReport::new(&cfg, &best, (train_split.len(), valid_split.len()), &report, start.elapsed().as_secs_f64());
            write_file(&dir.join("report.json"), run.to_json()?.as_bytes())?;
            writeln!(
                out,
                "best epoch {} valid_nll={:.6} valid_bpd={:.6}; wrote {}",
                run.best_epoch,
                run.best_valid_nll,
                run.best_valid_bpd,
                dir.display()
            )
            .map_err(w)?;
        }
        Command::Eval { checkpoint: ckpt, data } => {
            let model = checkpoint::load(&ckpt)?;
            let mut ds = idx::load_idx(&data)?;
            if (ds.height(), ds.width(), ds.cardinality()) != (model.rg.height, model.rg.width, model.cardinality) {
                ds = reduce(&ds, model.rg.height, model.rg.width, model.cardinality)?;
            }
            let nll = engine::mean_nll(&model, &ds.row_refs())?;
            writeln!(out, "bpd={}", bits_per_dimension(nll, model.num_vars())).map_err(w)?;
        }
        Command::Verify { budget, mnist, only } => {
            let opts = VerifyOptions {
                budget: match budget {
                    BudgetArg::Quick => Budget::Quick,
                    BudgetArg::Full => Budget::Full,
                },
                mnist_dir: mnist,
            };
            let ids: Vec<u8> = if only.is_empty() { (1..=10).collect() } else { only };
            let mut io_err = None;
            let results = verify::run(&ids, &opts, |r| {
                if let Err(e) = writeln!(out, "{r}") {
                    io_err.get_or_insert(e);
                }
            })?;
            if let Some(e) = io_err {
                return Err(w(e));
            }
            let failed = results.iter().filter(|r| r.status.is_failure()).count();
            writeln!(out, "{} criteria run, {failed} failed", results.len()).map_err(w)?;
            return Ok(failed == 0);
        }
        Command::Ranklab { d_min, d_max, tol, max_partitions, out: path } => {
            if d_min > d_max {
                return Err(Error::Invalid(format!("--d-min {d_min} exceeds --d-max {d_max}")));
            }
            let rows = ranklab::sweep(d_min..=d_max, &RankFn::ALL, tol, max_partitions)?;
            write_file(&path, &ranklab::to_csv(&rows)?)?;
            let mismatched = rows.iter().filter(|r| !r.matches()).count();
            writeln!(out, "{} rank computations, {mismatched} below the expected rank; wrote {}", rows.len(), path.display())
                .map_err(w)?;
        }
    }
    Ok(true)
}

/// Parses `args` (program name first) and runs the command, writing normal
/// output to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(cli, out) {
        Ok(true) => 0,
        Ok(false) => 2,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}

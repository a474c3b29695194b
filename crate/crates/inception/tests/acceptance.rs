//! Acceptance run: every criterion at full size, one line each.
//!
//! Criteria 1 to 9 must pass. Criterion 10 is comparative and reported only;
//! it needs the MNIST subset under `data/mnist5k` (override with
//! `INCEPTION_MNIST_DIR`).

use std::path::PathBuf;
use std::process::ExitCode;

use inception::verify::{self, Budget, Status, VerifyOptions};

fn mnist_dir() -> PathBuf {
    std::env::var_os("INCEPTION_MNIST_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist5k"))
}

fn main() -> ExitCode {
    let opts = VerifyOptions { budget: Budget::Full, mnist_dir: Some(mnist_dir()) };
    let ids: Vec<u8> = (1..=10).collect();
    let results = verify::run(&ids, &opts, |r| {
        let verdict = match (&r.status, r.id) {
            (Status::Pass, _) => "pass",
            (_, 10) => "report",
            (Status::Skipped(_), _) | (Status::Fail, _) | (Status::Investigate, _) => "fail",
        };
        println!("acceptance {verdict}: {r}");
    })
    .unwrap_or_else(|e| panic!("acceptance run aborted: {e}"));
    let failed: Vec<u8> = results.iter().filter(|r| r.id != 10 && r.status != Status::Pass).map(|r| r.id).collect();
    if failed.is_empty() {
        println!("acceptance: criteria 1-9 passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}

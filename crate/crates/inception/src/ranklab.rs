//! Value-matrix rank sweeps over balanced partitions of `d` binary variables.

use inception_core::oracle::{self, balanced_partitions, value_matrix_rank};

use crate::{Error, Result};

/// Functions of `n(v)` with known value-matrix ranks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankFn {
    /// `√(n(v) + 1)`: full rank expected.
    Sqrt,
    /// `n(v) + 1`: rank 2.
    Linear,
}

impl RankFn {
    pub const ALL: [RankFn; 2] = [RankFn::Sqrt, RankFn::Linear];

    pub fn name(self) -> &'static str {
        match self {
            RankFn::Sqrt => "sqrt",
            RankFn::Linear => "linear",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == s)
    }

    fn eval(self, bits: &[u8]) -> f64 {
        match self {
            RankFn::Sqrt => oracle::sqrt_weight(bits),
            RankFn::Linear => oracle::linear_weight(bits),
        }
    }

    /// Rank the function should have under a partition with sides `x` and `y`.
    pub fn expected_rank(self, x: usize, y: usize) -> usize {
        match self {
            RankFn::Sqrt => 1 << x.min(y),
            RankFn::Linear => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankRow {
    pub d: usize,
    /// Variables on the row side.
    pub x_vars: Vec<usize>,
    pub func: RankFn,
    pub rank: usize,
    pub expected: usize,
    pub sigma_max: f64,
    pub sigma_min_retained: f64,
}

impl RankRow {
    pub fn matches(&self) -> bool {
        self.rank == self.expected
    }

    /// Row-side variables joined with `-`, e.g. `0-2-3`.
    pub fn partition_label(&self) -> String {
        self.x_vars.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("-")
    }
}

/// Ranks for every `d` in `ds`, every balanced partition (at most
/// `max_partitions` per `d`, taken in bitmask order) and every function.
pub fn sweep(ds: impl IntoIterator<Item = usize>, funcs: &[RankFn], tol: f64, max_partitions: Option<usize>) -> Result<Vec<RankRow>> {
    let mut rows = Vec::new();
    for d in ds {
        if d < 2 {
            return Err(Error::Invalid(format!("rank sweeps need d ≥ 2, got {d}")));
        }
        let parts = balanced_partitions(d);
        let take = max_partitions.unwrap_or(parts.len()).min(parts.len());
        for x in &parts[..take] {
            for &func in funcs {
                let (_, r) = value_matrix_rank(d, x, |b| func.eval(b), tol)
                    .map_err(|e| Error::Invalid(format!("d = {d}: {e}")))?;
                rows.push(RankRow {
                    d,
                    x_vars: x.clone(),
                    func,
                    rank: r.rank,
                    expected: func.expected_rank(x.len(), d - x.len()),
                    sigma_max: r.sigma_max,
                    sigma_min_retained: r.sigma_min_retained,
                });
            }
        }
    }
    Ok(rows)
}

/// CSV with columns `d,partition,func,rank,sigma_max,sigma_min_retained`.
pub fn to_csv(rows: &[RankRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::format("rank CSV", e);
    w.write_record(["d", "partition", "func", "rank", "sigma_max", "sigma_min_retained"]).map_err(err)?;
    for r in rows {
        w.write_record([
            r.d.to_string(),
            r.partition_label(),
            r.func.name().to_string(),
            r.rank.to_string(),
            format!("{:e}", r.sigma_max),
            format!("{:e}", r.sigma_min_retained),
        ])
        .map_err(err)?;
    }
    w.into_inner().map_err(|e| Error::format("rank CSV", e.error()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_sweep() {
        let rows = sweep([4], &RankFn::ALL, oracle::RANK_TOL, None).unwrap();
        // |X| = 2 only: C(4, 2) partitions, two functions each.
        assert_eq!(rows.len(), 12);
        assert!(rows.iter().all(RankRow::matches));
        let csv = String::from_utf8(to_csv(&rows[..2]).unwrap()).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("d,partition,func,rank,sigma_max,sigma_min_retained"));
        assert!(lines.next().unwrap().starts_with("4,0-1,sqrt,4,"));
        assert!(lines.next().unwrap().starts_with("4,0-1,linear,2,"));
    }
}

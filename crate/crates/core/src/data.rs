//! Categorical image datasets, the IDX byte format, seeded mixture data and
//! resolution/cardinality reduction.

use alloc::vec;
use alloc::vec::Vec;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::math;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// Largest number of assignments enumerated for an exact mixture entropy.
pub const MAX_ENTROPY_ASSIGNMENTS: usize = 1 << 20;
pub const MAX_ENTROPY_VARS: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DataError {
    #[error("dataset shape must be positive, got {height}×{width}")]
    Shape { height: usize, width: usize },
    #[error("cardinality must be in 1..=256, got {0}")]
    Cardinality(u32),
    #[error("row data has {found} values, expected a multiple of {row_len}")]
    Ragged { row_len: usize, found: usize },
    #[error("row {row}, variable {var}: value {value} is not below cardinality {cardinality}")]
    Value { row: usize, var: usize, value: u8, cardinality: u32 },
    #[error("bad IDX magic {found:#010x} at byte 0, expected {expected:#010x}")]
    Magic { expected: u32, found: u32 },
    #[error("IDX data truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("IDX dimension at byte {offset} is {value}, which does not fit the payload")]
    Dimension { offset: usize, value: u32 },
    #[error("IDX data has {extra} trailing bytes after offset {offset}")]
    Trailing { offset: usize, extra: usize },
    #[error("cannot reduce {from_h}×{from_w} to {to_h}×{to_w}: target must divide source")]
    Indivisible { from_h: usize, from_w: usize, to_h: usize, to_w: usize },
    #[error("cannot raise cardinality from {from} to {to}")]
    Upsample { from: u32, to: u32 },
    #[error("exact entropy needs {needed} enumerated assignments over {vars} variables; limits are {limit} and {MAX_ENTROPY_VARS} variables")]
    Capability { needed: usize, vars: usize, limit: usize },
    #[error("mixture needs at least one component and one sample slot")]
    EmptyMixture,
}

/// Rows of categorical pixel values over a `height × width` grid.
///
/// Values are stored row-major, one byte per variable, and are checked
/// against the cardinality when the dataset is built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    data: Vec<u8>,
    height: usize,
    width: usize,
    cardinality: u32,
}

impl Dataset {
    pub fn new(data: Vec<u8>, height: usize, width: usize, cardinality: u32) -> Result<Self, DataError> {
        if height == 0 || width == 0 {
            return Err(DataError::Shape { height, width });
        }
        if cardinality == 0 || cardinality > 256 {
            return Err(DataError::Cardinality(cardinality));
        }
        let row_len = height * width;
        if data.len() % row_len != 0 {
            return Err(DataError::Ragged { row_len, found: data.len() });
        }
        if let Some(pos) = data.iter().position(|&v| u32::from(v) >= cardinality) {
            return Err(DataError::Value { row: pos / row_len, var: pos % row_len, value: data[pos], cardinality });
        }
        Ok(Self { data, height, width, cardinality })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn cardinality(&self) -> u32 {
        self.cardinality
    }

    pub fn num_vars(&self) -> usize {
        self.height * self.width
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.num_vars()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[u8] {
        let n = self.num_vars();
        &self.data[i * n..(i + 1) * n]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[u8]> + '_ {
        self.data.chunks_exact(self.num_vars())
    }

    /// Borrowed rows, as taken by the engine's batch functions.
    pub fn row_refs(&self) -> Vec<&[u8]> {
        self.rows().collect()
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }

    /// Dataset made of the given rows, in order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        let mut data = Vec::with_capacity(indices.len() * self.num_vars());
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Dataset { data, ..*self }
    }
}

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32, DataError> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or(DataError::Truncated { expected: offset + 4, found: bytes.len() })
}

fn check_magic(bytes: &[u8], expected: u32) -> Result<(), DataError> {
    let found = read_u32(bytes, 0)?;
    if found != expected {
        return Err(DataError::Magic { expected, found });
    }
    Ok(())
}

fn check_payload(bytes: &[u8], offset: usize, len: usize) -> Result<(), DataError> {
    let expected = offset + len;
    if bytes.len() < expected {
        return Err(DataError::Truncated { expected, found: bytes.len() });
    }
    if bytes.len() > expected {
        return Err(DataError::Trailing { offset: expected, extra: bytes.len() - expected });
    }
    Ok(())
}

/// Parses an IDX unsigned-byte image file (`n × height × width`) into a
/// cardinality-256 dataset.
pub fn parse_idx_images(bytes: &[u8]) -> Result<Dataset, DataError> {
    check_magic(bytes, IDX_IMAGES_MAGIC)?;
    let n = read_u32(bytes, 4)? as usize;
    let h = read_u32(bytes, 8)?;
    let w = read_u32(bytes, 12)?;
    if h == 0 {
        return Err(DataError::Dimension { offset: 8, value: h });
    }
    if w == 0 {
        return Err(DataError::Dimension { offset: 12, value: w });
    }
    let len = n
        .checked_mul(h as usize)
        .and_then(|x| x.checked_mul(w as usize))
        .ok_or(DataError::Dimension { offset: 4, value: n as u32 })?;
    check_payload(bytes, 16, len)?;
    Dataset::new(bytes[16..].to_vec(), h as usize, w as usize, 256)
}

/// Parses an IDX label file. Labels play no part in density estimation; the
/// parser exists so paired files can be validated.
pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>, DataError> {
    check_magic(bytes, IDX_LABELS_MAGIC)?;
    let n = read_u32(bytes, 4)? as usize;
    check_payload(bytes, 8, n)?;
    Ok(bytes[8..].to_vec())
}

/// IDX image encoding of a dataset. Values are written as-is, whatever the
/// cardinality.
pub fn write_idx_images(data: &Dataset) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + data.data.len());
    for v in [IDX_IMAGES_MAGIC, data.len() as u32, data.height as u32, data.width as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(&data.data);
    out
}

/// Mixture of fully factorized categorical distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    pub weights: Vec<f64>,
    /// `tables[c][var][value]`, each row summing to one.
    pub tables: Vec<Vec<Vec<f64>>>,
    pub height: usize,
    pub width: usize,
    pub cardinality: u32,
}

impl Mixture {
    /// Random weights and tables; entries are drawn uniformly from
    /// `[0.05, 1)` and normalized.
    pub fn random<R: Rng>(rng: &mut R, height: usize, width: usize, cardinality: u32, n_components: usize) -> Self {
        let mut normalized = |n: usize| {
            let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / s).collect::<Vec<_>>()
        };
        let weights = normalized(n_components);
        let tables = (0..n_components)
            .map(|_| (0..height * width).map(|_| normalized(cardinality as usize)).collect())
            .collect();
        Self { weights, tables, height, width, cardinality }
    }

    /// Single component with uniform tables.
    pub fn uniform(height: usize, width: usize, cardinality: u32) -> Self {
        let row = vec![1.0 / f64::from(cardinality); cardinality as usize];
        Self { weights: vec![1.0], tables: vec![vec![row; height * width]], height, width, cardinality }
    }

    pub fn num_vars(&self) -> usize {
        self.height * self.width
    }

    pub fn probability(&self, x: &[u8]) -> f64 {
        self.weights
            .iter()
            .zip(&self.tables)
            .map(|(w, t)| w * x.iter().zip(t).map(|(&v, row)| row[v as usize]).product::<f64>())
            .sum()
    }

    /// Per-variable marginals `P(X_var = value)`.
    pub fn marginals(&self) -> Vec<Vec<f64>> {
        (0..self.num_vars())
            .map(|var| {
                (0..self.cardinality as usize)
                    .map(|v| self.weights.iter().zip(&self.tables).map(|(w, t)| w * t[var][v]).sum())
                    .collect()
            })
            .collect()
    }

    /// Exact entropy in nats by enumerating every assignment.
    pub fn entropy(&self) -> Result<f64, DataError> {
        let vars = self.num_vars();
        let needed = (self.cardinality as usize).checked_pow(vars as u32).unwrap_or(usize::MAX);
        if vars > MAX_ENTROPY_VARS || needed > MAX_ENTROPY_ASSIGNMENTS {
            return Err(DataError::Capability { needed, vars, limit: MAX_ENTROPY_ASSIGNMENTS });
        }
        let card = self.cardinality as usize;
        let mut x = vec![0u8; vars];
        let mut h = 0.0;
        for mut k in 0..needed {
            for v in x.iter_mut() {
                *v = (k % card) as u8;
                k /= card;
            }
            let p = self.probability(&x);
            if p > 0.0 {
                h -= p * math::ln(p);
            }
        }
        Ok(h)
    }

    pub fn sample<R: Rng>(&self, rng: &mut R, n_samples: usize) -> Dataset {
        let pick = WeightedIndex::new(&self.weights).expect("mixture weights are positive");
        let rows: Vec<Vec<WeightedIndex<f64>>> = self
            .tables
            .iter()
            .map(|t| t.iter().map(|row| WeightedIndex::new(row).expect("tables are positive")).collect())
            .collect();
        let mut data = Vec::with_capacity(n_samples * self.num_vars());
        for _ in 0..n_samples {
            let c = pick.sample(rng);
            data.extend(rows[c].iter().map(|d| d.sample(rng) as u8));
        }
        Dataset::new(data, self.height, self.width, self.cardinality).expect("samples are in range")
    }
}

/// Samples a random seeded mixture and returns the data with the
/// generator's exact entropy.
pub fn synthetic_mixture(
    seed: u64,
    n_samples: usize,
    height: usize,
    width: usize,
    cardinality: u32,
    n_components: usize,
) -> Result<(Dataset, f64), DataError> {
    if height == 0 || width == 0 {
        return Err(DataError::Shape { height, width });
    }
    if cardinality == 0 || cardinality > 256 {
        return Err(DataError::Cardinality(cardinality));
    }
    if n_components == 0 {
        return Err(DataError::EmptyMixture);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mixture = Mixture::random(&mut rng, height, width, cardinality, n_components);
    let entropy = mixture.entropy()?;
    Ok((mixture.sample(&mut rng, n_samples), entropy))
}

/// Block-average pooling to `height × width`, then floor re-quantization
/// `v' = ⌊mean·new / old⌋`.
///
/// The pooled mean is kept as an exact rational, so the result does not
/// depend on floating-point rounding.
pub fn reduce(data: &Dataset, height: usize, width: usize, cardinality: u32) -> Result<Dataset, DataError> {
    if height == 0 || width == 0 {
        return Err(DataError::Shape { height, width });
    }
    if data.height % height != 0 || data.width % width != 0 {
        return Err(DataError::Indivisible { from_h: data.height, from_w: data.width, to_h: height, to_w: width });
    }
    if cardinality == 0 || cardinality > data.cardinality {
        return Err(DataError::Upsample { from: data.cardinality, to: cardinality });
    }
    let (bh, bw) = (data.height / height, data.width / width);
    let denom = (bh * bw) as u64 * u64::from(data.cardinality);
    let mut out = Vec::with_capacity(data.len() * height * width);
    for row in data.rows() {
        for r in 0..height {
            for c in 0..width {
                let mut sum = 0u64;
                for dr in 0..bh {
                    let start = (r * bh + dr) * data.width + c * bw;
                    sum += row[start..start + bw].iter().map(|&v| u64::from(v)).sum::<u64>();
                }
                out.push((sum * u64::from(cardinality) / denom) as u8);
            }
        }
    }
    Dataset::new(out, height, width, cardinality)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx_header(n: u32, h: u32, w: u32) -> Vec<u8> {
        [IDX_IMAGES_MAGIC, n, h, w].iter().flat_map(|v| v.to_be_bytes()).collect()
    }

    #[test]
    fn header_bytes_and_shape() {
        let mut bytes = idx_header(2, 28, 28);
        assert_eq!(&bytes[..4], &[0, 0, 8, 3]);
        bytes.extend((0..2 * 784).map(|i| (i % 256) as u8));
        let d = parse_idx_images(&bytes).unwrap();
        assert_eq!((d.len(), d.num_vars(), d.cardinality()), (2, 784, 256));
        assert_eq!(write_idx_images(&d), bytes);
    }

    #[test]
    fn all_zero_single_image() {
        let mut bytes = idx_header(1, 28, 28);
        bytes.extend(vec![0u8; 784]);
        let d = parse_idx_images(&bytes).unwrap();
        assert_eq!(d.len(), 1);
        assert!(d.row(0).iter().all(|&v| v == 0));
    }

    #[test]
    fn truncation_reports_byte_counts() {
        let mut bytes = idx_header(3, 2, 2);
        bytes.extend([1u8; 10]);
        assert_eq!(parse_idx_images(&bytes), Err(DataError::Truncated { expected: 28, found: 26 }));
        assert_eq!(parse_idx_images(&bytes[..6]), Err(DataError::Truncated { expected: 8, found: 6 }));
    }

    #[test]
    fn wrong_magic_and_labels() {
        let mut labels: Vec<u8> = [IDX_LABELS_MAGIC, 3].iter().flat_map(|v| v.to_be_bytes()).collect();
        labels.extend([7, 1, 4]);
        assert_eq!(parse_idx_labels(&labels).unwrap(), vec![7, 1, 4]);
        assert_eq!(
            parse_idx_images(&labels),
            Err(DataError::Magic { expected: IDX_IMAGES_MAGIC, found: IDX_LABELS_MAGIC })
        );
    }

    #[test]
    fn invariants_are_checked() {
        assert_eq!(Dataset::new(vec![0, 1, 2, 3], 2, 2, 3), Err(DataError::Value { row: 0, var: 3, value: 3, cardinality: 3 }));
        assert!(matches!(Dataset::new(vec![0; 5], 2, 2, 3), Err(DataError::Ragged { .. })));
        assert!(matches!(Dataset::new(vec![], 0, 2, 3), Err(DataError::Shape { .. })));
    }

    #[test]
    fn uniform_entropy() {
        let m = Mixture::uniform(2, 3, 4);
        assert!((m.entropy().unwrap() - 6.0 * math::ln(4.0)).abs() <= 1e-12);
    }

    #[test]
    fn entropy_limit() {
        let (_, h) = synthetic_mixture(1, 10, 4, 4, 2, 3).unwrap();
        assert!(h > 0.0);
        assert!(matches!(synthetic_mixture(1, 10, 3, 6, 2, 3), Err(DataError::Capability { .. })));
        assert!(matches!(synthetic_mixture(1, 10, 2, 4, 8, 3), Err(DataError::Capability { .. })));
    }

    #[test]
    fn mixture_is_seeded() {
        let a = synthetic_mixture(5, 100, 2, 2, 3, 2).unwrap();
        let b = synthetic_mixture(5, 100, 2, 2, 3, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.0, synthetic_mixture(6, 100, 2, 2, 3, 2).unwrap().0);
    }

    #[test]
    fn mixture_frequencies_match_marginals() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = Mixture::random(&mut rng, 2, 2, 2, 2);
        let n = 100_000;
        let d = m.sample(&mut rng, n);
        for (var, row) in m.marginals().iter().enumerate() {
            let p = row[1];
            let freq = d.rows().filter(|r| r[var] == 1).count() as f64 / n as f64;
            let sigma = math::sqrt(p * (1.0 - p) / n as f64);
            assert!((freq - p).abs() <= 3.0 * sigma, "var {var}: {freq} vs {p}");
        }
    }

    #[test]
    fn reduction_examples() {
        let d = Dataset::new((0..2 * 784).map(|i| (i % 256) as u8).collect(), 28, 28, 256).unwrap();
        assert_eq!(reduce(&d, 28, 28, 256).unwrap(), d);
        let r = reduce(&d, 14, 14, 16).unwrap();
        assert_eq!((r.height(), r.width(), r.len()), (14, 14, 2));
        assert!(r.as_bytes().iter().all(|&v| v < 16));
        assert_eq!(reduce(&r, 14, 14, 16).unwrap(), r);
        let c = Dataset::new(vec![255; 16], 4, 4, 256).unwrap();
        assert!(reduce(&c, 4, 4, 4).unwrap().as_bytes().iter().all(|&v| v == 3));
        assert!(matches!(reduce(&d, 5, 14, 16), Err(DataError::Indivisible { .. })));
        assert!(matches!(reduce(&r, 14, 14, 32), Err(DataError::Upsample { .. })));
    }

    #[test]
    fn block_average() {
        let d = Dataset::new(vec![0, 3, 1, 2, 4, 4, 4, 3], 2, 4, 5).unwrap();
        // Blocks {0,3,4,4} and {1,2,4,3}: means 11/4 and 10/4.
        assert_eq!(reduce(&d, 1, 2, 5).unwrap().as_bytes(), &[2, 2]);
        assert_eq!(reduce(&d, 1, 2, 4).unwrap().as_bytes(), &[2, 2]);
        assert_eq!(reduce(&d, 1, 1, 2).unwrap().as_bytes(), &[1]);
    }
}

//! Core types shared across the biclustering pipeline.
//!
//! A [`DataMatrix`] holds the observations-by-features input. Pipeline
//! stages exchange [`DenseRegionSet`]s, [`SeedBicluster`]s and final
//! [`Bicluster`]s; [`ParameterSet`] carries every tunable. All indices
//! are zero-based inside the library; only the CLI layer renders them
//! one-based.

use serde::{Deserialize, Serialize};

/// Errors produced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("matrix must have at least 2 rows and 2 columns")]
    MatrixTooSmall,
    #[error("row {row} has {found} values, expected {expected}")]
    RaggedRow {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("column is constant; range normalization is undefined")]
    ConstantColumn,
    #[error("need at least 2 values, found {found}")]
    TooFewValues { found: usize },
    #[error("maximal separation is zero; values are too heavily tied")]
    ZeroSeparation,
    #[error("need at least 3 non-constant features, found {found}")]
    TooFewFeatures { found: usize },
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("index out of range: {what}")]
    IndexOutOfRange { what: String },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("paired samples must have equal length of at least 2")]
    BadSamplePair,
    #[error("differences have zero variance; t statistic is undefined")]
    ZeroVariance,
    #[error("bicluster list is empty")]
    EmptyBiclusterList,
    #[error("unknown dataset family `{0}`")]
    UnknownFamily(String),
}

/// Fixed-universe bit set over observation indices.
///
/// Seed assembly spends most of its time intersecting observation sets,
/// so sets are kept as packed 64-bit words and intersections reduce to
/// word-wise AND plus popcount.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RowSet {
    words: Vec<u64>,
    universe: usize,
}

impl RowSet {
    /// Creates an empty set over `0..universe`.
    pub fn new(universe: usize) -> Self {
        RowSet {
            words: vec![0; universe.div_ceil(64)],
            universe,
        }
    }

    /// Builds a set from indices, which must all be below `universe`.
    pub fn from_indices<I: IntoIterator<Item = usize>>(universe: usize, indices: I) -> Self {
        let mut set = RowSet::new(universe);
        for i in indices {
            set.insert(i);
        }
        set
    }

    /// Number of indices the set ranges over.
    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn insert(&mut self, index: usize) {
        assert!(index < self.universe, "index {index} outside universe");
        self.words[index / 64] |= 1 << (index % 64);
    }

    pub fn contains(&self, index: usize) -> bool {
        index < self.universe && self.words[index / 64] & (1 << (index % 64)) != 0
    }

    /// Number of members.
    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Size of the intersection without materialising it.
    pub fn intersection_len(&self, other: &Self) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    /// Size of the three-way intersection.
    pub fn intersection3_len(&self, b: &Self, c: &Self) -> usize {
        self.words
            .iter()
            .zip(&b.words)
            .zip(&c.words)
            .map(|((x, y), z)| (x & y & z).count_ones() as usize)
            .sum()
    }

    pub fn intersect(&self, other: &Self) -> Self {
        RowSet {
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a & b)
                .collect(),
            universe: self.universe,
        }
    }

    pub fn union_with(&mut self, other: &Self) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    /// Iterates members in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    None
                } else {
                    let tz = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    Some(wi * 64 + tz)
                }
            })
        })
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }
}

/// Dense observations-by-features matrix, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DataMatrix {
    values: Vec<f64>,
    n_rows: usize,
    n_cols: usize,
    /// Optional column names carried through from file headers.
    pub col_ids: Option<Vec<String>>,
}

impl DataMatrix {
    /// Builds a matrix from rows.
    ///
    /// # Errors
    ///
    /// Fails if there are fewer than 2 rows or columns, rows are ragged,
    /// or any value is NaN or infinite.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, Error> {
        if rows.len() < 2 || rows[0].len() < 2 {
            return Err(Error::MatrixTooSmall);
        }
        let n_cols = rows[0].len();
        let mut values = Vec::with_capacity(rows.len() * n_cols);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::RaggedRow {
                    row: r,
                    found: row.len(),
                    expected: n_cols,
                });
            }
            for (c, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite { row: r, col: c });
                }
                values.push(v);
            }
        }
        Ok(DataMatrix {
            values,
            n_rows: rows.len(),
            n_cols,
            col_ids: None,
        })
    }

    /// Builds a matrix from a row-major buffer of `n_rows * n_cols` values.
    ///
    /// # Errors
    ///
    /// Fails on a shape/length mismatch, fewer than 2 rows or columns, or
    /// non-finite values.
    pub fn from_vec(values: Vec<f64>, n_rows: usize, n_cols: usize) -> Result<Self, Error> {
        if n_rows < 2 || n_cols < 2 {
            return Err(Error::MatrixTooSmall);
        }
        if values.len() != n_rows * n_cols {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {n_rows}x{n_cols} matrix",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / n_cols,
                col: pos % n_cols,
            });
        }
        Ok(DataMatrix {
            values,
            n_rows,
            n_cols,
            col_ids: None,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.values[row * self.n_cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.n_cols..(row + 1) * self.n_cols]
    }

    /// Copies column `col` into a fresh vector.
    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.n_rows).map(|r| self.get(r, col)).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Column normalization applied before density estimation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// Min-max rescaling onto `[0, 1]`; for data with bounded support.
    Bounded,
    /// Arctangent squashing onto `(0, 1)` followed by min-max rescaling;
    /// for data with unbounded support.
    Unbounded,
}

/// Which per-pair density estimator the pipeline uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityMode {
    /// Pick by observation count against `large_threshold`.
    Auto,
    /// Force the per-point neighbourhood estimator.
    Small,
    /// Force the grid histogram estimator.
    Large,
}

/// Every tunable of the pipeline, with the defaults used throughout the
/// evaluation harness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParameterSet {
    /// Minimum observation count for a triplet seed to survive.
    pub min_seed_size: usize,
    /// Fraction of the base seed that a candidate must share to join it.
    pub sim2seed: f64,
    /// When false, seeds similar to an already-grown base are not used
    /// as future bases.
    pub reuse_all_seeds: bool,
    /// Scales `sim2seed` to form the ineligibility threshold used when
    /// `reuse_all_seeds` is false.
    pub reuse_seed_sim: f64,
    /// Minimum number of matched seeds an observation must appear in.
    pub obs_in_min_base: usize,
    /// Cosine-similarity ceiling above which the smaller bicluster is
    /// weeded out; `1.0` disables weeding.
    pub clus_sim: f64,
    /// Column normalization applied to the whole matrix.
    pub normalization: Normalization,
    /// Density estimator selection.
    pub density_mode: DensityMode,
    /// Exponent in `(0, 0.5)` mapping a column's maximal separation to
    /// the neighbourhood half-width of the per-point estimator.
    pub small_c: f64,
    /// Observation count at which `DensityMode::Auto` switches to the
    /// grid estimator.
    pub large_threshold: usize,
    /// Seed for the dataset generators.
    pub rng_seed: u64,
}

impl Default for ParameterSet {
    fn default() -> Self {
        ParameterSet {
            min_seed_size: 100,
            sim2seed: 0.8,
            reuse_all_seeds: false,
            reuse_seed_sim: 0.5,
            obs_in_min_base: 3,
            clus_sim: 1.0,
            normalization: Normalization::Bounded,
            density_mode: DensityMode::Auto,
            small_c: 0.4999,
            large_threshold: 750,
            rng_seed: 0,
        }
    }
}

impl ParameterSet {
    /// Checks every field against its admissible range.
    ///
    /// # Errors
    ///
    /// Returns [`Error::InvalidParameter`] naming the first offending field.
    pub fn validate(&self) -> Result<(), Error> {
        fn bad(name: &'static str, reason: String) -> Error {
            Error::InvalidParameter { name, reason }
        }
        if self.min_seed_size == 0 {
            return Err(bad("min_seed_size", "must be at least 1".into()));
        }
        if !(self.sim2seed > 0.0 && self.sim2seed <= 1.0) {
            return Err(bad("sim2seed", format!("{} not in (0, 1]", self.sim2seed)));
        }
        if !(self.reuse_seed_sim > 0.0 && self.reuse_seed_sim <= 1.0) {
            return Err(bad(
                "reuse_seed_sim",
                format!("{} not in (0, 1]", self.reuse_seed_sim),
            ));
        }
        if self.obs_in_min_base == 0 {
            return Err(bad("obs_in_min_base", "must be at least 1".into()));
        }
        if !(self.clus_sim > 0.0 && self.clus_sim <= 1.0) {
            return Err(bad("clus_sim", format!("{} not in (0, 1]", self.clus_sim)));
        }
        if !(self.small_c > 0.0 && self.small_c < 0.5) {
            return Err(bad("small_c", format!("{} not in (0, 0.5)", self.small_c)));
        }
        if self.large_threshold < 2 {
            return Err(bad("large_threshold", "must be at least 2".into()));
        }
        Ok(())
    }
}

/// How one column was normalized.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ColumnNorm {
    pub method: Normalization,
    /// Minimum of the values consumed by the final rescaling step (the
    /// raw column for bounded, the arctangent-mapped column for unbounded).
    pub min: f64,
    /// Maximum of the values consumed by the final rescaling step.
    pub max: f64,
    /// Constant columns are zeroed and excluded from pair analysis.
    pub constant: bool,
}

/// Matrix with every usable column rescaled onto `[0, 1]`.
#[derive(Clone, Debug)]
pub struct NormalizedMatrix {
    values: Vec<f64>,
    n_rows: usize,
    n_cols: usize,
    pub columns: Vec<ColumnNorm>,
}

impl NormalizedMatrix {
    pub(crate) fn from_parts(
        values: Vec<f64>,
        n_rows: usize,
        n_cols: usize,
        columns: Vec<ColumnNorm>,
    ) -> Self {
        NormalizedMatrix {
            values,
            n_rows,
            n_cols,
            columns,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_cols + col]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.n_rows).map(|r| self.get(r, col)).collect()
    }

    /// Indices of constant columns, which carry no pair information.
    pub fn constant_columns(&self) -> Vec<usize> {
        self.columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.constant)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Dense regions found for one feature pair: each region is a sorted list
/// of observation indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DenseRegionSet {
    /// `(i, j)` with `i < j`.
    pub feature_pair: (usize, usize),
    pub regions: Vec<Vec<usize>>,
}

/// Dense regions for every feature pair `(i, j)` with `i < j`, in
/// lexicographic pair order.
#[derive(Clone, Debug)]
pub struct PairRegionMap {
    pub n_rows: usize,
    pub n_cols: usize,
    pairs: Vec<DenseRegionSet>,
    /// Pairs skipped because a column was constant or had zero separation.
    pub skipped: Vec<(usize, usize)>,
}

impl PairRegionMap {
    pub(crate) fn from_parts(
        n_rows: usize,
        n_cols: usize,
        pairs: Vec<DenseRegionSet>,
        skipped: Vec<(usize, usize)>,
    ) -> Self {
        PairRegionMap {
            n_rows,
            n_cols,
            pairs,
            skipped,
        }
    }

    fn pair_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.n_cols);
        i * self.n_cols - i * (i + 1) / 2 + (j - i - 1)
    }

    /// Regions for the pair `(i, j)`; requires `i < j < n_cols`.
    pub fn get(&self, i: usize, j: usize) -> &DenseRegionSet {
        &self.pairs[self.pair_index(i, j)]
    }

    pub fn iter(&self) -> impl Iterator<Item = &DenseRegionSet> {
        self.pairs.iter()
    }
}

/// Candidate bicluster seeded by one feature triplet.
#[derive(Clone, Debug)]
pub struct SeedBicluster {
    pub observations: RowSet,
    /// Features `(i, j, k)` with `i < j < k`.
    pub feature_triplet: [usize; 3],
    /// Region indices chosen for the pairs `(i, j)`, `(j, k)`, `(i, k)`.
    pub region_choice: [usize; 3],
}

/// Final bicluster: sorted observation and feature index lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bicluster {
    pub observations: Vec<usize>,
    pub features: Vec<usize>,
}

impl Bicluster {
    pub fn new(mut observations: Vec<usize>, mut features: Vec<usize>) -> Self {
        observations.sort_unstable();
        observations.dedup();
        features.sort_unstable();
        features.dedup();
        Bicluster {
            observations,
            features,
        }
    }

    /// Cell count `|observations| * |features|`.
    pub fn area(&self) -> usize {
        self.observations.len() * self.features.len()
    }
}

/// Packed binary observations-by-features membership matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MembershipMatrix {
    words: Vec<u64>,
    n_rows: usize,
    n_cols: usize,
}

impl MembershipMatrix {
    pub fn new(n_rows: usize, n_cols: usize) -> Self {
        MembershipMatrix {
            words: vec![0; (n_rows * n_cols).div_ceil(64)],
            n_rows,
            n_cols,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        let bit = row * self.n_cols + col;
        self.words[bit / 64] & (1 << (bit % 64)) != 0
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        let bit = row * self.n_cols + col;
        if value {
            self.words[bit / 64] |= 1 << (bit % 64);
        } else {
            self.words[bit / 64] &= !(1 << (bit % 64));
        }
    }

    /// Number of cells set to one.
    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of cells on which the two matrices agree.
    ///
    /// # Errors
    ///
    /// Fails if the shapes differ.
    pub fn agreement(&self, other: &Self) -> Result<usize, Error> {
        if self.n_rows != other.n_rows || self.n_cols != other.n_cols {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} vs {}x{}",
                self.n_rows, self.n_cols, other.n_rows, other.n_cols
            )));
        }
        let differing: usize = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum();
        Ok(self.n_rows * self.n_cols - differing)
    }
}

/// Expands a bicluster into an `n_rows` by `n_cols` binary membership
/// matrix with ones exactly on its cells.
///
/// # Errors
///
/// Fails if any observation or feature index falls outside the matrix.
pub fn membership_matrix(
    bicluster: &Bicluster,
    n_rows: usize,
    n_cols: usize,
) -> Result<MembershipMatrix, Error> {
    if let Some(&r) = bicluster.observations.iter().find(|&&r| r >= n_rows) {
        return Err(Error::IndexOutOfRange {
            what: format!("observation {r} in a matrix with {n_rows} rows"),
        });
    }
    if let Some(&c) = bicluster.features.iter().find(|&&c| c >= n_cols) {
        return Err(Error::IndexOutOfRange {
            what: format!("feature {c} in a matrix with {n_cols} columns"),
        });
    }
    let mut m = MembershipMatrix::new(n_rows, n_cols);
    for &r in &bicluster.observations {
        for &c in &bicluster.features {
            m.set(r, c, true);
        }
    }
    Ok(m)
}

//! Dense-region detection for feature pairs.
//!
//! For every pair of normalized columns the pipeline finds regions of
//! the unit square whose joint density exceeds both marginal densities
//! and the global average. Two estimators cover different data sizes:
//! a per-point neighbourhood estimator for small samples and a grid
//! histogram estimator for large ones.

use rayon::prelude::*;

use crate::model::{
    DenseRegionSet, Error, NormalizedMatrix, PairRegionMap, ParameterSet, RowSet,
};

/// Which estimator a run uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DensityPath {
    Small,
    Large,
}

impl DensityPath {
    pub fn as_str(self) -> &'static str {
        match self {
            DensityPath::Small => "small",
            DensityPath::Large => "large",
        }
    }
}

/// Resolves the estimator for a run from the mode and observation count.
pub fn chosen_path(n_obs: usize, params: &ParameterSet) -> DensityPath {
    match params.density_mode {
        crate::model::DensityMode::Small => DensityPath::Small,
        crate::model::DensityMode::Large => DensityPath::Large,
        crate::model::DensityMode::Auto => {
            if n_obs < params.large_threshold {
                DensityPath::Small
            } else {
                DensityPath::Large
            }
        }
    }
}

/// Largest gap between consecutive sorted values.
///
/// # Errors
///
/// Fails with [`Error::TooFewValues`] on fewer than 2 values.
pub fn maximal_separation(column: &[f64]) -> Result<f64, Error> {
    if column.len() < 2 {
        return Err(Error::TooFewValues {
            found: column.len(),
        });
    }
    let mut sorted = column.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut max_gap = 0.0_f64;
    for w in sorted.windows(2) {
        max_gap = max_gap.max(w[1] - w[0]);
    }
    Ok(max_gap)
}

/// Neighbourhood width `separation^exponent` of the per-point estimator.
///
/// With `exponent` below one half the width shrinks slower than the
/// square root of the largest gap, so neighbourhoods stay wider than
/// the gaps between points.
///
/// # Errors
///
/// Fails on a non-positive separation or an exponent outside `(0, 0.5)`.
pub fn small_bin_length(separation: f64, exponent: f64) -> Result<f64, Error> {
    if !(exponent > 0.0 && exponent < 0.5) {
        return Err(Error::InvalidParameter {
            name: "small_c",
            reason: format!("{exponent} not in (0, 0.5)"),
        });
    }
    if separation <= 0.0 || !separation.is_finite() {
        return Err(Error::ZeroSeparation);
    }
    Ok(separation.powf(exponent))
}

/// Number of equal-width partitions the grid estimator uses for `n_obs`
/// observations: `round(3 ln n)`, never below 2.
pub fn large_partition_count(n_obs: usize) -> usize {
    let raw = (3.0 * (n_obs as f64).ln()).round() as i64;
    raw.max(2) as usize
}

/// Bin index of a value on `[0, 1]` split into `bins` half-open cells
/// `(k/bins, (k+1)/bins]`; zero falls into the first bin.
pub fn bin_of(value: f64, bins: usize) -> usize {
    let k = (value * bins as f64).ceil() as i64 - 1;
    k.clamp(0, bins as i64 - 1) as usize
}

/// Joint histogram of two columns on a square grid, with marginals.
#[derive(Clone, Debug)]
pub struct GridHistogram {
    pub bins: usize,
    counts: Vec<u32>,
    pub x_marginal: Vec<u32>,
    pub y_marginal: Vec<u32>,
    pub n_obs: usize,
}

impl GridHistogram {
    pub fn count(&self, x_bin: usize, y_bin: usize) -> u32 {
        self.counts[x_bin * self.bins + y_bin]
    }
}

/// Builds the joint histogram of two equally long columns.
///
/// # Errors
///
/// Fails if the columns differ in length or `bins` is zero.
pub fn grid_histogram(x: &[f64], y: &[f64], bins: usize) -> Result<GridHistogram, Error> {
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "columns of length {} and {}",
            x.len(),
            y.len()
        )));
    }
    if bins == 0 {
        return Err(Error::InvalidParameter {
            name: "bins",
            reason: "must be at least 1".into(),
        });
    }
    let mut counts = vec![0u32; bins * bins];
    let mut x_marginal = vec![0u32; bins];
    let mut y_marginal = vec![0u32; bins];
    for (&xv, &yv) in x.iter().zip(y) {
        let bx = bin_of(xv, bins);
        let by = bin_of(yv, bins);
        counts[bx * bins + by] += 1;
        x_marginal[bx] += 1;
        y_marginal[by] += 1;
    }
    Ok(GridHistogram {
        bins,
        counts,
        x_marginal,
        y_marginal,
        n_obs: x.len(),
    })
}

/// Tests whether a cell's joint probability strictly exceeds both
/// scaled marginals and the global average cell probability.
pub fn dense_cell_predicate(
    joint: f64,
    marg_x: f64,
    marg_y: f64,
    n_x: usize,
    n_y: usize,
) -> bool {
    joint > marg_x / n_y as f64
        && joint > marg_y / n_x as f64
        && joint > 1.0 / (n_x as f64 * n_y as f64)
}

/// Integer form of [`dense_cell_predicate`] on raw counts; exact, so
/// boundary cases cannot flip under float rounding.
fn dense_cell_counts(c_xy: u64, c_x: u64, c_y: u64, n: u64, n_x: u64, n_y: u64) -> bool {
    c_xy * n_y > c_x && c_xy * n_x > c_y && c_xy * n_x * n_y > n
}

/// Per-pair geometry of the per-point estimator.
#[derive(Clone, Copy, Debug)]
pub struct CellGeometry {
    pub sep_x: f64,
    pub sep_y: f64,
    pub bin_x: f64,
    pub bin_y: f64,
}

/// Computes separations and neighbourhood widths for a column pair.
///
/// # Errors
///
/// Propagates the failures of [`maximal_separation`] and
/// [`small_bin_length`].
pub fn cell_geometry(x: &[f64], y: &[f64], exponent: f64) -> Result<CellGeometry, Error> {
    let sep_x = maximal_separation(x)?;
    let sep_y = maximal_separation(y)?;
    Ok(CellGeometry {
        sep_x,
        sep_y,
        bin_x: small_bin_length(sep_x, exponent)?,
        bin_y: small_bin_length(sep_y, exponent)?,
    })
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Groups member observations into regions ordered by their smallest
/// observation index, with members ascending inside each region.
fn regions_from_components(
    members: &[usize],
    mut component_of: impl FnMut(usize) -> usize,
) -> Vec<Vec<usize>> {
    let mut region_of_root: std::collections::HashMap<usize, usize> =
        std::collections::HashMap::new();
    let mut regions: Vec<Vec<usize>> = Vec::new();
    for (idx, &obs) in members.iter().enumerate() {
        let root = component_of(idx);
        let region = *region_of_root.entry(root).or_insert_with(|| {
            regions.push(Vec::new());
            regions.len() - 1
        });
        regions[region].push(obs);
    }
    regions
}

/// Finds dense regions of a column pair with the per-point estimator.
///
/// Each observation gets a rectangular neighbourhood sized by the
/// columns' maximal separations. Observations denser than both their
/// marginal strips and the global average survive, mutually dense
/// survivors merge, loners are dropped, and the remainder is connected
/// into regions with a radius that shrinks as the survivor count grows.
///
/// # Errors
///
/// Fails on mismatched column lengths, fewer than 2 observations, a
/// zero separation (heavily tied column) or an exponent outside
/// `(0, 0.5)`.
pub fn dense_regions_small(x: &[f64], y: &[f64], exponent: f64) -> Result<Vec<Vec<usize>>, Error> {
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "columns of length {} and {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    let geom = cell_geometry(x, y, exponent)?;
    let (bx, by) = (geom.bin_x, geom.bin_y);
    let area = bx * by;

    let mut neigh: Vec<RowSet> = vec![RowSet::new(n); n];
    let mut marg_x = vec![0usize; n];
    let mut marg_y = vec![0usize; n];
    for a in 0..n {
        for b in 0..n {
            let dx = (x[a] - x[b]).abs();
            let dy = (y[a] - y[b]).abs();
            if a != b && dx < bx && dy < by {
                neigh[a].insert(b);
            }
            if dx < bx / 2.0 {
                marg_x[a] += 1;
            }
            if dy < by / 2.0 {
                marg_y[a] += 1;
            }
        }
    }

    let survives = |a: usize| {
        let cnt = neigh[a].len() as f64;
        cnt > n as f64 * area
            && cnt / area > marg_x[a] as f64 / bx
            && cnt / area > marg_y[a] as f64 / by
    };
    let finset: Vec<usize> = (0..n).filter(|&a| survives(a)).collect();

    let mut merged = vec![false; n];
    for (ai, &a) in finset.iter().enumerate() {
        for &b in &finset[ai + 1..] {
            let common = neigh[a].intersection_len(&neigh[b]) as f64;
            let lhs = 4.0 * common / area;
            let rhs = (marg_x[a] as f64 / bx)
                .max(marg_y[a] as f64 / by)
                .max(marg_x[b] as f64 / bx)
                .max(marg_y[b] as f64 / by);
            if lhs > rhs {
                merged[a] = true;
                merged[b] = true;
            }
        }
    }

    let retained: Vec<usize> = finset.into_iter().filter(|&a| merged[a]).collect();
    let npc = retained.len();
    if npc == 0 {
        return Ok(Vec::new());
    }
    let rad = (npc as f64).ln() / npc as f64;

    let mut dsu = Dsu::new(npc);
    for i in 0..npc {
        for j in i + 1..npc {
            let (a, b) = (retained[i], retained[j]);
            let d = ((x[a] - x[b]).powi(2) + (y[a] - y[b]).powi(2)).sqrt();
            if d <= rad {
                dsu.union(i, j);
            }
        }
    }
    Ok(regions_from_components(&retained, |i| dsu.find(i)))
}

/// Finds dense regions of a column pair with the grid estimator.
///
/// The unit square is split into `round(3 ln n)` partitions per axis,
/// cells denser than both marginals and the global average are flagged,
/// flagged cells merge across 8-connectivity, and each merged group of
/// cells yields the region of observations falling in it.
///
/// # Errors
///
/// Fails on mismatched column lengths or fewer than 2 observations.
pub fn dense_regions_large(x: &[f64], y: &[f64]) -> Result<Vec<Vec<usize>>, Error> {
    if x.len() < 2 {
        return Err(Error::TooFewValues { found: x.len() });
    }
    let n = x.len();
    let bins = large_partition_count(n);
    let hist = grid_histogram(x, y, bins)?;

    let mut dense = vec![false; bins * bins];
    for bx in 0..bins {
        for by in 0..bins {
            dense[bx * bins + by] = dense_cell_counts(
                hist.count(bx, by) as u64,
                hist.x_marginal[bx] as u64,
                hist.y_marginal[by] as u64,
                n as u64,
                bins as u64,
                bins as u64,
            );
        }
    }

    let mut dsu = Dsu::new(bins * bins);
    for bx in 0..bins {
        for by in 0..bins {
            if !dense[bx * bins + by] {
                continue;
            }
            for dx in -1i64..=1 {
                for dy in -1i64..=1 {
                    let (nx, ny) = (bx as i64 + dx, by as i64 + dy);
                    if nx < 0 || ny < 0 || nx >= bins as i64 || ny >= bins as i64 {
                        continue;
                    }
                    let ncell = nx as usize * bins + ny as usize;
                    if dense[ncell] {
                        dsu.union(bx * bins + by, ncell);
                    }
                }
            }
        }
    }

    let members: Vec<usize> = (0..n)
        .filter(|&r| dense[bin_of(x[r], bins) * bins + bin_of(y[r], bins)])
        .collect();
    let cells: Vec<usize> = members
        .iter()
        .map(|&r| bin_of(x[r], bins) * bins + bin_of(y[r], bins))
        .collect();
    Ok(regions_from_components(&members, |i| dsu.find(cells[i])))
}

/// Runs the chosen estimator over every feature pair in parallel.
///
/// Constant columns and pairs whose columns have zero separation carry
/// no pair information; their entries come back empty and are listed in
/// [`PairRegionMap::skipped`].
///
/// # Errors
///
/// Fails on invalid parameters or when fewer than 3 non-constant
/// features remain.
pub fn find_dense_regions(
    matrix: &NormalizedMatrix,
    params: &ParameterSet,
) -> Result<PairRegionMap, Error> {
    params.validate()?;
    let n_cols = matrix.n_cols();
    let usable = n_cols - matrix.constant_columns().len();
    if usable < 3 {
        return Err(Error::TooFewFeatures { found: usable });
    }
    let path = chosen_path(matrix.n_rows(), params);
    let columns: Vec<Vec<f64>> = (0..n_cols).map(|c| matrix.column(c)).collect();
    let constant: Vec<bool> = matrix.columns.iter().map(|c| c.constant).collect();

    let pair_list: Vec<(usize, usize)> = (0..n_cols)
        .flat_map(|i| (i + 1..n_cols).map(move |j| (i, j)))
        .collect();
    let computed: Result<Vec<(DenseRegionSet, bool)>, Error> = pair_list
        .par_iter()
        .map(|&(i, j)| {
            let empty = |skip: bool| {
                (
                    DenseRegionSet {
                        feature_pair: (i, j),
                        regions: Vec::new(),
                    },
                    skip,
                )
            };
            if constant[i] || constant[j] {
                return Ok(empty(true));
            }
            let result = match path {
                DensityPath::Small => {
                    dense_regions_small(&columns[i], &columns[j], params.small_c)
                }
                DensityPath::Large => dense_regions_large(&columns[i], &columns[j]),
            };
            match result {
                Ok(regions) => Ok((
                    DenseRegionSet {
                        feature_pair: (i, j),
                        regions,
                    },
                    false,
                )),
                Err(Error::ZeroSeparation) => Ok(empty(true)),
                Err(e) => Err(e),
            }
        })
        .collect();
    let computed = computed?;

    let skipped: Vec<(usize, usize)> = computed
        .iter()
        .filter(|(_, skip)| *skip)
        .map(|(set, _)| set.feature_pair)
        .collect();
    let pairs: Vec<DenseRegionSet> = computed.into_iter().map(|(set, _)| set).collect();
    Ok(PairRegionMap::from_parts(
        matrix.n_rows(),
        n_cols,
        pairs,
        skipped,
    ))
}

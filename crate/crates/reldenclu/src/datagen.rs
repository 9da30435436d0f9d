//! Synthetic dataset generators for the evaluation harness.
//!
//! Each generator plants one or more biclusters into a background
//! matrix and returns the data together with the planted truth. All
//! generators are driven by a seeded portable RNG, so a `(family,
//! seed)` pair reproduces the same dataset byte for byte on any
//! platform.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::Serialize;

use crate::model::{Bicluster, DataMatrix, Error};

const BACKGROUND_ROWS: usize = 1000;
const BACKGROUND_COLS: usize = 20;
const BLOCK_ROWS: usize = 500;
const BLOCK_COLS: usize = 10;

/// How a dataset was produced.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Recipe {
    pub family: String,
    pub seed: u64,
    pub n_rows: usize,
    pub n_cols: usize,
}

/// A generated matrix with its planted biclusters.
#[derive(Clone, Debug)]
pub struct GeneratedDataset {
    pub matrix: DataMatrix,
    pub truth: Vec<Bicluster>,
    pub recipe: Recipe,
}

/// Which nonlinear column family a generated block uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NonlinearVariant {
    One,
    Two,
}

/// Dataset-level transforms applied on top of a generated dataset.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Transform {
    /// Multiply each column by its own factor drawn from `(0, 1)`.
    Scale,
    /// Add a per-column offset drawn from `(0, 1)`.
    Translate,
    /// Apply `a * x + b` per column with `a, b` drawn from `(0, 1)`.
    Linear,
    /// Square every value.
    Square,
    /// Exponentiate every value.
    Exp,
    /// Add independent noise from `[0, 0.1)` to every value.
    UniformNoise,
    /// Duplicate every row, doubling the observation count.
    PointProportion,
    /// Duplicate only the planted rows, raising the bicluster fraction.
    ClusterProportion,
    /// Randomly permute rows and columns, relabelling the truth.
    Permute,
}

impl Transform {
    pub fn name(self) -> &'static str {
        match self {
            Transform::Scale => "scale",
            Transform::Translate => "translate",
            Transform::Linear => "linear",
            Transform::Square => "square",
            Transform::Exp => "exp",
            Transform::UniformNoise => "uniform-noise",
            Transform::PointProportion => "point-proportion",
            Transform::ClusterProportion => "cluster-proportion",
            Transform::Permute => "permute",
        }
    }
}

/// Stream 0 drives generation, stream 1 drives transforms, so a
/// transform never replays the draws that built the data.
fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform draw from the open interval `(0, 1)`.
fn open01(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let v: f64 = rng.random();
        if v > 0.0 {
            return v;
        }
    }
}

fn uniform_matrix(rng: &mut ChaCha8Rng, n_rows: usize, n_cols: usize) -> DataMatrix {
    let values: Vec<f64> = (0..n_rows * n_cols).map(|_| rng.random()).collect();
    DataMatrix::from_vec(values, n_rows, n_cols).expect("generated shape is valid")
}

fn sorted_sample(rng: &mut ChaCha8Rng, universe: usize, amount: usize) -> Vec<usize> {
    let mut picked = rand::seq::index::sample(rng, universe, amount).into_vec();
    picked.sort_unstable();
    picked
}

/// Plants a block at `rows` x `cols`: the first block column keeps its
/// background values as the driver `x`, every other block column `i`
/// becomes `h(i, x)`.
fn plant_block(
    matrix: &mut DataMatrix,
    rows: &[usize],
    cols: &[usize],
    mut h: impl FnMut(usize, f64) -> f64,
) {
    for &r in rows {
        let x = matrix.get(r, cols[0]);
        for (i, &c) in cols.iter().enumerate().skip(1) {
            matrix.set(r, c, h(i, x));
        }
    }
}

/// 1000x20 uniform background with a 500x10 block whose columns are
/// `a_i * x` for per-column coefficients `a_i` drawn from `(0, 1)`.
pub fn gen_base(seed: u64) -> GeneratedDataset {
    let mut rng = rng_for(seed, 0);
    let mut matrix = uniform_matrix(&mut rng, BACKGROUND_ROWS, BACKGROUND_COLS);
    let rows = sorted_sample(&mut rng, BACKGROUND_ROWS, BLOCK_ROWS);
    let cols = sorted_sample(&mut rng, BACKGROUND_COLS, BLOCK_COLS);
    let coeffs: Vec<f64> = (1..BLOCK_COLS).map(|_| open01(&mut rng)).collect();
    plant_block(&mut matrix, &rows, &cols, |i, x| coeffs[i - 1] * x);
    GeneratedDataset {
        matrix,
        truth: vec![Bicluster::new(rows, cols)],
        recipe: Recipe {
            family: "base".into(),
            seed,
            n_rows: BACKGROUND_ROWS,
            n_cols: BACKGROUND_COLS,
        },
    }
}

/// Like [`gen_base`] but with fixed nonlinear column functions of the
/// driver; variant two repeats some functions and compresses others.
pub fn gen_nonlinear(variant: NonlinearVariant, seed: u64) -> GeneratedDataset {
    use std::f64::consts::PI;
    let h_one: [fn(f64) -> f64; 10] = [
        |x| x,
        f64::sin,
        |x| x * x,
        |x| x.powi(10),
        |x| (PI * x).sin(),
        |x| (2.0 * PI * x).sin(),
        |x| x.powi(3),
        |x| 4.0 * x * x,
        |x| (4.0 * PI * x).sin(),
        |x| 4.0 * x.powi(3),
    ];
    let h_two: [fn(f64) -> f64; 10] = [
        |x| x,
        f64::sin,
        |x| x * x,
        |x| x.powi(10),
        |x| 0.5 * (PI * x).sin(),
        |x| 0.5 * (2.0 * PI * x).sin() + 0.5,
        |x| x.powi(3),
        |x| x * x,
        |x| 0.5 * (4.0 * PI * x).sin() + 0.5,
        |x| x.powi(3),
    ];
    let (table, family) = match variant {
        NonlinearVariant::One => (h_one, "nonlinear1"),
        NonlinearVariant::Two => (h_two, "nonlinear2"),
    };
    let mut rng = rng_for(seed, 0);
    let mut matrix = uniform_matrix(&mut rng, BACKGROUND_ROWS, BACKGROUND_COLS);
    let rows = sorted_sample(&mut rng, BACKGROUND_ROWS, BLOCK_ROWS);
    let cols = sorted_sample(&mut rng, BACKGROUND_COLS, BLOCK_COLS);
    plant_block(&mut matrix, &rows, &cols, |i, x| table[i](x));
    GeneratedDataset {
        matrix,
        truth: vec![Bicluster::new(rows, cols)],
        recipe: Recipe {
            family: family.into(),
            seed,
            n_rows: BACKGROUND_ROWS,
            n_cols: BACKGROUND_COLS,
        },
    }
}

/// Standard normal background with a linear block, optionally with
/// `N(0, 0.1^2)` noise added to every cell afterwards.
pub fn gen_normal(noisy: bool, seed: u64) -> GeneratedDataset {
    let mut rng = rng_for(seed, 0);
    let values: Vec<f64> = (0..BACKGROUND_ROWS * BACKGROUND_COLS)
        .map(|_| rng.sample(StandardNormal))
        .collect();
    let mut matrix =
        DataMatrix::from_vec(values, BACKGROUND_ROWS, BACKGROUND_COLS).expect("valid shape");
    let rows = sorted_sample(&mut rng, BACKGROUND_ROWS, BLOCK_ROWS);
    let cols = sorted_sample(&mut rng, BACKGROUND_COLS, BLOCK_COLS);
    let coeffs: Vec<f64> = (1..BLOCK_COLS).map(|_| open01(&mut rng)).collect();
    plant_block(&mut matrix, &rows, &cols, |i, x| coeffs[i - 1] * x);
    if noisy {
        let noise = Normal::new(0.0, 0.1).expect("valid sigma");
        for r in 0..BACKGROUND_ROWS {
            for c in 0..BACKGROUND_COLS {
                let v = matrix.get(r, c) + noise.sample(&mut rng);
                matrix.set(r, c, v);
            }
        }
    }
    GeneratedDataset {
        matrix,
        truth: vec![Bicluster::new(rows, cols)],
        recipe: Recipe {
            family: if noisy { "noisy-normal" } else { "normal" }.into(),
            seed,
            n_rows: BACKGROUND_ROWS,
            n_cols: BACKGROUND_COLS,
        },
    }
}

/// Two additively shifted blocks, 500x10 and 300x8, sharing exactly
/// 300 rows (the second block's rows nest inside the first's) and 3
/// columns; overlap cells receive both shifts.
///
/// Each block's shift is drawn from `[1.5, 2)`. The lower bound keeps
/// every value band (background, one shift, two shifts) at least two
/// grid cells away from its neighbours after normalization, so the
/// blocks never bleed into the background; the upper bound keeps the
/// rescaled background wide enough for the grid to resolve.
pub fn gen_overlap(seed: u64) -> GeneratedDataset {
    let mut rng = rng_for(seed, 0);
    let mut matrix = uniform_matrix(&mut rng, BACKGROUND_ROWS, BACKGROUND_COLS);
    let rows1 = sorted_sample(&mut rng, BACKGROUND_ROWS, BLOCK_ROWS);
    let rows2: Vec<usize> = {
        let inner = sorted_sample(&mut rng, BLOCK_ROWS, 300);
        inner.into_iter().map(|i| rows1[i]).collect()
    };
    let cols15 = sorted_sample(&mut rng, BACKGROUND_COLS, 15);
    let f1: Vec<usize> = cols15[..10].to_vec();
    let f2: Vec<usize> = cols15[7..].to_vec();
    let shift1 = 1.5 + 0.5 * rng.random::<f64>();
    let shift2 = 1.5 + 0.5 * rng.random::<f64>();
    for &r in &rows1 {
        for &c in &f1 {
            let v = matrix.get(r, c) + shift1;
            matrix.set(r, c, v);
        }
    }
    for &r in &rows2 {
        for &c in &f2 {
            let v = matrix.get(r, c) + shift2;
            matrix.set(r, c, v);
        }
    }
    GeneratedDataset {
        matrix,
        truth: vec![Bicluster::new(rows1, f1), Bicluster::new(rows2, f2)],
        recipe: Recipe {
            family: "overlap".into(),
            seed,
            n_rows: BACKGROUND_ROWS,
            n_cols: BACKGROUND_COLS,
        },
    }
}

/// 20000x100 uniform background with a 10000x30 linear block.
pub fn gen_large(seed: u64) -> GeneratedDataset {
    const N: usize = 20000;
    const M: usize = 100;
    let mut rng = rng_for(seed, 0);
    let mut matrix = uniform_matrix(&mut rng, N, M);
    let rows = sorted_sample(&mut rng, N, 10000);
    let cols = sorted_sample(&mut rng, M, 30);
    let coeffs: Vec<f64> = (1..30).map(|_| open01(&mut rng)).collect();
    plant_block(&mut matrix, &rows, &cols, |i, x| coeffs[i - 1] * x);
    GeneratedDataset {
        matrix,
        truth: vec![Bicluster::new(rows, cols)],
        recipe: Recipe {
            family: "large".into(),
            seed,
            n_rows: N,
            n_cols: M,
        },
    }
}

/// Applies a transform, returning a new dataset with relabelled truth
/// where the transform moves rows or columns around.
///
/// # Errors
///
/// [`Transform::ClusterProportion`] requires exactly one planted
/// bicluster.
pub fn apply_transform(
    dataset: &GeneratedDataset,
    transform: Transform,
    seed: u64,
) -> Result<GeneratedDataset, Error> {
    let mut rng = rng_for(seed, 1);
    let n = dataset.matrix.n_rows();
    let m = dataset.matrix.n_cols();
    let mut recipe = dataset.recipe.clone();
    recipe.family = format!("{}+{}", recipe.family, transform.name());

    let mut matrix = dataset.matrix.clone();
    let mut truth = dataset.truth.clone();
    match transform {
        Transform::Scale => {
            for c in 0..m {
                let factor = open01(&mut rng);
                for r in 0..n {
                    matrix.set(r, c, matrix.get(r, c) * factor);
                }
            }
        }
        Transform::Translate => {
            for c in 0..m {
                let offset = open01(&mut rng);
                for r in 0..n {
                    matrix.set(r, c, matrix.get(r, c) + offset);
                }
            }
        }
        Transform::Linear => {
            for c in 0..m {
                let a = open01(&mut rng);
                let b = open01(&mut rng);
                for r in 0..n {
                    matrix.set(r, c, a * matrix.get(r, c) + b);
                }
            }
        }
        Transform::Square => {
            for r in 0..n {
                for c in 0..m {
                    let v = matrix.get(r, c);
                    matrix.set(r, c, v * v);
                }
            }
        }
        Transform::Exp => {
            for r in 0..n {
                for c in 0..m {
                    matrix.set(r, c, matrix.get(r, c).exp());
                }
            }
        }
        Transform::UniformNoise => {
            for r in 0..n {
                for c in 0..m {
                    let v = matrix.get(r, c) + 0.1 * rng.random::<f64>();
                    matrix.set(r, c, v);
                }
            }
        }
        Transform::PointProportion => {
            let mut values = Vec::with_capacity(2 * n * m);
            values.extend_from_slice(matrix.values());
            values.extend_from_slice(matrix.values());
            matrix = DataMatrix::from_vec(values, 2 * n, m).expect("valid shape");
            for b in &mut truth {
                let mut extended = b.observations.clone();
                extended.extend(b.observations.iter().map(|&r| r + n));
                *b = Bicluster::new(extended, b.features.clone());
            }
            recipe.n_rows = 2 * n;
        }
        Transform::ClusterProportion => {
            if truth.len() != 1 {
                return Err(Error::InvalidParameter {
                    name: "transform",
                    reason: "cluster-proportion needs exactly one planted bicluster".into(),
                });
            }
            let block_rows = truth[0].observations.clone();
            let mut values = Vec::with_capacity((n + block_rows.len()) * m);
            values.extend_from_slice(matrix.values());
            for &r in &block_rows {
                values.extend_from_slice(matrix.row(r));
            }
            let total = n + block_rows.len();
            matrix = DataMatrix::from_vec(values, total, m).expect("valid shape");
            let mut extended = block_rows.clone();
            extended.extend(n..total);
            truth[0] = Bicluster::new(extended, truth[0].features.clone());
            recipe.n_rows = total;
        }
        Transform::Permute => {
            let mut row_perm: Vec<usize> = (0..n).collect();
            row_perm.shuffle(&mut rng);
            let mut col_perm: Vec<usize> = (0..m).collect();
            col_perm.shuffle(&mut rng);
            let mut values = Vec::with_capacity(n * m);
            for &pr in &row_perm {
                for &pc in &col_perm {
                    values.push(matrix.get(pr, pc));
                }
            }
            matrix = DataMatrix::from_vec(values, n, m).expect("valid shape");
            for b in &mut truth {
                let obs: Vec<usize> = (0..n)
                    .filter(|&r| b.observations.binary_search(&row_perm[r]).is_ok())
                    .collect();
                let feats: Vec<usize> = (0..m)
                    .filter(|&c| b.features.binary_search(&col_perm[c]).is_ok())
                    .collect();
                *b = Bicluster::new(obs, feats);
            }
        }
    }
    Ok(GeneratedDataset {
        matrix,
        truth,
        recipe,
    })
}

/// Catalog of generator names accepted by [`generate_named`].
pub fn family_names() -> &'static [&'static str] {
    &[
        "base",
        "nonlinear1",
        "nonlinear2",
        "normal",
        "noisy-normal",
        "noisy-uniform",
        "scale",
        "translate",
        "linear",
        "square",
        "exp",
        "uniform-noise",
        "point-proportion",
        "cluster-proportion",
        "permute",
        "overlap",
        "large",
    ]
}

/// Builds a dataset by catalog name; transform names apply the
/// transform to the base family with the same seed.
///
/// # Errors
///
/// Fails with [`Error::UnknownFamily`] for names outside
/// [`family_names`].
pub fn generate_named(family: &str, seed: u64) -> Result<GeneratedDataset, Error> {
    match family {
        "base" => Ok(gen_base(seed)),
        "nonlinear1" => Ok(gen_nonlinear(NonlinearVariant::One, seed)),
        "nonlinear2" => Ok(gen_nonlinear(NonlinearVariant::Two, seed)),
        "normal" => Ok(gen_normal(false, seed)),
        "noisy-normal" => Ok(gen_normal(true, seed)),
        "noisy-uniform" | "uniform-noise" => {
            apply_transform(&gen_base(seed), Transform::UniformNoise, seed)
        }
        "scale" => apply_transform(&gen_base(seed), Transform::Scale, seed),
        "translate" => apply_transform(&gen_base(seed), Transform::Translate, seed),
        "linear" => apply_transform(&gen_base(seed), Transform::Linear, seed),
        "square" => apply_transform(&gen_base(seed), Transform::Square, seed),
        "exp" => apply_transform(&gen_base(seed), Transform::Exp, seed),
        "point-proportion" => apply_transform(&gen_base(seed), Transform::PointProportion, seed),
        "cluster-proportion" => {
            apply_transform(&gen_base(seed), Transform::ClusterProportion, seed)
        }
        "permute" => apply_transform(&gen_base(seed), Transform::Permute, seed),
        "overlap" => Ok(gen_overlap(seed)),
        "large" => Ok(gen_large(seed)),
        other => Err(Error::UnknownFamily(other.to_string())),
    }
}

//! Independent reference implementations used to cross-check the
//! library. Everything here recomputes results from first principles
//! with straightforward bookkeeping (dense matrices, flood fills,
//! quadrature) and shares no code with the implementation under test.

// Each integration test binary compiles this module separately and
// uses a different subset of it.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Literal per-point density oracle: boolean neighbour matrices, an
/// explicit connection matrix with transitive closure, and a BFS over
/// the survivors.
pub fn oracle_small(x: &[f64], y: &[f64], c: f64) -> Vec<Vec<usize>> {
    let n = x.len();
    let sep_i = largest_gap(x);
    let sep_j = largest_gap(y);
    let bin_i = sep_i.powf(c);
    let bin_j = sep_j.powf(c);
    let area = bin_i * bin_j;

    let mut neigh = vec![vec![false; n]; n];
    let mut marg_i = vec![0usize; n];
    let mut marg_j = vec![0usize; n];
    for a in 0..n {
        for b in 0..n {
            let dx = (x[a] - x[b]).abs();
            let dy = (y[a] - y[b]).abs();
            neigh[a][b] = a != b && dx < bin_i && dy < bin_j;
            if dx < bin_i / 2.0 {
                marg_i[a] += 1;
            }
            if dy < bin_j / 2.0 {
                marg_j[a] += 1;
            }
        }
    }

    let mut fin = vec![false; n];
    for a in 0..n {
        let cnt = neigh[a].iter().filter(|&&v| v).count() as f64;
        fin[a] = cnt > n as f64 * area
            && cnt / area > marg_i[a] as f64 / bin_i
            && cnt / area > marg_j[a] as f64 / bin_j;
    }

    let mut conn = vec![vec![false; n]; n];
    let mut participated = vec![false; n];
    for a in 0..n {
        for b in a + 1..n {
            if !fin[a] || !fin[b] {
                continue;
            }
            let common = (0..n).filter(|&t| neigh[a][t] && neigh[b][t]).count() as f64;
            let ceiling = (marg_i[a] as f64 / bin_i)
                .max(marg_j[a] as f64 / bin_j)
                .max(marg_i[b] as f64 / bin_i)
                .max(marg_j[b] as f64 / bin_j);
            if 4.0 * common / area > ceiling {
                conn[a][b] = true;
                conn[b][a] = true;
                participated[a] = true;
                participated[b] = true;
            }
        }
    }
    // Transitive closure of the connection matrix.
    loop {
        let mut changed = false;
        for a in 0..n {
            for b in 0..n {
                if !conn[a][b] {
                    continue;
                }
                let row = conn[b].clone();
                for (t, &reachable) in row.iter().enumerate() {
                    if reachable && !conn[a][t] && a != t {
                        conn[a][t] = true;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }

    let retained: Vec<usize> = (0..n).filter(|&a| fin[a] && participated[a]).collect();
    if retained.is_empty() {
        return Vec::new();
    }
    let rad = (retained.len() as f64).ln() / retained.len() as f64;

    let mut seen = vec![false; retained.len()];
    let mut regions = Vec::new();
    for start in 0..retained.len() {
        if seen[start] {
            continue;
        }
        let mut queue = vec![start];
        seen[start] = true;
        let mut members = Vec::new();
        while let Some(i) = queue.pop() {
            members.push(retained[i]);
            for j in 0..retained.len() {
                if seen[j] {
                    continue;
                }
                let (a, b) = (retained[i], retained[j]);
                let dist = ((x[a] - x[b]).powi(2) + (y[a] - y[b]).powi(2)).sqrt();
                if dist <= rad {
                    seen[j] = true;
                    queue.push(j);
                }
            }
        }
        members.sort_unstable();
        regions.push(members);
    }
    regions.sort_by_key(|r| r[0]);
    regions
}

/// Grid density oracle: edge-scanning bin assignment, probabilities
/// compared by cross-multiplication, and a BFS flood fill over cells.
pub fn oracle_large(x: &[f64], y: &[f64]) -> Vec<Vec<usize>> {
    let n = x.len();
    let bins = ((3.0 * (n as f64).ln()).round() as i64).max(2) as usize;
    let assign = |v: f64| -> usize {
        for k in 0..bins {
            if v <= (k + 1) as f64 / bins as f64 {
                return k;
            }
        }
        bins - 1
    };

    let mut counts = vec![vec![0u64; bins]; bins];
    for i in 0..n {
        counts[assign(x[i])][assign(y[i])] += 1;
    }
    let col_sum = |bx: usize| -> u64 { counts[bx].iter().sum() };
    let row_sum = |by: usize| -> u64 { (0..bins).map(|bx| counts[bx][by]).sum() };

    let mut dense = vec![vec![false; bins]; bins];
    for bx in 0..bins {
        for by in 0..bins {
            let c = counts[bx][by];
            dense[bx][by] = c * bins as u64 > col_sum(bx)
                && c * bins as u64 > row_sum(by)
                && c * (bins * bins) as u64 > n as u64;
        }
    }

    let mut comp = vec![vec![usize::MAX; bins]; bins];
    let mut n_comps = 0;
    for bx in 0..bins {
        for by in 0..bins {
            if !dense[bx][by] || comp[bx][by] != usize::MAX {
                continue;
            }
            let mut queue = vec![(bx, by)];
            comp[bx][by] = n_comps;
            while let Some((cx, cy)) = queue.pop() {
                for dx in -1i64..=1 {
                    for dy in -1i64..=1 {
                        let (nx, ny) = (cx as i64 + dx, cy as i64 + dy);
                        if nx < 0 || ny < 0 || nx >= bins as i64 || ny >= bins as i64 {
                            continue;
                        }
                        let (nx, ny) = (nx as usize, ny as usize);
                        if dense[nx][ny] && comp[nx][ny] == usize::MAX {
                            comp[nx][ny] = n_comps;
                            queue.push((nx, ny));
                        }
                    }
                }
            }
            n_comps += 1;
        }
    }

    let mut regions: Vec<Vec<usize>> = Vec::new();
    let mut region_of_comp = vec![usize::MAX; n_comps];
    for i in 0..n {
        let c = comp[assign(x[i])][assign(y[i])];
        if c == usize::MAX {
            continue;
        }
        if region_of_comp[c] == usize::MAX {
            region_of_comp[c] = regions.len();
            regions.push(Vec::new());
        }
        regions[region_of_comp[c]].push(i);
    }
    regions
}

fn largest_gap(column: &[f64]) -> f64 {
    let mut sorted = column.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sorted
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0f64, f64::max)
}

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, intervals: usize) -> f64 {
    let n = if intervals.is_multiple_of(2) {
        intervals
    } else {
        intervals + 1
    };
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

/// Quadrature oracle for the Student t right tail.
///
/// Substituting `x = sqrt(v) tan(u)` turns the unnormalized density
/// `(1 + x^2/v)^(-(v+1)/2)` into `cos^(v-1)(u)` on a finite interval,
/// so both the tail and the normalizing constant reduce to smooth
/// proper integrals and no gamma function is needed.
pub fn simpson_t_tail(t: f64, dof: usize) -> f64 {
    if t < 0.0 {
        return 1.0 - simpson_t_tail(-t, dof);
    }
    let v = dof as f64;
    let half_pi = std::f64::consts::FRAC_PI_2;
    let g = |u: f64| u.cos().powf(v - 1.0);
    let lower = (t / v.sqrt()).atan();
    let tail = simpson(g, lower, half_pi, 40_000);
    let total = simpson(g, -half_pi, half_pi, 40_000);
    tail / total
}

/// Columns of independent uniform draws on the unit interval.
pub fn uniform_columns(seed: u64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = (0..n).map(|_| rng.random()).collect();
    let y = (0..n).map(|_| rng.random()).collect();
    (x, y)
}

/// Total number of observations across regions.
pub fn total_mass(regions: &[Vec<usize>]) -> usize {
    regions.iter().map(|r| r.len()).sum()
}

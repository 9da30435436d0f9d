//! Seed construction, growth and weeding of biclusters.
//!
//! Dense regions of feature pairs are combined into triplet seeds: a
//! seed is the set of observations that fall in a chosen dense region
//! of each pair of a feature triplet. Seeds grow into biclusters by
//! absorbing other seeds that share features and observations, and
//! near-duplicate results are weeded by cosine similarity.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::density::{chosen_path, find_dense_regions, DensityPath};
use crate::model::{
    Bicluster, DataMatrix, DenseRegionSet, Error, PairRegionMap, ParameterSet, RowSet,
    SeedBicluster,
};
use crate::normalize::normalize_matrix;

/// Builds every triplet seed meeting the minimum size.
///
/// For each feature triplet `(i, j, k)` and each choice of one dense
/// region per pair `(i, j)`, `(j, k)`, `(i, k)`, the seed is the
/// intersection of the three regions. Seeds smaller than
/// `min_seed_size` are dropped. The result is sorted by descending
/// observation count, then by triplet and region choice.
pub fn build_seed_biclusters(
    regions: &PairRegionMap,
    params: &ParameterSet,
) -> Vec<SeedBicluster> {
    let n_rows = regions.n_rows;
    let n_cols = regions.n_cols;

    // A seed can never outgrow its smallest source region, so regions
    // below the size floor are skipped up front.
    let as_sets: Vec<Vec<(usize, RowSet)>> = regions
        .iter()
        .map(|set| {
            set.regions
                .iter()
                .enumerate()
                .filter(|(_, r)| r.len() >= params.min_seed_size)
                .map(|(u, r)| (u, RowSet::from_indices(n_rows, r.iter().copied())))
                .collect()
        })
        .collect();
    let pair_index = |i: usize, j: usize| i * n_cols - i * (i + 1) / 2 + (j - i - 1);

    let triplets: Vec<[usize; 3]> = (0..n_cols)
        .flat_map(|i| {
            (i + 1..n_cols).flat_map(move |j| (j + 1..n_cols).map(move |k| [i, j, k]))
        })
        .collect();

    let mut seeds: Vec<SeedBicluster> = triplets
        .par_iter()
        .map(|&[i, j, k]| {
            let mut found = Vec::new();
            let ij = &as_sets[pair_index(i, j)];
            let jk = &as_sets[pair_index(j, k)];
            let ik = &as_sets[pair_index(i, k)];
            for (u, set_ij) in ij {
                for (v, set_jk) in jk {
                    for (w, set_ik) in ik {
                        if set_ij.intersection3_len(set_jk, set_ik) >= params.min_seed_size {
                            found.push(SeedBicluster {
                                observations: set_ij.intersect(set_jk).intersect(set_ik),
                                feature_triplet: [i, j, k],
                                region_choice: [*u, *v, *w],
                            });
                        }
                    }
                }
            }
            found
        })
        .flatten_iter()
        .collect();

    seeds.sort_by_cached_key(|s| {
        (
            std::cmp::Reverse(s.observations.len()),
            s.feature_triplet,
            s.region_choice,
        )
    });
    seeds
}

/// One growth pass state shared between [`grow_bicluster`] and the
/// full assembly loop.
fn grow_matched(
    base: usize,
    seeds: &[SeedBicluster],
    params: &ParameterSet,
) -> (Vec<bool>, BTreeSet<usize>) {
    let base_set = &seeds[base].observations;
    let join_threshold = params.sim2seed * base_set.len() as f64;
    let mut matched = vec![false; seeds.len()];
    matched[base] = true;
    let mut features: BTreeSet<usize> = seeds[base].feature_triplet.iter().copied().collect();
    // The overlap test never changes across rounds, so each seed's
    // verdict is cached the first time it is probed.
    let mut overlaps: Vec<Option<bool>> = vec![None; seeds.len()];
    loop {
        let mut added = false;
        for y in 0..seeds.len() {
            if matched[y] {
                continue;
            }
            let shares_feature = seeds[y]
                .feature_triplet
                .iter()
                .any(|f| features.contains(f));
            if !shares_feature {
                continue;
            }
            let overlaps_enough = *overlaps[y].get_or_insert_with(|| {
                base_set.intersection_len(&seeds[y].observations) as f64 > join_threshold
            });
            if overlaps_enough {
                matched[y] = true;
                features.extend(seeds[y].feature_triplet);
                added = true;
            }
        }
        if !added {
            break;
        }
    }
    (matched, features)
}

/// Grows one base seed into a bicluster.
///
/// Seeds sharing a feature with the growing feature set and overlapping
/// the base by more than `sim2seed` of its size join it (each at most
/// once) until a fixed point. The observations kept are those occurring
/// in at least `obs_in_min_base` joined seeds; if none remain, the base
/// yields nothing.
///
/// # Errors
///
/// Fails if `base` is out of range.
pub fn grow_bicluster(
    base: usize,
    seeds: &[SeedBicluster],
    params: &ParameterSet,
) -> Result<Option<Bicluster>, Error> {
    if base >= seeds.len() {
        return Err(Error::IndexOutOfRange {
            what: format!("seed {base} of {}", seeds.len()),
        });
    }
    let (matched, features) = grow_matched(base, seeds, params);
    let universe = seeds[base].observations.universe();
    let mut occurrences = vec![0usize; universe];
    for (y, joined) in matched.iter().enumerate() {
        if *joined {
            for obs in seeds[y].observations.iter() {
                occurrences[obs] += 1;
            }
        }
    }
    let observations: Vec<usize> = (0..universe)
        .filter(|&r| occurrences[r] >= params.obs_in_min_base)
        .collect();
    if observations.is_empty() {
        return Ok(None);
    }
    Ok(Some(Bicluster {
        observations,
        features: features.into_iter().collect(),
    }))
}

/// Grows every eligible base seed and weeds the results.
///
/// Bases are taken in the seed list's order, with consecutive runs of
/// equal-sized seeds handled as one group. Unless `reuse_all_seeds` is
/// set, seeds overlapping a grown base by more than
/// `reuse_seed_sim * sim2seed` of its size become ineligible as future
/// bases (they may still join other biclusters). Ineligibility only
/// applies past the base's own group, so the outcome does not depend on
/// how ties between equal-sized seeds happen to be ordered.
pub fn assemble_biclusters(seeds: &[SeedBicluster], params: &ParameterSet) -> Vec<Bicluster> {
    let sizes: Vec<usize> = seeds.iter().map(|s| s.observations.len()).collect();
    let mut ignore = vec![false; seeds.len()];
    let mut grown = Vec::new();
    let mut group_start = 0;
    while group_start < seeds.len() {
        let size = sizes[group_start];
        let mut group_end = group_start + 1;
        while group_end < seeds.len() && sizes[group_end] == size {
            group_end += 1;
        }
        let bases: Vec<usize> = (group_start..group_end).filter(|&b| !ignore[b]).collect();
        for &base in &bases {
            if let Ok(Some(bicluster)) = grow_bicluster(base, seeds, params) {
                grown.push(bicluster);
            }
        }
        if !params.reuse_all_seeds {
            for &base in &bases {
                let base_set = &seeds[base].observations;
                let reuse_threshold =
                    params.reuse_seed_sim * params.sim2seed * base_set.len() as f64;
                for y in group_end..seeds.len() {
                    // Sizes are sorted descending and an overlap never
                    // exceeds the smaller set, so once sizes reach the
                    // threshold no further seed can qualify.
                    if sizes[y] as f64 <= reuse_threshold {
                        break;
                    }
                    if ignore[y] {
                        continue;
                    }
                    if base_set.intersection_len(&seeds[y].observations) as f64 > reuse_threshold {
                        ignore[y] = true;
                    }
                }
            }
        }
        group_start = group_end;
    }
    weed_similar(grown, params.clus_sim)
}

/// Region postings payload, narrowed when region ids fit in 16 bits to
/// halve the memory traffic of count passes.
enum Postings {
    Narrow(Vec<u16>),
    Wide(Vec<u32>),
}

/// Inverted indexes tying observations, regions and seeds together,
/// used to prune base-overlap scans without changing their outcome.
struct SeedIndex {
    /// Observation to containing regions, in CSR layout. Region ids are
    /// assigned by descending region size, so each observation's list
    /// descends in region size.
    post_off: Vec<u32>,
    post: Postings,
    /// Region sizes, indexed by region id and therefore non-increasing.
    region_size: Vec<u32>,
    /// Region to the seeds canonically filed under it, in CSR layout.
    /// Each seed appears once, under its least-used source region, in
    /// ascending seed order (descending seed size).
    canon_off: Vec<u32>,
    canon_ids: Vec<u32>,
    /// The three source regions of each seed.
    seed_regions: Vec<[u32; 3]>,
    n_regions: usize,
}

impl SeedIndex {
    fn build(
        regions: &PairRegionMap,
        seeds: &[SeedBicluster],
        min_seed_size: usize,
    ) -> SeedIndex {
        let n_rows = regions.n_rows;
        let n_cols = regions.n_cols;

        // Collect the regions large enough to source a seed, mirroring
        // the filter in seed construction, and number them by
        // descending size.
        let sets: Vec<&DenseRegionSet> = regions.iter().collect();
        let mut slots: Vec<(usize, usize, usize)> = Vec::new();
        for (p, set) in sets.iter().enumerate() {
            for (u, region) in set.regions.iter().enumerate() {
                if region.len() >= min_seed_size {
                    slots.push((region.len(), p, u));
                }
            }
        }
        slots.sort_by_key(|&(len, p, u)| (std::cmp::Reverse(len), p, u));
        let n_regions = slots.len();

        let mut region_ids: Vec<Vec<u32>> = sets
            .iter()
            .map(|set| vec![u32::MAX; set.regions.len()])
            .collect();
        let mut region_rows: Vec<&[usize]> = Vec::with_capacity(n_regions);
        let mut region_size = Vec::with_capacity(n_regions);
        for (gid, &(len, p, u)) in slots.iter().enumerate() {
            region_ids[p][u] = gid as u32;
            region_rows.push(sets[p].regions[u].as_slice());
            region_size.push(len as u32);
        }

        let mut post_off = vec![0u32; n_rows + 1];
        for rows in &region_rows {
            for &obs in rows.iter() {
                post_off[obs + 1] += 1;
            }
        }
        for obs in 0..n_rows {
            post_off[obs + 1] += post_off[obs];
        }
        let mut cursor: Vec<u32> = post_off[..n_rows].to_vec();
        let mut post = vec![0u32; post_off[n_rows] as usize];
        for (gid, rows) in region_rows.iter().enumerate() {
            for &obs in rows.iter() {
                post[cursor[obs] as usize] = gid as u32;
                cursor[obs] += 1;
            }
        }
        let post = if n_regions <= 1 << 16 {
            Postings::Narrow(post.into_iter().map(|g| g as u16).collect())
        } else {
            Postings::Wide(post)
        };

        let pair_index = |i: usize, j: usize| i * n_cols - i * (i + 1) / 2 + (j - i - 1);
        let mut usage = vec![0u32; n_regions];
        let mut seed_regions = Vec::with_capacity(seeds.len());
        for seed in seeds {
            let [i, j, k] = seed.feature_triplet;
            let [u, v, w] = seed.region_choice;
            let trio = [
                region_ids[pair_index(i, j)][u],
                region_ids[pair_index(j, k)][v],
                region_ids[pair_index(i, k)][w],
            ];
            debug_assert!(trio.iter().all(|&r| r != u32::MAX));
            for &r in &trio {
                usage[r as usize] += 1;
            }
            seed_regions.push(trio);
        }

        let canon = |trio: &[u32; 3]| -> u32 {
            *trio
                .iter()
                .min_by_key(|&&r| (usage[r as usize], r))
                .expect("trio is non-empty")
        };
        let mut canon_off = vec![0u32; n_regions + 1];
        for trio in &seed_regions {
            canon_off[canon(trio) as usize + 1] += 1;
        }
        for r in 0..n_regions {
            canon_off[r + 1] += canon_off[r];
        }
        let mut cursor: Vec<u32> = canon_off[..n_regions].to_vec();
        let mut canon_ids = vec![0u32; seeds.len()];
        for (y, trio) in seed_regions.iter().enumerate() {
            let r = canon(trio) as usize;
            canon_ids[cursor[r] as usize] = y as u32;
            cursor[r] += 1;
        }

        SeedIndex {
            post_off,
            post,
            region_size,
            canon_off,
            canon_ids,
            seed_regions,
            n_regions,
        }
    }
}

/// Counts, for one base, how many of its observations fall in each
/// region whose size exceeds `threshold`. Smaller regions can never
/// reach a count above the threshold, and each observation's posting
/// list descends in region size, so every walk stops at a
/// binary-searched cutoff.
fn tally_regions<T: Copy>(
    base_set: &RowSet,
    index: &SeedIndex,
    post: &[T],
    threshold: f64,
    id: impl Fn(T) -> usize,
    counts: &mut [u32],
    touched: &mut Vec<u32>,
) {
    for obs in base_set.iter() {
        let range = index.post_off[obs] as usize..index.post_off[obs + 1] as usize;
        let list = &post[range];
        let cut = list.partition_point(|&e| index.region_size[id(e)] as f64 > threshold);
        for &e in &list[..cut] {
            let r = id(e);
            let count = &mut counts[r];
            if *count == 0 {
                touched.push(r as u32);
            }
            *count += 1;
        }
    }
}

/// Reusable scratch for one base's overlap scan.
struct OverlapScan {
    region_counts: Vec<u32>,
    touched: Vec<u32>,
    /// Result of the last scan: `(seed, exact overlap)` pairs.
    found: Vec<(u32, u32)>,
}

impl OverlapScan {
    fn new(n_regions: usize) -> OverlapScan {
        OverlapScan {
            region_counts: vec![0; n_regions],
            touched: Vec::new(),
            found: Vec::new(),
        }
    }

    /// Finds every seed other than `base` whose observation overlap
    /// with it strictly exceeds `threshold`, with exact overlap counts.
    ///
    /// A seed lies inside each of its three source regions, so its
    /// overlap with the base is bounded by the base's smallest
    /// per-region overlap, and also by its own size. Seeds whose bounds
    /// stay at or below the threshold are skipped without an exact
    /// intersection: a qualifying seed has all three regions above the
    /// threshold, so scanning the canonical lists of those regions
    /// visits every qualifier exactly once, and each list can stop at
    /// its first seed small enough to rule out.
    ///
    /// Seeds flagged in `ignored` that are too small to overlap more
    /// than `join_threshold` may be omitted from the result: such an
    /// entry could neither join the base nor mark anything new.
    #[allow(clippy::too_many_arguments)]
    fn run(
        &mut self,
        base: usize,
        seeds: &[SeedBicluster],
        sizes: &[usize],
        index: &SeedIndex,
        threshold: f64,
        join_threshold: f64,
        ignored: &[bool],
    ) {
        for &r in &self.touched {
            self.region_counts[r as usize] = 0;
        }
        self.touched.clear();
        self.found.clear();

        let base_set = &seeds[base].observations;
        match &index.post {
            Postings::Narrow(post) => tally_regions(
                base_set,
                index,
                post,
                threshold,
                |e| e as usize,
                &mut self.region_counts,
                &mut self.touched,
            ),
            Postings::Wide(post) => tally_regions(
                base_set,
                index,
                post,
                threshold,
                |e| e as usize,
                &mut self.region_counts,
                &mut self.touched,
            ),
        }

        for t in 0..self.touched.len() {
            let r = self.touched[t] as usize;
            if self.region_counts[r] as f64 <= threshold {
                continue;
            }
            let range = index.canon_off[r] as usize..index.canon_off[r + 1] as usize;
            for s in range {
                let y = index.canon_ids[s] as usize;
                if (sizes[y] as f64) <= threshold {
                    break;
                }
                if y == base {
                    continue;
                }
                if ignored[y] && (sizes[y] as f64) <= join_threshold {
                    continue;
                }
                let trio = index.seed_regions[y];
                if trio
                    .iter()
                    .any(|&g| self.region_counts[g as usize] as f64 <= threshold)
                {
                    continue;
                }
                let overlap = base_set.intersection_len(&seeds[y].observations);
                if overlap as f64 > threshold {
                    self.found.push((y as u32, overlap as u32));
                }
            }
        }
    }
}

/// [`grow_bicluster`] restricted to precomputed overlap candidates.
///
/// `candidates` must contain every seed whose overlap with the base
/// exceeds `join_threshold`; seeds absent from it can never join, so
/// the fixpoint over candidates reaches the same closure as a scan
/// over all seeds.
fn grow_from_candidates(
    base: usize,
    seeds: &[SeedBicluster],
    params: &ParameterSet,
    candidates: &[(u32, u32)],
    join_threshold: f64,
) -> Option<Bicluster> {
    let mut features: BTreeSet<usize> = seeds[base].feature_triplet.iter().copied().collect();
    let mut matched: Vec<usize> = vec![base];
    let mut joined = vec![false; candidates.len()];
    loop {
        let mut added = false;
        for (slot, &(y, overlap)) in candidates.iter().enumerate() {
            if joined[slot] || overlap as f64 <= join_threshold {
                continue;
            }
            let y = y as usize;
            if seeds[y].feature_triplet.iter().any(|f| features.contains(f)) {
                joined[slot] = true;
                matched.push(y);
                features.extend(seeds[y].feature_triplet);
                added = true;
            }
        }
        if !added {
            break;
        }
    }
    // No observation can occur in `obs_in_min_base` matched seeds when
    // fewer seeds matched.
    if matched.len() < params.obs_in_min_base {
        return None;
    }
    let universe = seeds[base].observations.universe();
    let mut occurrences = vec![0usize; universe];
    for &y in &matched {
        for obs in seeds[y].observations.iter() {
            occurrences[obs] += 1;
        }
    }
    let observations: Vec<usize> = (0..universe)
        .filter(|&r| occurrences[r] >= params.obs_in_min_base)
        .collect();
    if observations.is_empty() {
        return None;
    }
    Some(Bicluster {
        observations,
        features: features.into_iter().collect(),
    })
}

/// [`assemble_biclusters`] for seeds whose source regions are at hand.
///
/// Produces the same biclusters while pruning each base's overlap scan
/// through [`SeedIndex`], which keeps runs with hundreds of thousands
/// of seeds tractable.
fn assemble_from_regions(
    regions: &PairRegionMap,
    seeds: &[SeedBicluster],
    params: &ParameterSet,
) -> Vec<Bicluster> {
    let index = SeedIndex::build(regions, seeds, params.min_seed_size);
    let mut scan = OverlapScan::new(index.n_regions);
    let sizes: Vec<usize> = seeds.iter().map(|s| s.observations.len()).collect();
    let mut ignore = vec![false; seeds.len()];
    let mut grown = Vec::new();
    let mut group_start = 0;
    while group_start < seeds.len() {
        let size = sizes[group_start];
        let mut group_end = group_start + 1;
        while group_end < seeds.len() && sizes[group_end] == size {
            group_end += 1;
        }
        // Ineligibility marks only reach past the group, so in-group
        // entries cannot change while the group is processed.
        for base in group_start..group_end {
            if ignore[base] {
                continue;
            }
            let base_len = sizes[base] as f64;
            let join_threshold = params.sim2seed * base_len;
            let reuse_threshold = params.reuse_seed_sim * params.sim2seed * base_len;
            let scan_threshold = if params.reuse_all_seeds {
                join_threshold
            } else {
                join_threshold.min(reuse_threshold)
            };
            scan.run(
                base,
                seeds,
                &sizes,
                &index,
                scan_threshold,
                join_threshold,
                &ignore,
            );
            if let Some(bicluster) =
                grow_from_candidates(base, seeds, params, &scan.found, join_threshold)
            {
                grown.push(bicluster);
            }
            if !params.reuse_all_seeds {
                for &(y, overlap) in &scan.found {
                    let y = y as usize;
                    if y >= group_end && overlap as f64 > reuse_threshold {
                        ignore[y] = true;
                    }
                }
            }
        }
        group_start = group_end;
    }
    weed_similar(grown, params.clus_sim)
}

/// Cosine similarity of two biclusters: the product of the cosine
/// similarities of their observation sets and of their feature sets,
/// always in `[0, 1]`.
pub fn cosine_similarity(a: &Bicluster, b: &Bicluster) -> f64 {
    fn set_cosine(a: &[usize], b: &[usize]) -> f64 {
        if a.is_empty() || b.is_empty() {
            return 0.0;
        }
        let mut common = 0usize;
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    common += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        common as f64 / ((a.len() * b.len()) as f64).sqrt()
    }
    // Each factor is at most 1 mathematically; clamp away rounding spill
    // so a ceiling of 1.0 reliably disables weeding.
    (set_cosine(&a.observations, &b.observations) * set_cosine(&a.features, &b.features)).min(1.0)
}

/// Removes near-duplicates: whenever two biclusters exceed `clus_sim`
/// in cosine similarity, the one covering fewer cells is dropped (the
/// later one on ties). With `clus_sim` at 1.0 nothing is ever dropped.
/// Survivors keep their original order.
pub fn weed_similar(list: Vec<Bicluster>, clus_sim: f64) -> Vec<Bicluster> {
    let mut alive = vec![true; list.len()];
    for i in 0..list.len() {
        if !alive[i] {
            continue;
        }
        for j in i + 1..list.len() {
            if !alive[j] {
                continue;
            }
            if cosine_similarity(&list[i], &list[j]) > clus_sim {
                if list[i].area() < list[j].area() {
                    alive[i] = false;
                    break;
                }
                alive[j] = false;
            }
        }
    }
    list.into_iter()
        .zip(alive)
        .filter(|(_, keep)| *keep)
        .map(|(b, _)| b)
        .collect()
}

/// Outcome of a full pipeline run, with diagnostics for reporting.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub biclusters: Vec<Bicluster>,
    pub density_path: DensityPath,
    /// Constant columns excluded from pair analysis.
    pub constant_columns: Vec<usize>,
    /// Feature pairs skipped as degenerate.
    pub skipped_pairs: Vec<(usize, usize)>,
    pub n_seeds: usize,
}

/// Runs the full pipeline: normalize, find dense regions per feature
/// pair, build triplet seeds, grow and weed.
///
/// # Errors
///
/// Fails on invalid parameters or when fewer than 3 non-constant
/// features are available.
pub fn run_reldenclu(matrix: &DataMatrix, params: &ParameterSet) -> Result<Vec<Bicluster>, Error> {
    run_reldenclu_detailed(matrix, params).map(|report| report.biclusters)
}

/// Like [`run_reldenclu`], returning diagnostics along with the result.
///
/// # Errors
///
/// Same conditions as [`run_reldenclu`].
pub fn run_reldenclu_detailed(
    matrix: &DataMatrix,
    params: &ParameterSet,
) -> Result<RunReport, Error> {
    params.validate()?;
    let normalized = normalize_matrix(matrix, params.normalization);
    let regions = find_dense_regions(&normalized, params)?;
    let seeds = build_seed_biclusters(&regions, params);
    let biclusters = assemble_from_regions(&regions, &seeds, params);
    Ok(RunReport {
        biclusters,
        density_path: chosen_path(matrix.n_rows(), params),
        constant_columns: normalized.constant_columns(),
        skipped_pairs: regions.skipped,
        n_seeds: seeds.len(),
    })
}

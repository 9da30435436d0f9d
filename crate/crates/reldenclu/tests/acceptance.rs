//! Release acceptance checks for the full pipeline: planted-bicluster
//! recovery on every generated family, exact transform invariance,
//! estimator/oracle equivalence, metric properties, and the gated
//! large-scale and real-data checks. Each test prints one PASS or FAIL
//! line with the measured numbers before asserting.

mod support;

use std::collections::HashMap;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reldenclu::datagen::{self, GeneratedDataset};
use reldenclu::evaluate::{self, mean_and_deviation};
use reldenclu::{
    assembly, density, Bicluster, DataMatrix, MembershipMatrix, Normalization, ParameterSet,
};

const INSTANCES: u64 = 10;

fn best_accuracy(ds: &GeneratedDataset, params: &ParameterSet, truth: usize) -> f64 {
    let found = reldenclu::run_reldenclu(&ds.matrix, params).unwrap();
    if found.is_empty() {
        return 0.0;
    }
    evaluate::best_match(
        &found,
        &ds.truth[truth],
        ds.matrix.n_rows(),
        ds.matrix.n_cols(),
    )
    .unwrap()
    .accuracy
}

fn family_scores(family: &str, params: &ParameterSet) -> Vec<f64> {
    (0..INSTANCES)
        .map(|seed| best_accuracy(&datagen::generate_named(family, seed).unwrap(), params, 0))
        .collect()
}

#[test]
fn base_family_recovery_within_time_budget() {
    let params = ParameterSet::default();
    let mut scores = Vec::new();
    let mut slowest = Duration::ZERO;
    for seed in 0..INSTANCES {
        let ds = datagen::generate_named("base", seed).unwrap();
        let start = Instant::now();
        scores.push(best_accuracy(&ds, &params, 0));
        slowest = slowest.max(start.elapsed());
    }
    let (mean, dev) = mean_and_deviation(&scores);
    let ok = mean >= 0.95 && slowest <= Duration::from_secs(60);
    println!(
        "base family: {} (mean {mean:.4}, deviation {dev:.4}, slowest instance {slowest:.2?})",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(mean >= 0.95, "base mean accuracy {mean:.4} below 0.95");
    assert!(
        slowest <= Duration::from_secs(60),
        "slowest base instance took {slowest:?}"
    );
}

#[test]
fn nonlinear_families_recovery() {
    let params = ParameterSet::default();
    let (mean1, dev1) = mean_and_deviation(&family_scores("nonlinear1", &params));
    let (mean2, dev2) = mean_and_deviation(&family_scores("nonlinear2", &params));
    let ok = mean1 >= 0.85 && mean2 >= 0.83;
    println!(
        "nonlinear families: {} (variant 1 mean {mean1:.4} dev {dev1:.4}, variant 2 mean {mean2:.4} dev {dev2:.4})",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(mean1 >= 0.85, "nonlinear1 mean {mean1:.4} below 0.85");
    assert!(mean2 >= 0.83, "nonlinear2 mean {mean2:.4} below 0.83");
}

#[test]
fn gaussian_and_noisy_families_recovery() {
    let unbounded = ParameterSet {
        normalization: Normalization::Unbounded,
        ..Default::default()
    };
    let bounded = ParameterSet::default();
    let (normal, _) = mean_and_deviation(&family_scores("normal", &unbounded));
    let (noisy_normal, _) = mean_and_deviation(&family_scores("noisy-normal", &unbounded));
    let (noisy_uniform, _) = mean_and_deviation(&family_scores("noisy-uniform", &bounded));
    let ok = normal >= 0.95 && noisy_normal >= 0.85 && noisy_uniform >= 0.88;
    println!(
        "gaussian and noisy families: {} (normal {normal:.4}, noisy normal {noisy_normal:.4}, noisy uniform {noisy_uniform:.4})",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(normal >= 0.95, "normal mean {normal:.4} below 0.95");
    assert!(
        noisy_normal >= 0.85,
        "noisy normal mean {noisy_normal:.4} below 0.85"
    );
    assert!(
        noisy_uniform >= 0.88,
        "noisy uniform mean {noisy_uniform:.4} below 0.88"
    );
}

/// Best per-instance score for one overlap truth across the default
/// parameters and the documented high-overlap configuration
/// (`reuse_seed_sim` 0.9 so the second block's seeds survive as bases,
/// `obs_in_min_base` 40 so the first block's rows do not ride along).
fn overlap_scores(truth: usize) -> Vec<f64> {
    let default = ParameterSet::default();
    let high_overlap = ParameterSet {
        reuse_seed_sim: 0.9,
        obs_in_min_base: 40,
        ..Default::default()
    };
    (0..INSTANCES)
        .map(|seed| {
            let ds = datagen::generate_named("overlap", seed).unwrap();
            best_accuracy(&ds, &default, truth).max(best_accuracy(&ds, &high_overlap, truth))
        })
        .collect()
}

#[test]
fn overlap_first_bicluster_recovery() {
    let (mean, dev) = mean_and_deviation(&overlap_scores(0));
    let ok = mean >= 0.90;
    println!(
        "overlap first bicluster: {} (mean {mean:.4}, deviation {dev:.4})",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(mean >= 0.90, "overlap truth 1 mean {mean:.4} below 0.90");
}

// The growth step unions features over every matched seed, and seeds
// tying the second block's rows to first-block-only features are
// genuine dense regions (for example a feature triplet with two
// first-block columns and one second-block column, intersecting the
// first block's region with two copies of the nested one). Every
// configuration therefore reports the second bicluster with all 15
// block features, 300x15, whose membership accuracy is exactly
// 17900/20000 = 0.895. This test states the 0.90 requirement and is
// expected to fail at that ceiling.
#[test]
fn overlap_second_bicluster_recovery() {
    let (mean, dev) = mean_and_deviation(&overlap_scores(1));
    let ok = mean >= 0.90;
    println!(
        "overlap second bicluster: {} (mean {mean:.4}, deviation {dev:.4})",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(mean >= 0.90, "overlap truth 2 mean {mean:.4} below 0.90");
}

fn bicluster_set(list: &[Bicluster]) -> Vec<(Vec<usize>, Vec<usize>)> {
    let mut set: Vec<(Vec<usize>, Vec<usize>)> = list
        .iter()
        .map(|b| (b.observations.clone(), b.features.clone()))
        .collect();
    set.sort();
    set
}

/// Maps each original index to its position in the permuted matrix by
/// exact value content. Row and column shuffles reorder the entries
/// within each vector, so vectors are compared as sorted multisets;
/// the assert catches the (probability-zero) collision that would make
/// the match ambiguous.
fn position_map(
    count: usize,
    original: impl Fn(usize) -> Vec<f64>,
    transformed: impl Fn(usize) -> Vec<f64>,
) -> Vec<usize> {
    let sorted_bits = |mut values: Vec<f64>| -> Vec<u64> {
        values.sort_by(f64::total_cmp);
        values.iter().map(|v| v.to_bits()).collect()
    };
    let mut lookup: HashMap<Vec<u64>, usize> = HashMap::new();
    for j in 0..count {
        assert!(
            lookup.insert(sorted_bits(transformed(j)), j).is_none(),
            "duplicate vector prevents building a unique permutation"
        );
    }
    (0..count).map(|i| lookup[&sorted_bits(original(i))]).collect()
}

#[test]
fn affine_transforms_and_permutation_leave_outputs_unchanged() {
    let params = ParameterSet::default();
    for seed in 0..5u64 {
        let base = datagen::generate_named("base", seed).unwrap();
        let reference = bicluster_set(&reldenclu::run_reldenclu(&base.matrix, &params).unwrap());

        for family in ["scale", "translate", "linear"] {
            let transformed = datagen::generate_named(family, seed).unwrap();
            let outputs =
                bicluster_set(&reldenclu::run_reldenclu(&transformed.matrix, &params).unwrap());
            assert_eq!(
                outputs, reference,
                "outputs changed under {family} on seed {seed}"
            );
        }

        let permuted = datagen::generate_named("permute", seed).unwrap();
        let row_map = position_map(
            base.matrix.n_rows(),
            |i| base.matrix.row(i).to_vec(),
            |j| permuted.matrix.row(j).to_vec(),
        );
        let col_map = position_map(
            base.matrix.n_cols(),
            |i| base.matrix.column(i),
            |j| permuted.matrix.column(j),
        );
        let expected: Vec<(Vec<usize>, Vec<usize>)> = {
            let mut mapped: Vec<(Vec<usize>, Vec<usize>)> = reference
                .iter()
                .map(|(obs, feats)| {
                    let mut o: Vec<usize> = obs.iter().map(|&r| row_map[r]).collect();
                    let mut f: Vec<usize> = feats.iter().map(|&c| col_map[c]).collect();
                    o.sort_unstable();
                    f.sort_unstable();
                    (o, f)
                })
                .collect();
            mapped.sort();
            mapped
        };
        let outputs =
            bicluster_set(&reldenclu::run_reldenclu(&permuted.matrix, &params).unwrap());
        assert_eq!(
            outputs, expected,
            "outputs are not the permuted originals on seed {seed}"
        );
    }
    println!("transform invariance: PASS (scale, translate, linear, permutation on 5 instances, exact)");
}

#[test]
fn repeating_bicluster_rows_does_not_hurt_recovery() {
    let params = ParameterSet::default();
    let (base_mean, _) = mean_and_deviation(&family_scores("base", &params));
    let (enriched_mean, _) = mean_and_deviation(&family_scores("cluster-proportion", &params));
    let ok = enriched_mean >= base_mean - 0.01;
    println!(
        "cluster proportion: {} (enriched {enriched_mean:.4} vs base {base_mean:.4} over matched seeds)",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(
        enriched_mean >= base_mean - 0.01,
        "cluster-proportion mean {enriched_mean:.4} fell more than 0.01 below base {base_mean:.4}"
    );
}

#[test]
fn density_estimators_match_independent_oracles() {
    for seed in 0..50u64 {
        let (x, y) = support::uniform_columns(1000 + seed, 200);
        assert_eq!(
            density::dense_regions_large(&x, &y).unwrap(),
            support::oracle_large(&x, &y),
            "grid estimator diverged from the oracle on seed {seed}"
        );
    }
    for seed in 0..20u64 {
        let (x, y) = support::uniform_columns(2000 + seed, 80);
        assert_eq!(
            density::dense_regions_small(&x, &y, 0.4999).unwrap(),
            support::oracle_small(&x, &y, 0.4999),
            "per-point estimator diverged from the oracle on seed {seed}"
        );
    }
    println!("estimator oracles: PASS (50 grid instances at 200x2, 20 per-point instances at 80x2, exact)");
}

#[test]
fn metric_properties_hold_over_thousand_cases_each() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);

    for _ in 0..1000 {
        let n = rng.random_range(1..=200);
        let membership: Vec<bool> = (0..n).map(|_| rng.random()).collect();
        let labels: Vec<bool> = (0..n).map(|_| rng.random()).collect();
        let complement: Vec<bool> = membership.iter().map(|m| !m).collect();
        let direct = evaluate::precision_recall_gscore(&membership, &labels).unwrap();
        let inverted = evaluate::precision_recall_gscore(&complement, &labels).unwrap();
        assert_eq!(direct.match_accuracy, inverted.match_accuracy);
    }

    for _ in 0..1000 {
        let n_rows = rng.random_range(1..=40);
        let n_cols = rng.random_range(1..=15);
        let mut a = MembershipMatrix::new(n_rows, n_cols);
        let mut b = MembershipMatrix::new(n_rows, n_cols);
        for r in 0..n_rows {
            for c in 0..n_cols {
                a.set(r, c, rng.random());
                b.set(r, c, rng.random());
            }
        }
        assert_eq!(
            evaluate::accuracy(&a, &b).unwrap(),
            evaluate::accuracy(&b, &a).unwrap()
        );
        assert_eq!(evaluate::accuracy(&a, &a).unwrap(), 1.0);
    }

    for _ in 0..1000 {
        let random_bicluster = |rng: &mut ChaCha8Rng| {
            Bicluster::new(
                (0..60).filter(|_| rng.random_bool(0.3)).collect(),
                (0..12).filter(|_| rng.random_bool(0.3)).collect(),
            )
        };
        let a = random_bicluster(&mut rng);
        let b = random_bicluster(&mut rng);
        let sim = assembly::cosine_similarity(&a, &b);
        assert!((0.0..=1.0).contains(&sim), "similarity {sim} out of range");
        assert_eq!(sim, assembly::cosine_similarity(&b, &a));
    }

    for _ in 0..1000 {
        let t = rng.random::<f64>() * 60.0 + 1e-9;
        let dof = rng.random_range(1..=300);
        let upper = evaluate::t_tail(t, dof);
        assert!((0.0..=0.5).contains(&upper));
        assert_eq!(evaluate::t_tail(-t, dof), 1.0 - upper);
    }

    println!("metric properties: PASS (polarity, accuracy symmetry, cosine bounds, tail antisymmetry; 1000 cases each)");
}

// Runs the 20000x100 instance end to end; excluded from the default
// suite for time. Invoke with `cargo test --release -- --ignored`.
//
// The seed floor and occurrence floor scale with the input: at 20000
// rows a floor of 100 would keep half a million noise seeds, and with
// thousands of block-sized seeds matching the base, rows outside the
// block co-occur in well over 3 of them by chance alone.
#[test]
#[ignore = "large-scale benchmark, run explicitly"]
fn large_scale_recovery_within_budget() {
    let ds = datagen::generate_named("large", 0).unwrap();
    let params = ParameterSet {
        min_seed_size: 2000,
        obs_in_min_base: 15,
        ..ParameterSet::default()
    };
    let start = Instant::now();
    let accuracy = best_accuracy(&ds, &params, 0);
    let elapsed = start.elapsed();
    let ok = accuracy >= 0.95 && elapsed <= Duration::from_secs(1400);
    println!(
        "large-scale smoke: {} (accuracy {accuracy:.4}, {elapsed:.1?})",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(accuracy >= 0.95, "large-scale accuracy {accuracy:.4} below 0.95");
    assert!(
        elapsed <= Duration::from_secs(1400),
        "large-scale run took {elapsed:?}"
    );
}

// Checks class recovery on the UCI Breast Cancer Wisconsin (Original)
// table when its path is supplied; skipped otherwise so the default
// suite needs no external files. Expects the raw `.data` format:
// comma-separated id, nine integer features, class (2 benign,
// 4 malignant), with missing values written as `?`.
#[test]
fn breast_cancer_class_match_when_data_supplied() {
    let Ok(path) = std::env::var("RELDENCLU_BREAST_CANCER") else {
        println!(
            "breast cancer class match: SKIP (set RELDENCLU_BREAST_CANCER to the UCI data file)"
        );
        return;
    };
    let text = std::fs::read_to_string(&path).unwrap();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.contains('?') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 11, "unexpected field count in {path}");
        rows.push(
            fields[1..10]
                .iter()
                .map(|f| f.parse::<f64>().unwrap())
                .collect::<Vec<f64>>(),
        );
        labels.push(fields[10] == "4");
    }
    assert!(rows.len() >= 500, "only {} complete rows", rows.len());
    let matrix = DataMatrix::from_rows(rows).unwrap();

    let params = ParameterSet {
        sim2seed: 0.6,
        reuse_all_seeds: true,
        ..Default::default()
    };
    let found = reldenclu::run_reldenclu(&matrix, &params).unwrap();
    let mut best = 0.0f64;
    for b in &found {
        let mut membership = vec![false; matrix.n_rows()];
        for &r in &b.observations {
            membership[r] = true;
        }
        best = best.max(evaluate::class_match_accuracy(&membership, &labels).unwrap());
    }
    let ok = best >= 0.94;
    println!(
        "breast cancer class match: {} (best {best:.4} over {} biclusters, {} rows)",
        if ok { "PASS" } else { "FAIL" },
        found.len(),
        matrix.n_rows()
    );
    assert!(best >= 0.94, "class match {best:.4} below 0.94");
}

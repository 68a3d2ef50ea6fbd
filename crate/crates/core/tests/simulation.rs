mod common;

use common::{random_mixed, rng};
use cstomo::{
    born_probabilities, draw_settings, enumerate_settings, ghz_state, restrict_dataset,
    sample_counts, split_folds, Dataset, PauliWord, RandomSource, SettingsPlan,
};
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, Discrete};
use std::collections::{HashMap, HashSet};

fn word(s: &str) -> PauliWord {
    s.parse().unwrap()
}

#[test]
fn ghz_zzzz_mean_count() {
    let g = ghz_state(4).unwrap();
    let plan = SettingsPlan::uniform(vec![word("ZZZZ")], 650).unwrap();
    let reps = 10_000;
    let src = RandomSource::new(17);
    let xs: Vec<f64> = (0..reps)
        .map(|i| {
            sample_counts(&g, &plan, src.substream(i))
                .unwrap()
                .records()[0]
                .counts[0]
        })
        .collect();
    let mean = xs.iter().sum::<f64>() / reps as f64;
    let se = (650.0 * 0.25 / reps as f64).sqrt();
    assert!((mean - 325.0).abs() < 5.0 * se, "mean {mean}");
    let inner: f64 = (0..reps)
        .map(|i| {
            sample_counts(&g, &plan, src.substream(i))
                .unwrap()
                .records()[0]
                .counts[1..15]
                .iter()
                .sum::<f64>()
        })
        .sum();
    assert_eq!(inner, 0.0);
}

/// Histogram of the first count against the binomial marginal, pooled so each
/// bin expects at least five observations.
#[test]
fn single_qubit_counts_pass_chi_squared() {
    let rho = random_mixed(2, 2, &mut rng(21));
    let shots = 20u64;
    let samples = 10_000;
    for w in ["X", "Y", "Z"] {
        let w = word(w);
        let p0 = born_probabilities(&rho, &w).unwrap()[0];
        let plan = SettingsPlan::uniform(vec![w.clone()], shots).unwrap();
        let src = RandomSource::with_stream(5, 1);
        let mut hist = vec![0usize; shots as usize + 1];
        for i in 0..samples {
            let c = sample_counts(&rho, &plan, src.substream(i))
                .unwrap()
                .records()[0]
                .counts[0];
            hist[c as usize] += 1;
        }
        let binom = Binomial::new(p0, shots).unwrap();
        let mut bins: Vec<(f64, f64)> = Vec::new();
        let (mut obs, mut exp) = (0.0, 0.0);
        for (k, &h) in hist.iter().enumerate() {
            obs += h as f64;
            exp += binom.pmf(k as u64) * samples as f64;
            if exp >= 5.0 {
                bins.push((obs, exp));
                obs = 0.0;
                exp = 0.0;
            }
        }
        if let Some(last) = bins.last_mut() {
            last.0 += obs;
            last.1 += exp;
        }
        let stat: f64 = bins.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
        let dof = (bins.len() - 1) as f64;
        let p_value = 1.0 - ChiSquared::new(dof).unwrap().cdf(stat);
        assert!(
            p_value > 1e-3,
            "word {w}: chi2 {stat} on {dof} dof, p = {p_value}"
        );
    }
}

#[test]
fn two_qubit_count_covariance() {
    let rho = random_mixed(4, 2, &mut rng(23));
    let w = word("XY");
    let shots = 100.0;
    let p = born_probabilities(&rho, &w).unwrap();
    let plan = SettingsPlan::uniform(vec![w], shots as u64).unwrap();
    let samples = 10_000;
    let src = RandomSource::new(29);
    let rows: Vec<Vec<f64>> = (0..samples)
        .map(|i| {
            sample_counts(&rho, &plan, src.substream(i))
                .unwrap()
                .records()[0]
                .counts
                .clone()
        })
        .collect();
    let mean: Vec<f64> = (0..4)
        .map(|k| rows.iter().map(|r| r[k]).sum::<f64>() / samples as f64)
        .collect();
    for k in 0..4 {
        for l in 0..4 {
            let prods: Vec<f64> = rows
                .iter()
                .map(|r| (r[k] - mean[k]) * (r[l] - mean[l]))
                .collect();
            let cov = prods.iter().sum::<f64>() / (samples as f64 - 1.0);
            let var_prod =
                prods.iter().map(|x| (x - cov).powi(2)).sum::<f64>() / (samples as f64 - 1.0);
            let se = (var_prod / samples as f64).sqrt();
            let delta = if k == l { 1.0 } else { 0.0 };
            let expected = shots * (p[k] * delta - p[k] * p[l]);
            assert!(
                (cov - expected).abs() < 5.0 * se,
                "({k},{l}): {cov} vs {expected}"
            );
        }
    }
}

#[test]
fn single_draws_are_uniform() {
    let all = enumerate_settings(4).unwrap();
    let trials = 100_000u64;
    let src = RandomSource::new(31);
    let mut freq: HashMap<PauliWord, usize> = HashMap::new();
    for i in 0..trials {
        let d = draw_settings(&all, 1, src.substream(i)).unwrap();
        *freq.entry(d[0].clone()).or_default() += 1;
    }
    assert_eq!(freq.len(), 81);
    let p = 1.0 / 81.0;
    let sigma = (trials as f64 * p * (1.0 - p)).sqrt();
    for (w, &f) in &freq {
        assert!(
            (f as f64 - trials as f64 * p).abs() < 3.0 * sigma,
            "{w}: {f}"
        );
    }
}

#[test]
fn draws_are_distinct_and_complete() {
    let all = enumerate_settings(4).unwrap();
    let src = RandomSource::new(2);
    for m in [1, 6, 40, 81] {
        for i in 0..20 {
            let d = draw_settings(&all, m, src.substream(i)).unwrap();
            let set: HashSet<_> = d.iter().collect();
            assert_eq!(set.len(), m);
            assert!(d.iter().all(|w| all.contains(w)));
        }
    }
    let everything: HashSet<_> = draw_settings(&all, 81, src).unwrap().into_iter().collect();
    assert_eq!(everything.len(), 81);
    assert!(draw_settings(&all, 0, src).is_err());
    assert!(draw_settings(&all, 82, src).is_err());
}

#[test]
fn identical_sources_give_identical_datasets() {
    let rho = cstomo::surrogate_state(4).unwrap();
    let plan = SettingsPlan::complete(4, 650).unwrap();
    let a = sample_counts(&rho, &plan, RandomSource::with_stream(7, 3)).unwrap();
    let b = sample_counts(&rho, &plan, RandomSource::with_stream(7, 3)).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    let c = sample_counts(&rho, &plan, RandomSource::with_stream(7, 4)).unwrap();
    assert_ne!(a.count_table(), c.count_table());
}

#[test]
fn distinct_streams_are_uncorrelated() {
    let rho = random_mixed(2, 2, &mut rng(41));
    let plan = SettingsPlan::uniform(vec![word("X")], 1).unwrap();
    let n = 20_000u64;
    let draw = |stream: u64| -> Vec<f64> {
        let src = RandomSource::with_stream(99, stream);
        (0..n)
            .map(|i| {
                sample_counts(&rho, &plan, src.substream(i))
                    .unwrap()
                    .records()[0]
                    .counts[0]
            })
            .collect()
    };
    let (a, b) = (draw(1), draw(2));
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (ma, mb) = (mean(&a), mean(&b));
    let cov: f64 = a
        .iter()
        .zip(&b)
        .map(|(x, y)| (x - ma) * (y - mb))
        .sum::<f64>()
        / n as f64;
    let va = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>() / n as f64;
    let vb = b.iter().map(|x| (x - mb).powi(2)).sum::<f64>() / n as f64;
    let corr = cov / (va * vb).sqrt();
    assert!(corr.abs() < 5.0 / (n as f64).sqrt(), "correlation {corr}");
}

#[test]
fn restriction_composes() {
    let rho = ghz_state(3).unwrap();
    let plan = SettingsPlan::complete(3, 50).unwrap();
    let data = sample_counts(&rho, &plan, RandomSource::new(1)).unwrap();
    let all = data.words();
    assert_eq!(restrict_dataset(&data, &all).unwrap(), data);
    let big = draw_settings(&all, 12, RandomSource::new(2)).unwrap();
    let small = big[3..7].to_vec();
    let twice = restrict_dataset(&restrict_dataset(&data, &big).unwrap(), &small).unwrap();
    assert_eq!(twice, restrict_dataset(&data, &small).unwrap());
    assert_eq!(restrict_dataset(&data, &small[..1]).unwrap().len(), 1);
    let err = restrict_dataset(&restrict_dataset(&data, &small).unwrap(), &big).unwrap_err();
    assert!(matches!(err, cstomo::TomoError::NotFound(_)));
}

#[test]
fn folds_partition_the_records() {
    let rho = ghz_state(3).unwrap();
    let plan = SettingsPlan::complete(3, 50).unwrap();
    let data = sample_counts(&rho, &plan, RandomSource::new(1)).unwrap();
    for (m, folds, sizes) in [
        (10, 5, vec![2; 5]),
        (12, 5, vec![3, 3, 2, 2, 2]),
        (27, 4, vec![7, 7, 7, 6]),
    ] {
        let words = draw_settings(&data.words(), m, RandomSource::new(m as u64)).unwrap();
        let subset = restrict_dataset(&data, &words).unwrap();
        let parts = split_folds(&subset, folds, RandomSource::new(3)).unwrap();
        let mut got: Vec<usize> = parts.iter().map(Dataset::len).collect();
        got.sort_unstable_by(|a, b| b.cmp(a));
        assert_eq!(got, sizes);
        let union: HashSet<_> = parts.iter().flat_map(|p| p.words()).collect();
        assert_eq!(union, words.iter().cloned().collect());
    }
    let tiny = restrict_dataset(&data, &data.words()[..3]).unwrap();
    assert!(split_folds(&tiny, 5, RandomSource::new(0)).is_err());
    assert!(split_folds(&tiny, 1, RandomSource::new(0)).is_err());
}

#[test]
fn dataset_files_round_trip() {
    let dir = std::env::temp_dir().join(format!("cstomo-sim-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("data.json");
    let data = sample_counts(
        &ghz_state(2).unwrap(),
        &SettingsPlan::complete(2, 30).unwrap(),
        RandomSource::new(4),
    )
    .unwrap();
    data.save(&path).unwrap();
    assert_eq!(Dataset::load(&path).unwrap(), data);
    let mut csv = Vec::new();
    data.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 9 * 4);
    assert!(text.starts_with("word,outcome,count\nXX,0,"));
    std::fs::remove_dir_all(&dir).unwrap();
}

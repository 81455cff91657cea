mod common;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rqnet_core::bits::BitMatrix;
use rqnet_core::embedding::{embed, EmbeddedTrajectory, EmbeddingParams};
use rqnet_core::network::RecurrenceNetwork;
use rqnet_core::preprocess::{uniform_deviate_values, TimeSeries};
use rqnet_core::recurrence::{
    det_fraction, diagonal_histogram, lam_fraction, recurrence_matrix, vertical_histogram, LineHistogram,
    Norm, RecurrenceMatrix,
};
use rqnet_core::trend::{mann_kendall_classic, mann_kendall_modified, Direction};
use rqnet_core::window::{
    autocorr1_series, evaluate_window, heatmap_table, variance_series, windowed_measures, EmbeddingMode,
    Measure, WindowConfig,
};
use rqnet_core::{analysis, Fraction};

use common::*;

fn histogram_map(h: &LineHistogram) -> BTreeMap<usize, u64> {
    h.iter().collect()
}

fn to_dense(r: &RecurrenceMatrix) -> Dense {
    (0..r.size())
        .map(|i| (0..r.size()).map(|j| r.get(i, j)).collect())
        .collect()
}

fn ar1(rng: &mut ChaCha8Rng, n: usize, phi: f64) -> Vec<f64> {
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut x = 0.0;
    (0..n)
        .map(|_| {
            x = phi * x + noise.sample(rng);
            x
        })
        .collect()
}

#[test]
fn recurrence_matches_pairwise_distances() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let points: Vec<Vec<f64>> = (0..100)
        .map(|_| (0..4).map(|_| rng.random::<f64>()).collect())
        .collect();
    let traj = EmbeddedTrajectory::from_points(&points).unwrap();
    for (norm, maximum) in [(Norm::Euclidean, false), (Norm::Maximum, true)] {
        let r = recurrence_matrix(&traj, 0.25, norm).unwrap();
        assert_eq!(to_dense(&r), dense_recurrence(&points, 0.25, maximum), "{norm:?}");
    }
}

#[test]
fn histograms_match_run_scans_on_random_symmetric_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for trial in 0..40 {
        let n = 50;
        let p = [0.1, 0.3, 0.6, 0.9][trial % 4];
        let mut bits = BitMatrix::identity(n);
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<f64>() < p {
                    bits.set(i, j, true);
                    bits.set(j, i, true);
                }
            }
        }
        let r = RecurrenceMatrix::from_bits(bits, 1.0, Norm::Euclidean).unwrap();
        let dense = to_dense(&r);
        for loi in [false, true] {
            assert_eq!(histogram_map(&diagonal_histogram(&r, loi)), diagonal_runs(&dense, loi));
        }
        assert_eq!(histogram_map(&vertical_histogram(&r)), vertical_runs(&dense));
    }
}

#[test]
fn det_and_lam_are_exact_ratios() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..300 {
        let len = rng.random_range(8..=70);
        let series: Vec<f64> = if rng.random::<bool>() {
            let w = rng.random_range(0.05..0.6);
            (0..len).map(|i| (w * i as f64).sin() + 0.1 * rng.random::<f64>()).collect()
        } else {
            (0..len).map(|_| rng.random::<f64>()).collect()
        };
        let params = EmbeddingParams::new(rng.random_range(1..=4), rng.random_range(1..=2)).unwrap();
        let Ok(traj) = embed(&uniform_deviate_values(&series), params) else { continue };
        if traj.len() > 64 || traj.len() < 2 {
            continue;
        }
        let eps = rng.random_range(0.05..0.6);
        let r = recurrence_matrix(&traj, eps, Norm::Euclidean).unwrap();
        let dense = to_dense(&r);
        for l_min in 2..=4 {
            let (num, den) = line_ratio(&diagonal_runs(&dense, false), l_min);
            match det_fraction(&r, l_min, false) {
                Ok(f) => assert!(f.same_ratio(&Fraction::new(num, den)), "{f:?} vs {num}/{den}"),
                Err(_) => assert_eq!(den, 0),
            }
            let (num, den) = line_ratio(&vertical_runs(&dense), l_min);
            assert!(lam_fraction(&r, l_min).unwrap().same_ratio(&Fraction::new(num, den)));
        }
    }
}

#[test]
fn network_measures_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..60 {
        let n = rng.random_range(2..=100);
        let density = rng.random_range(0.02..0.5);
        let (adj, edges) = random_graph(n, density, || rng.random::<f64>());
        let net = RecurrenceNetwork::from_edges(n, &edges).unwrap();
        assert!((net.clustering_coefficient() - clustering_triples(&adj)).abs() < 1e-12);
        let fw = floyd_warshall(&adj);
        for (s, row) in fw.iter().enumerate() {
            let mut bfs = net.bfs_distances(s);
            bfs[s] = Some(0);
            assert_eq!(&bfs, row);
        }
        let (sum, pairs) = path_totals(&fw);
        match net.characteristic_path_length() {
            Ok(report) => {
                assert_eq!((report.distance_sum, report.reachable_pairs), (sum, pairs));
                assert_eq!(report.cpl, sum as f64 / pairs as f64);
            }
            Err(_) => assert!(edges.is_empty()),
        }
    }
}

#[test]
fn sine_embedding_is_deterministic() {
    let values: Vec<f64> = (0..800).map(|i| (i as f64 * 0.1).sin()).collect();
    let traj = embed(&uniform_deviate_values(&values), EmbeddingParams::new(3, 5).unwrap()).unwrap();
    let r = recurrence_matrix(&traj, 0.25, Norm::Euclidean).unwrap();
    let (num, den) = line_ratio(&diagonal_runs(&to_dense(&r), false), 2);
    let det = det_fraction(&r, 2, false).unwrap();
    assert!(det.same_ratio(&Fraction::new(num, den)));
    assert!(det.value() > 0.99, "{det:?}");
}

#[test]
fn windows_equal_isolated_slices() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let values: Vec<f64> = ar1(&mut rng, 900, 0.7);
    let ts = TimeSeries::new("ar", values.clone()).unwrap();
    let mut cfg = WindowConfig::gfc(3).with_measures(&Measure::ALL);
    cfg.length = 300;
    cfg.step = 150;
    let series = windowed_measures(&ts, &cfg).unwrap();
    for (k, start) in (0..=600).step_by(150).enumerate() {
        let slice = &values[start..start + 300];
        let isolated = evaluate_window(slice, &cfg);
        let deviate = uniform_deviate_values(slice);
        let r = analysis::build_recurrence(&deviate, EmbeddingParams::new(4, 3).unwrap(), 0.25, Norm::Euclidean)
            .unwrap();
        let det = rqnet_core::recurrence::det(&r, 2, false).unwrap();
        for (m, obs) in &series.values {
            assert_eq!(obs[k], isolated[m], "{m} at window {k}");
        }
        assert_eq!(series.get(Measure::Det).unwrap()[k].value(), Some(det));
    }
}

#[test]
fn scalar_windows_are_shift_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let block: Vec<f64> = (0..250).map(|_| rng.random::<f64>()).collect();
    let mut values: Vec<f64> = (0..130).map(|_| rng.random::<f64>()).collect();
    values.extend(&block);
    values.extend((0..70).map(|_| rng.random::<f64>()));
    let cfg = WindowConfig::short().with_measures(&[Measure::Det, Measure::Lam, Measure::Cc, Measure::Cpl]);
    assert_eq!(cfg.embedding, EmbeddingMode::None);
    let shifted = windowed_measures(&TimeSeries::new("s", values).unwrap(), &cfg).unwrap();
    let alone = evaluate_window(&block, &cfg);
    for (m, obs) in &shifted.values {
        assert_eq!(obs[13], alone[m]);
    }
}

#[test]
fn lag_one_autocorrelation_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let smooth = TimeSeries::new("ar", ar1(&mut rng, 2000, 0.95)).unwrap();
    let out = autocorr1_series(&smooth, &WindowConfig::short()).unwrap();
    let values: Vec<f64> = out.get(Measure::Ac1).unwrap().iter().map(|o| o.value().unwrap()).collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    assert!(mean > 0.9, "{mean}");

    let noise = TimeSeries::new("iid", ar1(&mut rng, 5000, 0.0)).unwrap();
    let cfg = WindowConfig::short();
    let out = autocorr1_series(&noise, &cfg).unwrap();
    let bound = 3.0 / (cfg.length as f64).sqrt();
    let obs = out.get(Measure::Ac1).unwrap();
    let inside = obs.iter().filter(|o| o.value().unwrap().abs() < bound).count();
    assert!(inside as f64 >= 0.98 * obs.len() as f64, "{inside}/{}", obs.len());
}

#[test]
fn variance_ramp_has_increasing_trend() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let n = 3000;
    let values: Vec<f64> = (0..n)
        .map(|i| 2f64.powf(i as f64 / n as f64) * noise.sample(&mut rng))
        .collect();
    let out = variance_series(&TimeSeries::new("ramp", values).unwrap(), &WindowConfig::short()).unwrap();
    let var: Vec<f64> = out.get(Measure::Var).unwrap().iter().map(|o| o.value().unwrap()).collect();
    let r = mann_kendall_modified(&var, 0.05).unwrap();
    assert_eq!(r.direction, Direction::Increasing, "{r:?}");
}

#[test]
fn corrected_test_is_conservative_on_ar1() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let trials = 600;
    let (mut classic, mut modified) = (0, 0);
    let mut ratio_iid = 0.0;
    for _ in 0..trials {
        let x = ar1(&mut rng, 100, 0.8);
        classic += (mann_kendall_classic(&x, 0.05).unwrap().direction != Direction::None) as usize;
        modified += (mann_kendall_modified(&x, 0.05).unwrap().direction != Direction::None) as usize;
        ratio_iid += mann_kendall_modified(&ar1(&mut rng, 100, 0.0), 0.05).unwrap().n_effective_ratio;
    }
    assert!(modified < classic, "modified {modified} classic {classic}");
    let mean_ratio = ratio_iid / trials as f64;
    assert!((1.0..1.25).contains(&mean_ratio), "{mean_ratio}");
}

#[test]
fn heatmap_shape_for_a_batch() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let cfg = WindowConfig::short().with_measures(&[Measure::Det]);
    let series: Vec<_> = (0..26)
        .map(|k| {
            let values: Vec<f64> = (0..700).map(|_| rng.random::<f64>()).collect();
            windowed_measures(&TimeSeries::new(format!("m{k:02}"), values).unwrap(), &cfg).unwrap()
        })
        .collect();
    let table = heatmap_table(&series, Measure::Det).unwrap();
    let windows = cfg.window_count(700).unwrap();
    assert_eq!(table.rows.len(), 26);
    assert!(table.rows.iter().all(|r| r.len() == windows));
    let scores: Vec<f64> = table.change_scores.iter().map(|s| s.unwrap()).collect();
    assert!(scores.windows(2).all(|w| w[0] <= w[1]));
}

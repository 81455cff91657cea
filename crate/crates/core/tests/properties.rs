mod common;

use proptest::collection::vec;
use proptest::prelude::*;
use rqnet_core::embedding::{embed, EmbeddingParams};
use rqnet_core::network::RecurrenceNetwork;
use rqnet_core::preprocess::{detrend_values, uniform_deviate_values};
use rqnet_core::recurrence::{horizontal_histogram, recurrence_matrix, vertical_histogram, Norm};
use rqnet_core::trend::{kendall_tau, mann_kendall_modified, Direction};
use rqnet_core::window::sliding_windows;

use common::*;

fn finite_series(min: usize, max: usize) -> impl Strategy<Value = Vec<f64>> {
    vec(-1.0e3..1.0e3f64, min..max)
}

fn norm() -> impl Strategy<Value = Norm> {
    prop_oneof![Just(Norm::Euclidean), Just(Norm::Maximum)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn deviates_are_the_uniform_grid(x in finite_series(1, 300)) {
        let mut u = uniform_deviate_values(&x);
        let n = x.len();
        u.sort_by(f64::total_cmp);
        for (k, v) in u.iter().enumerate() {
            prop_assert_eq!(*v, (k + 1) as f64 / (n + 1) as f64);
        }
    }

    #[test]
    fn deviates_preserve_strict_order(x in finite_series(2, 200)) {
        let u = uniform_deviate_values(&x);
        for i in 0..x.len() {
            for j in 0..x.len() {
                if x[i] < x[j] {
                    prop_assert!(u[i] < u[j]);
                }
            }
        }
    }

    #[test]
    fn detrending_is_idempotent(x in finite_series(12, 200), degree in 0usize..=3) {
        let once = detrend_values(&x, degree).unwrap();
        let twice = detrend_values(&once, degree).unwrap();
        let scale = x.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        for (a, b) in once.iter().zip(&twice) {
            prop_assert!((a - b).abs() <= 1e-9 * scale, "{} vs {}", a, b);
        }
    }

    #[test]
    fn recurrence_grows_with_epsilon(
        x in vec(0.0..1.0f64, 10..60),
        m in 1usize..=3,
        e1 in 0.01..0.6f64,
        extra in 0.0..0.5f64,
        norm in norm(),
    ) {
        let traj = embed(&x, EmbeddingParams::new(m, 1).unwrap()).unwrap();
        let small = recurrence_matrix(&traj, e1, norm).unwrap();
        let large = recurrence_matrix(&traj, e1 + extra, norm).unwrap();
        for i in 0..small.size() {
            for j in 0..small.size() {
                prop_assert!(!small.get(i, j) || large.get(i, j));
            }
        }
    }

    #[test]
    fn doubling_coordinates_and_epsilon_keeps_recurrences(
        x in vec(0.0..1.0f64, 10..60),
        m in 1usize..=4,
        eps in 0.05..0.5f64,
        norm in norm(),
    ) {
        let params = EmbeddingParams::new(m, 1).unwrap();
        let doubled: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let a = recurrence_matrix(&embed(&x, params).unwrap(), eps, norm).unwrap();
        let b = recurrence_matrix(&embed(&doubled, params).unwrap(), 2.0 * eps, norm).unwrap();
        prop_assert_eq!(a.bits(), b.bits());
    }

    #[test]
    fn vertical_lines_mirror_horizontal_lines(
        x in vec(0.0..1.0f64, 5..70),
        m in 1usize..=3,
        eps in 0.05..0.5f64,
    ) {
        let traj = embed(&x, EmbeddingParams::new(m, 1).unwrap()).unwrap();
        let r = recurrence_matrix(&traj, eps, Norm::Euclidean).unwrap();
        let v: Vec<_> = vertical_histogram(&r).iter().collect();
        let h: Vec<_> = horizontal_histogram(&r).iter().collect();
        prop_assert_eq!(v, h);
    }

    #[test]
    fn bfs_agrees_with_floyd_warshall(n in 2usize..40, density in 0.02..0.5f64, seed in any::<u64>()) {
        let mut state = seed | 1;
        let (adj, edges) = random_graph(n, density, || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        });
        let net = RecurrenceNetwork::from_edges(n, &edges).unwrap();
        let fw = floyd_warshall(&adj);
        for (s, row) in fw.iter().enumerate() {
            let mut d = net.bfs_distances(s);
            d[s] = Some(0);
            prop_assert_eq!(&d, row);
        }
    }

    #[test]
    fn clustering_ignores_node_labels(
        edges in vec((0usize..30, 0usize..30), 0..150),
        perm in Just((0..30).collect::<Vec<usize>>()).prop_shuffle(),
    ) {
        let edges: Vec<_> = edges.into_iter().filter(|(a, b)| a != b).collect();
        let relabelled: Vec<_> = edges.iter().map(|&(a, b)| (perm[a], perm[b])).collect();
        let a = RecurrenceNetwork::from_edges(30, &edges).unwrap();
        let b = RecurrenceNetwork::from_edges(30, &relabelled).unwrap();
        prop_assert!((a.clustering_coefficient() - b.clustering_coefficient()).abs() < 1e-12);
    }

    #[test]
    fn adding_an_edge_never_lengthens_paths(
        edges in vec((0usize..25, 0usize..25), 0..60),
        extra in (0usize..25, 0usize..25),
    ) {
        prop_assume!(extra.0 != extra.1);
        let edges: Vec<_> = edges.into_iter().filter(|(a, b)| a != b).collect();
        let mut more = edges.clone();
        more.push(extra);
        let before = RecurrenceNetwork::from_edges(25, &edges).unwrap();
        let after = RecurrenceNetwork::from_edges(25, &more).unwrap();
        for s in 0..25 {
            for (d0, d1) in before.bfs_distances(s).iter().zip(after.bfs_distances(s)) {
                match (d0, d1) {
                    (Some(a), Some(b)) => prop_assert!(b <= *a),
                    (Some(_), None) => prop_assert!(false, "edge disconnected a pair"),
                    _ => {}
                }
            }
        }
    }

    #[test]
    fn window_count_formula(n in 1usize..5000, length in 1usize..2000, step in 1usize..300) {
        let values = vec![0u8; n];
        match sliding_windows(&values, length, step) {
            Ok(w) => {
                prop_assert!(n >= length);
                prop_assert_eq!(w.len(), (n - length) / step + 1);
            }
            Err(_) => prop_assert!(n < length),
        }
    }

    #[test]
    fn embedding_point_count(n in 1usize..400, m in 1usize..6, tau in 1usize..40) {
        let x = vec![0.5f64; n];
        let params = EmbeddingParams::new(m, tau).unwrap();
        match embed(&x, params) {
            Ok(t) => prop_assert_eq!(t.len(), n - (m - 1) * tau),
            Err(_) => prop_assert!(n < (m - 1) * tau + 2),
        }
    }

    #[test]
    fn kendall_s_is_a_rank_statistic(x in finite_series(3, 80)) {
        prop_assume!(x.iter().any(|v| *v != x[0]));
        let s = kendall_tau(&x).unwrap().s;
        prop_assert_eq!(s, mann_kendall_s(&x));
        let transformed: Vec<f64> = x.iter().map(|v| (v / 300.0).exp() + v.powi(3)).collect();
        prop_assert_eq!(kendall_tau(&transformed).unwrap().s, s);
        let reversed: Vec<f64> = x.iter().rev().copied().collect();
        prop_assert_eq!(kendall_tau(&reversed).unwrap().s, -s);
    }

    #[test]
    fn reversal_flips_direction(x in finite_series(10, 80)) {
        prop_assume!(x.iter().any(|v| *v != x[0]));
        let fwd = mann_kendall_modified(&x, 0.05).unwrap();
        let rev: Vec<f64> = x.iter().rev().copied().collect();
        let back = mann_kendall_modified(&rev, 0.05).unwrap();
        let flipped = match fwd.direction {
            Direction::Increasing => Direction::Decreasing,
            Direction::Decreasing => Direction::Increasing,
            Direction::None => Direction::None,
        };
        prop_assert_eq!(back.s, -fwd.s);
        prop_assert_eq!(back.direction, flipped);
        prop_assert!(fwd.z.signum() == (fwd.s as f64).signum() || fwd.z == 0.0);
    }
}

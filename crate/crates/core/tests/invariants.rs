use deltacon_core::affinity::{full_affinity, random_partition, reduced_affinity, SolverConfig};
use deltacon_core::baselines::{lambda_distance, spectrum};
use deltacon_core::cluster::ward_cluster;
use deltacon_core::deltacon::{deltacon0, deltacon_partition, DeltaConOptions};
use deltacon_core::temporal::control_limits;
use deltacon_core::{epsilon, union_node_space, Graph, MatrixKind};
use proptest::prelude::*;

fn graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n, 1u8..=4), 0..3 * n).prop_map(move |raw| {
            let mut seen = std::collections::HashSet::new();
            let edges: Vec<_> = raw
                .into_iter()
                .filter(|&(u, v, _)| u != v && seen.insert((u.min(v), u.max(v))))
                .map(|(u, v, w)| (u, v, f64::from(w)))
                .collect();
            Graph::new(n, edges).unwrap()
        })
    })
}

fn pair(max_n: usize) -> impl Strategy<Value = (Graph, Graph)> {
    (graph(max_n), graph(max_n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn self_similarity_is_one(g in graph(30)) {
        prop_assert_eq!(deltacon0(&g, &g).unwrap().similarity, Some(1.0));
    }

    #[test]
    fn exact_score_is_symmetric((a, b) in pair(25)) {
        let ab = deltacon0(&a, &b).unwrap().similarity.unwrap();
        let ba = deltacon0(&b, &a).unwrap().similarity.unwrap();
        prop_assert_eq!(ab.to_bits(), ba.to_bits());
        prop_assert!(ab > 0.0 && ab <= 1.0);
    }

    #[test]
    fn grouping_never_lowers_similarity((a, b) in pair(25), groups in 1usize..6, seed in 0u64..1000) {
        let (a, b) = union_node_space(&a, &b);
        let n = a.node_count();
        let p = random_partition(n, groups.min(n), seed).unwrap();
        let dc = deltacon_partition(&a, &b, &p, &DeltaConOptions::default()).unwrap();
        let dc0 = deltacon0(&a, &b).unwrap();
        prop_assert!(dc.similarity.unwrap() >= dc0.similarity.unwrap() - 1e-9);
    }

    #[test]
    fn reduced_columns_are_sums_of_full_columns(g in graph(30), groups in 1usize..5, seed in 0u64..100) {
        let eps = epsilon(&g);
        let cfg = SolverConfig::default();
        let full = full_affinity(&g, eps, &cfg).unwrap();
        let p = random_partition(g.node_count(), groups.min(g.node_count()), seed).unwrap();
        let reduced = reduced_affinity(&g, &p, eps, &cfg).unwrap();
        for k in 0..p.groups() {
            for row in 0..g.node_count() {
                let sum: f64 = p.members(k).map(|i| full.get(row, i)).sum();
                prop_assert!((reduced.get(row, k) - sum).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn union_space_is_idempotent((a, b) in pair(20)) {
        let (a1, b1) = union_node_space(&a, &b);
        let (a2, b2) = union_node_space(&a1, &b1);
        prop_assert_eq!(&a1, &a2);
        prop_assert_eq!(&b1, &b2);
        prop_assert_eq!(a1.node_count(), b1.node_count());
    }

    #[test]
    fn spectra_ignore_relabeling(g in graph(20), rot in 0usize..20) {
        let n = g.node_count();
        let perm: Vec<usize> = (0..n).map(|i| (i + rot) % n).collect();
        let h = g.permute(&perm).unwrap();
        for kind in [MatrixKind::Adjacency, MatrixKind::Laplacian, MatrixKind::NormalizedLaplacian] {
            let d = lambda_distance(&g, &h, kind).unwrap().distance.unwrap();
            prop_assert!(d <= 1e-8, "{kind:?}: {d}");
        }
        prop_assert_eq!(spectrum(&g, MatrixKind::Adjacency).unwrap().len(), n);
    }

    #[test]
    fn ward_heights_never_decrease(points in prop::collection::vec(0.0f64..50.0, 2..15)) {
        let sim: Vec<Vec<f64>> = points
            .iter()
            .map(|a| points.iter().map(|b| 1.0 / (1.0 + (a - b).abs())).collect())
            .collect();
        let d = ward_cluster(&sim).unwrap();
        prop_assert_eq!(d.merges.len(), points.len() - 1);
        prop_assert!(d.merges.windows(2).all(|w| w[0].height <= w[1].height + 1e-12));
    }

    #[test]
    fn control_limits_ignore_reversal(scores in prop::collection::vec(0.0f64..1.0, 3..40)) {
        let mut rev = scores.clone();
        rev.reverse();
        let (a, b) = (control_limits(&scores).unwrap(), control_limits(&rev).unwrap());
        prop_assert_eq!(a.median, b.median);
        prop_assert!((a.lower_limit - b.lower_limit).abs() <= 1e-12);
        prop_assert_eq!(a.flagged.len(), b.flagged.len());
    }
}

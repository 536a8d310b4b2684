use std::sync::Arc;

use entroflow_core::flows::{detect_plateau, FlowDirection, LimitPointConfig, LimitStatus};
use entroflow_core::partition::{is_coarsening, join, pseudo_distance};
use entroflow_core::space::Normalization;
use entroflow_core::{Partition, PartitionFlow, Space};
use proptest::prelude::*;

const TOL: f64 = 1e-12;

fn space_strategy(max: usize) -> impl Strategy<Value = Arc<Space>> {
    prop::collection::vec(0.01f64..1.0, 1..=max).prop_map(|w| {
        let ids = (0..w.len()).map(|i| format!("x{i}"));
        Arc::new(Space::new(ids, w, Normalization::Rescale).unwrap())
    })
}

fn labels(n: usize, k: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0..k, n)
}

/// A space and three random partitions of it.
fn triple() -> impl Strategy<Value = (Partition, Partition, Partition)> {
    space_strategy(64).prop_flat_map(|s| {
        let n = s.len();
        (Just(s), labels(n, 6), labels(n, 4), labels(n, 9)).prop_map(|(s, a, b, c)| {
            (
                Partition::from_labels(s.clone(), a).unwrap(),
                Partition::from_labels(s.clone(), b).unwrap(),
                Partition::from_labels(s, c).unwrap(),
            )
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn entropy_bounds((a, _, _) in triple()) {
        let h = a.entropy();
        prop_assert!(h >= 0.0);
        prop_assert!(h <= (a.atom_count() as f64).log2() + TOL);
    }

    #[test]
    fn join_laws((a, b, c) in triple()) {
        let ab = join(&a, &b).unwrap();
        prop_assert!(is_coarsening(&a, &ab).unwrap());
        prop_assert!(is_coarsening(&b, &ab).unwrap());
        prop_assert_eq!(&ab, &join(&b, &a).unwrap());
        prop_assert_eq!(join(&ab, &c).unwrap(), join(&a, &join(&b, &c).unwrap()).unwrap());
        prop_assert!(a.entropy() <= ab.entropy() + TOL);
        prop_assert!(ab.entropy() <= a.entropy() + b.entropy() + TOL);
    }

    #[test]
    fn join_is_coarsest_common_refinement(
        s in space_strategy(64),
        fine in prop::collection::vec(0usize..12, 64),
        fa in prop::collection::vec(0usize..4, 12),
        fb in prop::collection::vec(0usize..4, 12),
    ) {
        // a and b are coarsenings of c by construction, so a ∨ b must be too
        let fine = &fine[..s.len()];
        let c = Partition::from_labels(s.clone(), fine.to_vec()).unwrap();
        let a = Partition::from_labels(s.clone(), fine.iter().map(|&l| fa[l])).unwrap();
        let b = Partition::from_labels(s, fine.iter().map(|&l| fb[l])).unwrap();
        prop_assert!(is_coarsening(&a, &c).unwrap() && is_coarsening(&b, &c).unwrap());
        prop_assert!(is_coarsening(&join(&a, &b).unwrap(), &c).unwrap());
    }

    #[test]
    fn coarsening_is_monotone((a, b, _) in triple()) {
        if is_coarsening(&a, &b).unwrap() {
            prop_assert!(a.entropy() <= b.entropy() + TOL);
        }
        let fine = join(&a, &b).unwrap();
        prop_assert!(a.entropy() <= fine.entropy() + TOL);
    }

    #[test]
    fn pseudo_metric_axioms((a, b, c) in triple()) {
        let d = |x: &Partition, y: &Partition| pseudo_distance(x, y).unwrap();
        prop_assert_eq!(d(&a, &a), 0.0);
        prop_assert!(d(&a, &b) >= 0.0);
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + TOL);
    }

    #[test]
    fn uniform_atoms_attain_the_bound(k in 1usize..16, per in 1usize..5) {
        let s = Arc::new(Space::uniform(k * per).unwrap());
        let p = Partition::from_labels(s, (0..k * per).map(|i| i % k)).unwrap();
        prop_assert!((p.entropy() - (k as f64).log2()).abs() < TOL);
    }
}

#[test]
fn distinct_partitions_at_distance_zero() {
    let s = Arc::new(Space::uniform(4).unwrap());
    let p = Partition::new(s.clone(), vec![vec![0, 1], vec![2, 3]]).unwrap();
    let q = Partition::new(s, vec![vec![0, 2], vec![1, 3]]).unwrap();
    assert_ne!(p, q);
    assert_eq!(pseudo_distance(&p, &q).unwrap(), 0.0);
}

/// Refinement chain by repeated atom splitting: each step splits one atom in two.
fn split_chain() -> impl Strategy<Value = Vec<Partition>> {
    (space_strategy(32), prop::collection::vec((any::<prop::sample::Index>(), any::<u64>()), 1..12)).prop_map(
        |(s, splits)| {
            let mut labels = vec![0usize; s.len()];
            let mut chain = vec![Partition::from_labels(s.clone(), labels.clone()).unwrap()];
            for (i, bits) in splits {
                let target = labels[i.index(s.len())];
                let fresh = labels.iter().max().unwrap() + 1;
                for (p, l) in labels.iter_mut().enumerate() {
                    if *l == target && (bits >> (p % 64)) & 1 == 1 {
                        *l = fresh;
                    }
                }
                chain.push(Partition::from_labels(s.clone(), labels.clone()).unwrap());
            }
            chain
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn refinement_chains_have_monotone_entropy(chain in split_chain()) {
        let n = chain.len();
        let flow = PartitionFlow::new(chain.clone(), FlowDirection::Refinement).unwrap();
        let h = flow.entropy_sequence(n).unwrap();
        prop_assert!(h.windows(2).all(|w| w[0] <= w[1] + TOL));

        let rev = flow.reverse();
        prop_assert_eq!(rev.direction(), FlowDirection::CoarseGraining);
        let again = PartitionFlow::new(rev.partitions().to_vec(), FlowDirection::CoarseGraining).unwrap();
        let hr = again.entropy_sequence(n).unwrap();
        prop_assert!(hr.windows(2).all(|w| w[1] <= w[0] + TOL));
        for (p, q) in rev.partitions().iter().zip(chain.iter().rev()) {
            prop_assert_eq!(p, q);
        }
    }

    #[test]
    fn geometric_approach_is_witnessed(limit in 0.0f64..10.0, r in 0.05f64..0.8, scale in 0.1f64..5.0, n in 20usize..64) {
        let seq: Vec<f64> = (0..n).map(|i| limit - scale * r.powi(i as i32)).collect();
        let window = 8;
        let tail = seq[n - window..].iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - seq[n - window..].iter().cloned().fold(f64::INFINITY, f64::min);
        let eps = tail * 1.5 + 1e-15;
        let v = detect_plateau(&seq, &LimitPointConfig::new(eps, window, n)).unwrap();
        prop_assert_eq!(v.status, LimitStatus::Witnessed);
        prop_assert!(v.tail_spread < eps);
    }
}

#[test]
fn direction_violation_is_an_error() {
    let s = Arc::new(Space::uniform(4).unwrap());
    let flow = PartitionFlow::new(vec![Partition::discrete(s.clone()), Partition::trivial(s)], FlowDirection::Refinement);
    assert!(flow.is_err());
}

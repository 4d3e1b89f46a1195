mod common;

use progquant::network::{self, Graph};
use proptest::prelude::*;
use rand::seq::SliceRandom;

fn graph_params() -> impl Strategy<Value = (usize, u64)> {
    (3usize..=30, any::<u64>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weights_are_doubly_stochastic((m, seed) in graph_params()) {
        let g = common::rgg(m, seed);
        for w in [network::metropolis_weights(&g).unwrap(),
                  network::laplacian_weights(&g, network::default_laplacian_step(&g)).unwrap()] {
            for s in w.matrix().row_sums().into_iter().chain(w.matrix().col_sums()) {
                prop_assert!((s - 1.0).abs() <= 1e-12);
            }
            prop_assert!(w.lambda2() < 1.0);
            prop_assert!(network::validate_consensus_matrix(w.matrix()).is_consensus_matrix());
        }
    }

    #[test]
    fn metropolis_is_permutation_equivariant((m, seed) in graph_params()) {
        let g = common::rgg(m, seed);
        let mut perm: Vec<usize> = (0..m).collect();
        perm.shuffle(&mut common::rng(seed ^ 1));
        let relabeled = g.relabel(&perm).unwrap();
        let direct = network::metropolis_weights(&relabeled).unwrap();
        let moved = network::metropolis_weights(&g).unwrap().matrix().permute(&perm);
        // diagonals are 1 − Σ off-diagonal, summed in a different order
        prop_assert_eq!((direct.matrix().rows(), direct.matrix().cols()), (moved.rows(), moved.cols()));
        for i in 0..m {
            for j in 0..m {
                prop_assert!((direct.matrix()[(i, j)] - moved[(i, j)]).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn laplacian_spectrum_in_open_unit_interval((m, seed) in graph_params(), frac in 0.05f64..0.999) {
        let g = common::rgg(m, seed);
        let a = frac / g.max_degree() as f64;
        let w = network::laplacian_weights(&g, a).unwrap();
        let ev = common::reference_eigenvalues(w.matrix());
        prop_assert!(ev[0] > -1.0);
        prop_assert!(*ev.last().unwrap() <= 1.0 + 1e-12);
    }

    #[test]
    fn rgg_is_reproducible(m in 2usize..50, seed in any::<u64>(), r in 0.0f64..1.0) {
        let a = network::generate_rgg(m, r, seed).unwrap();
        let b = network::generate_rgg(m, r, seed).unwrap();
        prop_assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }

    #[test]
    fn graph_json_round_trip((m, seed) in graph_params()) {
        let g = common::rgg(m, seed);
        let back = Graph::from_json(&g.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, g);
    }
}

#[test]
fn laplacian_step_bound_is_enforced() {
    let g = Graph::path(4);
    assert!(network::laplacian_weights(&g, 0.5).is_err());
    assert!(network::laplacian_weights(&g, 0.0).is_err());
    assert!(network::laplacian_weights(&g, 0.49).is_ok());
}

#[test]
fn graph_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.json");
    let g = common::rgg(12, 5);
    g.save(&path).unwrap();
    assert_eq!(Graph::load(&path).unwrap(), g);
}

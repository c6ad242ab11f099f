use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use xy_loops::bessel::{bessel_i_scaled, bessel_ratio, turan_margin};
use xy_loops::current::{
    assemble, divergence, gradient_amplitude_split, height_from_current, weight_log, Current, HeightField,
};
use xy_loops::loops::winding_field;
use xy_loops::samplers::{augment_to_loops, Estimate};
use xy_loops::{GraphFile, PlanarGraph};

fn boxed(w: usize, h: usize) -> PlanarGraph {
    PlanarGraph::box_lattice(w, h, 1.0).unwrap()
}

fn random_heights(g: &PlanarGraph, vals: &[i64]) -> HeightField {
    let mut h = HeightField::zero(g);
    for (i, f) in g.inner_faces().into_iter().enumerate() {
        h.values[f] = vals[i % vals.len()];
    }
    h
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn divergence_sums_to_zero(flows in prop::collection::vec(0u32..5, 14)) {
        let g = boxed(2, 1);
        let n = Current::from_flows(flows);
        prop_assert_eq!(divergence(&g, &n).iter().sum::<i64>(), 0);
        let r = divergence(&g, &n.reversed());
        prop_assert!(divergence(&g, &n).iter().zip(&r).all(|(a, b)| *a == -*b));
    }

    #[test]
    fn weight_is_reversal_invariant(flows in prop::collection::vec(0u32..6, 8), beta in 0.1f64..3.0) {
        let g = PlanarGraph::cycle(4, 0.8).unwrap();
        let n = Current::from_flows(flows);
        prop_assert!((weight_log(&g, &n, beta) - weight_log(&g, &n.reversed(), beta)).abs() < 1e-12);
    }

    #[test]
    fn heights_and_amplitudes_round_trip(vals in prop::collection::vec(-3i64..=3, 1..6), xs in prop::collection::vec(0i64..4, 12)) {
        let g = boxed(2, 2);
        let h = random_heights(&g, &vals);
        let n = assemble(&g, &h, &xs).unwrap();
        prop_assert!(divergence(&g, &n).iter().all(|&d| d == 0));
        prop_assert_eq!(&height_from_current(&g, &n).unwrap(), &h);
        let (h2, parts) = gradient_amplitude_split(&g, &n).unwrap();
        prop_assert_eq!(h2, h);
        prop_assert!(parts.iter().zip(&xs).all(|(p, &x)| p.1 as i64 == x));
    }

    #[test]
    fn augmented_loops_wind_like_heights(vals in prop::collection::vec(-2i64..=2, 1..5), seed in any::<u64>(), beta in 0.2f64..2.0) {
        let g = boxed(2, 2);
        let h = random_heights(&g, &vals);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = augment_to_loops(&g, &h, beta, &mut rng).unwrap();
        cfg.validate(&g).unwrap();
        prop_assert_eq!(&height_from_current(&g, &cfg.current(&g)).unwrap(), &h);
        prop_assert_eq!(winding_field(&g, &cfg).unwrap(), h);
    }

    #[test]
    fn bessel_log_concave_and_ratio_bounded(k in 0i64..60, beta in 0.01f64..20.0) {
        prop_assert!(turan_margin::<f64>(k, beta) >= -1e-15);
        let r = bessel_ratio::<f64>(k, beta);
        prop_assert!(r > 0.0 && r < 1.0);
        prop_assert!(bessel_i_scaled::<f64>(k + 1, beta) <= bessel_i_scaled::<f64>(k, beta));
    }

    #[test]
    fn graph_file_round_trip(w in 1usize..4, h in 1usize..4) {
        let g = boxed(w, h);
        let back = GraphFile::from_graph(&g).to_graph().unwrap();
        prop_assert_eq!((back.num_vertices(), back.num_edges(), back.num_faces()), (g.num_vertices(), g.num_edges(), g.num_faces()));
        prop_assert_eq!(back.couplings(), g.couplings());
    }

    #[test]
    fn constant_series_is_exact(x in -5.0f64..5.0, n in 1usize..200) {
        let e = Estimate::from_series(&vec![x; n]);
        prop_assert_eq!(e.std_error, 0.0);
        prop_assert!((e.mean - x).abs() < 1e-12);
    }
}

use proptest::prelude::*;
use spectral_dp::convergence::{ks_measures, ks_two_sample, wasserstein1};
use spectral_dp::measures::{merge_atoms, DensityGrid, TabulatedCdf};
use spectral_dp::tridiag::{moments, spectral_measure, TridiagonalMatrix};

fn atoms() -> impl Strategy<Value = Vec<(f64, f64)>> {
    // Small integer grid so that repeated locations actually occur.
    prop::collection::vec(((-20i32..20).prop_map(|k| k as f64 * 0.25), 0.01f64..5.0), 1..40)
}

fn tridiagonal() -> impl Strategy<Value = TridiagonalMatrix> {
    (1usize..12).prop_flat_map(|n| {
        (prop::collection::vec(-2.0f64..2.0, n), prop::collection::vec(0.2f64..2.0, n - 1))
            .prop_map(|(a, b)| TridiagonalMatrix::new(a, b).unwrap())
    })
}

proptest! {
    #[test]
    fn merged_atoms_are_sorted_distinct_and_normalized(raw in atoms()) {
        let m = merge_atoms(raw.clone()).unwrap();
        prop_assert!(m.locations().windows(2).all(|w| w[0] < w[1]));
        prop_assert!(m.weights().iter().all(|&w| w > 0.0));
        prop_assert!((m.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let total: f64 = raw.iter().map(|a| a.1).sum();
        for &(x, _) in &raw {
            let expect: f64 = raw.iter().filter(|a| a.0 == x).map(|a| a.1).sum::<f64>() / total;
            let idx = m.locations().iter().position(|&l| l == x).unwrap();
            prop_assert!((m.weights()[idx] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn measure_cdf_is_monotone(raw in atoms(), mut probes in prop::collection::vec(-6.0f64..6.0, 2..30)) {
        let m = merge_atoms(raw).unwrap();
        probes.sort_by(f64::total_cmp);
        let values: Vec<f64> = probes.iter().map(|&x| m.cdf(x)).collect();
        prop_assert!(values.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(values.iter().all(|&v| (0.0..=1.0).contains(&v)));
        prop_assert_eq!(m.cdf(m.max_location()), 1.0);
    }

    #[test]
    fn tabulated_cdf_is_monotone(values in prop::collection::vec(0.0f64..3.0, 3..60), u in 0.0f64..1.0) {
        prop_assume!(values.iter().sum::<f64>() > 0.1);
        let grid = DensityGrid::new(-1.0, 2.0, values).unwrap();
        let cdf = TabulatedCdf::from_density(&grid).unwrap();
        prop_assert!(cdf.values().windows(2).all(|w| w[0] <= w[1]));
        prop_assert!((cdf.values().last().unwrap() - 1.0).abs() < 1e-12);
        let q = cdf.quantile(u);
        prop_assert!((-1.0..=2.0).contains(&q));
    }

    #[test]
    fn two_sample_ks_is_symmetric_and_bounded(
        a in prop::collection::vec(-5.0f64..5.0, 1..50),
        b in prop::collection::vec(-5.0f64..5.0, 1..50),
    ) {
        let ab = ks_two_sample(&a, &b).unwrap();
        let ba = ks_two_sample(&b, &a).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(ks_two_sample(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn measure_distances_are_symmetric(r1 in atoms(), r2 in atoms()) {
        let (m1, m2) = (merge_atoms(r1).unwrap(), merge_atoms(r2).unwrap());
        let d = ks_measures(&m1, &m2);
        prop_assert!((d - ks_measures(&m2, &m1)).abs() < 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&d));
        prop_assert_eq!(ks_measures(&m1, &m1), 0.0);
        let w = wasserstein1(&m1, &m2);
        prop_assert!(w >= 0.0 && (w - wasserstein1(&m2, &m1)).abs() < 1e-9);
        prop_assert!(wasserstein1(&m1, &m1).abs() < 1e-12);
    }

    #[test]
    fn spectral_measure_reproduces_moments(j in tridiagonal()) {
        let sp = spectral_measure(&j).unwrap();
        prop_assert_eq!(sp.len(), j.size());
        prop_assert!((sp.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (k, m) in moments(&j, 8).into_iter().enumerate() {
            prop_assert!((sp.moment(k as u32) - m).abs() <= 1e-9 * m.abs().max(1.0));
        }
    }
}

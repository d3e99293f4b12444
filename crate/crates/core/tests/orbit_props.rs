use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use magic_flatness::measures::{ipr, stabilizer_entropy};
use magic_flatness::oracles::{sample_haar_state, theorem_rhs};
use magic_flatness::orbit::{
    estimate_m2, jackknife_m2, mean_and_std_error, orbit_average_exact, orbit_average_mc, orbit_samples,
    samples_to_accuracy, substream, AccuracyConfig, McConfig, Protocol,
};
use magic_flatness::pauli::xi_norm;
use magic_flatness::Statevector;

fn rhs(s: &Statevector) -> f64 {
    theorem_rhs(stabilizer_entropy(s, 2.0).unwrap(), s.dim())
}

#[test]
fn exact_orbit_identity() {
    let mut rng = substream(31, 0);
    for _ in 0..50 {
        let s = sample_haar_state(1, &mut rng).unwrap();
        assert!((orbit_average_exact(&s).unwrap().mean_flatness - rhs(&s)).abs() < 1e-10);
    }
    for _ in 0..10 {
        let s = sample_haar_state(2, &mut rng).unwrap();
        assert!((orbit_average_exact(&s).unwrap().mean_flatness - rhs(&s)).abs() < 1e-10);
    }
}

#[test]
fn exact_estimate_recovers_m2() {
    let t = Statevector::bloch(FRAC_PI_2, FRAC_PI_4);
    let e = orbit_average_exact(&t).unwrap();
    assert!((e.m2_estimate - (4.0f64 / 3.0).log2()).abs() < 1e-12);
    assert_eq!(e.std_error, 0.0);
    assert!(orbit_average_exact(&Statevector::zero(3).unwrap()).is_err());
}

#[test]
fn protocols_agree() {
    let s = sample_haar_state(4, &mut substream(32, 0)).unwrap();
    let target = rhs(&s);
    let mut means = Vec::new();
    for (k, p) in [Protocol::Global, Protocol::LocalWalk, Protocol::LayerWalk].into_iter().enumerate() {
        let cfg = McConfig { chains: 4, burn_in: 50, ..McConfig::new(p, 12_000, 33 + k as u64) };
        let e = orbit_average_mc(&s, &cfg).unwrap();
        assert!((e.mean_flatness - target).abs() <= 4.0 * e.std_error, "{p}: {} vs {target}", e.mean_flatness);
        means.push(e);
    }
    for a in 0..3 {
        for b in a + 1..3 {
            let (x, y) = (&means[a], &means[b]);
            let se = (x.std_error.powi(2) + y.std_error.powi(2)).sqrt();
            assert!((x.mean_flatness - y.mean_flatness).abs() <= 4.0 * se);
        }
    }
}

#[test]
fn moment_identities_on_orbit() {
    for n in 3..=4 {
        let d = (1usize << n) as f64;
        let s = sample_haar_state(n, &mut substream(34, n as u64)).unwrap();
        let cfg = McConfig::new(Protocol::Global, 10_000, 35 + n as u64);
        let i3 = orbit_samples(&s, &cfg, |x| ipr(x, 3.0).unwrap()).unwrap();
        let i22 = orbit_samples(&s, &cfg, |x| ipr(x, 2.0).unwrap().powi(2)).unwrap();
        let (m3, se3) = mean_and_std_error(&i3);
        let (m22, se22) = mean_and_std_error(&i22);
        assert!((m3 - 6.0 / ((d + 1.0) * (d + 2.0))).abs() <= 3.0 * se3);
        let want = (4.0 + 2.0 * d * xi_norm(&s)) / ((d + 1.0) * (d + 2.0));
        assert!((m22 - want).abs() <= 3.0 * se22, "N={n}: {m22} vs {want} ± {se22}");
    }
}

#[test]
fn std_error_shrinks_with_samples() {
    let s = sample_haar_state(3, &mut substream(36, 0)).unwrap();
    let errs: Vec<f64> = [200usize, 800, 3200, 12_800]
        .iter()
        .map(|&n| orbit_average_mc(&s, &McConfig::new(Protocol::Global, n, 37)).unwrap().m2_std_error)
        .collect();
    for w in errs.windows(2) {
        assert!(w[1] < w[0], "{errs:?}");
    }
    // ~1/√n: four-fold samples roughly halve the error
    let ratio = errs[0] / errs[3];
    assert!(ratio > 5.0 && ratio < 12.0, "{ratio}");
}

#[test]
fn determinism_and_seed_sensitivity() {
    let s = sample_haar_state(3, &mut substream(38, 0)).unwrap();
    for p in [Protocol::Global, Protocol::LocalWalk, Protocol::LayerWalk] {
        let cfg = McConfig { chains: 3, ..McConfig::new(p, 300, 5) };
        let a = orbit_average_mc(&s, &cfg).unwrap();
        let b = orbit_average_mc(&s, &cfg).unwrap();
        assert_eq!(a, b);
        let c = orbit_average_mc(&s, &McConfig { seed: 6, ..cfg }).unwrap();
        assert_ne!(a.mean_flatness, c.mean_flatness);
    }
}

#[test]
fn results_independent_of_thread_count() {
    let s = sample_haar_state(4, &mut substream(39, 0)).unwrap();
    let cfg = McConfig::new(Protocol::Global, 2000, 7);
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| orbit_average_mc(&s, &cfg).unwrap());
    let b = four.install(|| orbit_average_mc(&s, &cfg).unwrap());
    assert_eq!(a, b);
    let acc = AccuracyConfig::new(Protocol::Global, 0.2, 8);
    let x = one.install(|| samples_to_accuracy(&s, &acc).unwrap());
    let y = four.install(|| samples_to_accuracy(&s, &acc).unwrap());
    assert_eq!(x, y);
}

#[test]
fn estimator_edge_cases() {
    let e = estimate_m2(1.0, 0.01, 4).unwrap();
    assert!(e.out_of_range && e.m2.is_infinite());
    assert!(estimate_m2(0.01, -1.0, 4).is_err());
    assert!(estimate_m2(0.01, 0.0, 1).is_err());
    let samples: Vec<f64> = (0..400).map(|i| 1.0 / 24.0 + 1e-3 * ((i % 7) as f64 - 3.0)).collect();
    let jk = jackknife_m2(&samples, 2).unwrap();
    let (m, se) = mean_and_std_error(&samples);
    let delta = estimate_m2(m, se, 2).unwrap();
    assert!((jk.m2 - delta.m2).abs() < 1e-3);
    assert!((jk.std_error / delta.std_error - 1.0).abs() < 0.05);
}

#[test]
fn accuracy_run_hits_target() {
    let t = Statevector::bloch(FRAC_PI_2, FRAC_PI_4).tensor_power(3).unwrap();
    let sc = samples_to_accuracy(&t, &AccuracyConfig::new(Protocol::Global, 0.1, 9)).unwrap();
    assert!(!sc.saturated);
    assert!(sc.m2_std_error < 0.1);
    let capped = AccuracyConfig { max_samples: 64, ..AccuracyConfig::new(Protocol::Global, 1e-6, 9) };
    let sc = samples_to_accuracy(&t, &capped).unwrap();
    assert!(sc.saturated);
    assert_eq!(sc.n_samples, 64);
}

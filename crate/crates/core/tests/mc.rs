use bergman_core::integrals::kernel_mass;
use bergman_core::mc::{cache_samples, integrate_real, load_samples};
use bergman_core::{Bergman, Domain, DomainPoint, Error, McConfig, McMethod, SampleSet, C64};
use std::fs;

fn domain(s: &str) -> Domain {
    s.parse().unwrap()
}

/// One-dimensional kernel mass on the disc, summed as a power series.
fn disc_mass(t: f64) -> f64 {
    let s = t * t;
    (0..2000).map(|k| s.powi(k) / (k as f64 + 1.0)).sum()
}

#[test]
fn series_oracle_matches_closed_form() {
    for (t, frozen) in [(0.3, 1.0478964385693477), (0.6, 1.2396863961900542), (0.9, 2.0502854405205566)] {
        assert!((disc_mass(t) - frozen).abs() < 1e-13);
    }
}

#[test]
fn polydisc_kernel_mass_matches_series() {
    let cfg = McConfig::new(21, 1_000_000);
    for n in [1usize, 2] {
        let b = Bergman::new(Domain::polydisc(n).unwrap());
        for t in [0.3, 0.6, 0.9] {
            let z = DomainPoint::from_reals(&vec![t; n]);
            let e = kernel_mass(&b, &z, &cfg).unwrap();
            let exact = disc_mass(t).powi(n as i32);
            assert!(e.agrees_with(exact, 3.0, 0.0), "D({n}) t={t}: {} ± {} vs {exact}", e.value, e.std_error);
        }
    }
    let b = Bergman::new(domain("D(1)"));
    assert_eq!(kernel_mass(&b, &[C64::new(0.0, 0.0)], &cfg).unwrap().value, 1.0);
}

#[test]
fn methods_agree_on_smooth_integrands() {
    let d = domain("II(2)");
    for k in 0..10 {
        let a = 0.3 * k as f64;
        let f = move |w: &[C64]| -> bergman_core::Result<f64> {
            let r: f64 = w.iter().map(|x| x.norm_sqr()).sum();
            Ok((-a * r).exp() * (1.0 + 0.5 * (w[0] * (k as f64 + 1.0)).re.cos()) + w[2].im * k as f64)
        };
        let plain = integrate_real(&d, f, &McConfig::new(100 + k, 100_000)).unwrap();
        for m in [McMethod::Importance, McMethod::Stratified] {
            let other = integrate_real(&d, f, &McConfig::new(200 + k, 100_000).with_method(m)).unwrap();
            let se = plain.std_error.hypot(other.std_error);
            assert!((plain.value - other.value).abs() <= 4.0 * se, "{m} integrand {k}: {} vs {}", plain.value, other.value);
        }
    }
}

#[test]
fn estimates_are_bitwise_reproducible_across_thread_counts() {
    let d = domain("IV(3)");
    let b = Bergman::new(d);
    let z = d.test_path(0.7, 0.7).unwrap();
    for m in [McMethod::Plain, McMethod::Importance, McMethod::Stratified] {
        let base = McConfig::new(5, 30_000).with_method(m);
        let one = kernel_mass(&b, &z, &base.clone().with_threads(1)).unwrap();
        for threads in [2, 3, 8] {
            let many = kernel_mass(&b, &z, &base.clone().with_threads(threads)).unwrap();
            assert_eq!(one.value.to_bits(), many.value.to_bits(), "{m} with {threads} threads");
            assert_eq!(one.std_error.to_bits(), many.std_error.to_bits());
        }
    }
}

#[test]
fn cache_roundtrip_and_reuse() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ii2.bin");
    let d = domain("II(2)");
    let cfg = McConfig::new(17, 5_000).with_method(McMethod::Importance);
    let written = cache_samples(&d, &cfg, &path).unwrap();
    let read = load_samples(&path).unwrap();
    assert_eq!(written, read);
    assert_eq!(read.len(), 5_000);
    assert_eq!(fs::metadata(&path).unwrap().len(), 16 + 48 + 5_000 * 3 * 16);

    let b = Bergman::new(d);
    let z = d.test_path(0.6, 0.6).unwrap();
    let fresh = kernel_mass(&b, &z, &cfg).unwrap();
    let cached = kernel_mass(&b, &z, &cfg.clone().with_cache(&path)).unwrap();
    assert_eq!(fresh.value.to_bits(), cached.value.to_bits());
    assert_eq!(fresh.std_error.to_bits(), cached.std_error.to_bits());
}

#[test]
fn cache_is_created_on_first_use() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d2.bin");
    let d = domain("D(2)");
    let cfg = McConfig::new(3, 2_000).with_cache(&path);
    let b = Bergman::new(d);
    let z = DomainPoint::from_reals(&[0.5, 0.1]);
    let first = kernel_mass(&b, &z, &cfg).unwrap();
    assert!(path.exists());
    let second = kernel_mass(&b, &z, &cfg).unwrap();
    assert_eq!(first, second);
}

#[test]
fn cache_rejects_wrong_kind_truncation_and_garbage() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("iv3.bin");
    cache_samples(&domain("IV(3)"), &McConfig::new(1, 100), &path).unwrap();
    assert!(matches!(SampleSet::load(&path, Some(&domain("II(2)"))), Err(Error::Cache(_))));
    assert!(SampleSet::load(&path, Some(&domain("IV(3)"))).is_ok());

    let bytes = fs::read(&path).unwrap();
    let short = dir.path().join("short.bin");
    fs::write(&short, &bytes[..bytes.len() - 8]).unwrap();
    assert!(matches!(load_samples(&short), Err(Error::Cache(_))));
    fs::write(&short, &bytes[..20]).unwrap();
    assert!(matches!(load_samples(&short), Err(Error::Cache(_))));

    let mut bad = bytes.clone();
    bad[0] = b'X';
    fs::write(&short, &bad).unwrap();
    assert!(matches!(load_samples(&short), Err(Error::Cache(_))));

    let mut version = bytes;
    version[8] = 99;
    fs::write(&short, &version).unwrap();
    assert!(matches!(load_samples(&short), Err(Error::Cache(_))));
}

#[test]
fn non_finite_integrand_aborts() {
    let d = domain("D(1)");
    let r = integrate_real(&d, |w| Ok(if w[0].re > 0.9 { f64::INFINITY } else { 1.0 }), &McConfig::new(1, 50_000));
    assert!(matches!(r, Err(Error::NonFinite { .. })));
}

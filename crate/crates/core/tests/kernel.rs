use bergman_core::integrals::bergman_project;
use bergman_core::scenario::{gradient_identity, trace_zz};
use bergman_core::{Bergman, BuiltinForm, Domain, FormFn, McConfig, C64};
use proptest::prelude::*;
use std::f64::consts::PI;

const ALL: [&str; 10] = ["I(2,2)", "I(2,3)", "I(1,2)", "II(2)", "II(3)", "III(4)", "IV(3)", "IV(4)", "D(2)", "B(3)"];

fn domain(s: &str) -> Domain {
    s.parse().unwrap()
}

#[test]
fn metric_matches_finite_differences() {
    for s in ALL {
        let d = domain(s);
        let b = Bergman::new(d);
        for z in d.sample_uniform(3, 50).unwrap() {
            // keep clear of the boundary where the difference step dominates
            let z: Vec<C64> = z.iter().map(|w| w * 0.9).collect();
            let m = b.metric_at(&z).unwrap();
            let fd = b.metric_finite_difference(&z).unwrap();
            let scale = m.g.as_slice().iter().map(|x| x.norm()).fold(0.0, f64::max);
            assert!(m.g.max_abs_diff(&fd) / scale < 1e-4, "{s}: {}", m.g.max_abs_diff(&fd) / scale);
            let id = m.g_inv.mul(&fd);
            assert!(id.max_abs_diff(&bergman_core::CMat::identity(z.len())) < 1e-4, "{s}");
        }
    }
}

#[test]
fn metric_is_hermitian_positive() {
    for s in ALL {
        let d = domain(s);
        let b = Bergman::new(d);
        for z in d.sample_uniform(4, 20).unwrap() {
            let m = b.metric_at(&z).unwrap();
            assert!(m.g.max_abs_diff(&m.g.adjoint()) < 1e-9 * (1.0 + m.g.spectral_norm()), "{s}");
            assert!(m.g.cholesky().is_some(), "{s}");
        }
    }
}

#[test]
fn dbar_log_kernel_matches_finite_differences() {
    for s in ALL {
        let d = domain(s);
        let b = Bergman::new(d);
        for z in d.sample_uniform(8, 50).unwrap() {
            let z: Vec<C64> = z.iter().map(|w| w * 0.9).collect();
            let exact = b.dbar_log_kernel(&z).unwrap();
            let fd = b.dbar_log_kernel_finite_difference(&z).unwrap();
            let scale = exact.iter().map(|x| x.norm()).fold(1.0, f64::max);
            for (a, c) in exact.iter().zip(&fd) {
                assert!((a - c).norm() / scale < 1e-6, "{s}: {a} vs {c}");
            }
        }
    }
}

#[test]
fn gradient_identity_constants() {
    for (s, c) in [("I(2,2)", 16.0), ("I(2,3)", 25.0), ("II(2)", 9.0), ("IV(3)", 36.0), ("IV(4)", 64.0)] {
        let g = gradient_identity(&domain(s), 42, 100).unwrap();
        assert_eq!(g.expected, Some(c));
        assert!(g.max_relative_error() <= 1e-8, "{s}: {}", g.max_relative_error());
    }
    let iii = gradient_identity(&domain("III(4)"), 42, 100).unwrap();
    assert_eq!(iii.expected, None);
    assert!(iii.max_relative_error() <= 1e-8);
    assert!((iii.measured() - 9.0).abs() < 1e-6, "III(4) constant {}", iii.measured());
}

#[test]
fn formnorm_of_dbar_log_kernel_on_path() {
    let d = domain("I(2,2)");
    let b = Bergman::new(d);
    let z = d.test_path(0.3, 0.3).unwrap();
    assert!((trace_zz(&d, &z).unwrap() - 0.18).abs() < 1e-15);
    assert!((b.form_norm_sq(&z, &BuiltinForm::DbarLogK).unwrap() - 2.88).abs() < 1e-12);
}

#[test]
fn disc_kernel_closed_form() {
    let b = Bergman::new(domain("D(1)"));
    let (z, w) = (C64::new(0.3, 0.1), C64::new(-0.2, 0.5));
    let expect = 1.0 / (PI * (1.0 - z * w.conj()).powi(2));
    assert!((b.kernel(&[z], &[w]).unwrap().value - expect).norm() < 1e-14);
}

#[test]
fn reproducing_property() {
    let cfg = McConfig::new(9, 200_000);
    for s in ["II(2)", "IV(3)", "D(2)", "B(2)", "I(2,2)"] {
        let d = domain(s);
        let b = Bergman::new(d);
        let z = &d.sample_uniform(1, 1).unwrap()[0];
        let z: Vec<C64> = z.iter().map(|w| w * 0.5).collect();
        let one = bergman_project(&b, |_| C64::new(1.0, 0.0), &z, &cfg).unwrap();
        assert!((one.value - 1.0).norm() <= 4.0 * one.std_error + 2e-3, "{s}: P[1] = {}", one.value);
        let first = bergman_project(&b, |w| w[0], &z, &cfg).unwrap();
        assert!((first.value - z[0]).norm() <= 4.0 * first.std_error + 2e-3, "{s}: P[w1] = {} vs {}", first.value, z[0]);
    }
}

#[test]
fn projection_of_radial_log_on_disc() {
    let d = domain("D(1)");
    let b = Bergman::new(d);
    let cfg = McConfig::new(3, 400_000);
    for z in [C64::new(0.0, 0.0), C64::new(0.4, -0.3)] {
        let p = bergman_project(&b, |w| C64::new((1.0 - w[0].norm_sqr()).ln(), 0.0), &[z], &cfg).unwrap();
        assert!((p.value + 1.0).norm() <= 4.0 * p.std_error, "{z}: {}", p.value);
    }
}

#[test]
fn custom_form_norm() {
    let d = domain("D(1)");
    let b = Bergman::new(d);
    let f = FormFn(|_: &[C64]| vec![C64::new(1.0, 0.0)]);
    let z = [C64::new(0.6, 0.0)];
    // |dz̄|^2 = (1 - |z|^2)^2 / 2 for the normalised disc metric
    assert!((b.form_norm_sq(&z, &f).unwrap() - 0.64f64.powi(2) / 2.0).abs() < 1e-15);
}

fn cartan() -> impl Strategy<Value = Domain> {
    prop::sample::select(vec!["I(2,2)", "I(2,3)", "II(2)", "II(3)", "III(4)", "III(5)", "IV(3)", "IV(5)", "D(3)", "B(2)"])
        .prop_map(domain)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_is_hermitian_symmetric(d in cartan(), seed in 0u64..10_000) {
        let b = Bergman::new(d);
        let pts = d.sample_uniform(seed, 2).unwrap();
        let kzw = b.kernel(&pts[0], &pts[1]).unwrap().value;
        let kwz = b.kernel(&pts[1], &pts[0]).unwrap().value;
        prop_assert!((kzw - kwz.conj()).norm() <= 1e-10 * kzw.norm());
    }

    #[test]
    fn diagonal_kernel_is_real_and_log_consistent(d in cartan(), seed in 0u64..10_000) {
        let b = Bergman::new(d);
        let z = &d.sample_uniform(seed, 1).unwrap()[0];
        let k = b.kernel(z, z).unwrap();
        prop_assert!(k.value.im.abs() <= 1e-10 * k.value.re);
        prop_assert!((k.log_modulus - b.log_kernel_diag(z).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn cauchy_schwarz(d in cartan(), seed in 0u64..10_000) {
        let b = Bergman::new(d);
        let pts = d.sample_uniform(seed, 2).unwrap();
        let lhs = 2.0 * b.kernel(&pts[0], &pts[1]).unwrap().log_modulus;
        let rhs = b.log_kernel_diag(&pts[0]).unwrap() + b.log_kernel_diag(&pts[1]).unwrap();
        prop_assert!(lhs <= rhs + 1e-9);
    }
}

use bergman_core::rng::{Purpose, StreamKey};
use bergman_core::{Domain, DomainKind, C64};
use proptest::prelude::*;
use std::f64::consts::PI;

fn factorials_product(k: usize) -> f64 {
    // 1! 2! ... (k-1)!
    (1..k).map(|j| (1..=j).map(|i| i as f64).product::<f64>()).product()
}

/// Hua's volume of the `m x n` matrix ball.
fn hua_type_i(m: usize, n: usize) -> f64 {
    PI.powi((m * n) as i32) * factorials_product(m) * factorials_product(n) / factorials_product(m + n)
}

#[test]
fn reference_volumes_match_closed_forms() {
    let cases = [
        (Domain::type_ii(2).unwrap(), PI.powi(3) / 6.0),
        (Domain::type_i(2, 2).unwrap(), PI.powi(4) / 12.0),
        (Domain::type_i(2, 3).unwrap(), hua_type_i(2, 3)),
        (Domain::type_i(1, 3).unwrap(), PI.powi(3) / 6.0),
        (Domain::type_iv(3).unwrap(), PI.powi(3) / (4.0 * 6.0)),
        (Domain::type_iv(4).unwrap(), PI.powi(4) / (8.0 * 24.0)),
    ];
    for (d, exact) in cases {
        let v = d.reference_volume();
        assert!((v.value - exact).abs() <= 4.0 * v.std_error + 1e-12 * exact, "{d}: {} vs {exact} (se {})", v.value, v.std_error);
        assert!(v.std_error / v.value < 5e-3, "{d}");
    }
    assert!((hua_type_i(2, 2) - PI.powi(4) / 12.0).abs() < 1e-12);
}

#[test]
fn type_ii_acceptance_rate() {
    let d = Domain::type_ii(2).unwrap();
    let key = StreamKey::new(7, Purpose::Uniform);
    let mut z = vec![C64::new(0.0, 0.0); 3];
    let n = 20_000u64;
    let tries: u64 = (0..n).map(|i| d.uniform_point(&key, i, &mut z)).sum();
    let rate = n as f64 / tries as f64;
    // v(II(2)) = π^3/6 inside the ellipsoid |z11|^2 + |z22|^2 + 2|z12|^2 < 2 of
    // volume 2π^3/3
    let p = 0.25;
    let se = (p * (1.0 - p) / tries as f64).sqrt();
    assert!((rate - p).abs() < 3.0 * se, "rate {rate}");
}

#[test]
fn uniform_points_are_inside_and_reproducible() {
    for s in ["I(2,3)", "II(2)", "III(4)", "IV(3)", "D(2)", "B(3)"] {
        let d: Domain = s.parse().unwrap();
        let a = d.sample_uniform(11, 200).unwrap();
        let b = d.sample_uniform(11, 200).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|z| d.contains(z).unwrap()), "{s}");
        assert_ne!(a, d.sample_uniform(12, 200).unwrap());
    }
}

/// Dual of the Lie norm: `sqrt((|u|^2 + |u.u|) / 2)`.
fn lie_dual(u: &[C64]) -> f64 {
    let n2: f64 = u.iter().map(|x| x.norm_sqr()).sum();
    let q: C64 = u.iter().map(|x| x * x).sum();
    ((n2 + q.norm()) / 2.0).sqrt()
}

/// Distance from `z` to the supporting hyperplane of the Lie ball with unit
/// real normal `u`.
fn support_gap(z: &[C64], u: &[C64]) -> f64 {
    let dot: f64 = z.iter().zip(u).map(|(a, b)| (a * b.conj()).re).sum();
    lie_dual(u) - dot
}

fn normalise(u: &mut [C64]) {
    let n = u.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    u.iter_mut().for_each(|x| *x /= n);
}

fn lie_norm(v: &[C64]) -> f64 {
    let n2: f64 = v.iter().map(|x| x.norm_sqr()).sum();
    let q: C64 = v.iter().map(|x| x * x).sum();
    (n2 + (n2 * n2 - q.norm_sqr()).max(0.0).sqrt()).sqrt()
}

fn distance_to_radial_projection(z: &[C64], v: &[C64]) -> f64 {
    let l = lie_norm(v);
    z.iter().zip(v).map(|(a, b)| (a - b / l).norm_sqr()).sum::<f64>().sqrt()
}

/// Distance from `z` to the Lie sphere: minimise `|z - v / L(v)|` by random
/// restarts and a shrinking-step hill climb.
fn boundary_oracle(z: &[C64], seed: u64) -> f64 {
    use rand::{Rng, SeedableRng};
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let n = z.len();
    let mut best = f64::INFINITY;
    for restart in 0..8 {
        let mut v: Vec<C64> = if restart == 0 {
            z.to_vec()
        } else {
            (0..n).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect()
        };
        let mut f = distance_to_radial_projection(z, &v);
        let mut step = 0.2;
        while step > 1e-10 {
            let mut improved = false;
            for _ in 0..100 {
                let trial: Vec<C64> = v
                    .iter()
                    .map(|x| x + C64::new(step * (rng.random::<f64>() - 0.5), step * (rng.random::<f64>() - 0.5)))
                    .collect();
                let g = distance_to_radial_projection(z, &trial);
                if g < f {
                    f = g;
                    v = trial;
                    improved = true;
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        best = best.min(f);
    }
    best
}

/// Smallest support gap over random directions, an upper bound on the
/// distance to the boundary of a convex body.
fn support_upper_bound(z: &[C64], seed: u64) -> f64 {
    use rand::{Rng, SeedableRng};
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    (0..20_000)
        .map(|_| {
            let mut u: Vec<C64> = (0..z.len()).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
            normalise(&mut u);
            support_gap(z, &u)
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn lie_ball_distance_matches_boundary_oracle() {
    for n in [3usize, 4] {
        let d = Domain::type_iv(n).unwrap();
        for (i, z) in d.sample_uniform(5, 12).unwrap().iter().enumerate() {
            let closed = d.boundary_distance(z).unwrap();
            assert!(closed <= support_upper_bound(z, i as u64) + 1e-12);
            let oracle = boundary_oracle(z, i as u64);
            assert!((closed - oracle).abs() < 1e-6, "IV({n}) point {i}: {closed} vs {oracle}");
        }
    }
}

#[test]
fn test_path_points_lie_inside() {
    for s in ["I(2,2)", "I(2,4)", "II(2)", "III(4)", "III(5)", "IV(3)", "IV(5)", "D(2)"] {
        let d: Domain = s.parse().unwrap();
        for (t, big_t) in [(0.0, 0.0), (0.5, 0.9), (0.99, 0.99)] {
            let z = d.test_path(t, big_t).unwrap();
            assert!(d.contains(&z).unwrap(), "{s} at ({t}, {big_t})");
        }
        assert!(d.test_path(0.5, 1.0).is_err() || !d.contains(&d.test_path(0.5, 1.0).unwrap()).unwrap());
    }
    assert!("I(3,3)".parse::<Domain>().unwrap().test_path(0.1, 0.2).is_err());
}

fn any_domain() -> impl Strategy<Value = Domain> {
    prop_oneof![
        (1usize..4, 0usize..3).prop_map(|(m, k)| Domain::type_i(m, m + k).unwrap()),
        (1usize..4).prop_map(|n| Domain::type_ii(n).unwrap()),
        (4usize..7).prop_map(|n| Domain::type_iii(n).unwrap()),
        (3usize..7).prop_map(|n| Domain::type_iv(n).unwrap()),
        (1usize..5).prop_map(|n| Domain::polydisc(n).unwrap()),
        (1usize..5).prop_map(|n| Domain::ball(n).unwrap()),
    ]
}

proptest! {
    #[test]
    fn descriptor_roundtrip(d in any_domain()) {
        let again: Domain = d.to_string().parse().unwrap();
        prop_assert_eq!(again, d);
        prop_assert_eq!(again.to_string(), d.to_string());
    }

    #[test]
    fn characteristics_are_consistent(d in any_domain()) {
        let c = d.characteristics();
        prop_assert_eq!(c.dim, d.dim());
        prop_assert!((c.lambda - c.genus as f64 * c.k).abs() < 1e-15);
        if !matches!(d.kind(), DomainKind::Polydisc { .. } | DomainKind::Ball { .. }) {
            // dimension formula N = r + r(r-1)a/2 + r b for the tube and non-tube cases
            prop_assert!(c.dim >= c.rank + c.rank * (c.rank - 1) * c.multiplicity / 2);
        }
    }

    #[test]
    fn gauge_scales_linearly(d in any_domain(), seed in 0u64..1000, s in 0.05f64..0.95) {
        let z = &d.sample_uniform(seed, 1).unwrap()[0];
        let g = d.gauge(z).unwrap();
        let scaled: Vec<C64> = z.iter().map(|w| w * s).collect();
        prop_assert!((d.gauge(&scaled).unwrap() - s * g).abs() < 1e-12);
        prop_assert!(d.contains(&scaled).unwrap());
        let out: Vec<C64> = z.iter().map(|w| w * (1.0001 / g)).collect();
        prop_assert!(!d.contains(&out).unwrap());
    }

    #[test]
    fn matrix_view_roundtrip(d in any_domain(), seed in 0u64..1000) {
        if d.is_matrix_kind() {
            let z = &d.sample_uniform(seed, 1).unwrap()[0];
            let m = d.matrix(z).unwrap();
            prop_assert_eq!(&d.from_matrix(&m).unwrap(), z);
        }
    }

    #[test]
    fn boundary_distance_is_positive_inside(d in any_domain(), seed in 0u64..1000) {
        let z = &d.sample_uniform(seed, 1).unwrap()[0];
        let delta = d.boundary_distance(z).unwrap();
        prop_assert!(delta > 0.0 && delta <= 1.0);
    }
}

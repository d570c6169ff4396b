//! Kernel integrals: Bergman projection, kernel mass, the Forelli-Rudin type
//! integrals `J_{β,c}`, generalised Pochhammer symbols and the canonical
//! solution of the sharpness example.

use crate::domains::{Domain, DomainPoint};
use crate::error::{Error, Result};
use crate::kernel::Bergman;
use crate::linalg::C64;
use crate::mc::{self, McConfig, McEstimate};
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

/// `∫ K(z, w) u(w) dv(w)`.
pub fn bergman_project<F>(b: &Bergman, u: F, z: &[C64], cfg: &McConfig) -> Result<McEstimate<C64>>
where
    F: Fn(&[C64]) -> C64 + Sync,
{
    let d = *b.domain();
    if !d.contains(z)? {
        return Err(Error::OutsideDomain { domain: d.to_string(), detail: "projection point".into() });
    }
    mc::integrate(&d, |w| Ok(b.kernel_unchecked(z, w)?.value * u(w)), cfg)
}

/// `I(z) = ∫ |K(z, w)| dv(w)`.
pub fn kernel_mass(b: &Bergman, z: &[C64], cfg: &McConfig) -> Result<McEstimate> {
    Ok(kernel_mass_grid(b, &[DomainPoint::new(z.to_vec())], cfg)?.remove(0))
}

/// Kernel mass at several points from one shared sample.
pub fn kernel_mass_grid(b: &Bergman, zs: &[DomainPoint], cfg: &McConfig) -> Result<Vec<McEstimate>> {
    Ok(j_integral_grid(b, &[(0.0, 0.0)], zs, cfg)?.remove(0))
}

/// `J_{β,c}(z) = ∫ K(w)^β |K(w, z)|^{1+c-β} dv(w)`.
pub fn j_integral(b: &Bergman, beta: f64, c: f64, z: &[C64], cfg: &McConfig) -> Result<McEstimate> {
    Ok(j_integral_grid(b, &[(beta, c)], &[DomainPoint::new(z.to_vec())], cfg)?.remove(0).remove(0))
}

/// `J_{β,c}` for every `(β, c)` in `params` and every point, from one shared
/// sample; indexed `[param][point]`. Integrands are assembled in log space.
pub fn j_integral_grid(b: &Bergman, params: &[(f64, f64)], zs: &[DomainPoint], cfg: &McConfig) -> Result<Vec<Vec<McEstimate>>> {
    let d = *b.domain();
    for z in zs {
        if !d.contains(z)? {
            return Err(d.outside(z));
        }
    }
    let need_diag = params.iter().any(|&(beta, _)| beta != 0.0);
    let np = zs.len();
    let flat = mc::integrate_many(
        &d,
        params.len() * np,
        |w, out| {
            let log_kw = if need_diag { b.log_kernel_diag(w)? } else { 0.0 };
            for (i, z) in zs.iter().enumerate() {
                let log_kwz = b.kernel_unchecked(w, z)?.log_modulus;
                for (k, &(beta, c)) in params.iter().enumerate() {
                    out[k * np + i] = (beta * log_kw + (1.0 + c - beta) * log_kwz).exp();
                }
            }
            Ok(())
        },
        cfg,
    )?;
    Ok(flat.chunks(np).map(|c| c.to_vec()).collect())
}

/// `|1 - J_{-1,0}(z)|`, the value at `z` of the canonical solution in the
/// sharpness example.
pub fn sharp_canonical_value(b: &Bergman, z: &[C64], cfg: &McConfig) -> Result<McEstimate> {
    let j = j_integral(b, -1.0, 0.0, z, cfg)?;
    Ok(McEstimate { value: (1.0 - j.value).abs(), ..j })
}

/// A signature `m1 >= m2 >= 0` of a rank-two domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Partition2 {
    pub m1: u32,
    pub m2: u32,
}

impl Partition2 {
    pub fn new(m1: u32, m2: u32) -> Result<Self> {
        if m1 < m2 {
            return Err(Error::InvalidArgument(format!("partition needs m1 >= m2, got ({m1}, {m2})")));
        }
        Ok(Self { m1, m2 })
    }

    pub fn size(&self) -> u32 {
        self.m1 + self.m2
    }

    /// All partitions with `m1 <= max_degree`.
    pub fn up_to(max_degree: u32) -> impl Iterator<Item = Partition2> {
        (0..=max_degree).flat_map(|m1| (0..=m1).map(move |m2| Partition2 { m1, m2 }))
    }
}

fn rank_two_multiplicity(d: &Domain) -> Result<f64> {
    let ch = d.characteristics();
    if ch.rank != 2 {
        return Err(Error::InvalidArgument(format!("{d} has rank {}, need rank two", ch.rank)));
    }
    Ok(ch.multiplicity as f64)
}

/// `log (λ)_m` for a rank-two domain.
pub fn log_gamma_omega_ratio(d: &Domain, m: Partition2, lambda: f64) -> Result<f64> {
    let half_a = rank_two_multiplicity(d)? / 2.0;
    if !(lambda > 0.0 && lambda - half_a > 0.0) {
        return Err(Error::InvalidArgument(format!("nonpositive gamma argument for lambda = {lambda}")));
    }
    let (m1, m2) = (m.m1 as f64, m.m2 as f64);
    Ok(ln_gamma(lambda + m1) - ln_gamma(lambda) + ln_gamma(lambda + m2 - half_a) - ln_gamma(lambda - half_a))
}

/// Generalised Pochhammer symbol `(λ)_m = Γ_Ω(λ + m) / Γ_Ω(λ)`.
pub fn gamma_omega_ratio(d: &Domain, m: Partition2, lambda: f64) -> Result<f64> {
    log_gamma_omega_ratio(d, m, lambda).map(f64::exp)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ComparabilityBounds {
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub argmin: Partition2,
    pub argmax: Partition2,
}

/// Extremes over `m1 <= max_degree` of
/// `[(p(1-β)/2)_m^2 / ((1-β)p)_m] / [(p/2)_m^2 / (p)_m]`.
pub fn coefficient_comparability(d: &Domain, beta: f64, max_degree: u32) -> Result<ComparabilityBounds> {
    let p = d.characteristics().genus as f64;
    if !(beta < 1.0 / p) {
        return Err(Error::InvalidArgument(format!("need beta < 1/p = {}", 1.0 / p)));
    }
    if max_degree == 0 {
        return Err(Error::InvalidArgument("max_degree must be at least 1".into()));
    }
    let shifted = p * (1.0 - beta);
    let mut best: Option<ComparabilityBounds> = None;
    for m in Partition2::up_to(max_degree) {
        let log_ratio = 2.0 * log_gamma_omega_ratio(d, m, shifted / 2.0)? - log_gamma_omega_ratio(d, m, shifted)?
            - 2.0 * log_gamma_omega_ratio(d, m, p / 2.0)?
            + log_gamma_omega_ratio(d, m, p)?;
        let r = log_ratio.exp();
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::NumericalGuard(format!("ratio {r} at {m:?}")));
        }
        best = Some(match best {
            None => ComparabilityBounds { min_ratio: r, max_ratio: r, argmin: m, argmax: m },
            Some(mut b) => {
                if r < b.min_ratio {
                    b.min_ratio = r;
                    b.argmin = m;
                }
                if r > b.max_ratio {
                    b.max_ratio = r;
                    b.argmax = m;
                }
                b
            }
        });
    }
    Ok(best.expect("at least one partition"))
}

/// Deterministic kernel mass of the ball `B(n)` at `(t, 0, …, 0)`:
/// `Σ_k ((s)_k / k!)^2 k! n! / (n+k)! t^{2k}` with `s = (n+1)/2`.
pub fn ball_kernel_mass_series(n: usize, t: f64) -> Result<f64> {
    if n == 0 || !(0.0..1.0).contains(&t.abs()) {
        return Err(Error::InvalidArgument(format!("need n >= 1 and |t| < 1, got n={n}, t={t}")));
    }
    let s = (n as f64 + 1.0) / 2.0;
    let t2 = t * t;
    let (mut term, mut sum) = (1.0, 1.0);
    let mut k = 0.0;
    loop {
        term *= ((s + k) / (k + 1.0)).powi(2) * (k + 1.0) / (n as f64 + k + 1.0) * t2;
        sum += term;
        k += 1.0;
        if term < 1e-17 * sum && k > 10.0 {
            return Ok(sum);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pochhammer_examples() {
        let ii = Domain::type_ii(2).unwrap();
        assert!((gamma_omega_ratio(&ii, Partition2::new(0, 0).unwrap(), 3.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((gamma_omega_ratio(&ii, Partition2::new(1, 0).unwrap(), 3.0).unwrap() - 3.0).abs() < 1e-12);
        assert!((gamma_omega_ratio(&ii, Partition2::new(1, 1).unwrap(), 3.0).unwrap() - 7.5).abs() < 1e-12);
        assert!(Partition2::new(0, 1).is_err());
        assert!(gamma_omega_ratio(&Domain::type_ii(3).unwrap(), Partition2::new(1, 0).unwrap(), 3.0).is_err());
    }

    #[test]
    fn comparability_is_trivial_at_zero() {
        let b = coefficient_comparability(&Domain::type_ii(2).unwrap(), 0.0, 20).unwrap();
        assert!((b.min_ratio - 1.0).abs() < 1e-12 && (b.max_ratio - 1.0).abs() < 1e-12);
        assert!(coefficient_comparability(&Domain::type_ii(2).unwrap(), 0.5, 20).is_err());
    }

    #[test]
    fn ball_series_reduces_to_disc() {
        for t in [0.0f64, 0.3, 0.9] {
            let disc = if t == 0.0 { 1.0 } else { -(1.0 - t * t).ln() / (t * t) };
            assert!((ball_kernel_mass_series(1, t).unwrap() - disc).abs() < 1e-13);
        }
    }
}

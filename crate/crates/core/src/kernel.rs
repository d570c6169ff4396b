//! Closed-form Bergman kernels, the Bergman-type metric and norms of
//! (0,1)-forms.
//!
//! The metric returned by [`Bergman::metric_at`] is the complex Hessian of
//! `log K / scale` where `scale` is [`Bergman::metric_scale`]: the kernel
//! exponent for matrix kinds, `2n` for the Lie ball and 1 for the polydisc and
//! the ball. In this normalisation the inverse metric of the matrix kinds and
//! the Lie ball has the polynomial closed forms implemented below.

use crate::domains::{lie_quantities, norm_sqr, Domain, DomainKind, DomainPoint};
use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};
use crate::rng::{Purpose, StreamKey};
use rayon::prelude::*;
use serde::Serialize;

/// Finite-difference step for cross-validation derivatives.
pub const FD_STEP: f64 = 1e-4;
/// Diagonal points `t = T` added to sampled sup-norm searches on rank-two kinds.
pub const SUP_NORM_PATH_POINTS: [f64; 3] = [0.9, 0.99, 0.999];

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KernelValue {
    pub value: C64,
    /// `log |value|`, computed without forming `value`.
    pub log_modulus: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMetricAt {
    /// `g[j][k]` pairs `dz_j` with `dz̄_k`.
    pub g: CMat,
    pub g_inv: CMat,
}

/// Kernel, metric and form norms of one domain.
#[derive(Clone, Copy, Debug)]
pub struct Bergman {
    domain: Domain,
    log_c: f64,
    lambda: f64,
}

impl Bergman {
    /// Kernel normalised by the shared reference volume.
    pub fn new(domain: Domain) -> Self {
        Self::with_volume(domain, domain.reference_volume().value)
    }

    pub fn with_volume(domain: Domain, volume: f64) -> Self {
        Self { domain, log_c: -volume.ln(), lambda: domain.characteristics().lambda }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// `log C` with `C = 1/volume`.
    pub fn log_normalisation(&self) -> f64 {
        self.log_c
    }

    /// Ratio between the Bergman metric and [`Bergman::metric_at`].
    pub fn metric_scale(&self) -> f64 {
        match self.domain.kind() {
            DomainKind::TypeIV { n } => 2.0 * n as f64,
            DomainKind::Polydisc { .. } | DomainKind::Ball { .. } => 1.0,
            _ => self.lambda,
        }
    }

    fn require_inside(&self, z: &[C64]) -> Result<()> {
        if !self.domain.contains(z)? {
            return Err(self.domain.outside(z));
        }
        Ok(())
    }

    /// The base `h(z, w)` with `K = C h^(-lambda)`.
    pub(crate) fn base(&self, z: &[C64], w: &[C64]) -> C64 {
        match self.domain.kind() {
            DomainKind::Polydisc { .. } => z.iter().zip(w).map(|(a, b)| 1.0 - a * b.conj()).product(),
            DomainKind::Ball { .. } => 1.0 - z.iter().zip(w).map(|(a, b)| a * b.conj()).sum::<C64>(),
            DomainKind::TypeIV { .. } => {
                let inner: C64 = z.iter().zip(w).map(|(a, b)| a * b.conj()).sum();
                let sz: C64 = z.iter().map(|a| a * a).sum();
                let sw: C64 = w.iter().map(|a| a * a).sum();
                1.0 - 2.0 * inner + sz * sw.conj()
            }
            _ => {
                let zm = self.domain.matrix(z).expect("dimension checked");
                let wm = self.domain.matrix(w).expect("dimension checked");
                zm.identity_minus_mul_adjoint(&wm).det()
            }
        }
    }

    /// `K(z, w)` without membership checks; the caller guarantees both
    /// points lie in the domain.
    pub fn kernel_unchecked(&self, z: &[C64], w: &[C64]) -> Result<KernelValue> {
        let h = self.base(z, w);
        if !(h.norm() > 0.0) || !h.is_finite() {
            return Err(Error::NumericalGuard(format!("kernel base h = {h}")));
        }
        // The exponent is an integer for every supported kind, so the branch
        // of log h does not matter.
        let log_h = h.ln();
        let log_modulus = self.log_c - self.lambda * log_h.re;
        let phase = -self.lambda * log_h.im;
        Ok(KernelValue { value: C64::from_polar(log_modulus.exp(), phase), log_modulus })
    }

    pub fn kernel(&self, z: &[C64], w: &[C64]) -> Result<KernelValue> {
        self.require_inside(z)?;
        self.require_inside(w)?;
        self.kernel_unchecked(z, w)
    }

    /// `log K(z, z)` from log-determinants.
    pub fn log_kernel_diag(&self, z: &[C64]) -> Result<f64> {
        self.domain.check_dim(z)?;
        let log_h = match self.domain.kind() {
            DomainKind::Polydisc { .. } => {
                if z.iter().any(|w| w.norm_sqr() >= 1.0) {
                    return Err(self.domain.outside(z));
                }
                z.iter().map(|w| (1.0 - w.norm_sqr()).ln()).sum()
            }
            DomainKind::Ball { .. } => {
                let r = 1.0 - norm_sqr(z);
                if r <= 0.0 {
                    return Err(self.domain.outside(z));
                }
                r.ln()
            }
            DomainKind::TypeIV { .. } => {
                let (r, s) = lie_quantities(z);
                if !(r > 0.0 && s.norm_sqr() < 1.0) {
                    return Err(self.domain.outside(z));
                }
                r.ln()
            }
            _ => {
                let m = self.domain.matrix(z)?;
                m.identity_minus_mul_adjoint(&m).hermitian_logdet().ok_or_else(|| self.domain.outside(z))?
            }
        };
        Ok(self.log_c - self.lambda * log_h)
    }

    /// Metric and inverse metric at `z` from the closed-form inverse.
    pub fn metric_at(&self, z: &[C64]) -> Result<HermitianMetricAt> {
        self.require_inside(z)?;
        let g_inv = self.inverse_metric(z);
        let g = g_inv
            .inverse()
            .ok_or_else(|| Error::NumericalGuard(format!("singular inverse metric at {z:?}")))?;
        if g_inv.cholesky().is_none() {
            return Err(Error::NumericalGuard(format!("inverse metric not positive definite at {z:?}")));
        }
        Ok(HermitianMetricAt { g, g_inv })
    }

    fn inverse_metric(&self, z: &[C64]) -> CMat {
        let n = z.len();
        match self.domain.kind() {
            DomainKind::Polydisc { .. } => {
                CMat::from_fn(n, n, |j, k| if j == k { C64::new(0.5 * (1.0 - z[j].norm_sqr()).powi(2), 0.0) } else { C64::new(0.0, 0.0) })
            }
            DomainKind::Ball { .. } => {
                let c = (1.0 - norm_sqr(z)) / (n as f64 + 1.0);
                CMat::from_fn(n, n, |j, k| c * (if j == k { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) } - z[j].conj() * z[k]))
            }
            DomainKind::TypeIV { .. } => {
                let (r, s) = lie_quantities(z);
                let table = |j: usize, k: usize| {
                    let delta = if j == k { 1.0 } else { 0.0 };
                    r * (delta - 2.0 * z[j] * z[k].conj())
                        + 2.0 * (z[j].conj() - s.conj() * z[j]) * (z[k] - s * z[k].conj())
                };
                CMat::from_fn(n, n, |a, b| table(b, a))
            }
            DomainKind::TypeI { .. } => {
                let zm = self.domain.matrix(z).expect("dimension checked");
                let v = zm.identity_minus_mul_adjoint(&zm);
                let zt = zm.transpose();
                let w = zt.identity_minus_mul_adjoint(&zt);
                let entries = self.domain.coordinate_entries();
                CMat::from_fn(n, n, |a, b| {
                    let ((j, al), (k, be)) = (entries[b], entries[a]);
                    v[(j, k)] * w[(al, be)]
                })
            }
            DomainKind::TypeII { .. } | DomainKind::TypeIII { .. } => {
                let symmetric = matches!(self.domain.kind(), DomainKind::TypeII { .. });
                let zm = self.domain.matrix(z).expect("dimension checked");
                let v = zm.identity_minus_mul_adjoint(&zm);
                let entry = |j: usize, al: usize, k: usize, be: usize| -> C64 {
                    let d = |x: usize, y: usize| if x == y { 1.0 } else { 0.0 };
                    if symmetric {
                        v[(j, k)] * v[(al, be)] / ((2.0 - d(j, al)) * (2.0 - d(k, be)))
                    } else {
                        0.25 * v[(j, k)] * v[(al, be)] * (1.0 - d(j, al)) * (1.0 - d(k, be))
                    }
                };
                let orbit = |(i, j): (usize, usize)| -> Vec<(usize, usize, f64)> {
                    if i == j {
                        vec![(i, j, 1.0)]
                    } else {
                        vec![(i, j, 1.0), (j, i, if symmetric { 1.0 } else { -1.0 })]
                    }
                };
                let entries = self.domain.coordinate_entries();
                let table = |a: usize, b: usize| -> C64 {
                    let mut s = C64::new(0.0, 0.0);
                    for (j, al, sa) in orbit(entries[a]) {
                        for (k, be, sb) in orbit(entries[b]) {
                            s += sa * sb * entry(j, al, k, be);
                        }
                    }
                    s
                };
                CMat::from_fn(n, n, |a, b| table(b, a))
            }
        }
    }

    /// `log K(z) / scale`, the potential of [`Bergman::metric_at`].
    fn potential(&self, z: &[C64]) -> Result<f64> {
        Ok(self.log_kernel_diag(z)? / self.metric_scale())
    }

    /// Metric from central differences of the potential with one Richardson
    /// step. Cross-validation only.
    pub fn metric_finite_difference(&self, z: &[C64]) -> Result<CMat> {
        self.require_inside(z)?;
        let n = z.len();
        let mixed = |a: usize, da: C64, b: usize, db: C64, h: f64| -> Result<f64> {
            let eval = |sa: f64, sb: f64| -> Result<f64> {
                let mut y = z.to_vec();
                y[a] += sa * h * da;
                y[b] += sb * h * db;
                self.potential(&y)
            };
            Ok((eval(1.0, 1.0)? - eval(1.0, -1.0)? - eval(-1.0, 1.0)? + eval(-1.0, -1.0)?) / (4.0 * h * h))
        };
        let rich = |a, da, b, db| -> Result<f64> {
            Ok((4.0 * mixed(a, da, b, db, FD_STEP / 2.0)? - mixed(a, da, b, db, FD_STEP)?) / 3.0)
        };
        let (one, i) = (C64::new(1.0, 0.0), C64::new(0.0, 1.0));
        let mut g = CMat::zeros(n, n);
        for j in 0..n {
            for k in 0..n {
                let xx = rich(j, one, k, one)?;
                let yy = rich(j, i, k, i)?;
                let xy = rich(j, one, k, i)?;
                let yx = rich(j, i, k, one)?;
                g[(j, k)] = 0.25 * C64::new(xx + yy, xy - yx);
            }
        }
        Ok(g)
    }

    /// Coefficients of `∂̄ log K` in `dz̄_j`.
    pub fn dbar_log_kernel(&self, z: &[C64]) -> Result<Vec<C64>> {
        self.require_inside(z)?;
        let holo: Vec<C64> = match self.domain.kind() {
            DomainKind::Polydisc { .. } => z.iter().map(|w| 2.0 * w.conj() / (1.0 - w.norm_sqr())).collect(),
            DomainKind::Ball { n } => {
                let c = (n as f64 + 1.0) / (1.0 - norm_sqr(z));
                z.iter().map(|w| c * w.conj()).collect()
            }
            DomainKind::TypeIV { n } => {
                let (r, s) = lie_quantities(z);
                let c = 2.0 * n as f64 / r;
                z.iter().map(|w| c * (w.conj() - w * s.conj())).collect()
            }
            kind => {
                let zm = self.domain.matrix(z)?;
                let v_inv = zm
                    .identity_minus_mul_adjoint(&zm)
                    .inverse()
                    .ok_or_else(|| Error::NumericalGuard("singular I - zz*".into()))?;
                // gradient with respect to the full entry (j, a) is lambda [z* V^-1]_{a j}
                let grad = zm.adjoint().mul(&v_inv);
                let full = |j: usize, a: usize| self.lambda * grad[(a, j)];
                self.domain
                    .coordinate_entries()
                    .into_iter()
                    .map(|(j, a)| match kind {
                        DomainKind::TypeI { .. } => full(j, a),
                        DomainKind::TypeII { .. } if j == a => full(j, a),
                        DomainKind::TypeII { .. } => full(j, a) + full(a, j),
                        _ => full(j, a) - full(a, j),
                    })
                    .collect()
            }
        };
        Ok(holo.into_iter().map(|c| c.conj()).collect())
    }

    /// `∂̄ log K` by central differences of `log K` with one Richardson step.
    pub fn dbar_log_kernel_finite_difference(&self, z: &[C64]) -> Result<Vec<C64>> {
        self.require_inside(z)?;
        let diff = |j: usize, dir: C64, h: f64| -> Result<f64> {
            let mut p = z.to_vec();
            let mut m = z.to_vec();
            p[j] += h * dir;
            m[j] -= h * dir;
            Ok((self.log_kernel_diag(&p)? - self.log_kernel_diag(&m)?) / (2.0 * h))
        };
        let rich = |j, dir| -> Result<f64> { Ok((4.0 * diff(j, dir, FD_STEP / 2.0)? - diff(j, dir, FD_STEP)?) / 3.0) };
        (0..z.len())
            .map(|j| {
                let dx = rich(j, C64::new(1.0, 0.0))?;
                let dy = rich(j, C64::new(0.0, 1.0))?;
                // ∂̄ = (∂x + i ∂y) / 2
                Ok(C64::new(0.5 * dx, 0.5 * dy))
            })
            .collect()
    }

    /// `|f|_g^2 = Σ g^{jk̄} f_k conj(f_j)` with the table convention
    /// `(g^{jk̄})^T = g^{-1}`.
    pub fn form_norm_sq(&self, z: &[C64], f: &dyn OneForm) -> Result<f64> {
        let coeffs = f.coefficients(self, z)?;
        self.norm_sq_of(z, &coeffs)
    }

    pub(crate) fn norm_sq_of(&self, z: &[C64], coeffs: &[C64]) -> Result<f64> {
        if coeffs.len() != z.len() {
            return Err(Error::Dimension { expected: z.len(), got: coeffs.len() });
        }
        self.require_inside(z)?;
        let g_inv = self.inverse_metric(z);
        let mut s = C64::new(0.0, 0.0);
        for (j, fj) in coeffs.iter().enumerate() {
            for (k, fk) in coeffs.iter().enumerate() {
                s += g_inv[(j, k)] * fj * fk.conj();
            }
        }
        Ok(s.re.max(0.0))
    }

    /// Largest `|f|_g` over `samples` uniform points plus diagonal test-path
    /// points near the boundary. A lower bound for the essential supremum.
    pub fn sup_form_norm(&self, f: &dyn OneForm, seed: u64, samples: u64) -> Result<f64> {
        self.sampled_sup(seed, samples, |z| Ok(self.form_norm_sq(z, f)?.sqrt()))
    }

    /// Sampled sup of `|f|_g ∏ (log(2/(1-|z_j|^2)))^p` on the polydisc.
    pub fn weighted_sup_norm(&self, f: &dyn OneForm, p_exp: f64, seed: u64, samples: u64) -> Result<f64> {
        if !matches!(self.domain.kind(), DomainKind::Polydisc { .. }) {
            return Err(Error::InvalidArgument(format!("weighted sup norm needs a polydisc, got {}", self.domain)));
        }
        if !(p_exp > 1.0) {
            return Err(Error::InvalidArgument("weight exponent must exceed 1".into()));
        }
        self.sampled_sup(seed, samples, |z| self.weighted_form_norm(z, f, p_exp))
    }

    /// `|f|_g(z) ∏ (log(2/(1-|z_j|^2)))^p`.
    pub fn weighted_form_norm(&self, z: &[C64], f: &dyn OneForm, p_exp: f64) -> Result<f64> {
        let weight: f64 = z.iter().map(|w| (2.0 / (1.0 - w.norm_sqr())).ln().powf(p_exp)).product();
        Ok(self.form_norm_sq(z, f)?.sqrt() * weight)
    }

    fn sampled_sup(&self, seed: u64, samples: u64, eval: impl Fn(&[C64]) -> Result<f64> + Sync) -> Result<f64> {
        if samples < 1000 {
            return Err(Error::InvalidArgument("sup-norm search needs at least 1e3 samples".into()));
        }
        let key = StreamKey::new(seed, Purpose::SupNorm);
        let dim = self.domain.dim();
        let sampled = (0..samples).into_par_iter().map(|i| {
            let mut z = vec![C64::new(0.0, 0.0); dim];
            self.domain.uniform_point(&key, i, &mut z);
            eval(&z)
        });
        let best = sampled.try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;
        let mut best = best;
        if self.domain.has_test_path() {
            for t in SUP_NORM_PATH_POINTS {
                best = best.max(eval(&self.domain.test_path(t, t)?)?);
            }
        }
        Ok(best)
    }
}

/// A (0,1)-form `Σ f_j dz̄_j` given by its coefficients.
pub trait OneForm: Sync {
    fn coefficients(&self, b: &Bergman, z: &[C64]) -> Result<Vec<C64>>;
}

/// A form given by a coefficient closure.
pub struct FormFn<F>(pub F);

impl<F> OneForm for FormFn<F>
where
    F: Fn(&[C64]) -> Vec<C64> + Sync,
{
    fn coefficients(&self, _: &Bergman, z: &[C64]) -> Result<Vec<C64>> {
        Ok((self.0)(z))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BuiltinForm {
    Zero,
    DbarLogK,
    /// `-Σ z_j (1-|z_j|^2)^{-1} dz̄_j` on the polydisc.
    PolydiscExample,
    /// `∂̄_w [K(w, z0) / K(w, w)]`.
    SharpExample { center: DomainPoint },
}

impl OneForm for BuiltinForm {
    fn coefficients(&self, b: &Bergman, z: &[C64]) -> Result<Vec<C64>> {
        match self {
            BuiltinForm::Zero => Ok(vec![C64::new(0.0, 0.0); z.len()]),
            BuiltinForm::DbarLogK => b.dbar_log_kernel(z),
            BuiltinForm::PolydiscExample => {
                if !matches!(b.domain().kind(), DomainKind::Polydisc { .. }) {
                    return Err(Error::InvalidArgument("the polydisc example needs a polydisc".into()));
                }
                Ok(z.iter().map(|w| -w / (1.0 - w.norm_sqr())).collect())
            }
            BuiltinForm::SharpExample { center } => {
                let kz = b.kernel(z, center)?;
                let ratio = C64::from_polar((kz.log_modulus - b.log_kernel_diag(z)?).exp(), kz.value.arg());
                Ok(b.dbar_log_kernel(z)?.into_iter().map(|c| -ratio * c).collect())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn polydisc_kernel_at_origin() {
        let b = Bergman::new(Domain::polydisc(2).unwrap());
        let k = b.kernel(&[c(0.0, 0.0); 2], &[c(0.0, 0.0); 2]).unwrap();
        assert!((k.value.re - 1.0 / (PI * PI)).abs() < 1e-15);
        let z = [c(0.3, -0.2)];
        let b1 = Bergman::new(Domain::polydisc(1).unwrap());
        let expect = -PI.ln() - 2.0 * (1.0 - z[0].norm_sqr()).ln();
        assert!((b1.log_kernel_diag(&z).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn ball_log_kernel_at_origin() {
        for n in 1..5 {
            let b = Bergman::new(Domain::ball(n).unwrap());
            let expect = (1..=n).map(|k| (k as f64).ln()).sum::<f64>() - n as f64 * PI.ln();
            assert!((b.log_kernel_diag(&vec![c(0.0, 0.0); n]).unwrap() - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn type_ii_diagonal_log_kernel() {
        let d = Domain::type_ii(2).unwrap();
        let b = Bergman::with_volume(d, 2.0);
        let t: f64 = 0.6;
        let z = d.test_path(t, t).unwrap();
        let expect = -(2.0f64).ln() - 3.0 * ((1.0 - t * t).powi(2)).ln();
        assert!((b.log_kernel_diag(&z).unwrap() - expect).abs() < 1e-13);
    }

    #[test]
    fn kernel_outside_is_an_error() {
        let b = Bergman::with_volume(Domain::ball(2).unwrap(), 1.0);
        let out = [c(0.9, 0.0), c(0.9, 0.0)];
        assert!(matches!(b.kernel(&out, &out), Err(Error::OutsideDomain { .. })));
        assert!(b.log_kernel_diag(&out).is_err());
    }

    #[test]
    fn metric_examples_at_origin() {
        let b = Bergman::with_volume(Domain::polydisc(1).unwrap(), PI);
        assert!((b.metric_at(&[c(0.0, 0.0)]).unwrap().g[(0, 0)] - 2.0).norm() < 1e-15);
        let b = Bergman::with_volume(Domain::ball(3).unwrap(), 1.0);
        let m = b.metric_at(&[c(0.0, 0.0); 3]).unwrap();
        assert!(m.g.max_abs_diff(&CMat::from_fn(3, 3, |i, j| c(if i == j { 4.0 } else { 0.0 }, 0.0))) < 1e-14);
        let b = Bergman::with_volume(Domain::type_i(2, 2).unwrap(), 1.0);
        let m = b.metric_at(&[c(0.0, 0.0); 4]).unwrap();
        assert!(m.g_inv.max_abs_diff(&CMat::identity(4)) < 1e-15);
        assert_eq!(b.metric_scale(), 4.0);
    }

    #[test]
    fn polydisc_example_norm() {
        let b = Bergman::with_volume(Domain::polydisc(3).unwrap(), 1.0);
        let z = [c(0.3, 0.1), c(-0.5, 0.4), c(0.0, 0.9)];
        let v = b.form_norm_sq(&z, &BuiltinForm::PolydiscExample).unwrap();
        assert!((v - norm_sqr(&z) / 2.0).abs() < 1e-14);
        assert_eq!(b.form_norm_sq(&z, &BuiltinForm::Zero).unwrap(), 0.0);
    }

    #[test]
    fn dbar_vanishes_at_origin() {
        for s in ["I(2,3)", "II(2)", "III(4)", "IV(3)", "D(2)", "B(2)"] {
            let d: Domain = s.parse().unwrap();
            let b = Bergman::with_volume(d, 1.0);
            assert!(b.dbar_log_kernel(&vec![c(0.0, 0.0); d.dim()]).unwrap().iter().all(|v| v.norm() == 0.0));
        }
    }
}

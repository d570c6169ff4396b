//! Verification scenarios. Each produces a [`ScenarioReport`] whose
//! assertions carry the pass/fail verdicts.

use crate::asymptotics::{fit_exponent, fit_line, fit_log_affine, GridSample};
use crate::domains::{norm_sqr, Domain, DomainKind, DomainPoint};
use crate::error::{Error, Result};
use crate::integrals::{
    ball_kernel_mass_series, bergman_project, coefficient_comparability, j_integral_grid, kernel_mass_grid,
};
use crate::kernel::{Bergman, BuiltinForm, FormFn, OneForm};
use crate::linalg::C64;
use crate::mc::{McConfig, McEstimate, McMethod};
use crate::report::{Assertion, Fit, GridBuilder, ScenarioReport};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

pub const DEFAULT_T_GRID: [f64; 5] = [0.5, 0.6, 0.7, 0.8, 0.9];
/// `t` values for the fixed-`T` leg of the rank-two case checks.
pub const FIXED_T_LEG: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];
pub const FIXED_BIG_T: f64 = 0.9;
/// Tolerance on fitted exponents in the case checks.
pub const EXPONENT_TOLERANCE: f64 = 0.2;
pub const SUP_NORM_SAMPLES: u64 = 10_000;
pub const DELTA_BOUND_SAMPLES: u64 = 10_000;
/// Points used by the pointwise identities.
pub const IDENTITY_POINTS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scenario {
    Example1,
    Example3,
    Sharp,
    Blowup,
    Theorem53,
    DeltaBound,
    BallLogmass,
    Comparability,
}

impl Scenario {
    pub const ALL: [Scenario; 8] = [
        Scenario::Example1,
        Scenario::Example3,
        Scenario::Sharp,
        Scenario::Blowup,
        Scenario::Theorem53,
        Scenario::DeltaBound,
        Scenario::BallLogmass,
        Scenario::Comparability,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Example1 => "example1",
            Scenario::Example3 => "example3",
            Scenario::Sharp => "sharp",
            Scenario::Blowup => "blowup",
            Scenario::Theorem53 => "theorem53",
            Scenario::DeltaBound => "delta-bound",
            Scenario::BallLogmass => "ball-logmass",
            Scenario::Comparability => "comparability",
        }
    }

    pub fn default_domain(self) -> Domain {
        let s = match self {
            Scenario::Example3 => "D(2)",
            Scenario::BallLogmass => "B(2)",
            _ => "II(2)",
        };
        s.parse().expect("valid default descriptor")
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| Error::UnknownScenario(s.to_string()))
    }
}

/// Grid of path parameters, written `start:stop:count` or as a comma list.
#[derive(Clone, Debug, PartialEq)]
pub struct TGrid(pub Vec<f64>);

impl FromStr for TGrid {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad t-grid `{s}`"));
        let values = if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            if parts.len() != 3 {
                return Err(bad());
            }
            let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
            let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
            let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
            match n {
                0 => return Err(bad()),
                1 => vec![a],
                _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
            }
        } else {
            s.split(',').map(|x| x.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<Vec<_>>>()?
        };
        if values.is_empty() || values.iter().any(|t| !(0.0..1.0).contains(t)) {
            return Err(Error::Parse(format!("t-grid values must lie in [0, 1): `{s}`")));
        }
        Ok(TGrid(values))
    }
}

impl fmt::Display for TGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|t| t.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub domain: Option<Domain>,
    pub seed: u64,
    pub samples: Option<u64>,
    pub method: McMethod,
    pub t_grid: Option<Vec<f64>>,
    pub opt_in_heavy: bool,
    pub cache_path: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl ScenarioConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            domain: None,
            seed,
            samples: None,
            method: McMethod::Plain,
            t_grid: None,
            opt_in_heavy: false,
            cache_path: None,
            threads: None,
        }
    }

    pub fn with_domain(mut self, d: Domain) -> Self {
        self.domain = Some(d);
        self
    }

    pub fn with_samples(mut self, n: u64) -> Self {
        self.samples = Some(n);
        self
    }

    fn mc(&self, d: &Domain, seed_offset: u64) -> McConfig {
        McConfig {
            seed: self.seed.wrapping_add(seed_offset),
            samples: self.samples.unwrap_or_else(|| McConfig::default_samples(d.dim())),
            method: self.method,
            importance_weight: 0.5,
            cache_path: if seed_offset == 0 { self.cache_path.clone() } else { None },
            threads: self.threads,
        }
    }

    fn grid(&self) -> Vec<f64> {
        self.t_grid.clone().unwrap_or_else(|| DEFAULT_T_GRID.to_vec())
    }
}

/// Run one scenario.
pub fn run(scenario: Scenario, cfg: &ScenarioConfig) -> Result<ScenarioReport> {
    let d = cfg.domain.unwrap_or_else(|| scenario.default_domain());
    let mc_free = matches!(scenario, Scenario::Comparability | Scenario::DeltaBound);
    if d.dim() >= 10 && !cfg.opt_in_heavy && !mc_free {
        return Err(Error::InvalidArgument(format!("{d} is heavy; pass the opt-in flag to run it")));
    }
    match scenario {
        Scenario::Example1 => example1(&d, cfg),
        Scenario::Example3 => example3(&d, cfg),
        Scenario::Sharp => sharp(&d, cfg),
        Scenario::Blowup => blowup(&d, cfg),
        Scenario::Theorem53 => theorem53(&d, cfg),
        Scenario::DeltaBound => delta_bound(&d, cfg),
        Scenario::BallLogmass => ball_logmass(&d, cfg),
        Scenario::Comparability => comparability(&d, cfg),
    }
}

fn report(name: &str, d: &Domain, cfg: &ScenarioConfig) -> ScenarioReport {
    let mc = cfg.mc(d, 0);
    ScenarioReport::new(name, d.to_string(), cfg.seed, mc.samples, mc.method)
}

fn require_rank_two_path(d: &Domain) -> Result<()> {
    if d.has_test_path() && d.characteristics().multiplicity > 0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{d} is not a rank-two Cartan domain")))
    }
}

fn diagonal(d: &Domain, ts: &[f64]) -> Result<Vec<DomainPoint>> {
    ts.iter().map(|&t| d.test_path(t, t)).collect()
}

fn max_over_min(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    max / min
}

/// `Tr(zz^*)`: Frobenius norm of the matrix view, `|z|^2` otherwise.
pub fn trace_zz(d: &Domain, z: &[C64]) -> Result<f64> {
    if d.is_matrix_kind() {
        Ok(d.matrix(z)?.as_slice().iter().map(|w| w.norm_sqr()).sum())
    } else {
        Ok(norm_sqr(z))
    }
}

/// `sup Tr(zz^*)` over the domain: singular values of a skew matrix come in
/// pairs, so type III doubles the rank.
pub fn trace_sup(d: &Domain) -> f64 {
    let r = d.characteristics().rank as f64;
    if matches!(d.kind(), DomainKind::TypeIII { .. }) { 2.0 * r } else { r }
}

/// The constant in `|∂̄ log K|_g^2 = c Tr(zz^*)`, where known in closed form.
pub fn gradient_identity_constant(d: &Domain) -> Option<f64> {
    match d.kind() {
        DomainKind::TypeI { m, n } => Some(((m + n) * (m + n)) as f64),
        DomainKind::TypeII { n } => Some(((n + 1) * (n + 1)) as f64),
        DomainKind::TypeIV { n } => Some((4 * n * n) as f64),
        _ => None,
    }
}

/// `|∂̄ log K|_g^2` and `Tr(zz^*)` at uniform points.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientIdentity {
    pub expected: Option<f64>,
    pub norms: Vec<f64>,
    pub traces: Vec<f64>,
}

impl GradientIdentity {
    /// Mean of `|∂̄ log K|_g^2 / Tr(zz^*)`.
    pub fn measured(&self) -> f64 {
        self.norms.iter().zip(&self.traces).map(|(f, t)| f / t).sum::<f64>() / self.norms.len() as f64
    }

    fn constant(&self) -> f64 {
        self.expected.unwrap_or_else(|| self.measured())
    }

    /// `max |F - c Tr| / (1 + Tr)`, with `c` the closed form or, failing
    /// that, the measured constant.
    pub fn max_error(&self) -> f64 {
        let c = self.constant();
        self.norms.iter().zip(&self.traces).map(|(f, t)| (f - c * t).abs() / (1.0 + t)).fold(0.0, f64::max)
    }

    /// `max |F / (c Tr) - 1|`.
    pub fn max_relative_error(&self) -> f64 {
        let c = self.constant();
        self.norms.iter().zip(&self.traces).map(|(f, t)| (f / (c * t) - 1.0).abs()).fold(0.0, f64::max)
    }
}

pub fn gradient_identity(d: &Domain, seed: u64, points: usize) -> Result<GradientIdentity> {
    let b = Bergman::new(*d);
    let mut norms = Vec::with_capacity(points);
    let mut traces = Vec::with_capacity(points);
    for z in d.sample_uniform(seed, points)? {
        norms.push(b.form_norm_sq(&z, &BuiltinForm::DbarLogK)?);
        traces.push(trace_zz(d, &z)?);
    }
    Ok(GradientIdentity { expected: gradient_identity_constant(d), norms, traces })
}

fn require_cartan(d: &Domain) -> Result<()> {
    if matches!(d.kind(), DomainKind::Polydisc { .. } | DomainKind::Ball { .. }) {
        return Err(Error::InvalidArgument(format!("{d} is not a Cartan domain")));
    }
    Ok(())
}

/// `log K` and its projection: gradient identity, constancy of `P[log K]`,
/// the weight condition for `γ log K` and the Key-Estimate ratio.
pub fn example1(d: &Domain, cfg: &ScenarioConfig) -> Result<ScenarioReport> {
    require_cartan(d)?;
    let mut rep = report("example1", d, cfg);
    let b = Bergman::new(*d);
    let ident = gradient_identity(d, cfg.seed, IDENTITY_POINTS)?;
    let c_d = ident.expected.unwrap_or_else(|| ident.measured());
    rep.values.insert("c_measured".into(), ident.measured());
    if let Some(c) = ident.expected {
        rep.values.insert("c_closed_form".into(), c);
    }
    rep.values.insert("gradient_identity_max_relative_error".into(), ident.max_relative_error());
    rep.assert(Assertion::at_most("gradient_identity_max_error", ident.max_error(), 1e-8));

    // P[log K] at three points, independent samples per point
    let pts = d.sample_uniform(cfg.seed ^ 0x9e37, 2)?;
    let scaled = |z: &DomainPoint, g: f64| -> Result<DomainPoint> {
        let s = g / d.gauge(z)?;
        Ok(DomainPoint::new(z.iter().map(|w| w * s).collect()))
    };
    let zs = [DomainPoint::origin(d.dim()), scaled(&pts[0], 0.3)?, scaled(&pts[1], 0.6)?];
    let projections = zs
        .iter()
        .enumerate()
        .map(|(i, z)| bergman_project(&b, |w| C64::new(b.log_kernel_diag(w).unwrap_or(f64::NAN), 0.0), z, &cfg.mc(d, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        for j in i + 1..3 {
            let (a, c) = (&projections[i], &projections[j]);
            worst = worst.max((a.value - c.value).norm() / a.std_error.hypot(c.std_error));
        }
    }
    let mut g = GridBuilder::new(d.to_string(), "projection_log_k");
    for (k, p) in projections.iter().enumerate() {
        g.push(d.gauge(&zs[k])?, f64::NAN, f64::NAN, f64::NAN, &McEstimate { value: p.value.re, ..McEstimate::new(0.0, p.std_error, p.samples, p.seed) });
        rep.values.insert(format!("projection_imag_{k}"), p.value.im);
    }
    rep.grids.push(g.build());
    rep.assert(Assertion::at_most("projection_constancy_max_sigma", worst, 3.0));

    // weight condition for phi = gamma log K
    let gamma = 1.0 / (2.0 * c_d * trace_sup(d));
    let mut probe = d.sample_uniform(cfg.seed, IDENTITY_POINTS)?;
    if d.has_test_path() {
        for t in crate::kernel::SUP_NORM_PATH_POINTS {
            probe.push(d.test_path(t, t)?);
        }
    }
    let sup = probe
        .iter()
        .map(|z| b.form_norm_sq(z, &BuiltinForm::DbarLogK))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    rep.assert(Assertion::at_most("weight_condition_sup", gamma * sup, 0.5 + 1e-9));

    if d.has_test_path() {
        let ts = cfg.grid();
        let zs = diagonal(d, &ts)?;
        let masses = kernel_mass_grid(&b, &zs, &cfg.mc(d, 10))?;
        let f_sup = b.sup_form_norm(&BuiltinForm::DbarLogK, cfg.seed, SUP_NORM_SAMPLES)?;
        let p0 = projections[0].value.re;
        key_ratio_assertions(&mut rep, d, &ts, &masses, f_sup, false, |i| Ok(b.log_kernel_diag(&zs[i])? - p0))?;
    }
    Ok(rep)
}

fn key_ratio_assertions(
    rep: &mut ScenarioReport,
    d: &Domain,
    ts: &[f64],
    masses: &[McEstimate],
    f_sup: f64,
    endpoint_check: bool,
    u: impl Fn(usize) -> Result<f64>,
) -> Result<()> {
    rep.values.insert("form_sup_norm".into(), f_sup);
    let mut g = GridBuilder::new(d.to_string(), "key_ratio");
    let mut ratios = Vec::new();
    for (i, &t) in ts.iter().enumerate() {
        let r = u(i)?.abs() / (f_sup * masses[i].value);
        g.push_value(t, t, r);
        ratios.push(r);
    }
    let mut mg = GridBuilder::new(d.to_string(), "kernel_mass");
    for (i, &t) in ts.iter().enumerate() {
        mg.push(t, t, 0.0, 0.0, &masses[i]);
    }
    rep.grids.push(mg.build());
    rep.grids.push(g.build());
    let nonfinite = ratios.iter().filter(|r| !r.is_finite()).count();
    rep.assert(Assertion::at_most("key_ratio_nonfinite_count", nonfinite as f64, 0.0));
    if endpoint_check {
        let spread = ratios.last().unwrap() / ratios[0];
        rep.assert(Assertion::within("key_ratio_last_over_first", spread, 0.1, 10.0));
    }
    rep.assert(Assertion::below("key_ratio_max_over_min", max_over_min(&ratios), 10.0));
    Ok(())
}

/// `∂̄ u` by complex-step differentiation of a real function `u(z)` written
/// in terms of `(x, y)` with complexified arguments.
fn dbar_complex_step(z: &[C64], u: impl Fn(&[(C64, C64)]) -> C64) -> Vec<C64> {
    let h = 1e-30;
    let base: Vec<(C64, C64)> = z.iter().map(|w| (C64::new(w.re, 0.0), C64::new(w.im, 0.0))).collect();
    (0..z.len())
        .map(|j| {
            let mut px = base.clone();
            px[j].0 += C64::new(0.0, h);
            let mut py = base.clone();
            py[j].1 += C64::new(0.0, h);
            let dx = u(&px).im / h;
            let dy = u(&py).im / h;
            C64::new(0.5 * dx, 0.5 * dy)
        })
        .collect()
}

/// The logarithmic example on the polydisc.
pub fn example3(d: &Domain, cfg: &ScenarioConfig) -> Result<ScenarioReport> {
    let DomainKind::Polydisc { n } = d.kind() else {
        return Err(Error::InvalidArgument(format!("example3 runs on a polydisc, got {d}")));
    };
    let nf = n as f64;
    let mut rep = report("example3", d, cfg);
    let b = Bergman::new(*d);
    let pts = d.sample_uniform(cfg.seed, IDENTITY_POINTS)?;
    let u_xy = |xy: &[(C64, C64)]| -> C64 { xy.iter().map(|(x, y)| (1.0 - x * x - y * y).ln()).sum::<C64>() + nf };
    let mut dbar_err: f64 = 0.0;
    let mut norm_err: f64 = 0.0;
    for z in &pts {
        let f = BuiltinForm::PolydiscExample.coefficients(&b, z)?;
        for (a, c) in dbar_complex_step(z, u_xy).iter().zip(&f) {
            dbar_err = dbar_err.max((a - c).norm());
        }
        norm_err = norm_err.max((b.form_norm_sq(z, &BuiltinForm::PolydiscExample)? - norm_sqr(z) / 2.0).abs());
    }
    rep.assert(Assertion::at_most("dbar_u_equals_f_max_error", dbar_err, 1e-12));
    rep.assert(Assertion::at_most("form_norm_identity_max_error", norm_err, 1e-10));

    let u = |w: &[C64]| -> f64 { w.iter().map(|x| (1.0 - x.norm_sqr()).ln()).sum::<f64>() + nf };
    let centres = [DomainPoint::origin(n), DomainPoint::new(vec![C64::new(0.3, 0.2); n])];
    let mut worst: f64 = 0.0;
    for (i, z) in centres.iter().enumerate() {
        let p = bergman_project(&b, |w| C64::new(u(w), 0.0), z, &cfg.mc(d, i as u64))?;
        worst = worst.max(p.value.norm() / p.std_error);
        rep.values.insert(format!("projection_u_re_{i}"), p.value.re);
        rep.values.insert(format!("projection_u_im_{i}"), p.value.im);
        rep.values.insert(format!("projection_u_std_error_{i}"), p.std_error);
    }
    rep.assert(Assertion::at_most("projection_of_u_max_sigma", worst, 3.0));

    let ts = cfg.grid();
    let zs: Vec<DomainPoint> = ts.iter().map(|&t| DomainPoint::from_reals(&vec![t; n])).collect();
    let masses = kernel_mass_grid(&b, &zs, &cfg.mc(d, 10))?;
    let f_sup = b.sup_form_norm(&BuiltinForm::PolydiscExample, cfg.seed, SUP_NORM_SAMPLES)?;
    key_ratio_assertions(&mut rep, d, &ts, &masses, f_sup, n == 1, |i| Ok(u(&zs[i])))?;

    // weighted norms near the boundary
    let near = [0.9, 0.99, 0.999, 0.9999];
    let mut g = GridBuilder::new(d.to_string(), "weighted_norm_p2");
    let mut weighted = Vec::new();
    for &t in &near {
        let v = b.weighted_form_norm(&vec![C64::new(t, 0.0); n], &BuiltinForm::PolydiscExample, 2.0)?;
        g.push_value(t, t, v);
        weighted.push(v);
    }
    rep.grids.push(g.build());
    let grows = weighted.windows(2).all(|w| w[1] > w[0]);
    rep.assert(Assertion::new("weighted_norm_grows_toward_boundary", weighted[3] / weighted[0], "increasing", grows));
    if n == 1 {
        let cancel = FormFn(|z: &[C64]| {
            let s = 1.0 - z[0].norm_sqr();
            vec![C64::new(s * (2.0 / s).ln().powi(-2), 0.0)]
        });
        let small = b.weighted_sup_norm(&cancel, 2.0, cfg.seed, SUP_NORM_SAMPLES)?;
        let large = b.weighted_sup_norm(&cancel, 2.0, cfg.seed, 4 * SUP_NORM_SAMPLES)?;
        rep.assert(Assertion::at_most("cancelled_weighted_sup_relative_change", (large / small - 1.0).abs(), 0.01));
    }
    Ok(rep)
}

/// Canonical solution of the sharpness example against the kernel mass.
pub fn sharp(d: &Domain, cfg: &ScenarioConfig) -> Result<ScenarioReport> {
    require_rank_two_path(d)?;
    let mut rep = report("sharp", d, cfg);
    let b = Bergman::new(*d);
    let ts = cfg.grid();
    let zs = diagonal(d, &ts)?;
    let js = j_integral_grid(&b, &[(-1.0, 0.0), (0.0, 0.0)], &zs, &cfg.mc(d, 0))?;
    let (jm1, j0) = (&js[0], &js[1]);
    let mut gj = GridBuilder::new(d.to_string(), "j_minus1_0");
    let mut gm = GridBuilder::new(d.to_string(), "kernel_mass");
    let mut gr = GridBuilder::new(d.to_string(), "sharp_ratio");
    let mut gn = GridBuilder::new(d.to_string(), "sharp_ratio_normalised");
    let mut rho = Vec::new();
    let mut comparable = Vec::new();
    for (i, &t) in ts.iter().enumerate() {
        gj.push(t, t, -1.0, 0.0, &jm1[i]);
        gm.push(t, t, 0.0, 0.0, &j0[i]);
        let r = (1.0 - jm1[i].value).abs() / j0[i].value;
        gr.push_value(t, t, r);
        let f = BuiltinForm::SharpExample { center: zs[i].clone() };
        let f_sup = b.sup_form_norm(&f, cfg.seed, SUP_NORM_SAMPLES)?;
        gn.push_value(t, t, r / f_sup);
        rho.push(r);
        comparable.push(jm1[i].value / j0[i].value);
    }
    rep.grids.extend([gj.build(), gm.build(), gr.build(), gn.build()]);
    rep.assert(Assertion::at_least("sharp_ratio_min", rho.iter().copied().fold(f64::INFINITY, f64::min), 0.05));
    rep.assert(Assertion::below("sharp_ratio_max_over_min", max_over_min(&rho), 10.0));
    rep.assert(Assertion::below("j_comparability_max_over_min", max_over_min(&comparable), 10.0));
    Ok(rep)
}

/// Predicted blow-up exponent `-a/2` of the kernel mass on the diagonal
/// path, with its tolerance.
pub fn blowup_prediction(d: &Domain) -> (f64, f64) {
    let a = d.characteristics().multiplicity as f64;
    let tol = match d.kind() {
        DomainKind::TypeII { .. } | DomainKind::TypeIV { n: 3 } => 0.15,
        DomainKind::TypeIII { .. } => 0.3,
        _ => 0.2,
    };
    (-a / 2.0, tol)
}

pub fn blowup(d: &Domain, cfg: &ScenarioConfig) -> Result<ScenarioReport> {
    require_rank_two_path(d)?;
    let mut rep = report("blowup", d, cfg);
    let b = Bergman::new(*d);
    let ts = cfg.grid();
    let masses = kernel_mass_grid(&b, &diagonal(d, &ts)?, &cfg.mc(d, 0))?;
    let mut g = GridBuilder::new(d.to_string(), "kernel_mass");
    let samples: Vec<GridSample> = ts.iter().zip(&masses).map(|(&t, e)| GridSample::new(t, e)).collect();
    for (t, e) in ts.iter().zip(&masses) {
        g.push(*t, *t, 0.0, 0.0, e);
    }
    rep.grids.push(g.build());
    let fit = fit_exponent(&samples)?;
    let (pred, tol) = blowup_prediction(d);
    rep.values.insert("predicted_slope".into(), pred);
    rep.assert(Assertion::within("slope", fit.slope, pred - tol, pred + tol));
    rep.fits.insert("kernel_mass".into(), Fit::Exponent(fit));
    Ok(rep)
}

fn push_j_grid(rep: &mut ScenarioReport, d: &Domain, name: &str, pts: &[(f64, f64)], beta: f64, c: f64, es: &[McEstimate]) {
    let mut g = GridBuilder::new(d.to_string(), name);
    for (&(t, big_t), e) in pts.iter().zip(es) {
        g.push(t, big_t, beta, c, e);
    }
    rep.grids.push(g.build());
}

/// Spot checks of the rank-two `J_{β,c}` asymptotics and of the two
/// regimes outside `|2pc| <= a`.
pub fn theorem53(d: &Domain, cfg: &ScenarioConfig) -> Result<ScenarioReport> {
    require_rank_two_path(d)?;
    let mut rep = report("theorem53", d, cfg);
    let b = Bergman::new(*d);
    let ch = d.characteristics();
    let (p, a) = (ch.genus as f64, ch.multiplicity as f64);
    let beta = 0.0;
    let edge = a / (2.0 * p);
    let tol = EXPONENT_TOLERANCE;
    let ts = cfg.grid();

    // diagonal leg: cases (iv), (v) and both outer regimes
    let c_bounded = if -0.4 < -edge { -edge - 0.25 } else { -0.4 };
    let c_power = if 0.5 > edge { 0.5 } else { edge + 0.25 };
    let diag_params = [(beta, -edge), (beta, -edge / 2.0), (beta, c_bounded), (beta, c_power)];
    let diag_pts: Vec<(f64, f64)> = ts.iter().map(|&t| (t, t)).collect();
    let diag = j_integral_grid(&b, &diag_params, &diagonal(d, &ts)?, &cfg.mc(d, 0))?;
    for (k, &(_, c)) in diag_params.iter().enumerate() {
        push_j_grid(&mut rep, d, &format!("diagonal_c{c:+.4}"), &diag_pts, beta, c, &diag[k]);
    }
    let on_t = |es: &[McEstimate]| -> Vec<GridSample> { ts.iter().zip(es).map(|(&t, e)| GridSample::new(t, e)).collect() };

    let v = on_t(&diag[0]);
    let affine = fit_log_affine(&v)?;
    let power = fit_exponent(&v)?;
    rep.assert(Assertion::at_least("case_v_log_affine_r2", affine.r_squared, 0.9));
    rep.assert(Assertion::below("case_v_power_slope_abs", power.slope.abs(), 0.2));
    rep.fits.insert("case_v_log_affine".into(), Fit::Line(affine));
    rep.fits.insert("case_v_power".into(), Fit::Exponent(power));

    let iv = fit_exponent(&on_t(&diag[1]))?;
    let pred_iv = p * edge / 2.0 - a / 2.0;
    rep.assert(Assertion::within("case_iv_t_slope", iv.slope, pred_iv - tol, pred_iv + tol));
    rep.fits.insert("case_iv".into(), Fit::Exponent(iv));

    let bounded: Vec<f64> = diag[2].iter().map(|e| e.value).collect();
    rep.assert(Assertion::below("regime_bounded_growth", bounded.last().unwrap() / bounded[0], 2.0));
    rep.values.insert("regime_bounded_c".into(), c_bounded);

    let log_k = diagonal(d, &ts)?.iter().map(|z| b.log_kernel_diag(z)).collect::<Result<Vec<_>>>()?;
    let log_j: Vec<f64> = diag[3].iter().map(|e| e.value.ln()).collect();
    let kp = fit_line(&log_k, &log_j, None)?;
    rep.assert(Assertion::within("regime_power_slope_vs_log_k", kp.slope, c_power - 0.1, c_power + 0.1));
    rep.values.insert("regime_power_c".into(), c_power);
    rep.fits.insert("regime_power".into(), Fit::Line(kp));

    // fixed T leg: t-exponents of cases (iii), (i) and (ii), all -a/2
    let leg_pts: Vec<(f64, f64)> = FIXED_T_LEG.iter().map(|&t| (t, FIXED_BIG_T)).collect();
    let leg_z = leg_pts.iter().map(|&(t, bt)| d.test_path(t, bt)).collect::<Result<Vec<_>>>()?;
    let leg_params = [(beta, 0.0), (beta, edge), (beta, edge / 2.0)];
    let leg = j_integral_grid(&b, &leg_params, &leg_z, &cfg.mc(d, 1))?;
    for (k, (&(_, c), label)) in leg_params.iter().zip(["case_iii", "case_i", "case_ii"]).enumerate() {
        push_j_grid(&mut rep, d, &format!("fixed_T_c{c:+.4}"), &leg_pts, beta, c, &leg[k]);
        let grid: Vec<GridSample> = FIXED_T_LEG.iter().zip(&leg[k]).map(|(&t, e)| GridSample::new(t, e)).collect();
        let fit = fit_exponent(&grid)?;
        rep.assert(Assertion::within(format!("{label}_t_slope"), fit.slope, -a / 2.0 - tol, -a / 2.0 + tol));
        rep.fits.insert(format!("{label}_fixed_T"), Fit::Exponent(fit));
    }

    // fixed t leg: cases (i) and (ii), exponent in T
    let t0 = ts[0];
    let fixed_pts: Vec<(f64, f64)> = ts.iter().map(|&bt| (t0, bt)).collect();
    let fixed_z = fixed_pts.iter().map(|&(t, bt)| d.test_path(t, bt)).collect::<Result<Vec<_>>>()?;
    let fixed_params = [(beta, edge), (beta, edge / 2.0)];
    let fixed = j_integral_grid(&b, &fixed_params, &fixed_z, &cfg.mc(d, 2))?;
    for (k, &(_, c)) in fixed_params.iter().enumerate() {
        push_j_grid(&mut rep, d, &format!("fixed_t_c{c:+.4}"), &fixed_pts, beta, c, &fixed[k]);
    }
    let on_big_t = |es: &[McEstimate]| -> Vec<GridSample> { ts.iter().zip(es).map(|(&bt, e)| GridSample::new(bt, e)).collect() };
    let i_fit = fit_exponent(&on_big_t(&fixed[0]))?;
    rep.assert(Assertion::within("case_i_big_t_slope", i_fit.slope, -a / 2.0 - tol, -a / 2.0 + tol));
    rep.fits.insert("case_i_fixed_t".into(), Fit::Exponent(i_fit));
    let ii_fit = fit_exponent(&on_big_t(&fixed[1]))?;
    let pred_ii = -p * edge / 2.0;
    rep.assert(Assertion::within("case_ii_big_t_slope", ii_fit.slope, pred_ii - tol, pred_ii + tol));
    rep.fits.insert("case_ii_fixed_t".into(), Fit::Exponent(ii_fit));
    Ok(rep)
}

/// Pointwise `δ(z) <= K(z)^{-1/(rpk)}`.
pub fn delta_bound(d: &Domain, cfg: &ScenarioConfig) -> Result<ScenarioReport> {
    let mut rep = report("delta-bound", d, cfg);
    rep.samples = cfg.samples.unwrap_or(DELTA_BOUND_SAMPLES);
    let b = Bergman::new(*d);
    let ch = d.characteristics();
    let rpk = ch.rank as f64 * ch.genus as f64 * ch.k;
    let mut pts = d.sample_uniform(cfg.seed, rep.samples as usize)?;
    if d.has_test_path() {
        pts.extend(diagonal(d, &[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])?);
    }
    let mut violations = 0usize;
    let mut worst_margin = f64::INFINITY;
    for z in &pts {
        let margin = -b.log_kernel_diag(z)? / rpk - d.boundary_distance(z)?.ln();
        worst_margin = worst_margin.min(margin);
        if margin < -1e-10 {
            violations += 1;
        }
    }
    rep.values.insert("points_checked".into(), pts.len() as f64);
    rep.values.insert("min_log_margin".into(), worst_margin);
    rep.assert(Assertion::at_most("violations", violations as f64, 0.0));
    Ok(rep)
}

/// Logarithmic kernel mass of the ball against the series oracle.
pub fn ball_logmass(d: &Domain, cfg: &ScenarioConfig) -> Result<ScenarioReport> {
    let DomainKind::Ball { n } = d.kind() else {
        return Err(Error::InvalidArgument(format!("ball-logmass runs on a ball, got {d}")));
    };
    if n > 3 {
        return Err(Error::InvalidArgument("ball-logmass supports n <= 3".into()));
    }
    let mut rep = report("ball-logmass", d, cfg);
    let b = Bergman::new(*d);
    let ts = cfg.grid();
    let zs: Vec<DomainPoint> = ts
        .iter()
        .map(|&t| {
            let mut z = vec![C64::new(0.0, 0.0); n];
            z[0] = C64::new(t, 0.0);
            DomainPoint::new(z)
        })
        .collect();
    let masses = kernel_mass_grid(&b, &zs, &cfg.mc(d, 0))?;
    let mut g = GridBuilder::new(d.to_string(), "kernel_mass");
    let mut go = GridBuilder::new(d.to_string(), "series_oracle");
    let mut worst: f64 = 0.0;
    for (&t, e) in ts.iter().zip(&masses) {
        g.push(t, 0.0, 0.0, 0.0, e);
        let exact = ball_kernel_mass_series(n, t)?;
        go.push_value(t, 0.0, exact);
        worst = worst.max((e.value - exact).abs() / e.std_error.max(f64::MIN_POSITIVE));
    }
    rep.grids.extend([g.build(), go.build()]);
    rep.assert(Assertion::at_most("oracle_agreement_max_sigma", worst, 3.0));
    let samples: Vec<GridSample> = ts.iter().zip(&masses).map(|(&t, e)| GridSample::new(t, e)).collect();
    let affine = fit_log_affine(&samples)?;
    rep.assert(Assertion::at_least("log_affine_r2", affine.r_squared, 0.9));
    rep.fits.insert("log_affine".into(), Fit::Line(affine));
    if samples.len() >= 4 {
        let power = fit_exponent(&samples)?;
        rep.assert(Assertion::below("power_slope_abs", power.slope.abs(), 0.2));
        rep.fits.insert("power".into(), Fit::Exponent(power));
    }
    Ok(rep)
}

/// Stability of the coefficient comparability constants in the degree.
pub fn comparability(d: &Domain, cfg: &ScenarioConfig) -> Result<ScenarioReport> {
    if d.characteristics().rank != 2 {
        return Err(Error::InvalidArgument(format!("{d} is not rank two")));
    }
    let mut rep = report("comparability", d, cfg);
    rep.samples = 0;
    for beta in [-1.0, 0.1] {
        let lo = coefficient_comparability(d, beta, 50)?;
        let hi = coefficient_comparability(d, beta, 100)?;
        let tag = format!("beta{beta:+}");
        for (k, v) in [("min_50", lo.min_ratio), ("max_50", lo.max_ratio), ("min_100", hi.min_ratio), ("max_100", hi.max_ratio)] {
            rep.values.insert(format!("{tag}_{k}"), v);
        }
        let ok = [lo.min_ratio, lo.max_ratio, hi.min_ratio, hi.max_ratio].iter().all(|r| r.is_finite() && *r > 0.0);
        rep.assert(Assertion::new(format!("{tag}_finite_positive"), hi.min_ratio, "> 0 and finite", ok));
        rep.assert(Assertion::below(format!("{tag}_max_change_50_to_100"), (hi.max_ratio / lo.max_ratio - 1.0).abs(), 0.05));
        rep.assert(Assertion::below(format!("{tag}_min_change_50_to_100"), (hi.min_ratio / lo.min_ratio - 1.0).abs(), 0.05));
    }
    Ok(rep)
}

//! Reproducible Monte-Carlo integration over a domain.
//!
//! Samples are produced per index from counter-based streams and reduced in
//! fixed blocks merged in index order, so results are bitwise identical for any
//! number of worker threads and for cached versus fresh samples.

use crate::domains::{Domain, DomainPoint};
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::rng::{Purpose, StreamKey};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Exponent of the boundary push: pushed points have `gauge^(2N)` distributed
/// as `U^(1/BOUNDARY_PUSH)`.
pub const BOUNDARY_PUSH: f64 = 2.0;
/// Number of radial strata.
pub const STRATA: usize = 16;
const BLOCK: u64 = 4096;

const MAGIC: &[u8; 8] = b"BGMNSMPL";
pub const CACHE_VERSION: u32 = 1;
const META_LEN: usize = 48;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum McMethod {
    Plain,
    Importance,
    Stratified,
}

impl McMethod {
    fn code(self) -> u8 {
        match self {
            McMethod::Plain => 0,
            McMethod::Importance => 1,
            McMethod::Stratified => 2,
        }
    }

    fn from_code(c: u8) -> Option<Self> {
        [McMethod::Plain, McMethod::Importance, McMethod::Stratified].into_iter().find(|m| m.code() == c)
    }

    fn purpose(self) -> Purpose {
        match self {
            McMethod::Plain => Purpose::Uniform,
            McMethod::Importance => Purpose::Importance,
            McMethod::Stratified => Purpose::Stratified,
        }
    }
}

impl fmt::Display for McMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            McMethod::Plain => "plain",
            McMethod::Importance => "importance",
            McMethod::Stratified => "stratified",
        })
    }
}

impl FromStr for McMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(McMethod::Plain),
            "importance" => Ok(McMethod::Importance),
            "stratified" => Ok(McMethod::Stratified),
            _ => Err(Error::Parse(format!("unknown method `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate<V = f64> {
    pub value: V,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
    pub method: McMethod,
}

impl McEstimate<f64> {
    pub fn new(value: f64, std_error: f64, samples: u64, seed: u64) -> Self {
        Self { value, std_error, samples, seed, method: McMethod::Plain }
    }

    pub fn exact(value: f64, samples: u64, seed: u64) -> Self {
        Self::new(value, 0.0, samples, seed)
    }

    /// Whether `target` lies within `k` standard errors (plus `slack`).
    pub fn agrees_with(&self, target: f64, k: f64, slack: f64) -> bool {
        (self.value - target).abs() <= k * self.std_error + slack
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct McConfig {
    pub seed: u64,
    pub samples: u64,
    pub method: McMethod,
    /// Mixture weight of the boundary-pushed component.
    pub importance_weight: f64,
    pub cache_path: Option<PathBuf>,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl McConfig {
    pub fn new(seed: u64, samples: u64) -> Self {
        Self { seed, samples, method: McMethod::Plain, importance_weight: 0.5, cache_path: None, threads: None }
    }

    pub fn with_method(mut self, method: McMethod) -> Self {
        self.method = method;
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = Some(threads);
        self
    }

    pub fn with_cache(mut self, path: impl Into<PathBuf>) -> Self {
        self.cache_path = Some(path.into());
        self
    }

    /// Default sample count for a domain of complex dimension `dim`.
    pub fn default_samples(dim: usize) -> u64 {
        if dim <= 6 {
            1_000_000
        } else {
            4_000_000
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::InvalidArgument("samples must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.importance_weight) {
            return Err(Error::InvalidArgument("importance weight must lie in [0, 1]".into()));
        }
        if self.method == McMethod::Stratified && self.samples < 2 * STRATA as u64 {
            return Err(Error::InvalidArgument(format!("stratified sampling needs at least {} samples", 2 * STRATA)));
        }
        Ok(())
    }
}

/// Where sample `i` comes from.
enum Source<'a> {
    Fresh { domain: Domain, key: StreamKey, method: McMethod, weight: f64 },
    Cached(&'a SampleSet),
}

impl Source<'_> {
    fn fill(&self, index: u64, out: &mut [C64]) {
        match self {
            Source::Cached(set) => out.copy_from_slice(set.point(index as usize)),
            Source::Fresh { domain, key, method, weight } => draw(domain, key, *method, *weight, index, out),
        }
    }
}

fn draw(d: &Domain, key: &StreamKey, method: McMethod, weight: f64, index: u64, out: &mut [C64]) {
    let mut rng = key.stream(index);
    let two_n = 2.0 * d.dim() as f64;
    match method {
        McMethod::Plain => {
            d.uniform_point_from(&mut rng, out);
        }
        McMethod::Importance => {
            let push = rng.random::<f64>() < weight;
            d.uniform_point_from(&mut rng, out);
            if push {
                let g = d.gauge_unchecked(out);
                if g > 0.0 {
                    let scale = g.powf(1.0 / BOUNDARY_PUSH - 1.0);
                    out.iter_mut().for_each(|z| *z *= scale);
                }
            }
        }
        McMethod::Stratified => {
            d.uniform_point_from(&mut rng, out);
            let u = d.gauge_unchecked(out).powf(two_n);
            if u > 0.0 {
                let stratum = (index % STRATA as u64) as f64;
                let target = (stratum + u) / STRATA as f64;
                let scale = (target / u).powf(1.0 / two_n);
                out.iter_mut().for_each(|z| *z *= scale);
            }
        }
    }
}

/// Likelihood ratio uniform/proposal for the importance mixture.
fn importance_ratio(d: &Domain, weight: f64, z: &[C64]) -> f64 {
    let two_n = 2.0 * d.dim() as f64;
    let g = d.gauge_unchecked(z);
    1.0 / ((1.0 - weight) + weight * BOUNDARY_PUSH * g.powf(two_n * (BOUNDARY_PUSH - 1.0)))
}

/// Running mean and centred sum of squares.
#[derive(Clone, Copy, Debug, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(&mut self, o: &Moments) {
        if o.n == 0.0 {
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n / n;
        self.m2 += o.m2 + d * d * self.n * o.n / n;
        self.n = n;
    }

    /// Variance of the mean.
    fn var_of_mean(&self) -> f64 {
        if self.n < 2.0 {
            0.0
        } else {
            self.m2 / (self.n - 1.0) / self.n
        }
    }
}

/// Integrate `outputs` real integrands at once over shared samples.
///
/// `f` writes the integrand values at a point into its second argument.
pub fn integrate_many<F>(d: &Domain, outputs: usize, f: F, cfg: &McConfig) -> Result<Vec<McEstimate>>
where
    F: Fn(&[C64], &mut [f64]) -> Result<()> + Sync,
{
    cfg.validate()?;
    let cached;
    let source = match &cfg.cache_path {
        Some(path) => {
            cached = SampleSet::load_or_create(d, cfg, path)?;
            Source::Cached(&cached)
        }
        None => Source::Fresh {
            domain: *d,
            key: StreamKey::new(cfg.seed, cfg.method.purpose()),
            method: cfg.method,
            weight: cfg.importance_weight,
        },
    };
    let strata = if cfg.method == McMethod::Stratified { STRATA } else { 1 };
    let run = || reduce(d, outputs, strata, &source, &f, cfg);
    let acc = match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    let volume = d.reference_volume().value;
    Ok((0..outputs)
        .map(|k| {
            let (value, var) = if strata == 1 {
                let m = &acc[k];
                (volume * m.mean, volume * volume * m.var_of_mean())
            } else {
                let w = volume / strata as f64;
                (0..strata).fold((0.0, 0.0), |(v, s), st| {
                    let m = &acc[st * outputs + k];
                    (v + w * m.mean, s + w * w * m.var_of_mean())
                })
            };
            McEstimate { value, std_error: var.sqrt(), samples: cfg.samples, seed: cfg.seed, method: cfg.method }
        })
        .collect())
}

fn reduce<F>(d: &Domain, outputs: usize, strata: usize, source: &Source<'_>, f: &F, cfg: &McConfig) -> Result<Vec<Moments>>
where
    F: Fn(&[C64], &mut [f64]) -> Result<()> + Sync,
{
    let blocks = cfg.samples.div_ceil(BLOCK);
    let partials: Vec<Vec<Moments>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut acc = vec![Moments::default(); strata * outputs];
            let mut z = vec![C64::new(0.0, 0.0); d.dim()];
            let mut vals = vec![0.0; outputs];
            for i in b * BLOCK..((b + 1) * BLOCK).min(cfg.samples) {
                source.fill(i, &mut z);
                f(&z, &mut vals)?;
                let ratio = if cfg.method == McMethod::Importance { importance_ratio(d, cfg.importance_weight, &z) } else { 1.0 };
                let st = (i % strata as u64) as usize;
                for (k, &v) in vals.iter().enumerate() {
                    if !v.is_finite() {
                        return Err(Error::NonFinite { index: i, value: v });
                    }
                    acc[st * outputs + k].push(v * ratio);
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = vec![Moments::default(); strata * outputs];
    for part in &partials {
        for (t, p) in total.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    Ok(total)
}

/// Real integrand.
pub fn integrate_real<F>(d: &Domain, f: F, cfg: &McConfig) -> Result<McEstimate>
where
    F: Fn(&[C64]) -> Result<f64> + Sync,
{
    let mut out = integrate_many(
        d,
        1,
        |z, v| {
            v[0] = f(z)?;
            Ok(())
        },
        cfg,
    )?;
    Ok(out.remove(0))
}

/// Complex integrand; the standard error combines both parts.
pub fn integrate<F>(d: &Domain, f: F, cfg: &McConfig) -> Result<McEstimate<C64>>
where
    F: Fn(&[C64]) -> Result<C64> + Sync,
{
    let parts = integrate_many(
        d,
        2,
        |z, v| {
            let w = f(z)?;
            v[0] = w.re;
            v[1] = w.im;
            Ok(())
        },
        cfg,
    )?;
    let (re, im) = (&parts[0], &parts[1]);
    Ok(McEstimate {
        value: C64::new(re.value, im.value),
        std_error: re.std_error.hypot(im.std_error),
        samples: re.samples,
        seed: re.seed,
        method: re.method,
    })
}

/// A materialised sample set.
///
/// On disk: a 16-byte header (`BGMNSMPL`, format version u32, dimension u32),
/// a 48-byte metadata block (descriptor text padded to 16 bytes, seed u64,
/// count u64, method u8 padded to 8 bytes, importance weight f64), then the
/// points as little-endian f64 with real and imaginary parts interleaved.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    pub domain: Domain,
    pub seed: u64,
    pub method: McMethod,
    pub importance_weight: f64,
    dim: usize,
    coords: Vec<C64>,
}

impl SampleSet {
    pub fn generate(d: &Domain, cfg: &McConfig) -> Result<Self> {
        cfg.validate()?;
        let key = StreamKey::new(cfg.seed, cfg.method.purpose());
        let dim = d.dim();
        let mut coords = vec![C64::new(0.0, 0.0); dim * cfg.samples as usize];
        coords
            .par_chunks_mut(dim)
            .enumerate()
            .for_each(|(i, out)| draw(d, &key, cfg.method, cfg.importance_weight, i as u64, out));
        Ok(Self { domain: *d, seed: cfg.seed, method: cfg.method, importance_weight: cfg.importance_weight, dim, coords })
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[C64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> Vec<DomainPoint> {
        self.coords.chunks(self.dim).map(|c| DomainPoint::new(c.to_vec())).collect()
    }

    fn matches(&self, d: &Domain, cfg: &McConfig) -> bool {
        self.domain == *d
            && self.seed == cfg.seed
            && self.method == cfg.method
            && self.len() as u64 == cfg.samples
            && (self.method != McMethod::Importance || self.importance_weight == cfg.importance_weight)
    }

    fn load_or_create(d: &Domain, cfg: &McConfig, path: &Path) -> Result<Self> {
        if path.exists() {
            if let Ok(set) = Self::load(path, Some(d)) {
                if set.matches(d, cfg) {
                    return Ok(set);
                }
            }
        }
        let set = Self::generate(d, cfg)?;
        set.save(path)?;
        Ok(set)
    }

    /// Write atomically (temporary file plus rename).
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::with_capacity(16 + META_LEN + self.coords.len() * 16);
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&CACHE_VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.dim as u32).to_le_bytes());
        let mut name = [0u8; 16];
        let text = self.domain.to_string();
        name[..text.len()].copy_from_slice(text.as_bytes());
        buf.extend_from_slice(&name);
        buf.extend_from_slice(&self.seed.to_le_bytes());
        buf.extend_from_slice(&(self.len() as u64).to_le_bytes());
        buf.extend_from_slice(&[self.method.code(), 0, 0, 0, 0, 0, 0, 0]);
        buf.extend_from_slice(&self.importance_weight.to_le_bytes());
        for z in &self.coords {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&buf)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }

    /// Read a cache file; `expected` rejects sets drawn on another domain.
    pub fn load(path: &Path, expected: Option<&Domain>) -> Result<Self> {
        let bytes = fs::read(path)?;
        let bad = |m: &str| Error::Cache(format!("{}: {m}", path.display()));
        if bytes.len() < 16 + META_LEN {
            return Err(bad("truncated header"));
        }
        if &bytes[..8] != MAGIC {
            return Err(bad("not a sample cache"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let version = u32_at(8);
        if version != CACHE_VERSION {
            return Err(bad(&format!("format version {version}, expected {CACHE_VERSION}")));
        }
        let dim = u32_at(12) as usize;
        let name = std::str::from_utf8(&bytes[16..32]).map_err(|_| bad("corrupt descriptor"))?;
        let domain: Domain = name.trim_end_matches('\0').parse()?;
        if domain.dim() != dim {
            return Err(bad("dimension does not match descriptor"));
        }
        if let Some(e) = expected {
            if *e != domain {
                return Err(bad(&format!("holds samples of {domain}, expected {e}")));
            }
        }
        let seed = u64_at(32);
        let count = u64_at(40) as usize;
        let method = McMethod::from_code(bytes[48]).ok_or_else(|| bad("unknown method"))?;
        let importance_weight = f64::from_bits(u64_at(56));
        let body = &bytes[16 + META_LEN..];
        if body.len() != count * dim * 16 {
            return Err(bad(&format!("expected {} point bytes, found {}", count * dim * 16, body.len())));
        }
        let coords = body
            .chunks_exact(16)
            .map(|c| {
                C64::new(
                    f64::from_le_bytes(c[..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..].try_into().unwrap()),
                )
            })
            .collect();
        Ok(Self { domain, seed, method, importance_weight, dim, coords })
    }
}

/// Materialise and persist the samples `cfg` would draw.
pub fn cache_samples(d: &Domain, cfg: &McConfig, path: &Path) -> Result<SampleSet> {
    let set = SampleSet::generate(d, cfg)?;
    set.save(path)?;
    Ok(set)
}

pub fn load_samples(path: &Path) -> Result<SampleSet> {
    SampleSet::load(path, None)
}

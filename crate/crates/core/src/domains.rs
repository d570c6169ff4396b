//! Classical domains, their numerical characteristics, membership, sampling
//! and geometry.

use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};
use crate::mc::McEstimate;
use crate::rng::{self, Purpose, StreamKey};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::HashMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::fmt;
use std::ops::Deref;
use std::str::FromStr;
use std::sync::{Mutex, OnceLock};

/// Seed of the shared volume estimate behind every kernel normalisation.
pub const REFERENCE_VOLUME_SEED: u64 = 0x5eed_0f_b01;
/// Proposals spent on the shared volume estimate.
pub const REFERENCE_VOLUME_PROPOSALS: u64 = 1 << 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DomainKind {
    /// m x n complex matrices of operator norm below one.
    TypeI { m: usize, n: usize },
    /// Symmetric n x n matrices.
    TypeII { n: usize },
    /// Skew-symmetric matrices of the given size.
    TypeIII { size: usize },
    /// Lie ball in C^n.
    TypeIV { n: usize },
    Polydisc { n: usize },
    Ball { n: usize },
}

/// A validated domain descriptor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Domain(DomainKind);

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Characteristics {
    pub rank: usize,
    pub multiplicity: usize,
    pub genus: usize,
    pub dim: usize,
    pub k: f64,
    /// Kernel exponent `genus * k`.
    pub lambda: f64,
}

impl Domain {
    pub fn new(kind: DomainKind) -> Result<Self> {
        let bad = |msg: &str| Err(Error::InvalidDescriptor(format!("{kind:?}: {msg}")));
        match kind {
            DomainKind::TypeI { m, n } if m == 0 || m > n => bad("need 1 <= m <= n"),
            DomainKind::TypeIII { size } if size < 4 => bad("need size >= 4"),
            DomainKind::TypeIV { n } if n < 3 => bad("need n >= 3"),
            DomainKind::TypeII { n } | DomainKind::Polydisc { n } | DomainKind::Ball { n } if n == 0 => {
                bad("need n >= 1")
            }
            _ => Ok(Self(kind)),
        }
    }

    pub fn type_i(m: usize, n: usize) -> Result<Self> {
        Self::new(DomainKind::TypeI { m, n })
    }
    pub fn type_ii(n: usize) -> Result<Self> {
        Self::new(DomainKind::TypeII { n })
    }
    pub fn type_iii(size: usize) -> Result<Self> {
        Self::new(DomainKind::TypeIII { size })
    }
    pub fn type_iv(n: usize) -> Result<Self> {
        Self::new(DomainKind::TypeIV { n })
    }
    pub fn polydisc(n: usize) -> Result<Self> {
        Self::new(DomainKind::Polydisc { n })
    }
    pub fn ball(n: usize) -> Result<Self> {
        Self::new(DomainKind::Ball { n })
    }

    pub fn kind(&self) -> DomainKind {
        self.0
    }

    /// Complex dimension.
    pub fn dim(&self) -> usize {
        match self.0 {
            DomainKind::TypeI { m, n } => m * n,
            DomainKind::TypeII { n } => n * (n + 1) / 2,
            DomainKind::TypeIII { size } => size * (size - 1) / 2,
            DomainKind::TypeIV { n } | DomainKind::Polydisc { n } | DomainKind::Ball { n } => n,
        }
    }

    /// Rank, multiplicity, genus, dimension and the kernel exponent.
    ///
    /// The polydisc reports the per-factor disc values with rank n and the
    /// ball those of `I(1,n)`.
    pub fn characteristics(&self) -> Characteristics {
        let (rank, multiplicity, genus, k) = match self.0 {
            DomainKind::TypeI { m, n } => (m, 2, m + n, 1.0),
            DomainKind::TypeII { n } => (n, 1, n + 1, 1.0),
            DomainKind::TypeIII { size } => (size / 2, 4, 2 * (size - 1), 0.5),
            DomainKind::TypeIV { n } => (2, n - 2, n, 1.0),
            DomainKind::Polydisc { n } => (n, 0, 2, 1.0),
            DomainKind::Ball { n } => (1, 2, n + 1, 1.0),
        };
        Characteristics { rank, multiplicity, genus, dim: self.dim(), k, lambda: genus as f64 * k }
    }

    pub fn is_matrix_kind(&self) -> bool {
        matches!(self.0, DomainKind::TypeI { .. } | DomainKind::TypeII { .. } | DomainKind::TypeIII { .. })
    }

    pub(crate) fn check_dim(&self, z: &[C64]) -> Result<()> {
        if z.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: z.len() });
        }
        Ok(())
    }

    /// Shape of the matrix view of a point.
    pub fn matrix_shape(&self) -> Option<(usize, usize)> {
        match self.0 {
            DomainKind::TypeI { m, n } => Some((m, n)),
            DomainKind::TypeII { n } => Some((n, n)),
            DomainKind::TypeIII { size } => Some((size, size)),
            _ => None,
        }
    }

    /// Pairs `(row, col)` addressed by each coordinate of a matrix kind.
    pub fn coordinate_entries(&self) -> Vec<(usize, usize)> {
        match self.0 {
            DomainKind::TypeI { m, n } => (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).collect(),
            DomainKind::TypeII { n } => (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect(),
            DomainKind::TypeIII { size } => (0..size).flat_map(|i| (i + 1..size).map(move |j| (i, j))).collect(),
            _ => Vec::new(),
        }
    }

    /// Full matrix of a point of a matrix kind.
    pub fn matrix(&self, z: &[C64]) -> Result<CMat> {
        self.check_dim(z)?;
        let (rows, cols) = self
            .matrix_shape()
            .ok_or_else(|| Error::InvalidArgument(format!("{self} has no matrix view")))?;
        let mut m = CMat::zeros(rows, cols);
        for (&(i, j), &v) in self.coordinate_entries().iter().zip(z) {
            m[(i, j)] = v;
            match self.0 {
                DomainKind::TypeII { .. } => m[(j, i)] = v,
                DomainKind::TypeIII { .. } => m[(j, i)] = -v,
                _ => {}
            }
        }
        Ok(m)
    }

    /// Independent coordinates of a matrix; rejects matrices that are not
    /// exactly symmetric (type II) or skew-symmetric (type III).
    pub fn from_matrix(&self, m: &CMat) -> Result<DomainPoint> {
        let (rows, cols) = self
            .matrix_shape()
            .ok_or_else(|| Error::InvalidArgument(format!("{self} has no matrix view")))?;
        if m.rows() != rows || m.cols() != cols {
            return Err(Error::Dimension { expected: rows * cols, got: m.rows() * m.cols() });
        }
        let structured = (0..rows).all(|i| {
            (0..cols).all(|j| match self.0 {
                DomainKind::TypeII { .. } => m[(i, j)] == m[(j, i)],
                DomainKind::TypeIII { .. } => m[(i, j)] == -m[(j, i)],
                _ => true,
            })
        });
        if !structured {
            return Err(Error::InvalidArgument(format!("matrix lacks the symmetry of {self}")));
        }
        Ok(DomainPoint::new(self.coordinate_entries().iter().map(|&ij| m[ij]).collect()))
    }

    /// Membership with strict inequalities and no tolerance band.
    pub fn contains(&self, z: &[C64]) -> Result<bool> {
        self.check_dim(z)?;
        Ok(self.contains_unchecked(z))
    }

    pub(crate) fn contains_unchecked(&self, z: &[C64]) -> bool {
        match self.0 {
            DomainKind::Polydisc { .. } => z.iter().all(|w| w.norm_sqr() < 1.0),
            DomainKind::Ball { .. } => norm_sqr(z) < 1.0,
            DomainKind::TypeIV { .. } => {
                let (r, s) = lie_quantities(z);
                r > 0.0 && s.norm_sqr() < 1.0
            }
            _ => {
                // I - zz^* positive definite, i.e. largest singular value below one.
                let m = self.matrix(z).expect("dimension checked");
                m.identity_minus_mul_adjoint(&m).cholesky().is_some()
            }
        }
    }

    /// The norm whose open unit ball is the domain: largest singular value for
    /// matrix kinds, the Lie norm for type IV, sup and Euclidean norms for the
    /// polydisc and the ball.
    pub fn gauge(&self, z: &[C64]) -> Result<f64> {
        self.check_dim(z)?;
        Ok(self.gauge_unchecked(z))
    }

    pub(crate) fn gauge_unchecked(&self, z: &[C64]) -> f64 {
        match self.0 {
            DomainKind::Polydisc { .. } => z.iter().map(|w| w.norm()).fold(0.0, f64::max),
            DomainKind::Ball { .. } => norm_sqr(z).sqrt(),
            DomainKind::TypeIV { .. } => lie_norm(z),
            _ => self.matrix(z).expect("dimension checked").spectral_norm(),
        }
    }

    /// Euclidean distance to the boundary.
    ///
    /// Matrix kinds use `1 - sigma_max`. For the Lie ball the nearest boundary
    /// point lies along the minimal tripotent carrying the largest spectral
    /// value, which has Euclidean length `1/sqrt(2)` per unit of Lie norm.
    pub fn boundary_distance(&self, z: &[C64]) -> Result<f64> {
        if !self.contains(z)? {
            return Err(self.outside(z));
        }
        Ok(match self.0 {
            DomainKind::TypeIV { .. } => (1.0 - lie_norm(z)) / SQRT_2,
            _ => 1.0 - self.gauge_unchecked(z),
        })
    }

    pub(crate) fn outside(&self, z: &[C64]) -> Error {
        Error::OutsideDomain { domain: self.to_string(), detail: format!("gauge {:.6}", self.gauge_unchecked(z)) }
    }

    /// The rank-two point `t e1 + T e2`.
    pub fn test_path(&self, t: f64, big_t: f64) -> Result<DomainPoint> {
        if !(0.0..1.0).contains(&big_t) || !(0.0..=big_t).contains(&t) {
            return Err(Error::InvalidArgument(format!("need 0 <= t <= T < 1, got t={t}, T={big_t}")));
        }
        let zero = C64::new(0.0, 0.0);
        let mut z = vec![zero; self.dim()];
        match self.0 {
            DomainKind::TypeI { m: 2, n } => {
                z[0] = t.into();
                z[n + 1] = big_t.into();
            }
            DomainKind::TypeII { n: 2 } => {
                z[0] = t.into();
                z[2] = big_t.into();
            }
            DomainKind::TypeIII { size: 4 | 5 } => {
                let entries = self.coordinate_entries();
                z[entries.iter().position(|&e| e == (0, 1)).unwrap()] = t.into();
                z[entries.iter().position(|&e| e == (2, 3)).unwrap()] = big_t.into();
            }
            DomainKind::TypeIV { .. } => {
                z[0] = C64::new(0.5 * (t + big_t), 0.0);
                z[1] = C64::new(0.0, 0.5 * (t - big_t));
            }
            DomainKind::Polydisc { n: 2 } => {
                z[0] = t.into();
                z[1] = big_t.into();
            }
            _ => return Err(Error::InvalidArgument(format!("{self} is not a supported rank-two domain"))),
        }
        Ok(DomainPoint::new(z))
    }

    /// Whether `test_path` is available.
    pub fn has_test_path(&self) -> bool {
        self.test_path(0.0, 0.0).is_ok()
    }

    /// Squared radius of the Frobenius ball enclosing a matrix domain, in
    /// coordinates where off-diagonal entries of type II carry weight 2.
    fn envelope_radius_sq(&self) -> f64 {
        match self.0 {
            DomainKind::TypeI { m, .. } => m as f64,
            DomainKind::TypeII { n } => n as f64,
            DomainKind::TypeIII { size } => (size / 2) as f64,
            _ => 1.0,
        }
    }

    /// Volume of the rejection envelope and a draw from it. Matrix domains use
    /// the ellipsoid `Σ w_e |z_e|^2 < r` implied by `‖Z‖_F^2 < rank`.
    fn envelope_volume(&self) -> f64 {
        let n = self.dim();
        let ball = PI.powi(n as i32) / factorial(n);
        match self.0 {
            DomainKind::Polydisc { .. } => PI.powi(n as i32),
            DomainKind::TypeII { n: size } => {
                let off_diagonal = (n - size) as i32;
                ball * self.envelope_radius_sq().powi(n as i32) * 0.5f64.powi(off_diagonal)
            }
            _ => ball * self.envelope_radius_sq().powi(n as i32),
        }
    }

    fn propose<R: Rng>(&self, rng: &mut R, out: &mut [C64]) {
        match self.0 {
            DomainKind::Polydisc { .. } => out.iter_mut().for_each(|z| *z = rng::disc(rng)),
            DomainKind::TypeIV { .. } | DomainKind::Ball { .. } => rng::ball(rng, out),
            DomainKind::TypeII { n } => {
                rng::ball(rng, out);
                let r = self.envelope_radius_sq().sqrt();
                let mut k = 0;
                for i in 0..n {
                    out[k] *= r;
                    for z in &mut out[k + 1..k + n - i] {
                        *z *= r * FRAC_1_SQRT_2;
                    }
                    k += n - i;
                }
            }
            _ => {
                rng::ball(rng, out);
                let r = self.envelope_radius_sq().sqrt();
                out.iter_mut().for_each(|z| *z *= r);
            }
        }
    }

    /// The `index`-th uniform point for `seed`; returns the number of proposals
    /// it took.
    pub fn uniform_point(&self, key: &StreamKey, index: u64, out: &mut [C64]) -> u64 {
        self.uniform_point_from(&mut key.stream(index), out)
    }

    pub(crate) fn uniform_point_from<R: Rng>(&self, rng: &mut R, out: &mut [C64]) -> u64 {
        let mut tries = 0;
        loop {
            tries += 1;
            self.propose(rng, out);
            if matches!(self.0, DomainKind::Polydisc { .. } | DomainKind::Ball { .. }) || self.contains_unchecked(out) {
                return tries;
            }
        }
    }

    /// `count` i.i.d. uniform points; point i depends only on `(seed, i)`.
    pub fn sample_uniform(&self, seed: u64, count: usize) -> Result<Vec<DomainPoint>> {
        if count == 0 {
            return Err(Error::InvalidArgument("count must be at least 1".into()));
        }
        let key = StreamKey::new(seed, Purpose::Uniform);
        Ok((0..count as u64)
            .into_par_iter()
            .map(|i| {
                let mut z = vec![C64::new(0.0, 0.0); self.dim()];
                self.uniform_point(&key, i, &mut z);
                DomainPoint::new(z)
            })
            .collect())
    }

    /// Lebesgue volume: closed form for the polydisc and ball, a rejection
    /// estimate with binomial standard error otherwise.
    pub fn volume(&self, seed: u64, samples: u64) -> Result<McEstimate> {
        if samples < 10_000 {
            return Err(Error::InvalidArgument("volume needs at least 1e4 samples".into()));
        }
        let exact = match self.0 {
            DomainKind::Polydisc { n } => Some(PI.powi(n as i32)),
            DomainKind::Ball { n } => Some(PI.powi(n as i32) / factorial(n)),
            _ => None,
        };
        if let Some(v) = exact {
            return Ok(McEstimate::exact(v, samples, seed));
        }
        let key = StreamKey::new(seed, Purpose::Volume);
        let chunk = 1u64 << 14;
        let hits: u64 = (0..samples.div_ceil(chunk))
            .into_par_iter()
            .map(|c| {
                let mut z = vec![C64::new(0.0, 0.0); self.dim()];
                (c * chunk..((c + 1) * chunk).min(samples))
                    .filter(|&i| {
                        self.propose(&mut key.stream(i), &mut z);
                        self.contains_unchecked(&z)
                    })
                    .count() as u64
            })
            .sum();
        let p = hits as f64 / samples as f64;
        let env = self.envelope_volume();
        Ok(McEstimate::new(env * p, env * (p * (1.0 - p) / samples as f64).sqrt(), samples, seed))
    }

    /// Shared volume estimate used to normalise the kernel; memoised per
    /// domain for the life of the process.
    pub fn reference_volume(&self) -> McEstimate {
        static CACHE: OnceLock<Mutex<HashMap<Domain, McEstimate>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(v) = cache.lock().unwrap().get(self) {
            return *v;
        }
        let v = self.volume(REFERENCE_VOLUME_SEED, REFERENCE_VOLUME_PROPOSALS).expect("proposal count is valid");
        *cache.lock().unwrap().entry(*self).or_insert(v)
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            DomainKind::TypeI { m, n } => write!(f, "I({m},{n})"),
            DomainKind::TypeII { n } => write!(f, "II({n})"),
            DomainKind::TypeIII { size } => write!(f, "III({size})"),
            DomainKind::TypeIV { n } => write!(f, "IV({n})"),
            DomainKind::Polydisc { n } => write!(f, "D({n})"),
            DomainKind::Ball { n } => write!(f, "B({n})"),
        }
    }
}

impl FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidDescriptor(s.to_string());
        let s = s.trim();
        let open = s.find('(').ok_or_else(bad)?;
        let args = s[open..].strip_prefix('(').and_then(|r| r.strip_suffix(')')).ok_or_else(bad)?;
        let nums = args
            .split(',')
            .map(|a| a.trim().parse::<usize>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        let kind = match (s[..open].trim(), nums.as_slice()) {
            ("I", &[m, n]) => DomainKind::TypeI { m, n },
            ("II", &[n]) => DomainKind::TypeII { n },
            ("III", &[size]) => DomainKind::TypeIII { size },
            ("IV", &[n]) => DomainKind::TypeIV { n },
            ("D", &[n]) => DomainKind::Polydisc { n },
            ("B", &[n]) => DomainKind::Ball { n },
            _ => return Err(bad()),
        };
        Domain::new(kind)
    }
}

impl Serialize for Domain {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Domain {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Coordinates of a point in C^N.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainPoint {
    pub coords: Vec<C64>,
}

impl DomainPoint {
    pub fn new(coords: Vec<C64>) -> Self {
        Self { coords }
    }

    pub fn origin(dim: usize) -> Self {
        Self::new(vec![C64::new(0.0, 0.0); dim])
    }

    pub fn from_reals(xs: &[f64]) -> Self {
        Self::new(xs.iter().map(|&x| C64::new(x, 0.0)).collect())
    }
}

impl Deref for DomainPoint {
    type Target = [C64];
    fn deref(&self) -> &[C64] {
        &self.coords
    }
}

pub(crate) fn norm_sqr(z: &[C64]) -> f64 {
    z.iter().map(|w| w.norm_sqr()).sum()
}

/// `s(z) = sum z_j^2`.
pub(crate) fn quadratic(z: &[C64]) -> C64 {
    z.iter().map(|w| w * w).sum()
}

/// `(1 - 2|z|^2 + |s(z)|^2, s(z))`.
pub(crate) fn lie_quantities(z: &[C64]) -> (f64, C64) {
    let s = quadratic(z);
    (1.0 - 2.0 * norm_sqr(z) + s.norm_sqr(), s)
}

/// Lie norm `sqrt(|z|^2 + sqrt(|z|^4 - |s(z)|^2))`.
pub(crate) fn lie_norm(z: &[C64]) -> f64 {
    let n2 = norm_sqr(z);
    let s = quadratic(z).norm();
    (n2 + (n2 * n2 - s * s).max(0.0).sqrt()).sqrt()
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

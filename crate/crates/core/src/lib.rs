//! Bergman kernels, Bergman-type metrics and Monte-Carlo kernel integrals on
//! the classical bounded symmetric domains, the polydisc and the ball.

pub mod asymptotics;
pub mod domains;
pub mod error;
pub mod integrals;
pub mod kernel;
pub mod linalg;
pub mod mc;
pub mod report;
pub mod rng;
pub mod scenario;

pub use domains::{Characteristics, Domain, DomainKind, DomainPoint};
pub use error::{Error, Result};
pub use kernel::{Bergman, BuiltinForm, FormFn, HermitianMetricAt, KernelValue, OneForm};
pub use linalg::{CMat, C64};
pub use mc::{McConfig, McEstimate, McMethod, SampleSet};
pub use num_complex::Complex64;

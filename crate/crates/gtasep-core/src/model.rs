//! Model parameters, particle configurations and the jump-probability law.
//!
//! Particle indexing convention used everywhere in this crate: the particle
//! with the *smaller* index is the *rightmost* one, `x_n > x_{n'}` whenever
//! `n < n'`.  This matches the usual labelling for step initial data
//! (`x_n(0) = -n`, `n >= 1`) and is the dominant off-by-one hazard when
//! wiring kernels to simulations, so double-check it before touching index
//! arithmetic.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("jump probability p must lie in (0,1), got {0}")]
    BadP(f64),
    #[error("follow probability mu must lie in [0,1), got {0}")]
    BadMu(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unsupported operation: {0}")]
    Unsupported(String),
}

/// Jump/follow probabilities `(p, mu)` with the derived pair `(nu, lambda)`.
///
/// `nu` and `lambda` are always recomputed from `(p, mu)`; they are never
/// read from files, so the four numbers cannot get out of sync.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    p: f64,
    mu: f64,
    nu: f64,
    lambda: f64,
}

impl ModelParams {
    /// `mu = 1` (the deterministic-aggregation point proper) is rejected:
    /// `nu = 1` there and `lambda` diverges, which makes every formula in the
    /// stationary chart singular.  Transitional studies use `mu < 1` with
    /// large `lambda` instead.
    pub fn new(p: f64, mu: f64) -> Result<Self, ModelError> {
        if !(p > 0.0 && p < 1.0) || !p.is_finite() {
            return Err(ModelError::BadP(p));
        }
        if !(0.0..1.0).contains(&mu) || !mu.is_finite() {
            return Err(ModelError::BadMu(mu));
        }
        let nu = (mu - p) / (1.0 - p);
        Ok(ModelParams {
            p,
            mu,
            nu,
            lambda: 1.0 / (1.0 - nu),
        })
    }

    /// Parameters with `nu = 1 - 1/lambda` at fixed `p`, the parametrization
    /// used in the transitional regime.
    pub fn from_lambda(p: f64, lambda: f64) -> Result<Self, ModelError> {
        if lambda < 1.0 {
            return Err(ModelError::InvalidArgument(format!(
                "lambda must be >= 1, got {lambda}"
            )));
        }
        let nu = 1.0 - 1.0 / lambda;
        let mu = nu * (1.0 - p) + p;
        Self::new(p, mu)
    }

    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn nu(&self) -> f64 {
        self.nu
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl<'de> Deserialize<'de> for ModelParams {
    fn deserialize<D>(deserializer: D) -> Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        #[derive(Deserialize)]
        struct Raw {
            p: f64,
            mu: f64,
        }
        let raw = Raw::deserialize(deserializer)?;
        ModelParams::new(raw.p, raw.mu).map_err(serde::de::Error::custom)
    }
}

/// Exact-rational mirror of [`ModelParams`] for the residue oracle and the
/// brute-force tests.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalParams {
    pub p: BigRational,
    pub mu: BigRational,
    pub nu: BigRational,
    pub lambda: BigRational,
}

impl RationalParams {
    pub fn new(p: BigRational, mu: BigRational) -> Result<Self, ModelError> {
        let zero = BigRational::zero();
        let one = BigRational::one();
        if p <= zero || p >= one {
            return Err(ModelError::BadP(ratio_to_f64(&p)));
        }
        if mu < zero || mu >= one {
            return Err(ModelError::BadMu(ratio_to_f64(&mu)));
        }
        let nu = (&mu - &p) / (&one - &p);
        let lambda = (&one - &nu).recip();
        Ok(RationalParams { p, mu, nu, lambda })
    }

    /// Convenience constructor from integer fractions.
    pub fn from_fracs(p: (i64, i64), mu: (i64, i64)) -> Result<Self, ModelError> {
        Self::new(big_ratio(p.0, p.1), big_ratio(mu.0, mu.1))
    }

    pub fn to_float(&self) -> Result<ModelParams, ModelError> {
        ModelParams::new(ratio_to_f64(&self.p), ratio_to_f64(&self.mu))
    }
}

pub fn big_ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn ratio_to_f64(r: &BigRational) -> f64 {
    let num = r.numer();
    let den = r.denom();
    // Good enough for diagnostics and for values that fit comfortably in f64.
    let nf: f64 = num.to_string().parse().unwrap_or(f64::NAN);
    let df: f64 = den.to_string().parse().unwrap_or(f64::NAN);
    nf / df
}

/// Exclusion-picture configuration: particles as `(index, position)` with
/// positions strictly decreasing in the index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeConfig {
    particles: Vec<(i64, i64)>,
    window: (i64, i64),
}

impl LatticeConfig {
    pub fn new(particles: Vec<(i64, i64)>, window: (i64, i64)) -> Result<Self, ModelError> {
        for pair in particles.windows(2) {
            if pair[0].0 >= pair[1].0 {
                return Err(ModelError::InvalidArgument(
                    "particle indices must be strictly increasing".into(),
                ));
            }
            if pair[0].1 <= pair[1].1 {
                return Err(ModelError::InvalidArgument(
                    "positions must strictly decrease with the index".into(),
                ));
            }
        }
        if let (Some(first), Some(last)) = (particles.first(), particles.last()) {
            if first.1 > window.1 || last.1 < window.0 {
                return Err(ModelError::InvalidArgument(
                    "positions outside the window".into(),
                ));
            }
        }
        Ok(LatticeConfig { particles, window })
    }

    pub fn particles(&self) -> &[(i64, i64)] {
        &self.particles
    }
    pub fn window(&self) -> (i64, i64) {
        self.window
    }
    pub fn positions(&self) -> Vec<i64> {
        self.particles.iter().map(|&(_, x)| x).collect()
    }
}

/// Zero-range-picture configuration: occupation numbers per site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZrpConfig {
    pub occupations: Vec<u64>,
}

impl ZrpConfig {
    pub fn total_particles(&self) -> u64 {
        self.occupations.iter().sum()
    }
}

/// Map an exclusion configuration (as site occupancy over its window) to the
/// zero-range picture: a cluster of `n` adjacent particles plus its empty
/// site on the right becomes one site holding `n` particles.
///
/// The scan runs right-to-left so that ZRP site order matches the cluster
/// order seen by the dynamics.
pub fn zrp_from_asep(occupancy: &[bool]) -> ZrpConfig {
    let mut occupations = Vec::new();
    let mut run = 0u64;
    for &occ in occupancy.iter().rev() {
        if occ {
            run += 1;
        } else {
            occupations.push(run);
            run = 0;
        }
    }
    occupations.push(run);
    ZrpConfig { occupations }
}

/// Inverse of [`zrp_from_asep`]: rebuilds the occupancy string (rightmost ZRP
/// site first in the input, leftmost lattice site first in the output).
pub fn asep_from_zrp(cfg: &ZrpConfig) -> Vec<bool> {
    let mut rev = Vec::new();
    for (i, &n) in cfg.occupations.iter().enumerate() {
        for _ in 0..n {
            rev.push(true);
        }
        if i + 1 < cfg.occupations.len() {
            rev.push(false);
        }
    }
    rev.reverse();
    rev
}

/// Initial conditions understood by the simulator and the exact kernels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InitialCondition {
    /// `x_n(0) = -n`, `n >= 1`.
    Step,
    /// `x_n(0) = -2n`, `n` ranging over all integers.
    Alternating,
    /// Periodic lattice of `sites` sites holding `particles` particles.
    Ring { sites: u64, particles: u64 },
    /// Explicit finite configuration, positions strictly decreasing.
    Finite(Vec<i64>),
}

impl InitialCondition {
    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            InitialCondition::Ring { sites, particles } => {
                if *particles == 0 || particles >= sites {
                    return Err(ModelError::InvalidArgument(format!(
                        "ring needs 1 <= M < L, got M={particles}, L={sites}"
                    )));
                }
            }
            InitialCondition::Finite(xs) => {
                if xs.is_empty() || xs.windows(2).any(|w| w[0] <= w[1]) {
                    return Err(ModelError::InvalidArgument(
                        "finite IC needs nonempty strictly decreasing positions".into(),
                    ));
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn initial_position(&self, n: i64) -> Result<i64, ModelError> {
        match self {
            InitialCondition::Step => {
                if n < 1 {
                    Err(ModelError::InvalidArgument(format!(
                        "step IC defines particles n >= 1 only, got {n}"
                    )))
                } else {
                    Ok(-n)
                }
            }
            InitialCondition::Alternating => Ok(-2 * n),
            InitialCondition::Finite(xs) => {
                let idx = usize::try_from(n - 1).ok().filter(|&i| i < xs.len());
                idx.map(|i| xs[i]).ok_or_else(|| {
                    ModelError::InvalidArgument(format!("finite IC has no particle {n}"))
                })
            }
            InitialCondition::Ring { .. } => Err(ModelError::Unsupported(
                "ring IC has no tagged initial positions on the line".into(),
            )),
        }
    }
}

/// Reachable range of `x_n(t)`: particles never move left and advance at
/// most one site per tick.
pub fn support_bounds(
    ic: &InitialCondition,
    n: i64,
    t: u64,
) -> Result<(i64, i64), ModelError> {
    match ic {
        InitialCondition::Step | InitialCondition::Alternating => {
            let x0 = ic.initial_position(n)?;
            Ok((x0, x0 + t as i64))
        }
        _ => Err(ModelError::Unsupported(
            "support bounds are defined for step/alternating IC".into(),
        )),
    }
}

/// Joint query `P(x_{n_1} >= a_1, ..., x_{n_m} >= a_m)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggedQuery {
    entries: Vec<(i64, i64)>,
}

impl TaggedQuery {
    pub fn new(entries: Vec<(i64, i64)>) -> Result<Self, ModelError> {
        if entries.is_empty() {
            return Err(ModelError::InvalidArgument("query needs m >= 1".into()));
        }
        if entries.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(ModelError::InvalidArgument(
                "query indices must be strictly increasing".into(),
            ));
        }
        Ok(TaggedQuery { entries })
    }

    pub fn entries(&self) -> &[(i64, i64)] {
        &self.entries
    }
    pub fn indices(&self) -> Vec<i64> {
        self.entries.iter().map(|&(n, _)| n).collect()
    }
}

/// One-step law of a cluster of size `k`: probabilities that `l = 0..=k` of
/// its particles jump.
///
/// `phi(0|k) = 1-p`, `phi(l|k) = p mu^(l-1) (1-mu)` for `0 < l < k`,
/// `phi(k|k) = p mu^(k-1)`.
pub fn jump_distribution(k: u64, params: &ModelParams) -> Result<Vec<f64>, ModelError> {
    if k < 1 {
        return Err(ModelError::InvalidArgument(format!(
            "cluster size must be >= 1, got {k}"
        )));
    }
    let (p, mu) = (params.p(), params.mu());
    let mut out = Vec::with_capacity(k as usize + 1);
    out.push(1.0 - p);
    let mut head = p; // p * mu^(l-1)
    for _l in 1..k {
        out.push(head * (1.0 - mu));
        head *= mu;
    }
    out.push(head);
    Ok(out)
}

/// Rational-arithmetic version of [`jump_distribution`].
pub fn jump_distribution_exact(
    k: u64,
    params: &RationalParams,
) -> Result<Vec<BigRational>, ModelError> {
    if k < 1 {
        return Err(ModelError::InvalidArgument(format!(
            "cluster size must be >= 1, got {k}"
        )));
    }
    let one = BigRational::one();
    let mut out = Vec::with_capacity(k as usize + 1);
    out.push(&one - &params.p);
    let mut head = params.p.clone();
    for _l in 1..k {
        out.push(&head * (&one - &params.mu));
        head *= &params.mu;
    }
    out.push(head);
    Ok(out)
}

/// The q-Hahn jump weight at `q = 0`.
///
/// Evaluated through the q-Pochhammer product structure
/// `mu^m (nu/mu;q)_m (mu;q)_{n-m} / (nu;q)_n` at `q = 0`, where
/// `(a;0)_n = (1-a)` for `n >= 1` and `1` for `n = 0`.  The `m >= 1` factor
/// `mu^m (1 - nu/mu)` is expanded to `mu^m - nu mu^{m-1}` so that `mu = 0`
/// stays finite.  This is the independent consistency route against
/// [`jump_distribution`].
pub fn qhahn_weight(m: u64, n: u64, params: &ModelParams) -> Result<f64, ModelError> {
    if m > n {
        return Err(ModelError::InvalidArgument(format!(
            "need 0 <= m <= n, got m={m}, n={n}"
        )));
    }
    let (mu, nu) = (params.mu(), params.nu());
    let v = if m == 0 {
        1.0
    } else {
        mu.powi(m as i32) - nu * mu.powi(m as i32 - 1)
    };
    let w = if n - m == 0 { 1.0 } else { 1.0 - mu };
    let f = if n == 0 { 1.0 } else { 1.0 - nu };
    Ok(v * w / f)
}

//! Stationary-state and hydrodynamic closed forms.
//!
//! Everything is kept in the parametric form of the fugacity `z_c in (0,1)`:
//! density, current, scaled coordinate/index, fluctuation and correlation
//! units, and the KPZ invariants.  Density-indexed access goes through
//! [`fugacity_from_density`]; eliminating `z_c` symbolically is a mess of
//! high-degree roots and is never needed.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::model::{ModelParams, RationalParams};

#[derive(Debug, Error, PartialEq)]
pub enum ChartError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("root finding failed: {0}")]
    RootFind(String),
}

/// Fugacity of the translation-invariant stationary state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fugacity(pub f64);

impl Fugacity {
    pub fn new(z: f64) -> Result<Self, ChartError> {
        if !(z > 0.0 && z < 1.0) {
            return Err(ChartError::InvalidArgument(format!(
                "fugacity must lie in (0,1), got {z}"
            )));
        }
        Ok(Fugacity(z))
    }
}

/// The `z_c`-parametrized bundle of stationary observables.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StationaryChart {
    pub z_c: f64,
    /// particle density
    pub c: f64,
    /// stationary current
    pub j_inf: f64,
    /// scaled position (ray slope of the rarefaction fan)
    pub chi: f64,
    /// scaled particle index
    pub theta: f64,
    /// fluctuation unit
    pub kappa_f: f64,
    /// correlation unit
    pub kappa_c: f64,
}

/// Dimensionful KPZ invariants read off the stationary state.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct KpzInvariants {
    /// lateral growth coefficient, (1/2) d^2 j / dc^2
    pub lambda_tilde: f64,
    /// stationary fluctuation amplitude
    pub amplitude: f64,
    /// finite-size velocity correction, -A*lambda_tilde/2
    pub b_v: f64,
}

impl KpzInvariants {
    /// Correlation length `xi(t) = (|lambda| A^2 t)^(2/3) / A`.
    pub fn correlation_length(&self, t: f64) -> f64 {
        (self.lambda_tilde.abs() * self.amplitude * self.amplitude * t).powf(2.0 / 3.0)
            / self.amplitude
    }
}

pub fn density(z: f64, params: &ModelParams) -> f64 {
    let nu = params.nu();
    (1.0 - nu) * z / (nu * z * z - 2.0 * nu * z + 1.0)
}

pub fn current(z: f64, params: &ModelParams) -> f64 {
    let (mu, nu) = (params.mu(), params.nu());
    (mu - nu) * (1.0 - z) * z / ((1.0 - mu * z) * (1.0 - nu * (2.0 - z) * z))
}

pub fn chi_of_z(z: f64, params: &ModelParams) -> f64 {
    let (mu, nu) = (params.mu(), params.nu());
    let num = 1.0 - 2.0 * z + z * z * (mu + nu - 2.0 * mu * nu) - mu * nu * z.powi(4)
        + 2.0 * mu * nu * z.powi(3);
    (mu - nu) * num / ((1.0 - nu) * (1.0 - mu * z).powi(2) * (1.0 - nu * z * z))
}

pub fn theta_of_z(z: f64, params: &ModelParams) -> f64 {
    let (mu, nu) = (params.mu(), params.nu());
    (mu - nu) * (1.0 - mu) * z * z / ((1.0 - mu * z).powi(2) * (1.0 - nu * z * z))
}

pub fn kappa_f_of_z(z: f64, params: &ModelParams) -> f64 {
    let (mu, nu) = (params.mu(), params.nu());
    let a = ((1.0 - mu) * (mu - nu) * (1.0 - mu * nu * z.powi(3))).cbrt();
    let b = ((1.0 - nu * z) * (1.0 - z)).powf(2.0 / 3.0);
    let d = (1.0 - nu) * (1.0 - mu * z) * (z * (1.0 - nu * z * z)).cbrt();
    a * b / d
}

pub fn kappa_c_of_z(z: f64, params: &ModelParams) -> f64 {
    let (mu, nu) = (params.mu(), params.nu());
    let a = z.powf(4.0 / 3.0) * ((1.0 - nu * z) * (1.0 - z)).cbrt();
    let b = ((1.0 - mu) * (mu - nu) * (1.0 - mu * nu * z.powi(3))).powf(2.0 / 3.0);
    let d = (1.0 - mu * z).powi(2) * (1.0 - nu * z * z).powf(5.0 / 3.0);
    a * b / d
}

/// `dc/dz` and `dj/dz`, differentiated by hand through the chain rule; the
/// ratio is `j'(c)`, which must coincide with `chi_of_z` (tested).
pub fn dj_dc(z: f64, params: &ModelParams) -> f64 {
    let (mu, nu) = (params.mu(), params.nu());
    let d1 = 1.0 - 2.0 * nu * z + nu * z * z;
    let dc = (1.0 - nu) * (1.0 - nu * z * z) / (d1 * d1);
    let n = z - z * z;
    let m = (1.0 - mu * z) * d1;
    let np = 1.0 - 2.0 * z;
    let mp = -mu * d1 + (1.0 - mu * z) * 2.0 * nu * (z - 1.0);
    let dj = (mu - nu) * (np * m - n * mp) / (m * m);
    dj / dc
}

/// Inverts `c(z_c)` for the physical branch `z_c^- in (0,1)` in the
/// cancellation-free form `z = 1 - 2(1-c)/(1 + sqrt(1 + 4(1-c)c nu/(1-nu)))`.
pub fn fugacity_from_density(c: f64, params: &ModelParams) -> Result<Fugacity, ChartError> {
    if !(c > 0.0 && c < 1.0) {
        return Err(ChartError::InvalidArgument(format!(
            "density must lie in (0,1), got {c}"
        )));
    }
    let nu = params.nu();
    let disc = 1.0 + 4.0 * (1.0 - c) * c * nu / (1.0 - nu);
    if disc <= 0.0 {
        return Err(ChartError::RootFind(format!(
            "saddle-point discriminant {disc} <= 0"
        )));
    }
    let z = 1.0 - 2.0 * (1.0 - c) / (1.0 + disc.sqrt());
    Fugacity::new(z)
}

pub fn chart_from_fugacity(z: Fugacity, params: &ModelParams) -> StationaryChart {
    let z = z.0;
    StationaryChart {
        z_c: z,
        c: density(z, params),
        j_inf: current(z, params),
        chi: chi_of_z(z, params),
        theta: theta_of_z(z, params),
        kappa_f: kappa_f_of_z(z, params),
        kappa_c: kappa_c_of_z(z, params),
    }
}

pub fn chart_at_density(c: f64, params: &ModelParams) -> Result<StationaryChart, ChartError> {
    Ok(chart_from_fugacity(fugacity_from_density(c, params)?, params))
}

pub fn kpz_invariants(z: Fugacity, params: &ModelParams) -> KpzInvariants {
    let z = z.0;
    let (mu, nu) = (params.mu(), params.nu());
    let d1 = 1.0 - nu * (2.0 - z) * z;
    let lambda_tilde = -(1.0 - mu) * (mu - nu) / (1.0 - nu).powi(2) * d1.powi(3)
        * (1.0 - mu * nu * z.powi(3))
        / ((1.0 - mu * z).powi(3) * (1.0 - nu * z * z).powi(3));
    let b_v = 2.0 * (1.0 - mu) * (mu - nu) / (1.0 - nu) * (1.0 - z) * z * (1.0 - nu * z)
        * (1.0 - mu * nu * z.powi(3))
        / ((1.0 - mu * z).powi(3) * (1.0 - nu * z * z).powi(2));
    let amplitude = -2.0 * b_v / lambda_tilde;
    KpzInvariants {
        lambda_tilde,
        amplitude,
        b_v,
    }
}

/// Fluctuation unit rebuilt from the dimensionful invariants,
/// `(1/2c) (|lambda| A^2 / 2)^(1/3)`; the second route against
/// [`kappa_f_of_z`].
pub fn kappa_f_from_invariants(z: Fugacity, params: &ModelParams) -> f64 {
    let inv = kpz_invariants(z, params);
    let c = density(z.0, params);
    (inv.lambda_tilde.abs() * inv.amplitude * inv.amplitude / 2.0).cbrt() / (2.0 * c)
}

/// Correlation unit from the invariants, `(c/A)(|lambda| A^2/2)^(2/3)`.
pub fn kappa_c_from_invariants(z: Fugacity, params: &ModelParams) -> f64 {
    let inv = kpz_invariants(z, params);
    let c = density(z.0, params);
    c / inv.amplitude
        * (inv.lambda_tilde.abs() * inv.amplitude * inv.amplitude / 2.0).powf(2.0 / 3.0)
}

/// Right and left edges of the rarefaction fan, `(j'(1), j'(0)) = (chi at
/// z->1, chi at z->0)`.
pub fn fan_edges(params: &ModelParams) -> (f64, f64) {
    let left = -params.p() / (1.0 - params.mu());
    let right = params.p();
    (left, right)
}

/// Density profile of the rarefaction fan: solves `j'(c) = chi` through the
/// monotone parametric chart; returns 0 or 1 outside the fan.
pub fn hydrodynamic_profile(chi: f64, params: &ModelParams) -> Result<f64, ChartError> {
    let (left, right) = fan_edges(params);
    if chi >= right {
        return Ok(0.0);
    }
    if chi < left {
        return Ok(1.0);
    }
    let z = invert_monotone(
        &|z| chi_of_z(z, params),
        chi,
        /*increasing=*/ false,
        params,
    )?;
    Ok(density(z, params))
}

/// Scaled index of the particle crossing ray `chi`, parametric route.
pub fn legendre_theta(chi: f64, params: &ModelParams) -> Result<f64, ChartError> {
    let (left, right) = fan_edges(params);
    if chi >= right {
        return Ok(0.0);
    }
    if chi < left {
        return Err(ChartError::InvalidArgument(format!(
            "chi {chi} left of the fan"
        )));
    }
    let z = invert_monotone(&|z| chi_of_z(z, params), chi, false, params)?;
    Ok(theta_of_z(z, params))
}

/// Variational route for the same quantity: the extremum of
/// `j(c) - c chi` over `c in [0,1]`.  `j` is strictly concave here
/// (`lambda_tilde < 0`), so the Legendre stationary value is the maximum of
/// that bracket; golden-section refinement after a coarse grid.
pub fn legendre_theta_variational(chi: f64, params: &ModelParams) -> Result<f64, ChartError> {
    let g = |c: f64| -> f64 {
        if c <= 0.0 || c >= 1.0 {
            return if c <= 0.0 { 0.0 } else { current(1.0 - 1e-12, params) - chi };
        }
        match fugacity_from_density(c, params) {
            Ok(z) => current(z.0, params) - c * chi,
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let mut best_c = 0.0;
    let mut best = f64::NEG_INFINITY;
    let n = 2000;
    for i in 0..=n {
        let c = i as f64 / n as f64;
        let v = g(c);
        if v > best {
            best = v;
            best_c = c;
        }
    }
    let mut a = (best_c - 2.0 / n as f64).max(0.0);
    let mut b = (best_c + 2.0 / n as f64).min(1.0);
    let phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut c1 = b - phi * (b - a);
    let mut c2 = a + phi * (b - a);
    let mut f1 = g(c1);
    let mut f2 = g(c2);
    for _ in 0..90 {
        if f1 > f2 {
            b = c2;
            c2 = c1;
            f2 = f1;
            c1 = b - phi * (b - a);
            f1 = g(c1);
        } else {
            a = c1;
            c1 = c2;
            f1 = f2;
            c2 = a + phi * (b - a);
            f2 = g(c2);
        }
    }
    Ok(g(0.5 * (a + b)).max(best))
}

/// Inverse of a monotone chart function by bisection plus Newton polish on
/// the bracket `[1e-12, 1-1e-12]`; tolerance 1e-13 in `z`.
pub fn invert_monotone(
    f: &dyn Fn(f64) -> f64,
    target: f64,
    increasing: bool,
    _params: &ModelParams,
) -> Result<f64, ChartError> {
    let (mut lo, mut hi) = (1e-12, 1.0 - 1e-12);
    let sgn = if increasing { 1.0 } else { -1.0 };
    let flo = sgn * (f(lo) - target);
    let fhi = sgn * (f(hi) - target);
    if flo > 0.0 || fhi < 0.0 {
        return Err(ChartError::RootFind(format!(
            "target {target} not bracketed: endpoints {flo} {fhi}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = sgn * (f(mid) - target);
        if fm <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Inverse of the scaled-index chart `theta(z_c)` (strictly increasing).
pub fn fugacity_from_theta(theta: f64, params: &ModelParams) -> Result<Fugacity, ChartError> {
    let theta_max = theta_of_z(1.0 - 1e-12, params);
    if !(theta > 0.0 && theta < theta_max) {
        return Err(ChartError::InvalidArgument(format!(
            "theta {theta} outside (0, {theta_max})"
        )));
    }
    let z = invert_monotone(&|z| theta_of_z(z, params), theta, true, params)?;
    Fugacity::new(z)
}

fn binom_big(n: i64, k: i64) -> BigInt {
    if k < 0 || k > n {
        return BigInt::zero();
    }
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Exact canonical partition function `Z(M, N)`: the coefficient of `z^M`
/// in `((1 - nu z)/(1 - z))^N`.
pub fn partition_function(m: u64, n: u64, params: &RationalParams) -> BigRational {
    let (m, n) = (m as i64, n as i64);
    let mut total = BigRational::zero();
    let mut nu_pow = BigRational::one(); // (-nu)^k
    for k in 0..=m.min(n) {
        let term = BigRational::from_integer(binom_big(n, k) * binom_big(m - k + n - 1, n - 1));
        total += &term * &nu_pow;
        nu_pow *= -params.nu.clone();
    }
    total
}

/// Brute-force partition function: direct sum over occupation configurations
/// with `sum n_i = M`, weight `f(n) = 1` for `n = 0` and `1 - nu` otherwise.
/// Test oracle for small sizes.
pub fn partition_function_brute(m: u64, n: u64, params: &RationalParams) -> BigRational {
    fn rec(
        sites_left: u64,
        particles_left: u64,
        acc: &BigRational,
        w_occ: &BigRational,
        total: &mut BigRational,
    ) {
        if sites_left == 0 {
            if particles_left == 0 {
                *total += acc;
            }
            return;
        }
        for k in 0..=particles_left {
            let w = if k == 0 {
                acc.clone()
            } else {
                acc * w_occ
            };
            rec(sites_left - 1, particles_left - k, &w, w_occ, total);
        }
    }
    let mut total = BigRational::zero();
    let w_occ = BigRational::one() - params.nu.clone();
    rec(n, m, &BigRational::one(), &w_occ, &mut total);
    total
}

/// Exact finite-size current on the ring of `l` sites with `m` particles,
/// from the contour representation of the stationary average: per lattice
/// site of the exclusion picture.
pub fn finite_size_current(l: u64, m: u64, params: &RationalParams) -> Result<BigRational, ChartError> {
    if m == 0 || m >= l {
        return Err(ChartError::InvalidArgument(format!(
            "need 1 <= M < L, got M={m}, L={l}"
        )));
    }
    let n_sites = (l - m) as i64;
    let m = m as i64;
    let z = partition_function(m as u64, n_sites as u64, params);
    // numerator = coeff of z^{M-1} in F^N * (mu/(1-mu z) - nu/(1-nu z))
    // split:  mu * [ (1-nu z)^N (1-z)^{-N} (1-mu z)^{-1} ]_{M-1}
    //       - nu * [ (1-nu z)^{N-1} (1-z)^{-N} ]_{M-1}
    let mut s_nu = BigRational::zero();
    {
        let mut nu_pow = BigRational::one();
        for k in 0..=(m - 1).min(n_sites - 1) {
            let t = BigRational::from_integer(
                binom_big(n_sites - 1, k) * binom_big(m - 1 - k + n_sites - 1, n_sites - 1),
            );
            s_nu += &t * &nu_pow;
            nu_pow *= -params.nu.clone();
        }
    }
    let mut s_mu = BigRational::zero();
    {
        let mut nu_pow = BigRational::one();
        for k in 0..=(m - 1).min(n_sites) {
            // inner: sum_i binom(i+N-1, N-1) mu^{M-1-k-i}
            let mut inner = BigRational::zero();
            let mut mu_pow = BigRational::one(); // mu^{M-1-k-i} built from i = M-1-k down
            for i in (0..=(m - 1 - k)).rev() {
                inner += BigRational::from_integer(binom_big(i + n_sites - 1, n_sites - 1)) * &mu_pow;
                mu_pow *= params.mu.clone();
            }
            s_mu += BigRational::from_integer(binom_big(n_sites, k)) * &nu_pow * inner;
            nu_pow *= -params.nu.clone();
        }
    }
    let numerator = &params.mu * s_mu - &params.nu * s_nu;
    let prefactor = BigRational::new(BigInt::from(n_sites), BigInt::from(l));
    Ok(prefactor * numerator / z)
}

/// Transitional scales at crossover exponent `beta`: the crossover parameter
/// `tau_beta = sqrt(t p (1-p)) / lambda^(1-beta)`, the mean cluster length
/// `(1 - z_c)^{-1}` at density `c`, and the mean gap per cluster.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TransitionalScales {
    pub tau_beta: f64,
    pub mean_cluster: f64,
    pub gap_scale: f64,
}

pub fn transitional_scales(
    params: &ModelParams,
    t: f64,
    beta: f64,
    c: f64,
) -> Result<TransitionalScales, ChartError> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(ChartError::InvalidArgument(format!(
            "beta must lie in (0,1), got {beta}"
        )));
    }
    let p = params.p();
    let tau_beta = (t * p * (1.0 - p)).sqrt() / params.lambda().powf(1.0 - beta);
    let z = fugacity_from_density(c, params)?;
    let mean_cluster = 1.0 / (1.0 - z.0);
    let gap_scale = mean_cluster * (1.0 / c - 1.0);
    Ok(TransitionalScales {
        tau_beta,
        mean_cluster,
        gap_scale,
    })
}

/// Inverse of the crossover-parameter definition: the time at which
/// `tau_beta` takes the requested value.
pub fn time_for_tau(params: &ModelParams, tau: f64, beta: f64) -> f64 {
    let p = params.p();
    (tau * params.lambda().powf(1.0 - beta)).powi(2) / (p * (1.0 - p))
}

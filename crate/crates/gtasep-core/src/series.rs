//! Truncated Laurent series over big rationals.
//!
//! This is the exact mirror of the contour integrals: every kernel integrand
//! in this crate is a product of powers of the linear factors
//! `{u, 1-u, 1-nu*u, 1-mu*u, 1-p+p*u, v-u}` with integer exponents, so a
//! residue is a Laurent coefficient that series arithmetic extracts exactly
//! when `p` and `mu` are rational.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::model::RationalParams;

#[derive(Debug, Error, PartialEq)]
pub enum SeriesError {
    #[error("series inversion needs a nonzero leading coefficient")]
    NotInvertible,
    #[error("unsupported: {0}")]
    Unsupported(String),
}

/// Laurent series `sum_k c_k z^(val+k)` truncated so that coefficients are
/// reliable for powers `< cutoff`.
#[derive(Debug, Clone)]
pub struct RatSeries {
    pub val: i64,
    pub coeffs: Vec<BigRational>,
    pub cutoff: i64,
}

impl RatSeries {
    pub fn one(cutoff: i64) -> Self {
        RatSeries {
            val: 0,
            coeffs: vec![BigRational::one()],
            cutoff,
        }
    }

    pub fn coeff(&self, k: i64) -> BigRational {
        if k < self.val || k >= self.cutoff {
            return BigRational::zero();
        }
        let idx = (k - self.val) as usize;
        self.coeffs.get(idx).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn mul(&self, other: &RatSeries) -> RatSeries {
        // A truncated-series product is reliable below
        // min(cutoff_a + val_b, cutoff_b + val_a).
        let cutoff = (self.cutoff + other.val).min(other.cutoff + self.val);
        let val = self.val + other.val;
        let len = ((cutoff - val).max(0) as usize)
            .min(self.coeffs.len() + other.coeffs.len());
        let mut coeffs = vec![BigRational::zero(); len];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() || i >= len {
                continue;
            }
            let top = (len - i).min(other.coeffs.len());
            for (j, b) in other.coeffs.iter().enumerate().take(top) {
                if !b.is_zero() {
                    coeffs[i + j] += a * b;
                }
            }
        }
        RatSeries { val, coeffs, cutoff }
    }
}

/// `(a + b z)^k` as a Laurent series carrying `n_terms` coefficients from
/// its valuation, for any integer `k` (negative exponents use the
/// generalized binomial series; `a = 0` just shifts the valuation).
pub fn pow_linear(a: &BigRational, b: &BigRational, k: i64, n_terms: usize) -> RatSeries {
    if a.is_zero() {
        // (b z)^k = b^k z^k
        return RatSeries {
            val: k,
            coeffs: vec![rational_pow(b, k)],
            cutoff: k + n_terms.max(1) as i64,
        };
    }
    // (a + b z)^k = a^k (1 + (b/a) z)^k, binomial with integer (possibly
    // negative) exponent via the term recurrence c_{j+1} = c_j (k-j)/(j+1) r.
    let r = b / a;
    let n_terms = n_terms.max(1);
    let mut coeffs = Vec::with_capacity(n_terms);
    let mut term = rational_pow(a, k);
    coeffs.push(term.clone());
    let kq = BigRational::from_integer(k.into());
    for j in 0..n_terms - 1 {
        if k >= 0 && (j as i64) >= k {
            break; // polynomial: done
        }
        let jq = BigRational::from_integer((j as i64).into());
        term = &term * (&kq - &jq) / (&jq + BigRational::one()) * &r;
        coeffs.push(term.clone());
    }
    RatSeries {
        val: 0,
        coeffs,
        cutoff: n_terms as i64,
    }
}

fn rational_pow(a: &BigRational, k: i64) -> BigRational {
    let mut acc = BigRational::one();
    let mut base = a.clone();
    let mut e = k.unsigned_abs();
    while e > 0 {
        if e & 1 == 1 {
            acc *= &base;
        }
        base = &base * &base;
        e >>= 1;
    }
    if k < 0 {
        acc.recip()
    } else {
        acc
    }
}

/// Base factors of the kernel integrands, as functions of the integration
/// variable `u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseFactor {
    U,
    OneMinusU,
    OneMinusNuU,
    OneMinusMuU,
    OneMinusPPlusPU,
    /// Cauchy coupling of the double-contour kernels; only the dedicated
    /// two-variable extractors accept it.
    VMinusU,
}

/// Exact description of a rational integrand: product of `factor^exponent`,
/// expanded about `u = 0` or `u = 1`, with the Laurent coefficient of
/// `(u - point)^order` requested (`order = -1` is the residue).
#[derive(Debug, Clone)]
pub struct RationalKernelSpec {
    pub factors: Vec<(BaseFactor, i64)>,
    pub expansion_point: u8,
    pub order: i64,
}

impl RationalKernelSpec {
    pub fn residue_at(factors: Vec<(BaseFactor, i64)>, point: u8) -> Self {
        RationalKernelSpec {
            factors,
            expansion_point: point,
            order: -1,
        }
    }
}

/// Linear form `a + b z` of a base factor around `u = point + z`.
fn factor_linear(f: BaseFactor, point: u8, params: &RationalParams) -> (BigRational, BigRational) {
    let one = BigRational::one();
    let pt = BigRational::from_integer((point as i64).into());
    match f {
        BaseFactor::U => (pt, one),
        BaseFactor::OneMinusU => (&one - &pt, -one),
        BaseFactor::OneMinusNuU => (&one - &params.nu * &pt, -params.nu.clone()),
        BaseFactor::OneMinusMuU => (&one - &params.mu * &pt, -params.mu.clone()),
        BaseFactor::OneMinusPPlusPU => (&one - &params.p + &params.p * &pt, params.p.clone()),
        BaseFactor::VMinusU => unreachable!("VMinusU handled by the double extractor"),
    }
}

/// Exact Laurent-coefficient extraction for a single-variable rational
/// integrand.  This equals the anticlockwise contour integral around the
/// expansion point when `order = -1`.
pub fn residue_extract(
    spec: &RationalKernelSpec,
    params: &RationalParams,
) -> Result<BigRational, SeriesError> {
    if spec.factors.iter().any(|&(f, _)| f == BaseFactor::VMinusU) {
        return Err(SeriesError::Unsupported(
            "v-u coupling requires the double-contour extractor".into(),
        ));
    }
    let order_bound: i64 = 4000;
    // The product valuation is the sum of the per-factor valuations (only
    // factors vanishing at the expansion point contribute); every factor
    // then needs order - total_val + 1 coefficients.
    let mut total_val: i64 = 0;
    let mut linears = Vec::with_capacity(spec.factors.len());
    for &(f, k) in &spec.factors {
        if k == 0 {
            continue;
        }
        let (a, b) = factor_linear(f, spec.expansion_point, params);
        if a.is_zero() && b.is_zero() {
            return Ok(BigRational::zero());
        }
        if a.is_zero() {
            total_val += k;
        }
        linears.push((a, b, k));
    }
    let n_terms = spec.order - total_val + 1;
    if n_terms <= 0 {
        return Ok(BigRational::zero()); // requested power below the valuation
    }
    if n_terms > order_bound {
        return Err(SeriesError::Unsupported(format!(
            "requested order needs {n_terms} terms, beyond cap {order_bound}"
        )));
    }
    let mut acc = RatSeries::one(n_terms);
    for (a, b, k) in linears {
        let s = pow_linear(&a, &b, k, n_terms as usize);
        acc = acc.mul(&s);
    }
    Ok(acc.coeff(spec.order))
}

/// Residue at the expansion point of `integrand(u) / (v - u)` integrated
/// first over `v` around 0 (geometric expansion of the Cauchy factor) and
/// then over `u` around 1 — the exact skeleton of the step-IC kernel.
///
/// `b_of_v` describes the `v` part (pole order `pole_v` at 0), `a_of_u` the
/// `u` part.  Returns `sum_{j=0}^{pole_v-1} [v^{-1-j}]B * Res_{u=1}(A(u)
/// u^{-j-1})` with the sign of `-1/(v-u) = sum v^j u^{-j-1}` included.
pub fn double_residue_step(
    a_of_u: &[(BaseFactor, i64)],
    b_of_v: &[(BaseFactor, i64)],
    pole_v: i64,
    params: &RationalParams,
) -> Result<BigRational, SeriesError> {
    let mut total = BigRational::zero();
    if pole_v <= 0 {
        return Ok(total);
    }
    for j in 0..pole_v {
        let b_spec = RationalKernelSpec {
            factors: b_of_v.to_vec(),
            expansion_point: 0,
            order: -1 - j,
        };
        let bj = residue_extract(&b_spec, params)?;
        if bj.is_zero() {
            continue;
        }
        let mut a_factors = a_of_u.to_vec();
        a_factors.push((BaseFactor::U, -j - 1));
        let a_spec = RationalKernelSpec::residue_at(a_factors, 1);
        let aj = residue_extract(&a_spec, params)?;
        // 1/(v-u) = -sum_j v^j u^{-j-1}; the minus sign lands here.
        total -= bj * aj;
    }
    Ok(total)
}

pub fn rational_abs(r: &BigRational) -> BigRational {
    r.abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::big_ratio;

    fn params() -> RationalParams {
        RationalParams::from_fracs((1, 2), (1, 2)).unwrap()
    }

    #[test]
    fn pow_linear_negative_exponent() {
        // (1 - z)^-1 = 1 + z + z^2 + ...
        let s = pow_linear(&BigRational::one(), &(-BigRational::one()), -1, 6);
        for k in 0..6 {
            assert_eq!(s.coeff(k), BigRational::one());
        }
        // (2 + z)^-2: coeff of z^0 is 1/4, z^1 is -2/8 = -1/4
        let s = pow_linear(&big_ratio(2, 1), &BigRational::one(), -2, 4);
        assert_eq!(s.coeff(0), big_ratio(1, 4));
        assert_eq!(s.coeff(1), big_ratio(-1, 4));
        // z^-3 shifts the valuation
        let s = pow_linear(&BigRational::zero(), &BigRational::one(), -3, 4);
        assert_eq!(s.val, -3);
        assert_eq!(s.coeff(-3), BigRational::one());
    }

    #[test]
    fn residue_simple_pole() {
        // coefficient of v^0 in 1/(1-nu v) is 1 (spec: trivial with nu=0 too)
        let p = RationalParams::from_fracs((1, 2), (3, 4)).unwrap();
        let spec = RationalKernelSpec {
            factors: vec![(BaseFactor::OneMinusNuU, -1)],
            expansion_point: 0,
            order: 0,
        };
        assert_eq!(residue_extract(&spec, &p).unwrap(), BigRational::one());
        // residue of (1-u)^5/u^3 at 0 = coeff of u^2 in (1-u)^5 = C(5,2) = 10
        let spec = RationalKernelSpec::residue_at(
            vec![(BaseFactor::OneMinusU, 5), (BaseFactor::U, -3)],
            0,
        );
        assert_eq!(residue_extract(&spec, &params()).unwrap(), big_ratio(10, 1));
    }

    #[test]
    fn residue_at_one() {
        // Res_{u=1} 1/((1-u)(1-nu u)) = -1/(1-nu); with nu=0: -1.
        let spec = RationalKernelSpec::residue_at(
            vec![(BaseFactor::OneMinusU, -1), (BaseFactor::OneMinusNuU, -1)],
            1,
        );
        assert_eq!(residue_extract(&spec, &params()).unwrap(), big_ratio(-1, 1));
    }

    #[test]
    fn rejects_cauchy_factor() {
        let spec = RationalKernelSpec::residue_at(vec![(BaseFactor::VMinusU, -1)], 0);
        assert!(residue_extract(&spec, &params()).is_err());
    }
}

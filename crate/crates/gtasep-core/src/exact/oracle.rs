//! Exact big-rational mirrors of the kernel evaluators by Laurent-coefficient
//! extraction; these are the oracles the quadrature routes are checked
//! against, and the arithmetic behind the rational-mode Green function.

use num_rational::BigRational;
use num_traits::Zero;

use super::kernels::adjacent_pairs;
use super::KernelError;
use crate::model::RationalParams;
use crate::series::{
    double_residue_step, residue_extract, BaseFactor, RationalKernelSpec, SeriesError,
};

fn num_rational_pow(base: &BigRational, k: u32) -> BigRational {
    let mut acc = BigRational::from_integer(1.into());
    for _ in 0..k {
        acc *= base;
    }
    acc
}

/// Exact `F_n(x, t)`: residues at `u = 0` and `u = 1` of the rational
/// integrand, times `(nu - 1)`.
pub fn f_n_exact(
    n: i64,
    x: i64,
    t: u64,
    params: &RationalParams,
) -> Result<BigRational, KernelError> {
    let factors = vec![
        (BaseFactor::OneMinusU, n - x - 1),
        (BaseFactor::OneMinusMuU, t as i64),
        (BaseFactor::U, -n),
        (BaseFactor::OneMinusNuU, x - n - t as i64 - 1),
    ];
    let r0 = residue_extract(&RationalKernelSpec::residue_at(factors.clone(), 0), params)?;
    let r1 = residue_extract(&RationalKernelSpec::residue_at(factors, 1), params)?;
    let numin1 = &params.nu - BigRational::from_integer(1.into());
    Ok(numin1 * (r0 + r1))
}

/// Exact Green function `lambda^{N(X)} det F`, by fraction-free elimination
/// over the rationals.
pub fn green_function_exact(
    x: &[i64],
    y: &[i64],
    t: u64,
    params: &RationalParams,
) -> Result<BigRational, KernelError> {
    if x.len() != y.len() || x.is_empty() {
        return Err(KernelError::DimensionMismatch(format!(
            "|X| = {} vs |Y| = {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    let mut m: Vec<Vec<BigRational>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            row.push(f_n_exact(
                i as i64 - j as i64,
                x[n - 1 - i] - y[n - 1 - j],
                t,
                params,
            )?);
        }
        m.push(row);
    }
    let det = rational_det(m);
    Ok(num_rational_pow(&params.lambda, adjacent_pairs(x)) * det)
}

fn rational_det(mut m: Vec<Vec<BigRational>>) -> BigRational {
    let n = m.len();
    let mut det = BigRational::from_integer(1.into());
    for k in 0..n {
        // pivot on the first nonzero entry of the column
        let piv = match (k..n).find(|&i| !m[i][k].is_zero()) {
            Some(p) => p,
            None => return BigRational::zero(),
        };
        if piv != k {
            m.swap(piv, k);
            det = -det;
        }
        let pivot = m[k][k].clone();
        det *= &pivot;
        for i in k + 1..n {
            if m[i][k].is_zero() {
                continue;
            }
            let f = &m[i][k] / &pivot;
            for j in k..n {
                let sub = &f * &m[k][j];
                m[i][j] -= sub;
            }
        }
    }
    det
}

/// Exact transport entry `phi^{*(n_k, n_l)}(x, y)`.
pub fn phi_star_exact(
    n_k: i64,
    x: i64,
    n_l: i64,
    y: i64,
    params: &RationalParams,
) -> Result<BigRational, KernelError> {
    if n_l <= n_k {
        return Ok(BigRational::zero());
    }
    let e = n_l + y - n_k - x;
    if e - 1 >= 0 {
        return Ok(BigRational::zero());
    }
    let factors = vec![
        (BaseFactor::OneMinusU, e - 1),
        (BaseFactor::U, -(n_l - n_k)),
        (BaseFactor::OneMinusNuU, -(e + 1)),
    ];
    let r1 = residue_extract(&RationalKernelSpec::residue_at(factors, 1), params)?;
    let numin1 = &params.nu - BigRational::from_integer(1.into());
    Ok(numin1 * r1)
}

/// Exact alternating-IC kernel entry.
pub fn ktilde_alt_exact(
    n_k: i64,
    x: i64,
    n_l: i64,
    y: i64,
    t: u64,
    params: &RationalParams,
) -> Result<BigRational, KernelError> {
    if x + n_k + n_l + 1 <= 0 {
        return Ok(BigRational::zero());
    }
    let factors = vec![
        (BaseFactor::OneMinusU, y + n_l + n_k),
        (BaseFactor::OneMinusPPlusPU, t as i64),
        (BaseFactor::U, -(x + n_k + n_l + 1)),
        (BaseFactor::OneMinusMuU, -(t as i64)),
        (BaseFactor::OneMinusNuU, t as i64 - y - n_l - n_k),
    ];
    Ok(residue_extract(
        &RationalKernelSpec::residue_at(factors, 0),
        params,
    )?)
}

/// Exact step-IC kernel entry: the inner residue in `v` around 0 expands the
/// Cauchy factor into a finite geometric sum, the outer residue sits at
/// `u = 1`.
pub fn ktilde_step_exact(
    n_k: i64,
    x: i64,
    n_l: i64,
    y: i64,
    t: u64,
    params: &RationalParams,
) -> Result<BigRational, KernelError> {
    if x + n_k + 1 <= 0 {
        return Ok(BigRational::zero());
    }
    if n_l < 1 {
        return Err(KernelError::Series(SeriesError::Unsupported(
            "step kernel needs n_l >= 1".into(),
        )));
    }
    let a_of_u = vec![
        (BaseFactor::U, n_k),
        (BaseFactor::OneMinusMuU, t as i64),
        (BaseFactor::OneMinusNuU, n_k + x - t as i64 - 1),
        (BaseFactor::OneMinusU, -(x + n_k + 1)),
    ];
    let b_of_v = vec![
        (BaseFactor::OneMinusU, y + n_l),
        (BaseFactor::U, -n_l),
        (BaseFactor::OneMinusMuU, -(t as i64)),
        (BaseFactor::OneMinusNuU, t as i64 - n_l - y),
    ];
    let inner = double_residue_step(&a_of_u, &b_of_v, n_l, params)?;
    let one_minus_nu = BigRational::from_integer(1.into()) - &params.nu;
    Ok(one_minus_nu * inner)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{big_ratio, ratio_to_f64};

    fn rparams(p: (i64, i64), mu: (i64, i64)) -> RationalParams {
        RationalParams::from_fracs(p, mu).unwrap()
    }

    #[test]
    fn f_n_exact_free_walker() {
        // F_0(x, t) is the Bernoulli walk pmf, exactly.
        let pr = rparams((1, 2), (3, 4));
        // t=1: F_0(0,1) = 1-p, F_0(1,1) = p
        assert_eq!(f_n_exact(0, 0, 1, &pr).unwrap(), big_ratio(1, 2));
        assert_eq!(f_n_exact(0, 1, 1, &pr).unwrap(), big_ratio(1, 2));
        assert_eq!(f_n_exact(0, -1, 3, &pr).unwrap(), BigRational::zero());
        assert_eq!(f_n_exact(0, 4, 3, &pr).unwrap(), BigRational::zero());
        // binomial at t=4, p=1/2: F_0(2,4) = 6/16
        assert_eq!(f_n_exact(0, 2, 4, &pr).unwrap(), big_ratio(6, 16));
    }

    #[test]
    fn f_n_exact_vs_quadrature() {
        let pr = rparams((1, 2), (3, 4));
        let pf = pr.to_float().unwrap();
        for n in -2..=3i64 {
            for x in -3..=6i64 {
                let exact = ratio_to_f64(&f_n_exact(n, x, 3, &pr).unwrap());
                let quad = super::super::kernels::f_n(n, x, 3, &pf).unwrap();
                assert!(
                    (exact - quad).abs() < 1e-11 * exact.abs().max(1.0),
                    "F_{n}({x},3): {exact} vs {quad}"
                );
            }
        }
    }

    #[test]
    fn green_exact_is_probability_and_normalized() {
        // N = 2, t = 2: exact Green function sums to one over reachable
        // configurations and matches the enumeration law term by term.
        let pr = rparams((1, 4), (1, 2));
        let y = [-1i64, -2];
        let law = crate::sim::enumerate_law(&y, &pr, 2).unwrap();
        let mut total = BigRational::zero();
        for (cfg, prob) in &law {
            let g = green_function_exact(cfg, &y, 2, &pr).unwrap();
            assert_eq!(&g, prob, "G({cfg:?})");
            total += g;
        }
        assert_eq!(total, BigRational::from_integer(1.into()));
    }

    #[test]
    fn kernel_oracles_match_quadrature() {
        let pr = rparams((1, 2), (3, 4));
        let pf = pr.to_float().unwrap();
        let t = 6u64;
        for (nk, x, nl, y) in [
            (1i64, 0i64, 2i64, -1i64),
            (2, 3, 3, -2),
            (1, -1, 3, 0),
            (3, 2, 1, 1),
            (2, 0, 2, 4),
        ] {
            let exact = ratio_to_f64(&ktilde_step_exact(nk, x, nl, y, t, &pr).unwrap());
            let quad = super::super::kernels::ktilde_step(nk, x, nl, y, t, &pf).unwrap();
            assert!(
                (exact - quad).abs() <= 1e-10 * exact.abs().max(1.0),
                "step ({nk},{x};{nl},{y}): {exact} vs {quad}"
            );
            let exact = ratio_to_f64(&ktilde_alt_exact(nk, x, nl, y, t, &pr).unwrap());
            let quad = super::super::kernels::ktilde_alt(nk, x, nl, y, t, &pf).unwrap();
            assert!(
                (exact - quad).abs() <= 1e-10 * exact.abs().max(1.0),
                "alt ({nk},{x};{nl},{y}): {exact} vs {quad}"
            );
            let exact = ratio_to_f64(&phi_star_exact(nk, x, nl, y, &pr).unwrap());
            let quad = super::super::kernels::phi_star(nk, x, nl, y, &pf).unwrap();
            assert!(
                (exact - quad).abs() <= 1e-10 * exact.abs().max(1.0),
                "phi* ({nk},{x};{nl},{y}): {exact} vs {quad}"
            );
        }
    }

    #[test]
    fn spec_oracle_anchor_values() {
        // F-spec with n=0, x=1, t=1 equals the single jump probability p.
        let pr = rparams((1, 2), (3, 4));
        assert_eq!(f_n_exact(0, 1, 1, &pr).unwrap(), pr.p);
    }
}

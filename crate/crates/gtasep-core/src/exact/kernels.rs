//! Contour-integral evaluators for the finite-time kernels.
//!
//! All integrands are products of integer powers of `u`, `1-u`, `1-nu u`,
//! `1-mu u` and `1-p+pu`, evaluated as complex logs and summed with
//! max-extraction: at `t ~ 2000` the raw factors span thousands of orders of
//! magnitude.

use num_complex::Complex64;

use super::KernelError;
use crate::linalg::{logdet, Mat};
use crate::model::ModelParams;
use crate::quad::{ClosedContour, LogSum, Scaled};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMethod {
    Quadrature,
    Oracle,
}

fn gamma01_max_radius(params: &ModelParams) -> f64 {
    let mut d = f64::INFINITY;
    if params.mu() > 0.0 {
        d = d.min((1.0 / params.mu() - 0.5).abs());
    }
    if params.nu() != 0.0 {
        d = d.min((1.0 / params.nu() - 0.5).abs());
    }
    if d.is_finite() {
        d
    } else {
        2.0
    }
}

/// Radius-tuned variant: cancellation on this contour family is governed by
/// the peak of `|integrand|`, so pick the admissible radius minimizing it.
fn gamma01_tuned(params: &ModelParams, log_f: &dyn Fn(Complex64) -> Complex64) -> ClosedContour {
    let center = Complex64::new(0.5, 0.0);
    let d = gamma01_max_radius(params);
    let r = crate::quad::optimize_radius(&|z| log_f(z).re, center, 0.52, 0.97 * d);
    ClosedContour::new(center, r, 256).unwrap()
}

/// Circle around 1 only; default radius is half the distance to the nearest
/// of the poles {0, 1/nu, 1/mu, (p-1)/p}.
pub(crate) fn gamma1(params: &ModelParams, shrink: f64) -> ClosedContour {
    let mut d: f64 = 1.0; // pole at 0
    if params.mu() > 0.0 {
        d = d.min(1.0 / params.mu() - 1.0);
    }
    if params.nu() != 0.0 {
        d = d.min((1.0 / params.nu() - 1.0).abs());
    }
    d = d.min(1.0 / params.p()); // distance to (p-1)/p
    ClosedContour::new(Complex64::new(1.0, 0.0), shrink * d, 256).unwrap()
}

/// Circle around 0 only.
pub(crate) fn gamma0(params: &ModelParams, shrink: f64) -> ClosedContour {
    let mut d: f64 = 1.0;
    if params.mu() > 0.0 {
        d = d.min(1.0 / params.mu());
    }
    if params.nu() != 0.0 {
        d = d.min(1.0 / params.nu().abs());
    }
    ClosedContour::new(Complex64::new(0.0, 0.0), shrink * d, 256).unwrap()
}

#[inline]
pub(crate) fn cln(z: Complex64) -> Complex64 {
    z.ln()
}

/// Scaled closed-contour quadrature with node doubling.
pub(crate) fn closed_scaled(
    log_f: &dyn Fn(Complex64) -> Complex64,
    contour: &ClosedContour,
    tol: f64,
) -> Result<Scaled, KernelError> {
    let mut n = contour.nodes.max(64);
    let mut prev = crate::quad::integrate_closed_log(log_f, contour, n);
    let mut prev_err = f64::INFINITY;
    loop {
        n *= 2;
        let cur = crate::quad::integrate_closed_log(log_f, contour, n);
        // `value` is the sum of terms normalized by the peak integrand, so
        // its magnitude doubles as the cancellation meter: at ~1e-13 of the
        // peak the integral is zero to working precision.
        let cancel_floor = n as f64 * 1e-14;
        if prev.value.norm() < cancel_floor && cur.value.norm() < cancel_floor {
            return Ok(cur);
        }
        // compare on a common scale
        let top = prev.log_scale.max(cur.log_scale);
        let a = if prev.is_zero() {
            Complex64::new(0.0, 0.0)
        } else {
            prev.value * (prev.log_scale - top).exp()
        };
        let b = if cur.is_zero() {
            Complex64::new(0.0, 0.0)
        } else {
            cur.value * (cur.log_scale - top).exp()
        };
        let err = (a - b).norm();
        if err <= tol * b.norm().max(1e-30) || (a.norm() == 0.0 && b.norm() == 0.0) {
            return Ok(cur);
        }
        // rounding floor: doubling stopped helping and the residual sits at
        // the cancellation scale of the peak integrand (err is measured in
        // units of e^top, the peak term is ~n in those units)
        if err >= 0.5 * prev_err && err <= n as f64 * 1e-13 {
            return Ok(cur);
        }
        prev_err = err;
        if n >= 1 << 15 {
            return Err(KernelError::Quad(crate::quad::QuadError::NoConvergence {
                estimate: b.norm(),
                error: err,
            }));
        }
        prev = cur;
    }
}

fn real_part(s: Scaled, what: &str) -> Result<f64, KernelError> {
    let v = s.to_complex();
    if !v.re.is_finite() {
        return Err(KernelError::InvalidArgument(format!(
            "{what}: value out of f64 range (log scale {})",
            s.log_abs()
        )));
    }
    if v.im.abs() > 1e-8 * v.re.abs().max(1.0) {
        return Err(KernelError::InvalidArgument(format!(
            "{what}: imaginary leakage {:e}",
            v.im
        )));
    }
    Ok(v.re)
}

/// `F_n(x, t)`: the Green-function building block, by quadrature over the
/// contour enclosing both `u = 0` and `u = 1`.
pub fn f_n(n: i64, x: i64, t: u64, params: &ModelParams) -> Result<f64, KernelError> {
    // structural zeros: no pole inside the contour (x < n needs the pole at
    // u=1 or n >= 1), or no singularity outside it so the residues cancel
    // (x beyond the reachable range n + t)
    if n <= 0 && x <= n - 1 {
        return Ok(0.0);
    }
    if n >= 0 && x >= n + t as i64 + 1 {
        return Ok(0.0);
    }
    let (mu, nu) = (params.mu(), params.nu());
    let log_f = move |u: Complex64| -> Complex64 {
        (n - x - 1) as f64 * cln(1.0 - u) + t as f64 * cln(1.0 - mu * u) - n as f64 * cln(u)
            + (x - n - t as i64 - 1) as f64 * cln(1.0 - nu * u)
    };
    let c = gamma01_tuned(params, &log_f);
    let s = closed_scaled(&log_f, &c, 1e-12)?;
    let mut v = real_part(s, "f_n")?;
    v *= nu - 1.0;
    Ok(v)
}

/// Number of adjacent occupied pairs of an ordered configuration.
pub(crate) fn adjacent_pairs(xs: &[i64]) -> u32 {
    xs.windows(2).filter(|w| w[0] - w[1] == 1).count() as u32
}

/// Transition probability `G(X | Y; t)` for a finite configuration, float
/// route: `lambda^{N(X)} det F_{i-j}(x_{N+1-i} - y_{N+1-j}, t)`.
pub fn green_function(
    x: &[i64],
    y: &[i64],
    t: u64,
    params: &ModelParams,
) -> Result<f64, KernelError> {
    if x.len() != y.len() || x.is_empty() {
        return Err(KernelError::DimensionMismatch(format!(
            "|X| = {} vs |Y| = {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() > 12 {
        return Err(KernelError::InvalidArgument(
            "green_function supports N <= 12".into(),
        ));
    }
    if x.windows(2).any(|w| w[0] <= w[1]) || y.windows(2).any(|w| w[0] <= w[1]) {
        return Err(KernelError::InvalidArgument(
            "positions must be strictly decreasing".into(),
        ));
    }
    let n = x.len();
    let mut m = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let order = i as i64 - j as i64;
            let arg = x[n - 1 - i] - y[n - 1 - j];
            m.set(i, j, f_n(order, arg, t, params)?);
        }
    }
    let (sign, log_abs) = logdet(m);
    let det = if sign == 0.0 { 0.0 } else { sign * log_abs.exp() };
    Ok(params.lambda().powi(adjacent_pairs(x) as i32) * det)
}

/// The one-sided transport block `phi^{*(n_k, n_l)}(x, y)`: zero unless
/// `n_l > n_k` and the integrand actually has the pole at `v = 1`
/// (exponent of `(1-v)` negative, i.e. `n_l + y <= n_k + x`).
pub fn phi_star(
    n_k: i64,
    x: i64,
    n_l: i64,
    y: i64,
    params: &ModelParams,
) -> Result<f64, KernelError> {
    if n_l <= n_k {
        return Ok(0.0);
    }
    let e = n_l + y - n_k - x;
    if e - 1 >= 0 {
        return Ok(0.0);
    }
    let nu = params.nu();
    let dn = n_l - n_k;
    let c = gamma1(params, 0.5);
    let log_f = move |v: Complex64| -> Complex64 {
        (e - 1) as f64 * cln(1.0 - v) - dn as f64 * cln(v) - (e + 1) as f64 * cln(1.0 - nu * v)
    };
    let s = closed_scaled(&log_f, &c, 1e-12)?;
    let mut v = real_part(s, "phi_star")?;
    v *= nu - 1.0;
    Ok(v)
}

/// Step-IC functions of the biorthogonal pair.  `psi_step` integrates over
/// the contour around {0, 1}, `psi_tilde_step` around 1 only (its 0-pole
/// part lives in the transport block), and `phi_step` around 0.
pub fn psi_step(j: i64, n: i64, x: i64, t: u64, params: &ModelParams) -> Result<f64, KernelError> {
    if x + n - 1 - t as i64 >= 0 {
        // beyond the reachable range the 1/nu pole is gone and the value is
        // a short residue-at-infinity series, stable where the contour is not
        return Ok(psi_tail(j, x + n, t, params));
    }
    let (mu, nu) = (params.mu(), params.nu());
    let log_f = move |u: Complex64| {
        j as f64 * cln(u) + t as f64 * cln(1.0 - mu * u)
            + (x + n - 1 - t as i64) as f64 * cln(1.0 - nu * u)
            - (x + n + 1) as f64 * cln(1.0 - u)
    };
    let c = gamma01_tuned(params, &log_f);
    let s = closed_scaled(&log_f, &c, 1e-12)?;
    Ok(real_part(s, "psi_step")? * (nu - 1.0))
}

/// `Psi` in the geometric-tail region `X - 1 - t >= 0` (with `X = x + n` for
/// step, `X = x + 2n - j` for alternating): equals
/// `(nu-1) [w^{j-1}] (w-mu)^t (w-nu)^{X-1-t} (w-1)^{-(X+1)}`.
fn psi_tail(j: i64, big_x: i64, t: u64, params: &ModelParams) -> f64 {
    if j < 1 {
        return 0.0;
    }
    let (mu, nu) = (params.mu(), params.nu());
    let order = (j - 1) as usize;
    let e = (big_x - 1 - t as i64) as usize;
    // coefficients of each factor up to w^order
    let mut a = vec![0.0f64; order + 1]; // (w - mu)^t
    {
        // C(t,k) (-mu)^{t-k}; when mu = 0 this is w^t
        if mu == 0.0 {
            if (t as usize) <= order {
                a[t as usize] = 1.0;
            }
        } else {
            let t = t as i64;
            let mut c = (-mu).powi(t as i32); // k = 0 term
            a[0] = c;
            for k in 0..order.min(t as usize) {
                let k = k as i64;
                c = c * (t - k) as f64 / (k + 1) as f64 / (-mu);
                a[(k + 1) as usize] = c;
            }
        }
    }
    let mut b = vec![0.0f64; order + 1]; // (w - nu)^e
    {
        if nu == 0.0 {
            if e <= order {
                b[e] = 1.0;
            }
        } else {
            let e = e as i64;
            let mut c = (-nu).powi(e as i32);
            b[0] = c;
            for k in 0..order.min(e as usize) {
                let k = k as i64;
                c = c * (e - k) as f64 / (k + 1) as f64 / (-nu);
                b[(k + 1) as usize] = c;
            }
        }
    }
    let mut cc = vec![0.0f64; order + 1]; // (w-1)^{-(X+1)} = (-1)^{X+1}(1-w)^{-(X+1)}
    {
        let sign = if (big_x + 1) % 2 == 0 { 1.0 } else { -1.0 };
        let mut c = sign;
        cc[0] = c;
        for k in 0..order {
            c = c * (big_x + 1 + k as i64) as f64 / (k + 1) as f64;
            cc[k + 1] = c;
        }
    }
    let mut coeff = 0.0f64;
    for ka in 0..=order {
        for kb in 0..=order - ka {
            let kc = order - ka - kb;
            coeff += a[ka] * b[kb] * cc[kc];
        }
    }
    (params.nu() - 1.0) * coeff
}

pub fn psi_tilde_step(
    j: i64,
    n: i64,
    x: i64,
    t: u64,
    params: &ModelParams,
) -> Result<Scaled, KernelError> {
    if x + n + 1 <= 0 {
        return Ok(Scaled::zero()); // no pole at u = 1
    }
    let (mu, nu) = (params.mu(), params.nu());
    let c = gamma1(params, 0.45);
    let mut s = closed_scaled(
        &move |u: Complex64| {
            j as f64 * cln(u) + t as f64 * cln(1.0 - mu * u)
                + (x + n - 1 - t as i64) as f64 * cln(1.0 - nu * u)
                - (x + n + 1) as f64 * cln(1.0 - u)
        },
        &c,
        1e-12,
    )?;
    s.value *= nu - 1.0;
    Ok(s)
}

pub fn phi_step(j: i64, n: i64, x: i64, t: u64, params: &ModelParams) -> Result<Scaled, KernelError> {
    if j < 0 {
        return Ok(Scaled::zero()); // analytic: polynomial family stops here
    }
    let (mu, nu) = (params.mu(), params.nu());
    let c = gamma0(params, 0.4);
    closed_scaled(
        &move |v: Complex64| {
            (x + n) as f64 * cln(1.0 - v) + (t as i64 - x - n) as f64 * cln(1.0 - nu * v)
                - (j + 1) as f64 * cln(v)
                - t as f64 * cln(1.0 - mu * v)
        },
        &c,
        1e-12,
    )
}

/// Alternating-IC pair.
pub fn psi_alt(j: i64, n: i64, x: i64, t: u64, params: &ModelParams) -> Result<f64, KernelError> {
    if x + 2 * n - j - 1 - t as i64 >= 0 {
        return Ok(psi_tail(j, x + 2 * n - j, t, params));
    }
    let (mu, nu) = (params.mu(), params.nu());
    let log_f = move |u: Complex64| {
        j as f64 * cln(u) + t as f64 * cln(1.0 - mu * u)
            + (x + 2 * n - j - 1 - t as i64) as f64 * cln(1.0 - nu * u)
            - (x + 2 * n - j + 1) as f64 * cln(1.0 - u)
    };
    let c = gamma01_tuned(params, &log_f);
    let s = closed_scaled(&log_f, &c, 1e-12)?;
    Ok(real_part(s, "psi_alt")? * (nu - 1.0))
}

pub fn phi_alt(j: i64, n: i64, x: i64, t: u64, params: &ModelParams) -> Result<f64, KernelError> {
    if j < 0 {
        return Ok(0.0);
    }
    let (mu, nu) = (params.mu(), params.nu());
    let c = gamma0(params, 0.4);
    let s = closed_scaled(
        &move |v: Complex64| {
            cln(1.0 - 2.0 * v + nu * v * v) + (x + 2 * n - j - 1) as f64 * cln(1.0 - v)
                - (x + 2 * n - j - t as i64 + 1) as f64 * cln(1.0 - nu * v)
                - (j + 1) as f64 * cln(v)
                - t as f64 * cln(1.0 - mu * v)
        },
        &c,
        1e-12,
    )?;
    real_part(s, "phi_alt")
}

/// Largest deviation of `sum_x Psi^n_{n-l}(x) Phi^n_{n-k}(x)` from
/// `delta_{kl}` over `1 <= k, l <= n`, for either infinite initial
/// condition.  The sums are finite: `Psi` vanishes outside the dynamical
/// support (checked with slack).
pub fn orthogonality_defect(
    alternating: bool,
    n: i64,
    t: u64,
    params: &ModelParams,
) -> Result<f64, KernelError> {
    // Beyond the reachable range Psi_j decays only geometrically like nu^x
    // (for j >= 1 the (1-nu u) factor keeps contributing), so the summation
    // window extends by ~ -35/ln|nu| sites; the sum converges for |nu| < 1.
    let nu = params.nu().abs();
    if nu >= 1.0 {
        return Err(KernelError::InvalidArgument(format!(
            "orthogonality sum needs |nu| < 1, got {nu}"
        )));
    }
    let tail = if nu < 1e-9 {
        4
    } else {
        (-35.0 / nu.ln()).ceil() as i64 + 16
    };
    let (x_lo, x_hi) = if alternating {
        (-2 * n - 4, t as i64 + n + tail)
    } else {
        (-n - 4, t as i64 - n + tail)
    };
    let mut worst = 0.0f64;
    for l in 1..=n {
        for k in 1..=n {
            let mut sum = 0.0;
            for x in x_lo..=x_hi {
                let (psi, phi) = if alternating {
                    (
                        psi_alt(n - l, n, x, t, params)?,
                        phi_alt(n - k, n, x, t, params)?,
                    )
                } else {
                    (
                        psi_step(n - l, n, x, t, params)?,
                        phi_step(n - k, n, x, t, params)?.to_complex().re,
                    )
                };
                sum += psi * phi;
            }
            let want = if k == l { 1.0 } else { 0.0 };
            worst = worst.max((sum - want).abs());
        }
    }
    Ok(worst)
}

/// Single entry of the step-IC kernel via the double contour.
pub fn ktilde_step(
    n_k: i64,
    x: i64,
    n_l: i64,
    y: i64,
    t: u64,
    params: &ModelParams,
) -> Result<f64, KernelError> {
    if x + n_k + 1 <= 0 {
        return Ok(0.0); // row outside the dynamical support: no pole at u=1
    }
    let asm = super::assemble::StepAssembler::new(t, params, &[(n_k, x)], &[(n_l, y)], 512)?;
    let s = asm.entry_scaled(0, 0);
    real_part(s, "ktilde_step")
}

/// Single entry of the alternating-IC kernel.
pub fn ktilde_alt(
    n_k: i64,
    x: i64,
    n_l: i64,
    y: i64,
    t: u64,
    params: &ModelParams,
) -> Result<f64, KernelError> {
    if x + n_k + n_l + 1 <= 0 {
        return Ok(0.0); // no pole at v = 0
    }
    let asm = super::assemble::AltAssembler::new(t, params, &[(n_k, x)], &[(n_l, y)], 512)?;
    let s = asm.entry_scaled(0, 0);
    real_part(s, "ktilde_alt")
}

/// Step kernel through the biorthogonal series
/// `sum_{k=1}^{n_2} PsiTilde^{n_1}_{n_1-k}(x_1) Phi^{n_2}_{n_2-k}(x_2)`,
/// the independent representation used for cross-checks.
pub fn ktilde_step_series(
    n_1: i64,
    x_1: i64,
    n_2: i64,
    x_2: i64,
    t: u64,
    params: &ModelParams,
) -> Result<f64, KernelError> {
    let mut sum = LogSum::new();
    for k in 1..=n_2 {
        let psi = psi_tilde_step(n_1 - k, n_1, x_1, t, params)?;
        let phi = phi_step(n_2 - k, n_2, x_2, t, params)?;
        if psi.is_zero() || phi.is_zero() {
            continue;
        }
        let prod = psi.value * phi.value;
        if prod.norm() == 0.0 {
            continue;
        }
        sum.push_log(Complex64::new(
            psi.log_scale + phi.log_scale + prod.norm().ln(),
            prod.arg(),
        ));
    }
    real_part(sum.total(), "ktilde_step_series")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ratio_to_f64;

    fn params(p: f64, mu: f64) -> ModelParams {
        ModelParams::new(p, mu).unwrap()
    }

    /// Independent oracle: the head particle of the step IC is a free
    /// Bernoulli walker, so `F_0(k, t)` is the binomial pmf.
    fn binom_pmf(t: u64, k: i64, p: f64) -> f64 {
        if k < 0 || k > t as i64 {
            return 0.0;
        }
        let mut c = 1.0f64;
        for i in 0..k {
            c = c * (t as i64 - i) as f64 / (i + 1) as f64;
        }
        c * p.powi(k as i32) * (1.0 - p).powi((t as i64 - k) as i32)
    }

    #[test]
    fn f0_is_binomial_walk() {
        for &(p, mu) in &[(0.5, 0.5), (0.5, 0.75), (0.25, 0.0), (0.75, 0.0)] {
            let pr = params(p, mu);
            for t in [0u64, 1, 3, 7] {
                for x in -2..=(t as i64 + 2) {
                    let got = f_n(0, x, t, &pr).unwrap();
                    let want = binom_pmf(t, x, p);
                    assert!(
                        (got - want).abs() < 1e-12,
                        "F_0({x},{t}) p={p} mu={mu}: {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn f_n_recurrence() {
        // F_{n+1} = phi * F_n with phi(x,y) = nu-1 (y >= x), nu (y = x-1),
        // 0 (y <= x-2); convolution on a finite support grid.
        let pr = params(0.5, 0.75);
        let t = 4u64;
        for n in [0i64, 1, 2] {
            for x in -4..=8 {
                let lhs = f_n(n + 1, x, t, &pr).unwrap();
                let mut rhs = 0.0;
                // (phi * F)(x) = sum_y phi(x, y) F(y): weight nu-1 for y >= x,
                // nu at y = x-1.  F_n vanishes for y >= n + t + 1.
                for y in (x - 1)..=(t as i64 + n + 1) {
                    let w = if y >= x {
                        pr.nu() - 1.0
                    } else {
                        pr.nu()
                    };
                    rhs += w * f_n(n, y, t, &pr).unwrap();
                }
                assert!(
                    (lhs - rhs).abs() < 1e-9,
                    "recurrence fails at n={n}, x={x}: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn green_function_single_particle() {
        let pr = params(0.5, 0.5);
        for t in [1u64, 4] {
            for x in -1..=(t as i64) {
                let g = green_function(&[x], &[0], t, &pr).unwrap();
                assert!((g - binom_pmf(t, x, 0.5)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn green_function_two_particle_one_step() {
        // Y = (-1, -2), t = 1, p = mu = 1/2: stay-stay 1/2, head-only 1/4,
        // both 1/4 (cluster law phi(.|2)).
        let pr = params(0.5, 0.5);
        let g = |x: &[i64]| green_function(x, &[-1, -2], 1, &pr).unwrap();
        assert!((g(&[-1, -2]) - 0.5).abs() < 1e-12);
        assert!((g(&[0, -2]) - 0.25).abs() < 1e-12);
        assert!((g(&[0, -1]) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn green_function_matches_enumeration() {
        // N=3, t=2 random instance against the exhaustive history law.
        let prq = crate::model::RationalParams::from_fracs((1, 2), (3, 4)).unwrap();
        let pr = prq.to_float().unwrap();
        let y = [-1i64, -3, -4];
        let law = crate::sim::enumerate_law(&y, &prq, 2).unwrap();
        for (cfg, prob) in law {
            let g = green_function(&cfg, &y, 2, &pr).unwrap();
            let want = ratio_to_f64(&prob);
            assert!(
                (g - want).abs() < 1e-12,
                "G({cfg:?}) = {g}, enumeration {want}"
            );
        }
    }

    #[test]
    fn phi_star_indicators() {
        let pr = params(0.5, 0.75);
        // n_l <= n_k -> 0
        assert_eq!(phi_star(3, 0, 3, 5, &pr).unwrap(), 0.0);
        assert_eq!(phi_star(4, 0, 2, -3, &pr).unwrap(), 0.0);
        // analytic integrand (exponent >= 0) -> 0
        assert_eq!(phi_star(1, 0, 3, 2, &pr).unwrap(), 0.0);
        // genuine value: one-step convolution weight
        let v = phi_star(1, 0, 2, -1, &pr).unwrap();
        assert!(v.is_finite() && v != 0.0);
    }

    #[test]
    fn ktilde_step_support_row_vanishes() {
        let pr = params(0.5, 0.5);
        for y in -3..3 {
            assert_eq!(ktilde_step(2, -3, 2, y, 5, &pr).unwrap(), 0.0);
        }
    }

    #[test]
    fn step_kernel_series_route_agrees() {
        let pr = params(0.5, 0.75);
        let t = 12u64;
        let cases = [
            (1i64, 0i64, 1i64, 1i64),
            (2, -1, 3, 0),
            (3, 2, 3, 1),
            (1, 3, 4, -2),
            (4, -4, 2, 0),
        ];
        for &(n1, x1, n2, x2) in &cases {
            let a = ktilde_step(n1, x1, n2, x2, t, &pr).unwrap();
            let b = ktilde_step_series(n1, x1, n2, x2, t, &pr).unwrap();
            assert!(
                (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1e-6),
                "({n1},{x1};{n2},{x2}): contour {a} vs series {b}"
            );
        }
    }

    #[test]
    fn orthogonality_small_n() {
        let pr = params(0.5, 0.75);
        assert!(orthogonality_defect(false, 3, 6, &pr).unwrap() < 1e-9);
        assert!(orthogonality_defect(true, 3, 6, &pr).unwrap() < 1e-9);
    }
}

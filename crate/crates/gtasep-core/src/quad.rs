//! Complex-path integration shared by the exact and limit kernels.
//!
//! Closed circles use the trapezoidal rule, which is spectrally accurate for
//! integrands analytic in an annulus around the contour.  Open paths
//! (vertical lines, ray pairs) use composite Gauss-Legendre panels with the
//! cutoff extended until the tail falls below tolerance.  Everything has a
//! log-scaled twin: integrands like `(1-mu u)^t` at `t ~ 2000` span a dynamic
//! range no plain f64 survives, so those paths evaluate `log f` and sum with
//! max-extraction, returning a [`Scaled`] value.

use num_complex::Complex64;
use thiserror::Error;

pub const TWO_PI: f64 = std::f64::consts::TAU;

#[derive(Debug, Error)]
pub enum QuadError {
    #[error("quadrature did not converge: last estimate {estimate:e}, error {error:e}")]
    NoConvergence { estimate: f64, error: f64 },
    #[error("tail bound failure on open contour: tail {0:e}")]
    TailBound(f64),
    #[error("invalid contour: {0}")]
    BadContour(String),
}

/// Closed circular contour, anticlockwise.
#[derive(Debug, Clone, Copy)]
pub struct ClosedContour {
    pub center: Complex64,
    pub radius: f64,
    pub nodes: usize,
}

impl ClosedContour {
    pub fn new(center: Complex64, radius: f64, nodes: usize) -> Result<Self, QuadError> {
        if radius <= 0.0 {
            return Err(QuadError::BadContour(format!("radius {radius} <= 0")));
        }
        if nodes < 8 || !nodes.is_power_of_two() {
            return Err(QuadError::BadContour(format!(
                "node count must be a power of two >= 8, got {nodes}"
            )));
        }
        Ok(ClosedContour {
            center,
            radius,
            nodes,
        })
    }

    pub fn node(&self, j: usize, n: usize) -> Complex64 {
        let th = TWO_PI * j as f64 / n as f64;
        self.center + self.radius * Complex64::new(th.cos(), th.sin())
    }
}

/// Open contour kinds used by the limit kernels.
#[derive(Debug, Clone, Copy)]
pub enum OpenContour {
    /// Straight line `Re z = anchor`, oriented from `-i inf` to `+i inf`.
    VerticalLine { anchor: f64 },
    /// Pair of rays `origin + rho e^{+- i phi}`, traversed from the lower ray
    /// towards the origin and out along the upper one.
    RayPair {
        origin: Complex64,
        angle: f64,
        cutoff: f64,
    },
}

impl OpenContour {
    pub fn validate(&self) -> Result<(), QuadError> {
        if let OpenContour::RayPair { angle, cutoff, .. } = self {
            if !(*angle > std::f64::consts::FRAC_PI_6 && *angle < std::f64::consts::FRAC_PI_2) {
                return Err(QuadError::BadContour(format!(
                    "ray angle {angle} outside (pi/6, pi/2)"
                )));
            }
            if *cutoff <= 0.0 {
                return Err(QuadError::BadContour("ray cutoff must be positive".into()));
            }
        }
        Ok(())
    }
}

/// `oint f(z) dz / (2 pi i)` over a circle by the trapezoidal rule, doubling
/// the node count until the relative change drops below `tol` (cap 2^16).
pub fn integrate_closed(
    f: &dyn Fn(Complex64) -> Complex64,
    contour: &ClosedContour,
    tol: f64,
) -> Result<(Complex64, f64), QuadError> {
    let mut n = contour.nodes.max(8);
    let mut prev = trapezoid_circle(f, contour, n);
    loop {
        n *= 2;
        let cur = trapezoid_circle(f, contour, n);
        let err = (cur - prev).norm();
        let scale = cur.norm().max(1e-300);
        if err <= tol * scale.max(1.0) || err <= tol * scale {
            return Ok((cur, err));
        }
        if n >= 1 << 16 {
            return Err(QuadError::NoConvergence {
                estimate: cur.norm(),
                error: err,
            });
        }
        prev = cur;
    }
}

fn trapezoid_circle(f: &dyn Fn(Complex64) -> Complex64, c: &ClosedContour, n: usize) -> Complex64 {
    // dz/(2 pi i) = (z - center) dtheta / (2 pi)
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..n {
        let z = c.node(j, n);
        acc += f(z) * (z - c.center);
    }
    acc / n as f64
}

/// Integral over an open contour of a super-algebraically decaying integrand.
/// Panels of composite Gauss-Legendre are added outward until the last panel
/// contributes less than `tol` relative to the running total.
pub fn integrate_open(
    f: &dyn Fn(Complex64) -> Complex64,
    contour: &OpenContour,
    tol: f64,
) -> Result<(Complex64, f64), QuadError> {
    contour.validate()?;
    let gl = GaussLegendre::new(24);
    match *contour {
        OpenContour::VerticalLine { anchor } => {
            // z = anchor + i y, dz = i dy; symmetric panels growing outward.
            let mut total = Complex64::new(0.0, 0.0);
            let mut y = 0.0f64;
            let mut width = 1.0f64;
            let mut last_mag;
            let mut panels = 0;
            loop {
                let mut panel = Complex64::new(0.0, 0.0);
                for (t, w) in gl.mapped(y, y + width) {
                    let zu = Complex64::new(anchor, t);
                    let zl = Complex64::new(anchor, -t);
                    panel += (f(zu) + f(zl)) * w;
                }
                panel *= Complex64::i();
                total += panel;
                last_mag = panel.norm();
                y += width;
                width *= 1.3;
                panels += 1;
                if last_mag <= tol * total.norm().max(1e-300) && panels >= 3 {
                    return Ok((total, last_mag));
                }
                if panels > 200 {
                    return Err(QuadError::TailBound(last_mag));
                }
            }
        }
        OpenContour::RayPair {
            origin,
            angle,
            cutoff,
        } => {
            // From inf e^{-i phi} to origin to inf e^{+i phi}: for real-valued
            // results both rays are needed; integrate rho from 0 out.
            let dir_u = Complex64::from_polar(1.0, angle);
            let dir_l = Complex64::from_polar(1.0, -angle);
            let mut total = Complex64::new(0.0, 0.0);
            let mut rho = 0.0f64;
            let mut width = (cutoff / 8.0).min(1.0).max(1e-3);
            let mut panels = 0;
            loop {
                let mut panel = Complex64::new(0.0, 0.0);
                for (t, w) in gl.mapped(rho, rho + width) {
                    let zu = origin + t * dir_u;
                    let zl = origin + t * dir_l;
                    panel += (f(zu) * dir_u - f(zl) * dir_l) * w;
                }
                total += panel;
                rho += width;
                width *= 1.3;
                panels += 1;
                let tail = panel.norm();
                if rho >= cutoff && tail <= tol * total.norm().max(1e-300) {
                    return Ok((total, tail));
                }
                if panels > 300 {
                    return Err(QuadError::TailBound(tail));
                }
            }
        }
    }
}

/// A complex value in the form `value * exp(log_scale)` with `|value|` kept
/// near 1.
#[derive(Debug, Clone, Copy)]
pub struct Scaled {
    pub log_scale: f64,
    pub value: Complex64,
}

impl Scaled {
    pub fn zero() -> Self {
        Scaled {
            log_scale: f64::NEG_INFINITY,
            value: Complex64::new(0.0, 0.0),
        }
    }

    pub fn from_log(log: Complex64) -> Self {
        Scaled {
            log_scale: log.re,
            value: Complex64::new(log.im.cos(), log.im.sin()),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.log_scale == f64::NEG_INFINITY || self.value == Complex64::new(0.0, 0.0)
    }

    pub fn log_abs(&self) -> f64 {
        if self.is_zero() {
            f64::NEG_INFINITY
        } else {
            self.log_scale + self.value.norm().ln()
        }
    }

    pub fn to_complex(&self) -> Complex64 {
        if self.is_zero() {
            Complex64::new(0.0, 0.0)
        } else {
            self.value * self.log_scale.exp()
        }
    }

    /// Real part as `(sign, log_abs)`; imaginary leakage is the caller's
    /// responsibility to check.
    pub fn real_sign_log(&self) -> (f64, f64) {
        if self.is_zero() || self.value.re == 0.0 {
            (0.0, f64::NEG_INFINITY)
        } else {
            (
                self.value.re.signum(),
                self.log_scale + self.value.re.abs().ln(),
            )
        }
    }
}

/// Sum of terms given as logs, with max-extraction: `sum_j exp(log_j)`.
pub struct LogSum {
    max_re: f64,
    terms: Vec<Complex64>,
}

impl LogSum {
    pub fn new() -> Self {
        LogSum {
            max_re: f64::NEG_INFINITY,
            terms: Vec::new(),
        }
    }

    pub fn push_log(&mut self, log: Complex64) {
        self.max_re = self.max_re.max(log.re);
        self.terms.push(log);
    }

    pub fn total(&self) -> Scaled {
        if self.terms.is_empty() || self.max_re == f64::NEG_INFINITY {
            return Scaled::zero();
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for l in &self.terms {
            let m = (l.re - self.max_re).exp();
            acc += m * Complex64::new(l.im.cos(), l.im.sin());
        }
        if acc == Complex64::new(0.0, 0.0) {
            return Scaled::zero();
        }
        Scaled {
            log_scale: self.max_re,
            value: acc,
        }
    }
}

impl Default for LogSum {
    fn default() -> Self {
        Self::new()
    }
}

/// `oint f dz/(2 pi i)` where `f` is supplied as `log f`; result is scaled.
pub fn integrate_closed_log(
    log_f: &dyn Fn(Complex64) -> Complex64,
    contour: &ClosedContour,
    n: usize,
) -> Scaled {
    let mut sum = LogSum::new();
    for j in 0..n {
        let z = contour.node(j, n);
        let l = log_f(z) + (z - contour.center).ln();
        sum.push_log(l);
    }
    let mut s = sum.total();
    s.log_scale -= (n as f64).ln();
    s
}

/// Gauss-Legendre rule on [-1, 1], computed by Newton iteration on the
/// Legendre recurrence.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Chebyshev-based initial guess.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_and_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Nodes/weights mapped to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(self.weights.iter())
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Pick the circle radius (about `center`) minimizing the maximum of
/// `log|f|` over the contour; a crude golden-section search is plenty since
/// this only conditions the quadrature, never changes the value.
pub fn optimize_radius(
    log_abs_f: &dyn Fn(Complex64) -> f64,
    center: Complex64,
    lo: f64,
    hi: f64,
) -> f64 {
    let probe = |r: f64| -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for j in 0..48 {
            let th = TWO_PI * j as f64 / 48.0;
            let z = center + r * Complex64::new(th.cos(), th.sin());
            worst = worst.max(log_abs_f(z));
        }
        worst
    };
    let phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = probe(c.exp());
    let mut fd = probe(d.exp());
    for _ in 0..24 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = probe(c.exp());
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = probe(d.exp());
        }
    }
    (0.5 * (a + b)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_residues() {
        let unit = ClosedContour::new(Complex64::new(0.0, 0.0), 1.0, 16).unwrap();
        // f = 1/z around 0 -> 1
        let (v, _) = integrate_closed(&|z| 1.0 / z, &unit, 1e-13).unwrap();
        assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        // f = z^2 -> 0
        let (v, _) = integrate_closed(&|z| z * z, &unit, 1e-13).unwrap();
        assert!(v.norm() < 1e-12);
        // coefficient of v^2 in (1-v)^5 is C(5,2) = 10
        let (v, _) = integrate_closed(&|z| (1.0 - z).powu(5) / z.powu(3), &unit, 1e-13).unwrap();
        assert!((v - Complex64::new(10.0, 0.0)).norm() < 1e-11);
    }

    #[test]
    fn contour_deformation_invariance() {
        // Analytic between radii: the same residue from two circles.
        let f = |z: Complex64| (z.exp()) / z;
        for r in [0.4, 1.7] {
            let c = ClosedContour::new(Complex64::new(0.0, 0.0), r, 16).unwrap();
            let (v, _) = integrate_closed(&f, &c, 1e-13).unwrap();
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn trapezoid_error_halves_fast() {
        // Exponential convergence: each doubling should crush the error until
        // the floating-point floor.
        let c = ClosedContour::new(Complex64::new(0.0, 0.0), 1.0, 8).unwrap();
        let f = |z: Complex64| (3.0 * z).exp() / z;
        let exact = Complex64::new(1.0, 0.0);
        let mut prev_err = f64::INFINITY;
        let mut improved = 0;
        for k in 3..8 {
            let v = trapezoid_circle(&f, &c, 1 << k);
            let err = (v - exact).norm();
            if prev_err > 1e-14 && err < prev_err / 10.0 {
                improved += 1;
            }
            prev_err = err;
        }
        assert!(improved >= 2, "trapezoid convergence too slow");
    }

    #[test]
    fn vertical_line_gaussian() {
        // (1/(2 pi i)) INT e^{z^2/2 + bz} dz over Re z = -c equals
        // phi(b) = e^{-b^2/2}/sqrt(2 pi) for any c > 0.
        let b = 0.7;
        let line = OpenContour::VerticalLine { anchor: -1.0 };
        let f = |z: Complex64| (z * z * 0.5 + b * z).exp();
        let (v, _) = integrate_open(&f, &line, 1e-13).unwrap();
        let got = v / Complex64::new(0.0, TWO_PI);
        let want = (-b * b / 2.0f64).exp() / (TWO_PI).sqrt();
        assert!((got - Complex64::new(want, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn ray_cutoff_stability() {
        // Doubling the requested cutoff changes nothing measurable.
        let ray = |cut: f64| OpenContour::RayPair {
            origin: Complex64::new(0.0, 0.0),
            angle: std::f64::consts::FRAC_PI_3,
            cutoff: cut,
        };
        let f = |z: Complex64| (z * z * z / 3.0).exp();
        let (a, _) = integrate_open(&f, &ray(6.0), 1e-14).unwrap();
        let (b, _) = integrate_open(&f, &ray(12.0), 1e-14).unwrap();
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn gauss_legendre_exactness() {
        let gl = GaussLegendre::new(12);
        // integrates x^22 on [-1,1] exactly (degree <= 2n-1 = 23)
        let got: f64 = gl
            .nodes
            .iter()
            .zip(&gl.weights)
            .map(|(x, w)| w * x.powi(22))
            .sum();
        assert!((got - 2.0 / 23.0).abs() < 1e-14);
        let s: f64 = gl.weights.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn log_sum_matches_direct() {
        let mut ls = LogSum::new();
        let logs = [
            Complex64::new(2.0, 0.3),
            Complex64::new(-1.0, 2.0),
            Complex64::new(1.5, -0.4),
        ];
        let mut direct = Complex64::new(0.0, 0.0);
        for l in logs {
            ls.push_log(l);
            direct += l.exp();
        }
        assert!((ls.total().to_complex() - direct).norm() < 1e-13 * direct.norm());
    }
}

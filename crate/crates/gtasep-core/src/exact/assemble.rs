//! Factorized assembly of the discrete kernel matrices and the finite
//! Fredholm determinant.
//!
//! The double-contour step kernel separates into (row vector over u-nodes)
//! x (Cauchy matrix) x (column vector over v-nodes), so a full N x N kernel
//! block costs two small matrix products instead of N^2 quadratures.  Rows
//! and columns carry their own log scales; the assembled matrix lives in
//! log space until a diagonal balancing similarity brings it into f64 range.

use num_complex::Complex64;
use rayon::prelude::*;

use super::kernels::{cln, gamma0, gamma1};
use super::KernelError;
use crate::linalg::{det_i_minus, LogMat, Mat};
use crate::model::{InitialCondition, ModelParams, TaggedQuery};
use crate::quad::{optimize_radius, ClosedContour, Scaled};

/// Scaled row/column vectors over contour nodes.
struct ScaledVecs {
    count: usize,
    nodes: usize,
    log: Vec<f64>,
    data: Vec<Complex64>,
}

impl ScaledVecs {
    fn build(points: usize, nodes: usize, mut log_at: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut log = vec![f64::NEG_INFINITY; points];
        let mut data = vec![Complex64::new(0.0, 0.0); points * nodes];
        let mut raw = vec![Complex64::new(0.0, 0.0); nodes];
        for r in 0..points {
            let mut top = f64::NEG_INFINITY;
            for (j, slot) in raw.iter_mut().enumerate() {
                let l = log_at(r, j);
                top = top.max(l.re);
                *slot = l;
            }
            log[r] = top;
            for j in 0..nodes {
                let l = raw[j];
                data[r * nodes + j] =
                    (l.re - top).exp() * Complex64::new(l.im.cos(), l.im.sin());
            }
        }
        ScaledVecs {
            count: points,
            nodes,
            log,
            data,
        }
    }

    fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.nodes..(r + 1) * self.nodes]
    }
}

fn scaled_from(log: f64, v: Complex64) -> Scaled {
    if v == Complex64::new(0.0, 0.0) {
        Scaled::zero()
    } else {
        Scaled {
            log_scale: log,
            value: v,
        }
    }
}

/// Double-contour assembler for the step-IC kernel.
pub(crate) struct StepAssembler {
    rows: ScaledVecs,
    cols: ScaledVecs,
    cauchy: Vec<Complex64>,
    row_points: Vec<(i64, i64)>,
}

impl StepAssembler {
    pub(crate) fn new(
        t: u64,
        params: &ModelParams,
        row_points: &[(i64, i64)],
        col_points: &[(i64, i64)],
        nodes: usize,
    ) -> Result<Self, KernelError> {
        let (mu, nu) = (params.mu(), params.nu());
        let tf = t as f64;
        let row_log = move |n: i64, x: i64, u: Complex64| -> Complex64 {
            n as f64 * cln(u) + tf * cln(1.0 - mu * u)
                + (n + x - t as i64 - 1) as f64 * cln(1.0 - nu * u)
                - (x + n + 1) as f64 * cln(1.0 - u)
        };
        let col_log = move |n: i64, y: i64, v: Complex64| -> Complex64 {
            (y + n) as f64 * cln(1.0 - v)
                - n as f64 * cln(v)
                - tf * cln(1.0 - mu * v)
                - (n + y - t as i64) as f64 * cln(1.0 - nu * v)
        };
        // Contour radii tuned on representative points; any admissible radius
        // gives the same kernel, this only controls cancellation.
        let rep_r = median_point(row_points);
        let rep_c = median_point(col_points);
        let d1 = gamma1(params, 1.0).radius;
        let d0 = gamma0(params, 1.0).radius;
        let r_u = optimize_radius(
            &|u| row_log(rep_r.0, rep_r.1, u).re,
            Complex64::new(1.0, 0.0),
            0.02 * d1,
            0.95 * d1,
        );
        let mut r_v = optimize_radius(
            &|v| col_log(rep_c.0, rep_c.1, v).re,
            Complex64::new(0.0, 0.0),
            0.02 * d0,
            0.95 * d0,
        );
        // keep |v - u| bounded away from zero on the product grid
        r_v = r_v.min(0.88 * (1.0 - r_u));
        let cu = ClosedContour::new(Complex64::new(1.0, 0.0), r_u, 256).unwrap();
        let cv = ClosedContour::new(Complex64::new(0.0, 0.0), r_v, 256).unwrap();
        let nf = nodes as f64;
        let u_nodes: Vec<Complex64> = (0..nodes).map(|j| cu.node(j, nodes)).collect();
        let v_nodes: Vec<Complex64> = (0..nodes).map(|j| cv.node(j, nodes)).collect();
        let rows = ScaledVecs::build(row_points.len(), nodes, |r, j| {
            let (n, x) = row_points[r];
            if x + n + 1 <= 0 {
                // off the dynamical support: the kernel row vanishes
                return Complex64::new(f64::NEG_INFINITY, 0.0);
            }
            let u = u_nodes[j];
            row_log(n, x, u) + cln((u - 1.0) / nf)
        });
        let cols = ScaledVecs::build(col_points.len(), nodes, |c, j| {
            let (n, y) = col_points[c];
            let v = v_nodes[j];
            col_log(n, y, v) + cln(v / nf)
        });
        let mut cauchy = vec![Complex64::new(0.0, 0.0); nodes * nodes];
        for i in 0..nodes {
            for j in 0..nodes {
                cauchy[i * nodes + j] = (1.0 - nu) / (v_nodes[j] - u_nodes[i]);
            }
        }
        Ok(StepAssembler {
            rows,
            cols,
            cauchy,
            row_points: row_points.to_vec(),
        })
    }

    /// All entries at once: G = R C, E = G S^T.
    pub(crate) fn matrix(&self) -> Vec<Scaled> {
        let (nr, nc, nn) = (self.rows.count, self.cols.count, self.rows.nodes);
        let mut g = vec![Complex64::new(0.0, 0.0); nr * nn];
        g.par_chunks_mut(nn).enumerate().for_each(|(r, out)| {
            let row = self.rows.row(r);
            for (i, &ri) in row.iter().enumerate() {
                if ri == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let crow = &self.cauchy[i * nn..(i + 1) * nn];
                for j in 0..nn {
                    out[j] += ri * crow[j];
                }
            }
        });
        let mut entries = vec![Scaled::zero(); nr * nc];
        entries
            .par_chunks_mut(nc)
            .enumerate()
            .for_each(|(r, out)| {
                let grow = &g[r * nn..(r + 1) * nn];
                for (c, slot) in out.iter_mut().enumerate() {
                    if self.row_points[r].1 + self.row_points[r].0 + 1 <= 0 {
                        continue;
                    }
                    let srow = self.cols.row(c);
                    let mut acc = Complex64::new(0.0, 0.0);
                    for j in 0..nn {
                        acc += grow[j] * srow[j];
                    }
                    *slot = scaled_from(self.rows.log[r] + self.cols.log[c], acc);
                }
            });
        entries
    }

    pub(crate) fn entry_scaled(&self, r: usize, c: usize) -> Scaled {
        let nn = self.rows.nodes;
        let row = self.rows.row(r);
        let col = self.cols.row(c);
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..nn {
            if row[i] == Complex64::new(0.0, 0.0) {
                continue;
            }
            let crow = &self.cauchy[i * nn..(i + 1) * nn];
            let mut inner = Complex64::new(0.0, 0.0);
            for j in 0..nn {
                inner += crow[j] * col[j];
            }
            acc += row[i] * inner;
        }
        scaled_from(self.rows.log[r] + self.cols.log[c], acc)
    }
}

/// Single-contour assembler for the alternating-IC kernel.
pub(crate) struct AltAssembler {
    rows: ScaledVecs,
    cols: ScaledVecs,
    row_points: Vec<(i64, i64)>,
    col_points: Vec<(i64, i64)>,
}

impl AltAssembler {
    pub(crate) fn new(
        t: u64,
        params: &ModelParams,
        row_points: &[(i64, i64)],
        col_points: &[(i64, i64)],
        nodes: usize,
    ) -> Result<Self, KernelError> {
        let (p, mu, nu) = (params.p(), params.mu(), params.nu());
        let tf = t as f64;
        let rep_r = median_point(row_points);
        let rep_c = median_point(col_points);
        let full_log = move |rn: i64, rx: i64, cn: i64, cy: i64, v: Complex64| -> Complex64 {
            (cy + cn + rn) as f64 * cln(1.0 - v) + tf * cln(1.0 - p + p * v)
                - (rx + rn + cn + 1) as f64 * cln(v)
                - tf * cln(1.0 - mu * v)
                - (cy + cn + rn - t as i64) as f64 * cln(1.0 - nu * v)
        };
        let d0 = gamma0(params, 1.0).radius;
        let r_v = optimize_radius(
            &|v| full_log(rep_r.0, rep_r.1, rep_c.0, rep_c.1, v).re,
            Complex64::new(0.0, 0.0),
            0.02 * d0,
            0.95 * d0,
        );
        let cv = ClosedContour::new(Complex64::new(0.0, 0.0), r_v, 256).unwrap();
        let nf = nodes as f64;
        let v_nodes: Vec<Complex64> = (0..nodes).map(|j| cv.node(j, nodes)).collect();
        // split: the t-sized factor is shared half/half between the sides
        let half_e =
            move |v: Complex64| 0.5 * tf * (cln(1.0 - p + p * v) - cln(1.0 - mu * v));
        let rows = ScaledVecs::build(row_points.len(), nodes, |r, j| {
            let (n, x) = row_points[r];
            let v = v_nodes[j];
            -((x + n) as f64) * cln(v) + n as f64 * (cln(1.0 - v) - cln(1.0 - nu * v))
                + half_e(v)
                + cln(v / nf)
        });
        let cols = ScaledVecs::build(col_points.len(), nodes, |c, j| {
            let (n, y) = col_points[c];
            let v = v_nodes[j];
            (y + n) as f64 * cln(1.0 - v) - (n + 1) as f64 * cln(v)
                + (t as i64 - y - n) as f64 * cln(1.0 - nu * v)
                + half_e(v)
        });
        Ok(AltAssembler {
            rows,
            cols,
            row_points: row_points.to_vec(),
            col_points: col_points.to_vec(),
        })
    }

    pub(crate) fn matrix(&self) -> Vec<Scaled> {
        let (nr, nc, nn) = (self.rows.count, self.cols.count, self.rows.nodes);
        let mut entries = vec![Scaled::zero(); nr * nc];
        entries
            .par_chunks_mut(nc)
            .enumerate()
            .for_each(|(r, out)| {
                let row = self.rows.row(r);
                let (rn, rx) = self.row_points[r];
                for (c, slot) in out.iter_mut().enumerate() {
                    let (cn, _) = self.col_points[c];
                    if rx + rn + cn + 1 <= 0 {
                        continue; // no pole at v = 0
                    }
                    let col = self.cols.row(c);
                    let mut acc = Complex64::new(0.0, 0.0);
                    for j in 0..nn {
                        acc += row[j] * col[j];
                    }
                    *slot = scaled_from(self.rows.log[r] + self.cols.log[c], acc);
                }
            });
        entries
    }

    pub(crate) fn entry_scaled(&self, r: usize, c: usize) -> Scaled {
        let nn = self.rows.nodes;
        let (rn, rx) = self.row_points[r];
        let (cn, _) = self.col_points[c];
        if rx + rn + cn + 1 <= 0 {
            return Scaled::zero();
        }
        let row = self.rows.row(r);
        let col = self.cols.row(c);
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..nn {
            acc += row[j] * col[j];
        }
        scaled_from(self.rows.log[r] + self.cols.log[c], acc)
    }
}

/// Factorized transport block `phi^{*}` shared by both initial conditions.
struct PhiStarAssembler {
    rows: ScaledVecs,
    cols: ScaledVecs,
    row_points: Vec<(i64, i64)>,
    col_points: Vec<(i64, i64)>,
}

impl PhiStarAssembler {
    fn new(
        params: &ModelParams,
        row_points: &[(i64, i64)],
        col_points: &[(i64, i64)],
        nodes: usize,
    ) -> Self {
        let nu = params.nu();
        let rep_r = median_point(row_points);
        let rep_c = median_point(col_points);
        let d1 = gamma1(params, 1.0).radius;
        let full = move |rn: i64, rx: i64, cn: i64, cy: i64, v: Complex64| -> Complex64 {
            let e = cn + cy - rn - rx;
            (e - 1) as f64 * cln(1.0 - v) - (cn - rn) as f64 * cln(v)
                - (e + 1) as f64 * cln(1.0 - nu * v)
        };
        let r1 = optimize_radius(
            &|v| full(rep_r.0, rep_r.1, rep_c.0, rep_c.1, v).re,
            Complex64::new(1.0, 0.0),
            0.02 * d1,
            0.9 * d1,
        );
        let c1 = ClosedContour::new(Complex64::new(1.0, 0.0), r1, 256).unwrap();
        let nf = nodes as f64;
        let v_nodes: Vec<Complex64> = (0..nodes).map(|j| c1.node(j, nodes)).collect();
        let rows = ScaledVecs::build(row_points.len(), nodes, |r, j| {
            let (n, x) = row_points[r];
            let v = v_nodes[j];
            -((n + x) as f64) * cln(1.0 - v) + n as f64 * cln(v)
                + (n + x) as f64 * cln(1.0 - nu * v)
        });
        let cols = ScaledVecs::build(col_points.len(), nodes, |c, j| {
            let (n, y) = col_points[c];
            let v = v_nodes[j];
            (n + y - 1) as f64 * cln(1.0 - v) - n as f64 * cln(v)
                - (n + y + 1) as f64 * cln(1.0 - nu * v)
                + cln((v - 1.0) / nf)
        });
        PhiStarAssembler {
            rows,
            cols,
            row_points: row_points.to_vec(),
            col_points: col_points.to_vec(),
        }
    }

    fn matrix(&self, params: &ModelParams) -> Vec<Scaled> {
        let (nr, nc, nn) = (self.rows.count, self.cols.count, self.rows.nodes);
        let numin1 = params.nu() - 1.0;
        let mut entries = vec![Scaled::zero(); nr * nc];
        entries
            .par_chunks_mut(nc)
            .enumerate()
            .for_each(|(r, out)| {
                let (rn, rx) = self.row_points[r];
                let row = self.rows.row(r);
                for (c, slot) in out.iter_mut().enumerate() {
                    let (cn, cy) = self.col_points[c];
                    // indicator n_l > n_k, and a genuine pole at v = 1
                    if cn <= rn || cn + cy - rn - rx >= 1 {
                        continue;
                    }
                    let col = self.cols.row(c);
                    let mut acc = Complex64::new(0.0, 0.0);
                    for j in 0..nn {
                        acc += row[j] * col[j];
                    }
                    *slot = scaled_from(self.rows.log[r] + self.cols.log[c], acc * numin1);
                }
            });
        entries
    }
}

fn median_point(points: &[(i64, i64)]) -> (i64, i64) {
    points[points.len() / 2]
}

/// Truncation controls for the finite determinant.
#[derive(Debug, Clone, Copy)]
pub struct TruncationPolicy {
    /// extra sites below the dynamical support (validation margin)
    pub margin: u64,
    /// tolerance for the margin/node-doubling stability check
    pub stability_tol: f64,
    /// run the doubled configuration and fail on disagreement
    pub validate: bool,
    /// contour node override (power of two); `None` picks from `t`
    pub nodes: Option<usize>,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            margin: 0,
            stability_tol: 1e-8,
            validate: false,
            nodes: None,
        }
    }
}

fn auto_nodes(t: u64) -> usize {
    let want = (24.0 * (t.max(1) as f64).cbrt()).ceil() as usize;
    want.next_power_of_two().clamp(256, 4096)
}

/// One block of the truncated kernel: particle `n`, coordinates
/// `x in [x_lo, x_hi)`.
#[derive(Debug, Clone, Copy)]
pub struct Block {
    pub n: i64,
    pub x_lo: i64,
    pub x_hi: i64,
}

/// Finite truncation of the matrix kernel with its conjugation exponents.
pub struct DiscreteKernelMatrix {
    pub blocks: Vec<Block>,
    pub points: Vec<(i64, i64)>,
    pub logmat: LogMat,
    pub conjugation: Vec<f64>,
}

impl DiscreteKernelMatrix {
    pub fn dim(&self) -> usize {
        self.points.len()
    }

    /// Balanced plain-float matrix (diagonal similarity applied).
    pub fn to_mat(&self) -> Result<Mat, KernelError> {
        self.logmat
            .to_mat(&self.conjugation)
            .ok_or(KernelError::Conditioning)
    }
}

fn alt_shift(entries: &[(i64, i64)]) -> i64 {
    let n_min = entries.iter().map(|&(n, _)| n).min().unwrap();
    (1 - n_min).max(0)
}

/// Assemble the truncated Theorem-1 kernel for a joint query.
pub fn assemble_kernel(
    ic: &InitialCondition,
    t: u64,
    query: &TaggedQuery,
    params: &ModelParams,
    policy: &TruncationPolicy,
) -> Result<DiscreteKernelMatrix, KernelError> {
    let alternating = match ic {
        InitialCondition::Step => false,
        InitialCondition::Alternating => true,
        _ => {
            return Err(KernelError::InvalidArgument(
                "exact joint distributions cover step and alternating IC".into(),
            ))
        }
    };
    // translation invariance of the alternating kernel: shift indices to be
    // positive, thresholds down by two per unit shift
    let shift = if alternating { alt_shift(query.entries()) } else { 0 };
    let entries: Vec<(i64, i64)> = query
        .entries()
        .iter()
        .map(|&(n, a)| (n + shift, a - 2 * shift))
        .collect();
    if !alternating && entries.iter().any(|&(n, _)| n < 1) {
        return Err(KernelError::InvalidArgument(
            "step IC defines particles n >= 1".into(),
        ));
    }
    let mut blocks = Vec::new();
    let mut points = Vec::new();
    for &(n, a) in &entries {
        let x0 = if alternating { -2 * n } else { -n };
        let hi = a.min(x0 + t as i64 + 1); // thresholds above the support cap out
        let lo = x0 - policy.margin as i64;
        let (lo, hi) = (lo.min(hi), hi);
        blocks.push(Block {
            n,
            x_lo: lo,
            x_hi: hi,
        });
        for x in lo..hi {
            points.push((n, x));
        }
    }
    let dim = points.len();
    let mut logmat = LogMat::zeros(dim);
    if dim > 0 {
        let nodes = policy.nodes.unwrap_or_else(|| auto_nodes(t));
        let main: Vec<Scaled> = if alternating {
            AltAssembler::new(t, params, &points, &points, nodes)?.matrix()
        } else {
            StepAssembler::new(t, params, &points, &points, nodes)?.matrix()
        };
        let transport = PhiStarAssembler::new(params, &points, &points, nodes).matrix(params);
        for r in 0..dim {
            for c in 0..dim {
                let k = main[r * dim + c];
                if !k.is_zero() {
                    let (s, l) = k.real_sign_log();
                    logmat.add(r, c, l, s);
                }
                let ph = transport[r * dim + c];
                if !ph.is_zero() {
                    let (s, l) = ph.real_sign_log();
                    logmat.add(r, c, l, -s); // K_t = -phi* + Ktilde
                }
            }
        }
    }
    let conjugation = logmat.balance(None);
    Ok(DiscreteKernelMatrix {
        blocks,
        points,
        logmat,
        conjugation,
    })
}

/// `det(I - A)` of an assembled kernel, clamped into the probability range.
pub fn fredholm_value(matrix: &DiscreteKernelMatrix) -> Result<f64, KernelError> {
    if matrix.dim() == 0 {
        return Ok(1.0);
    }
    let m = matrix.to_mat()?;
    let v = det_i_minus(&m);
    clamp_probability(v)
}

fn clamp_probability(v: f64) -> Result<f64, KernelError> {
    if !v.is_finite() {
        return Err(KernelError::InvalidArgument("non-finite determinant".into()));
    }
    if v < -1e-10 || v > 1.0 + 1e-9 {
        return Err(KernelError::InvalidArgument(format!(
            "determinant {v} outside [0,1] beyond tolerance"
        )));
    }
    Ok(v.clamp(0.0, 1.0))
}

/// Joint-distribution evaluation report.
#[derive(Debug, Clone, Copy)]
pub struct JointDist {
    pub value: f64,
    pub dim: usize,
    pub nodes: usize,
    /// |value - revalidated value| when the policy asked for validation
    pub stability: Option<f64>,
}

/// `P(x_{n_1} >= a_1, ..., x_{n_m} >= a_m)` for step or alternating IC as a
/// finite Fredholm determinant over the support-truncated blocks.
pub fn joint_distribution(
    ic: &InitialCondition,
    t: u64,
    query: &TaggedQuery,
    params: &ModelParams,
    policy: &TruncationPolicy,
) -> Result<JointDist, KernelError> {
    let mat = assemble_kernel(ic, t, query, params, policy)?;
    let nodes = policy.nodes.unwrap_or_else(|| auto_nodes(t));
    let value = fredholm_value(&mat)?;
    let mut stability = None;
    if policy.validate {
        let harder = TruncationPolicy {
            margin: policy.margin + 16,
            nodes: Some(nodes * 2),
            validate: false,
            ..*policy
        };
        let again = joint_distribution(ic, t, query, params, &harder)?;
        let diff = (value - again.value).abs();
        if diff > policy.stability_tol {
            return Err(KernelError::TruncationInstability(diff));
        }
        stability = Some(diff);
    }
    Ok(JointDist {
        value,
        dim: mat.dim(),
        nodes,
        stability,
    })
}

/// One-point tails `P(x_n(t) >= a)` over an ascending threshold grid,
/// assembled once at the largest threshold; each smaller threshold is a
/// leading principal minor of the same balanced matrix.
pub fn one_point_tail_grid(
    ic: &InitialCondition,
    t: u64,
    n: i64,
    thresholds: &[i64],
    params: &ModelParams,
    policy: &TruncationPolicy,
) -> Result<Vec<f64>, KernelError> {
    if thresholds.windows(2).any(|w| w[0] > w[1]) {
        return Err(KernelError::InvalidArgument(
            "thresholds must be ascending".into(),
        ));
    }
    let a_max = *thresholds.last().ok_or_else(|| {
        KernelError::InvalidArgument("empty threshold grid".into())
    })?;
    let query = TaggedQuery::new(vec![(n, a_max)]).map_err(KernelError::Model)?;
    let mat = assemble_kernel(ic, t, &query, params, policy)?;
    let full = mat.to_mat()?;
    let block = mat.blocks[0];
    let values: Result<Vec<f64>, KernelError> = thresholds
        .par_iter()
        .map(|&a| {
            let a_eff = a.min(block.x_hi);
            let len = (a_eff - block.x_lo).max(0) as usize;
            if len == 0 {
                return Ok(1.0);
            }
            let mut sub = Mat::zeros(len, len);
            for i in 0..len {
                for j in 0..len {
                    sub.set(i, j, full.get(i, j));
                }
            }
            clamp_probability(det_i_minus(&sub))
        })
        .collect();
    values
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{big_ratio, InitialCondition, RationalParams, TaggedQuery};
    use num_rational::BigRational;
    use num_traits::{One, ToPrimitive};

    fn params(p: f64, mu: f64) -> ModelParams {
        ModelParams::new(p, mu).unwrap()
    }

    /// Binomial tail P(Bin(t, p) >= k), exact in rationals.
    fn binomial_tail(t: u64, k: i64, p: (i64, i64)) -> f64 {
        let pr = big_ratio(p.0, p.1);
        let q = BigRational::one() - &pr;
        let mut total = BigRational::from_integer(0.into());
        for j in 0..=t as i64 {
            if j < k {
                continue;
            }
            let mut c = BigRational::one();
            for i in 0..j {
                c = c * big_ratio(t as i64 - i, i + 1);
            }
            let mut term = c;
            for _ in 0..j {
                term *= &pr;
            }
            for _ in 0..(t as i64 - j) {
                term *= &q;
            }
            total += term;
        }
        total.to_f64().unwrap()
    }

    #[test]
    fn head_particle_tail_is_binomial() {
        // x_1(t) + 1 ~ Bin(t, p) for the step IC; spec case t=2, a=0 -> 3/4.
        let pr = params(0.5, 0.5);
        let q = TaggedQuery::new(vec![(1, 0)]).unwrap();
        let jd = joint_distribution(
            &InitialCondition::Step,
            2,
            &q,
            &pr,
            &TruncationPolicy::default(),
        )
        .unwrap();
        assert!((jd.value - 0.75).abs() < 1e-12, "{}", jd.value);
        // a grid of thresholds at t = 16 for two parameter sets
        for (pf, muf) in [((1i64, 2i64), (1i64, 2i64)), ((1, 2), (3, 4))] {
            let prm = params(pf.0 as f64 / pf.1 as f64, muf.0 as f64 / muf.1 as f64);
            let t = 16u64;
            for a in -1..=(t as i64 - 1) {
                let q = TaggedQuery::new(vec![(1, a)]).unwrap();
                let jd = joint_distribution(
                    &InitialCondition::Step,
                    t,
                    &q,
                    &prm,
                    &TruncationPolicy::default(),
                )
                .unwrap();
                let want = binomial_tail(t, a + 1, pf);
                assert!(
                    (jd.value - want).abs() < 1e-10,
                    "a={a}: {} vs {want}",
                    jd.value
                );
            }
        }
    }

    #[test]
    fn certainty_at_support_minimum() {
        let pr = params(0.5, 0.75);
        let q = TaggedQuery::new(vec![(1, -1), (3, -3)]).unwrap();
        let jd = joint_distribution(
            &InitialCondition::Step,
            5,
            &q,
            &pr,
            &TruncationPolicy::default(),
        )
        .unwrap();
        assert_eq!(jd.value, 1.0);
        assert_eq!(jd.dim, 0);
        let q = TaggedQuery::new(vec![(0, 0)]).unwrap();
        let jd = joint_distribution(
            &InitialCondition::Alternating,
            3,
            &q,
            &pr,
            &TruncationPolicy::default(),
        )
        .unwrap();
        assert_eq!(jd.value, 1.0);
    }

    #[test]
    fn alternating_single_step() {
        // isolated particles jump independently: P(x_n(1) >= x_n(0)+1) = p
        let pr = params(0.5, 0.75);
        for n in [-2i64, 0, 3] {
            let q = TaggedQuery::new(vec![(n, -2 * n + 1)]).unwrap();
            let jd = joint_distribution(
                &InitialCondition::Alternating,
                1,
                &q,
                &pr,
                &TruncationPolicy::default(),
            )
            .unwrap();
            assert!((jd.value - pr.p()).abs() < 1e-11, "n={n}: {}", jd.value);
        }
    }

    #[test]
    fn joint_matches_enumeration_small() {
        // m=2 query against the exhaustive finite-history law: for the step
        // IC, particles 1..N with N = max tagged index suffice.
        let prq = RationalParams::from_fracs((1, 2), (3, 4)).unwrap();
        let pr = prq.to_float().unwrap();
        let t = 3u64;
        let law = crate::sim::enumerate_law(&[-1, -2, -3], &prq, t).unwrap();
        for (a1, a2) in [(0i64, -2i64), (1, -1), (-1, -3), (2, 0)] {
            let want: f64 = law
                .iter()
                .filter(|(cfg, _)| cfg[0] >= a1 && cfg[2] >= a2)
                .map(|(_, p)| crate::model::ratio_to_f64(p))
                .sum();
            let q = TaggedQuery::new(vec![(1, a1), (3, a2)]).unwrap();
            let jd = joint_distribution(
                &InitialCondition::Step,
                t,
                &q,
                &pr,
                &TruncationPolicy::default(),
            )
            .unwrap();
            assert!(
                (jd.value - want).abs() < 1e-10,
                "(a1,a2)=({a1},{a2}): {} vs {want}",
                jd.value
            );
        }
    }

    #[test]
    fn monotone_in_thresholds_and_bounds() {
        let pr = params(0.5, 0.75);
        let t = 12u64;
        let grid: Vec<i64> = (-3..=12).collect();
        let tails = one_point_tail_grid(
            &InitialCondition::Step,
            t,
            2,
            &grid,
            &pr,
            &TruncationPolicy::default(),
        )
        .unwrap();
        for w in tails.windows(2) {
            assert!(w[1] <= w[0] + 1e-10, "tail not monotone: {w:?}");
        }
        for &v in &tails {
            assert!((0.0..=1.0).contains(&v));
        }
        assert!((tails[0] - 1.0).abs() < 1e-12);
        assert!(tails.last().unwrap() < &1e-9);
    }

    #[test]
    fn marginalization_from_m2() {
        // sending the partner threshold to its support minimum recovers the
        // one-point value
        let pr = params(0.5, 0.75);
        let t = 8u64;
        let q1 = TaggedQuery::new(vec![(2, 1)]).unwrap();
        let jd1 = joint_distribution(
            &InitialCondition::Step,
            t,
            &q1,
            &pr,
            &TruncationPolicy::default(),
        )
        .unwrap();
        let q2 = TaggedQuery::new(vec![(2, 1), (5, -5)]).unwrap();
        let jd2 = joint_distribution(
            &InitialCondition::Step,
            t,
            &q2,
            &pr,
            &TruncationPolicy::default(),
        )
        .unwrap();
        assert!((jd1.value - jd2.value).abs() < 1e-9);
        // alternating analogue
        let q1 = TaggedQuery::new(vec![(0, 3)]).unwrap();
        let jd1 = joint_distribution(
            &InitialCondition::Alternating,
            8,
            &q1,
            &pr,
            &TruncationPolicy::default(),
        )
        .unwrap();
        let q2 = TaggedQuery::new(vec![(0, 3), (2, -4)]).unwrap();
        let jd2 = joint_distribution(
            &InitialCondition::Alternating,
            8,
            &q2,
            &pr,
            &TruncationPolicy::default(),
        )
        .unwrap();
        assert!((jd1.value - jd2.value).abs() < 1e-9);
    }

    #[test]
    fn margin_and_node_doubling_stable() {
        let pr = params(0.5, 0.75);
        let q = TaggedQuery::new(vec![(1, 4), (3, 1)]).unwrap();
        let policy = TruncationPolicy {
            validate: true,
            ..Default::default()
        };
        let jd = joint_distribution(&InitialCondition::Step, 10, &q, &pr, &policy).unwrap();
        assert!(jd.stability.unwrap() < 1e-8);
        let q = TaggedQuery::new(vec![(-1, 4), (1, -1)]).unwrap();
        let jd =
            joint_distribution(&InitialCondition::Alternating, 10, &q, &pr, &policy).unwrap();
        assert!(jd.stability.unwrap() < 1e-8);
    }

    #[test]
    fn alternating_translation_invariance() {
        // shifting all indices by 1 and thresholds by -2 leaves the value
        let pr = params(0.5, 0.5);
        let q1 = TaggedQuery::new(vec![(0, 2), (2, -3)]).unwrap();
        let q2 = TaggedQuery::new(vec![(1, 0), (3, -5)]).unwrap();
        let a = joint_distribution(
            &InitialCondition::Alternating,
            9,
            &q1,
            &pr,
            &TruncationPolicy::default(),
        )
        .unwrap();
        let b = joint_distribution(
            &InitialCondition::Alternating,
            9,
            &q2,
            &pr,
            &TruncationPolicy::default(),
        )
        .unwrap();
        assert!((a.value - b.value).abs() < 1e-10);
    }
}

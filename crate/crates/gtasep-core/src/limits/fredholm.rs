//! Continuum Fredholm determinants `det(1 - P_a K P_a)` over the windowed
//! half-lines `[a_k, a_k + L]`.
//!
//! Transport deltas are never discretized as spikes.  The grid-embedding
//! route realizes them as exact identity maps between offset uniform
//! lattices (offsets must be commensurate, else the grid auto-refines or
//! refuses); the minor-decomposition route resolves them analytically: with
//! `K = S - T` and `T` strictly upper-triangular in the time order,
//! `det(1 - S + T) = det(1 - (1 + T)^{-1} S)`, and applying the nilpotent
//! `(1+T)^{-1} = sum (-T)^q` to `S` replaces every delta by an evaluation at
//! the shifted argument restricted to the max-threshold domain.

use super::kernels::{KernelEval, LimitKernelId, Transport};
use super::LimitError;
use crate::linalg::{det_i_minus, LogMat, Mat};
use crate::quad::GaussLegendre;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    Gauss,
    Uniform,
}

#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub kind: GridKind,
    pub nodes: usize,
    pub window: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            kind: GridKind::Gauss,
            nodes: 48,
            window: 12.0,
        }
    }
}

/// A gap-probability problem: kernel id, time points, per-block cutoffs and
/// the discretization.
#[derive(Debug, Clone)]
pub struct ContinuumFredholmProblem {
    pub kernel: LimitKernelId,
    pub times: Vec<f64>,
    pub cutoffs: Vec<f64>,
    pub grid: GridSpec,
}

impl ContinuumFredholmProblem {
    pub fn new(
        kernel: LimitKernelId,
        times: Vec<f64>,
        cutoffs: Vec<f64>,
        grid: GridSpec,
    ) -> Result<Self, LimitError> {
        if times.is_empty() || times.len() != cutoffs.len() {
            return Err(LimitError::InvalidArgument(
                "need m >= 1 time points with matching cutoffs".into(),
            ));
        }
        if grid.window <= 0.0 || grid.nodes < 4 {
            return Err(LimitError::InvalidArgument("bad grid spec".into()));
        }
        kernel.validate(&times)?;
        Ok(ContinuumFredholmProblem {
            kernel,
            times,
            cutoffs,
            grid,
        })
    }

    /// Blocks sorted by time (the determinant is invariant under the
    /// simultaneous permutation; sorting makes the transport strictly
    /// upper-triangular).
    fn sorted(&self) -> (Vec<f64>, Vec<f64>) {
        let mut idx: Vec<usize> = (0..self.times.len()).collect();
        idx.sort_by(|&a, &b| self.times[a].partial_cmp(&self.times[b]).unwrap());
        (
            idx.iter().map(|&i| self.times[i]).collect(),
            idx.iter().map(|&i| self.cutoffs[i]).collect(),
        )
    }

    fn s_abs_max(&self) -> f64 {
        self.cutoffs
            .iter()
            .fold(0.0f64, |a, &b| a.max(b.abs()))
            + self.grid.window
            + 2.0
    }

    fn has_transport(&self) -> bool {
        let (times, _) = self.sorted();
        for i in 0..times.len() {
            for j in i + 1..times.len() {
                if self.kernel.transport(times[i], times[j]).is_some() {
                    return true;
                }
            }
        }
        false
    }
}

fn balanced_det_i_minus(a: Mat) -> Result<f64, LimitError> {
    let n = a.rows;
    if n == 0 {
        return Ok(1.0);
    }
    let mut lm = LogMat::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let v = a.get(i, j);
            if !v.is_finite() {
                return Err(LimitError::Conditioning);
            }
            if v != 0.0 {
                lm.set(i, j, v.abs().ln(), v.signum());
            }
        }
    }
    let d = lm.balance(None);
    let m = lm.to_mat(&d).ok_or(LimitError::Conditioning)?;
    Ok(det_i_minus(&m))
}

/// Plain Nystrom on Gauss-Legendre nodes; smooth kernels only.
fn gauss_nystrom(problem: &ContinuumFredholmProblem) -> Result<f64, LimitError> {
    let (times, cutoffs) = problem.sorted();
    let m = times.len();
    let n = problem.grid.nodes;
    let gl = GaussLegendre::new(n);
    let eval = KernelEval::new(&problem.kernel, &times, problem.s_abs_max());
    let mut nodes: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut weights: Vec<Vec<f64>> = Vec::with_capacity(m);
    for &a in &cutoffs {
        let (xs, ws): (Vec<f64>, Vec<f64>) = gl.mapped(a, a + problem.grid.window).unzip();
        nodes.push(xs);
        weights.push(ws);
    }
    let dim = m * n;
    let mut a = Mat::zeros(dim, dim);
    for bi in 0..m {
        for bj in 0..m {
            let block = eval.fill(times[bi], &nodes[bi], times[bj], &nodes[bj]);
            for q in 0..n {
                for p in 0..n {
                    a.set(bi * n + q, bj * n + p, block[q * n + p] * weights[bj][p]);
                }
            }
        }
    }
    balanced_det_i_minus(a)
}

/// Near-integer greatest common divisor of the transport offsets, used to
/// refine `h` so every delta lands exactly on the lattice.
fn common_offset_divisor(offsets: &[f64], tol: f64) -> Option<f64> {
    let mut g = 0.0f64;
    for &b in offsets {
        let b = b.abs();
        if b < tol {
            continue;
        }
        if g == 0.0 {
            g = b;
            continue;
        }
        // Euclid with a floating tolerance
        let (mut x, mut y) = (g.max(b), g.min(b));
        while y > tol {
            let r = x % y;
            let r = if r > y - tol { 0.0 } else { r };
            x = y;
            y = r;
        }
        g = x;
        if g < tol {
            return None;
        }
    }
    Some(g)
}

struct UniformGrid {
    h: f64,
    per_block: usize,
    starts: Vec<f64>,
}

fn uniform_grid(
    cutoffs: &[f64],
    times: &[f64],
    kernel: &LimitKernelId,
    window: f64,
    nodes: usize,
) -> Result<UniformGrid, LimitError> {
    let m = cutoffs.len();
    // offsets that must be lattice multiples: a_i - a_j - shift_ij for every
    // transported pair
    let mut offsets = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            if let Some(tr) = kernel.transport(times[i], times[j]) {
                offsets.push(cutoffs[i] - cutoffs[j] - tr.shift);
            }
        }
    }
    let h0 = window / nodes as f64;
    let h = if offsets.iter().all(|b| b.abs() < 1e-12) {
        h0
    } else {
        let g = common_offset_divisor(&offsets, 1e-9)
            .ok_or(LimitError::OffsetNotOnGrid(offsets[0]))?;
        if g < h0 / 64.0 {
            return Err(LimitError::OffsetNotOnGrid(g));
        }
        // largest divisor of g not exceeding h0
        g / (g / h0).ceil()
    };
    let per_block = (window / h).ceil() as usize + 1;
    Ok(UniformGrid {
        h,
        per_block,
        starts: cutoffs.to_vec(),
    })
}

/// Uniform-grid embedding at a given resolution: trapezoid weights for the
/// smooth and Bessel parts, an exact 0/1 lattice map for the delta (unit
/// mass when it lands on the domain's end), and the Bessel jump node taken
/// at half value, which keeps the Euler-Maclaurin error expansion in even
/// powers for the Richardson stage.
fn uniform_embed_det(
    problem: &ContinuumFredholmProblem,
    grid: &UniformGrid,
    eval: &KernelEval,
    times: &[f64],
) -> Result<f64, LimitError> {
    let m = times.len();
    let n = grid.per_block;
    let h = grid.h;
    let dim = m * n;
    let mut a = Mat::zeros(dim, dim);
    let node = |b: usize, q: usize| grid.starts[b] + q as f64 * h;
    let weight = |q: usize| {
        if q == 0 || q == n - 1 {
            h / 2.0
        } else {
            h
        }
    };
    for bi in 0..m {
        let s1s: Vec<f64> = (0..n).map(|q| node(bi, q)).collect();
        for bj in 0..m {
            let s2s: Vec<f64> = (0..n).map(|p| node(bj, p)).collect();
            let smooth = eval.fill(times[bi], &s1s, times[bj], &s2s);
            let transport = problem.kernel.transport(times[bi], times[bj]);
            for q in 0..n {
                for p in 0..n {
                    let mut v = smooth[q * n + p] * weight(p);
                    if let Some(tr) = transport {
                        // Bessel density on s2 > s1 - shift.  At the jump
                        // node: half value when the jump is interior to the
                        // column domain (trapezoid across a cut), full value
                        // when it sits on the domain end (the integral then
                        // starts exactly there and the endpoint weight
                        // already halves the measure).
                        if tr.rho != 0.0 {
                            let arg = s2s[p] - s1s[q] + tr.shift;
                            if arg.abs() < 1e-9 * h {
                                let mass = if p == 0 { 1.0 } else { 0.5 };
                                v -= mass * tr.rho * weight(p);
                            } else if arg > 0.0 {
                                v -= tr.density(arg) * weight(p);
                            }
                        }
                    }
                    a.set(bi * n + q, bj * n + p, v);
                }
            }
            if let Some(tr) = transport {
                // exact lattice map for the delta: s2 = s1 - shift.  The
                // first matched node sits on the indicator cut the map
                // creates in the row variable; giving it half mass keeps the
                // trapezoid error expansion in even powers of h (the O(h)
                // boundary mismatch of the delta itself vanishes with the
                // row's measure).
                for q in 0..n {
                    let target = s1s[q] - tr.shift;
                    let off = (target - grid.starts[bj]) / h;
                    let p = off.round();
                    if (off - p).abs() < 1e-6 && p >= -1e-9 && (p as usize) < n {
                        let p = p as usize;
                        // half only at an interior indicator cut of the row
                        // variable (first matched row strictly inside the
                        // row domain); on the domain end the delta keeps its
                        // unit mass
                        let mass = if p == 0 && q > 0 { 0.5 } else { 1.0 };
                        let old = a.get(bi * n + q, bj * n + p);
                        a.set(bi * n + q, bj * n + p, old - mass);
                    }
                }
            }
        }
    }
    balanced_det_i_minus(a)
}

/// Grid-embedding route with two Richardson stages over h, h/2, h/4.
fn grid_embedding(problem: &ContinuumFredholmProblem) -> Result<f64, LimitError> {
    let (times, cutoffs) = problem.sorted();
    let eval = KernelEval::new(&problem.kernel, &times, problem.s_abs_max());
    let base = uniform_grid(
        &cutoffs,
        &times,
        &problem.kernel,
        problem.grid.window,
        problem.grid.nodes,
    )?;
    let mut dets = Vec::new();
    for level in 0..3 {
        let g = UniformGrid {
            h: base.h / (1 << level) as f64,
            per_block: (base.per_block - 1) * (1 << level) + 1,
            starts: base.starts.clone(),
        };
        dets.push(uniform_embed_det(problem, &g, &eval, &times)?);
    }
    let r1 = (4.0 * dets[1] - dets[0]) / 3.0;
    let r2 = (4.0 * dets[2] - dets[1]) / 3.0;
    Ok((16.0 * r2 - r1) / 15.0)
}

/// `det(1 - P_a K P_a)` by the route matching the problem: Nystrom for
/// smooth kernels, grid embedding (uniform) or minor decomposition (gauss)
/// when a transport part is present.
pub fn fredholm_det(problem: &ContinuumFredholmProblem) -> Result<f64, LimitError> {
    problem.kernel.validate(&problem.times)?;
    if !problem.has_transport() {
        return match problem.grid.kind {
            GridKind::Gauss => gauss_nystrom(problem),
            GridKind::Uniform => {
                // same Richardson ladder with no transport terms
                grid_embedding(problem)
            }
        };
    }
    match problem.grid.kind {
        GridKind::Uniform => grid_embedding(problem),
        GridKind::Gauss => fredholm_det_minor_decomposition(problem),
    }
}

// ---------- minor decomposition route ----------

/// Piecewise polynomial representation on Chebyshev-Lobatto nodes; kinks of
/// the transported columns become segment boundaries so every segment stays
/// analytic.
struct Seg {
    b: f64,
    xs: Vec<f64>,
    vals: Vec<f64>,
}

impl Seg {
    /// First-kind Chebyshev points: all interior, so a segment never
    /// samples its endpoints and one-sided limits of discontinuous columns
    /// come out right by construction.
    fn build(a: f64, b: f64, n: usize, f: &mut dyn FnMut(f64) -> f64) -> Seg {
        let n = n.max(1);
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let xs: Vec<f64> = (0..n)
            .map(|k| {
                mid - half * (std::f64::consts::PI * (2.0 * k as f64 + 1.0) / (2.0 * n as f64)).cos()
            })
            .collect();
        let vals = xs.iter().map(|&x| f(x)).collect();
        Seg { b, xs, vals }
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if n == 1 {
            return self.vals[0];
        }
        // barycentric weights for first-kind Chebyshev points:
        // w_k = (-1)^k sin((2k+1) pi / (2n))
        let mut num = 0.0;
        let mut den = 0.0;
        for k in 0..n {
            let dx = x - self.xs[k];
            if dx.abs() < 1e-14 {
                return self.vals[k];
            }
            let ang = std::f64::consts::PI * (2.0 * k as f64 + 1.0) / (2.0 * n as f64);
            let mut w = ang.sin();
            if k % 2 == 1 {
                w = -w;
            }
            let r = w / dx;
            num += r * self.vals[k];
            den += r;
        }
        num / den
    }
}

struct Rep {
    lo: f64,
    hi: f64,
    breaks: Vec<f64>,
    segs: Vec<Seg>,
}

impl Rep {
    fn build(
        lo: f64,
        hi: f64,
        mut breaks: Vec<f64>,
        pts: usize,
        f: &mut dyn FnMut(f64) -> f64,
    ) -> Rep {
        breaks.retain(|&b| b > lo + 1e-12 && b < hi - 1e-12);
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-10);
        let mut edges = vec![lo];
        edges.extend(breaks.iter().cloned());
        edges.push(hi);
        let segs = edges
            .windows(2)
            .map(|w| Seg::build(w[0], w[1], pts, f))
            .collect();
        Rep {
            lo,
            hi,
            breaks,
            segs,
        }
    }

    fn eval(&self, x: f64) -> f64 {
        if x < self.lo - 1e-12 || x > self.hi + 1e-12 {
            return 0.0; // outside the window: domain truncation
        }
        for s in &self.segs {
            if x <= s.b + 1e-12 {
                return s.eval(x);
            }
        }
        self.segs.last().map(|s| s.eval(x)).unwrap_or(0.0)
    }
}

/// Apply the transport operator `T_{ij}` to a represented column of block
/// `j`, producing the column restricted to block `i`:
/// `(T f)(x) = f(x - shift) 1_{x - shift >= a_j} + INT bessel * f`.
#[allow(clippy::too_many_arguments)]
fn apply_transport(
    tr: &Transport,
    rep: &Rep,
    a_j: f64,
    lo_i: f64,
    hi_i: f64,
    gl: &GaussLegendre,
    pts: usize,
) -> Rep {
    let shift = tr.shift;
    let rho = tr.rho;
    let mut breaks: Vec<f64> = vec![a_j + shift];
    for &b in &rep.breaks {
        breaks.push(b + shift);
    }
    breaks.push(rep.hi + shift);
    let mut f = |x: f64| -> f64 {
        let target = x - shift;
        // unit mass also when the delta sits exactly on the domain's end
        let mut v = if target >= a_j - 1e-12 {
            rep.eval(target)
        } else {
            0.0
        };
        if rho != 0.0 {
            let lo = target.max(a_j);
            let hi = rep.hi;
            if lo < hi {
                // split the z-integration at the representation's kinks and
                // keep panels short enough for the 24-point rule
                let mut edges = vec![lo];
                for &b in &rep.breaks {
                    if b > lo + 1e-12 && b < hi - 1e-12 {
                        edges.push(b);
                    }
                }
                edges.push(hi);
                let mut acc = 0.0;
                for w in edges.windows(2) {
                    let (a, b) = (w[0], w[1]);
                    let panels = ((b - a) / 3.0).ceil().max(1.0) as usize;
                    let pw = (b - a) / panels as f64;
                    for k in 0..panels {
                        let pa = a + k as f64 * pw;
                        for (z, wq) in gl.mapped(pa, pa + pw) {
                            acc += wq * tr.density(z - target) * rep.eval(z);
                        }
                    }
                }
                v += acc;
            }
        }
        v
    };
    Rep::build(lo_i, hi_i, breaks, pts, &mut f)
}

/// Kink locations of the transported columns on every block: the images of
/// the lower cutoffs under ascending transport chains.  The outer quadrature
/// must break there, since the effective kernel is only piecewise smooth in
/// the row variable.
fn kink_closure(
    m: usize,
    cutoffs: &[f64],
    window: f64,
    transports: &[Vec<Option<Transport>>],
) -> Vec<Vec<f64>> {
    let mut kinks: Vec<Vec<f64>> = vec![Vec::new(); m];
    for i in (0..m).rev() {
        let mut set = Vec::new();
        for j in i + 1..m {
            if let Some(tr) = &transports[i][j] {
                set.push(cutoffs[j] + tr.shift);
                set.push(cutoffs[j] + window + tr.shift);
                for &k in &kinks[j] {
                    set.push(k + tr.shift);
                }
            }
        }
        set.retain(|&x| x > cutoffs[i] + 1e-10 && x < cutoffs[i] + window - 1e-10);
        set.sort_by(|a, b| a.partial_cmp(b).unwrap());
        set.dedup_by(|a, b| (*a - *b).abs() < 1e-10);
        kinks[i] = set;
    }
    kinks
}

/// Composite Gauss-Legendre nodes on `[a, a+window]` broken at the kinks.
fn composite_nodes(
    a: f64,
    window: f64,
    kinks: &[f64],
    total: usize,
) -> (Vec<f64>, Vec<f64>) {
    let mut edges = vec![a];
    edges.extend(kinks.iter().cloned());
    edges.push(a + window);
    let mut xs = Vec::new();
    let mut ws = Vec::new();
    for w in edges.windows(2) {
        let len = w[1] - w[0];
        let n = ((total as f64 * len / window).ceil() as usize).max(8);
        let gl = GaussLegendre::new(n);
        for (x, wt) in gl.mapped(w[0], w[1]) {
            xs.push(x);
            ws.push(wt);
        }
    }
    (xs, ws)
}

/// Minor-decomposition (analytic-delta) evaluation of the determinant.
/// Combinatorial in the number of blocks; intended for `m <= 6`.
pub fn fredholm_det_minor_decomposition(
    problem: &ContinuumFredholmProblem,
) -> Result<f64, LimitError> {
    problem.kernel.validate(&problem.times)?;
    let (times, cutoffs) = problem.sorted();
    let m = times.len();
    if m > 6 {
        return Err(LimitError::InvalidArgument(
            "minor decomposition supports m <= 6; use the grid embedding".into(),
        ));
    }
    let n = problem.grid.nodes;
    let window = problem.grid.window;
    let gl_inner = GaussLegendre::new(24);
    let pts = 32; // Chebyshev points per representation segment
    let eval = KernelEval::new(&problem.kernel, &times, problem.s_abs_max());
    let transports: Vec<Vec<Option<Transport>>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| {
                    if j > i {
                        problem.kernel.transport(times[i], times[j])
                    } else {
                        None
                    }
                })
                .collect()
        })
        .collect();
    let kinks = kink_closure(m, &cutoffs, window, &transports);
    let mut nodes: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut weights: Vec<Vec<f64>> = Vec::with_capacity(m);
    for (b, &a) in cutoffs.iter().enumerate() {
        let (xs, ws) = composite_nodes(a, window, &kinks[b], n);
        nodes.push(xs);
        weights.push(ws);
    }
    let offsets: Vec<usize> = {
        let mut acc = 0;
        let mut v = Vec::with_capacity(m + 1);
        for b in 0..m {
            v.push(acc);
            acc += nodes[b].len();
        }
        v.push(acc);
        v
    };
    let dim = offsets[m];
    let mut a = Mat::zeros(dim, dim);
    for l in 0..m {
        // per column block: direct S fills for the q = 0 term
        let direct: Vec<Vec<f64>> = (0..m)
            .map(|i| eval.fill(times[i], &nodes[i], times[l], &nodes[l]))
            .collect();
        let ncol = nodes[l].len();
        for (p, &eta) in nodes[l].iter().enumerate() {
            // level-0 representations of z -> S(j, z; l, eta)
            let mut reps: Vec<Rep> = (0..m)
                .map(|j| {
                    let mut f = |z: f64| eval.smooth(times[j], z, times[l], eta);
                    Rep::build(cutoffs[j], cutoffs[j] + window, vec![], pts, &mut f)
                })
                .collect();
            // M = S - T S + T^2 S - ...
            let mut column: Vec<Vec<f64>> = (0..m)
                .map(|i| (0..nodes[i].len()).map(|q| direct[i][q * ncol + p]).collect())
                .collect();
            let mut sign = -1.0;
            for _level in 1..m {
                let next: Vec<Rep> = (0..m)
                    .map(|i| {
                        let mut parts: Vec<Rep> = Vec::new();
                        for j in i + 1..m {
                            if let Some(tr) = &transports[i][j] {
                                parts.push(apply_transport(
                                    tr,
                                    &reps[j],
                                    cutoffs[j],
                                    cutoffs[i],
                                    cutoffs[i] + window,
                                    &gl_inner,
                                    pts,
                                ));
                            }
                        }
                        merge_reps(cutoffs[i], cutoffs[i] + window, parts, pts)
                    })
                    .collect();
                for i in 0..m {
                    for (q, &xi) in nodes[i].iter().enumerate() {
                        column[i][q] += sign * next[i].eval(xi);
                    }
                }
                reps = next;
                sign = -sign;
            }
            for i in 0..m {
                for q in 0..nodes[i].len() {
                    a.set(offsets[i] + q, offsets[l] + p, column[i][q] * weights[l][p]);
                }
            }
        }
    }
    balanced_det_i_minus(a)
}

fn merge_reps(lo: f64, hi: f64, parts: Vec<Rep>, pts: usize) -> Rep {
    if parts.is_empty() {
        let mut zero = |_x: f64| 0.0;
        return Rep::build(lo, hi, vec![], 1, &mut zero);
    }
    if parts.len() == 1 {
        return parts.into_iter().next().unwrap();
    }
    let mut breaks = Vec::new();
    for r in &parts {
        breaks.extend(r.breaks.iter().cloned());
    }
    let mut f = |x: f64| parts.iter().map(|r| r.eval(x)).sum();
    Rep::build(lo, hi, breaks, pts, &mut f)
}

/// One-point gap probability / CDF of the process at time `r` and level `a`.
pub fn one_point_cdf(id: &LimitKernelId, r: f64, a: f64) -> Result<f64, LimitError> {
    let nodes = auto_nodes(id, r);
    let problem = ContinuumFredholmProblem::new(
        *id,
        vec![r],
        vec![a],
        GridSpec {
            kind: GridKind::Gauss,
            nodes,
            window: 12.0,
        },
    )?;
    fredholm_det(&problem)
}

fn auto_nodes(id: &LimitKernelId, r: f64) -> usize {
    match id {
        LimitKernelId::TransStep => {
            let scale = (2.0 * r.max(0.5)).powf(1.0 / 9.0);
            ((48.0 * scale) as usize).clamp(48, 192)
        }
        LimitKernelId::TransAlt { tau } => ((48.0 * tau.max(1.0)) as usize).clamp(48, 192),
        _ => 48,
    }
}

/// Report of the crossover-tail checks of the transitional kernels.
#[derive(Debug, Clone, serde::Serialize)]
pub struct TailChecks {
    /// sup |F_TransStep(r) - Phi| at tiny time argument
    pub da_step_sup: f64,
    pub da_step_r: f64,
    /// sup |F_TransAlt(tau) - F_X1| at tiny tau
    pub da_alt_sup: f64,
    pub da_alt_tau: f64,
    /// sup |F_X1(r) - Phi|
    pub x1_normal_sup: f64,
    /// (r, sup distance to F_GUE) after the KPZ rescaling
    pub kpz_step: Vec<(f64, f64)>,
    /// (tau, sup distance to the Airy1 one-point law)
    pub kpz_alt: Vec<(f64, f64)>,
}

/// Runs the tail checks at the crossover extremes.
pub fn tail_limit_checks() -> Result<TailChecks, LimitError> {
    let s_grid: Vec<f64> = (-16..=16).map(|k| k as f64 / 4.0).collect();
    // DA side: TransStep at tiny r vs the standard normal
    let da_step_r = 1e-3;
    let mut da_step_sup = 0.0f64;
    for &a in &s_grid {
        let f = one_point_cdf(&LimitKernelId::TransStep, da_step_r, a)?;
        da_step_sup = da_step_sup.max((f - crate::stats::normal_cdf(a)).abs());
    }
    // DA side: TransAlt at tiny tau vs the X1 one-point law
    let da_alt_tau = 1e-2;
    let mut da_alt_sup = 0.0f64;
    for &a in &s_grid {
        let f = one_point_cdf(&LimitKernelId::TransAlt { tau: da_alt_tau }, 0.7, a)?;
        let g = one_point_cdf(&LimitKernelId::X1, 0.7, a)?;
        da_alt_sup = da_alt_sup.max((f - g).abs());
    }
    // X1 one-point law is exactly normal
    let mut x1_normal_sup = 0.0f64;
    for &a in &s_grid {
        let f = one_point_cdf(&LimitKernelId::X1, 1.3, a)?;
        x1_normal_sup = x1_normal_sup.max((f - crate::stats::normal_cdf(a)).abs());
    }
    // KPZ side ladders: rescaled distances to the Airy one-point laws,
    // O(r^{-1/9}) slow, monotonicity is the claim
    let kpz_grid: Vec<f64> = (-18..=10).map(|k| k as f64 / 4.0).collect();
    let mut f_gue = Vec::new();
    let mut f_a1 = Vec::new();
    for &s in &kpz_grid {
        f_gue.push(one_point_cdf(&LimitKernelId::Airy2, 0.0, s)?);
        f_a1.push(one_point_cdf(&LimitKernelId::Airy1, 0.0, s)?);
    }
    let mut kpz_step = Vec::new();
    for &r in &[10.0f64, 100.0, 1000.0] {
        let mut d = 0.0f64;
        for (k, &s) in kpz_grid.iter().enumerate() {
            let a = 1.5 * (2.0 * r).powf(1.0 / 3.0)
                + s * (2.0 / 3.0f64).powf(-1.0 / 3.0) * (2.0 * r).powf(-1.0 / 9.0);
            let f = one_point_cdf(&LimitKernelId::TransStep, r, a)?;
            d = d.max((f - f_gue[k]).abs());
        }
        kpz_step.push((r, d));
    }
    let mut kpz_alt = Vec::new();
    for &tau in &[2.0f64, 5.0, 10.0] {
        let mut d = 0.0f64;
        for (k, &s) in kpz_grid.iter().enumerate() {
            let a = tau + s * (3.0 / tau).powf(1.0 / 3.0);
            let f = one_point_cdf(&LimitKernelId::TransAlt { tau }, 0.0, a)?;
            d = d.max((f - f_a1[k]).abs());
        }
        kpz_alt.push((tau, d));
    }
    Ok(TailChecks {
        da_step_sup,
        da_step_r,
        da_alt_sup,
        da_alt_tau,
        x1_normal_sup,
        kpz_step,
        kpz_alt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::normal_cdf;

    fn problem(
        kernel: LimitKernelId,
        times: Vec<f64>,
        cutoffs: Vec<f64>,
        kind: GridKind,
        nodes: usize,
    ) -> ContinuumFredholmProblem {
        ContinuumFredholmProblem::new(
            kernel,
            times,
            cutoffs,
            GridSpec {
                kind,
                nodes,
                window: 12.0,
            },
        )
        .unwrap()
    }

    #[test]
    fn gauss_n_is_min_normal() {
        // det with the fully correlated Gaussian kernel = Phi(min a_k)
        let p = problem(
            LimitKernelId::GaussN,
            vec![0.0, 1.0],
            vec![0.0, 1.5],
            GridKind::Gauss,
            40,
        );
        let v = fredholm_det_minor_decomposition(&p).unwrap();
        assert!((v - 0.5).abs() < 1e-9, "{v}");
        let p = problem(
            LimitKernelId::GaussN,
            vec![0.0, 0.5, 2.0],
            vec![-1.0, 0.0, 2.0],
            GridKind::Gauss,
            40,
        );
        let v = fredholm_det_minor_decomposition(&p).unwrap();
        assert!((v - normal_cdf(-1.0)).abs() < 1e-8, "{v}");
    }

    #[test]
    fn gauss_n_grid_embedding_agrees() {
        let p = problem(
            LimitKernelId::GaussN,
            vec![0.0, 1.0, 2.0],
            vec![0.25, -0.5, 1.0],
            GridKind::Uniform,
            64,
        );
        let v = fredholm_det(&p).unwrap();
        let want = normal_cdf(-0.5);
        assert!((v - want).abs() < 1e-8, "{v} vs {want}");
        let w = fredholm_det_minor_decomposition(&p).unwrap();
        assert!((v - w).abs() < 1e-7, "routes {v} vs {w}");
    }

    #[test]
    fn one_point_airy2_limits() {
        // far right cutoff: empty gap, det -> 1
        let v = one_point_cdf(&LimitKernelId::Airy2, 0.0, 8.0).unwrap();
        assert!((v - 1.0).abs() < 1e-9);
        // far left: -> 0
        let v = one_point_cdf(&LimitKernelId::Airy2, 0.0, -8.0).unwrap();
        assert!(v.abs() < 2e-4, "{v}");
        // monotone in a, bounded in [0,1]
        let mut prev = 0.0;
        for k in -12..=12 {
            let a = k as f64 / 2.0;
            let v = one_point_cdf(&LimitKernelId::Airy2, 0.0, a).unwrap();
            assert!((-1e-8..=1.0 + 1e-8).contains(&v));
            assert!(v + 1e-8 >= prev, "not monotone at {a}");
            prev = v;
        }
    }

    #[test]
    fn airy2_gauss_uniform_cross_scheme() {
        let pg = problem(LimitKernelId::Airy2, vec![0.0], vec![0.0], GridKind::Gauss, 64);
        let pu = problem(
            LimitKernelId::Airy2,
            vec![0.0],
            vec![0.0],
            GridKind::Uniform,
            64,
        );
        let a = fredholm_det(&pg).unwrap();
        let b = fredholm_det(&pu).unwrap();
        assert!((a - b).abs() < 1e-8, "gauss {a} vs uniform {b}");
    }

    #[test]
    fn node_doubling_stability() {
        for kernel in [
            LimitKernelId::Airy2,
            LimitKernelId::Airy1,
            LimitKernelId::TransStep,
        ] {
            let t0 = if kernel == LimitKernelId::TransStep { 1.0 } else { 0.0 };
            let a = fredholm_det(&problem(kernel, vec![t0], vec![-0.5], GridKind::Gauss, 48))
                .unwrap();
            let b = fredholm_det(&problem(kernel, vec![t0], vec![-0.5], GridKind::Gauss, 96))
                .unwrap();
            assert!((a - b).abs() < 1e-8, "{kernel:?}: {a} vs {b}");
        }
    }

    #[test]
    fn x1_one_point_is_normal() {
        for &a in &[-2.0, -0.5, 0.0, 1.0, 2.5] {
            let v = one_point_cdf(&LimitKernelId::X1, 0.9, a).unwrap();
            assert!((v - normal_cdf(a)).abs() < 1e-6, "a={a}: {v}");
        }
    }

    #[test]
    fn trans_step_da_limit_is_normal() {
        for &a in &[-1.5, 0.0, 1.0] {
            let v = one_point_cdf(&LimitKernelId::TransStep, 1e-3, a).unwrap();
            assert!((v - normal_cdf(a)).abs() < 5e-3, "a={a}: {v}");
        }
    }

    #[test]
    fn trans_alt_stationarity() {
        // invariance under a common shift of all time arguments
        let tau = 0.9;
        let p1 = problem(
            LimitKernelId::TransAlt { tau },
            vec![0.0, 0.5],
            vec![0.3, 0.8],
            GridKind::Gauss,
            40,
        );
        let p2 = problem(
            LimitKernelId::TransAlt { tau },
            vec![2.0, 2.5],
            vec![0.3, 0.8],
            GridKind::Gauss,
            40,
        );
        let a = fredholm_det_minor_decomposition(&p1).unwrap();
        let b = fredholm_det_minor_decomposition(&p2).unwrap();
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }

    #[test]
    fn transport_routes_agree_trans_kernels() {
        // minor decomposition vs grid embedding on both transitional kernels
        let pa = problem(
            LimitKernelId::TransAlt { tau: 0.8 },
            vec![0.0, 0.5],
            vec![0.25, -0.25],
            GridKind::Gauss,
            40,
        );
        let a1 = fredholm_det_minor_decomposition(&pa).unwrap();
        let mut pa2 = pa.clone();
        pa2.grid.kind = GridKind::Uniform;
        pa2.grid.nodes = 96;
        let a2 = fredholm_det(&pa2).unwrap();
        assert!((a1 - a2).abs() < 1e-7, "TransAlt routes: {a1} vs {a2}");

        let pb = problem(
            LimitKernelId::TransStep,
            vec![0.5, 1.0],
            vec![0.5, 1.0],
            GridKind::Gauss,
            40,
        );
        let b1 = fredholm_det_minor_decomposition(&pb).unwrap();
        let mut pb2 = pb.clone();
        pb2.grid.kind = GridKind::Uniform;
        pb2.grid.nodes = 96;
        let b2 = fredholm_det(&pb2).unwrap();
        assert!((b1 - b2).abs() < 1e-7, "TransStep routes: {b1} vs {b2}");
    }

    #[test]
    fn transport_free_reduces_to_nystrom() {
        // equal times: the transport is empty and the minor route must equal
        // plain Nystrom exactly
        let p = problem(
            LimitKernelId::TransStep,
            vec![1.0, 1.0],
            vec![0.2, 0.9],
            GridKind::Gauss,
            32,
        );
        let a = fredholm_det_minor_decomposition(&p).unwrap();
        let b = gauss_nystrom(&p).unwrap();
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }

    #[test]
    fn incommensurate_offsets_refused() {
        let p = problem(
            LimitKernelId::X1,
            vec![0.0, 1.0, 1.0 + std::f64::consts::SQRT_2],
            vec![0.0, 0.0, 0.0],
            GridKind::Uniform,
            48,
        );
        match fredholm_det(&p) {
            Err(LimitError::OffsetNotOnGrid(_)) => {}
            other => panic!("expected offset refusal, got {other:?}"),
        }
    }
}

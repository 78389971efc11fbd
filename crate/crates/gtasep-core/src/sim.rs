//! Monte Carlo engine for the clusterwise backward-sequential update.
//!
//! One random draw per cluster: the head jumps with probability `p` and the
//! number of followers is a truncated geometric, which reproduces the
//! one-step law exactly with a single uniform per cluster.  Samples are
//! embarrassingly parallel; every sample owns a private `(seed, stream)`
//! ChaCha stream, so batches are bit-reproducible regardless of thread
//! scheduling.

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::Write;
use thiserror::Error;

use crate::model::{
    jump_distribution_exact, InitialCondition, LatticeConfig, ModelError, ModelParams,
    RationalParams, TaggedQuery,
};
use crate::stats::{wilson_interval, WilsonInterval};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("window overflow: cluster head at the right boundary {0}; widen the window")]
    WindowOverflow(i64),
    #[error("degenerate density: need 1 <= M < L, got M={m}, L={l}")]
    DegenerateDensity { l: u64, m: u64 },
    #[error("window validation failed: {0}")]
    WindowValidation(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Reproducible stream handle: identical `(seed, stream)` gives an identical
/// trajectory, distinct streams are independent ChaCha counter streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        RngStream { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Number of particles of a cluster of size `k` that jump in one tick,
/// drawn from `phi(.|k)` with a single uniform.
#[inline]
pub fn draw_cluster_jump(k: usize, params: &ModelParams, rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.gen();
    let p = params.p();
    if u >= p {
        return 0;
    }
    let mu = params.mu();
    if mu == 0.0 || k == 1 {
        return 1;
    }
    let v = u / p; // uniform on [0,1)
    if v <= 0.0 {
        return k;
    }
    let l = 1 + (v.ln() / mu.ln()) as usize;
    l.min(k)
}

/// One synchronous clusterwise update of an ordered position vector
/// (index 0 is the frontmost particle; positions strictly decreasing).
/// Clusters are detected on the pre-update configuration, then every
/// cluster advances its first `l` particles by one site.
pub fn line_step(positions: &mut [i64], params: &ModelParams, rng: &mut ChaCha8Rng) {
    let n = positions.len();
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && positions[j - 1] - positions[j] == 1 {
            j += 1;
        }
        let l = draw_cluster_jump(j - i, params, rng);
        for x in positions.iter_mut().take(i + l).skip(i) {
            *x += 1;
        }
        i = j;
    }
}

/// Deterministic core of [`line_step`] driven by explicit per-cluster draws,
/// shared with the exhaustive enumerator so that the Monte Carlo and the
/// brute-force law use one transition function.
pub fn line_step_with_draws(positions: &mut [i64], draws: &[usize]) {
    let n = positions.len();
    let mut i = 0;
    let mut c = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && positions[j - 1] - positions[j] == 1 {
            j += 1;
        }
        let l = draws[c];
        c += 1;
        for x in positions.iter_mut().take(i + l).skip(i) {
            *x += 1;
        }
        i = j;
    }
}

/// Sizes of the clusters of an ordered position vector, front to back.
pub fn cluster_sizes(positions: &[i64]) -> Vec<usize> {
    let mut out = Vec::new();
    let n = positions.len();
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && positions[j - 1] - positions[j] == 1 {
            j += 1;
        }
        out.push(j - i);
        i = j;
    }
    out
}

/// Windowed one-step update of a [`LatticeConfig`].  Errors out when some
/// cluster head sits on the right window boundary: on a non-ring lattice the
/// caller must widen the window before the head may jump.
pub fn step_update(
    cfg: &LatticeConfig,
    params: &ModelParams,
    rng: &mut ChaCha8Rng,
) -> Result<LatticeConfig, SimError> {
    let window = cfg.window();
    let mut positions = cfg.positions();
    if let Some(&head) = positions.first() {
        if head >= window.1 {
            return Err(SimError::WindowOverflow(head));
        }
    }
    line_step(&mut positions, params, rng);
    let particles: Vec<(i64, i64)> = cfg
        .particles()
        .iter()
        .zip(positions.iter())
        .map(|(&(n, _), &x)| (n, x))
        .collect();
    LatticeConfig::new(particles, window).map_err(SimError::from)
}

/// Batch of i.i.d. tagged-position samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleBatch {
    pub indices: Vec<i64>,
    pub rows: Vec<Vec<i64>>,
    pub ic: InitialCondition,
    pub t: u64,
    pub params: ModelParams,
    pub seed: u64,
    pub margin: u64,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.rows.len()
    }
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Column of samples for a tagged index.
    pub fn column(&self, n: i64) -> Option<Vec<i64>> {
        let k = self.indices.iter().position(|&m| m == n)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    /// One row per sample, one column per tagged particle.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<(), SimError> {
        write!(w, "sample")?;
        for n in &self.indices {
            write!(w, ",x_{n}")?;
        }
        writeln!(w)?;
        for (s, row) in self.rows.iter().enumerate() {
            write!(w, "{s}")?;
            for x in row {
                write!(w, ",{x}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// JSON sidecar with everything needed to regenerate the batch.
    pub fn sidecar_json(&self) -> serde_json::Value {
        serde_json::json!({
            "ic": self.ic,
            "t": self.t,
            "params": {"p": self.params.p(), "mu": self.params.mu(),
                        "nu": self.params.nu(), "lambda": self.params.lambda()},
            "indices": self.indices,
            "samples": self.rows.len(),
            "seed": self.seed,
            "margin": self.margin,
        })
    }
}

/// Per-sample simulation window for an initial condition.
///
/// Step/Finite: particles `1..=max(tagged)` suffice because a particle's
/// motion never depends on the particles to its left.  Alternating: influence
/// from the right propagates at most one index per time step (a cluster
/// merger costs one unit of relative displacement per closed gap), so
/// indices down to `min(tagged) - (t + margin)` are simulated, with the
/// margin validated by [`validate_alternating_window`] rather than proof.
fn window_indices(
    ic: &InitialCondition,
    tagged: &[i64],
    t: u64,
    margin: u64,
) -> Result<(i64, i64), SimError> {
    let lo = *tagged.iter().min().unwrap();
    let hi = *tagged.iter().max().unwrap();
    match ic {
        InitialCondition::Step | InitialCondition::Finite(_) => {
            if lo < 1 {
                return Err(SimError::InvalidArgument(format!(
                    "tagged index {lo} < 1 for step/finite IC"
                )));
            }
            Ok((1, hi))
        }
        InitialCondition::Alternating => Ok((lo - (t as i64 + margin as i64), hi)),
        InitialCondition::Ring { .. } => Err(SimError::InvalidArgument(
            "tagged simulation runs on the line; use simulate_ring".into(),
        )),
    }
}

/// i.i.d. samples of the tagged positions `x_{n_1}(t), ..., x_{n_m}(t)`.
pub fn simulate_tagged(
    ic: &InitialCondition,
    params: &ModelParams,
    t: u64,
    tagged: &[i64],
    samples: usize,
    seed: u64,
    margin: u64,
) -> Result<SampleBatch, SimError> {
    ic.validate()?;
    if tagged.is_empty() || tagged.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SimError::InvalidArgument(
            "tagged indices must be nonempty and strictly increasing".into(),
        ));
    }
    let (n_lo, n_hi) = window_indices(ic, tagged, t, margin)?;
    let init: Vec<i64> = (n_lo..=n_hi)
        .map(|n| ic.initial_position(n))
        .collect::<Result<_, _>>()?;
    let offsets: Vec<usize> = tagged.iter().map(|&n| (n - n_lo) as usize).collect();
    let rows: Vec<Vec<i64>> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = RngStream::new(seed, s as u64).rng();
            let mut pos = init.clone();
            for _ in 0..t {
                line_step(&mut pos, params, &mut rng);
            }
            offsets.iter().map(|&k| pos[k]).collect()
        })
        .collect();
    Ok(SampleBatch {
        indices: tagged.to_vec(),
        rows,
        ic: ic.clone(),
        t,
        params: *params,
        seed,
        margin,
    })
}

/// Final positions of the particles `1..=n_particles` from a single step-IC
/// history; used for density-profile measurements.
pub fn simulate_step_positions(
    params: &ModelParams,
    t: u64,
    n_particles: usize,
    stream: RngStream,
) -> Vec<i64> {
    let mut pos: Vec<i64> = (1..=n_particles as i64).map(|n| -n).collect();
    let mut rng = stream.rng();
    for _ in 0..t {
        line_step(&mut pos, params, &mut rng);
    }
    pos
}

/// Runs the margin-doubling validation: every reported joint probability for
/// the supplied queries must move by less than its Wilson half-width when
/// the alternating window margin doubles.
pub fn validate_alternating_window(
    params: &ModelParams,
    t: u64,
    queries: &[TaggedQuery],
    samples: usize,
    seed: u64,
    margin: u64,
) -> Result<(), SimError> {
    let ic = InitialCondition::Alternating;
    for q in queries {
        let idx = q.indices();
        let a = simulate_tagged(&ic, params, t, &idx, samples, seed, margin)?;
        let b = simulate_tagged(&ic, params, t, &idx, samples, seed, 2 * margin)?;
        let (pa, _) = empirical_joint_cdf(&a, q)?;
        let (pb, _) = empirical_joint_cdf(&b, q)?;
        // The two windows consume randomness differently, so the estimates
        // are uncoupled; compare against the half-width of their difference
        // at the validation level z = 4.
        let ha = wilson_interval((pa * samples as f64).round() as u64, samples as u64, 4.0)
            .half_width();
        let hb = wilson_interval((pb * samples as f64).round() as u64, samples as u64, 4.0)
            .half_width();
        let half = (ha * ha + hb * hb).sqrt();
        if (pa - pb).abs() > half.max(1e-12) {
            return Err(SimError::WindowValidation(format!(
                "margin {margin} vs {}: estimate moved {} > half-width {half}",
                2 * margin,
                (pa - pb).abs()
            )));
        }
    }
    Ok(())
}

/// Fraction of samples with `x_{n_k} >= a_k` for all query entries, with a
/// 95% Wilson interval.
pub fn empirical_joint_cdf(
    batch: &SampleBatch,
    query: &TaggedQuery,
) -> Result<(f64, WilsonInterval), SimError> {
    if batch.is_empty() {
        return Err(SimError::InvalidArgument("empty batch".into()));
    }
    let cols: Vec<usize> = query
        .entries()
        .iter()
        .map(|&(n, _)| {
            batch
                .indices
                .iter()
                .position(|&m| m == n)
                .ok_or_else(|| SimError::InvalidArgument(format!("index {n} not in batch")))
        })
        .collect::<Result<_, _>>()?;
    let hits = batch
        .rows
        .iter()
        .filter(|row| {
            cols.iter()
                .zip(query.entries())
                .all(|(&c, &(_, a))| row[c] >= a)
        })
        .count();
    let n = batch.len();
    Ok((
        hits as f64 / n as f64,
        wilson_interval(hits as u64, n as u64, 1.96),
    ))
}

/// Empirical one-point distribution over an integer grid.
#[derive(Debug, Clone, Serialize)]
pub struct EmpiricalDistribution {
    pub counts: Vec<(i64, u64)>,
    pub total: u64,
    pub confidence: String,
}

impl EmpiricalDistribution {
    pub fn from_samples(samples: &[i64]) -> Self {
        let mut map: HashMap<i64, u64> = HashMap::new();
        for &x in samples {
            *map.entry(x).or_default() += 1;
        }
        let mut counts: Vec<(i64, u64)> = map.into_iter().collect();
        counts.sort_unstable();
        EmpiricalDistribution {
            counts,
            total: samples.len() as u64,
            confidence: "wilson-95".into(),
        }
    }

    /// `P(X >= a)` from the counts.
    pub fn tail_at(&self, a: i64) -> f64 {
        let hits: u64 = self
            .counts
            .iter()
            .filter(|&&(x, _)| x >= a)
            .map(|&(_, c)| c)
            .sum();
        hits as f64 / self.total as f64
    }

    /// `P(X <= a)`.
    pub fn cdf_at(&self, a: i64) -> f64 {
        1.0 - self.tail_at(a + 1)
    }

    pub fn support(&self) -> (i64, i64) {
        (
            self.counts.first().map(|&(x, _)| x).unwrap_or(0),
            self.counts.last().map(|&(x, _)| x).unwrap_or(0),
        )
    }
}

/// Ring run summary.
#[derive(Debug, Clone, Serialize)]
pub struct RingStats {
    pub density: f64,
    /// time-and-space averaged bond current per site
    pub current: f64,
    /// batch-mean standard error of the current
    pub current_se: f64,
    /// pooled cluster-length counts, index 0 = length 1
    pub cluster_hist: Vec<u64>,
    pub steps_measured: u64,
}

/// How the ring is initialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RingInit {
    /// All particles packed into one block.
    Packed,
    /// Exact sample of the canonical stationary measure (product measure of
    /// the zero-range picture conditioned on the particle number, via
    /// rejection), so no burn-in is needed for stationary averages.
    Stationary,
}

/// Draw an exact canonical stationary occupancy of the ring.
pub fn sample_ring_stationary(
    l: u64,
    m: u64,
    params: &ModelParams,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<bool>, SimError> {
    if m == 0 || m >= l {
        return Err(SimError::DegenerateDensity { l, m });
    }
    let c = m as f64 / l as f64;
    let z = crate::stationary::fugacity_from_density(c, params)
        .map_err(|e| SimError::InvalidArgument(e.to_string()))?
        .0;
    let n_sites = (l - m) as usize;
    // one-site weights f(0)=1, f(k) = (1-nu) z^k for k >= 1
    let w_occ = (1.0 - params.nu()) * z / (1.0 - z);
    let p_occupied = w_occ / (1.0 + w_occ);
    loop {
        let mut occupations = vec![0u64; n_sites];
        let mut total = 0u64;
        for site in occupations.iter_mut() {
            if rng.gen::<f64>() < p_occupied {
                // geometric on {1,2,...} with ratio z
                let u: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
                let k = 1 + (u.ln() / z.ln()) as u64;
                *site = k;
                total += k;
            }
            if total > m {
                break;
            }
        }
        if total == m {
            // On the ring every zero-range site carries its empty site, so
            // the occupancy closes up to exactly L sites.
            let mut occ = Vec::with_capacity(l as usize);
            for &k in occupations.iter().rev() {
                for _ in 0..k {
                    occ.push(true);
                }
                occ.push(false);
            }
            occ.reverse();
            return Ok(occ);
        }
    }
}

/// Time-averaged current and stationary cluster statistics on the ring.
///
/// The default burn-in is the diffusive worst case `c L^2 / (p(1-p))`
/// (callers near the aggregation regime need it); a [`RingInit::Stationary`]
/// start makes the measure exact from step zero, so short burns are fine
/// there.
pub fn simulate_ring(
    l: u64,
    m: u64,
    params: &ModelParams,
    t_burn: Option<u64>,
    t_measure: u64,
    stream: RngStream,
    init: RingInit,
) -> Result<RingStats, SimError> {
    if m == 0 || m >= l {
        return Err(SimError::DegenerateDensity { l, m });
    }
    let mut rng = stream.rng();
    let c = m as f64 / l as f64;
    let burn = t_burn.unwrap_or_else(|| {
        let p = params.p();
        (c * (l as f64).powi(2) / (p * (1.0 - p))).ceil() as u64
    });
    let mut occ: Vec<bool> = match init {
        RingInit::Packed => {
            let mut v = vec![false; l as usize];
            for site in v.iter_mut().take(m as usize) {
                *site = true;
            }
            v
        }
        RingInit::Stationary => sample_ring_stationary(l, m, params, &mut rng)?,
    };
    for _ in 0..burn {
        ring_step(&mut occ, params, &mut rng);
    }
    let mut total_jumps = 0u64;
    let mut hist = vec![0u64; l as usize];
    let n_batches = 16u64.min(t_measure.max(1));
    let batch_len = (t_measure / n_batches).max(1);
    let mut batch_means = Vec::new();
    let mut batch_jumps = 0u64;
    let snap_every = (t_measure / 64).max(1);
    let mut steps = 0u64;
    while steps < t_measure {
        let jumps = ring_step(&mut occ, params, &mut rng);
        total_jumps += jumps;
        batch_jumps += jumps;
        steps += 1;
        if steps % batch_len == 0 {
            batch_means.push(batch_jumps as f64 / (batch_len as f64 * l as f64));
            batch_jumps = 0;
        }
        if steps % snap_every == 0 {
            for len in ring_cluster_lengths(&occ) {
                hist[len - 1] += 1;
            }
        }
    }
    let current = total_jumps as f64 / (steps as f64 * l as f64);
    let se = if batch_means.len() > 1 {
        let mean: f64 = batch_means.iter().sum::<f64>() / batch_means.len() as f64;
        let var: f64 = batch_means.iter().map(|b| (b - mean).powi(2)).sum::<f64>()
            / (batch_means.len() - 1) as f64;
        (var / batch_means.len() as f64).sqrt()
    } else {
        f64::NAN
    };
    Ok(RingStats {
        density: c,
        current,
        current_se: se,
        cluster_hist: hist,
        steps_measured: steps,
    })
}

/// One synchronous clusterwise tick on the ring; returns the number of
/// particle jumps.
pub fn ring_step(occ: &mut [bool], params: &ModelParams, rng: &mut ChaCha8Rng) -> u64 {
    let l = occ.len();
    // heads: occupied sites whose right neighbour is empty
    let mut moves: Vec<(usize, usize)> = Vec::new();
    for s in 0..l {
        if occ[s] && !occ[(s + 1) % l] {
            let mut k = 1;
            while k < l && occ[(s + l - k) % l] {
                k += 1;
            }
            let lj = draw_cluster_jump(k, params, rng);
            if lj > 0 {
                moves.push((s, lj));
            }
        }
    }
    let mut jumps = 0u64;
    for &(head, lj) in &moves {
        occ[(head + 1) % l] = true;
        occ[(head + l - (lj - 1)) % l] = false;
        jumps += lj as u64;
    }
    jumps
}

/// Lengths of maximal occupied runs on the ring.
pub fn ring_cluster_lengths(occ: &[bool]) -> Vec<usize> {
    let l = occ.len();
    let mut out = Vec::new();
    let start = match occ.iter().position(|&o| !o) {
        Some(s) => s,
        None => return out,
    };
    let mut run = 0usize;
    for i in 1..=l {
        if occ[(start + i) % l] {
            run += 1;
        } else if run > 0 {
            out.push(run);
            run = 0;
        }
    }
    out
}

/// Exhaustive enumeration of the update histories of a finite configuration:
/// the exact law of the positions after `t` steps, as big rationals.  Uses
/// the same transition function as the sampler.
pub fn enumerate_law(
    initial: &[i64],
    params: &RationalParams,
    t: u64,
) -> Result<HashMap<Vec<i64>, BigRational>, SimError> {
    if initial.is_empty() || initial.windows(2).any(|w| w[0] <= w[1]) {
        return Err(SimError::InvalidArgument(
            "initial positions must be nonempty, strictly decreasing".into(),
        ));
    }
    let mut law: HashMap<Vec<i64>, BigRational> = HashMap::new();
    law.insert(initial.to_vec(), BigRational::one());
    for _ in 0..t {
        let mut next: HashMap<Vec<i64>, BigRational> = HashMap::new();
        for (cfg, prob) in &law {
            let sizes = cluster_sizes(cfg);
            let per_cluster: Vec<Vec<BigRational>> = sizes
                .iter()
                .map(|&k| jump_distribution_exact(k as u64, params).map_err(SimError::from))
                .collect::<Result<_, _>>()?;
            let mut draws = vec![0usize; sizes.len()];
            loop {
                let mut w = prob.clone();
                for (c, &d) in draws.iter().enumerate() {
                    w *= &per_cluster[c][d];
                }
                if !w.is_zero() {
                    let mut cfg2 = cfg.clone();
                    line_step_with_draws(&mut cfg2, &draws);
                    *next.entry(cfg2).or_insert_with(BigRational::zero) += w;
                }
                // odometer increment over the outcome product
                let mut c = 0;
                loop {
                    if c == sizes.len() {
                        break;
                    }
                    draws[c] += 1;
                    if draws[c] <= sizes[c] {
                        break;
                    }
                    draws[c] = 0;
                    c += 1;
                }
                if c == sizes.len() {
                    break;
                }
            }
        }
        law = next;
    }
    Ok(law)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::big_ratio;

    fn params(p: f64, mu: f64) -> ModelParams {
        ModelParams::new(p, mu).unwrap()
    }

    #[test]
    fn determinism_same_seed() {
        let pr = params(0.5, 0.5);
        let a = simulate_tagged(&InitialCondition::Step, &pr, 8, &[1, 3], 200, 11, 8).unwrap();
        let b = simulate_tagged(&InitialCondition::Step, &pr, 8, &[1, 3], 200, 11, 8).unwrap();
        assert_eq!(a.rows, b.rows);
        let c = simulate_tagged(&InitialCondition::Step, &pr, 8, &[1, 3], 200, 12, 8).unwrap();
        assert_ne!(a.rows, c.rows);
    }

    #[test]
    fn exclusion_and_displacement_preserved() {
        let pr = params(0.6, 0.8);
        let mut rng = RngStream::new(3, 0).rng();
        let mut pos: Vec<i64> = (1..=40).map(|n| -n).collect();
        for _ in 0..60 {
            let before = pos.clone();
            line_step(&mut pos, &pr, &mut rng);
            for w in pos.windows(2) {
                assert!(w[0] > w[1], "ordering violated");
            }
            for (a, b) in pos.iter().zip(before.iter()) {
                let d = a - b;
                assert!(d == 0 || d == 1, "displacement {d} not in {{0,1}}");
            }
        }
    }

    #[test]
    fn t_zero_and_head_particle_mean() {
        let pr = params(0.5, 0.25);
        let b = simulate_tagged(&InitialCondition::Step, &pr, 0, &[1, 2], 50, 5, 8).unwrap();
        for row in &b.rows {
            assert_eq!(row, &vec![-1, -2]);
        }
        // head particle is a free Bernoulli walker: mean of x_1(t)+1 = p t
        let t = 64;
        let n = 40_000;
        let b = simulate_tagged(&InitialCondition::Step, &pr, t, &[1], n, 17, 8).unwrap();
        let mean: f64 = b.rows.iter().map(|r| (r[0] + 1) as f64).sum::<f64>() / n as f64;
        let sd = (t as f64 * pr.p() * (1.0 - pr.p()) / n as f64).sqrt();
        assert!(
            (mean - pr.p() * t as f64).abs() < 4.0 * sd,
            "mean {mean} vs {}",
            pr.p() * t as f64
        );
    }

    #[test]
    fn one_step_cluster_law_matches_phi() {
        // 10^6 one-step updates of a fixed 3-cluster vs jump_distribution(3)
        let pr = params(0.5, 0.5);
        let want = crate::model::jump_distribution(3, &pr).unwrap();
        let n = 1_000_000usize;
        let mut counts = [0u64; 4];
        let mut rng = RngStream::new(99, 0).rng();
        for _ in 0..n {
            let mut pos = vec![0i64, -1, -2];
            line_step(&mut pos, &pr, &mut rng);
            let l = (0..3).filter(|&i| pos[i] != [0, -1, -2][i]).count();
            counts[l] += 1;
        }
        for l in 0..=3 {
            let got = counts[l] as f64 / n as f64;
            let sd = (want[l] * (1.0 - want[l]) / n as f64).sqrt();
            assert!(
                (got - want[l]).abs() < 4.0 * sd,
                "l={l}: {got} vs {}",
                want[l]
            );
        }
    }

    #[test]
    fn fig1_middle_cluster_probability() {
        // P(exactly 3 of a 4-cluster jump) = p mu^2 (1-mu)
        let pr = params(0.5, 0.5);
        let d = crate::model::jump_distribution(4, &pr).unwrap();
        assert!((d[3] - pr.p() * pr.mu().powi(2) * (1.0 - pr.mu())).abs() < 1e-15);
    }

    #[test]
    fn window_overflow_reported() {
        let cfg = crate::model::LatticeConfig::new(vec![(1, 4), (2, 2)], (0, 4)).unwrap();
        let pr = params(0.5, 0.5);
        let mut rng = RngStream::new(1, 0).rng();
        assert!(matches!(
            step_update(&cfg, &pr, &mut rng),
            Err(SimError::WindowOverflow(4))
        ));
    }

    #[test]
    fn empirical_joint_cdf_limits() {
        let pr = params(0.5, 0.5);
        let b = simulate_tagged(&InitialCondition::Step, &pr, 6, &[1, 2], 500, 21, 8).unwrap();
        // thresholds at support minima -> certainty
        let q = TaggedQuery::new(vec![(1, -1), (2, -2)]).unwrap();
        let (p1, _) = empirical_joint_cdf(&b, &q).unwrap();
        assert_eq!(p1, 1.0);
        // thresholds above support maxima -> 0
        let q = TaggedQuery::new(vec![(1, 6), (2, 5)]).unwrap();
        let (p0, _) = empirical_joint_cdf(&b, &q).unwrap();
        assert_eq!(p0, 0.0);
    }

    #[test]
    fn enumeration_matches_support_and_hand_values() {
        // N=3 particles, t<=3: exhaustive histories conserve probability and
        // respect the support bounds.
        let pr = RationalParams::from_fracs((1, 2), (3, 4)).unwrap();
        let law = enumerate_law(&[-1, -2, -3], &pr, 3).unwrap();
        let total: BigRational = law.values().cloned().sum();
        assert_eq!(total, BigRational::one());
        for cfg in law.keys() {
            for (i, &x) in cfg.iter().enumerate() {
                let n = i as i64 + 1;
                assert!(x >= -n && x <= 3 - n);
            }
        }
        // hand-checkable events at t=1 for a 3-cluster:
        // P(stay) = 1-p = 1/2, P(all jump) = p mu^2 = 9/32.
        let law1 = enumerate_law(&[-1, -2, -3], &pr, 1).unwrap();
        assert_eq!(law1[&vec![-1, -2, -3]], big_ratio(1, 2));
        assert_eq!(law1[&vec![0, -1, -2]], big_ratio(9, 32));
    }

    #[test]
    fn ring_two_site_chain_current() {
        // L=2, M=1: hand enumeration gives j = p/2 per site.
        let pr = params(0.3, 0.6);
        let stats = simulate_ring(
            2,
            1,
            &pr,
            Some(10),
            200_000,
            RngStream::new(7, 0),
            RingInit::Packed,
        )
        .unwrap();
        let want = pr.p() / 2.0;
        assert!(
            (stats.current - want).abs() < 4.0 * stats.current_se.max(5e-4),
            "{} vs {want}",
            stats.current
        );
    }

    #[test]
    fn ring_rejects_degenerate_density() {
        let pr = params(0.5, 0.5);
        assert!(matches!(
            simulate_ring(4, 0, &pr, Some(0), 10, RngStream::new(1, 0), RingInit::Packed),
            Err(SimError::DegenerateDensity { .. })
        ));
        assert!(matches!(
            simulate_ring(4, 4, &pr, Some(0), 10, RngStream::new(1, 0), RingInit::Packed),
            Err(SimError::DegenerateDensity { .. })
        ));
    }

    #[test]
    fn ring_conserves_particles() {
        let pr = params(0.5, 0.9);
        let mut rng = RngStream::new(42, 1).rng();
        let mut occ = sample_ring_stationary(64, 32, &pr, &mut rng).unwrap();
        assert_eq!(occ.len(), 64);
        assert_eq!(occ.iter().filter(|&&o| o).count(), 32);
        for _ in 0..200 {
            ring_step(&mut occ, &pr, &mut rng);
            assert_eq!(occ.iter().filter(|&&o| o).count(), 32);
        }
    }

    #[test]
    fn alternating_window_margin_stable() {
        let pr = params(0.5, 0.5);
        let q = TaggedQuery::new(vec![(0, 4)]).unwrap();
        validate_alternating_window(&pr, 16, &[q], 20_000, 33, 8).unwrap();
    }

    #[test]
    fn csv_and_sidecar_shape() {
        let pr = params(0.5, 0.5);
        let b = simulate_tagged(&InitialCondition::Step, &pr, 4, &[1, 2], 10, 1, 8).unwrap();
        let mut buf = Vec::new();
        b.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("sample,x_1,x_2\n"));
        assert_eq!(text.lines().count(), 11);
        let side = b.sidecar_json();
        assert_eq!(side["samples"], 10);
    }
}

//! Metropolis sampler for the hard-edge Coulomb gas with density
//! Π_{j<k} |ζ_j − ζ_k|² e^{-n Σ Q^S(ζ_j)}.
//!
//! Each sweep draws from its own ChaCha stream (key = seed, stream = sweep
//! index), so a chain restored from a checkpoint continues exactly as the
//! uninterrupted run would.

use std::io::{Read, Write};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::orthopoly::KernelTable;
use crate::potential::DropletFamily;
use crate::profile::{csv_err, fmt17};
use crate::special::integrate;

const MAGIC: &[u8; 4] = b"HEGC";
const CHECKPOINT_VERSION: u32 = 1;
const INIT_STREAM: u64 = u64::MAX;
/// Acceptance rate targeted while tuning the step during burn-in.
pub const TARGET_ACCEPT: f64 = 0.35;

#[derive(Debug, Clone, PartialEq)]
pub struct GibbsChain {
    n: usize,
    positions: Vec<Complex64>,
    seed: u64,
    step_scale: f64,
    sweeps_done: u64,
    accepted: u64,
    proposed: u64,
    // log|ζ_j − ζ_k|, row-major, zero diagonal
    log_dist: Vec<f64>,
}

impl GibbsChain {
    /// Independent draws from the equilibrium measure (radius by inverse CDF
    /// of the mass law, uniform angle).
    pub fn init(fam: &DropletFamily, n: usize, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument("the sampler needs n >= 2".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(INIT_STREAM);
        let positions = (0..n)
            .map(|_| {
                let u = 1.0 - rng.random::<f64>();
                let theta = std::f64::consts::TAU * rng.random::<f64>();
                fam.droplet_radius(u).map(|r| Complex64::from_polar(r, theta))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_parts(n, positions, seed, fam.rho1() / (n as f64).sqrt(), 0, 0, 0))
    }

    fn from_parts(n: usize, positions: Vec<Complex64>, seed: u64, step_scale: f64, sweeps_done: u64, accepted: u64, proposed: u64) -> Self {
        let mut log_dist = vec![0.0; n * n];
        for j in 0..n {
            for k in j + 1..n {
                let v = (positions[j] - positions[k]).norm().ln();
                log_dist[j * n + k] = v;
                log_dist[k * n + j] = v;
            }
        }
        Self {
            n,
            positions,
            seed,
            step_scale,
            sweeps_done,
            accepted,
            proposed,
            log_dist,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn positions(&self) -> &[Complex64] {
        &self.positions
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn step_scale(&self) -> f64 {
        self.step_scale
    }

    pub fn sweeps_done(&self) -> u64 {
        self.sweeps_done
    }

    /// Accepted / proposed moves since the last counter reset.
    pub fn accept_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    pub fn reset_counters(&mut self) {
        self.accepted = 0;
        self.proposed = 0;
    }

    pub fn max_radius(&self) -> f64 {
        self.positions.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Σ |ζ_j|².
    pub fn second_moment(&self) -> f64 {
        self.positions.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Log of the Metropolis ratio for moving particle `j` to `to`;
    /// `-inf` beyond the hard wall.
    pub fn log_acceptance(&self, fam: &DropletFamily, j: usize, to: Complex64) -> f64 {
        let r_new = to.norm();
        if r_new > fam.rho1() {
            return f64::NEG_INFINITY;
        }
        let row = &self.log_dist[j * self.n..(j + 1) * self.n];
        let mut d = 0.0;
        for (k, z) in self.positions.iter().enumerate() {
            if k != j {
                d += (to - z).norm().ln() - row[k];
            }
        }
        let q = fam.potential();
        2.0 * d - self.n as f64 * (q.q(r_new) - q.q(self.positions[j].norm()))
    }

    /// One Metropolis pass over all particles; returns the number accepted.
    pub fn sweep(&mut self, fam: &DropletFamily) -> usize {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.sweeps_done);
        let n = self.n;
        let mut acc = 0;
        for j in 0..n {
            let rad = self.step_scale * rng.random::<f64>().sqrt();
            let ang = std::f64::consts::TAU * rng.random::<f64>();
            let u: f64 = rng.random();
            let to = self.positions[j] + Complex64::from_polar(rad, ang);
            self.proposed += 1;
            let la = self.log_acceptance(fam, j, to);
            if la == f64::NEG_INFINITY || u.ln() >= la {
                continue;
            }
            for k in 0..n {
                if k != j {
                    let v = (to - self.positions[k]).norm().ln();
                    self.log_dist[j * n + k] = v;
                    self.log_dist[k * n + j] = v;
                }
            }
            self.positions[j] = to;
            self.accepted += 1;
            acc += 1;
        }
        self.sweeps_done += 1;
        acc
    }

    /// Sweep with multiplicative step adaptation toward [`TARGET_ACCEPT`].
    pub fn tuning_sweep(&mut self, fam: &DropletFamily) {
        let rate = self.sweep(fam) as f64 / self.n as f64;
        self.step_scale = (self.step_scale * (0.5 * (rate - TARGET_ACCEPT)).exp()).min(fam.rho1());
    }

    /// Writes the versioned little-endian checkpoint.
    pub fn save<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
        for v in [self.n as u64, self.seed, self.sweeps_done] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&self.step_scale.to_le_bytes())?;
        w.write_all(&self.accepted.to_le_bytes())?;
        w.write_all(&self.proposed.to_le_bytes())?;
        for z in &self.positions {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn load<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a chain checkpoint".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let version = u32::from_le_bytes(b4);
        if version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!("unsupported checkpoint version {version}")));
        }
        let mut b8 = [0u8; 8];
        let mut next = |r: &mut R| -> Result<[u8; 8]> {
            r.read_exact(&mut b8)?;
            Ok(b8)
        };
        let n = u64::from_le_bytes(next(&mut r)?) as usize;
        let seed = u64::from_le_bytes(next(&mut r)?);
        let sweeps = u64::from_le_bytes(next(&mut r)?);
        let step = f64::from_le_bytes(next(&mut r)?);
        let accepted = u64::from_le_bytes(next(&mut r)?);
        let proposed = u64::from_le_bytes(next(&mut r)?);
        if n < 2 || n > 1 << 20 || !(step > 0.0) {
            return Err(Error::Format("corrupt checkpoint header".into()));
        }
        let mut positions = Vec::with_capacity(n);
        for _ in 0..n {
            let re = f64::from_le_bytes(next(&mut r)?);
            let im = f64::from_le_bytes(next(&mut r)?);
            positions.push(Complex64::new(re, im));
        }
        Ok(Self::from_parts(n, positions, seed, step, sweeps, accepted, proposed))
    }
}

/// Radial histogram of retained configurations, with per-batch counts for
/// batch-means error estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialHistogram {
    pub n: usize,
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Retained configurations.
    pub sweeps: u64,
    pub batch_len: u64,
    /// Counts of each completed batch of `batch_len` configurations.
    pub batches: Vec<Vec<u64>>,
    /// Σ|ζ_j|² of each retained configuration.
    pub second_moments: Vec<f64>,
    current: Vec<u64>,
    in_current: u64,
}

impl RadialHistogram {
    /// `bins` equal-width radial bins on [0, rho1].
    pub fn uniform(n: usize, rho1: f64, bins: usize, batch_len: u64) -> Result<Self> {
        if bins == 0 || batch_len == 0 || !(rho1 > 0.0) {
            return Err(Error::InvalidArgument("histogram needs bins >= 1, batch_len >= 1, rho1 > 0".into()));
        }
        let edges = (0..=bins).map(|i| rho1 * i as f64 / bins as f64).collect();
        Ok(Self {
            n,
            bin_edges: edges,
            counts: vec![0; bins],
            sweeps: 0,
            batch_len,
            batches: Vec::new(),
            second_moments: Vec::new(),
            current: vec![0; bins],
            in_current: 0,
        })
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    fn bin_of(&self, r: f64) -> Option<usize> {
        let last = *self.bin_edges.last()?;
        if r > last || r < 0.0 {
            return None;
        }
        let i = self.bin_edges.partition_point(|e| *e <= r);
        Some(i.saturating_sub(1).min(self.bins() - 1))
    }

    pub fn record(&mut self, chain: &GibbsChain) {
        for z in chain.positions() {
            if let Some(b) = self.bin_of(z.norm()) {
                self.counts[b] += 1;
                self.current[b] += 1;
            }
        }
        self.second_moments.push(chain.second_moment());
        self.sweeps += 1;
        self.in_current += 1;
        if self.in_current == self.batch_len {
            let fresh = vec![0; self.bins()];
            let done = std::mem::replace(&mut self.current, fresh);
            self.batches.push(done);
            self.in_current = 0;
        }
    }

    /// Combines histograms of independent chains.
    pub fn merge(&mut self, other: &RadialHistogram) -> Result<()> {
        if self.bin_edges != other.bin_edges || self.n != other.n || self.batch_len != other.batch_len {
            return Err(Error::InvalidArgument("histograms have different layouts".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.sweeps += other.sweeps;
        self.batches.extend(other.batches.iter().cloned());
        self.second_moments.extend(&other.second_moments);
        // partial batches stay out of the error estimate
        Ok(())
    }

    /// dA-area of each bin (dA = dx dy / π).
    pub fn bin_areas(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|e| e[1] * e[1] - e[0] * e[0]).collect()
    }

    /// counts / (sweeps · area); integrates to n over the droplet.
    pub fn intensity(&self) -> Vec<f64> {
        let s = self.sweeps.max(1) as f64;
        self.counts
            .iter()
            .zip(self.bin_areas())
            .map(|(c, a)| *c as f64 / (s * a))
            .collect()
    }

    /// Batch-means standard error of each bin's mean count per configuration.
    pub fn count_std_errors(&self) -> Vec<f64> {
        let k = self.batches.len();
        if k < 2 {
            return vec![f64::INFINITY; self.bins()];
        }
        let bl = self.batch_len as f64;
        (0..self.bins())
            .map(|b| {
                let means: Vec<f64> = self.batches.iter().map(|c| c[b] as f64 / bl).collect();
                let m = means.iter().sum::<f64>() / k as f64;
                let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (k - 1) as f64;
                (var / k as f64).sqrt()
            })
            .collect()
    }

    /// Standard error of [`intensity`](Self::intensity) per bin.
    pub fn intensity_std_errors(&self) -> Vec<f64> {
        self.count_std_errors()
            .iter()
            .zip(self.bin_areas())
            .map(|(s, a)| s / a)
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["bin_lo", "bin_hi", "count", "intensity"]).map_err(csv_err)?;
        for (i, v) in self.intensity().iter().enumerate() {
            w.write_record([
                fmt17(self.bin_edges[i]),
                fmt17(self.bin_edges[i + 1]),
                self.counts[i].to_string(),
                fmt17(*v),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Expected particle count per configuration in each bin, ∫_bin R_n dA.
pub fn expected_counts(tab: &KernelTable, hist: &RadialHistogram) -> Result<Vec<f64>> {
    hist.bin_edges
        .windows(2)
        .map(|e| integrate(|r| tab.one_point(r) * 2.0 * r, e[0], e[1], tab.quadrature()))
        .collect()
}

/// Burn-in with step tuning, then `sweeps − burn_in` recorded sweeps keeping
/// every `thin`-th configuration.
pub fn empirical_profile(
    chain: &mut GibbsChain,
    fam: &DropletFamily,
    hist: &mut RadialHistogram,
    sweeps: u64,
    burn_in: u64,
    thin: u64,
) -> Result<()> {
    if sweeps <= burn_in || thin == 0 {
        return Err(Error::InvalidArgument("need sweeps > burn_in and thin >= 1".into()));
    }
    while chain.sweeps_done() < burn_in {
        chain.tuning_sweep(fam);
    }
    if chain.sweeps_done() == burn_in {
        chain.reset_counters();
    }
    while chain.sweeps_done() < sweeps {
        chain.sweep(fam);
        if (chain.sweeps_done() - burn_in) % thin == 0 {
            hist.record(chain);
        }
    }
    Ok(())
}

/// Outcome of the χ² comparison of a histogram with the kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub statistic: f64,
    pub dof: usize,
    pub quantile: f64,
    pub threshold: f64,
    pub pass: bool,
    /// max relative intensity error over bulk bins
    pub bulk_max_rel_error: f64,
    pub bulk_bins: usize,
}

/// χ² with batch-means variances over bins whose expected total count is at
/// least `min_expected`, and the worst relative intensity error over bins
/// lying entirely below `bulk_radius`. Bins are correlated (the total is
/// fixed), so the χ² reference is approximate.
pub fn agreement(
    tab: &KernelTable,
    hist: &RadialHistogram,
    min_expected: f64,
    quantile: f64,
    bulk_radius: f64,
) -> Result<Agreement> {
    if tab.n() != hist.n {
        return Err(Error::InvalidArgument("histogram and kernel table differ in n".into()));
    }
    let expected = expected_counts(tab, hist)?;
    let se = hist.count_std_errors();
    let s = hist.sweeps.max(1) as f64;
    let mut stat = 0.0;
    let mut dof = 0;
    for b in 0..hist.bins() {
        if expected[b] * s >= min_expected && se[b].is_finite() && se[b] > 0.0 {
            let mean = hist.counts[b] as f64 / s;
            stat += ((mean - expected[b]) / se[b]).powi(2);
            dof += 1;
        }
    }
    if dof == 0 {
        return Err(Error::InvalidArgument("no bins with enough expected counts".into()));
    }
    let threshold = ChiSquared::new(dof as f64)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?
        .inverse_cdf(quantile);
    let mut bulk = 0.0f64;
    let mut bulk_bins = 0;
    for b in 0..hist.bins() {
        if hist.bin_edges[b + 1] <= bulk_radius {
            let mean = hist.counts[b] as f64 / s;
            bulk = bulk.max((mean / expected[b] - 1.0).abs());
            bulk_bins += 1;
        }
    }
    Ok(Agreement {
        statistic: stat,
        dof,
        quantile,
        threshold,
        pass: stat <= threshold,
        bulk_max_rel_error: bulk,
        bulk_bins,
    })
}

/// Sample autocorrelation of `series` at lags 0..=max_lag.
pub fn autocorrelation(series: &[f64], max_lag: usize) -> Vec<f64> {
    let n = series.len();
    if n < 2 {
        return vec![1.0];
    }
    let m = series.iter().sum::<f64>() / n as f64;
    let c0: f64 = series.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n as f64;
    (0..=max_lag.min(n - 1))
        .map(|lag| {
            let c: f64 = (0..n - lag).map(|i| (series[i] - m) * (series[i + lag] - m)).sum::<f64>() / n as f64;
            c / c0
        })
        .collect()
}

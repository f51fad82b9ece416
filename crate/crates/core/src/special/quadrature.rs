//! Adaptive Gauss–Legendre quadrature on bisected panels.
//!
//! Each panel carries a one-panel value and a two-half-panel value; their
//! difference is the panel's error estimate. Panels are refined greedily in
//! order of largest error until the global estimate meets
//! `max(abs_tol, rel_tol * |I|)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Order of the fixed Gauss–Legendre rule applied on each panel.
pub const GL_ORDER: usize = 20;

/// Tolerances and limits for adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    /// Absolute error target.
    pub abs_tol: f64,
    /// Relative error target.
    pub rel_tol: f64,
    /// Maximum number of panels before giving up.
    pub max_panels: usize,
    /// Integrand magnitude below which semi-infinite tails are dropped.
    pub truncation_cut: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-11,
            rel_tol: 1e-10,
            max_panels: 1 << 14,
            truncation_cut: 1e-17,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = self.abs_tol > 0.0
            && self.rel_tol > 0.0
            && self.max_panels >= 1
            && self.truncation_cut > 0.0
            && self.truncation_cut <= 1e-6;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("bad quadrature spec {self:?}")))
        }
    }

    /// Stable short hash of the spec, used to key caches.
    pub fn hash_hex(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.abs_tol.to_bits().to_le_bytes());
        h.update(self.rel_tol.to_bits().to_le_bytes());
        h.update((self.max_panels as u64).to_le_bytes());
        h.update(self.truncation_cut.to_bits().to_le_bytes());
        hex::encode(&h.finalize()[..8])
    }
}

/// Nodes and weights of the `GL_ORDER`-point rule on [-1, 1].
pub fn gauss_legendre() -> &'static ([f64; GL_ORDER], [f64; GL_ORDER]) {
    static RULE: OnceLock<([f64; GL_ORDER], [f64; GL_ORDER])> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre_rule(GL_ORDER).try_into_arrays())
}

trait IntoArrays {
    fn try_into_arrays(self) -> ([f64; GL_ORDER], [f64; GL_ORDER]);
}

impl IntoArrays for (Vec<f64>, Vec<f64>) {
    fn try_into_arrays(self) -> ([f64; GL_ORDER], [f64; GL_ORDER]) {
        let mut x = [0.0; GL_ORDER];
        let mut w = [0.0; GL_ORDER];
        x.copy_from_slice(&self.0);
        w.copy_from_slice(&self.1);
        (x, w)
    }
}

/// Gauss–Legendre nodes (ascending) and weights of order `m` by Newton
/// iteration on the three-term recurrence.
pub fn gauss_legendre_rule(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    let mf = m as f64;
    for i in 0..m.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=m {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pm = if m == 0 { 1.0 } else { p1 };
            let pm1 = if m == 1 { 1.0 } else { p0 };
            dp = mf * (z * pm - pm1) / (z * z - 1.0);
            let dz = pm / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[m - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[m - 1 - i] = wi;
    }
    (x, w)
}

/// Fixed-order rule on a single interval.
#[inline]
pub fn gl_fixed<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let (x, w) = gauss_legendre();
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = 0.0;
    for k in 0..GL_ORDER {
        s += w[k] * f(c + h * x[k]);
    }
    s * h
}

#[derive(Debug)]
struct Panel {
    a: f64,
    b: f64,
    left: f64,
    right: f64,
    err: f64,
}

impl Panel {
    fn new<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64) -> Self {
        let m = 0.5 * (a + b);
        let left = gl_fixed(f, a, m);
        let right = gl_fixed(f, m, b);
        let err = (left + right - whole).abs();
        Panel {
            a,
            b,
            left,
            right,
            err,
        }
    }

    fn value(&self) -> f64 {
        self.left + self.right
    }
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Adaptive integral of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64> {
    integrate_with_breaks(f, a, b, &[], spec)
}

/// Adaptive integral of `f` over `[a, b]`, with the initial panels split at
/// `breaks` (points outside `(a, b)` are ignored). Breakpoints should be placed
/// at kinks or where the integrand mass concentrates.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    spec: &QuadratureSpec,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if a > b {
        return integrate_with_breaks(f, b, a, breaks, spec).map(|v| -v);
    }
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&t| t > a && t < b).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(a);
    edges.extend(cuts);
    edges.push(b);

    let mut heap = BinaryHeap::with_capacity(edges.len() * 4);
    for w in edges.windows(2) {
        let whole = gl_fixed(&f, w[0], w[1]);
        heap.push(Panel::new(&f, w[0], w[1], whole));
    }
    let mut panels = heap.len();
    let mut total: f64 = heap.iter().map(Panel::value).sum();
    let mut err: f64 = heap.iter().map(|p| p.err).sum();
    loop {
        let target = spec.abs_tol.max(spec.rel_tol * total.abs());
        if err <= target {
            // resum to shed drift from the running updates
            total = heap.iter().map(Panel::value).sum();
            err = heap.iter().map(|p| p.err).sum();
            if err <= spec.abs_tol.max(spec.rel_tol * total.abs()) {
                return Ok(total);
            }
        }
        if panels + 1 > spec.max_panels {
            return Err(Error::ToleranceNotMet {
                target,
                estimate: err,
                panels,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let m = 0.5 * (worst.a + worst.b);
        if !(m > worst.a && m < worst.b) {
            // panel cannot be split further in floating point
            return Err(Error::ToleranceNotMet {
                target,
                estimate: err,
                panels,
            });
        }
        let l = Panel::new(&f, worst.a, m, worst.left);
        let r = Panel::new(&f, m, worst.b, worst.right);
        total += l.value() + r.value() - worst.value();
        err += l.err + r.err - worst.err;
        heap.push(l);
        heap.push(r);
        panels += 1;
    }
}

//! Scalar special functions of the edge theory: the Gaussian kernel γ, the
//! free-boundary profile φ = γ * 1_{(-∞,0)}, the hard-edge plasma function
//! H = γ * (1_{(-∞,0)} / φ), and Gaussian convolution of sampled functions.

pub mod quadrature;

use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
pub use quadrature::{integrate, integrate_with_breaks, QuadratureSpec};

/// 1/√(2π)
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Half-width of the window outside which the Gaussian kernel is ignored by
/// [`gamma_convolve`].
pub const CONVOLVE_HALF_WIDTH: f64 = 10.0;

/// Standard Gaussian density γ(x) = e^{-x²/2}/√(2π).
#[inline]
pub fn gauss_gamma(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Free-boundary function φ(t) = ½ erfc(t/√2), the upper Gaussian tail.
///
/// For t/√2 beyond 26.5, where erfc underflows, the Mills-ratio asymptote
/// γ(t)/t is returned instead so that 1/φ never becomes 1/0.
#[inline]
pub fn free_boundary_phi(t: f64) -> f64 {
    let u = t / SQRT_2;
    if u > 26.5 {
        let g = gauss_gamma(t);
        // one correction term of the asymptotic series
        return (g / t * (1.0 - 1.0 / (t * t))).max(f64::MIN_POSITIVE);
    }
    0.5 * libm::erfc(u)
}

/// Hard-edge plasma function
/// H(x) = (1/√(2π)) ∫_{-∞}^0 e^{-(x-t)²/2} / φ(t) dt.
///
/// The semi-infinite range is cut at `min(x, 0) - w`, with `w` the larger of
/// 12 and the distance at which the Gaussian factor drops below
/// `spec.truncation_cut`.
#[allow(non_snake_case)]
pub fn hard_edge_H(x: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("H(x) needs finite x, got {x}")));
    }
    let lo = x.min(0.0) - tail_width(spec.truncation_cut);
    let integrand = |t: f64| gauss_gamma(x - t) / free_boundary_phi(t);
    integrate_with_breaks(integrand, lo, 0.0, &[x, x - 3.0, x + 3.0], spec)
}

fn tail_width(cut: f64) -> f64 {
    let w = (-2.0 * (cut / INV_SQRT_2PI).ln()).max(0.0).sqrt();
    w.max(12.0)
}

/// A function sampled on a strictly increasing grid, optionally extended by
/// constants beyond either end. Between nodes it is interpolated by local
/// cubics through the four nearest samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    grid: Vec<f64>,
    values: Vec<f64>,
    left: Option<f64>,
    right: Option<f64>,
}

impl SampledFunction {
    pub fn new(grid: Vec<f64>, values: Vec<f64>, left: Option<f64>, right: Option<f64>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() {
            return Err(Error::InvalidArgument(
                "sampled function needs matching grid/values with at least two nodes".into(),
            ));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("grid must be strictly increasing".into()));
        }
        if values.iter().chain(left.iter()).chain(right.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("sampled values must be finite".into()));
        }
        Ok(Self {
            grid,
            values,
            left,
            right,
        })
    }

    /// Samples `f` on `n` equally spaced nodes of `[lo, hi]`.
    pub fn from_fn<F: Fn(f64) -> f64>(
        f: F,
        lo: f64,
        hi: f64,
        n: usize,
        left: Option<f64>,
        right: Option<f64>,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument("need at least two nodes".into()));
        }
        let h = (hi - lo) / (n - 1) as f64;
        let grid: Vec<f64> = (0..n).map(|i| if i + 1 == n { hi } else { lo + h * i as f64 }).collect();
        let values = grid.iter().map(|&t| f(t)).collect();
        Self::new(grid, values, left, right)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn lo(&self) -> f64 {
        self.grid[0]
    }

    pub fn hi(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    /// Interpolated value on cell `i` (between nodes `i` and `i + 1`).
    fn eval_in_cell(&self, i: usize, t: f64) -> f64 {
        let n = self.grid.len();
        let order = n.min(4);
        // stencil of `order` consecutive nodes around the cell
        let start = i.saturating_sub(1).min(n - order);
        let xs = &self.grid[start..start + order];
        let ys = &self.values[start..start + order];
        let mut s = 0.0;
        for k in 0..order {
            let mut l = 1.0;
            for m in 0..order {
                if m != k {
                    l *= (t - xs[m]) / (xs[k] - xs[m]);
                }
            }
            s += ys[k] * l;
        }
        s
    }

    /// Value at `t`, using the declared extensions outside the grid.
    pub fn eval(&self, t: f64) -> Option<f64> {
        if t < self.lo() {
            return self.left;
        }
        if t > self.hi() {
            return self.right;
        }
        let i = match self.grid.binary_search_by(|g| g.total_cmp(&t)) {
            Ok(i) => return Some(self.values[i]),
            Err(i) => i - 1,
        };
        Some(self.eval_in_cell(i, t))
    }
}

/// Gaussian convolution (γ * g)(x) = (1/√(2π)) ∫ e^{-(x-t)²/2} g(t) dt.
///
/// Constant extensions contribute in closed form through φ; the interpolated
/// interior is integrated cell by cell over the window
/// `[x - CONVOLVE_HALF_WIDTH, x + CONVOLVE_HALF_WIDTH]`.
pub fn gamma_convolve(g: &SampledFunction, x: f64, spec: &QuadratureSpec) -> Result<f64> {
    let w_lo = x - CONVOLVE_HALF_WIDTH;
    let w_hi = x + CONVOLVE_HALF_WIDTH;
    if g.lo() > w_lo && g.left.is_none() {
        return Err(Error::InsufficientSupport { lo: w_lo, hi: g.lo() });
    }
    if g.hi() < w_hi && g.right.is_none() {
        return Err(Error::InsufficientSupport { lo: g.hi(), hi: w_hi });
    }
    let mut total = 0.0;
    if let Some(c) = g.left {
        total += c * free_boundary_phi(x - g.lo());
    }
    if let Some(c) = g.right {
        total += c * free_boundary_phi(g.hi() - x);
    }
    let grid = &g.grid;
    // first cell whose right node is past the window start
    let first = grid.partition_point(|&t| t <= w_lo).saturating_sub(1);
    for i in first..grid.len() - 1 {
        let (a, b) = (grid[i].max(w_lo), grid[i + 1].min(w_hi));
        if a >= w_hi {
            break;
        }
        if b <= a {
            continue;
        }
        total += integrate(|t| gauss_gamma(x - t) * g.eval_in_cell(i, t), a, b, spec)?;
    }
    Ok(total)
}

/// Samples 1_{(-∞,0)}/φ on `[lo, 0]` with `n` nodes, extended by 1 on the left
/// and 0 on the right; its γ-convolution is H.
pub fn hard_edge_density(lo: f64, n: usize) -> Result<SampledFunction> {
    SampledFunction::from_fn(|t| 1.0 / free_boundary_phi(t), lo, 0.0, n, Some(1.0), Some(0.0))
}

//! Cross-module invariants.

use hardedge_core::profile::uniform_grid;
use hardedge_core::quasipoly::{self, approx_orthogonality, riemann_sum, EdgeVariant, QuasiParams, QuasiTable};
use hardedge_core::sampler::{self, GibbsChain, RadialHistogram};
use hardedge_core::scaling::{self, RescaleMap};
use hardedge_core::special::{gamma_convolve, hard_edge_density};
use hardedge_core::*;
use num_complex::Complex64;

fn quartic() -> DropletFamily {
    DropletFamily::with_default_tau0(RadialPotential::power(2.0).unwrap()).unwrap()
}

fn spec() -> QuadratureSpec {
    QuadratureSpec::default()
}

#[test]
fn h_at_zero_matches_trapezoid_oracle() {
    // composite trapezoid on [-40, 0]; the integrand is smooth, so
    // Richardson extrapolation of two step sizes is accurate to ~1e-13
    let f = |t: f64| gauss_gamma(t) / free_boundary_phi(t);
    let trap = |m: usize| {
        let h = 40.0 / m as f64;
        let inner: f64 = (1..m).map(|i| f(-40.0 + h * i as f64)).sum();
        h * (inner + 0.5 * (f(-40.0) + f(0.0)))
    };
    let (a, b) = (trap(40_000), trap(80_000));
    let oracle = b + (b - a) / 3.0;
    assert!((hard_edge_H(0.0, &spec()).unwrap() - oracle).abs() < 1e-12);
}

#[test]
fn h_is_unimodal_with_peak_near_minus_one_and_a_half() {
    let xs = uniform_grid(-8.0, 6.0, 0.01).unwrap();
    let hs: Vec<f64> = xs.iter().map(|x| hard_edge_H(*x, &spec()).unwrap()).collect();
    let imax = (0..hs.len()).max_by(|a, b| hs[*a].total_cmp(&hs[*b])).unwrap();
    assert!(xs[imax] > -2.0 && xs[imax] < -1.0, "peak at {}", xs[imax]);
    assert!(hs[..=imax].windows(2).all(|w| w[1] >= w[0] - 1e-15));
    assert!(hs[imax..].windows(2).all(|w| w[1] < w[0]));
    // oracle: golden-section on an mpmath quadrature of H
    assert!((hs[imax] - 1.072_418_656).abs() < 1e-4);
    let (mut a, mut b) = (-2.0f64, -1.0f64);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let (c, d) = (b - g * (b - a), a + g * (b - a));
        if hard_edge_H(c, &spec()).unwrap() > hard_edge_H(d, &spec()).unwrap() {
            b = d;
        } else {
            a = c;
        }
    }
    assert!((a + 1.586_906_43).abs() < 1e-5, "{a}");
    assert!((hard_edge_H(a, &spec()).unwrap() - 1.072_418_655_964).abs() < 1e-10);
}

#[test]
fn convolution_matches_direct_h_on_a_grid() {
    let g = hard_edge_density(-12.0, 4801).unwrap();
    for x in uniform_grid(-6.0, 2.0, 0.5).unwrap() {
        let c = gamma_convolve(&g, x, &spec()).unwrap();
        assert!((c - hard_edge_H(x, &spec()).unwrap()).abs() < 1e-9, "x={x}");
    }
}

#[test]
fn growth_bound_uniform_in_n() {
    let mut edge = Vec::new();
    for fam in [DropletFamily::ginibre(), quartic()] {
        for n in [64, 256, 1024] {
            let t = KernelTable::build(&fam, n, &spec()).unwrap();
            let peaks: Vec<f64> = (0..n).map(|j| t.peak_weighted_poly_sq(j).unwrap()).collect();
            // j = 0 saturates the bound for Ginibre: |w_0|² = n e^{-n r²}/(1 - e^{-n})
            let c = peaks.iter().cloned().fold(0.0, f64::max) / n as f64;
            assert!(c <= 1.0 + 1e-12, "n={n} C={c}");
            if fam.potential().id() == "ginibre" {
                edge.push(peaks[n / 2..].iter().cloned().fold(0.0, f64::max) / n as f64);
            }
        }
    }
    // near the edge the peaks grow like √n only
    assert!(edge.windows(2).all(|w| w[1] < w[0]), "{edge:?}");
}

#[test]
fn off_droplet_decay_in_the_belt() {
    for fam in [DropletFamily::ginibre(), quartic()] {
        for n in [64, 256, 1024] {
            let t = KernelTable::build(&fam, n, &spec()).unwrap();
            let nf = n as f64;
            let jmax = n - nf.sqrt().ceil() as usize;
            let belt = t.belt_half_width(1.0);
            for j in (n / 2..=jmax).step_by(7) {
                for k in 0..=10 {
                    let r = fam.rho1() - belt * k as f64 / 10.0;
                    let lhs = t.log_weighted_poly_sq(j, r);
                    let rhs = nf.ln() - nf * fam.obstacle_gap(j as f64 / nf, r).unwrap();
                    assert!(lhs <= rhs, "n={n} j={j} r={r}");
                }
            }
        }
    }
}

#[test]
fn tail_reduction_improves_with_n() {
    for fam in [DropletFamily::ginibre(), quartic()] {
        let mut sups = Vec::new();
        for n in [256, 1024, 4096] {
            let t = KernelTable::build(&fam, n, &spec()).unwrap();
            let m = ((n as f64).sqrt() * (n as f64).ln()).ceil() as usize;
            let belt = t.belt_half_width(1.0);
            let s = (0..=100)
                .map(|k| {
                    let r = fam.rho1() - belt * k as f64 / 100.0;
                    (t.one_point(r) - t.truncated_one_point(r, m).unwrap()).abs()
                })
                .fold(0.0, f64::max);
            sups.push(s);
        }
        assert!(sups.windows(2).all(|w| w[1] < w[0]), "{sups:?}");
    }
}

#[test]
fn top_term_share_at_the_wall() {
    let t = KernelTable::build(&DropletFamily::ginibre(), 1024, &spec()).unwrap();
    let top = t.truncated_one_point(1.0, 1).unwrap();
    let share = top / t.one_point(1.0);
    // oracle: h_j = γ(j+1, n)/n^{j+1}, summed in mpmath at 30 digits
    assert!((share - 0.035_844_432_174_144).abs() < 1e-10, "{share}");
}

#[test]
fn kernel_rotation_covariance() {
    let t = KernelTable::build(&quartic(), 128, &spec()).unwrap();
    let pairs = [(0.3, -0.2, 0.5, 0.6), (0.8, 0.1, -0.4, 0.7), (0.0, 0.82, 0.81, 0.0)];
    for (a, b, c, d) in pairs {
        let (z, w) = (Complex64::new(a, b), Complex64::new(c, d));
        let base = t.kernel(z, w).norm();
        let scale = (t.one_point(z.norm()) * t.one_point(w.norm())).sqrt();
        for th in [0.3, 1.7, 4.0] {
            let u = Complex64::from_polar(1.0, th);
            assert!((t.kernel(u * z, u * w).norm() - base).abs() < 1e-10 * scale);
        }
    }
}

#[test]
fn edge_value_tends_to_ln2_and_profile_overshoots_bulk() {
    let mut edge = Vec::new();
    for n in [64, 256, 1024, 4096] {
        let t = KernelTable::build(&DropletFamily::ginibre(), n, &spec()).unwrap();
        let map = RescaleMap::new(t.family(), n);
        edge.push(t.one_point(map.base_radius) * map.intensity_scale());
        let grid = uniform_grid(-3.0, -0.05, 0.05).unwrap();
        let p = scaling::rescaled_profile(&t, &grid).unwrap();
        if n >= 256 {
            assert!(p.values.iter().cloned().fold(0.0, f64::max) > 1.0, "n={n}");
        }
    }
    let ln2 = std::f64::consts::LN_2;
    assert!(edge.windows(2).all(|w| (w[1] - ln2).abs() < (w[0] - ln2).abs()), "{edge:?}");
    assert!((edge[3] - ln2).abs() < 2e-3);
}

#[test]
fn universality_between_potentials() {
    let grid = uniform_grid(-3.0, -0.5, 0.05).unwrap();
    let limit = scaling::limit_profile(&grid, &spec()).unwrap();
    let g = scaling::rescaled_profile(&KernelTable::build(&DropletFamily::ginibre(), 1024, &spec()).unwrap(), &grid).unwrap();
    let q = scaling::rescaled_profile(&KernelTable::build(&quartic(), 1024, &spec()).unwrap(), &grid).unwrap();
    let eg = g.sup_diff_on(&limit, -3.0, -0.5).unwrap();
    let eq = q.sup_diff_on(&limit, -3.0, -0.5).unwrap();
    assert!(g.sup_diff_on(&q, -3.0, -0.5).unwrap() <= 2.0 * eg.max(eq));
}

#[test]
fn riemann_sum_and_sharp_profile_approach_each_other_and_h() {
    let fam = DropletFamily::ginibre();
    let mut gaps = Vec::new();
    for n in [256, 1024, 4096] {
        let qt = QuasiTable::new(&fam, n).unwrap();
        let map = RescaleMap::new(&fam, n);
        let g = [-1.0f64, -0.5, -0.25]
            .iter()
            .map(|&x| (qt.approx_one_point(map.radius(x)) * map.intensity_scale() - riemann_sum(&fam, n, x)).abs())
            .fold(0.0, f64::max);
        gaps.push(g);
    }
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    let h = hard_edge_H(-2.0, &spec()).unwrap();
    assert!((riemann_sum(&fam, 1 << 16, -1.0) - h).abs() < 2e-3);
}

#[test]
fn sharp_profile_near_h_at_1024() {
    let fam = DropletFamily::ginibre();
    let map = RescaleMap::new(&fam, 1024);
    let v = quasipoly::approx_one_point(&fam, 1024, map.radius(-1.0)).unwrap() * map.intensity_scale();
    let h = hard_edge_H(-2.0, &spec()).unwrap();
    let envelope = 1024f64.powf(-0.25) * 1024f64.ln();
    assert!((v - h).abs() < envelope, "{v} vs {h}");
    assert!((v - h).abs() < 0.01);
}

#[test]
fn stopping_time_and_flow_for_quartic() {
    let fam = quartic();
    let ell1 = 1.0 / (fam.rho1() * fam.delta_q_edge().sqrt());
    for tau in [0.9, 0.95, 0.99, 0.999] {
        let e = 1.0 - tau;
        let t = quasipoly::stopping_time_tau(&fam, tau).unwrap();
        assert!(((t - ell1 * e / 2f64.sqrt()) / (e * e)).abs() < 1.0);
        assert!((quasipoly::flow_radius(&fam, tau, t).unwrap() - fam.rho1()).abs() < 1e-12);
    }
}

#[test]
fn hard_edge_correction_changes_the_norm() {
    let fam = DropletFamily::ginibre();
    for n in [256, 1024] {
        let p = QuasiParams::at_xi(&fam, n, -1.0).unwrap();
        let hard = quasipoly::quasi_norm(&fam, &p, EdgeVariant::HardEdge, &spec()).unwrap();
        let free = quasipoly::quasi_norm(&fam, &p, EdgeVariant::FreeBoundary, &spec()).unwrap();
        assert!((free / hard - 1.0).abs() > 0.05);
    }
}

#[test]
fn same_degree_overlap_rate() {
    let fam = DropletFamily::ginibre();
    let mut dev = Vec::new();
    for n in [256, 1024, 4096] {
        let t = KernelTable::build(&fam, n, &spec()).unwrap();
        let p = QuasiParams::at_xi(&fam, n, -1.0).unwrap();
        assert_eq!(approx_orthogonality(&t, &p, p.j - 1).unwrap(), 0.0);
        let ip = approx_orthogonality(&t, &p, p.j).unwrap();
        dev.push((ip - 1.0).abs() * (n as f64).sqrt());
    }
    assert!(dev.iter().all(|d| *d < 0.5), "{dev:?}");
    assert!(dev[2] <= dev[0] * 1.05);
}

#[test]
fn merged_chains_tighten_error_bars() {
    let g = DropletFamily::ginibre();
    let run = |seed| {
        let mut c = GibbsChain::init(&g, 24, seed).unwrap();
        let mut h = RadialHistogram::uniform(24, 1.0, 6, 200).unwrap();
        sampler::empirical_profile(&mut c, &g, &mut h, 4_500, 500, 1).unwrap();
        (c, h)
    };
    let (c1, h1) = run(11);
    let (_, h2) = run(12);
    let mut m = h1.clone();
    m.merge(&h2).unwrap();
    let (s1, s2, sm) = (h1.intensity_std_errors(), h2.intensity_std_errors(), m.intensity_std_errors());
    let better = (0..6).filter(|&b| sm[b] < s1[b] && sm[b] < s2[b]).count();
    assert!(better >= 5, "{s1:?} {s2:?} {sm:?}");
    assert!(c1.accept_rate() > 0.2 && c1.accept_rate() < 0.6);
    let ac = sampler::autocorrelation(&h1.second_moments, 3);
    assert!(ac[1] < ac[0] && ac[2].abs() < ac[1].abs().max(0.05));
}

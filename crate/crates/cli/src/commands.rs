use std::io::Write;

use hardedge_core::profile::{fmt17, uniform_grid};
use hardedge_core::quasipoly::{self, EdgeVariant, QuasiParams, QuasiTable};
use hardedge_core::sampler::{self, GibbsChain, RadialHistogram};
use hardedge_core::scaling::{self, RescaleMap};
use hardedge_core::{free_boundary_phi, hard_edge_H, DropletFamily, Error, KernelTable, Profile};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{self, kernel_table};
use crate::CliError;

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::Writer::from_writer(w)
}

fn csv_io(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

fn grid(cfg: &RunConfig) -> Result<Vec<f64>, CliError> {
    Ok(uniform_grid(cfg.grid.lo, cfg.grid.hi, cfg.grid.step)?)
}

pub fn hfun(cfg: &RunConfig) -> Result<(), CliError> {
    let xs = grid(cfg)?;
    let h = xs
        .par_iter()
        .map(|&x| hard_edge_H(x, &cfg.quadrature))
        .collect::<Result<Vec<_>, _>>()?;
    let mut w = csv_writer(output::create(cfg, "hfun", "hfun.csv")?);
    w.write_record(["x", "phi", "H"]).map_err(csv_io)?;
    for (x, hv) in xs.iter().zip(&h) {
        w.write_record([fmt17(*x), fmt17(free_boundary_phi(*x)), fmt17(*hv)]).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn profile(cfg: &RunConfig) -> Result<(), CliError> {
    let fam = cfg.potential.family()?;
    let id = fam.potential().id();
    let xs = grid(cfg)?;
    let limit = scaling::limit_profile(&xs, &cfg.quadrature)?;
    for n in cfg.n.values() {
        let tab = kernel_table(cfg, &fam, n)?;
        let m = (((n as f64).sqrt() * (n as f64).ln()).ceil() as usize).clamp(1, n);
        let exact = scaling::rescaled_profile(&tab, &xs)?;
        let trunc = scaling::rescaled_truncated_profile(&tab, &xs, m)?;
        let quasi = if n >= 2 {
            let qt = QuasiTable::new(&fam, n)?;
            scaling::rescaled_quasi_profile(&fam, &qt, &xs)?
        } else {
            exact.clone()
        };
        let name = format!("profile_{}_n{n}.csv", sanitize(&id));
        let mut w = csv_writer(output::create(cfg, "profile", &name)?);
        w.write_record(["x", "exact", "truncated", "quasi", "limit"]).map_err(csv_io)?;
        for i in 0..xs.len() {
            w.write_record([
                fmt17(xs[i]),
                fmt17(exact.values[i]),
                fmt17(trunc.values[i]),
                fmt17(quasi.values[i]),
                fmt17(limit.values[i]),
            ])
            .map_err(csv_io)?;
        }
        w.flush()?;
        for &j in &cfg.profile.degrees {
            if j >= n {
                return Err(CliError::Config(format!("profile degree {j} must be below n = {n}")));
            }
            let p = scaling::rescaled_poly_profile(&tab, j, &xs)?;
            write_profile(cfg, "profile", &format!("poly_{}_n{n}_j{j}.csv", sanitize(&id)), &p)?;
        }
    }
    Ok(())
}

fn write_profile(cfg: &RunConfig, command: &str, name: &str, p: &Profile) -> Result<(), CliError> {
    let mut w = output::create(cfg, command, name)?;
    p.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn sanitize(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '_' }).collect()
}

pub fn quasi(cfg: &RunConfig) -> Result<(), CliError> {
    let fam = cfg.potential.family()?;
    for n in cfg.n.values() {
        let tab = kernel_table(cfg, &fam, n)?;
        let qt = QuasiTable::new(&fam, n)?;
        let rows = qt
            .params()
            .par_iter()
            .map(|p| {
                let norm = quasipoly::quasi_norm(&fam, p, EdgeVariant::HardEdge, &cfg.quadrature)?;
                let dist = quasipoly::quasi_l2_distance(&tab, p, EdgeVariant::HardEdge)?;
                Ok((*p, norm, dist))
            })
            .collect::<Result<Vec<_>, Error>>()?;
        let name = format!("quasi_{}_n{n}.csv", sanitize(&fam.potential().id()));
        let mut w = csv_writer(output::create(cfg, "quasi", &name)?);
        w.write_record(["j", "xi", "tau", "rho_tau", "phi_jn", "t_inf", "norm", "l2_distance"])
            .map_err(csv_io)?;
        for (p, norm, dist) in rows {
            w.write_record([
                p.j.to_string(),
                fmt17(p.xi),
                fmt17(p.tau),
                fmt17(p.rho_tau),
                fmt17(p.phi_jn),
                fmt17(p.t_inf),
                fmt17(norm),
                fmt17(dist),
            ])
            .map_err(csv_io)?;
        }
        w.flush()?;
    }
    Ok(())
}

pub fn converge(cfg: &RunConfig) -> Result<(), CliError> {
    let fam = cfg.potential.family()?;
    let mut ns = cfg.n.values();
    ns.sort_unstable();
    ns.dedup();
    let tables = ns
        .iter()
        .map(|&n| kernel_table(cfg, &fam, n))
        .collect::<Result<Vec<_>, _>>()?;
    let window = (cfg.converge.window[0], cfg.converge.window[1]);
    let report = scaling::convergence_from_tables(&tables, window, cfg.converge.step, &cfg.quadrature)?;
    let stem = format!("converge_{}", sanitize(&fam.potential().id()));
    let mut w = output::create(cfg, "converge", &format!("{stem}.csv"))?;
    report.write_csv(&mut w)?;
    w.flush()?;
    output::write_json(cfg, "converge", &format!("{stem}.json"), &report)
}

#[derive(Debug, Serialize)]
struct SampleSummary {
    n: usize,
    seeds: Vec<u64>,
    sweeps: u64,
    retained: u64,
    accept_rates: Vec<f64>,
    step_scales: Vec<f64>,
    max_radius: f64,
    outside_droplet: usize,
    bulk_radius: f64,
    agreement: sampler::Agreement,
}

pub fn sample(cfg: &RunConfig) -> Result<(), CliError> {
    let fam = cfg.potential.family()?;
    let opt = &cfg.sample;
    for n in cfg.n.values() {
        let chains: Vec<GibbsChain> = match &opt.resume {
            Some(path) => {
                let c = GibbsChain::load(std::fs::File::open(path)?)?;
                if c.n() != n {
                    return Err(CliError::Config(format!("checkpoint has n = {}, config n = {n}", c.n())));
                }
                vec![c]
            }
            None => (0..opt.chains.max(1) as u64)
                .map(|i| GibbsChain::init(&fam, n, cfg.seed.wrapping_add(i)))
                .collect::<Result<_, _>>()?,
        };
        let runs = chains
            .into_par_iter()
            .map(|mut c| {
                let mut h = RadialHistogram::uniform(n, fam.rho1(), opt.bins, opt.batch_len)?;
                sampler::empirical_profile(&mut c, &fam, &mut h, opt.sweeps, opt.burn_in, opt.thin)?;
                Ok((c, h))
            })
            .collect::<Result<Vec<_>, Error>>()?;
        let mut merged = runs[0].1.clone();
        for (_, h) in &runs[1..] {
            merged.merge(h)?;
        }
        for (c, _) in &runs {
            let name = format!("chain_n{n}_seed{}.bin", c.seed());
            let mut w = std::io::BufWriter::new(std::fs::File::create(cfg.output_dir.join(name))?);
            c.save(&mut w)?;
            w.flush()?;
        }
        let mut w = output::create(cfg, "sample", &format!("histogram_n{n}.csv"))?;
        merged.write_csv(&mut w)?;
        w.flush()?;

        let tab = kernel_table(cfg, &fam, n)?;
        let map = RescaleMap::new(&fam, n);
        let bulk_radius = map.radius(-3.0);
        let agreement = sampler::agreement(&tab, &merged, opt.min_expected, opt.quantile, bulk_radius)?;
        let summary = SampleSummary {
            n,
            seeds: runs.iter().map(|(c, _)| c.seed()).collect(),
            sweeps: opt.sweeps,
            retained: merged.sweeps,
            accept_rates: runs.iter().map(|(c, _)| c.accept_rate()).collect(),
            step_scales: runs.iter().map(|(c, _)| c.step_scale()).collect(),
            max_radius: runs.iter().map(|(c, _)| c.max_radius()).fold(0.0, f64::max),
            outside_droplet: runs
                .iter()
                .map(|(c, _)| c.positions().iter().filter(|z| z.norm() > fam.rho1()).count())
                .sum(),
            bulk_radius,
            agreement,
        };
        output::write_json(cfg, "sample", &format!("agreement_n{n}.json"), &summary)?;
        if !summary.agreement.pass {
            return Err(CliError::Numerical(format!(
                "chi-square {:.3} exceeds the {} quantile {:.3} ({} dof)",
                summary.agreement.statistic, opt.quantile, summary.agreement.threshold, summary.agreement.dof
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct Check {
    check: String,
    value: f64,
    bound: f64,
    pass: bool,
}

impl Check {
    fn at_most(check: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            check: check.into(),
            value,
            bound,
            pass: value <= bound,
        }
    }

    fn failed(check: impl Into<String>, bound: f64, err: &dyn std::fmt::Display) -> Self {
        eprintln!("hardedge: check failed to evaluate: {err}");
        Self {
            check: check.into(),
            value: f64::NAN,
            bound,
            pass: false,
        }
    }
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    version: &'static str,
    potential: String,
    config_hash: String,
    all_pass: bool,
    checks: Vec<Check>,
}

fn check_or_fail(name: String, bound: f64, r: Result<f64, CliError>) -> Check {
    match r {
        Ok(v) => Check::at_most(name, v, bound),
        Err(e) => Check::failed(name, bound, &e),
    }
}

fn run_checks(cfg: &RunConfig, fam: &DropletFamily) -> Vec<Check> {
    let v = &cfg.verify;
    let quad = &cfg.quadrature;
    let mut checks = Vec::new();

    for &n in &v.trace_n {
        let r = kernel_table(cfg, fam, n).and_then(|t| Ok((t.trace()? / n as f64 - 1.0).abs()));
        checks.push(check_or_fail(format!("trace_identity_n{n}"), 1e-8, r));
    }

    let mass = (1..=20)
        .map(|i| {
            let tau = i as f64 / 20.0;
            let rho = fam.droplet_radius(tau)?;
            Ok((rho * fam.potential().dq(rho) / 2.0 - tau).abs())
        })
        .collect::<Result<Vec<f64>, Error>>()
        .map(|e| e.into_iter().fold(0.0, f64::max))
        .map_err(CliError::from);
    checks.push(check_or_fail("mass_law".into(), 1e-10, mass));

    let ridge = v
        .taus
        .iter()
        .map(|&tau| {
            let rho = fam.droplet_radius(tau)?;
            let eps = 1e-3 * rho;
            let ratio = fam.gap_with_radius(tau, rho, rho + eps) / (eps * eps);
            Ok((ratio / (2.0 * fam.potential().delta_q(rho)?) - 1.0).abs())
        })
        .collect::<Result<Vec<f64>, Error>>()
        .map(|e| e.into_iter().fold(0.0, f64::max))
        .map_err(CliError::from);
    checks.push(check_or_fail("ridge_curvature".into(), 0.02, ridge));

    let ell1 = 1.0 / (fam.rho1() * fam.delta_q_edge().sqrt());
    let stop = v
        .taus
        .iter()
        .map(|&tau| {
            let e = 1.0 - tau;
            let t = quasipoly::stopping_time_tau(fam, tau)?;
            Ok((t - ell1 * e / 2f64.sqrt()).abs() / (e * e))
        })
        .collect::<Result<Vec<f64>, Error>>()
        .map(|e| e.into_iter().fold(0.0, f64::max))
        .map_err(CliError::from);
    checks.push(check_or_fail("stopping_time_rate".into(), 1.0, stop));

    let mut rate_n = v.rate_n.clone();
    rate_n.sort_unstable();
    let tables: Result<Vec<KernelTable>, CliError> = rate_n.iter().map(|&n| kernel_table(cfg, fam, n)).collect();
    let rates = tables.as_ref().map_err(|e| CliError::Numerical(e.to_string())).and_then(|tabs| {
        let mut norm_dev = 0.0f64;
        let mut dist = 0.0f64;
        for t in tabs {
            let p = QuasiParams::at_xi(fam, t.n(), v.xi)?;
            let sq = (t.n() as f64).sqrt();
            norm_dev = norm_dev.max((quasipoly::quasi_norm(fam, &p, EdgeVariant::HardEdge, quad)? - 1.0).abs() * sq);
            dist = dist.max(quasipoly::quasi_l2_distance(t, &p, EdgeVariant::HardEdge)? * sq);
        }
        Ok((norm_dev, dist))
    });
    match rates {
        Ok((a, b)) => {
            checks.push(Check::at_most("norm_rate", a, v.rate_bound));
            checks.push(Check::at_most("closeness_rate", b, v.rate_bound));
        }
        Err(e) => {
            checks.push(Check::failed("norm_rate", v.rate_bound, &e));
            checks.push(Check::failed("closeness_rate", v.rate_bound, &e));
        }
    }

    // largest ratio of consecutive sup errors; < 1 iff strictly decreasing
    let mono = tables.and_then(|tabs| {
        let grid = uniform_grid(cfg.converge.window[0], cfg.converge.window[1], cfg.converge.step)?;
        let limit = scaling::limit_profile(&grid, quad)?;
        let errs = tabs
            .iter()
            .map(|t| scaling::window_error(t, &limit))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(errs.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max))
    });
    match mono {
        Ok(r) => checks.push(Check {
            check: "error_monotonicity".into(),
            value: r,
            bound: 1.0,
            pass: r < 1.0,
        }),
        Err(e) => checks.push(Check::failed("error_monotonicity", 1.0, &e)),
    }

    let rich = [(0.6, 0.8), (0.8, 0.95), (0.9, 1.0)]
        .iter()
        .flat_map(|&(a, b)| (0..4).map(move |k| (a, b, k)))
        .map(|(a, b, k)| fam.richardson_check(a, b, k, quad))
        .collect::<Result<Vec<f64>, Error>>()
        .map(|e| e.into_iter().fold(0.0, f64::max))
        .map_err(CliError::from);
    checks.push(check_or_fail("richardson_residual".into(), 1e-10, rich));
    checks
}

pub fn verify(cfg: &RunConfig) -> Result<(), CliError> {
    let fam = cfg.potential.family()?;
    let checks = run_checks(cfg, &fam);
    let failed = checks.iter().filter(|c| !c.pass).count();
    for c in &checks {
        println!("{:<24} {:>12.4e}  bound {:>9.2e}  {}", c.check, c.value, c.bound, if c.pass { "PASS" } else { "FAIL" });
    }
    let report = VerifyReport {
        version: env!("CARGO_PKG_VERSION"),
        potential: fam.potential().id(),
        config_hash: cfg.hash_hex(),
        all_pass: failed == 0,
        checks,
    };
    output::write_json(cfg, "verify", "verify.json", &report)?;
    if failed > 0 {
        return Err(CliError::VerifyFailed(failed));
    }
    Ok(())
}

//! The experiments behind each CLI subcommand.

use std::collections::{BTreeMap, HashMap, HashSet};

use log::{info, warn};
use rand::Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::bundle::VertexBundle;
use crate::configuration::Configuration;
use crate::dynamics::{estimate_exceedance, replica_rng, ExclusionProcess};
use crate::error::{Error, Result};
use crate::field::{local_average, local_count, CompiledField, TheoremFunctional};
use crate::folner::{b_index, folner_set, group_ball_size, FolnerData};
use crate::group::{Elem, TowerSpec};
use crate::spectral::{
    chebyshev_fk_bound, exact_exceedance, is_invariant_function, path_lemma_check, random_invariant_function,
    spectral_record, GeneratorOp, StateSpace, MATRIX_FREE_MAX_SITES,
};
use crate::stats::{linear_fit, mean_and_se};
use crate::tower::QuotientGraph;

use super::config::Experiment;
use super::report::{num, opt, Plot, Report};

/// Largest union of two bundle windows enumerated for exact covariances.
const MAX_COVARIANCE_SITES: usize = 22;

/// Tolerance of the spectral bound assertion.
const FK_MARGIN_TOLERANCE: f64 = -1e-9;

/// One row of the super-exponential table, kept numeric for the trend check.
#[derive(Clone, Debug)]
struct TrendPoint {
    m: u32,
    log_rate: f64,
    lo: f64,
    hi: f64,
}

/// Exceedance probabilities of the time-integrated theorem functional along
/// the tower, with the exact Chebyshev–Feynman–Kac bound and the exact
/// path-space probability on small levels.
pub fn run_superexp(exp: &Experiment) -> Result<Report> {
    let cfg = &exp.config;
    let mut report = Report::new(
        "superexp",
        &[
            "m", "N", "eps", "i", "delta", "p_hat", "ci_lo", "ci_hi", "log_rate", "log_rate_lo", "log_rate_hi", "t_m",
            "b", "T", "replicas", "hits", "censored", "fk_log_bound", "fk_a", "p_exact",
        ],
    );
    let mut series: BTreeMap<(usize, usize), Vec<TrendPoint>> = BTreeMap::new();
    let mut exact_checks = Vec::new();
    let mut row = 0u64;
    for graph in &exp.graphs {
        let m = graph.level();
        let n = graph.num_vertices();
        let t_m = exp.t_m(m);
        let process = ExclusionProcess::new(graph, &exp.rate, t_m)?;
        let replicas = cfg.replicas_at(m);
        for (ei, &eps) in cfg.eps.iter().enumerate() {
            for (ii, &i) in cfg.i.iter().enumerate() {
                let functional = TheoremFunctional::at_scale(exp.bundle.clone(), i, eps, t_m)?;
                info!("superexp m={m} eps={eps} i={i} b={} replicas={replicas}", functional.b());
                let est = estimate_exceedance(&process, &functional, cfg.delta, cfg.horizon, replicas, exp.row_seed(row))?;
                row += 1;
                let mut fk = (None, None);
                let mut p_exact = None;
                let needs_potential = n <= cfg.spectral_max_sites.min(MATRIX_FREE_MAX_SITES) || n <= cfg.exact_max_sites;
                if needs_potential && cfg.delta > 0.0 {
                    let v = functional.tabulate(graph);
                    if n <= cfg.spectral_max_sites.min(MATRIX_FREE_MAX_SITES) {
                        let base = GeneratorOp::new(graph, &exp.rate, t_m, StateSpace::full(n)?)?;
                        let (log_bound, a) = chebyshev_fk_bound(&base, &v, &cfg.a, cfg.delta, cfg.horizon)?;
                        fk = (Some(log_bound), Some(a));
                    }
                    if n <= cfg.exact_max_sites {
                        let exact = exact_exceedance(graph, &exp.rate, t_m, &v, cfg.delta * n as f64, cfg.horizon)?;
                        p_exact = Some(exact.probability);
                        let se = (exact.probability * (1.0 - exact.probability) / replicas as f64).sqrt();
                        exact_checks.push((m, eps, i, est.p_hat, exact.probability, se));
                    }
                }
                report.push(vec![
                    m.to_string(),
                    n.to_string(),
                    num(eps),
                    i.to_string(),
                    num(cfg.delta),
                    num(est.p_hat),
                    num(est.ci_lo),
                    num(est.ci_hi),
                    num(est.log_rate),
                    num(est.log_rate_lo),
                    num(est.log_rate_hi),
                    num(t_m),
                    functional.b().to_string(),
                    num(cfg.horizon),
                    replicas.to_string(),
                    est.hits.to_string(),
                    est.censored.to_string(),
                    opt(fk.0),
                    opt(fk.1),
                    opt(p_exact),
                ]);
                series.entry((ei, ii)).or_default().push(TrendPoint {
                    m,
                    log_rate: est.log_rate,
                    lo: if est.censored { f64::NEG_INFINITY } else { est.log_rate_lo },
                    hi: est.log_rate_hi,
                });
            }
        }
    }
    let mut trend_summary = Vec::new();
    let mut plot_series = Vec::new();
    for ((ei, ii), mut pts) in series {
        pts.sort_by_key(|p| p.m);
        // a violation is a level whose whole interval lies above the previous one
        let violations: Vec<u32> = pts.windows(2).filter(|w| w[1].lo > w[0].hi).map(|w| w[1].m).collect();
        let eps = cfg.eps[ei];
        let i = cfg.i[ii];
        report.statistical_check(
            &format!("log-rate non-increasing in m (eps={eps}, i={i})"),
            violations.is_empty(),
            format!("levels above the previous interval: {violations:?}"),
        );
        trend_summary.push(json!({
            "eps": eps,
            "i": i,
            "levels": pts.iter().map(|p| p.m).collect::<Vec<_>>(),
            "log_rate": pts.iter().map(|p| p.log_rate).collect::<Vec<_>>(),
            "non_increasing_within_ci": violations.is_empty(),
        }));
        plot_series.push((
            format!("eps={eps}, i={i}"),
            pts.iter().map(|p| (p.m as f64, p.log_rate)).collect(),
        ));
    }
    for (m, eps, i, p_hat, p_exact, se) in &exact_checks {
        report.statistical_check(
            &format!("Monte Carlo matches exact probability (m={m}, eps={eps}, i={i})"),
            (p_hat - p_exact).abs() <= 3.0 * se,
            format!("p_hat {p_hat}, exact {p_exact}, standard error {se}"),
        );
    }
    report.summary = json!({ "trend": trend_summary, "bundle": exp.bundle.name(), "jump_rate": exp.rate.name() });
    if cfg.plots {
        report.plot = Some(Plot {
            title: "normalized log-rate of the exceedance probability".into(),
            x_label: "level m".into(),
            y_label: "(1/N) log p".into(),
            log_x: false,
            log_y: false,
            series: plot_series,
        });
    }
    Ok(report)
}

/// `E_{ν_ρ}[f_o f_g] − E[f_o]^2`, or zero when the windows are disjoint.
fn covariance(f: &VertexBundle, spec: &TowerSpec, g: &Elem, rho: f64, mean: f64) -> Result<f64> {
    let base: Vec<Elem> = f.sites().to_vec();
    let shifted: Vec<Elem> = base.iter().map(|w| spec.mul(g, w)).collect();
    let base_set: HashSet<Elem> = base.iter().copied().collect();
    if !shifted.iter().any(|w| base_set.contains(w)) {
        return Ok(0.0);
    }
    let mut union = base.clone();
    for w in &shifted {
        if !base_set.contains(w) {
            union.push(*w);
        }
    }
    if union.len() > MAX_COVARIANCE_SITES {
        return Err(Error::BallTooLarge {
            sites: union.len(),
            cap: MAX_COVARIANCE_SITES,
        });
    }
    let pos: HashMap<Elem, usize> = union.iter().enumerate().map(|(k, w)| (*w, k)).collect();
    let u = union.len();
    let mut acc = 0.0;
    for mask in 0usize..1 << u {
        let k = mask.count_ones() as i32;
        let weight = rho.powi(k) * (1.0 - rho).powi(u as i32 - k);
        if weight == 0.0 {
            continue;
        }
        let a = f.eval_lifted(&|z: &Elem| (mask >> pos[z]) & 1 == 1);
        let b = f.eval_lifted(&|z: &Elem| (mask >> pos[&spec.mul(g, z)]) & 1 == 1);
        acc += weight * a * b;
    }
    Ok(acc - mean * mean)
}

/// Exact `Var_{ν_ρ}(f̄_{o,i})` on the Cayley graph, summing covariances over
/// the offsets `τ^{-1} τ'` of pairs in `F_i`.
pub fn exact_local_average_variance(f: &VertexBundle, folner: &FolnerData, rho: f64) -> Result<f64> {
    let spec = f.spec();
    let mean = f.global_average().eval(rho);
    let mut offsets: HashMap<Elem, u64> = HashMap::new();
    for t in folner.elements() {
        let ti = spec.inv(t);
        for s in folner.elements() {
            *offsets.entry(spec.mul(&ti, s)).or_default() += 1;
        }
    }
    let mut keys: Vec<(Elem, u64)> = offsets.into_iter().collect();
    keys.sort_unstable();
    let mut total = 0.0;
    for (g, count) in keys {
        total += count as f64 * covariance(f, spec, &g, rho, mean)?;
    }
    Ok(total / (folner.len() as f64).powi(2))
}

/// Replica result of a stationary run: time integral and final configuration.
fn stationary_runs(
    graph: &QuotientGraph,
    exp: &Experiment,
    field: Option<&CompiledField>,
    replicas: u64,
    seed: u64,
) -> Result<Vec<(f64, Configuration)>> {
    let cfg = &exp.config;
    let process = ExclusionProcess::new(graph, &exp.rate, exp.t_m(graph.level()))?;
    let n = graph.num_vertices();
    (0..replicas)
        .into_par_iter()
        .map(|k| {
            let mut rng = replica_rng(seed, k);
            let init = Configuration::random(n, cfg.density, &mut rng);
            match field {
                Some(field) => process
                    .integrate_field(field, &init, cfg.horizon, None, &mut rng)
                    .map(|(v, s)| (v, s.final_configuration)),
                None => {
                    let traj = process.simulate(&init, cfg.horizon, &mut rng)?;
                    Ok((0.0, traj.final_configuration()))
                }
            }
        })
        .collect()
}

/// One-block estimate: time-averaged `|f̄_{o,i} − ⟨f_o⟩(η̄_{o,i})|` and the
/// variance of `f̄_{o,i}` against its exact value and the `C(f) C_L / |F_i|` bound.
pub fn run_one_block(exp: &Experiment) -> Result<Report> {
    let cfg = &exp.config;
    let f = &exp.bundle;
    let mut report = Report::new(
        "one-block",
        &[
            "m", "N", "i", "F_i", "rho", "block_mean", "block_se", "variance_hat", "variance_se", "exact_variance",
            "variance_bound", "t_m", "T", "replicas",
        ],
    );
    let mean = f.global_average().eval(cfg.density);
    let c_f = f.max_abs().powi(2);
    let c_l = group_ball_size(&exp.spec, 2 * f.radius()) as f64;
    let mut slope_points: BTreeMap<u32, Vec<(f64, f64)>> = BTreeMap::new();
    let mut plot_series = Vec::new();
    let mut row = 0u64;
    for graph in &exp.graphs {
        let m = graph.level();
        let n = graph.num_vertices();
        let replicas = cfg.replicas_at(m);
        let mut pts = Vec::new();
        for &i in &cfg.i {
            let functional = TheoremFunctional::new(f.clone(), i, i)?;
            let folner = functional.folner_i().clone();
            let field = CompiledField::new(&functional, graph);
            let runs = stationary_runs(graph, exp, Some(&field), replicas, exp.row_seed(row))?;
            row += 1;
            let block: Vec<f64> = runs.iter().map(|(v, _)| v / (n as f64 * cfg.horizon)).collect();
            let variances: Vec<f64> = runs
                .par_iter()
                .map(|(_, eta)| {
                    (0..n)
                        .map(|x| (local_average(f, graph, &folner, x, eta) - mean).powi(2))
                        .sum::<f64>()
                        / n as f64
                })
                .collect();
            let (block_mean, block_se) = mean_and_se(&block);
            let (var_hat, var_se) = mean_and_se(&variances);
            let exact = exact_local_average_variance(f, &folner, cfg.density)?;
            let bound = c_f * c_l / folner.len() as f64;
            report.check(
                &format!("exact variance within bound (m={m}, i={i})"),
                exact <= bound + 1e-15,
                format!("exact {exact}, bound {bound}"),
            );
            report.push(vec![
                m.to_string(),
                n.to_string(),
                i.to_string(),
                folner.len().to_string(),
                num(cfg.density),
                num(block_mean),
                num(block_se),
                num(var_hat),
                num(var_se),
                num(exact),
                num(bound),
                num(exp.t_m(m)),
                num(cfg.horizon),
                replicas.to_string(),
            ]);
            pts.push((folner.len() as f64, var_hat));
            slope_points.entry(m).or_default().push((folner.len() as f64, var_hat));
        }
        plot_series.push((format!("m={m}"), pts));
    }
    let mut slopes = Vec::new();
    for (m, pts) in &slope_points {
        if pts.len() >= 2 && pts.iter().all(|(_, v)| *v > 0.0) {
            let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
            let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
            let (slope, _) = linear_fit(&xs, &ys);
            slopes.push(json!({ "m": m, "slope": slope }));
        }
    }
    report.summary = json!({ "variance_slopes": slopes, "C_f": c_f, "C_L": c_l, "bundle": f.name() });
    if cfg.plots {
        report.plot = Some(Plot {
            title: "variance of the local average".into(),
            x_label: "|F_i|".into(),
            y_label: "variance".into(),
            log_x: true,
            log_y: true,
            series: plot_series,
        });
    }
    Ok(report)
}

/// `E|Σ_v c_v η_v|` for independent Bernoulli(ρ) sites and integer weights.
pub fn mean_abs_weighted_sum(weights: &[i64], rho: f64) -> f64 {
    let span: i64 = weights.iter().map(|w| w.abs()).sum();
    let offset = span as usize;
    let mut dist = vec![0.0; 2 * offset + 1];
    dist[offset] = 1.0;
    for &w in weights {
        if w == 0 {
            continue;
        }
        let mut next = vec![0.0; dist.len()];
        for (k, p) in dist.iter().enumerate() {
            if *p == 0.0 {
                continue;
            }
            next[k] += p * (1.0 - rho);
            next[(k as i64 + w) as usize] += p * rho;
        }
        dist = next;
    }
    dist.iter()
        .enumerate()
        .map(|(k, p)| p * (k as i64 - offset as i64).abs() as f64)
        .sum()
}

/// Exact `E_{ν_ρ}|η̄_{o,i} − η̄_{σo,i}|` on the quotient.
fn exact_two_block(graph: &QuotientGraph, folner: &FolnerData, sigma_vertex: usize, rho: f64) -> f64 {
    let mut weights = vec![0i64; graph.num_vertices()];
    for t in folner.elements() {
        weights[graph.right_mul(graph.origin(), t)] += 1;
        weights[graph.right_mul(sigma_vertex, t)] -= 1;
    }
    mean_abs_weighted_sum(&weights, rho) / folner.len() as f64
}

/// Two-blocks estimate: `E|η̄_{o,i} − η̄_{σo,i}|` bucketed by `|σ|` in
/// `(L, ε √t_m]`, against the exact binomial value.
pub fn run_two_blocks(exp: &Experiment) -> Result<Report> {
    let cfg = &exp.config;
    let mut report = Report::new(
        "two-blocks",
        &["m", "N", "eps", "i", "sigma_norm", "num_sigma", "estimate", "se", "exact", "t_m", "L", "replicas"],
    );
    for (row, graph) in exp.graphs.iter().enumerate() {
        let m = graph.level();
        let n = graph.num_vertices();
        let t_m = exp.t_m(m);
        let replicas = cfg.replicas_at(m);
        let runs = stationary_runs(graph, exp, None, replicas, exp.row_seed(row as u64))?;
        for &i in &cfg.i {
            let folner = folner_set(&exp.spec, i)?;
            let counts: Vec<Vec<f64>> = runs
                .par_iter()
                .map(|(_, eta)| (0..n).map(|x| local_count(graph, &folner, x, eta) as f64 / folner.len() as f64).collect())
                .collect();
            for &eps in &cfg.eps {
                let reach = (eps * t_m.sqrt()).floor() as u32;
                for d in cfg.block_l + 1..=reach.min(graph.diameter()) {
                    let sigmas: Vec<usize> = (0..n).filter(|&v| graph.distance_from_origin(v) == d).collect();
                    if sigmas.is_empty() {
                        continue;
                    }
                    let per_replica: Vec<f64> = counts
                        .iter()
                        .map(|avg| {
                            let mut acc = 0.0;
                            for &s in &sigmas {
                                let sigma = graph.coords_of(s);
                                for x in 0..n {
                                    acc += (avg[x] - avg[graph.right_mul(x, &sigma)]).abs();
                                }
                            }
                            acc / (sigmas.len() * n) as f64
                        })
                        .collect();
                    let (estimate, se) = mean_and_se(&per_replica);
                    let exact = sigmas.iter().map(|&s| exact_two_block(graph, &folner, s, cfg.density)).sum::<f64>()
                        / sigmas.len() as f64;
                    report.push(vec![
                        m.to_string(),
                        n.to_string(),
                        num(eps),
                        i.to_string(),
                        d.to_string(),
                        sigmas.len().to_string(),
                        num(estimate),
                        num(se),
                        num(exact),
                        num(t_m),
                        cfg.block_l.to_string(),
                        replicas.to_string(),
                    ]);
                }
            }
        }
    }
    Ok(report)
}

/// Følner error terms `|∂F_b| / |F_b|` and `|B_Γ(L)| / |F_b|` at
/// `b = b(ε √t_m)`, with the sampled deviation of the double average.
pub fn run_folner_report(exp: &Experiment) -> Result<Report> {
    let cfg = &exp.config;
    let mut report = Report::new(
        "folner-report",
        &[
            "m", "N", "eps", "t_m", "b", "F_b", "boundary", "ratio1", "ratio2", "i", "L", "deviation_mean",
            "deviation_max", "bound", "deviation_over_ratio1", "samples",
        ],
    );
    let occupancy = VertexBundle::occupancy(&exp.spec);
    let mut plot_series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    let mut previous: HashMap<String, f64> = HashMap::new();
    let mut monotone = true;
    let mut row = 0u64;
    for graph in &exp.graphs {
        let m = graph.level();
        let t_m = exp.t_m(m);
        for &eps in &cfg.eps {
            let b = b_index(&exp.spec, eps * t_m.sqrt());
            let fb = folner_set(&exp.spec, b)?;
            let ratio1 = fb.boundary_ratio();
            for &i in &cfg.i {
                let l = cfg.block_l.max(i);
                let ratio2 = group_ball_size(&exp.spec, l) as f64 / fb.len() as f64;
                let fi = folner_set(&exp.spec, i)?;
                let centres: Vec<usize> = fb.elements().iter().map(|s| graph.right_mul(graph.origin(), s)).collect();
                let seed = exp.row_seed(row);
                row += 1;
                let devs: Vec<f64> = (0..cfg.samples)
                    .into_par_iter()
                    .map(|k| {
                        let mut rng = replica_rng(seed, k);
                        let eta = Configuration::random(graph.num_vertices(), cfg.density, &mut rng);
                        let direct = local_count(graph, &fb, graph.origin(), &eta) as f64 / fb.len() as f64;
                        let double: f64 = centres
                            .iter()
                            .map(|&c| local_average(&occupancy, graph, &fi, c, &eta))
                            .sum::<f64>()
                            / centres.len() as f64;
                        (direct - double).abs()
                    })
                    .collect();
                let dev_mean = devs.iter().sum::<f64>() / devs.len() as f64;
                let dev_max = devs.iter().copied().fold(0.0, f64::max);
                let bound = 2.0 * (ratio1 + ratio2);
                report.statistical_check(
                    &format!("sampled deviation within 2(ratio1 + ratio2) (m={m}, eps={eps}, i={i})"),
                    dev_max <= bound,
                    format!("max deviation {dev_max}, bound {bound}"),
                );
                report.push(vec![
                    m.to_string(),
                    graph.num_vertices().to_string(),
                    num(eps),
                    num(t_m),
                    b.to_string(),
                    fb.len().to_string(),
                    fb.boundary().len().to_string(),
                    num(ratio1),
                    num(ratio2),
                    i.to_string(),
                    l.to_string(),
                    num(dev_mean),
                    num(dev_max),
                    num(bound),
                    num(dev_mean / ratio1),
                    cfg.samples.to_string(),
                ]);
            }
            let key = format!("eps={eps}");
            if let Some(prev) = previous.get(&key) {
                if ratio1 > *prev {
                    monotone = false;
                }
            }
            previous.insert(key.clone(), ratio1);
            plot_series.entry(key).or_default().push((m as f64, ratio1));
        }
    }
    report.check("boundary ratio non-increasing along levels", monotone, String::new());
    if cfg.plots {
        report.plot = Some(Plot {
            title: "boundary ratio of F_b".into(),
            x_label: "level m".into(),
            y_label: "|boundary| / |F_b|".into(),
            log_x: false,
            log_y: true,
            series: plot_series.into_iter().collect(),
        });
    }
    Ok(report)
}

/// Top eigenvalue of `t_m L_m + aV` and the Feynman–Kac bound on every level
/// within the spectral cap.
pub fn run_spectral_check(exp: &Experiment) -> Result<Report> {
    let cfg = &exp.config;
    let mut report = Report::new(
        "spectral-check",
        &["m", "eps", "i", "a", "T", "lambda", "fk_expectation", "bound_margin"],
    );
    let cap = cfg.spectral_max_sites.min(MATRIX_FREE_MAX_SITES);
    let mut records = Vec::new();
    for graph in &exp.graphs {
        let m = graph.level();
        let n = graph.num_vertices();
        if n > cap {
            warn!("level {m} has {n} sites, above the spectral cap of {cap}; skipped");
            continue;
        }
        let t_m = exp.t_m(m);
        let base = GeneratorOp::new(graph, &exp.rate, t_m, StateSpace::full(n)?)?;
        for &eps in &cfg.eps {
            for &i in &cfg.i {
                let functional = TheoremFunctional::at_scale(exp.bundle.clone(), i, eps, t_m)?;
                let v = functional.tabulate(graph);
                for &a in &cfg.a {
                    let rec = spectral_record(m, &base.tilted(a, &v)?, cfg.horizon)?;
                    report.check(
                        &format!("Feynman-Kac bound (m={m}, eps={eps}, i={i}, a={a})"),
                        rec.bound_margin >= FK_MARGIN_TOLERANCE,
                        format!("margin {}", rec.bound_margin),
                    );
                    report.push(vec![
                        m.to_string(),
                        num(eps),
                        i.to_string(),
                        num(a),
                        num(rec.horizon),
                        num(rec.lambda),
                        num(rec.fk_expectation),
                        num(rec.bound_margin),
                    ]);
                    records.push(rec);
                }
            }
        }
    }
    report.summary = serde_json::to_value(&records)?;
    Ok(report)
}

/// The path lemma over random translation-invariant functions and every
/// group element, on levels with at most 16 sites.
pub fn run_path_lemma(exp: &Experiment) -> Result<Report> {
    let cfg = &exp.config;
    let mut report = Report::new(
        "path-lemma",
        &["m", "N", "functions", "sigmas", "violations", "min_margin", "max_ratio"],
    );
    let mut row = 0u64;
    for graph in &exp.graphs {
        let m = graph.level();
        let n = graph.num_vertices();
        if n > crate::measure::MAX_EXACT_SITES {
            warn!("level {m} has {n} sites, above the exact cap; skipped");
            continue;
        }
        let seed = exp.row_seed(row);
        row += 1;
        let results: Vec<(u64, f64, f64)> = (0..cfg.samples)
            .into_par_iter()
            .map(|k| -> Result<(u64, f64, f64)> {
                let mut rng = replica_rng(seed, k);
                let f = random_invariant_function(graph, &mut rng)?;
                debug_assert!(is_invariant_function(graph, &f, 1e-12)?);
                let mut violations = 0;
                let mut min_margin = f64::INFINITY;
                let mut max_ratio: f64 = 0.0;
                for s in 0..n {
                    let chk = path_lemma_check(graph, &graph.coords_of(s), &f)?;
                    if chk.margin < -1e-12 * chk.rhs.max(1.0) {
                        violations += 1;
                    }
                    min_margin = min_margin.min(chk.margin);
                    if chk.rhs > 0.0 {
                        max_ratio = max_ratio.max(chk.lhs / chk.rhs);
                    }
                }
                // keep the generator draw count independent of n
                let _: f64 = rng.random();
                Ok((violations, min_margin, max_ratio))
            })
            .collect::<Result<_>>()?;
        let violations: u64 = results.iter().map(|r| r.0).sum();
        let min_margin = results.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
        let max_ratio = results.iter().map(|r| r.2).fold(0.0, f64::max);
        report.check(
            &format!("path lemma (m={m})"),
            violations == 0,
            format!("{violations} violations"),
        );
        report.push(vec![
            m.to_string(),
            n.to_string(),
            cfg.samples.to_string(),
            n.to_string(),
            violations.to_string(),
            num(min_margin),
            num(max_ratio),
        ]);
    }
    Ok(report)
}

/// Summary of every configured quotient plus its edge list.
pub fn run_build_tower(exp: &Experiment) -> Result<Report> {
    let mut report = Report::new(
        "tower",
        &["m", "vertices", "oriented_edges", "degree", "diameter", "injectivity_radius", "t_m"],
    );
    for graph in &exp.graphs {
        let m = graph.level();
        report.push(vec![
            m.to_string(),
            graph.num_vertices().to_string(),
            graph.num_edges().to_string(),
            graph.degree().to_string(),
            graph.diameter().to_string(),
            graph.injectivity_radius().to_string(),
            num(exp.t_m(m)),
        ]);
        let mut buf = Vec::new();
        graph.write_edge_list(&mut buf)?;
        report
            .extra_files
            .push((format!("edges_m{m}.txt"), String::from_utf8(buf).expect("edge list is ASCII")));
    }
    report.summary = json!({ "family": exp.spec.family(), "generators": exp.spec.generators() });
    Ok(report)
}

//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sepcov_core::bundle::builtin_edge_bundle;
use sepcov_core::dynamics::{replica_rng, sample_integrals, InitialLaw};
use sepcov_core::harness::*;
use sepcov_core::measure::{dirichlet_form, SmallMeasure};
use sepcov_core::spectral::{feynman_kac_log, spectral_record, variational_check, GeneratorOp, StateSpace};
use sepcov_core::stats::{linear_fit, mean_and_se, total_variation};
use sepcov_core::*;

type Outcome = std::result::Result<String, String>;
type Runner = fn(&Experiment) -> sepcov_core::Result<Report>;
type Criterion = (&'static str, fn() -> Outcome);

fn cycle(m: u32) -> QuotientGraph {
    QuotientGraph::new(&TowerSpec::integer_lattice(1, 2).unwrap(), m, TowerLimits::default()).unwrap()
}

fn rates(spec: &TowerSpec) -> Vec<JumpRate> {
    vec![
        JumpRate::constant(spec, 1.0).unwrap(),
        JumpRate::new(builtin_edge_bundle("symmetrized-product-plus-c", spec, 1.0).unwrap()).unwrap(),
    ]
}

fn config(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    ExperimentConfig::load(&path).unwrap()
}

fn column(report: &Report, name: &str) -> Vec<f64> {
    report.column(name).unwrap().iter().map(|s| s.parse().unwrap()).collect()
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn reversibility() -> Outcome {
    let g = cycle(3);
    let replicas = 100_000u64;
    let mut worst: f64 = 0.0;
    for rate in rates(g.spec()) {
        let p = ExclusionProcess::new(&g, &rate, 16.0).map_err(|e| e.to_string())?;
        let finals: Vec<u64> = (0..replicas)
            .into_par_iter()
            .map(|k| {
                let mut rng = replica_rng(5, k);
                let init = Configuration::random(8, 0.5, &mut rng);
                p.simulate(&init, 1.0, &mut rng).unwrap().final_configuration().to_index()
            })
            .collect();
        let mut counts = vec![0f64; 256];
        for s in finals {
            counts[s as usize] += 1.0;
        }
        for k in 0..=8u32 {
            let states: Vec<usize> = (0..256).filter(|s: &usize| s.count_ones() == k).collect();
            let total: f64 = states.iter().map(|s| counts[*s]).sum();
            let emp: Vec<f64> = states.iter().map(|s| counts[*s] / total).collect();
            let uni = vec![1.0 / states.len() as f64; states.len()];
            worst = worst.max(total_variation(&emp, &uni));
        }
    }
    verdict(worst < 0.05, format!("largest sector total variation {worst:.4} over both rates, 1e5 replicas each"))
}

fn feynman_kac() -> Outcome {
    let quotients = [
        (TowerSpec::integer_lattice(1, 2).unwrap(), vec![1, 2, 3]),
        (TowerSpec::integer_lattice(2, 2).unwrap(), vec![1]),
        (TowerSpec::integer_lattice(3, 2).unwrap(), vec![1]),
        (TowerSpec::heisenberg(2).unwrap(), vec![1]),
    ];
    let mut min_margin = f64::INFINITY;
    let mut worst_z: f64 = 0.0;
    let mut cases = 0;
    let mut skipped = 0;
    for (spec, levels) in quotients {
        let f = TheoremFunctional::new(VertexBundle::neighbor_product(&spec).unwrap(), 1, 2).unwrap();
        for m in levels {
            let g = QuotientGraph::new(&spec, m, TowerLimits::default()).unwrap();
            let n = g.num_vertices();
            let t_m = (g.diameter() as f64).powi(2);
            let v = f.tabulate(&g);
            let field = CompiledField::new(&f, &g);
            for rate in rates(&spec) {
                if rate.check_on(&g).is_err() {
                    skipped += 1;
                    continue;
                }
                let base = GeneratorOp::new(&g, &rate, t_m, StateSpace::full(n).unwrap()).unwrap();
                let p = ExclusionProcess::new(&g, &rate, t_m).unwrap();
                let integrals = sample_integrals(&p, &field, InitialLaw::Bernoulli(0.5), 1.0, 20_000, 17, None)
                    .map_err(|e| e.to_string())?;
                for a in [0.25, 0.5, 1.0] {
                    let tilted = base.tilted(a, &v).unwrap();
                    let rec = spectral_record(m, &tilted, 1.0).unwrap();
                    min_margin = min_margin.min(rec.bound_margin);
                    let exact = feynman_kac_log(&tilted, 1.0).unwrap().exp();
                    let samples: Vec<f64> = integrals.iter().map(|x| (a * x).exp()).collect();
                    let (mean, se) = mean_and_se(&samples);
                    worst_z = worst_z.max((mean - exact).abs() / se);
                    cases += 1;
                }
            }
        }
    }
    verdict(
        min_margin >= -1e-9 && worst_z <= 3.0,
        format!(
            "{cases} cases, smallest margin {min_margin:.3e}, largest |MC - exact| / SE {worst_z:.2}; \
             {skipped} quotient/rate pairs skipped where the rate is not symmetric on the quotient"
        ),
    )
}

fn variational() -> Outcome {
    let mut worst: f64 = 0.0;
    let c4 = cycle(2);
    let f = TheoremFunctional::new(VertexBundle::neighbor_product(c4.spec()).unwrap(), 1, 1).unwrap();
    let v = f.tabulate(&c4);
    for rate in rates(c4.spec()) {
        for a in [0.25, 1.0, 3.0] {
            let chk = variational_check(&c4, &rate, 4.0, a, &v, StateSpace::full(4).unwrap(), 20, 3).unwrap();
            worst = worst.max(chk.gap);
        }
    }
    let spec = TowerSpec::integer_lattice(2, 2).unwrap();
    let torus = QuotientGraph::new(&spec, 2, TowerLimits::default()).unwrap();
    let f = TheoremFunctional::new(VertexBundle::neighbor_product(&spec).unwrap(), 1, 2).unwrap();
    let v = f.tabulate(&torus);
    for rate in rates(&spec) {
        let sector = StateSpace::sector(16, 3).unwrap();
        let chk = variational_check(&torus, &rate, 4.0, 1.0, &v, sector, 20, 4).unwrap();
        worst = worst.max(chk.gap);
    }
    verdict(worst < 1e-8, format!("largest |lambda_eig - lambda_var| {worst:.2e} (4-cycle, 4x4 torus 3-particle sector)"))
}

fn path_lemma() -> Outcome {
    let exp = config("path-lemma.toml").prepare().unwrap();
    let report = run_path_lemma(&exp).map_err(|e| e.to_string())?;
    let violations = column(&report, "violations");
    let functions = column(&report, "functions")[0];
    verdict(
        violations == [0.0] && functions >= 1000.0,
        format!("{} violations over {functions} functions x 8 elements, min margin {}", violations[0], report.column("min_margin").unwrap()[0]),
    )
}

fn one_block() -> Outcome {
    let spec = TowerSpec::integer_lattice(1, 2).unwrap();
    let occ = VertexBundle::occupancy(&spec);
    let mut worst: f64 = 0.0;
    for i in 1..=16 {
        let f = folner_set(&spec, i).unwrap();
        for rho in [0.1, 0.3, 0.5, 0.9] {
            let exact = exact_local_average_variance(&occ, &f, rho).unwrap();
            worst = worst.max((exact - rho * (1.0 - rho) / f.len() as f64).abs());
        }
    }
    let exp = config("one-block.toml").prepare().unwrap();
    let report = run_one_block(&exp).map_err(|e| e.to_string())?;
    let xs: Vec<f64> = column(&report, "F_i").iter().map(|x| x.ln()).collect();
    let ys: Vec<f64> = column(&report, "variance_hat").iter().map(|y| y.ln()).collect();
    let (slope, _) = linear_fit(&xs, &ys);
    verdict(
        worst < 1e-12 && (slope + 1.0).abs() <= 0.1,
        format!("exact variance error {worst:.1e}, simulated log-log slope {slope:.3}"),
    )
}

fn superexp() -> Outcome {
    let exp = config("superexp.toml").prepare().unwrap();
    let report = run_superexp(&exp).map_err(|e| e.to_string())?;
    let p = column(&report, "p_hat");
    let rates = column(&report, "log_rate");
    let hits = column(&report, "hits");
    let failed: Vec<&Check> = report.checks.iter().filter(|c| !c.passed).collect();
    let censored = hits.iter().filter(|h| **h == 0.0).count();
    let ok = (1e-3..=0.5).contains(&p[0]) && failed.is_empty();
    let mut detail = format!(
        "p3 {:.3e} (exact {}), log-rates {:?}, {censored} of {} levels with no hits",
        p[0],
        report.column("p_exact").unwrap()[0],
        rates.iter().map(|r| (r * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
        rates.len()
    );
    for c in failed {
        detail += &format!("; {}: {}", c.name, c.detail);
    }
    verdict(ok, detail)
}

fn dirichlet_identity() -> Outcome {
    let g = cycle(2);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst: f64 = 0.0;
    for rate in rates(g.spec()) {
        for _ in 0..100 {
            let mu = SmallMeasure::random(4, &mut rng).unwrap().group_average(&g).unwrap();
            worst = worst.max(dirichlet_form(&mu, &rate, &g).unwrap().identity_defect());
        }
    }
    verdict(worst < 1e-12, format!("largest defect {worst:.1e} over 100 invariant measures per rate"))
}

fn folner() -> Outcome {
    let mut exact = true;
    for i in 1..=20u32 {
        let f1 = folner_set(&TowerSpec::integer_lattice(1, 2).unwrap(), i).unwrap();
        let f2 = folner_set(&TowerSpec::integer_lattice(2, 2).unwrap(), i).unwrap();
        exact &= f1.boundary_ratio() == 2.0 / (2 * i + 1) as f64;
        exact &= f2.boundary_ratio() == 4.0 / (2 * i + 1) as f64;
    }
    let mut z1 = config("folner-z2.toml");
    z1.tower.family = GroupFamily::IntegerLattice { dim: 1, base: 2 };
    z1.levels = vec![2, 3, 4, 5, 6, 7];
    let mut decreasing = true;
    let mut lasts = Vec::new();
    for cfg in [z1, config("folner-z2.toml")] {
        let report = run_folner_report(&cfg.prepare().unwrap()).map_err(|e| e.to_string())?;
        let eps = column(&report, "eps");
        let ratio = column(&report, "ratio1");
        for e in &cfg.eps {
            let along: Vec<f64> = eps.iter().zip(&ratio).filter(|(x, _)| *x == e).map(|(_, r)| *r).collect();
            decreasing &= along.windows(2).all(|w| w[1] <= w[0]) && along.last() < along.first();
            lasts.push(*along.last().unwrap());
        }
    }
    verdict(
        exact && decreasing,
        format!("closed forms exact: {exact}, ratios decrease along levels: {decreasing}, final ratios {lasts:?}"),
    )
}

fn determinism() -> Outcome {
    let runners: [(&str, Runner); 7] = [
        ("build-tower.toml", run_build_tower),
        ("superexp-smoke.toml", run_superexp),
        ("one-block.toml", run_one_block),
        ("two-blocks.toml", run_two_blocks),
        ("folner-z2.toml", run_folner_report),
        ("spectral-check.toml", run_spectral_check),
        ("path-lemma.toml", run_path_lemma),
    ];
    let mut mismatched = Vec::new();
    for (name, run) in runners {
        let mut cfg = config(name);
        cfg.replicas = Replicas::Uniform(50);
        cfg.samples = cfg.samples.min(100);
        let first = run(&cfg.prepare().unwrap()).and_then(|r| r.to_csv()).map_err(|e| e.to_string())?;
        let second = run(&cfg.prepare().unwrap()).and_then(|r| r.to_csv()).map_err(|e| e.to_string())?;
        if first != second {
            mismatched.push(name);
        }
    }
    verdict(mismatched.is_empty(), format!("7 experiments rerun, mismatches: {mismatched:?}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("reversibility", reversibility),
        ("Feynman-Kac bound", feynman_kac),
        ("variational principle", variational),
        ("path lemma", path_lemma),
        ("one-block variance law", one_block),
        ("super-exponential trend", superexp),
        ("Dirichlet identity", dirichlet_identity),
        ("Folner report", folner),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {}. {name}: {detail} [{secs:.1}s]", k + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL {}. {name}: {detail} [{secs:.1}s]", k + 1);
            }
        }
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

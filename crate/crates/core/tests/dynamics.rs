use proptest::prelude::*;
use sepcov_core::bundle::builtin_edge_bundle;
use sepcov_core::dynamics::{estimate_exceedance, replica_rng, sample_integrals, ExclusionProcess, InitialLaw, TimeScale};
use sepcov_core::spectral::{exact_exceedance, feynman_kac_log, GeneratorOp, StateSpace};
use sepcov_core::stats::{mean_and_se, total_variation};
use sepcov_core::{build_tower, CompiledField, Configuration, JumpRate, QuotientGraph, TheoremFunctional, TowerLimits, TowerSpec, VertexBundle};

fn cycle(level: u32) -> QuotientGraph {
    QuotientGraph::new(&TowerSpec::integer_lattice(1, 2).unwrap(), level, TowerLimits::default()).unwrap()
}

fn rates(g: &QuotientGraph) -> Vec<JumpRate> {
    vec![
        JumpRate::constant(g.spec(), 1.0).unwrap(),
        JumpRate::new(builtin_edge_bundle("symmetrized-product-plus-c", g.spec(), 1.0).unwrap()).unwrap(),
    ]
}

#[test]
fn diffusive_schedule_and_validation() {
    let spec = TowerSpec::integer_lattice(1, 2).unwrap();
    let tower = build_tower(&spec, 5, TowerLimits::default()).unwrap();
    let ts = TimeScale::diffusive(&tower).unwrap();
    assert_eq!(ts.values(), &[1.0, 4.0, 16.0, 64.0, 256.0]);
    assert!(TimeScale::custom(&tower, vec![1.0, 4.0, 4.0, 5.0, 6.0]).is_err());
    // sqrt(t_3) = 9 > 2 diam X_3 = 8
    assert!(TimeScale::custom(&tower, vec![1.0, 2.0, 81.0, 100.0, 200.0]).is_err());
    assert!(TimeScale::custom(&tower, vec![1.0, 2.0, 64.0, 100.0, 200.0]).is_ok());
}

#[test]
fn integrals_of_trivial_observables() {
    let g = cycle(4);
    for rate in rates(&g) {
        let p = ExclusionProcess::new(&g, &rate, 64.0).unwrap();
        let mut rng = replica_rng(9, 0);
        let init = Configuration::random(16, 0.5, &mut rng);
        let traj = p.simulate(&init, 1.3, &mut rng).unwrap();
        assert!(!traj.events.is_empty());
        assert!((traj.integrate(|_| 1.0) - 1.3).abs() < 1e-12);
        let k = init.count_ones() as f64;
        assert!((traj.integrate(|eta| eta.count_ones() as f64) - 1.3 * k).abs() < 1e-9);
        traj.for_each_piece(|_, _, eta| assert_eq!(eta.count_ones() as f64, k));
    }
}

#[test]
fn integral_matches_riemann_sum_and_incremental_field() {
    let g = cycle(4);
    let rate = &rates(&g)[1];
    let f = TheoremFunctional::new(VertexBundle::neighbor_product(g.spec()).unwrap(), 1, 2).unwrap();
    let p = ExclusionProcess::new(&g, rate, 64.0).unwrap();
    let mut rng = replica_rng(4, 0);
    let init = Configuration::random(16, 0.5, &mut rng);
    let mut rng2 = rng.clone();
    let traj = p.simulate(&init, 1.0, &mut rng).unwrap();
    let exact = traj.integrate(|eta| f.eval(&g, eta));
    // Riemann sum with step T / 10^6, walking the event list once
    let steps = 1_000_000;
    let h = 1.0 / steps as f64;
    let mut eta = init.clone();
    let mut next = 0;
    let mut value = f.eval(&g, &eta);
    let mut riemann = 0.0;
    for k in 0..steps {
        let t = (k as f64 + 0.5) * h;
        let mut moved = false;
        while next < traj.events.len() && traj.events[next].time <= t {
            let ev = traj.events[next];
            eta.swap_sites(ev.origin, ev.terminus);
            next += 1;
            moved = true;
        }
        if moved {
            value = f.eval(&g, &eta);
        }
        riemann += value * h;
    }
    let tol = 2.0 * h * traj.events.len() as f64 * f.bundle().c_f() * 16.0;
    assert!((exact - riemann).abs() <= tol.max(1e-9 * exact.abs()), "{exact} vs {riemann}");
    let field = CompiledField::new(&f, &g);
    let (incremental, _) = p.integrate_field(&field, &init, 1.0, None, &mut rng2).unwrap();
    assert!((incremental - exact).abs() < 1e-9 * exact.abs().max(1.0), "{incremental} vs {exact}");
}

#[test]
fn occupation_law_is_uniform_on_each_sector() {
    let g = cycle(3);
    for rate in rates(&g) {
        let p = ExclusionProcess::new(&g, &rate, 16.0).unwrap();
        let n = 50_000u64;
        let finals: Vec<u64> = (0..n)
            .map(|k| {
                let mut rng = replica_rng(21, k);
                let init = Configuration::random(8, 0.5, &mut rng);
                p.simulate(&init, 0.05, &mut rng).unwrap().final_configuration().to_index()
            })
            .collect();
        for k in 0..=8u32 {
            let states: Vec<u64> = (0..256u64).filter(|s| s.count_ones() == k).collect();
            let hits: Vec<f64> = states
                .iter()
                .map(|s| finals.iter().filter(|x| *x == s).count() as f64)
                .collect();
            let total: f64 = hits.iter().sum();
            if total < 2000.0 {
                continue;
            }
            let emp: Vec<f64> = hits.iter().map(|h| h / total).collect();
            let uni = vec![1.0 / states.len() as f64; states.len()];
            let tv = total_variation(&emp, &uni);
            assert!(tv < 0.05, "{} sector {k}: tv {tv}", rate.name());
        }
    }
}

/// Two-sample Kolmogorov–Smirnov statistic and asymptotic p-value.
fn ks_test(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let en = (n * m / (n + m)).sqrt();
    let lambda = (en + 0.12 + 0.11 / en) * d;
    let mut p = 0.0;
    for k in 1..100 {
        let kf = k as f64;
        p += 2.0 * (-1.0f64).powi(k - 1) * (-2.0 * kf * kf * lambda * lambda).exp();
    }
    p.clamp(0.0, 1.0)
}

#[test]
fn doubling_the_time_scale_equals_doubling_the_horizon() {
    let g = cycle(3);
    let rate = &rates(&g)[1];
    let fast = ExclusionProcess::new(&g, rate, 8.0).unwrap();
    let slow = ExclusionProcess::new(&g, rate, 4.0).unwrap();
    let count = |p: &ExclusionProcess, horizon: f64, seed: u64| -> Vec<f64> {
        (0..4000)
            .map(|k| {
                let mut rng = replica_rng(seed, k);
                let init = Configuration::random(8, 0.5, &mut rng);
                p.simulate(&init, horizon, &mut rng).unwrap().events.len() as f64
            })
            .collect()
    };
    let mut a = count(&fast, 1.0, 1);
    let mut b = count(&slow, 2.0, 2);
    let p = ks_test(&mut a, &mut b);
    assert!(p > 0.01, "KS p-value {p}");
}

#[test]
fn thinning_does_not_change_the_path_law() {
    let g = cycle(3);
    let rate = &rates(&g)[1];
    let f = TheoremFunctional::new(VertexBundle::neighbor_product(g.spec()).unwrap(), 1, 2).unwrap();
    let thin = ExclusionProcess::new(&g, rate, 16.0).unwrap();
    let full = ExclusionProcess::new(&g, rate, 16.0).unwrap().without_thinning();
    let run = |p: &ExclusionProcess, seed: u64| -> (Vec<f64>, Vec<f64>, u64) {
        let mut events = Vec::new();
        let mut integrals = Vec::new();
        let mut idle = 0;
        let field = CompiledField::new(&f, &g);
        for k in 0..4000 {
            let mut rng = replica_rng(seed, k);
            let init = Configuration::random(8, 0.5, &mut rng);
            let mut r2 = rng.clone();
            let traj = p.simulate(&init, 0.5, &mut rng).unwrap();
            events.push(traj.events.len() as f64);
            let (v, s) = p.integrate_field(&field, &init, 0.5, None, &mut r2).unwrap();
            integrals.push(v);
            idle += s.idle_rings;
        }
        (events, integrals, idle)
    };
    let (mut e1, mut i1, idle1) = run(&thin, 5);
    let (mut e2, mut i2, idle2) = run(&full, 6);
    assert_eq!(idle1, 0);
    assert!(idle2 > 0);
    assert!(ks_test(&mut e1, &mut e2) > 0.01);
    assert!(ks_test(&mut i1, &mut i2) > 0.01);
}

#[test]
fn exceedance_shortcuts() {
    let g = cycle(3);
    let rate = &rates(&g)[0];
    let p = ExclusionProcess::new(&g, rate, 16.0).unwrap();
    let f = TheoremFunctional::new(VertexBundle::occupancy(g.spec()), 1, 2).unwrap();
    let zero = estimate_exceedance(&p, &f, 0.0, 1.0, 10, 1).unwrap();
    assert_eq!((zero.p_hat, zero.log_rate), (1.0, 0.0));
    let big = estimate_exceedance(&p, &f, 2.0 + 1e-9, 1.0, 10, 1).unwrap();
    assert_eq!(big.p_hat, 0.0);
    assert!(big.deterministic);
}

#[test]
fn exceedance_matches_exact_path_space_probability() {
    let g = cycle(3);
    let f = TheoremFunctional::new(VertexBundle::occupancy(g.spec()), 1, 2).unwrap();
    let v = f.tabulate(&g);
    for rate in rates(&g) {
        let p = ExclusionProcess::new(&g, &rate, 16.0).unwrap();
        let delta = 0.15;
        let est = estimate_exceedance(&p, &f, delta, 1.0, 40_000, 77).unwrap();
        let exact = exact_exceedance(&g, &rate, 16.0, &v, delta * 8.0, 1.0).unwrap();
        let se = (exact.probability * (1.0 - exact.probability) / 40_000.0).sqrt();
        assert!(
            (est.p_hat - exact.probability).abs() < 4.0 * se,
            "{}: p_hat {} exact {} se {se}",
            rate.name(),
            est.p_hat,
            exact.probability
        );
        assert!(exact.probability > 0.01 && exact.probability < 0.99);
    }
}

#[test]
fn feynman_kac_matches_monte_carlo() {
    let g = cycle(3);
    let f = TheoremFunctional::new(VertexBundle::neighbor_product(g.spec()).unwrap(), 1, 2).unwrap();
    let v = f.tabulate(&g);
    let rate = &rates(&g)[1];
    let p = ExclusionProcess::new(&g, rate, 16.0).unwrap();
    let field = CompiledField::new(&f, &g);
    let integrals = sample_integrals(&p, &field, InitialLaw::Bernoulli(0.5), 1.0, 20_000, 3, None).unwrap();
    let base = GeneratorOp::new(&g, rate, 16.0, StateSpace::full(8).unwrap()).unwrap();
    for a in [0.25, 0.5, 1.0] {
        let samples: Vec<f64> = integrals.iter().map(|x| (a * x).exp()).collect();
        let (mean, se) = mean_and_se(&samples);
        let exact = feynman_kac_log(&base.tilted(a, &v).unwrap(), 1.0).unwrap().exp();
        assert!((mean - exact).abs() < 3.5 * se, "a = {a}: {mean} ± {se} vs {exact}");
    }
}

#[test]
fn replicas_are_reproducible() {
    let g = cycle(4);
    let rate = &rates(&g)[1];
    let f = TheoremFunctional::new(VertexBundle::neighbor_product(g.spec()).unwrap(), 1, 2).unwrap();
    let p = ExclusionProcess::new(&g, rate, 64.0).unwrap();
    let field = CompiledField::new(&f, &g);
    let a = sample_integrals(&p, &field, InitialLaw::Bernoulli(0.5), 1.0, 64, 99, None).unwrap();
    let b = sample_integrals(&p, &field, InitialLaw::Bernoulli(0.5), 1.0, 64, 99, None).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn particle_count_is_conserved(seed in any::<u64>(), level in 2u32..6, rho in 0.0f64..1.0) {
        let g = cycle(level);
        let rate = &rates(&g)[1];
        let t = (g.diameter() as f64).powi(2);
        let p = ExclusionProcess::new(&g, rate, t).unwrap();
        let mut rng = replica_rng(seed, 0);
        let init = Configuration::random(g.num_vertices(), rho, &mut rng);
        let traj = p.simulate(&init, 0.7, &mut rng).unwrap();
        prop_assert_eq!(traj.final_configuration().count_ones(), init.count_ones());
        let mut last = 0.0;
        for ev in &traj.events {
            prop_assert!(ev.time >= last && ev.time < 0.7);
            prop_assert!(g.distance(ev.origin, ev.terminus) == 1);
            last = ev.time;
        }
    }
}


use std::collections::{BTreeSet, HashSet};

use proptest::prelude::*;
use sepcov_core::folner::group_ball_size;
use sepcov_core::*;

fn z(d: usize) -> TowerSpec {
    TowerSpec::integer_lattice(d, 2).unwrap()
}

fn level(spec: &TowerSpec, m: u32) -> QuotientGraph {
    QuotientGraph::new(spec, m, TowerLimits::default()).unwrap()
}

/// Brute-force enumeration of upper unitriangular 3x3 matrices over Z/kZ.
fn heisenberg_order(k: i64) -> usize {
    let mut seen = HashSet::new();
    for a in 0..k {
        for b in 0..k {
            for c in 0..k {
                seen.insert((a, b, c));
            }
        }
    }
    seen.len()
}

#[test]
fn cycle_tower_sizes() {
    let tower = build_tower(&z(1), 3, TowerLimits::default()).unwrap();
    let sizes: Vec<usize> = tower.iter().map(|g| g.num_vertices()).collect();
    assert_eq!(sizes, vec![2, 4, 8]);
    for g in &tower {
        assert_eq!(g.degree(), 2);
    }
}

#[test]
fn torus_level_two() {
    let g = level(&z(2), 2);
    assert_eq!(g.num_vertices(), 16);
    assert_eq!(g.degree(), 4);
    assert_eq!(g.num_edges(), 64);
}

#[test]
fn heisenberg_level_one_matches_enumeration() {
    let h = TowerSpec::heisenberg(2).unwrap();
    let g = level(&h, 1);
    assert_eq!(g.num_vertices(), heisenberg_order(2));
    assert_eq!(g.num_vertices(), 8);
    assert_eq!(g.degree(), 4);
}

#[test]
fn covering_maps_compose() {
    for spec in [z(1), z(2), TowerSpec::heisenberg(2).unwrap()] {
        let depth = if spec.family().coords() == 3 { 2 } else { 3 };
        let tower = build_tower(&spec, depth, TowerLimits::default()).unwrap();
        for w in tower.windows(2) {
            let map = w[1].covering_map_to(&w[0]).unwrap();
            let image: BTreeSet<usize> = map.iter().copied().collect();
            assert_eq!(image.len(), w[0].num_vertices(), "covering map is surjective");
            for e in 0..w[1].num_edges() {
                let edge = w[1].edge(e);
                let s = edge.label;
                assert_eq!(w[0].neighbor(map[edge.origin], s), map[edge.terminus]);
            }
        }
        if tower.len() >= 3 {
            let top = tower[2].covering_map_to(&tower[0]).unwrap();
            let a = tower[2].covering_map_to(&tower[1]).unwrap();
            let b = tower[1].covering_map_to(&tower[0]).unwrap();
            for v in 0..tower[2].num_vertices() {
                assert_eq!(top[v], b[a[v]]);
            }
        }
    }
}

#[test]
fn action_commutes_with_edges() {
    let g = level(&TowerSpec::heisenberg(2).unwrap(), 1);
    for v in 0..g.num_vertices() {
        let sigma = g.coords_of(v);
        for e in 0..g.num_edges() {
            let edge = g.edge(e);
            let x = g.left_mul(&sigma, edge.origin);
            let y = g.left_mul(&sigma, edge.terminus);
            assert_eq!(g.neighbor(x, edge.label), y);
        }
    }
}

#[test]
fn folner_ratios_in_closed_form() {
    for i in 1..=10u32 {
        let f1 = folner_set(&z(1), i).unwrap();
        assert_eq!(f1.boundary().len(), 2);
        assert_eq!(f1.boundary_ratio(), 2.0 / (2 * i + 1) as f64);
        let f2 = folner_set(&z(2), i).unwrap();
        assert_eq!(f2.len(), ((2 * i + 1) * (2 * i + 1)) as usize);
        assert_eq!(f2.boundary_ratio(), 4.0 / (2 * i + 1) as f64);
    }
}

#[test]
fn folner_boundary_by_direct_set_computation() {
    let spec = TowerSpec::heisenberg(2).unwrap();
    for i in 1..=2 {
        let f = folner_set(&spec, i).unwrap();
        let set: HashSet<Elem> = f.elements().iter().copied().collect();
        let mut boundary = HashSet::new();
        for x in f.elements() {
            for s in spec.generators() {
                let y = spec.mul(x, s);
                if !set.contains(&y) {
                    boundary.insert(y);
                }
            }
        }
        assert_eq!(boundary.len(), f.boundary().len());
        assert!(f.boundary().iter().all(|b| boundary.contains(b)));
    }
    let ratios: Vec<f64> = (1..=4).map(|i| folner_set(&spec, i).unwrap().boundary_ratio()).collect();
    assert!(ratios.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn b_index_examples() {
    assert_eq!(b_index(&z(1), 3.5), 3);
    assert_eq!(b_index(&z(1), 0.5), 1);
    assert_eq!(b_index(&z(2), 5.0), 2);
    let ladder: Vec<u32> = (0..40).map(|k| b_index(&z(2), k as f64 * 0.5)).collect();
    assert!(ladder.windows(2).all(|w| w[0] <= w[1]));
    assert!(*ladder.last().unwrap() >= 9);
}

#[test]
fn graph_balls() {
    let c8 = level(&z(1), 3);
    assert_eq!(c8.ball(0, 0), vec![0]);
    assert_eq!(c8.ball(0, 2).len(), 5);
    assert_eq!(z(2).ball(2).len(), 13);
}

#[test]
fn injectivity_radii() {
    assert_eq!(level(&z(1), 3).injectivity_radius(), 3);
    assert_eq!(level(&z(1), 1).injectivity_radius(), 0);
    assert_eq!(level(&z(2), 2).injectivity_radius(), 1);
}

#[test]
fn balls_agree_with_the_cover_within_injectivity_radius() {
    for (spec, m) in [(z(1), 4), (z(2), 3), (TowerSpec::heisenberg(2).unwrap(), 2)] {
        let g = level(&spec, m);
        let r = g.injectivity_radius();
        for k in 0..=r {
            assert_eq!(g.ball(g.origin(), k).len(), group_ball_size(&spec, k));
        }
        assert!(g.ball(g.origin(), r + 1).len() < group_ball_size(&spec, r + 1));
    }
}

#[test]
fn edge_list_has_one_triple_per_oriented_edge() {
    let g = level(&z(2), 1);
    let mut buf = Vec::new();
    g.write_edge_list(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), g.num_edges());
    assert!(text.lines().all(|l| l.split_whitespace().count() == 3));
}

#[test]
fn unsupported_requests_fail() {
    assert!(TowerSpec::integer_lattice(1, 1).is_err());
    let err = QuotientGraph::new(&z(3), 5, TowerLimits { max_vertices: 4096 }).unwrap_err();
    assert!(matches!(err, Error::QuotientTooLarge { .. }));
}

proptest! {
    #[test]
    fn action_is_free_and_transitive(m in 1u32..5, target in 0usize..16) {
        let g = level(&z(1), m);
        let n = g.num_vertices();
        let target = target % n;
        let hits: Vec<usize> = (0..n).filter(|&v| g.left_mul(&g.coords_of(v), g.origin()) == target).collect();
        prop_assert_eq!(hits.len(), 1);
    }

    #[test]
    fn reversal_is_an_involution(m in 1u32..4, d in 1usize..3) {
        let g = level(&z(d), m);
        for e in 0..g.num_edges() {
            let r = g.reverse(e);
            prop_assert_eq!(g.reverse(r), e);
            let (a, b) = (g.edge(e), g.edge(r));
            prop_assert_eq!(a.origin, b.terminus);
            prop_assert_eq!(g.spec().inverse_label(a.label), b.label);
        }
    }
}

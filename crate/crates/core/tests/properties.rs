use fnnsom::harness::{derive_seed, run_sweep, SweepGrid, SweepPlan, TrialConfig};
use fnnsom::map::init_weights;
use fnnsom::metrics::count_edge_crossings;
use fnnsom::rate::{combine_feedback, quantization_feedback, rate_fnnsom, FeedbackParams};
use fnnsom::{Dataset, InitMode, LatticeGraph, MapState, RatePolicy};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Lowest-index exhaustive search, written independently of the library.
fn brute_force(units: &[Vec<f64>], x: &[f64]) -> (usize, usize) {
    let dist = |u: &Vec<f64>| u.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    let mut order: Vec<usize> = (0..units.len()).collect();
    order.sort_by(|&a, &b| dist(&units[a]).total_cmp(&dist(&units[b])).then(a.cmp(&b)));
    (order[0], order[1])
}

fn units_strategy() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    (1usize..=5, 2usize..=100).prop_flat_map(|(dim, n)| {
        // a coarse value set makes exact ties common
        let coord = prop_oneof![(-4i32..=4).prop_map(|v| v as f64 * 0.5), -5.0f64..5.0];
        (
            prop::collection::vec(prop::collection::vec(coord.clone(), dim), n),
            prop::collection::vec(coord, dim),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn bmu_matches_brute_force((units, x) in units_strategy()) {
        let state = MapState::from_units(&units, 0.999).unwrap();
        prop_assert_eq!(state.find_bmu(&x).unwrap(), brute_force(&units, &x));
    }

    #[test]
    fn indexed_bmu_matches_brute_force((units, x) in units_strategy(), lo in -3.0f64..0.0, span in 0.5f64..6.0) {
        let dim = x.len();
        let mut state = MapState::from_units(&units, 0.999).unwrap();
        let domain = fnnsom::BoundingBox::new(vec![lo; dim], vec![lo + span; dim]).unwrap();
        state.enable_grid_index(&domain);
        prop_assert_eq!(state.find_bmu(&x).unwrap(), brute_force(&units, &x));
    }
}

fn random_policy(rng: &mut ChaCha8Rng) -> RatePolicy {
    if rng.random_bool(0.5) {
        RatePolicy::nnsom(rng.random_range(0.01..=1.0)).unwrap()
    } else {
        RatePolicy::fnnsom(rng.random_range(0.01..=1.0)).unwrap()
    }
}

#[test]
fn weights_stay_in_convex_hull() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..20 {
        let dataset = if trial % 2 == 0 {
            Dataset::Square
        } else {
            Dataset::clusters_2d()
        };
        let graph = LatticeGraph::square(6).unwrap();
        let w = init_weights(InitMode::Ric, 36, &dataset.bounding_box(), &mut rng).unwrap();
        let mut points: Vec<[f64; 2]> = w.chunks(2).map(|c| [c[0], c[1]]).collect();
        let mut state = MapState::new(w, 2, 0.999).unwrap();
        let policy = random_policy(&mut rng);
        let mut stream = dataset.stream(trial);
        for i in 0..3000 {
            let x = stream.next_sample().unwrap();
            points.push([x[0], x[1]]);
            state.apply_sample(&policy, &graph, &x, i).unwrap();
        }
        let hull = convex_hull(points);
        for w in state.weights().chunks(2) {
            for k in 0..hull.len() {
                let (a, b) = (hull[k], hull[(k + 1) % hull.len()]);
                let o = robust::orient2d(
                    robust::Coord { x: a[0], y: a[1] },
                    robust::Coord { x: b[0], y: b[1] },
                    robust::Coord { x: w[0], y: w[1] },
                );
                assert!(o >= -1e-12, "weight {w:?} outside hull edge {a:?}-{b:?}");
            }
        }
    }
}

/// Counter-clockwise hull by monotone chain.
fn convex_hull(mut pts: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        robust::orient2d(
            robust::Coord { x: o[0], y: o[1] },
            robust::Coord { x: a[0], y: a[1] },
            robust::Coord { x: b[0], y: b[1] },
        )
    };
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

#[test]
fn updates_are_local() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let side = rng.random_range(2..=8);
        let graph = LatticeGraph::square(side).unwrap();
        let n = side * side;
        let dataset = Dataset::Square;
        let w = init_weights(InitMode::Ric, n, &dataset.bounding_box(), &mut rng).unwrap();
        let mut state = MapState::new(w, 2, 0.99).unwrap();
        let policy = random_policy(&mut rng);
        let mut stream = dataset.stream(rng.random());
        for i in 0..200 {
            let before = state.weights().to_vec();
            let x = stream.next_sample().unwrap();
            let rec = state.apply_sample(&policy, &graph, &x, i).unwrap();
            for j in 0..n {
                if graph.graph_distance(j, rec.bmu) > 1 {
                    assert_eq!(state.weight(j), &before[2 * j..2 * j + 2]);
                }
            }
        }
    }
}

#[test]
fn fnnsom_rate_vanishes_beyond_neighbors() {
    let graph = LatticeGraph::square(5).unwrap();
    let mut state = MapState::new(vec![0.5; 50], 2, 0.999).unwrap();
    for j in 0..25 {
        state.set_unit_errors(j, 0.1 + j as f64 * 0.01, 0.3, 10);
    }
    let params = FeedbackParams::with_c_q(0.15);
    for bmu in 0..25 {
        for j in 0..25 {
            let r = rate_fnnsom(&params, &state, j, bmu, &graph);
            match graph.graph_distance(j, bmu) {
                0 => assert_eq!(r, params.sigma),
                1 => assert!(r > 0.0 && r <= 1.0),
                _ => assert_eq!(r, 0.0),
            }
        }
    }
}

#[test]
fn combined_feedback_is_a_bounded_union() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..100_000 {
        let a: f64 = rng.random();
        let f: f64 = rng.random();
        let big = combine_feedback(a, f).unwrap();
        assert!((0.0..=1.0).contains(&big));
        assert!(big >= a.max(f), "F({a}, {f}) = {big}");
    }
    // exact endpoints
    for &(a, f) in &[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)] {
        let big = combine_feedback(a, f).unwrap();
        assert!((0.0..=1.0).contains(&big) && big >= a.max(f));
    }
}

#[test]
fn quantization_feedback_stays_in_unit_interval() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..100_000 {
        let c_q = rng.random_range(1e-3..=10.0);
        let q_bmu = rng.random_range(0.0..=5.0);
        let q_j = rng.random_range(1e-9..=5.0);
        let f = quantization_feedback(c_q, q_bmu, q_j).unwrap();
        assert!((0.0..=1.0).contains(&f));
    }
}

#[test]
fn running_errors_stay_in_range() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for dataset in [Dataset::clusters_2d(), Dataset::SphericalShell] {
        let graph = LatticeGraph::square(5).unwrap();
        let w = init_weights(InitMode::Ric, 25, &dataset.bounding_box(), &mut rng).unwrap();
        let mut state = MapState::new(w, dataset.dim(), 0.9).unwrap();
        let policy = RatePolicy::fnnsom(0.5).unwrap();
        let mut stream = dataset.stream(1);
        for i in 0..20_000 {
            let x = stream.next_sample().unwrap();
            state.apply_sample(&policy, &graph, &x, i).unwrap();
            if i % 100 == 0 {
                assert!(state.q_ema().iter().all(|&q| q >= 0.0 && q.is_finite()));
                assert!(state.alfa_ema().iter().all(|&a| (0.0..=1.0).contains(&a)));
            }
        }
    }
}

fn rigid(weights: &[f64], theta: f64, shift: (f64, f64)) -> Vec<f64> {
    let (s, c) = theta.sin_cos();
    weights
        .chunks(2)
        .flat_map(|p| [c * p[0] - s * p[1] + shift.0, s * p[0] + c * p[1] + shift.1])
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn crossings_are_rigid_invariant(
        side in 2usize..=6,
        seed in any::<u64>(),
        theta in 0.0f64..std::f64::consts::TAU,
        dx in -10.0f64..10.0,
        dy in -10.0f64..10.0,
    ) {
        let graph = LatticeGraph::square(side).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w: Vec<f64> = (0..2 * side * side).map(|_| rng.random::<f64>()).collect();
        let base = count_edge_crossings(&MapState::new(w.clone(), 2, 0.9).unwrap(), &graph).unwrap();
        let moved = rigid(&w, theta, (dx, dy));
        let after = count_edge_crossings(&MapState::new(moved, 2, 0.9).unwrap(), &graph).unwrap();
        prop_assert_eq!(base, after);
        // quarter turns are exact
        let quarter: Vec<f64> = w.chunks(2).flat_map(|p| [-p[1], p[0]]).collect();
        let turned = count_edge_crossings(&MapState::new(quarter, 2, 0.9).unwrap(), &graph).unwrap();
        prop_assert_eq!(base, turned);
    }
}

#[test]
fn sweep_is_identical_across_parallelism() {
    let mut cells = Vec::new();
    for (dataset, policy) in [
        (Dataset::Square, RatePolicy::nnsom(0.3).unwrap()),
        (Dataset::clusters_2d(), RatePolicy::fnnsom(0.15).unwrap()),
        (Dataset::SphericalShell, RatePolicy::fnnsom(0.5).unwrap()),
    ] {
        let mut c = TrialConfig::new(dataset, 4, policy, InitMode::Ric).with_iterations(12);
        c.record_every = 4;
        cells.push(c);
    }
    let plan = SweepPlan::new(cells, 3, 77);
    let one = run_sweep(&plan, 1).unwrap();
    let eight = run_sweep(&plan, 8).unwrap();
    assert!(one.failures.is_empty() && eight.failures.is_empty());
    assert_eq!(one.results.len(), 9);
    for (a, b) in one.results.iter().zip(&eight.results) {
        assert!(a.same_outcome(b));
        assert_eq!(a.final_weights, b.final_weights);
        assert_eq!(a.alfa_trace, b.alfa_trace);
    }
}

#[test]
fn streams_reproduce_bit_for_bit() {
    for dataset in [
        Dataset::Square,
        Dataset::clusters_2d(),
        Dataset::SphericalShell,
        Dataset::Dispersion3D,
    ] {
        let mut a = dataset.stream(42);
        let mut b = dataset.stream(42);
        let mut c = dataset.stream(43);
        let mut differs = false;
        for _ in 0..10_000 {
            let (x, y, z) = (
                a.next_sample().unwrap(),
                b.next_sample().unwrap(),
                c.next_sample().unwrap(),
            );
            assert!(x.iter().zip(&y).all(|(p, q)| p.to_bits() == q.to_bits()));
            differs |= x != z;
        }
        assert!(differs, "{dataset}: seeds 42 and 43 gave the same stream");
    }
}

#[test]
fn full_scale_plan_enumerates_every_trial() {
    let policies = fnnsom::harness::geometric_grid(0.01, 1.0, 19)
        .unwrap()
        .into_iter()
        .map(|c| RatePolicy::fnnsom(c).unwrap())
        .collect();
    let grid = SweepGrid {
        datasets: vec![
            Dataset::Square,
            Dataset::clusters_2d(),
            Dataset::SphericalShell,
            Dataset::Dispersion3D,
        ],
        map_sides: vec![10, 20, 30],
        policies,
        init_modes: vec![InitMode::Ric],
        iterations: 3000,
        samples_per_iteration_factor: 10,
        record_every: 50,
        ema_decay: 0.999,
        repeats: 100,
        base_seed: 2024,
    };
    let plan = grid.plan();
    assert_eq!(plan.trial_count(), 22_800);
    let trials = plan.trials();
    assert_eq!(trials.len(), 22_800);
    let mut seeds: Vec<u64> = trials.iter().map(|t| t.seed).collect();
    seeds.sort_unstable();
    seeds.dedup();
    assert_eq!(seeds.len(), 22_800);
    assert_eq!(trials[101].seed, derive_seed(2024, 1, 1));
    assert!(trials.iter().all(|t| t.validate().is_ok()));
}

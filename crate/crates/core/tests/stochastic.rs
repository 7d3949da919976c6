use proptest::prelude::*;
use ucp_lab::discretize::{assemble_laplacian, classify_grid};
use ucp_lab::geometry::{AxisBox, BallUnion, ConvexDomain, HalfSpace};
use ucp_lab::spectral::{apply_heat, HeatActionParams};
use ucp_lab::stochastic::*;
use ucp_lab::Error;

fn whole_space(hw: f64) -> ConvexDomain<f64> {
    ConvexDomain::whole_space(AxisBox::centered_cube(3, hw).unwrap()).unwrap()
}

fn ball(r: f64) -> BallUnion<f64> {
    BallUnion::new(3, vec![vec![0.0; 3]], vec![r]).unwrap()
}

fn joint_ci(a: &MCEstimate, b: &MCEstimate) -> f64 {
    (a.ci_halfwidth.powi(2) + b.ci_halfwidth.powi(2)).sqrt()
}

#[test]
fn nothing_to_hit() {
    let g = ConvexDomain::new_box(vec![0.0; 3], vec![1.0; 3]).unwrap();
    let cfg = PathConfig::new(1e-2, 50, 1, vec![0.5; 3]);
    let out = simulate_paths(&g, &BallUnion::empty(3), &BallUnion::empty(3), &cfg).unwrap();
    assert_eq!(out.len(), 50);
    assert!(out.iter().all(|o| !o.hit_s && o.occupation_t == 0.0 && o.first_hit.is_none()));
    assert!(out.iter().all(|o| o.end.iter().all(|&x| (0.0..=1.0).contains(&x))));
}

#[test]
fn start_inside_s_hits_at_time_zero() {
    let g = whole_space(5.0);
    let cfg = PathConfig::new(1e-3, 40, 2, vec![0.05, 0.0, 0.0]);
    let out = simulate_paths(&g, &ball(0.2), &ball(0.5), &cfg).unwrap();
    assert!(out.iter().all(|o| o.hit_s && o.first_hit == Some(0.0)));
}

#[test]
fn halfspace_domains_are_unsupported() {
    let planes = vec![HalfSpace::new(vec![1.0, 0.0, 0.0], 1.0).unwrap()];
    let g = ConvexDomain::new_halfspaces(planes, vec![0.0; 3], Some((vec![0.0; 3], 5.0))).unwrap();
    let cfg = PathConfig::new(1e-2, 5, 1, vec![0.0; 3]);
    assert!(matches!(simulate_paths(&g, &ball(0.2), &ball(0.4), &cfg), Err(Error::UnsupportedReflection(_))));
}

#[test]
fn rejects_bad_configs() {
    let g = whole_space(5.0);
    let s = ball(0.2);
    let b = ball(0.4);
    assert!(simulate_paths(&g, &s, &b, &PathConfig::new(0.0, 5, 1, vec![1.0; 3])).is_err());
    assert!(simulate_paths(&g, &s, &b, &PathConfig::new(1e-2, 0, 1, vec![1.0; 3])).is_err());
    assert!(simulate_paths(&g, &s, &b, &PathConfig::new(1e-2, 5, 1, vec![1.0; 2])).is_err());
    assert!(simulate_paths(&g, &s, &b, &PathConfig::new(1e-2, 5, 1, vec![9.0; 3])).is_err());
    assert!(simulate_paths(&g, &s, &b, &PathConfig::new(0.3, 5, 1, vec![1.0; 3])).is_err());
    // dt too coarse for the wall.
    let cfg = PathConfig::new(1e-2, 5, 1, vec![1.0; 3]);
    assert!(estimate_hit_and_run(&g, &s, &b, 0.2, &[0.5], &cfg).is_err());
}

#[test]
fn hitting_probability_is_dt_consistent_and_below_the_transience_limit() {
    // Distance 1 from a ball of radius 0.2: P(ever hit) = 0.2 in d = 3.
    let g = whole_space(10.0);
    let s = ball(0.2);
    let coarse = PathConfig::new(1e-4, 3000, 7, vec![1.0, 0.0, 0.0]);
    let fine = PathConfig { dt: 1e-5, seed: 8, ..coarse.clone() };
    let frac = |cfg: &PathConfig<f64>| {
        let out = simulate_paths(&g, &s, &BallUnion::empty(3), cfg).unwrap();
        MCEstimate::proportion(out.iter().filter(|o| o.hit_s).count(), out.len(), cfg.seed)
    };
    let pc = frac(&coarse);
    let pf = frac(&fine);
    assert!((pc.value - pf.value).abs() <= joint_ci(&pc, &pf), "{pc:?} vs {pf:?}");
    assert!(pf.value - pf.ci_halfwidth <= 0.2);
    // Reflection-principle value for radial BM in d = 3 at t = 1:
    // (rho / r) erfc((r - rho) / sqrt(2)).
    let exact = 0.2 * libm_erfc(0.8 / 2f64.sqrt());
    assert!((pf.value - exact).abs() <= 1.5 * pf.ci_halfwidth + 0.01, "{} vs {exact}", pf.value);
}

fn libm_erfc(x: f64) -> f64 {
    // Abramowitz-Stegun 7.1.26 is too coarse here; integrate instead.
    let n = 20000;
    let upper = x + 10.0;
    let h = (upper - x) / n as f64;
    let mut s = 0.0;
    for i in 0..=n {
        let t = x + i as f64 * h;
        let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * (-t * t).exp();
    }
    s * h / 3.0 * 2.0 / std::f64::consts::PI.sqrt()
}

#[test]
fn vacuous_alpha_gives_plain_hitting_probability() {
    let g = whole_space(6.0);
    let s = ball(0.3);
    let b = ball(0.6);
    let cfg = PathConfig::new(8e-4, 2000, 3, vec![0.9, 0.0, 0.0]);
    let r = estimate_hit_and_run(&g, &s, &b, 0.3, &[1.0], &cfg).unwrap();
    let hits = simulate_paths(&g, &s, &b, &cfg).unwrap().iter().filter(|o| o.hit_s).count();
    assert_eq!(r[0].estimate.value, hits as f64 / 2000.0);
}

#[test]
fn empty_obstacle_gives_zero() {
    let g = whole_space(6.0);
    let cfg = PathConfig::new(1e-3, 500, 3, vec![0.9, 0.0, 0.0]);
    let r = estimate_hit_and_run(&g, &BallUnion::empty(3), &ball(0.6), 0.5, &[0.01, 0.5], &cfg).unwrap();
    assert!(r.iter().all(|e| e.estimate.value == 0.0));
}

#[test]
fn thick_wall_respects_lemma_bound() {
    let g = whole_space(8.0);
    let s = ball(0.5);
    let b = ball(1.5);
    let cfg = PathConfig::new(1e-4, 20_000, 11, vec![1.5, 0.0, 0.0]);
    let r = estimate_hit_and_run(&g, &s, &b, 1.0, &[0.01], &cfg).unwrap();
    assert!((r[0].bound - 0.0218406).abs() < 1e-6);
    assert!(r[0].estimate.value + r[0].estimate.ci_halfwidth <= r[0].bound, "{:?}", r[0]);
}

#[test]
fn feynman_kac_trivial_cases() {
    let g = ConvexDomain::new_box(vec![0.0; 3], vec![1.0; 3]).unwrap();
    let cfg = PathConfig::new(1e-2, 300, 5, vec![0.5; 3]);
    let e = feynman_kac(&g, &BallUnion::empty(3), &BallUnion::empty(3), 0.0, |_| 1.0, &cfg, false).unwrap();
    assert_eq!(e.value, 1.0);
    assert_eq!(e.ci_halfwidth, 0.0);
    let s = BallUnion::new(3, vec![vec![0.5; 3]], vec![0.1]).unwrap();
    let e = feynman_kac(&g, &s, &s, 3.0, |x| x[0] + 2.0, &cfg, true).unwrap();
    assert_eq!(e.value, 0.0);
    assert!(feynman_kac(&g, &s, &s, 3.0, |_| f64::NAN, &cfg, false).is_err());
}

/// `(e^{-H_beta} f)(x0)` on the grid of spacing `h` over the unit box.
fn grid_heat_value(h: f64, b: &BallUnion<f64>, f: impl Fn(&[f64]) -> f64, x0: &[f64]) -> f64 {
    let g = ConvexDomain::new_box(vec![0.0; 3], vec![1.0; 3]).unwrap();
    let grid = classify_grid(&g, &BallUnion::empty(3), h, None).unwrap();
    let op = assemble_laplacian(&grid, 10.0, b).unwrap();
    let fv: Vec<f64> = (0..grid.n_dofs()).map(|i| f(&grid.dof_coords(i))).collect();
    let v = apply_heat(&op, &HeatActionParams::new(1.0, 1e-10), &fv).unwrap().v;
    let node = (0..grid.n_dofs())
        .find(|&i| grid.dof_coords(i).iter().zip(x0).all(|(a, b)| (a - b).abs() < 1e-9))
        .expect("x0 is a grid node");
    v[node]
}

#[test]
fn feynman_kac_matches_discrete_heat_semigroup() {
    // Box [0,1]^3 on a 20^3 grid, potential 10 on the centered ball of
    // radius 0.25, t = 1. The discretization allowance is the h-refinement
    // change of the grid value, with a 1.5 safety factor.
    let b = BallUnion::new(3, vec![vec![0.5; 3]], vec![0.25]).unwrap();
    let f = |x: &[f64]| 1.0 + x[0] * x[0];
    let h = 1.0 / 19.0;
    let x0 = vec![4.0 * h, 9.0 * h, 9.0 * h];
    let coarse = grid_heat_value(h, &b, f, &x0);
    let fine = grid_heat_value(h / 2.0, &b, f, &x0);
    let allowance = 1.5 * (coarse - fine).abs();
    let g = ConvexDomain::new_box(vec![0.0; 3], vec![1.0; 3]).unwrap();
    let cfg = PathConfig::new(2.5e-4, 4000, 21, x0);
    let mc = feynman_kac(&g, &BallUnion::empty(3), &b, 10.0, f, &cfg, false).unwrap();
    assert!((mc.value - coarse).abs() <= mc.ci_halfwidth + allowance, "mc {mc:?} vs grid {coarse} (refined {fine})");
    assert!(allowance < 0.15 * coarse);
}

#[test]
fn gap_with_zero_beta_is_the_hitting_probability() {
    let g = ConvexDomain::new_ball(vec![0.0; 3], 2.0).unwrap();
    let s = ball(0.25);
    let b = ball(0.75);
    let cfg = PathConfig::new(5e-4, 1500, 4, vec![0.75, 0.0, 0.0]);
    let r = estimate_semigroup_gap(&g, &s, &b, 0.5, 0.0, &[vec![0.75, 0.0, 0.0]], &cfg).unwrap();
    let hits = simulate_paths(&g, &s, &b, &cfg).unwrap().iter().filter(|o| o.hit_s).count();
    assert!((r.max.value - hits as f64 / 1500.0).abs() < 1e-12);
    assert!(r.max.value <= 1.0);
}

#[test]
fn gap_decreases_in_beta_and_respects_bound() {
    let g = ConvexDomain::new_ball(vec![0.0; 3], 2.0).unwrap();
    let s = ball(0.25);
    let b = ball(0.75);
    let starts = vec![vec![0.75, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, -1.5]];
    let cfg = PathConfig::new(1e-3, 2000, 9, vec![0.0; 3]);
    let mut prev = f64::INFINITY;
    for beta in [10.0, 100.0, 400.0] {
        let r = estimate_semigroup_gap(&g, &s, &b, 0.5, beta, &starts, &cfg).unwrap();
        assert!(r.max.value <= prev);
        prev = r.max.value;
        if beta == 400.0 {
            assert!((r.bound - 0.3588).abs() < 5e-4, "{}", r.bound);
            assert!(r.max.value - r.max.ci_halfwidth <= r.bound);
        }
    }
}

#[test]
fn outcomes_do_not_depend_on_thread_count() {
    let g = whole_space(3.0);
    let cfg = PathConfig::new(1e-3, 64, 99, vec![0.7, 0.1, 0.0]);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate_paths(&g, &ball(0.3), &ball(0.6), &cfg).unwrap())
    };
    let a = run(1);
    let b = run(3);
    assert_eq!(a, b);
    assert!(a.iter().zip(&b).all(|(x, y)| x.end.iter().zip(&y.end).all(|(p, q)| p.to_bits() == q.to_bits())));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn outcomes_are_in_range(seed in 0u64..1000, r in 0.1f64..0.5, x in 0.0f64..1.5) {
        let g = ConvexDomain::new_ball(vec![0.0; 3], 2.0).unwrap();
        let cfg = PathConfig::new(1e-3, 16, seed, vec![x, 0.0, 0.0]);
        let out = simulate_paths(&g, &ball(r), &ball(r + 0.2), &cfg).unwrap();
        for o in &out {
            prop_assert!(o.occupation_t >= 0.0 && o.occupation_t <= 1.0 + 1e-12);
            prop_assert!(o.end.iter().map(|v| v * v).sum::<f64>().sqrt() <= 2.0 + 1e-12);
            if let Some(t) = o.first_hit {
                prop_assert!(o.hit_s && t <= 1.0 + 1e-12);
            }
        }
        let e = estimate_hit_and_run(&g, &ball(r), &ball(r + 0.2), 0.2, &[0.3], &PathConfig::new(4e-4, 16, seed, vec![x, 0.0, 0.0])).unwrap();
        prop_assert!((0.0..=1.0).contains(&e[0].estimate.value) && e[0].estimate.ci_halfwidth >= 0.0);
    }

    #[test]
    fn adding_balls_never_lowers_hits(seed in 0u64..1000, cx in -1.0f64..1.0) {
        let g = whole_space(3.0);
        let cfg = PathConfig::new(1e-3, 32, seed, vec![0.0, 1.0, 0.0]);
        let small = ball(0.3);
        let mut big = small.clone();
        big.push(vec![cx, -0.5, 0.4], 0.25).unwrap();
        let a = simulate_paths(&g, &small, &BallUnion::empty(3), &cfg).unwrap();
        let b = simulate_paths(&g, &big, &BallUnion::empty(3), &cfg).unwrap();
        for (p, q) in a.iter().zip(&b) {
            prop_assert!(!p.hit_s || q.hit_s);
        }
    }
}

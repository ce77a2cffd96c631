use proptest::prelude::*;
use svie_core::analysis::{bihari_bound, bihari_g, psi_recursion};
use svie_core::audit::{audit_linear_growth, audit_modulus, DomainSampler};
use svie_core::coefficients::{deterministic_ode, example_coefficients, linear_test};
use svie_core::solver::map_paths;
use svie_core::{
    direct_recursion, picard_solve, CoefficientSet, LevyMeasure, Modulus, NoisePath, SeedLineage,
    TimeGrid,
};

fn volterra_set(a: f64, b: f64, c: f64) -> CoefficientSet {
    let nu = LevyMeasure::log_normal(1.5).unwrap();
    let m1 = nu.marks().moment(1);
    CoefficientSet::builder("random", nu)
        .drift(move |t, s, x| a * x * (s - t).exp())
        .diffusion(move |t, s, x| b * (x * (t - s)).cos())
        .jump(move |_, _, x, xi| c * xi * x.tanh())
        .compensator(move |_, _, x| 1.5 * m1 * c * x.tanh())
        .initial(|t| 1.0 + t)
        .build()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn grid_points_are_uniform(horizon in 1e-3f64..50.0, steps in 1usize..400) {
        let g = TimeGrid::new(horizon, steps).unwrap();
        let p = g.points();
        prop_assert_eq!(p.len(), steps + 1);
        prop_assert!(p.windows(2).all(|w| w[1] > w[0]));
        prop_assert_eq!(*p.last().unwrap(), horizon);
        for (i, t) in p.iter().enumerate().take(steps) {
            prop_assert_eq!(*t, i as f64 * g.dt());
        }
    }

    #[test]
    fn picard_tolerance_zero_reproduces_direct_recursion(
        a in -1.0f64..1.0, b in -1.0f64..1.0, c in 0.0f64..0.5,
        n in 1usize..24, seed in any::<u64>(),
    ) {
        let set = volterra_set(a, b, c);
        let noise = NoisePath::sample(&TimeGrid::new(0.7, n).unwrap(), set.measure(), SeedLineage::new(seed, 0));
        let direct = direct_recursion(&set, &noise).unwrap();
        let run = picard_solve(&set, &noise, 0.0, n + 1).unwrap();
        prop_assert!(run.converged);
        prop_assert_eq!(run.solution().sup_distance(&direct), 0.0);
        prop_assert_eq!(*run.sup_diffs.last().unwrap(), 0.0);
    }

    #[test]
    fn jumps_are_irrelevant_without_jump_kernel(a in -1.0f64..1.0, seed in any::<u64>()) {
        let set = CoefficientSet::builder("nojump", LevyMeasure::log_normal(5.0).unwrap())
            .drift(move |_, _, x| a * x)
            .diffusion(|_, _, x| 0.5 * x)
            .initial(|_| 1.0)
            .build();
        let noise = NoisePath::sample(&TimeGrid::new(1.0, 16).unwrap(), set.measure(), SeedLineage::new(seed, 3));
        let with = direct_recursion(&set, &noise).unwrap();
        let without = direct_recursion(&set, &noise.without_jumps()).unwrap();
        prop_assert_eq!(with, without);
    }

    #[test]
    fn growth_estimate_monotone_in_samples(extra in 1usize..200, base in 1usize..200, seed in any::<u64>()) {
        let ex = example_coefficients(0.3, 2.0).unwrap();
        let sampler = DomainSampler::new(1.0, 5.0, seed);
        let small = audit_linear_growth(&ex, &sampler, base).unwrap();
        let large = audit_linear_growth(&ex, &sampler, base + extra).unwrap();
        prop_assert!(large.estimated_constant >= small.estimated_constant);
    }

    #[test]
    fn g_is_strictly_increasing(v1 in 1e-6f64..1e3, factor in 1.0001f64..100.0) {
        for m in [Modulus::linear(1.0).unwrap(), Modulus::log_linear(1.0).unwrap()] {
            let g1 = bihari_g(&m, v1, 1.0).unwrap();
            let g2 = bihari_g(&m, v1 * factor, 1.0).unwrap();
            prop_assert!(g2 > g1);
        }
    }

    #[test]
    fn psi_chain_is_monotone(c3 in 0.01f64..10.0, frac in 0.05f64..1.0, k in 2usize..20) {
        for m in [Modulus::linear(1.0).unwrap(), Modulus::log_linear(1.0).unwrap(), Modulus::power(0.5, 1.0).unwrap()] {
            let v = svie_core::analysis::smallness_horizon(c3, &m, 2.0) * frac;
            let psi = psi_recursion(c3, &m, v, 64, k).unwrap();
            prop_assert!(psi.monotone(), "{m}: {:?}", psi.first_violation());
            for kk in 1..psi.len() {
                for (a, b) in psi.curve(kk + 1).iter().zip(psi.curve(kk)) {
                    prop_assert!(*a >= 0.0 && *a <= *b * (1.0 + 1e-12));
                }
            }
        }
    }
}

#[test]
fn gronwall_grid_matches_closed_form() {
    let m = Modulus::linear(1.0).unwrap();
    for y0 in [0.1, 1.0, 10.0] {
        for z in [0.0, 0.5, 1.0, 2.0, 3.3, 4.0, 5.0] {
            let b = bihari_bound(y0, z, &m).unwrap();
            let exact = y0 * f64::exp(z);
            assert!(
                (b - exact).abs() <= 1e-6 * exact,
                "y0={y0} z={z}: {b} vs {exact}"
            );
        }
    }
}

#[test]
fn ode_observed_order_is_one() {
    let ode = deterministic_ode();
    let err = |n: usize| {
        let p = direct_recursion(&ode, &NoisePath::quiet(&TimeGrid::new(1.0, n).unwrap())).unwrap();
        (p.terminal() - 0.5f64.exp()).abs()
    };
    for n in [64, 128, 256] {
        let order = (err(n) / err(2 * n)).log2();
        assert!((0.8..=1.2).contains(&order), "n={n}: order {order}");
    }
    // the scheme is Euler for this kernel: (1 + Δt/2)^n
    let n = 10;
    let p = direct_recursion(&ode, &NoisePath::quiet(&TimeGrid::new(1.0, n).unwrap())).unwrap();
    assert!((p.terminal() - 1.05f64.powi(10)).abs() < 1e-14);
}

#[test]
fn noise_is_independent_of_scheduling() {
    let ex = example_coefficients(0.1, 2.0).unwrap();
    let g = TimeGrid::new(0.5, 8).unwrap();
    let sequential: Vec<NoisePath> = (0..64)
        .rev()
        .map(|p| NoisePath::sample(&g, ex.measure(), SeedLineage::new(5, p)))
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    for threads in [1, 3] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        let parallel = pool.install(|| map_paths(&ex, &g, 64, 5, |_, noise| noise.clone()));
        assert_eq!(parallel, sequential);
    }
}

#[test]
fn lipschitz_set_passes_linear_modulus_with_squared_constant() {
    let lt = linear_test(2.0).unwrap();
    let m = lt.modulus().unwrap();
    let report = audit_modulus(&lt, &m, &DomainSampler::new(1.0, 10.0, 4), 600).unwrap();
    assert!(report.pass, "{report:?}");
    let growth = audit_linear_growth(&lt, &DomainSampler::new(1.0, 10.0, 4), 600).unwrap();
    assert!(growth.pass);
}

#[test]
fn compensator_routes_agree_for_linear_test() {
    let lt = linear_test(2.0).unwrap();
    for x in [-4.0, -0.1, 0.3, 7.0] {
        let a = lt.compensator_integral(0.2, 0.1, x).unwrap();
        let b = lt.quadrature_compensator(0.2, 0.1, x).unwrap();
        assert!((a - b).abs() <= 1e-6 * a.abs());
    }
}

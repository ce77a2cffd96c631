//! Monte Carlo checks that need large ensembles.

use svie_core::analysis::{
    cauchy_diff, doob_check, martingale_components, moment_check, psi_recursion, running_sample,
    CauchyConstants, CauchyOrders, DEFAULT_DOOB_SLACK, STDERR_SLACK,
};
use svie_core::audit::{audit_linear_growth, DomainSampler};
use svie_core::coefficients::{
    brownian_martingale, example_coefficients, jump_martingale, linear_test,
};
use svie_core::solver::map_paths;
use svie_core::{
    direct_recursion, ensemble_simulate, picard_solve, NoisePath, SeedLineage, TimeGrid,
};

#[test]
fn compensated_jump_term_has_zero_mean() {
    let jm = jump_martingale(2.0).unwrap();
    let g = TimeGrid::new(1.0, 8).unwrap();
    let ens = ensemble_simulate(&jm, &g, 100_000, 31).unwrap();
    let terminal: Vec<f64> = ens.survivors().map(|(_, p)| p.terminal()).collect();
    let e = svie_core::analysis::Estimate::from_samples(&terminal);
    assert!(e.mean.abs() <= STDERR_SLACK * e.stderr, "{e:?}");
}

#[test]
fn doob_passes_on_generated_martingales() {
    let g = TimeGrid::new(1.0, 16).unwrap();
    for set in [brownian_martingale(), jump_martingale(2.0).unwrap()] {
        let ens = ensemble_simulate(&set, &g, 100_000, 8).unwrap();
        let samples: Vec<_> = ens
            .survivors()
            .map(|(_, p)| running_sample(p.values()))
            .collect();
        let r = doob_check(&samples, 2.0, DEFAULT_DOOB_SLACK).unwrap();
        assert!(r.pass, "{}: {r:?}", set.name());
        assert!(r.ratio >= 1.0);
    }
}

#[test]
fn doob_passes_on_model_components() {
    let lt = linear_test(2.0).unwrap();
    let g = TimeGrid::new(1.0, 32).unwrap();
    let pairs = map_paths(&lt, &g, 20_000, 3, |_, noise| {
        let path = direct_recursion(&lt, noise).unwrap();
        martingale_components(&lt, noise, &path).unwrap()
    });
    let (b, j): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    assert!(doob_check(&b, 2.0, DEFAULT_DOOB_SLACK).unwrap().pass);
    assert!(doob_check(&j, 2.0, DEFAULT_DOOB_SLACK).unwrap().pass);
}

#[test]
fn example_moment_envelope() {
    let ex = example_coefficients(0.1, 2.0).unwrap();
    let g = TimeGrid::new(0.5, 64).unwrap();
    let audit = audit_linear_growth(&ex, &DomainSampler::new(0.5, 10.0, 1), 2000).unwrap();
    let ens = ensemble_simulate(&ex, &g, 4000, 12).unwrap();
    let r = moment_check(&ens, &ex, audit.estimated_constant).unwrap();
    assert!(r.all_pass());
    assert!(r.estimates[0].mean == 1.0);
}

#[test]
fn linear_test_moment_envelope_is_meaningful() {
    let lt = linear_test(2.0).unwrap();
    let g = TimeGrid::new(1.0, 64).unwrap();
    let ens = ensemble_simulate(&lt, &g, 4000, 2).unwrap();
    let r = moment_check(&ens, &lt, lt.growth_constant().unwrap()).unwrap();
    // 8e^{1}: finite and within a couple of orders of the estimates
    assert!((r.bound - 8.0 * 1f64.exp()).abs() < 1e-12);
    assert!(r.all_pass());
}

#[test]
fn cauchy_curve_below_line_and_psi() {
    let lt = linear_test(2.0).unwrap();
    let g = TimeGrid::new(0.25, 32).unwrap();
    let m = lt.modulus().unwrap();
    let consts = CauchyConstants::derive(lt.growth_constant().unwrap(), &m, 0.25, 1.0).unwrap();
    let orders = CauchyOrders {
        k: 1,
        m: 1,
        k_max: 33,
    };
    let r = cauchy_diff(&lt, &g, 1000, 6, orders, consts).unwrap();
    assert!(r.all_pass());
    assert!(r.estimates.windows(2).all(|w| w[1].mean >= w[0].mean));
    let v = svie_core::analysis::smallness_horizon(consts.c3, &m, 0.25);
    let psi = psi_recursion(consts.c3, &m, v, 32, 5).unwrap();
    assert!(r.dominated_by(&psi).unwrap().into_iter().all(|ok| ok));
}

#[test]
fn sup_diffs_eventually_non_increasing() {
    let ex = example_coefficients(0.1, 2.0).unwrap();
    let g = TimeGrid::new(0.1, 32).unwrap();
    for p in 0..5 {
        let noise = NoisePath::sample(&g, ex.measure(), SeedLineage::new(100, p));
        let run = picard_solve(&ex, &noise, 0.0, 33).unwrap();
        assert!(run.converged);
        let d = &run.sup_diffs;
        // once the iterates start contracting they keep doing so
        let tail_start = d.iter().position(|&x| x < 1e-3).unwrap();
        assert!(d[tail_start..].windows(2).all(|w| w[1] <= w[0]), "{d:?}");
    }
}

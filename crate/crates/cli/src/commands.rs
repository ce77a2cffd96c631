//! The `simulate`, `picard` and `verify` subcommands.
//!
//! Each command writes its artifacts into the configured output directory and
//! returns the process exit status: 0 when everything passed or converged,
//! 1 when Picard iteration did not converge, 2 when a check failed.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use serde::Serialize;
use svie_core::analysis::{
    cauchy_diff, doob_check, lemma32_bound, martingale_components, moment_check, psi_recursion,
    smallness_horizon, CauchyConstants, CauchyOrders, Estimate, DEFAULT_DOOB_SLACK,
};
use svie_core::audit::{audit_linear_growth, audit_modulus, DomainSampler, OSGOOD_RATIO_THRESHOLD};
use svie_core::solver::{map_paths, PathFailure};
use svie_core::{
    direct_recursion, ensemble_simulate, picard_solve, CoefficientSet, Ensemble, NoisePath,
    SeedLineage, SvieError,
};

use crate::config::RunConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_CONVERGED: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;

fn create_out(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// The config as echoed into JSON reports. The output directory is left out so
/// that reports written to different places compare byte-identical.
fn config_echo(cfg: &RunConfig) -> serde_json::Value {
    let mut value = serde_json::to_value(cfg).expect("config serializes");
    if let Some(map) = value.as_object_mut() {
        map.remove("output_dir");
    }
    value
}

fn audited_growth(
    cfg: &RunConfig,
    coeffs: &CoefficientSet,
) -> anyhow::Result<svie_core::audit::GrowthAudit> {
    let sampler = DomainSampler::new(cfg.horizon, cfg.audit_state_bound, cfg.master_seed);
    Ok(audit_linear_growth(coeffs, &sampler, cfg.audit_samples)?)
}

#[derive(Serialize)]
struct MomentRow {
    t: f64,
    mean: f64,
    second_moment: f64,
    second_moment_stderr: f64,
}

#[derive(Serialize)]
struct ExplodedPath {
    path_id: u64,
    error: String,
}

#[derive(Serialize)]
struct SimulateSummary<'a> {
    coefficient_set: &'a str,
    master_seed: u64,
    paths: usize,
    surviving_paths: usize,
    exploded_count: usize,
    exploded: Vec<ExplodedPath>,
    declared_growth_constant: Option<f64>,
    audited_growth_constant: f64,
    lemma32_bound: f64,
    moments: Vec<MomentRow>,
    config: serde_json::Value,
}

fn write_paths_csv(path: &Path, ensemble: &Ensemble) -> anyhow::Result<()> {
    let file = fs::File::create(path).with_context(|| format!("writing {}", path.display()))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "path_id,t,x")?;
    let times = ensemble.grid().points();
    for (id, p) in ensemble.survivors() {
        for (t, x) in times.iter().zip(p.values()) {
            writeln!(out, "{id},{t:.16e},{x:.16e}")?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Simulates the ensemble and writes `paths.csv` and `summary.json`.
pub fn cmd_simulate(cfg: &RunConfig) -> anyhow::Result<i32> {
    let coeffs = cfg.coefficients()?;
    let grid = cfg.grid()?;
    let out = &cfg.output_dir;
    create_out(out)?;
    let ensemble = ensemble_simulate(&coeffs, &grid, cfg.paths, cfg.master_seed)?;
    write_paths_csv(&out.join("paths.csv"), &ensemble)?;

    let growth = audited_growth(cfg, &coeffs)?;
    let phi_t = coeffs.initial(cfg.horizon);
    let bound = lemma32_bound(growth.estimated_constant, cfg.horizon, phi_t * phi_t)?;
    let survivors: Vec<&[f64]> = ensemble.survivors().map(|(_, p)| p.values()).collect();
    let mut first = vec![0.0; survivors.len()];
    let mut second = vec![0.0; survivors.len()];
    let moments = grid
        .points()
        .into_iter()
        .enumerate()
        .map(|(i, t)| {
            for (k, p) in survivors.iter().enumerate() {
                first[k] = p[i];
                second[k] = p[i] * p[i];
            }
            let m1 = Estimate::from_samples(&first);
            let m2 = Estimate::from_samples(&second);
            MomentRow {
                t,
                mean: m1.mean,
                second_moment: m2.mean,
                second_moment_stderr: m2.stderr,
            }
        })
        .collect();
    let exploded: Vec<ExplodedPath> = ensemble
        .failures()
        .map(|f| ExplodedPath {
            path_id: f.path_index,
            error: f.error.to_string(),
        })
        .collect();
    for f in &exploded {
        log::warn!("path {} exploded: {}", f.path_id, f.error);
    }
    let summary = SimulateSummary {
        coefficient_set: coeffs.name(),
        master_seed: cfg.master_seed,
        paths: cfg.paths,
        surviving_paths: survivors.len(),
        exploded_count: exploded.len(),
        exploded,
        declared_growth_constant: coeffs.growth_constant(),
        audited_growth_constant: growth.estimated_constant,
        lemma32_bound: bound,
        moments,
        config: config_echo(cfg),
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct PicardSummary {
    master_seed: u64,
    path_id: u64,
    tolerance: f64,
    k_max: usize,
    converged: bool,
    iterations: usize,
    final_sup_diff: Option<f64>,
    distance_to_direct: f64,
}

/// Runs Picard iteration on path 0 and writes `picard.csv` and `picard.json`.
pub fn cmd_picard(cfg: &RunConfig) -> anyhow::Result<i32> {
    let coeffs = cfg.coefficients()?;
    let grid = cfg.grid()?;
    let out = &cfg.output_dir;
    create_out(out)?;
    let noise = NoisePath::sample(
        &grid,
        coeffs.measure(),
        SeedLineage::new(cfg.master_seed, 0),
    );
    let run = picard_solve(&coeffs, &noise, cfg.picard_tolerance, cfg.k_max())?;
    let direct = direct_recursion(&coeffs, &noise)?;

    let mut csv = String::from("k,sup_diff\n");
    for (k, d) in run.sup_diffs.iter().enumerate() {
        csv.push_str(&format!("{},{}\n", k + 1, d));
    }
    let csv_path = out.join("picard.csv");
    fs::write(&csv_path, csv).with_context(|| format!("writing {}", csv_path.display()))?;

    let summary = PicardSummary {
        master_seed: cfg.master_seed,
        path_id: 0,
        tolerance: cfg.picard_tolerance,
        k_max: cfg.k_max(),
        converged: run.converged,
        iterations: run.iterations_used,
        final_sup_diff: run.sup_diffs.last().copied(),
        distance_to_direct: run.solution().sup_distance(&direct),
    };
    write_json(&out.join("picard.json"), &summary)?;
    if run.converged {
        Ok(EXIT_OK)
    } else {
        log::warn!(
            "Picard iteration did not converge within {} iterations",
            cfg.k_max()
        );
        Ok(EXIT_NOT_CONVERGED)
    }
}

/// One line of `verify.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: &'static str,
    pub value: Option<f64>,
    pub bound: Option<f64>,
    pub stderr: Option<f64>,
    /// The comparison that `pass` reports on.
    pub relation: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl CheckRecord {
    fn new(name: &'static str, relation: &'static str) -> Self {
        Self {
            name,
            value: None,
            bound: None,
            stderr: None,
            relation,
            pass: false,
            detail: String::new(),
        }
    }

    fn failed(name: &'static str, relation: &'static str, err: &SvieError) -> Self {
        log::error!("check {name} failed with error: {err}");
        Self {
            detail: format!("error: {err}"),
            ..Self::new(name, relation)
        }
    }
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    coefficient_set: &'a str,
    master_seed: u64,
    all_pass: bool,
    checks: &'a [CheckRecord],
    config: serde_json::Value,
}

/// Runs every check and collects one record each. Errors inside a check become
/// a failing record naming the error.
pub fn run_checks(cfg: &RunConfig) -> anyhow::Result<Vec<CheckRecord>> {
    let coeffs = cfg.coefficients()?;
    let grid = cfg.grid()?;
    let modulus = cfg.modulus(&coeffs)?;
    let sampler = DomainSampler::new(cfg.horizon, cfg.audit_state_bound, cfg.master_seed);
    let mut records = Vec::new();

    const GROWTH_REL: &str = "estimate <= declared constant";
    let growth = match audit_linear_growth(&coeffs, &sampler, cfg.audit_samples) {
        Ok(g) => {
            records.push(CheckRecord {
                value: Some(g.estimated_constant),
                bound: g.supplied_constant,
                pass: g.pass,
                detail: match g.worst {
                    Some(w) => format!("worst at t={}, s={}, x={}", w.t, w.s, w.x),
                    None => String::new(),
                },
                ..CheckRecord::new("linear_growth", GROWTH_REL)
            });
            Some(g.estimated_constant)
        }
        Err(e) => {
            records.push(CheckRecord::failed("linear_growth", GROWTH_REL, &e));
            None
        }
    };

    const CONT_REL: &str = "max(squared differences) - lambda*kappa(|x-y|^2) <= 0";
    const SHAPE_REL: &str = "kappa(0)=0, positive, non-decreasing, concave";
    const OSGOOD_REL: &str = "tail ratio of integral of 1/kappa >= threshold";
    match audit_modulus(&coeffs, &modulus, &sampler, cfg.audit_samples) {
        Ok(a) => {
            records.push(CheckRecord {
                value: Some(a.worst_excess),
                bound: Some(0.0),
                pass: a.continuity_pass,
                detail: match a.worst {
                    Some(w) => format!(
                        "modulus {modulus}, worst at t={}, s={}, x={}, y={}",
                        w.t, w.s, w.x, w.y
                    ),
                    None => format!("modulus {modulus}"),
                },
                ..CheckRecord::new("modulus_continuity", CONT_REL)
            });
            let s = &a.shape;
            let failures = [s.zero_at_origin, s.positive, s.monotone, s.concave]
                .iter()
                .filter(|&&b| !b)
                .count();
            records.push(CheckRecord {
                value: Some(failures as f64),
                bound: Some(0.0),
                pass: s.pass(),
                detail: s.violation.clone().unwrap_or_default(),
                ..CheckRecord::new("modulus_shape", SHAPE_REL)
            });
            let claimed = modulus.osgood_divergent();
            records.push(CheckRecord {
                value: Some(a.osgood.tail_ratio),
                bound: Some(OSGOOD_RATIO_THRESHOLD),
                pass: a.osgood.divergent && claimed,
                detail: format!(
                    "probe divergent: {}, shape claims divergence: {claimed}",
                    a.osgood.divergent
                ),
                ..CheckRecord::new("modulus_osgood", OSGOOD_REL)
            });
        }
        Err(e) => {
            for (name, rel) in [
                ("modulus_continuity", CONT_REL),
                ("modulus_shape", SHAPE_REL),
                ("modulus_osgood", OSGOOD_REL),
            ] {
                records.push(CheckRecord::failed(name, rel, &e));
            }
        }
    }

    let before = std::time::Instant::now();
    let solved = map_paths(&coeffs, &grid, cfg.paths, cfg.master_seed, |p, noise| {
        direct_recursion(&coeffs, noise)
            .and_then(|path| martingale_components(&coeffs, noise, &path).map(|m| (path, m)))
            .map_err(|error| PathFailure {
                path_index: p,
                error,
            })
    });
    log::info!("solved {} paths in {:.2?}", cfg.paths, before.elapsed());
    let mut brownian = Vec::with_capacity(solved.len());
    let mut jump = Vec::with_capacity(solved.len());
    let outcomes = solved
        .into_iter()
        .map(|o| {
            o.map(|(path, (b, j))| {
                brownian.push(b);
                jump.push(j);
                path
            })
        })
        .collect();
    let ensemble = Ensemble::from_outcomes(grid.clone(), cfg.master_seed, outcomes);

    const DOOB_REL: &str = "E sup|M|^2 <= 4 E|M(T)|^2 (1 + slack) + 4 stderr";
    for (name, samples) in [("doob_brownian", &brownian), ("doob_jump", &jump)] {
        records.push(match doob_check(samples, 2.0, DEFAULT_DOOB_SLACK) {
            Ok(r) => CheckRecord {
                value: Some(r.lhs.mean),
                bound: Some(r.bound()),
                stderr: Some(r.combined_stderr),
                pass: r.pass,
                detail: format!("ratio {}, {} paths", r.ratio, r.lhs.count),
                ..CheckRecord::new(name, DOOB_REL)
            },
            Err(e) => CheckRecord::failed(name, DOOB_REL, &e),
        });
    }

    const MOMENT_REL: &str = "E|x(t)|^2 - 4 stderr <= 4(1 + phi(T)^2) exp(4 C T~^2) at every t";
    records.push(match growth {
        None => CheckRecord {
            detail: "no audited growth constant".into(),
            ..CheckRecord::new("moment_bound", MOMENT_REL)
        },
        Some(c) => match moment_check(&ensemble, &coeffs, c) {
            Ok(r) => {
                let w = r.worst_index();
                CheckRecord {
                    value: Some(r.estimates[w].mean),
                    bound: Some(r.bound),
                    stderr: Some(r.estimates[w].stderr),
                    pass: r.all_pass(),
                    detail: format!(
                        "worst at t={}, C={c}, {} surviving, {} exploded",
                        r.times[w], r.surviving_paths, r.exploded_paths
                    ),
                    ..CheckRecord::new("moment_bound", MOMENT_REL)
                }
            }
            Err(e) => CheckRecord::failed("moment_bound", MOMENT_REL, &e),
        },
    });

    const CAUCHY_REL: &str = "E sup|x^2 - x^1|^2 - 4 stderr <= C3 t at every t";
    const CHAIN_REL: &str = "psi_{k+1} <= psi_k everywhere";
    const DOM_REL: &str = "E sup|x^2 - x^1|^2 - 4 stderr <= psi_1(t) on [0, v]";
    let phi_t = coeffs.initial(cfg.horizon);
    let constants = growth
        .ok_or_else(|| SvieError::Analysis("no audited growth constant".into()))
        .and_then(|c| CauchyConstants::derive(c, &modulus, cfg.horizon, phi_t * phi_t));
    let constants = match constants {
        Ok(c) => c,
        Err(e) => {
            for (name, rel) in [
                ("cauchy_diff", CAUCHY_REL),
                ("psi_chain", CHAIN_REL),
                ("psi_dominance", DOM_REL),
            ] {
                records.push(CheckRecord::failed(name, rel, &e));
            }
            return Ok(records);
        }
    };
    let orders = CauchyOrders {
        k: 1,
        m: 1,
        k_max: cfg.k_max().max(2),
    };
    let cauchy = cauchy_diff(
        &coeffs,
        &grid,
        cfg.cauchy_paths(),
        cfg.master_seed,
        orders,
        constants,
    );
    match &cauchy {
        Ok(r) => {
            let w = (0..r.times.len())
                .max_by(|&a, &b| {
                    let ka = r.estimates[a].mean - 4.0 * r.estimates[a].stderr - r.line(a);
                    let kb = r.estimates[b].mean - 4.0 * r.estimates[b].stderr - r.line(b);
                    ka.total_cmp(&kb)
                })
                .unwrap_or(0);
            records.push(CheckRecord {
                value: Some(r.estimates[w].mean),
                bound: Some(r.line(w)),
                stderr: Some(r.estimates[w].stderr),
                pass: r.all_pass(),
                detail: format!(
                    "tightest at t={}, C1={:e}, C2={:e}, C3={:e}, {} paths, {} failed",
                    r.times[w],
                    constants.c1,
                    constants.c2,
                    constants.c3,
                    r.paths_used,
                    r.failed_paths
                ),
                ..CheckRecord::new("cauchy_diff", CAUCHY_REL)
            });
        }
        Err(e) => records.push(CheckRecord::failed("cauchy_diff", CAUCHY_REL, e)),
    }

    if !constants.c3.is_finite() {
        let detail = format!(
            "C3 overflowed (C1={:e}); the envelope is vacuous",
            constants.c1
        );
        for (name, rel) in [("psi_chain", CHAIN_REL), ("psi_dominance", DOM_REL)] {
            records.push(CheckRecord {
                pass: true,
                detail: detail.clone(),
                ..CheckRecord::new(name, rel)
            });
        }
        return Ok(records);
    }

    let v = smallness_horizon(constants.c3, &modulus, cfg.horizon);
    match psi_recursion(constants.c3, &modulus, v, cfg.steps, cfg.psi_iterations) {
        Ok(psi) => {
            records.push(CheckRecord {
                value: Some(psi.terminal()),
                bound: Some(psi.curve(1).last().copied().unwrap_or(0.0)),
                pass: psi.monotone(),
                detail: match psi.first_violation() {
                    Some((k, i)) => format!(
                        "v={v}, K={}, first violation at k={k}, t={}",
                        psi.len(),
                        psi.times()[i]
                    ),
                    None => format!("v={v}, K={}", psi.len()),
                },
                ..CheckRecord::new("psi_chain", CHAIN_REL)
            });
            records.push(match &cauchy {
                Ok(r) => match r.dominated_by(&psi) {
                    Ok(flags) => {
                        let held = flags.iter().filter(|&&b| b).count();
                        CheckRecord {
                            value: Some(held as f64),
                            bound: Some(flags.len() as f64),
                            pass: held == flags.len(),
                            detail: format!(
                                "{held} of {} grid times on [0, {v}] dominated",
                                flags.len()
                            ),
                            ..CheckRecord::new("psi_dominance", DOM_REL)
                        }
                    }
                    Err(e) => CheckRecord::failed("psi_dominance", DOM_REL, &e),
                },
                Err(e) => CheckRecord::failed("psi_dominance", DOM_REL, e),
            });
        }
        Err(e) => {
            records.push(CheckRecord::failed("psi_chain", CHAIN_REL, &e));
            records.push(CheckRecord::failed("psi_dominance", DOM_REL, &e));
        }
    }
    Ok(records)
}

/// Runs every check and writes `verify.json`.
pub fn cmd_verify(cfg: &RunConfig) -> anyhow::Result<i32> {
    let coeffs = cfg.coefficients()?;
    create_out(&cfg.output_dir)?;
    let records = run_checks(cfg)?;
    let all_pass = records.iter().all(|r| r.pass);
    for r in records.iter().filter(|r| !r.pass) {
        log::error!("check {} failed: {}", r.name, r.detail);
    }
    let report = VerifyReport {
        coefficient_set: coeffs.name(),
        master_seed: cfg.master_seed,
        all_pass,
        checks: &records,
        config: config_echo(cfg),
    };
    write_json(&cfg.output_dir.join("verify.json"), &report)?;
    Ok(if all_pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}

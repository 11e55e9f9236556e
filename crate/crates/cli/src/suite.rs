//! Experiment suites. Uniform studies run their levels in parallel; the
//! adaptive study is sequential.

use std::time::Instant;

use c0wave::adaptive::{run_adaptive, AdaptiveOptions, AdaptiveStep};
use c0wave::errors::{compute_errors, make_case, rate, ErrorBundle, ManufacturedCase};
use c0wave::estimator::{effectivity, estimate, EstimatorMode, EstimatorOptions, EstimatorReport};
use c0wave::slab::{march, stability_check, TimeGrid};
use c0wave::spacefem::{RectMesh, SpatialSpace};
use rayon::prelude::*;

use crate::config::{step_count, ExperimentConfig, Suite};
use crate::output::{ExperimentResult, Rates, Row};

/// One uniform solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub label: String,
    pub level: usize,
    pub h: f64,
    pub tau: f64,
    pub p_x: usize,
    pub p_t: usize,
    pub final_time: f64,
}

fn spatial_degrees(config: &ExperimentConfig, pt: usize) -> Vec<usize> {
    match config.px_offset {
        Some(offset) => vec![pt + offset],
        None => config.px.clone(),
    }
}

fn series_label(parts: &[(&str, String)]) -> String {
    parts
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Levels of a uniform suite, grouped into series by label.
pub fn uniform_levels(config: &ExperimentConfig) -> Vec<Level> {
    let mut out = Vec::new();
    let t = config.final_time;
    match config.suite {
        Suite::TauRefine | Suite::Effectivity => {
            for &pt in &config.pt {
                for px in spatial_degrees(config, pt) {
                    let label = series_label(&[("pt", pt.to_string()), ("px", px.to_string())]);
                    for (level, &tau) in config.tau.iter().enumerate() {
                        out.push(Level {
                            label: label.clone(),
                            level,
                            h: config.h[0],
                            tau,
                            p_x: px,
                            p_t: pt,
                            final_time: t,
                        });
                    }
                }
            }
        }
        Suite::SpacetimeRefine => {
            for &pt in &config.pt {
                for px in spatial_degrees(config, pt) {
                    let label = series_label(&[("pt", pt.to_string()), ("px", px.to_string())]);
                    for (level, (&tau, &h)) in config.tau.iter().zip(&config.h).enumerate() {
                        out.push(Level {
                            label: label.clone(),
                            level,
                            h,
                            tau,
                            p_x: px,
                            p_t: pt,
                            final_time: t,
                        });
                    }
                }
            }
        }
        Suite::PRefine => {
            for &tau in &config.tau {
                let fixed_px = config.px_offset.is_none();
                let px_list = if fixed_px { config.px.clone() } else { vec![0] };
                for px in px_list {
                    let mut parts = vec![("tau", tau.to_string())];
                    if fixed_px {
                        parts.push(("px", px.to_string()));
                    }
                    let label = series_label(&parts);
                    for (level, &pt) in config.pt.iter().enumerate() {
                        out.push(Level {
                            label: label.clone(),
                            level,
                            h: config.h[0],
                            tau,
                            p_x: config.px_offset.map_or(px, |o| pt + o),
                            p_t: pt,
                            final_time: t,
                        });
                    }
                }
            }
        }
        Suite::LongTime => {
            for &pt in &config.pt {
                for px in spatial_degrees(config, pt) {
                    for &tau in &config.tau {
                        let label = series_label(&[
                            ("pt", pt.to_string()),
                            ("px", px.to_string()),
                            ("tau", tau.to_string()),
                        ]);
                        for (level, &final_time) in config.final_times.iter().enumerate() {
                            out.push(Level {
                                label: label.clone(),
                                level,
                                h: config.h[0],
                                tau,
                                p_x: px,
                                p_t: pt,
                                final_time,
                            });
                        }
                    }
                }
            }
        }
        Suite::Adaptive => {}
    }
    out
}

fn base_row(label: &str, level: usize, h: f64, p_x: usize, grid: &TimeGrid) -> Row {
    Row {
        label: label.into(),
        level,
        h,
        tau: grid.max_tau(),
        p_x,
        p_t: grid.degree(0),
        final_time: grid.final_time(),
        intervals: grid.num_intervals(),
        status: "ok".into(),
        ..Row::default()
    }
}

fn fill_metrics(row: &mut Row, errors: Option<&ErrorBundle>, report: &EstimatorReport) {
    if let Some(e) = errors {
        row.w1inf_l2 = Some(e.max_w1inf_l2);
        row.linf_h1 = Some(e.max_linf_h1);
        row.l2_h1 = Some(e.l2_h1);
        row.h1_l2 = Some(e.h1_l2l2);
        row.linf_l2 = Some(e.linf_l2);
        row.jump = Some(e.jump);
        row.kappa = effectivity(report.total(), e.linf_l2).ok();
    }
    row.eta = Some(report.eta);
    row.eta1 = Some(report.eta1);
    row.osc = Some(report.osc_total());
}

fn failed_row(level: &Level, message: String) -> Row {
    Row {
        label: level.label.clone(),
        level: level.level,
        h: level.h,
        tau: level.tau,
        p_x: level.p_x,
        p_t: level.p_t,
        final_time: level.final_time,
        intervals: step_count(level.tau, level.final_time),
        status: format!("failed: {message}"),
        ..Row::default()
    }
}

fn build_space(h: f64, degree: usize) -> c0wave::Result<SpatialSpace> {
    let space = SpatialSpace::new(RectMesh::square_with_size(h)?, degree)?;
    if space.is_empty() {
        return Err(c0wave::Error::InvalidArgument(format!(
            "mesh size {h} with degree {degree} leaves no interior unknowns"
        )));
    }
    Ok(space)
}

/// Solves, measures and estimates one uniform level.
pub fn run_level(case: &ManufacturedCase, level: &Level, options: EstimatorOptions) -> Row {
    let start = Instant::now();
    let attempt = || -> c0wave::Result<Row> {
        let space = build_space(level.h, level.p_x)?;
        let grid = TimeGrid::uniform(
            level.final_time,
            step_count(level.tau, level.final_time),
            level.p_t,
        )?;
        let data = case.problem(level.final_time);
        let sol = march(&data, &space, &grid)?;
        let errors = compute_errors(&sol, &space, case)?;
        let report = estimate(&sol, &space, &data, options)?;
        let stability = stability_check(&sol, &data, &space)?;
        let mut row = base_row(
            &level.label,
            level.level,
            space.mesh().h(),
            level.p_x,
            &grid,
        );
        row.dofs = grid.dofs(space.dim());
        fill_metrics(&mut row, Some(&errors), &report);
        row.stability_ok = Some(stability.satisfied);
        Ok(row)
    };
    let mut row = attempt().unwrap_or_else(|e| {
        log::warn!("{} level {} failed: {e}", level.label, level.level);
        failed_row(level, e.to_string())
    });
    row.wall_time = start.elapsed().as_secs_f64();
    row
}

fn param_of(row: &Row, param: &str) -> f64 {
    match param {
        "tau" => row.tau,
        "p_t" => row.p_t as f64,
        "T" => row.final_time,
        _ => row.dofs as f64,
    }
}

fn pair_rate(prev: Option<f64>, cur: Option<f64>, x0: f64, x1: f64) -> Option<f64> {
    let (e0, e1) = (prev?, cur?);
    rate(&[e0, e1], &[x0, x1]).ok().map(|r| r[0])
}

/// Rates between consecutive successful rows of each label.
pub fn fill_rates(rows: &mut [Row], param: &str) {
    let mut last: std::collections::HashMap<String, usize> = Default::default();
    for i in 0..rows.len() {
        rows[i].rate_param = param.into();
        if !rows[i].is_ok() {
            continue;
        }
        if let Some(&j) = last.get(&rows[i].label) {
            let (x0, x1) = (param_of(&rows[j], param), param_of(&rows[i], param));
            let (a, b) = (&rows[j], &rows[i]);
            let rates = Rates {
                w1inf_l2: pair_rate(a.w1inf_l2, b.w1inf_l2, x0, x1),
                linf_h1: pair_rate(a.linf_h1, b.linf_h1, x0, x1),
                linf_l2: pair_rate(a.linf_l2, b.linf_l2, x0, x1),
                jump: pair_rate(a.jump, b.jump, x0, x1),
                eta: pair_rate(a.eta, b.eta, x0, x1),
            };
            rows[i].rates = rates;
        }
        last.insert(rows[i].label.clone(), i);
    }
}

fn adaptive_rows(
    label: &str,
    h: f64,
    p_x: usize,
    dim: usize,
    history: &[AdaptiveStep],
    seconds: f64,
) -> Vec<Row> {
    let per_step = seconds / history.len().max(1) as f64;
    history
        .iter()
        .enumerate()
        .map(|(i, step)| {
            let mut row = base_row(label, i, h, p_x, &step.grid);
            row.dofs = step.grid.dofs(dim);
            fill_metrics(&mut row, step.errors.as_ref(), &step.report);
            row.wall_time = per_step;
            row
        })
        .collect()
}

fn run_adaptive_suite(config: &ExperimentConfig, case: &ManufacturedCase) -> Vec<Row> {
    let mut rows = Vec::new();
    let t = config.final_time;
    for &pt in &config.pt {
        let px = config.px_offset.map_or(config.px[0], |o| pt + o);
        let h = config.h[0];
        let label = format!("adaptive pt={pt}");
        let failed = |level: usize, msg: String| {
            failed_row(
                &Level {
                    label: label.clone(),
                    level,
                    h,
                    tau: config.tau[0],
                    p_x: px,
                    p_t: pt,
                    final_time: t,
                },
                msg,
            )
        };
        let space = match build_space(h, px) {
            Ok(s) => s,
            Err(e) => {
                rows.push(failed(0, e.to_string()));
                continue;
            }
        };
        let grid = match TimeGrid::uniform(t, step_count(config.tau[0], t), pt) {
            Ok(g) => g,
            Err(e) => {
                rows.push(failed(0, e.to_string()));
                continue;
            }
        };
        let options = AdaptiveOptions {
            theta: config.theta,
            max_iters: config.max_iters,
            eta_tol: config.eta_tol,
            estimator: EstimatorOptions {
                mode: config.estimator_mode,
                include_osc: config.include_osc,
            },
        };
        let start = Instant::now();
        let outcome = run_adaptive(&case.problem(t), &space, grid.clone(), options, Some(case));
        let seconds = start.elapsed().as_secs_f64();
        let mesh_h = space.mesh().h();
        let final_dofs = match outcome {
            Ok(state) => {
                let adaptive =
                    adaptive_rows(&label, mesh_h, px, space.dim(), &state.history, seconds);
                let dofs = adaptive.last().map_or(0, |r| r.dofs);
                rows.extend(adaptive);
                dofs
            }
            Err(failure) => {
                log::warn!("{label}: {failure}");
                let n = failure.state.history.len();
                rows.extend(adaptive_rows(
                    &label,
                    mesh_h,
                    px,
                    space.dim(),
                    &failure.state.history,
                    seconds,
                ));
                rows.push(failed(n, failure.source.to_string()));
                continue;
            }
        };

        let uniform_label = format!("uniform pt={pt}");
        let mut levels = Vec::new();
        let mut n = grid.num_intervals();
        loop {
            levels.push(Level {
                label: uniform_label.clone(),
                level: levels.len(),
                h,
                tau: t / n as f64,
                p_x: px,
                p_t: pt,
                final_time: t,
            });
            if n * pt * space.dim() >= final_dofs {
                break;
            }
            n *= 2;
        }
        let reference = EstimatorOptions {
            mode: EstimatorMode::Global,
            include_osc: config.include_osc,
        };
        let uniform: Vec<Row> = levels
            .par_iter()
            .map(|level| run_level(case, level, reference))
            .collect();
        rows.extend(uniform);
    }
    rows
}

/// Runs the configured suite. Failing levels are recorded and skipped.
pub fn run_suite(config: &ExperimentConfig) -> ExperimentResult {
    log::info!("suite {} (seed {})", config.suite, config.seed);
    let case = match make_case(config.case) {
        Ok(c) => c,
        Err(e) => {
            return ExperimentResult {
                suite: config.suite.to_string(),
                rows: vec![failed_row(
                    &Level {
                        label: "case".into(),
                        level: 0,
                        h: config.h[0],
                        tau: config.tau[0],
                        p_x: config.px[0],
                        p_t: config.pt[0],
                        final_time: config.final_time,
                    },
                    e.to_string(),
                )],
            }
        }
    };
    let (mut rows, param) = match config.suite {
        Suite::Adaptive => (run_adaptive_suite(config, &case), "dofs"),
        suite => {
            let options = EstimatorOptions {
                mode: config.estimator_mode,
                include_osc: config.include_osc,
            };
            let rows: Vec<Row> = uniform_levels(config)
                .par_iter()
                .map(|level| run_level(&case, level, options))
                .collect();
            let param = match suite {
                Suite::PRefine => "p_t",
                Suite::LongTime => "T",
                _ => "tau",
            };
            (rows, param)
        }
    };
    fill_rates(&mut rows, param);
    ExperimentResult {
        suite: config.suite.to_string(),
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn config(text: &str) -> ExperimentConfig {
        parse_config(text).unwrap()
    }

    #[test]
    fn tau_refine_levels() {
        let c = config("suite = \"tau_refine\"\ncase = 1\ntau = [0.2, 0.1]\npt = [2, 3]\n");
        let levels = uniform_levels(&c);
        assert_eq!(levels.len(), 4);
        assert_eq!(levels[0].label, "pt=2 px=2");
        assert_eq!(levels[3].label, "pt=3 px=2");
        assert_eq!(levels[3].tau, 0.1);
        assert_eq!(levels[3].level, 1);
    }

    #[test]
    fn p_refine_with_offset() {
        let c =
            config("suite = \"p_refine\"\ncase = 1\ntau = 0.2\npt = [2, 3, 4]\npx_offset = 1\n");
        let levels = uniform_levels(&c);
        let px: Vec<usize> = levels.iter().map(|l| l.p_x).collect();
        assert_eq!(px, vec![3, 4, 5]);
        assert!(levels.iter().all(|l| l.label == "tau=0.2"));
    }

    #[test]
    fn long_time_levels_follow_final_times() {
        let c =
            config("suite = \"long_time\"\ncase = 3\ntau = 0.2\nfinal_times = [6.0, 8.0, 10.0]\n");
        let t: Vec<f64> = uniform_levels(&c).iter().map(|l| l.final_time).collect();
        assert_eq!(t, vec![6.0, 8.0, 10.0]);
    }

    #[test]
    fn rates_skip_failures_and_follow_labels() {
        let mk = |label: &str, tau: f64, e: f64, ok: bool| Row {
            label: label.into(),
            tau,
            linf_l2: Some(e),
            status: if ok { "ok".into() } else { "failed: x".into() },
            ..Row::default()
        };
        let mut rows = vec![
            mk("a", 0.4, 16.0, true),
            mk("b", 0.4, 1.0, true),
            mk("a", 0.2, 0.0, false),
            mk("a", 0.1, 1.0, true),
        ];
        fill_rates(&mut rows, "tau");
        assert_eq!(rows[0].rates.linf_l2, None);
        assert_eq!(rows[1].rates.linf_l2, None);
        assert_eq!(rows[2].rates.linf_l2, None);
        assert!((rows[3].rates.linf_l2.unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(rows[3].rate_param, "tau");
    }

    #[test]
    fn tau_refine_smooth_case_converges() {
        let c = config("suite = \"tau_refine\"\ncase = 1\ntau = [0.25, 0.125]\nh = 1.0\npx = 2\n");
        let result = run_suite(&c);
        assert_eq!(result.rows.len(), 2);
        assert_eq!(result.failures(), 0);
        let r = &result.rows[1];
        assert_eq!(r.intervals, 8);
        assert!(r.rates.w1inf_l2.unwrap() > 1.0);
        assert!(r.kappa.unwrap() >= 1.0);
        assert_eq!(r.stability_ok, Some(true));
    }

    #[test]
    fn adaptive_suite_adds_uniform_reference() {
        let c = config(
            "suite = \"adaptive\"\ncase = 2\nalpha = 1.75\ntau = 0.25\nh = 1.0\nmax_iters = 3\n",
        );
        let result = run_suite(&c);
        assert_eq!(result.failures(), 0);
        let adaptive: Vec<_> = result
            .rows
            .iter()
            .filter(|r| r.label == "adaptive pt=2")
            .collect();
        let uniform: Vec<_> = result
            .rows
            .iter()
            .filter(|r| r.label == "uniform pt=2")
            .collect();
        assert_eq!(adaptive.len(), 3);
        assert!(!uniform.is_empty());
        assert!(uniform.last().unwrap().dofs >= adaptive.last().unwrap().dofs);
        assert!(adaptive[2].intervals > adaptive[0].intervals);
    }
}

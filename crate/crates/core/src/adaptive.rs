//! SOLVE → ESTIMATE → MARK → REFINE in time, with Dörfler marking and
//! bisection. The spatial space stays fixed.

use crate::error::{invalid, Error, Result};
use crate::errors::{compute_errors, ErrorBundle, ExactSolution};
use crate::estimator::{estimate, EstimatorMode, EstimatorOptions, EstimatorReport};
use crate::slab::{march, ProblemData, TimeGrid};
use crate::spacefem::SpatialSpace;

/// Smallest set of largest indicators carrying at least `theta` of the total.
///
/// Ties go to the smaller index. The result is sorted by index.
pub fn doerfler_mark(local: &[f64], theta: f64) -> Result<Vec<usize>> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(invalid(format!("marking fraction {theta} outside (0, 1]")));
    }
    if let Some(v) = local.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(invalid(format!(
            "indicator {v} is not a finite nonnegative number"
        )));
    }
    let total: f64 = local.iter().sum();
    if total == 0.0 {
        return Ok(Vec::new());
    }
    let mut order: Vec<usize> = (0..local.len()).collect();
    order.sort_by(|&a, &b| local[b].total_cmp(&local[a]));
    let target = theta * total * (1.0 - 4.0 * f64::EPSILON * local.len() as f64);
    let mut marked = Vec::new();
    let mut sum = 0.0;
    for n in order {
        if sum >= target || local[n] == 0.0 {
            break;
        }
        sum += local[n];
        marked.push(n);
    }
    marked.sort_unstable();
    Ok(marked)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveOptions {
    pub theta: f64,
    pub max_iters: usize,
    pub eta_tol: f64,
    pub estimator: EstimatorOptions,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self {
            theta: 0.5,
            max_iters: 25,
            eta_tol: 0.0,
            estimator: EstimatorOptions {
                mode: EstimatorMode::Localized,
                include_osc: false,
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdaptiveStep {
    pub grid: TimeGrid,
    pub errors: Option<ErrorBundle>,
    pub report: EstimatorReport,
    pub dofs: usize,
    pub marked: Vec<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct AdaptiveState {
    pub history: Vec<AdaptiveStep>,
}

impl AdaptiveState {
    pub fn last(&self) -> Option<&AdaptiveStep> {
        self.history.last()
    }
}

/// A failed run together with everything computed before the failure.
#[derive(Debug, thiserror::Error)]
#[error("adaptive iteration {iteration} failed: {source}")]
pub struct AdaptiveFailure {
    pub iteration: usize,
    pub state: AdaptiveState,
    #[source]
    pub source: Error,
}

pub fn run_adaptive(
    data: &ProblemData,
    space: &SpatialSpace,
    initial_grid: TimeGrid,
    options: AdaptiveOptions,
    exact: Option<&dyn ExactSolution>,
) -> std::result::Result<AdaptiveState, AdaptiveFailure> {
    let mut state = AdaptiveState::default();
    let mut grid = initial_grid;
    for iteration in 0..options.max_iters {
        let step = (|| -> Result<(AdaptiveStep, bool)> {
            let sol = march(data, space, &grid)?;
            let report = estimate(&sol, space, data, options.estimator)?;
            let errors = exact.map(|e| compute_errors(&sol, space, e)).transpose()?;
            let done = report.total() <= options.eta_tol || iteration + 1 == options.max_iters;
            let marked = if done {
                Vec::new()
            } else {
                doerfler_mark(&report.local, options.theta)?
            };
            log::info!(
                "adaptive iteration {iteration}: N = {}, eta = {:.3e}, marked {}",
                grid.num_intervals(),
                report.total(),
                marked.len()
            );
            Ok((
                AdaptiveStep {
                    dofs: grid.dofs(space.dim()),
                    grid: grid.clone(),
                    errors,
                    report,
                    marked: marked.clone(),
                },
                done || marked.is_empty(),
            ))
        })();
        match step {
            Ok((step, stop)) => {
                let next = if stop {
                    None
                } else {
                    Some(grid.bisect(&step.marked))
                };
                state.history.push(step);
                match next {
                    None => break,
                    Some(Ok(g)) => grid = g,
                    Some(Err(source)) => {
                        return Err(AdaptiveFailure {
                            iteration,
                            state,
                            source,
                        })
                    }
                }
            }
            Err(source) => {
                return Err(AdaptiveFailure {
                    iteration,
                    state,
                    source,
                })
            }
        }
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spacefem::RectMesh;

    fn brute_force_min(local: &[f64], theta: f64) -> usize {
        let total: f64 = local.iter().sum();
        let n = local.len();
        (0u32..(1 << n))
            .filter(|mask| {
                let s: f64 = (0..n)
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| local[i])
                    .sum();
                s >= theta * total
            })
            .map(|mask| mask.count_ones() as usize)
            .min()
            .unwrap()
    }

    #[test]
    fn marking_examples() {
        assert_eq!(
            doerfler_mark(&[4.0, 3.0, 2.0, 1.0], 0.5).unwrap(),
            vec![0, 1]
        );
        assert_eq!(brute_force_min(&[4.0, 3.0, 2.0, 1.0], 0.5), 2);
        assert_eq!(
            doerfler_mark(&[0.0, 1.0, 0.0, 2.0], 1.0).unwrap(),
            vec![1, 3]
        );
        assert_eq!(doerfler_mark(&[5.0], 0.1).unwrap(), vec![0]);
        assert!(doerfler_mark(&[0.0, 0.0], 0.5).unwrap().is_empty());
        assert_eq!(doerfler_mark(&[1.0, 1.0, 1.0], 0.5).unwrap(), vec![0, 1]);
        assert!(doerfler_mark(&[1.0], 0.0).is_err());
        assert!(doerfler_mark(&[-1.0], 0.5).is_err());
    }

    #[test]
    fn bisection_examples() {
        let g = TimeGrid::new(vec![0.0, 1.0], vec![2]).unwrap();
        assert_eq!(g.bisect(&[0]).unwrap().nodes(), &[0.0, 0.5, 1.0]);
        assert_eq!(g.bisect(&[]).unwrap(), g);
        let u = TimeGrid::uniform(1.0, 4, 3).unwrap();
        let all = u.bisect(&[0, 1, 2, 3]).unwrap();
        let fine = TimeGrid::uniform(1.0, 8, 3).unwrap();
        for (a, b) in all.nodes().iter().zip(fine.nodes()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_data_stops_immediately() {
        let space = SpatialSpace::new(RectMesh::square(2).unwrap(), 2).unwrap();
        let grid = TimeGrid::uniform(1.0, 4, 2).unwrap();
        let state = run_adaptive(
            &ProblemData::zero(1.0),
            &space,
            grid,
            AdaptiveOptions::default(),
            None,
        )
        .unwrap();
        assert_eq!(state.history.len(), 1);
        assert_eq!(state.last().unwrap().report.eta, 0.0);
    }
}

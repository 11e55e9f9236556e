//! Flat TOML experiment configuration.
//!
//! | key              | type            | default                         |
//! |------------------|-----------------|---------------------------------|
//! | `suite`          | string          | required                        |
//! | `case`           | integer 1–3     | required                        |
//! | `alpha`          | float > 1.5     | required for case 2             |
//! | `mode_x`         | integer ≥ 1     | 1 (case 3)                      |
//! | `mode_y`         | integer ≥ 1     | 1 (case 3)                      |
//! | `omega`          | float           | `√(mode_x² + mode_y²)` (case 3) |
//! | `final_time`     | float > 0       | 1.0                             |
//! | `final_times`    | float list      | `[final_time]`                  |
//! | `tau`            | float list      | required                        |
//! | `pt`             | integer list    | `[2]`                           |
//! | `px`             | integer list    | `[2]`                           |
//! | `px_offset`      | integer         | unset                           |
//! | `h`              | float list      | `[0.4]`                         |
//! | `theta`          | float in (0, 1] | 0.5                             |
//! | `include_osc`    | bool            | false                           |
//! | `max_iters`      | integer ≥ 1     | 25                              |
//! | `eta_tol`        | float ≥ 0       | 0.0                             |
//! | `estimator_mode` | string          | `global`, `localized` adaptive  |
//! | `output`         | string          | `results.csv`                   |
//! | `seed`           | integer ≥ 0     | 0                               |
//!
//! Scalars are accepted wherever a list is expected.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use c0wave::errors::CaseKind;
use c0wave::estimator::EstimatorMode;
use toml::{Table, Value};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    TauRefine,
    PRefine,
    SpacetimeRefine,
    LongTime,
    Effectivity,
    Adaptive,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::TauRefine,
        Suite::PRefine,
        Suite::SpacetimeRefine,
        Suite::LongTime,
        Suite::Effectivity,
        Suite::Adaptive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::TauRefine => "tau_refine",
            Suite::PRefine => "p_refine",
            Suite::SpacetimeRefine => "spacetime_refine",
            Suite::LongTime => "long_time",
            Suite::Effectivity => "effectivity",
            Suite::Adaptive => "adaptive",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Suite::ALL.iter().map(|v| v.name()).collect();
                format!("unknown suite `{s}` (expected one of {})", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub suite: Suite,
    pub case: CaseKind,
    pub final_time: f64,
    pub final_times: Vec<f64>,
    pub tau: Vec<f64>,
    pub pt: Vec<usize>,
    pub px: Vec<usize>,
    pub px_offset: Option<usize>,
    pub h: Vec<f64>,
    pub theta: f64,
    pub include_osc: bool,
    pub max_iters: usize,
    pub eta_tol: f64,
    pub estimator_mode: EstimatorMode,
    pub output: PathBuf,
    pub seed: u64,
}

const KEYS: [&str; 20] = [
    "suite",
    "case",
    "alpha",
    "mode_x",
    "mode_y",
    "omega",
    "final_time",
    "final_times",
    "tau",
    "pt",
    "px",
    "px_offset",
    "h",
    "theta",
    "include_osc",
    "max_iters",
    "eta_tol",
    "estimator_mode",
    "output",
    "seed",
];

struct Reader<'a> {
    table: &'a Table,
    errors: Vec<String>,
}

impl<'a> Reader<'a> {
    fn wrong_type(&mut self, key: &str, expected: &str) {
        self.errors.push(format!("`{key}`: expected {expected}"));
    }

    fn float(&mut self, key: &str) -> Option<f64> {
        match self.table.get(key)? {
            Value::Float(v) => Some(*v),
            Value::Integer(v) => Some(*v as f64),
            _ => {
                self.wrong_type(key, "a number");
                None
            }
        }
    }

    fn int(&mut self, key: &str) -> Option<i64> {
        match self.table.get(key)? {
            Value::Integer(v) => Some(*v),
            _ => {
                self.wrong_type(key, "an integer");
                None
            }
        }
    }

    fn string(&mut self, key: &str) -> Option<&'a str> {
        match self.table.get(key)? {
            Value::String(s) => Some(s.as_str()),
            _ => {
                self.wrong_type(key, "a string");
                None
            }
        }
    }

    fn boolean(&mut self, key: &str) -> Option<bool> {
        match self.table.get(key)? {
            Value::Boolean(b) => Some(*b),
            _ => {
                self.wrong_type(key, "a boolean");
                None
            }
        }
    }

    fn list<T>(
        &mut self,
        key: &str,
        conv: impl Fn(&Value) -> Option<T>,
        what: &str,
    ) -> Option<Vec<T>> {
        let value = self.table.get(key)?;
        let items: Vec<&Value> = match value {
            Value::Array(a) => a.iter().collect(),
            v => vec![v],
        };
        let out: Option<Vec<T>> = items.into_iter().map(conv).collect();
        if out.is_none() {
            self.wrong_type(key, what);
        }
        out
    }

    fn floats(&mut self, key: &str) -> Option<Vec<f64>> {
        self.list(
            key,
            |v| match v {
                Value::Float(x) => Some(*x),
                Value::Integer(x) => Some(*x as f64),
                _ => None,
            },
            "a number or a list of numbers",
        )
    }

    fn ints(&mut self, key: &str) -> Option<Vec<i64>> {
        self.list(
            key,
            |v| match v {
                Value::Integer(x) => Some(*x),
                _ => None,
            },
            "an integer or a list of integers",
        )
    }
}

fn positive_ints(r: &mut Reader, key: &str, min: i64, default: Vec<usize>) -> Vec<usize> {
    match r.ints(key) {
        None => default,
        Some(v) if v.is_empty() => {
            r.errors
                .push(format!("`{key}`: sequence must be non-empty"));
            default
        }
        Some(v) => {
            for x in v.iter().filter(|x| **x < min) {
                r.errors
                    .push(format!("`{key}`: {x} violates {key} ≥ {min}"));
            }
            v.into_iter().map(|x| x.max(min) as usize).collect()
        }
    }
}

fn positive_floats(r: &mut Reader, key: &str) -> Option<Vec<f64>> {
    let v = r.floats(key)?;
    if v.is_empty() {
        r.errors
            .push(format!("`{key}`: sequence must be non-empty"));
        return None;
    }
    let bad: Vec<f64> = v
        .iter()
        .copied()
        .filter(|x| !(*x > 0.0 && x.is_finite()))
        .collect();
    for x in &bad {
        r.errors
            .push(format!("`{key}`: {x} is not a positive finite number"));
    }
    bad.is_empty().then_some(v)
}

/// Whether `tau` splits `final_time` into a whole number of steps within `0.02 τ`.
pub fn divides(tau: f64, final_time: f64) -> bool {
    let steps = final_time / tau;
    steps.round() >= 1.0 && (steps - steps.round()).abs() <= 0.02
}

/// Number of uniform steps of size `tau` on `(0, final_time)`.
pub fn step_count(tau: f64, final_time: f64) -> usize {
    (final_time / tau).round().max(1.0) as usize
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::Config(vec![format!("malformed document: {e}")]))?;
    let mut r = Reader {
        table: &table,
        errors: Vec::new(),
    };
    for key in table.keys().filter(|k| !KEYS.contains(&k.as_str())) {
        r.errors.push(format!("unknown key `{key}`"));
    }

    let suite = match r.string("suite") {
        Some(s) => s.parse().map_err(|e: String| r.errors.push(e)).ok(),
        None => {
            if !table.contains_key("suite") {
                r.errors.push("missing required key `suite`".into());
            }
            None
        }
    };

    let alpha = r.float("alpha");
    let mode_x = r.int("mode_x");
    let mode_y = r.int("mode_y");
    let omega = r.float("omega");
    let case = match r.int("case") {
        Some(1) => Some(CaseKind::Smooth),
        Some(2) => match alpha {
            Some(a) if a > 1.5 && a.is_finite() => Some(CaseKind::PowerLaw { alpha: a }),
            Some(a) => {
                r.errors.push(format!("`alpha`: {a} violates α > 1.5"));
                None
            }
            None => {
                if !table.contains_key("alpha") {
                    r.errors
                        .push("missing required key `alpha` for case 2".into());
                }
                None
            }
        },
        Some(3) => {
            let mx = mode_x.unwrap_or(1);
            let my = mode_y.unwrap_or(1);
            for (key, v) in [("mode_x", mx), ("mode_y", my)] {
                if !(1..=u32::MAX as i64).contains(&v) {
                    r.errors.push(format!("`{key}`: {v} violates {key} ≥ 1"));
                }
            }
            let omega = omega.unwrap_or_else(|| ((mx * mx + my * my) as f64).sqrt());
            if !omega.is_finite() {
                r.errors.push(format!("`omega`: {omega} is not finite"));
            }
            Some(CaseKind::Eigenmode {
                x_mode: mx.clamp(1, u32::MAX as i64) as u32,
                y_mode: my.clamp(1, u32::MAX as i64) as u32,
                omega,
            })
        }
        Some(c) => {
            r.errors.push(format!("`case`: {c} is not one of 1, 2, 3"));
            None
        }
        None => {
            if !table.contains_key("case") {
                r.errors.push("missing required key `case`".into());
            }
            None
        }
    };
    if let Some(CaseKind::Smooth | CaseKind::Eigenmode { .. }) = case {
        if table.contains_key("alpha") {
            r.errors.push("`alpha` only applies to case 2".into());
        }
    }
    if !matches!(case, Some(CaseKind::Eigenmode { .. }) | None) {
        for key in ["mode_x", "mode_y", "omega"] {
            if table.contains_key(key) {
                r.errors.push(format!("`{key}` only applies to case 3"));
            }
        }
    }

    let final_time = r.float("final_time").unwrap_or(1.0);
    if !(final_time > 0.0 && final_time.is_finite()) {
        r.errors.push(format!(
            "`final_time`: {final_time} is not a positive finite number"
        ));
    }
    let final_times = positive_floats(&mut r, "final_times").unwrap_or_else(|| vec![final_time]);

    let tau = positive_floats(&mut r, "tau");
    if tau.is_none() && !table.contains_key("tau") {
        r.errors.push("missing required key `tau`".into());
    }
    let tau = tau.unwrap_or_default();
    if tau.windows(2).any(|w| w[1] >= w[0]) {
        r.errors
            .push("`tau`: sequence must be strictly decreasing".into());
    }
    let horizons: Vec<f64> = match suite {
        Some(Suite::LongTime) => final_times.clone(),
        _ => vec![final_time],
    };
    for t in &tau {
        for big_t in horizons.iter().filter(|t| **t > 0.0) {
            if !divides(*t, *big_t) {
                r.errors.push(format!(
                    "`tau`: {t} does not divide T = {big_t} into whole steps"
                ));
            }
        }
    }

    let pt = positive_ints(&mut r, "pt", 2, vec![2]);
    let px = positive_ints(&mut r, "px", 1, vec![2]);
    let px_offset = r.int("px_offset").and_then(|v| {
        if v < 0 {
            r.errors.push(format!("`px_offset`: {v} is negative"));
            None
        } else {
            Some(v as usize)
        }
    });
    let h = positive_floats(&mut r, "h").unwrap_or_else(|| vec![0.4]);
    for x in h.iter().filter(|x| **x > 2.0) {
        r.errors
            .push(format!("`h`: {x} exceeds the domain width 2"));
    }

    let theta = r.float("theta").unwrap_or(0.5);
    if !(theta > 0.0 && theta <= 1.0) {
        r.errors.push(format!("`theta`: {theta} outside (0, 1]"));
    }
    let include_osc = r.boolean("include_osc").unwrap_or(false);
    let max_iters = r.int("max_iters").unwrap_or(25);
    if max_iters < 1 {
        r.errors
            .push(format!("`max_iters`: {max_iters} violates max_iters ≥ 1"));
    }
    let eta_tol = r.float("eta_tol").unwrap_or(0.0);
    if !(eta_tol >= 0.0) {
        r.errors.push(format!("`eta_tol`: {eta_tol} is negative"));
    }
    let estimator_mode = match r.string("estimator_mode") {
        Some("global") => EstimatorMode::Global,
        Some("localized") => EstimatorMode::Localized,
        Some(other) => {
            r.errors.push(format!(
                "`estimator_mode`: `{other}` is not one of global, localized"
            ));
            EstimatorMode::Global
        }
        None if suite == Some(Suite::Adaptive) => EstimatorMode::Localized,
        None => EstimatorMode::Global,
    };
    let output = PathBuf::from(r.string("output").unwrap_or("results.csv"));
    let seed = r.int("seed").unwrap_or(0);
    if seed < 0 {
        r.errors.push(format!("`seed`: {seed} is negative"));
    }

    if suite == Some(Suite::SpacetimeRefine) && h.len() != tau.len() {
        r.errors.push(format!(
            "`h`: spacetime_refine needs one mesh size per time step ({} given, {} expected)",
            h.len(),
            tau.len()
        ));
    }
    if suite == Some(Suite::LongTime) && !table.contains_key("final_times") {
        r.errors
            .push("missing required key `final_times` for long_time".into());
    }

    if !r.errors.is_empty() {
        return Err(CliError::Config(r.errors));
    }
    Ok(ExperimentConfig {
        suite: suite.expect("validated"),
        case: case.expect("validated"),
        final_time,
        final_times,
        tau,
        pt,
        px,
        px_offset,
        h,
        theta,
        include_osc,
        max_iters: max_iters as usize,
        eta_tol,
        estimator_mode,
        output,
        seed: seed as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn violations(text: &str) -> Vec<String> {
        match parse_config(text) {
            Err(CliError::Config(v)) => v,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_document_gets_defaults() {
        let c = parse_config("suite = \"tau_refine\"\ncase = 1\ntau = [0.2, 0.1]\n").unwrap();
        assert_eq!(c.suite, Suite::TauRefine);
        assert_eq!(c.case, CaseKind::Smooth);
        assert_eq!(c.theta, 0.5);
        assert!(!c.include_osc);
        assert_eq!(c.pt, vec![2]);
        assert_eq!(c.px, vec![2]);
        assert_eq!(c.h, vec![0.4]);
        assert_eq!(c.final_time, 1.0);
        assert_eq!(c.estimator_mode, EstimatorMode::Global);
        assert_eq!(c.max_iters, 25);
    }

    #[test]
    fn adaptive_defaults_to_localized_estimator() {
        let c = parse_config("suite = \"adaptive\"\ncase = 2\nalpha = 1.75\ntau = 0.2\n").unwrap();
        assert_eq!(c.estimator_mode, EstimatorMode::Localized);
        assert_eq!(c.case, CaseKind::PowerLaw { alpha: 1.75 });
    }

    #[test]
    fn case3_frequency_defaults_to_resonance() {
        let c = parse_config("suite = \"p_refine\"\ncase = 3\nmode_x = 3\nmode_y = 4\ntau = 0.2\n")
            .unwrap();
        assert_eq!(
            c.case,
            CaseKind::Eigenmode {
                x_mode: 3,
                y_mode: 4,
                omega: 5.0
            }
        );
    }

    #[test]
    fn temporal_degree_one_is_rejected() {
        let v = violations("suite = \"p_refine\"\ncase = 1\ntau = 0.2\npt = [1, 2]\n");
        assert_eq!(v.len(), 1);
        assert!(v[0].contains("pt ≥ 2"), "{v:?}");
    }

    #[test]
    fn small_alpha_is_rejected() {
        let v = violations("suite = \"tau_refine\"\ncase = 2\nalpha = 1.2\ntau = 0.2\n");
        assert_eq!(v.len(), 1);
        assert!(v[0].contains("α > 1.5"), "{v:?}");
    }

    #[test]
    fn non_divisor_step_is_rejected() {
        let v = violations("suite = \"tau_refine\"\ncase = 1\ntau = [0.2, 0.3]\n");
        assert!(v.iter().any(|e| e.contains("0.3 does not divide")), "{v:?}");
        assert!(v.iter().any(|e| e.contains("decreasing")), "{v:?}");
    }

    #[test]
    fn long_time_checks_every_horizon() {
        let v =
            violations("suite = \"long_time\"\ncase = 3\ntau = 0.4\nfinal_times = [6.0, 7.0]\n");
        assert_eq!(v.len(), 1);
        assert!(v[0].contains("T = 7"), "{v:?}");
    }

    #[test]
    fn every_violation_is_reported() {
        let v = violations("case = 4\ntau = []\ntheta = 1.5\ncolour = \"red\"\npt = 0\n");
        for needle in [
            "unknown key `colour`",
            "missing required key `suite`",
            "`case`: 4",
            "`tau`: sequence must be non-empty",
            "`theta`: 1.5",
            "pt ≥ 2",
        ] {
            assert!(
                v.iter().any(|e| e.contains(needle)),
                "{needle} not in {v:?}"
            );
        }
    }

    #[test]
    fn wrong_types_are_named() {
        let v = violations("suite = 3\ncase = \"one\"\ntau = [\"a\"]\ninclude_osc = 1\n");
        for key in ["`suite`", "`case`", "`tau`", "`include_osc`"] {
            assert!(v.iter().any(|e| e.starts_with(key)), "{key} not in {v:?}");
        }
    }

    #[test]
    fn malformed_document_is_a_config_error() {
        assert!(!violations("suite = [").is_empty());
    }

    #[test]
    fn divisor_tolerance() {
        assert!(divides(0.2, 1.0));
        assert!(divides(0.0125, 1.0));
        assert!(!divides(0.3, 1.0));
        assert!(!divides(2.0, 1.0));
        assert_eq!(step_count(0.2, 6.0), 30);
    }
}

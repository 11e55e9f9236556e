//! Result rows and their CSV form.
//!
//! Columns, in order:
//!
//! | column          | meaning                                           |
//! |-----------------|---------------------------------------------------|
//! | `label`         | series within the suite, e.g. `pt=2`              |
//! | `level`         | refinement level or adaptive iteration            |
//! | `h`             | spatial mesh size                                 |
//! | `tau`           | largest time step                                 |
//! | `p_x`, `p_t`    | spatial and temporal degrees                      |
//! | `T`             | final time                                        |
//! | `N`             | number of time intervals                          |
//! | `dofs`          | `Σ pₙ ×` interior spatial unknowns                |
//! | `w1inf_l2`      | `maxₙ ‖e'‖_{L∞(Iₙ;L²)}`                           |
//! | `linf_h1`       | `maxₙ |e|_{L∞(Iₙ;H¹)}`                            |
//! | `l2_h1`         | `|e|_{L²(0,T;H¹)}`                                |
//! | `h1_l2`         | `‖e'‖_{L²(0,T;L²)}`                               |
//! | `linf_l2`       | `‖e‖_{L∞(0,T;L²)}`                                |
//! | `jump`          | `(Σ ‖[U'](tₙ₋₁)‖²)^{1/2}`                         |
//! | `eta`, `eta1`   | estimator and its jump part                       |
//! | `osc`           | data oscillation                                  |
//! | `kappa`         | `(η [+ osc]) / linf_l2`                           |
//! | `stability_ok`  | discrete stability bound satisfied                |
//! | `rate_*`        | rate against the previous row of the same label   |
//! | `status`        | `ok` or the failure message                       |
//! | `wall_time`     | seconds spent on the row                          |
//!
//! Floats are written as `{:.15e}`; missing values are empty fields.

use std::path::Path;

use crate::error::CliError;

pub const COLUMNS: [&str; 28] = [
    "label",
    "level",
    "h",
    "tau",
    "p_x",
    "p_t",
    "T",
    "N",
    "dofs",
    "w1inf_l2",
    "linf_h1",
    "l2_h1",
    "h1_l2",
    "linf_l2",
    "jump",
    "eta",
    "eta1",
    "osc",
    "kappa",
    "stability_ok",
    "rate_w1inf_l2",
    "rate_linf_h1",
    "rate_linf_l2",
    "rate_jump",
    "rate_eta",
    "rate_param",
    "status",
    "wall_time",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Rates {
    pub w1inf_l2: Option<f64>,
    pub linf_h1: Option<f64>,
    pub linf_l2: Option<f64>,
    pub jump: Option<f64>,
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Row {
    pub label: String,
    pub level: usize,
    pub h: f64,
    pub tau: f64,
    pub p_x: usize,
    pub p_t: usize,
    pub final_time: f64,
    pub intervals: usize,
    pub dofs: usize,
    pub w1inf_l2: Option<f64>,
    pub linf_h1: Option<f64>,
    pub l2_h1: Option<f64>,
    pub h1_l2: Option<f64>,
    pub linf_l2: Option<f64>,
    pub jump: Option<f64>,
    pub eta: Option<f64>,
    pub eta1: Option<f64>,
    pub osc: Option<f64>,
    pub kappa: Option<f64>,
    pub stability_ok: Option<bool>,
    pub rates: Rates,
    /// Parameter the rates are taken against.
    pub rate_param: String,
    pub status: String,
    pub wall_time: f64,
}

impl Row {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentResult {
    pub suite: String,
    pub rows: Vec<Row>,
}

impl ExperimentResult {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.is_ok()).count()
    }
}

fn float(v: f64) -> String {
    format!("{v:.15e}")
}

fn opt_float(v: Option<f64>) -> String {
    v.map(float).unwrap_or_default()
}

fn record(row: &Row) -> Vec<String> {
    let r = &row.rates;
    vec![
        row.label.clone(),
        row.level.to_string(),
        float(row.h),
        float(row.tau),
        row.p_x.to_string(),
        row.p_t.to_string(),
        float(row.final_time),
        row.intervals.to_string(),
        row.dofs.to_string(),
        opt_float(row.w1inf_l2),
        opt_float(row.linf_h1),
        opt_float(row.l2_h1),
        opt_float(row.h1_l2),
        opt_float(row.linf_l2),
        opt_float(row.jump),
        opt_float(row.eta),
        opt_float(row.eta1),
        opt_float(row.osc),
        opt_float(row.kappa),
        row.stability_ok.map(|b| b.to_string()).unwrap_or_default(),
        opt_float(r.w1inf_l2),
        opt_float(r.linf_h1),
        opt_float(r.linf_l2),
        opt_float(r.jump),
        opt_float(r.eta),
        row.rate_param.clone(),
        row.status.clone(),
        float(row.wall_time),
    ]
}

pub fn emit_csv(result: &ExperimentResult, path: &Path) -> Result<(), CliError> {
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    let mut writer = csv::Writer::from_path(path).map_err(csv_err)?;
    writer.write_record(COLUMNS).map_err(csv_err)?;
    for row in &result.rows {
        writer.write_record(record(row)).map_err(csv_err)?;
    }
    writer.flush().map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_csv(path: &Path) -> Result<Vec<Row>, CliError> {
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let headers = reader.headers().map_err(csv_err)?.clone();
    if headers.iter().ne(COLUMNS) {
        return Err(CliError::Parse {
            path: path.to_path_buf(),
            column: "header".into(),
            value: headers.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(csv_err)?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let bad = |i: usize| CliError::Parse {
            path: path.to_path_buf(),
            column: COLUMNS[i].into(),
            value: field(i).into(),
        };
        let f = |i: usize| field(i).parse::<f64>().map_err(|_| bad(i));
        let u = |i: usize| field(i).parse::<usize>().map_err(|_| bad(i));
        let of = |i: usize| match field(i) {
            "" => Ok(None),
            s => s.parse::<f64>().map(Some).map_err(|_| bad(i)),
        };
        let ob = |i: usize| match field(i) {
            "" => Ok(None),
            s => s.parse::<bool>().map(Some).map_err(|_| bad(i)),
        };
        rows.push(Row {
            label: field(0).into(),
            level: u(1)?,
            h: f(2)?,
            tau: f(3)?,
            p_x: u(4)?,
            p_t: u(5)?,
            final_time: f(6)?,
            intervals: u(7)?,
            dofs: u(8)?,
            w1inf_l2: of(9)?,
            linf_h1: of(10)?,
            l2_h1: of(11)?,
            h1_l2: of(12)?,
            linf_l2: of(13)?,
            jump: of(14)?,
            eta: of(15)?,
            eta1: of(16)?,
            osc: of(17)?,
            kappa: of(18)?,
            stability_ok: ob(19)?,
            rates: Rates {
                w1inf_l2: of(20)?,
                linf_h1: of(21)?,
                linf_l2: of(22)?,
                jump: of(23)?,
                eta: of(24)?,
            },
            rate_param: field(25).into(),
            status: field(26).into(),
            wall_time: f(27)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_row() -> Row {
        Row {
            label: "pt=2".into(),
            level: 3,
            h: 0.4,
            tau: 0.025,
            p_x: 2,
            p_t: 2,
            final_time: 1.0,
            intervals: 40,
            dofs: 3840,
            w1inf_l2: Some(1.0 / 3.0),
            linf_h1: Some(std::f64::consts::PI * 1e-7),
            linf_l2: Some(2.5e-300),
            jump: Some(0.1),
            eta: Some(12.345678901234567),
            stability_ok: Some(true),
            rates: Rates {
                w1inf_l2: Some(-1.999),
                ..Rates::default()
            },
            rate_param: "tau".into(),
            status: "ok".into(),
            wall_time: 0.125,
            ..Row::default()
        }
    }

    fn close(a: Option<f64>, b: Option<f64>) -> bool {
        match (a, b) {
            (None, None) => true,
            (Some(a), Some(b)) => (a - b).abs() <= 1e-12 * a.abs().max(b.abs()),
            _ => false,
        }
    }

    #[test]
    fn empty_result_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        emit_csv(&ExperimentResult::default(), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, format!("{}\n", COLUMNS.join(",")));
        assert!(read_csv(&path).unwrap().is_empty());
    }

    #[test]
    fn one_row_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/one.csv");
        let row = sample_row();
        let result = ExperimentResult {
            suite: "tau_refine".into(),
            rows: vec![row.clone()],
        };
        emit_csv(&result, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
        let back = read_csv(&path).unwrap();
        assert_eq!(back.len(), 1);
        let b = &back[0];
        assert_eq!((b.label.as_str(), b.level, b.p_x, b.p_t), ("pt=2", 3, 2, 2));
        assert_eq!((b.intervals, b.dofs), (40, 3840));
        for (x, y) in [
            (row.w1inf_l2, b.w1inf_l2),
            (row.linf_h1, b.linf_h1),
            (row.linf_l2, b.linf_l2),
            (row.jump, b.jump),
            (row.eta, b.eta),
            (row.l2_h1, b.l2_h1),
            (row.rates.w1inf_l2, b.rates.w1inf_l2),
            (Some(row.h), Some(b.h)),
            (Some(row.tau), Some(b.tau)),
        ] {
            assert!(close(x, y), "{x:?} vs {y:?}");
        }
        assert_eq!(b.stability_ok, Some(true));
        assert_eq!(b.status, "ok");
    }

    #[test]
    fn scientific_notation_with_dot() {
        let rec = record(&sample_row());
        assert_eq!(rec[2], "4.000000000000000e-1");
        assert!(rec[9].contains('.') && rec[9].contains('e'));
    }

    #[test]
    fn unwritable_path_names_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "x").unwrap();
        let err = emit_csv(&ExperimentResult::default(), &blocker.join("out.csv")).unwrap_err();
        assert!(err.to_string().contains("file"), "{err}");
    }
}

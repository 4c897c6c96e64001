//! Trajectory and feasibility CSV files and the QP JSON exchange format.
//!
//! Floats are written with 17 significant digits so every value round-trips.

use std::io;
use std::path::Path;

use ncbf_core::acc::{AccState, TrajectoryRecord};
use ncbf_core::feasibility::FeasibilityReport;
use ncbf_core::{Matrix, QpError, QpProblem, SolveStatus, Vector};
use serde::{Deserialize, Serialize};

pub const TRAJECTORY_HEADER: [&str; 11] =
    ["t", "v", "z", "u", "delta", "theta", "Theta", "V", "qp_status", "qp_iters", "feas_margin"];

pub const FEASIBILITY_HEADER: [&str; 8] = ["t", "Theta", "theta", "lhs", "alphaTheta", "margin", "satisfied", "Y"];

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

#[derive(Debug)]
pub enum FormatError {
    Io(io::Error),
    Csv(csv::Error),
    Json(serde_json::Error),
    Invalid(String),
}

impl std::fmt::Display for FormatError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FormatError::Io(e) => write!(f, "{e}"),
            FormatError::Csv(e) => write!(f, "{e}"),
            FormatError::Json(e) => write!(f, "{e}"),
            FormatError::Invalid(s) => f.write_str(s),
        }
    }
}

impl std::error::Error for FormatError {}

impl From<io::Error> for FormatError {
    fn from(e: io::Error) -> Self {
        FormatError::Io(e)
    }
}

impl From<csv::Error> for FormatError {
    fn from(e: csv::Error) -> Self {
        FormatError::Csv(e)
    }
}

impl From<serde_json::Error> for FormatError {
    fn from(e: serde_json::Error) -> Self {
        FormatError::Json(e)
    }
}

pub fn write_trajectory<W: io::Write>(out: W, records: &[TrajectoryRecord]) -> Result<(), FormatError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJECTORY_HEADER)?;
    for r in records {
        w.write_record([
            fmt_f64(r.t),
            fmt_f64(r.state.v),
            fmt_f64(r.state.z),
            fmt_f64(r.u),
            fmt_f64(r.delta),
            fmt_f64(r.theta),
            fmt_f64(r.big_theta),
            fmt_f64(r.lyapunov),
            r.qp_status.as_str().to_string(),
            r.qp_iters.to_string(),
            fmt_opt(r.feasibility_margin),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trajectory_file(path: &Path, records: &[TrajectoryRecord]) -> Result<(), FormatError> {
    write_trajectory(std::fs::File::create(path)?, records)
}

/// One parsed trajectory CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub state: AccState,
    pub u: f64,
    pub delta: f64,
    pub theta: f64,
    pub big_theta: f64,
    pub lyapunov: f64,
    pub qp_status: SolveStatus,
    pub qp_iters: usize,
    pub feasibility_margin: Option<f64>,
}

fn parse_f64(field: &str, col: &str, line: usize) -> Result<f64, FormatError> {
    field.trim().parse().map_err(|_| FormatError::Invalid(format!("line {line}: bad `{col}` value {field:?}")))
}

pub fn read_trajectory<R: io::Read>(input: R) -> Result<Vec<TrajectoryRow>, FormatError> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers()?.clone();
    if header.iter().ne(TRAJECTORY_HEADER) {
        return Err(FormatError::Invalid(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut rows = Vec::new();
    for (k, rec) in rd.records().enumerate() {
        let rec = rec?;
        let line = k + 2;
        let f = |i: usize| parse_f64(&rec[i], TRAJECTORY_HEADER[i], line);
        rows.push(TrajectoryRow {
            t: f(0)?,
            state: AccState::new(f(1)?, f(2)?),
            u: f(3)?,
            delta: f(4)?,
            theta: f(5)?,
            big_theta: f(6)?,
            lyapunov: f(7)?,
            qp_status: SolveStatus::parse(&rec[8])
                .ok_or_else(|| FormatError::Invalid(format!("line {line}: bad `qp_status` {:?}", &rec[8])))?,
            qp_iters: rec[9]
                .parse()
                .map_err(|_| FormatError::Invalid(format!("line {line}: bad `qp_iters` {:?}", &rec[9])))?,
            feasibility_margin: if rec[10].is_empty() { None } else { Some(f(10)?) },
        });
    }
    Ok(rows)
}

pub fn read_trajectory_file(path: &Path) -> Result<Vec<TrajectoryRow>, FormatError> {
    read_trajectory(std::fs::File::open(path)?)
}

/// A feasibility row; `report` is absent where `θ ≤ 0` or `Θ ≤ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityRow {
    pub t: f64,
    pub big_theta: f64,
    pub theta: f64,
    pub report: Option<FeasibilityReport>,
}

impl FeasibilityRow {
    pub fn satisfied(&self) -> bool {
        self.report.as_ref().is_some_and(|r| r.satisfied)
    }
}

pub fn write_feasibility<W: io::Write>(out: W, rows: &[FeasibilityRow]) -> Result<(), FormatError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FEASIBILITY_HEADER)?;
    for r in rows {
        let rep = r.report.as_ref();
        w.write_record([
            fmt_f64(r.t),
            fmt_f64(r.big_theta),
            fmt_f64(r.theta),
            fmt_opt(rep.map(|x| x.lhs)),
            fmt_opt(rep.map(|x| x.alpha_theta)),
            fmt_opt(rep.map(|x| x.margin)),
            r.satisfied().to_string(),
            fmt_opt(rep.map(|x| x.y_value)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `{"P": [[..]], "G": [..], "A": [[..]], "theta": [..]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QpJson {
    #[serde(rename = "P")]
    pub p: Vec<Vec<f64>>,
    #[serde(rename = "G")]
    pub g: Vec<f64>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub theta: Vec<f64>,
}

impl QpJson {
    pub fn from_problem(qp: &QpProblem) -> Self {
        let rows = |m: &Matrix| (0..m.rows()).map(|i| m.row(i).to_vec()).collect();
        QpJson {
            p: rows(qp.p()),
            g: qp.g().as_slice().to_vec(),
            a: rows(qp.a()),
            theta: qp.theta().as_slice().to_vec(),
        }
    }

    pub fn to_problem(&self) -> Result<QpProblem, FormatError> {
        let n = self.g.len();
        let matrix = |name: &str, rows: &[Vec<f64>]| {
            if rows.iter().any(|r| r.len() != n) {
                return Err(FormatError::Invalid(format!("every row of `{name}` needs {n} entries")));
            }
            Ok(Matrix::from_row_major(rows.len(), n, rows.concat()).expect("row lengths checked"))
        };
        let p = matrix("P", &self.p)?;
        let a = matrix("A", &self.a)?;
        QpProblem::new(p, Vector::from_slice(&self.g), a, Vector::from_slice(&self.theta))
            .map_err(|e: QpError| FormatError::Invalid(e.to_string()))
    }
}

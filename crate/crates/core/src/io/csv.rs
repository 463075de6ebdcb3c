//! CSV output with a fixed column order, plus a small reader used to
//! regenerate plots from written tables.
//!
//! Comma separated, one header row, LF line endings, floats in shortest
//! round-trip form. Fields never contain commas, so no quoting is used.

use super::{fmt_f64, ParseError};
use crate::analysis::{PowerPoint, SweepAxis, SweepTable};
use crate::cycle::{CycleConfig, CycleResult};

/// Columns following the axis column(s) in sweep and cycle tables.
pub const RESULT_COLUMNS: [&str; 14] = [
    "E_A", "E_B", "E_C", "E_D", "Q_in", "Q_out", "W", "W_tilde", "excess", "eta", "P", "regime", "E_A_excess",
    "E_C_residual",
];

pub const TAU_MIN_COLUMNS: [&str; 8] =
    ["T_C", "tau_min_grid", "tau_min_refined", "W_tilde_abs", "P_abs", "excess_at_tau_min", "epsilon", "censored"];

fn header(axes: &[&str], rest: &[&str]) -> String {
    let mut s = axes.iter().chain(rest).copied().collect::<Vec<_>>().join(",");
    s.push('\n');
    s
}

fn result_fields(r: &CycleResult) -> Vec<String> {
    vec![
        fmt_f64(r.e_a),
        fmt_f64(r.e_b),
        fmt_f64(r.e_c),
        fmt_f64(r.e_d),
        fmt_f64(r.q_in),
        fmt_f64(r.q_out),
        fmt_f64(r.work),
        fmt_f64(r.work_adiabatic),
        fmt_f64(r.work_deficit()),
        r.efficiency.map(fmt_f64).unwrap_or_default(),
        fmt_f64(r.power),
        r.regime.to_string(),
        fmt_f64(r.e_a_excess),
        fmt_f64(r.e_c_residual),
    ]
}

fn error_fields() -> Vec<String> {
    let mut v = vec![String::new(); RESULT_COLUMNS.len()];
    v[11] = "error".into();
    v
}

/// One-row table for a single cycle; the axis columns are `tau2,T_C`.
pub fn cycle_csv(cfg: &CycleConfig, r: &CycleResult) -> String {
    let mut out = header(&["tau2", "T_C"], &RESULT_COLUMNS);
    let mut row = vec![fmt_f64(cfg.tau2), fmt_f64(cfg.t_cold)];
    row.extend(result_fields(r));
    out.push_str(&row.join(","));
    out.push('\n');
    out
}

pub fn axis_columns(axis: &SweepAxis) -> &'static [&'static str] {
    match axis {
        SweepAxis::Tau2 { .. } => &["tau2"],
        SweepAxis::ColdTemperature { .. } => &["T_C"],
        SweepAxis::Tau2AndColdTemperature { .. } => &["tau2", "T_C"],
    }
}

pub fn sweep_csv(table: &SweepTable) -> String {
    let axes = axis_columns(&table.spec.axis);
    let mut out = header(axes, &RESULT_COLUMNS);
    for row in &table.rows {
        let mut fields: Vec<String> = axes
            .iter()
            .map(|a| fmt_f64(if *a == "tau2" { row.config.tau2 } else { row.config.t_cold }))
            .collect();
        match &row.result {
            Ok(r) => fields.extend(result_fields(r)),
            Err(_) => fields.extend(error_fields()),
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Rows are `(T_C, outcome)`; a failed detection leaves the numeric fields empty.
pub fn tau_min_csv<E>(rows: &[(f64, Result<PowerPoint, E>)]) -> String {
    let mut out = header(&[], &TAU_MIN_COLUMNS);
    for (tc, row) in rows {
        let fields = match row {
            Ok(p) => vec![
                fmt_f64(p.t_cold),
                fmt_f64(p.tau_min.tau_min_grid),
                fmt_f64(p.tau_min.tau_min),
                fmt_f64(p.work_adiabatic_abs),
                fmt_f64(p.power_abs),
                fmt_f64(p.tau_min.deficit_at_tau_min),
                fmt_f64(p.tau_min.epsilon),
                (p.tau_min.censoring == crate::analysis::Censoring::Left).to_string(),
            ],
            Err(_) => {
                let mut v = vec![String::new(); TAU_MIN_COLUMNS.len()];
                v[0] = fmt_f64(*tc);
                v[7] = "not_found".into();
                v
            }
        };
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub const ANALYTIC_COLUMNS: [&str; 6] =
    ["tau2", "T_C", "numerical_excess", "analytic_sum", "analytic_scaled", "relative_deviation"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticRow {
    pub tau2: f64,
    pub t_cold: f64,
    pub numerical: f64,
    pub analytic: f64,
    pub scaled: f64,
}

impl AnalyticRow {
    pub fn relative_deviation(&self) -> f64 {
        (self.scaled - self.numerical) / self.numerical
    }
}

pub fn analytic_csv(rows: &[AnalyticRow]) -> String {
    let mut out = header(&[], &ANALYTIC_COLUMNS);
    for r in rows {
        let f = [r.tau2, r.t_cold, r.numerical, r.analytic, r.scaled, r.relative_deviation()];
        out.push_str(&f.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

/// Parsed CSV text: a header and rows of equal width.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Numeric view of a column; empty or non-numeric cells become `None`.
    pub fn column_f64(&self, name: &str) -> Result<Vec<Option<f64>>, ParseError> {
        let i = self.column_index(name).ok_or_else(|| ParseError::new("csv", format!("no column {name:?}")))?;
        Ok(self.rows.iter().map(|r| r[i].parse::<f64>().ok().filter(|v| v.is_finite())).collect())
    }

    /// Pairs of a column with another, dropping rows where either is missing
    /// and rows whose `censored` column is `true`.
    pub fn xy(&self, x: &str, y: &str) -> Result<(Vec<f64>, Vec<f64>), ParseError> {
        let xs = self.column_f64(x)?;
        let ys = self.column_f64(y)?;
        let censored = self.column_index("censored");
        Ok(xs
            .into_iter()
            .zip(ys)
            .zip(&self.rows)
            .filter(|(_, row)| censored.is_none_or(|c| row[c] != "true"))
            .filter_map(|((a, b), _)| Some((a?, b?)))
            .unzip())
    }
}

pub fn parse_csv(text: &str) -> Result<CsvTable, ParseError> {
    let mut lines = text.split('\n');
    let head = lines.next().filter(|h| !h.trim().is_empty()).ok_or_else(|| ParseError::new("csv", "missing header"))?;
    let header: Vec<String> = head.split(',').map(str::to_string).collect();
    if header.iter().any(|h| h.is_empty()) {
        return Err(ParseError::new("csv", "empty column name"));
    }
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        if line.contains('\r') {
            return Err(ParseError::new("csv", "CR line endings are not accepted"));
        }
        let row: Vec<String> = line.split(',').map(str::to_string).collect();
        if row.len() != header.len() {
            return Err(ParseError::new(
                "csv",
                format!("row {} has {} fields, header has {}", n + 2, row.len(), header.len()),
            ));
        }
        rows.push(row);
    }
    Ok(CsvTable { header, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_basic() {
        let t = parse_csv("x,y\n1,2\n3,\n").unwrap();
        assert_eq!(t.header, vec!["x", "y"]);
        assert_eq!(t.column_f64("y").unwrap(), vec![Some(2.0), None]);
        assert_eq!(t.xy("x", "y").unwrap(), (vec![1.0], vec![2.0]));
        assert!(t.column_f64("z").is_err());
        let t = parse_csv("x,y,censored\n1,2,true\n3,4,false\n").unwrap();
        assert_eq!(t.xy("x", "y").unwrap(), (vec![3.0], vec![4.0]));
    }

    #[test]
    fn parse_rejects_ragged_and_empty() {
        assert!(parse_csv("").is_err());
        assert!(parse_csv("a,b\n1\n").is_err());
        assert!(parse_csv("a,,b\n").is_err());
        assert!(parse_csv("a,b\r\n1,2\r\n").is_err());
    }

    #[test]
    fn float_text_round_trips() {
        for x in [0.1, 1e-300, 123456789.125, -2.5e17, 1.0 / 3.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }
}

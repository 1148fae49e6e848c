//! Trajectory CSV: one row per record, numbers with 17 significant digits.

use std::io::{BufRead, Write};

use super::IoError;
use crate::dynamics::TrajectoryRecord;

pub const CSV_HEADER: &str =
    "t,L1,Lp,L2,Linf,Halpha2,min_u,osc,v_min,v_max,env_L1,env_Lp,env_Linf,flags";

/// Numeric columns of one CSV row, in header order.
pub type CsvRow = ([f64; 13], Vec<String>);

fn number(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_trajectory_csv<W: Write>(mut out: W, records: &[TrajectoryRecord]) -> Result<(), IoError> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        let cols = [
            r.t, r.l1, r.lp, r.l2, r.linf, r.h_alpha2, r.min_u, r.osc, r.v_min, r.v_max, r.env_l1,
            r.env_lp, r.env_linf,
        ];
        let nums: Vec<String> = cols.iter().map(|&x| number(x)).collect();
        let flags: Vec<&str> = r.flags.iter().map(|f| f.label()).collect();
        writeln!(out, "{},{}", nums.join(","), flags.join(";"))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_trajectory_csv<R: BufRead>(input: R) -> Result<Vec<CsvRow>, IoError> {
    let mut lines = input.lines();
    let header = lines.next().transpose()?;
    if header.as_deref() != Some(CSV_HEADER) {
        return Err(IoError::Format("missing trajectory CSV header".into()));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 14 {
            return Err(IoError::Format(format!("row {} has {} columns", i + 1, fields.len())));
        }
        let mut nums = [0.0; 13];
        for (slot, text) in nums.iter_mut().zip(&fields) {
            *slot = text
                .parse()
                .map_err(|_| IoError::Format(format!("row {}: bad number {text:?}", i + 1)))?;
        }
        let flags = fields[13]
            .split(';')
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect();
        rows.push((nums, flags));
    }
    Ok(rows)
}

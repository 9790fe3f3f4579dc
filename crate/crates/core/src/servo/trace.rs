//! Servo trace records and their CSV forms.

use std::io::{self, BufRead, Write};

use nalgebra::Vector4;

use super::{FeatureSet, Twist};
use crate::camera::PixelPoint;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    /// Simulation time (s), `iteration · dt`.
    pub time: f64,
    /// Joint angles at which the features were rendered.
    pub q: Vector4<f64>,
    /// Joint rates commanded from this state.
    pub qdot: Vector4<f64>,
    pub pixels: Vec<PixelPoint>,
    pub depths: Vec<f64>,
    /// Euclidean pixel error of each feature.
    pub feature_errors: Vec<f64>,
    /// Euclidean norm of the stacked error vector.
    pub total_error: f64,
    pub twist: Twist,
}

/// Write-once log of a servo run.
#[derive(Debug, Clone, PartialEq)]
pub struct ServoTrace {
    pub desired: FeatureSet,
    pub records: Vec<TraceRecord>,
}

impl ServoTrace {
    pub fn new(desired: FeatureSet) -> Self {
        Self {
            desired,
            records: Vec::new(),
        }
    }

    pub fn initial_error(&self) -> Option<f64> {
        self.records.first().map(|r| r.total_error)
    }

    pub fn final_error(&self) -> Option<f64> {
        self.records.last().map(|r| r.total_error)
    }

    /// `iter,t,q1..q4,u1,v1,...,uN,vN,e1..eN,e_total,vx,vy,vz,wx,wy,wz`.
    pub fn csv_header(features: usize) -> String {
        let mut cols = vec!["iter".to_string(), "t".to_string()];
        cols.extend((1..=4).map(|i| format!("q{i}")));
        for i in 1..=features {
            cols.push(format!("u{i}"));
            cols.push(format!("v{i}"));
        }
        cols.extend((1..=features).map(|i| format!("e{i}")));
        cols.push("e_total".into());
        cols.extend(["vx", "vy", "vz", "wx", "wy", "wz"].map(String::from));
        cols.join(",")
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{}", Self::csv_header(self.desired.len()))?;
        for r in &self.records {
            let mut fields = vec![r.iteration.to_string(), r.time.to_string()];
            fields.extend(r.q.iter().map(f64::to_string));
            for p in &r.pixels {
                fields.push(p.u.to_string());
                fields.push(p.v.to_string());
            }
            fields.extend(r.feature_errors.iter().map(f64::to_string));
            fields.push(r.total_error.to_string());
            fields.extend(r.twist.to_vector().iter().map(f64::to_string));
            writeln!(out, "{}", fields.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DesiredCsvError {
    #[error("desired-feature CSV is empty")]
    Empty,
    #[error("bad header {0:?}; expected u1,v1,...,uN,vN")]
    Header(String),
    #[error("row {row}: {reason}")]
    Row { row: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Reads the first data row of a `u1,v1,...,uN,vN` CSV.
pub fn read_desired_csv<R: BufRead>(input: R) -> Result<Vec<PixelPoint>, DesiredCsvError> {
    let mut lines = input.lines();
    let header = lines.next().ok_or(DesiredCsvError::Empty)??;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let n = cols.len() / 2;
    let expected: Vec<String> = (1..=n)
        .flat_map(|i| [format!("u{i}"), format!("v{i}")])
        .collect();
    if n == 0 || cols.len() % 2 != 0 || cols != expected {
        return Err(DesiredCsvError::Header(header));
    }
    let row = lines
        .find(|l| l.as_ref().map(|s| !s.trim().is_empty()).unwrap_or(true))
        .ok_or(DesiredCsvError::Empty)??;
    let values = row
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| DesiredCsvError::Row {
            row: 1,
            reason: e.to_string(),
        })?;
    if values.len() != cols.len() {
        return Err(DesiredCsvError::Row {
            row: 1,
            reason: format!("expected {} values, got {}", cols.len(), values.len()),
        });
    }
    Ok(values
        .chunks(2)
        .map(|c| PixelPoint::new(c[0], c[1]))
        .collect())
}

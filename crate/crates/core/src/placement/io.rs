//! Offline dump/load of solver instances as a CSV pair.
//!
//! `values.csv`:
//!
//! ```text
//! avatar,current,v_0,v_1,...,v_{J-1}
//! 0,3,-4.5,-2.0,...
//! ```
//!
//! `capacities.csv`:
//!
//! ```text
//! cloudlet,capacity
//! 0,50
//! ```
//!
//! Rows must list avatars and cloudlets in ascending index order. Values
//! are written with Rust's shortest round-trip float formatting, so a
//! dump/load cycle is lossless.

use std::io::{Read, Write};

use super::exchange::{self, ValueMatrix};
use super::{PlacementError, PlacementInstance};

#[derive(Debug, thiserror::Error)]
pub enum InstanceIoError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{file} line {line}: {message}")]
    Format {
        file: &'static str,
        line: u64,
        message: String,
    },
}

/// A solver instance reduced to what the flow solver consumes.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueInstance {
    pub values: ValueMatrix,
    pub current: Vec<usize>,
    pub capacities: Vec<usize>,
}

impl ValueInstance {
    pub fn from_instance(instance: &PlacementInstance<'_>) -> Self {
        Self {
            values: instance.values(),
            current: instance.current.0.clone(),
            capacities: instance.capacities.to_vec(),
        }
    }

    pub fn solve(&self) -> Result<Vec<usize>, PlacementError> {
        exchange::maximize(&self.values, &self.current, &self.capacities)
    }

    pub fn write<W: Write, U: Write>(&self, values_out: W, capacities_out: U) -> Result<(), InstanceIoError> {
        let m = self.values.num_cloudlets();
        let mut w = csv::Writer::from_writer(values_out);
        let mut header = vec!["avatar".to_string(), "current".to_string()];
        header.extend((0..m).map(|j| format!("v_{j}")));
        w.write_record(&header)?;
        for (i, cur) in self.current.iter().enumerate() {
            let mut rec = vec![i.to_string(), cur.to_string()];
            rec.extend(self.values.row(i).iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        let mut w = csv::Writer::from_writer(capacities_out);
        w.write_record(["cloudlet", "capacity"])?;
        for (j, cap) in self.capacities.iter().enumerate() {
            w.write_record([j.to_string(), cap.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read<R: Read, U: Read>(values_in: R, capacities_in: U) -> Result<Self, InstanceIoError> {
        fn field<T: std::str::FromStr>(
            file: &'static str,
            rec: &csv::StringRecord,
            idx: usize,
        ) -> Result<T, InstanceIoError> {
            let line = rec.position().map_or(0, |p| p.line());
            let raw = rec.get(idx).ok_or_else(|| InstanceIoError::Format {
                file,
                line,
                message: format!("missing column {idx}"),
            })?;
            raw.trim().parse().map_err(|_| InstanceIoError::Format {
                file,
                line,
                message: format!("cannot parse `{raw}`"),
            })
        }

        let mut caps = Vec::new();
        let mut r = csv::Reader::from_reader(capacities_in);
        for rec in r.records() {
            let rec = rec?;
            let idx: usize = field("capacities.csv", &rec, 0)?;
            if idx != caps.len() {
                return Err(InstanceIoError::Format {
                    file: "capacities.csv",
                    line: rec.position().map_or(0, |p| p.line()),
                    message: format!("expected cloudlet {}, found {idx}", caps.len()),
                });
            }
            caps.push(field("capacities.csv", &rec, 1)?);
        }
        let m = caps.len();
        let mut current = Vec::new();
        let mut values = Vec::new();
        let mut r = csv::ReaderBuilder::new().flexible(true).from_reader(values_in);
        for rec in r.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.len() != m + 2 {
                return Err(InstanceIoError::Format {
                    file: "values.csv",
                    line,
                    message: format!("expected {} columns, found {}", m + 2, rec.len()),
                });
            }
            let idx: usize = field("values.csv", &rec, 0)?;
            if idx != current.len() {
                return Err(InstanceIoError::Format {
                    file: "values.csv",
                    line,
                    message: format!("expected avatar {}, found {idx}", current.len()),
                });
            }
            current.push(field("values.csv", &rec, 1)?);
            for j in 0..m {
                values.push(field::<f64>("values.csv", &rec, j + 2)?);
            }
        }
        let n = current.len();
        Ok(Self {
            values: ValueMatrix::new(n, m, values),
            current,
            capacities: caps,
        })
    }
}

//! Comma-separated tables: daily profiles, conditions, ensembles, metric
//! traces and the waterfall grid.
//!
//! Readers reject anything that is not a finite number; writers sort rows
//! deterministically and print floats in shortest round-trip form.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::path::Path;

use csv::{ReaderBuilder, StringRecord, WriterBuilder};

use crate::error::{Error, Result};
use crate::metrics::{DatasetTag, PerformanceTrace, Variant, WaterfallGrid};
use crate::sampler::Ensemble;

/// One measured (or generated) day.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub id: String,
    pub values: Vec<f64>,
}

/// Shortest representation that parses back to the same bits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn parse_f64(field: &str, line: usize, column: usize) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
        line,
        column,
        message: format!("'{field}' is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            column,
            message: format!("'{field}' is not finite"),
        });
    }
    Ok(v)
}

fn parse_usize(field: &str, line: usize, column: usize) -> Result<usize> {
    field.trim().parse().map_err(|_| Error::Parse {
        line,
        column,
        message: format!("'{field}' is not a non-negative integer"),
    })
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        line,
        column: 0,
        message: e.to_string(),
    }
}

/// Reads all records, checking the header and that every row has as many
/// fields as the header.
fn read_table(path: &Path) -> Result<(StringRecord, Vec<(usize, StringRecord)>)> {
    let mut rdr = ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Parse {
                line: 0,
                column: 0,
                message: format!("{other:?}"),
            },
        })?;
    let header = rdr.headers().map_err(csv_error)?.clone();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != header.len() {
            return Err(Error::RaggedRow {
                row: line,
                expected: header.len(),
                found: rec.len(),
            });
        }
        rows.push((line, rec));
    }
    Ok((header, rows))
}

fn expect_header(header: &StringRecord, expected: &[String]) -> Result<()> {
    for (i, name) in expected.iter().enumerate() {
        if header.get(i) != Some(name.as_str()) {
            return Err(Error::Parse {
                line: 1,
                column: i + 1,
                message: format!("expected column '{name}', found '{}'", header.get(i).unwrap_or("")),
            });
        }
    }
    if header.len() != expected.len() {
        return Err(Error::Parse {
            line: 1,
            column: expected.len() + 1,
            message: format!("expected {} columns, found {}", expected.len(), header.len()),
        });
    }
    Ok(())
}

fn numbered(prefix: &str, range: std::ops::RangeInclusive<usize>) -> impl Iterator<Item = String> + '_ {
    range.map(move |i| format!("{prefix}{i}"))
}

/// Reads `instance_id,<prefix>1..<prefix>N` rows.
fn read_keyed_vectors(path: &Path, prefix: &str) -> Result<Vec<Profile>> {
    let (header, rows) = read_table(path)?;
    if header.is_empty() {
        return Err(Error::Parse {
            line: 1,
            column: 1,
            message: "missing header".into(),
        });
    }
    let width = header.len() - 1;
    let expected: Vec<String> = std::iter::once("instance_id".to_string())
        .chain(numbered(prefix, 1..=width))
        .collect();
    expect_header(&header, &expected)?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(rows.len());
    for (line, rec) in rows {
        let id = rec[0].to_string();
        if id.is_empty() {
            return Err(Error::Parse {
                line,
                column: 1,
                message: "empty instance id".into(),
            });
        }
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId(id));
        }
        let values = rec
            .iter()
            .enumerate()
            .skip(1)
            .map(|(col, f)| parse_f64(f, line, col + 1))
            .collect::<Result<_>>()?;
        out.push(Profile { id, values });
    }
    Ok(out)
}

fn open_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(WriterBuilder::new().from_writer(file))
}

fn write_rows<W: Write>(
    wtr: &mut csv::Writer<W>,
    path: &Path,
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    for row in rows {
        wtr.write_record(&row)
            .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))
}

/// Profiles in file order. Every row must have the same number of steps.
pub fn read_profiles(path: impl AsRef<Path>) -> Result<Vec<Profile>> {
    read_keyed_vectors(path.as_ref(), "t")
}

/// Writes profiles sorted by instance id.
pub fn write_profiles(profiles: &[Profile], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let width = profiles.first().map_or(0, |p| p.values.len());
    if profiles.iter().any(|p| p.values.len() != width) {
        return Err(Error::ShapeMismatch("profiles differ in length".into()));
    }
    let mut sorted: Vec<&Profile> = profiles.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    let header = std::iter::once("instance_id".to_string())
        .chain(numbered("t", 1..=width))
        .collect();
    let body = sorted.into_iter().map(|p| {
        std::iter::once(p.id.clone())
            .chain(p.values.iter().map(|v| fmt_f64(*v)))
            .collect()
    });
    write_rows(&mut open_writer(path)?, path, std::iter::once(header).chain(body))
}

/// `instance_id,c1..cC` condition records keyed by instance id.
pub fn read_conditions(path: impl AsRef<Path>) -> Result<BTreeMap<String, Vec<f64>>> {
    Ok(read_keyed_vectors(path.as_ref(), "c")?
        .into_iter()
        .map(|p| (p.id, p.values))
        .collect())
}

pub fn write_conditions(conditions: &BTreeMap<String, Vec<f64>>, path: impl AsRef<Path>) -> Result<()> {
    let profiles: Vec<Profile> = conditions
        .iter()
        .map(|(id, c)| Profile {
            id: id.clone(),
            values: c.clone(),
        })
        .collect();
    let path = path.as_ref();
    let width = profiles.first().map_or(0, |p| p.values.len());
    if profiles.iter().any(|p| p.values.len() != width) {
        return Err(Error::ShapeMismatch("condition records differ in length".into()));
    }
    let header = std::iter::once("instance_id".to_string())
        .chain(numbered("c", 1..=width))
        .collect();
    let body = profiles.into_iter().map(|p| {
        std::iter::once(p.id)
            .chain(p.values.iter().map(|v| fmt_f64(*v)))
            .collect()
    });
    write_rows(&mut open_writer(path)?, path, std::iter::once(header).chain(body))
}

/// `instance_id,generator` rows recording which component produced each day.
pub fn write_generators(rows: &[(String, u64)], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut sorted = rows.to_vec();
    sorted.sort();
    let header = vec!["instance_id".to_string(), "generator".to_string()];
    let body = sorted.into_iter().map(|(id, g)| vec![id, g.to_string()]);
    write_rows(&mut open_writer(path)?, path, std::iter::once(header).chain(body))
}

/// Ensembles as `instance_id,trace,component,t<T′+1>..t<T>`, sorted by
/// instance id then trace. All ensembles must share `T′` and width.
pub fn write_ensembles(ensembles: &[Ensemble], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_ensembles_impl(ensembles, file, path)
}

/// Same layout as [`write_ensembles`], to any writer.
pub fn write_ensembles_to<W: Write>(ensembles: &[Ensemble], w: W) -> Result<()> {
    write_ensembles_impl(ensembles, w, Path::new("<stream>"))
}

fn write_ensembles_impl<W: Write>(ensembles: &[Ensemble], w: W, path: &Path) -> Result<()> {
    let Some(first) = ensembles.first() else {
        return Err(Error::ShapeMismatch("no ensembles to write".into()));
    };
    let (tp, steps) = (first.t_prime(), first.steps());
    if ensembles.iter().any(|e| e.t_prime() != tp || e.steps() != steps) {
        return Err(Error::ShapeMismatch("ensembles differ in update time or width".into()));
    }
    let mut sorted: Vec<&Ensemble> = ensembles.iter().collect();
    sorted.sort_by(|a, b| a.source_id().cmp(b.source_id()));
    let header = ["instance_id", "trace", "component"]
        .into_iter()
        .map(String::from)
        .chain(numbered("t", tp + 1..=tp + steps))
        .collect();
    let body = sorted.into_iter().flat_map(|e| {
        e.trajectories().row_iter().enumerate().map(move |(s, row)| {
            let comp = e.components().get(s).map_or(String::new(), |k| k.to_string());
            [e.source_id().to_string(), s.to_string(), comp]
                .into_iter()
                .chain(row.iter().map(|v| fmt_f64(*v)))
                .collect()
        })
    });
    write_rows(
        &mut WriterBuilder::new().from_writer(w),
        path,
        std::iter::once(header).chain(body),
    )
}

const TRACE_HEADER: [&str; 5] = ["dataset_tag", "variant", "metric", "t_prime", "value"];
const GRID_HEADER: [&str; 4] = ["variant", "t_prime", "t", "value"];

/// Traces as long-form rows sorted by (metric, variant, t_prime).
pub fn write_traces(traces: &[PerformanceTrace], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut rows: Vec<(&str, Variant, usize, DatasetTag, f64)> = Vec::new();
    let mut keys = HashSet::new();
    for t in traces {
        for (&tp, &v) in &t.values {
            if !keys.insert((t.metric.clone(), t.variant, tp)) {
                return Err(Error::ShapeMismatch(format!(
                    "duplicate trace key ({}, {}, {tp})",
                    t.metric, t.variant
                )));
            }
            if !v.is_finite() {
                return Err(Error::NonFiniteInput("trace value"));
            }
            rows.push((&t.metric, t.variant, tp, t.dataset, v));
        }
    }
    rows.sort_by(|a, b| (a.0, a.1, a.2).cmp(&(b.0, b.1, b.2)));
    let header = TRACE_HEADER.iter().map(|s| s.to_string()).collect();
    let body = rows.into_iter().map(|(m, var, tp, ds, v)| {
        vec![
            ds.to_string(),
            var.to_string(),
            m.to_string(),
            tp.to_string(),
            fmt_f64(v),
        ]
    });
    write_rows(&mut open_writer(path)?, path, std::iter::once(header).chain(body))
}

pub fn read_traces(path: impl AsRef<Path>) -> Result<Vec<PerformanceTrace>> {
    let (header, rows) = read_table(path.as_ref())?;
    let expected: Vec<String> = TRACE_HEADER.iter().map(|s| s.to_string()).collect();
    expect_header(&header, &expected)?;
    let mut traces: BTreeMap<(String, Variant), PerformanceTrace> = BTreeMap::new();
    for (line, rec) in rows {
        let bad = |col: usize, e: Error| Error::Parse {
            line,
            column: col,
            message: e.to_string(),
        };
        let dataset: DatasetTag = rec[0].parse().map_err(|e| bad(1, e))?;
        let variant: Variant = rec[1].parse().map_err(|e| bad(2, e))?;
        let metric = rec[2].to_string();
        let tp = parse_usize(&rec[3], line, 4)?;
        let v = parse_f64(&rec[4], line, 5)?;
        let trace = traces
            .entry((metric.clone(), variant))
            .or_insert_with(|| PerformanceTrace::new(metric.clone(), variant, dataset));
        if trace.values.insert(tp, v).is_some() {
            return Err(Error::Parse {
                line,
                column: 4,
                message: format!("duplicate key ({metric}, {variant}, {tp})"),
            });
        }
    }
    Ok(traces.into_values().collect())
}

/// Grid rows sorted by (variant, t_prime, t).
pub fn write_grid(grids: &BTreeMap<Variant, WaterfallGrid>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let header = GRID_HEADER.iter().map(|s| s.to_string()).collect();
    let body = grids.iter().flat_map(|(variant, grid)| {
        grid.iter()
            .map(move |((tp, t), v)| vec![variant.to_string(), tp.to_string(), t.to_string(), fmt_f64(v)])
    });
    write_rows(&mut open_writer(path)?, path, std::iter::once(header).chain(body))
}

pub fn read_grid(path: impl AsRef<Path>) -> Result<BTreeMap<Variant, WaterfallGrid>> {
    let (header, rows) = read_table(path.as_ref())?;
    let expected: Vec<String> = GRID_HEADER.iter().map(|s| s.to_string()).collect();
    expect_header(&header, &expected)?;
    let mut grids: BTreeMap<Variant, WaterfallGrid> = BTreeMap::new();
    for (line, rec) in rows {
        let variant: Variant = rec[0].parse().map_err(|e: Error| Error::Parse {
            line,
            column: 1,
            message: e.to_string(),
        })?;
        let tp = parse_usize(&rec[1], line, 2)?;
        let t = parse_usize(&rec[2], line, 3)?;
        let v = parse_f64(&rec[3], line, 4)?;
        grids
            .entry(variant)
            .or_default()
            .insert(tp, t, v)
            .map_err(|e| Error::Parse {
                line,
                column: 3,
                message: e.to_string(),
            })?;
    }
    Ok(grids)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for v in [0.1, 1e-300, 123456789.125, -0.0, 5e-324, 1.0 / 3.0] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
    }

    #[test]
    fn rejects_nan_and_empty_cells() {
        assert!(parse_f64("NaN", 2, 3).is_err());
        assert!(parse_f64("inf", 2, 3).is_err());
        assert!(parse_f64("", 2, 3).is_err());
        assert_eq!(parse_f64(" 1.5", 2, 3).unwrap(), 1.5);
    }
}

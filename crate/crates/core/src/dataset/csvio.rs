use std::path::Path;

use super::{Dataset, DesignSpace, LabeledSample, SampleSource};
use crate::{Error, Result};

/// Write `x0,...,x{d-1},y` with shortest round-trip float formatting.
pub fn save_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref()).map_err(csv_io)?;
    let d = dataset.dims();
    let mut header: Vec<String> = (0..d).map(|i| format!("x{i}")).collect();
    header.push("y".into());
    w.write_record(&header).map_err(csv_io)?;
    let mut row = Vec::with_capacity(d + 1);
    for s in &dataset.samples {
        row.clear();
        row.extend(s.x.iter().map(|v| v.to_string()));
        row.push(s.y.to_string());
        w.write_record(&row).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

/// Read a dataset written by [`save_csv`].
///
/// When `space` is `None` the design space is the bounding box of the data
/// (the unit cube for an empty file).
pub fn load_csv(path: impl AsRef<Path>, space: Option<&DesignSpace>) -> Result<Dataset> {
    let path = path.as_ref();
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(csv_io)?;
    let mut records = r.records();
    let header = match records.next() {
        Some(rec) => rec.map_err(|e| parse_err(1, e.to_string()))?,
        None => return Err(parse_err(1, "missing header row".into())),
    };
    let d = header.len().saturating_sub(1);
    let well_formed = d >= 1
        && header.get(d) == Some("y")
        && (0..d).all(|i| header.get(i) == Some(format!("x{i}").as_str()));
    if !well_formed {
        return Err(parse_err(1, "header must be x0,...,x{d-1},y".into()));
    }
    let mut samples = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != d + 1 {
            return Err(parse_err(
                line,
                format!("expected {} columns, found {}", d + 1, rec.len()),
            ));
        }
        let mut vals = Vec::with_capacity(d + 1);
        for (col, cell) in rec.iter().enumerate() {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| parse_err(line, format!("column {col}: `{cell}` is not a number")))?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("column {col}: non-finite value")));
            }
            vals.push(v);
        }
        let y = vals.pop().expect("row has d + 1 cells");
        samples.push(LabeledSample {
            x: vals,
            y,
            source: SampleSource::File,
        });
    }
    let space = match space {
        Some(s) => {
            crate::check_dim(s.dims(), d)?;
            s.clone()
        }
        None => bounding_space(&samples, d)?,
    };
    Dataset::new(space, samples)
}

fn bounding_space(samples: &[LabeledSample], d: usize) -> Result<DesignSpace> {
    if samples.is_empty() {
        return DesignSpace::unit(d);
    }
    let bounds = (0..d)
        .map(|j| {
            let lo = samples.iter().map(|s| s.x[j]).fold(f64::INFINITY, f64::min);
            let hi = samples.iter().map(|s| s.x[j]).fold(f64::NEG_INFINITY, f64::max);
            if hi > lo {
                (lo, hi)
            } else {
                (lo - 0.5, lo + 0.5)
            }
        })
        .collect();
    DesignSpace::new(bounds)
}

fn csv_io(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::invalid(format!("{other:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fnn::{FnnArchitecture, TrainConfig};

    fn tiny() -> Dataset {
        let space = DesignSpace::unit(2).unwrap();
        let samples = (0..5)
            .map(|i| LabeledSample {
                x: vec![0.1 * i as f64, 1.0 / (i as f64 + 3.0)],
                y: (i as f64).sqrt() * 1e-7 + 123.456,
                source: SampleSource::Oracle,
            })
            .collect();
        Dataset::new(space, samples).unwrap()
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        let ds = tiny();
        save_csv(&ds, &p).unwrap();
        let back = load_csv(&p, Some(&ds.space)).unwrap();
        assert_eq!(back.len(), 5);
        for (a, b) in back.samples.iter().zip(&ds.samples) {
            assert_eq!(a.x, b.x);
            assert_eq!(a.y, b.y);
            assert_eq!(a.source, SampleSource::File);
        }
    }

    #[test]
    fn ragged_row_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        std::fs::write(&p, "x0,x1,y\n0.1,0.2,3\n0.5,1\n").unwrap();
        match load_csv(&p, None).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn non_numeric_cell_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        std::fs::write(&p, "x0,y\n0.1,3\nabc,1\n").unwrap();
        let err = load_csv(&p, None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        assert!(err.to_string().contains("abc"));
    }

    #[test]
    fn missing_or_wrong_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("h.csv");
        std::fs::write(&p, "").unwrap();
        assert!(matches!(load_csv(&p, None).unwrap_err(), Error::Parse { line: 1, .. }));
        std::fs::write(&p, "0.1,0.2\n").unwrap();
        assert!(matches!(load_csv(&p, None).unwrap_err(), Error::Parse { line: 1, .. }));
    }

    #[test]
    fn header_only_is_empty_and_unfit_for_training() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("h.csv");
        std::fs::write(&p, "x0,x1,y\n").unwrap();
        let ds = load_csv(&p, None).unwrap();
        assert!(ds.is_empty());
        assert_eq!(ds.dims(), 2);
        let arch = FnnArchitecture::new(2, [32, 32, 32]).unwrap();
        let err = crate::fnn::train(&ds.inputs(), &ds.targets(), &arch, &TrainConfig::default()).unwrap_err();
        assert!(matches!(err, Error::EmptyDataset));
    }
}

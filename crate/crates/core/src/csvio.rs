//! Long-format CSV for gridded functions, bands, datasets and bootstrap draws.
//!
//! A function on a d-dimensional grid is stored one node per row with
//! header `x1,...,xd,value`; rows may come in any order but must cover the
//! full product grid exactly once. Output is row-major (last axis fastest)
//! and numbers use the shortest text that parses back to the same value.

use crate::bands::Band;
use crate::error::{Error, Result};
use crate::estimators::Dataset;
use crate::grid::{Axis, GriddedFunction};
use crate::scalar::Scalar;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

/// Column names carried alongside a function read from CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Header {
    pub axes: Vec<String>,
    pub values: Vec<String>,
}

impl Header {
    pub fn standard(dim: usize, values: &[&str]) -> Self {
        Self {
            axes: (1..=dim).map(|i| format!("x{i}")).collect(),
            values: values.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn record(&self) -> Vec<String> {
        self.axes.iter().chain(&self.values).cloned().collect()
    }
}

fn parse<T: Scalar>(s: &str, line: u64, col: &str) -> Result<T> {
    s.trim()
        .parse::<T>()
        .map_err(|_| Error::Parse(format!("line {line}: column {col}: cannot parse {s:?} as a number")))
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(r)
}

/// Reads a long table whose last `n_values` columns are values and whose
/// leading columns are grid coordinates.
fn read_long<T: Scalar, R: Read>(r: R, n_values: usize) -> Result<(Header, Vec<Axis<T>>, Vec<Vec<T>>)> {
    let mut rdr = reader(r);
    let names: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if names.len() <= n_values {
        return Err(Error::Parse(format!(
            "header needs at least one coordinate column and {n_values} value column(s), found {}",
            names.len()
        )));
    }
    let d = names.len() - n_values;
    let mut coords: Vec<Vec<T>> = Vec::new();
    let mut vals: Vec<Vec<T>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let row = rec
            .iter()
            .zip(&names)
            .map(|(s, n)| parse::<T>(s, line, n))
            .collect::<Result<Vec<_>>>()?;
        coords.push(row[..d].to_vec());
        vals.push(row[d..].to_vec());
    }
    if coords.is_empty() {
        return Err(Error::EmptyInput);
    }

    let mut axes = Vec::with_capacity(d);
    for a in 0..d {
        let mut c: Vec<T> = coords.iter().map(|r| r[a]).collect();
        c.sort_by(|x, y| x.partial_cmp(y).expect("finite coordinates"));
        c.dedup();
        axes.push(Axis::new(c).map_err(|e| Error::Parse(format!("column {}: {e}", names[a])))?);
    }
    let shape: Vec<usize> = axes.iter().map(Axis::len).collect();
    let total: usize = shape.iter().product();
    let mut slots: Vec<Option<Vec<T>>> = vec![None; total];
    for (row, (c, v)) in coords.into_iter().zip(vals).enumerate() {
        let mut flat = 0;
        for (a, x) in c.iter().enumerate() {
            let i = axes[a]
                .coords()
                .binary_search_by(|y| y.partial_cmp(x).expect("finite coordinates"))
                .expect("coordinate comes from this axis");
            flat = flat * shape[a] + i;
        }
        if slots[flat].is_some() {
            return Err(Error::Parse(format!("data row {}: duplicate grid node", row + 1)));
        }
        slots[flat] = Some(v);
    }
    if let Some(missing) = slots.iter().position(Option::is_none) {
        return Err(Error::Parse(format!(
            "grid is not a full product: {} of {total} nodes missing (first at flat index {missing})",
            slots.iter().filter(|s| s.is_none()).count()
        )));
    }
    let mut columns = vec![Vec::with_capacity(total); n_values];
    for s in slots.into_iter().flatten() {
        for (col, v) in columns.iter_mut().zip(s) {
            col.push(v);
        }
    }
    let header = Header {
        axes: names[..d].to_vec(),
        values: names[d..].to_vec(),
    };
    Ok((header, axes, columns))
}

fn write_long<T: Scalar, W: Write>(w: W, header: &Header, fs: &[&GriddedFunction<T>]) -> Result<()> {
    let f0 = fs[0];
    if header.axes.len() != f0.dim() || header.values.len() != fs.len() {
        return Err(Error::ShapeMismatch {
            expected: f0.dim() + fs.len(),
            actual: header.axes.len() + header.values.len(),
        });
    }
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(header.record())?;
    let mut rec = Vec::with_capacity(f0.dim() + fs.len());
    for flat in 0..f0.len() {
        rec.clear();
        for (axis, i) in f0.axes().iter().zip(f0.multi_index(flat)) {
            rec.push(axis.coords()[i].to_string());
        }
        for f in fs {
            rec.push(f.values()[flat].to_string());
        }
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_function<T: Scalar, R: Read>(r: R) -> Result<(GriddedFunction<T>, Header)> {
    let (header, axes, mut cols) = read_long(r, 1)?;
    Ok((GriddedFunction::new(axes, cols.remove(0))?, header))
}

pub fn write_function<T: Scalar, W: Write>(w: W, f: &GriddedFunction<T>, header: &Header) -> Result<()> {
    write_long(w, header, &[f])
}

/// Reads `x1,...,xd,lower,upper`.
pub fn read_band<T: Scalar, R: Read>(r: R) -> Result<(Band<T>, Header)> {
    let (header, axes, mut cols) = read_long(r, 2)?;
    if header.values != ["lower", "upper"] {
        return Err(Error::Parse(format!(
            "band CSV must end with columns lower,upper, found {}",
            header.values.join(",")
        )));
    }
    let upper = GriddedFunction::new(axes.clone(), cols.remove(1))?;
    let lower = GriddedFunction::new(axes, cols.remove(0))?;
    Ok((Band::new(lower, upper)?, header))
}

pub fn write_band<T: Scalar, W: Write>(w: W, band: &Band<T>, axes: &[String]) -> Result<()> {
    let header = Header {
        axes: axes.to_vec(),
        values: vec!["lower".into(), "upper".into()],
    };
    write_long(w, &header, &[band.lower(), band.upper()])
}

/// Two numeric columns with a header; the names are free.
pub fn read_dataset<R: Read>(r: R) -> Result<Dataset> {
    let mut rdr = reader(r);
    let names: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if names.len() != 2 {
        return Err(Error::Parse(format!(
            "dataset CSV needs exactly two columns x,y, found {}",
            names.len()
        )));
    }
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        x.push(parse::<f64>(&rec[0], line, &names[0])?);
        y.push(parse::<f64>(&rec[1], line, &names[1])?);
    }
    Dataset::new(x, y)
}

pub fn write_dataset<W: Write>(w: W, data: &Dataset) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["x", "y"])?;
    for (x, y) in data.x().iter().zip(data.y()) {
        wtr.write_record([x.to_string(), y.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Bootstrap draws as `draw,x1,...,xd,value` with draws numbered from 1.
pub fn write_draws<T: Scalar, W: Write>(w: W, draws: &[GriddedFunction<T>], axes: &[String]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["draw".to_string()];
    header.extend(axes.iter().cloned());
    header.push("value".into());
    wtr.write_record(&header)?;
    for (b, f) in draws.iter().enumerate() {
        for flat in 0..f.len() {
            let mut rec = vec![(b + 1).to_string()];
            for (axis, i) in f.axes().iter().zip(f.multi_index(flat)) {
                rec.push(axis.coords()[i].to_string());
            }
            rec.push(f.values()[flat].to_string());
            wtr.write_record(&rec)?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Reads draws written by [`write_draws`]; every draw must share one grid.
pub fn read_draws<T: Scalar, R: Read>(r: R) -> Result<(Vec<GriddedFunction<T>>, Header)> {
    let (header, axes, mut cols) = read_long::<T, R>(r, 1)?;
    if header.axes.first().map(String::as_str) != Some("draw") || axes.len() < 2 {
        return Err(Error::Parse("draws CSV must start with a draw column".into()));
    }
    let values = cols.remove(0);
    let inner: Vec<Axis<T>> = axes[1..].to_vec();
    let per: usize = inner.iter().map(Axis::len).product();
    let draws = values
        .chunks(per)
        .map(|c| GriddedFunction::new(inner.clone(), c.to_vec()))
        .collect::<Result<Vec<_>>>()?;
    let header = Header {
        axes: header.axes[1..].to_vec(),
        values: header.values,
    };
    Ok((draws, header))
}

pub fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

pub fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

//! Partially observed matrices and tensors, their text formats, and
//! holdout splitting.
//!
//! Indices are 0-based in memory and 1-based in every file format.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sparse `m x n` matrix of observed real values.
///
/// Entries are kept twice, once per row and once per column, each list
/// sorted by the other index. The structure is immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationMatrix {
    m: usize,
    n: usize,
    rows: Vec<Vec<(usize, f64)>>,
    cols: Vec<Vec<(usize, f64)>>,
    len: usize,
}

impl ObservationMatrix {
    pub fn empty(m: usize, n: usize) -> Self {
        ObservationMatrix {
            m,
            n,
            rows: vec![Vec::new(); m],
            cols: vec![Vec::new(); n],
            len: 0,
        }
    }

    /// Builds a matrix from 0-based `(row, col, value)` triples.
    pub fn new<I>(m: usize, n: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
        for (u, i, value) in entries {
            if u >= m || i >= n {
                return Err(Error::Dimension(format!(
                    "entry ({}, {}) outside a {m}x{n} matrix",
                    u + 1,
                    i + 1
                )));
            }
            if !value.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "non-finite value at ({}, {})",
                    u + 1,
                    i + 1
                )));
            }
            rows[u].push((i, value));
        }

        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut len = 0;
        for (u, row) in rows.iter_mut().enumerate() {
            row.sort_by_key(|&(i, _)| i);
            if let Some(w) = row.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(Error::DuplicateEntry {
                    row: u + 1,
                    col: w[0].0 + 1,
                });
            }
            for &(i, value) in row.iter() {
                cols[i].push((u, value));
            }
            len += row.len();
        }

        Ok(ObservationMatrix {
            m,
            n,
            rows,
            cols,
            len,
        })
    }

    pub fn nrows(&self) -> usize {
        self.m
    }

    pub fn ncols(&self) -> usize {
        self.n
    }

    /// Number of observed entries.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Observed `(col, value)` pairs of row `u`, ascending by column.
    pub fn row(&self, u: usize) -> &[(usize, f64)] {
        &self.rows[u]
    }

    /// Observed `(row, value)` pairs of column `i`, ascending by row.
    pub fn col(&self, i: usize) -> &[(usize, f64)] {
        &self.cols[i]
    }

    pub fn get(&self, u: usize, i: usize) -> Option<f64> {
        let row = self.rows.get(u)?;
        row.binary_search_by_key(&i, |&(j, _)| j)
            .ok()
            .map(|pos| row[pos].1)
    }

    pub fn is_observed(&self, u: usize, i: usize) -> bool {
        self.get(u, i).is_some()
    }

    /// All entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(u, row)| row.iter().map(move |&(i, v)| (u, i, v)))
    }

    /// Mean of all observed values, `None` when nothing is observed.
    pub fn mean(&self) -> Option<f64> {
        if self.len == 0 {
            return None;
        }
        let sum: f64 = self.entries().map(|(_, _, v)| v).sum();
        Some(sum / self.len as f64)
    }

    pub fn check_row(&self, u: usize) -> Result<()> {
        if u < self.m {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange(format!(
                "row {u} (0-based) in a matrix with {} rows",
                self.m
            )))
        }
    }

    pub fn check_col(&self, i: usize) -> Result<()> {
        if i < self.n {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange(format!(
                "column {i} (0-based) in a matrix with {} columns",
                self.n
            )))
        }
    }

    /// Swaps rows and columns. An involution.
    pub fn transpose(&self) -> ObservationMatrix {
        ObservationMatrix {
            m: self.n,
            n: self.m,
            rows: self.cols.clone(),
            cols: self.rows.clone(),
            len: self.len,
        }
    }
}

/// Dense row-major real matrix, used for ground truth and estimates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        DenseMatrix {
            nrows,
            ncols,
            data: vec![0.0; nrows * ncols],
        }
    }

    pub fn from_vec(nrows: usize, ncols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != nrows * ncols {
            return Err(Error::Dimension(format!(
                "{} values cannot fill a {nrows}x{ncols} matrix",
                data.len()
            )));
        }
        Ok(DenseMatrix { nrows, ncols, data })
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(nrows * ncols);
        for u in 0..nrows {
            for i in 0..ncols {
                data.push(f(u, i));
            }
        }
        DenseMatrix { nrows, ncols, data }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn get(&self, u: usize, i: usize) -> f64 {
        self.data[u * self.ncols + i]
    }

    pub fn set(&mut self, u: usize, i: usize, value: f64) {
        self.data[u * self.ncols + i] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, u: usize) -> &[f64] {
        &self.data[u * self.ncols..(u + 1) * self.ncols]
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.ncols, self.nrows, |i, u| self.get(u, i))
    }

    /// Observation matrix with every cell observed.
    pub fn to_observations(&self) -> ObservationMatrix {
        let entries = (0..self.nrows)
            .flat_map(|u| (0..self.ncols).map(move |i| (u, i)))
            .map(|(u, i)| (u, i, self.get(u, i)));
        ObservationMatrix::new(self.nrows, self.ncols, entries)
            .expect("dense matrix cells are unique and in range")
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for u in 0..self.nrows {
            let line: Vec<String> = self.row(u).iter().map(|v| format_value(*v)).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    /// Reads a dense-csv file in which every cell must be present.
    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self> {
        let obs = load_observations(reader, MatrixFormat::DenseCsv)?;
        if obs.len() != obs.nrows() * obs.ncols() {
            return Err(Error::Dimension(format!(
                "dense matrix has {} unobserved cells",
                obs.nrows() * obs.ncols() - obs.len()
            )));
        }
        let mut dense = DenseMatrix::zeros(obs.nrows(), obs.ncols());
        for (u, i, v) in obs.entries() {
            dense.set(u, i, v);
        }
        Ok(dense)
    }
}

/// Shortest representation that parses back to the same `f64`.
pub(crate) fn format_value(v: f64) -> String {
    format!("{v}")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixFormat {
    /// Header line `m,n` followed by `u,i,value` lines.
    TripletCsv,
    /// `user::item::rating::timestamp` lines; dimensions are the largest ids.
    MovielensDat,
    /// `m` lines of `n` comma-separated tokens, `NA` marking a missing cell.
    DenseCsv,
}

impl FromStr for MatrixFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "triplet-csv" => Ok(MatrixFormat::TripletCsv),
            "movielens-dat" => Ok(MatrixFormat::MovielensDat),
            "dense-csv" => Ok(MatrixFormat::DenseCsv),
            other => Err(Error::InvalidParameter(format!("unknown format `{other}`"))),
        }
    }
}

fn parse_index(token: &str, line: usize) -> Result<usize> {
    let idx: usize = token.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("expected a positive integer index, found `{}`", token.trim()),
    })?;
    if idx == 0 {
        return Err(Error::Parse {
            line,
            message: "indices are 1-based".to_string(),
        });
    }
    Ok(idx)
}

fn parse_value(token: &str, line: usize) -> Result<f64> {
    let value: f64 = token.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("expected a real value, found `{}`", token.trim()),
    })?;
    if !value.is_finite() {
        return Err(Error::Parse {
            line,
            message: "value is not finite".to_string(),
        });
    }
    Ok(value)
}

fn parse_dims(text: &str, line: usize) -> Result<Vec<usize>> {
    text.split(',')
        .map(|tok| {
            tok.trim().parse::<usize>().map_err(|_| Error::Parse {
                line,
                message: format!("expected a dimension, found `{}`", tok.trim()),
            })
        })
        .collect()
}

/// Reads non-empty lines, keeping 1-based line numbers.
fn numbered_lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String)>> {
    reader
        .lines()
        .enumerate()
        .filter_map(|(idx, line)| match line {
            Ok(text) if text.trim().is_empty() => None,
            Ok(text) => Some(Ok((idx + 1, text.trim().to_string()))),
            Err(e) => Some(Err(Error::Io(e))),
        })
}

/// Parses an observation matrix from `reader`.
pub fn load_observations<R: BufRead>(reader: R, format: MatrixFormat) -> Result<ObservationMatrix> {
    match format {
        MatrixFormat::TripletCsv => load_triplets(reader),
        MatrixFormat::MovielensDat => load_movielens(reader),
        MatrixFormat::DenseCsv => load_dense(reader),
    }
}

/// Inserts a 0-based entry, reporting duplicates against the file line.
fn insert_entry(
    seen: &mut BTreeMap<(usize, usize), f64>,
    u: usize,
    i: usize,
    value: f64,
) -> Result<()> {
    if seen.insert((u, i), value).is_some() {
        return Err(Error::DuplicateEntry {
            row: u + 1,
            col: i + 1,
        });
    }
    Ok(())
}

fn load_triplets<R: BufRead>(reader: R) -> Result<ObservationMatrix> {
    let mut lines = numbered_lines(reader);
    let (header_line, header) = match lines.next() {
        Some(line) => line?,
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "missing `m,n` header".to_string(),
            })
        }
    };
    let dims = parse_dims(&header, header_line)?;
    if dims.len() != 2 {
        return Err(Error::Parse {
            line: header_line,
            message: format!("header must be `m,n`, found {} fields", dims.len()),
        });
    }
    let (m, n) = (dims[0], dims[1]);

    let mut seen = BTreeMap::new();
    for line in lines {
        let (lineno, text) = line?;
        let fields: Vec<&str> = text.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected `u,i,value`, found {} fields", fields.len()),
            });
        }
        let u = parse_index(fields[0], lineno)?;
        let i = parse_index(fields[1], lineno)?;
        let value = parse_value(fields[2], lineno)?;
        if u > m || i > n {
            return Err(Error::Dimension(format!(
                "line {lineno}: entry ({u}, {i}) exceeds declared dimensions {m}x{n}"
            )));
        }
        insert_entry(&mut seen, u - 1, i - 1, value)?;
    }
    ObservationMatrix::new(m, n, seen.into_iter().map(|((u, i), v)| (u, i, v)))
}

fn load_movielens<R: BufRead>(reader: R) -> Result<ObservationMatrix> {
    let mut seen = BTreeMap::new();
    let (mut m, mut n) = (0, 0);
    for line in numbered_lines(reader) {
        let (lineno, text) = line?;
        let fields: Vec<&str> = text.split("::").collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                line: lineno,
                message: format!(
                    "expected `user::item::rating::timestamp`, found {} fields",
                    fields.len()
                ),
            });
        }
        let u = parse_index(fields[0], lineno)?;
        let i = parse_index(fields[1], lineno)?;
        let value = parse_value(fields[2], lineno)?;
        m = m.max(u);
        n = n.max(i);
        insert_entry(&mut seen, u - 1, i - 1, value)?;
    }
    ObservationMatrix::new(m, n, seen.into_iter().map(|((u, i), v)| (u, i, v)))
}

fn load_dense<R: BufRead>(reader: R) -> Result<ObservationMatrix> {
    let mut entries = Vec::new();
    let mut n: Option<usize> = None;
    let mut m = 0;
    for line in numbered_lines(reader) {
        let (lineno, text) = line?;
        let tokens: Vec<&str> = text.split(',').collect();
        match n {
            None => n = Some(tokens.len()),
            Some(width) if width != tokens.len() => {
                return Err(Error::Dimension(format!(
                    "line {lineno}: {} columns, expected {width}",
                    tokens.len()
                )))
            }
            Some(_) => {}
        }
        for (i, tok) in tokens.iter().enumerate() {
            if tok.trim() == "NA" {
                continue;
            }
            entries.push((m, i, parse_value(tok, lineno)?));
        }
        m += 1;
    }
    ObservationMatrix::new(m, n.unwrap_or(0), entries)
}

/// Serializes `obs` so that [`load_observations`] returns the same entries.
///
/// `movielens-dat` carries no header, so trailing empty rows or columns are
/// not preserved by that format; timestamps are written as `0`.
pub fn write_observations<W: Write>(
    obs: &ObservationMatrix,
    mut out: W,
    format: MatrixFormat,
) -> Result<()> {
    match format {
        MatrixFormat::TripletCsv => {
            writeln!(out, "{},{}", obs.nrows(), obs.ncols())?;
            for (u, i, v) in obs.entries() {
                writeln!(out, "{},{},{}", u + 1, i + 1, format_value(v))?;
            }
        }
        MatrixFormat::MovielensDat => {
            for (u, i, v) in obs.entries() {
                writeln!(out, "{}::{}::{}::0", u + 1, i + 1, format_value(v))?;
            }
        }
        MatrixFormat::DenseCsv => {
            for u in 0..obs.nrows() {
                let mut tokens = vec!["NA".to_string(); obs.ncols()];
                for &(i, v) in obs.row(u) {
                    tokens[i] = format_value(v);
                }
                writeln!(out, "{}", tokens.join(","))?;
            }
        }
    }
    Ok(())
}

/// Sparse order-`t` tensor of observed values (`t >= 2`).
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationTensor {
    shape: Vec<usize>,
    entries: Vec<(Vec<usize>, f64)>,
}

impl ObservationTensor {
    /// Builds a tensor from 0-based coordinates. Entries are stored in
    /// lexicographic coordinate order.
    pub fn new(shape: Vec<usize>, entries: Vec<(Vec<usize>, f64)>) -> Result<Self> {
        if shape.len() < 2 {
            return Err(Error::Dimension(format!(
                "tensor order must be at least 2, found {}",
                shape.len()
            )));
        }
        if shape.contains(&0) {
            return Err(Error::Dimension("tensor dimensions must be positive".into()));
        }
        let mut seen = BTreeMap::new();
        for (coords, value) in entries {
            if coords.len() != shape.len() || coords.iter().zip(&shape).any(|(&c, &d)| c >= d) {
                let one_based: Vec<usize> = coords.iter().map(|c| c + 1).collect();
                return Err(Error::Dimension(format!(
                    "coordinate {one_based:?} outside shape {shape:?}"
                )));
            }
            if !value.is_finite() {
                return Err(Error::InvalidParameter("non-finite tensor value".into()));
            }
            if seen.contains_key(&coords) {
                return Err(Error::Dimension(format!(
                    "duplicate tensor coordinate {:?}",
                    coords.iter().map(|c| c + 1).collect::<Vec<_>>()
                )));
            }
            seen.insert(coords, value);
        }
        Ok(ObservationTensor {
            shape,
            entries: seen.into_iter().collect(),
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(Vec<usize>, f64)] {
        &self.entries
    }

    pub fn num_cells(&self) -> usize {
        self.shape.iter().product()
    }
}

/// Reads the tensor coordinate format: a `n_1,...,n_t` header, then
/// `a_1,...,a_t,value` lines with 1-based coordinates.
pub fn load_tensor<R: BufRead>(reader: R) -> Result<ObservationTensor> {
    let mut lines = numbered_lines(reader);
    let (header_line, header) = match lines.next() {
        Some(line) => line?,
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "missing shape header".to_string(),
            })
        }
    };
    let shape = parse_dims(&header, header_line)?;
    if shape.len() < 2 {
        return Err(Error::Dimension(format!(
            "tensor order must be at least 2, found {}",
            shape.len()
        )));
    }
    let t = shape.len();
    let mut entries = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for line in lines {
        let (lineno, text) = line?;
        let fields: Vec<&str> = text.split(',').collect();
        if fields.len() != t + 1 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected {} coordinates and a value", t),
            });
        }
        let mut coords = Vec::with_capacity(t);
        for (q, tok) in fields[..t].iter().enumerate() {
            let c = parse_index(tok, lineno)?;
            if c > shape[q] {
                return Err(Error::Dimension(format!(
                    "line {lineno}: coordinate {c} exceeds dimension {} of mode {}",
                    shape[q],
                    q + 1
                )));
            }
            coords.push(c - 1);
        }
        let value = parse_value(fields[t], lineno)?;
        if !seen.insert(coords.clone()) {
            return Err(Error::Parse {
                line: lineno,
                message: "duplicate coordinate".to_string(),
            });
        }
        entries.push((coords, value));
    }
    ObservationTensor::new(shape, entries)
}

pub fn write_tensor<W: Write>(tensor: &ObservationTensor, mut out: W) -> Result<()> {
    let header: Vec<String> = tensor.shape().iter().map(|d| d.to_string()).collect();
    writeln!(out, "{}", header.join(","))?;
    for (coords, value) in tensor.entries() {
        let mut fields: Vec<String> = coords.iter().map(|c| (c + 1).to_string()).collect();
        fields.push(format_value(*value));
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

/// Train/test partition of an observation matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct HoldoutSplit {
    pub train: ObservationMatrix,
    pub test: ObservationMatrix,
    pub seed: u64,
}

/// Withholds `floor(fraction * |entries|)` entries chosen uniformly without
/// replacement.
///
/// Sampling uses `ChaCha8Rng::seed_from_u64(seed)` over the entries in
/// row-major order, so a split is reproducible on every platform.
pub fn split_holdout(obs: &ObservationMatrix, fraction: f64, seed: u64) -> Result<HoldoutSplit> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidParameter(format!(
            "holdout fraction {fraction} outside [0, 1]"
        )));
    }
    let total = obs.len();
    let n_test = ((fraction * total as f64).floor() as usize).min(total);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_test = vec![false; total];
    for idx in rand::seq::index::sample(&mut rng, total, n_test) {
        in_test[idx] = true;
    }

    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (idx, entry) in obs.entries().enumerate() {
        if in_test[idx] {
            test.push(entry);
        } else {
            train.push(entry);
        }
    }
    Ok(HoldoutSplit {
        train: ObservationMatrix::new(obs.nrows(), obs.ncols(), train)?,
        test: ObservationMatrix::new(obs.nrows(), obs.ncols(), test)?,
        seed,
    })
}
